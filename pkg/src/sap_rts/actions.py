"""Abstract actions and the per-tick executor that grounds them.

A :class:`Plan` is an ordered list of abstract actions; earlier entries get
first pick of idle units and first claim on the mineral stock. The executor
turns the plan into one atomic action per idle unit every tick.

Plan text format, one entry per line (``#`` starts a comment)::

    HARVEST_MINERAL workers=2
    BUILD_BUILDING type=barracks x=3 y=1
    PRODUCE_UNIT type=light dir=S          # dir optional, defaults to any
    DEPLOY_UNIT type=light x=3 y=3
    ATTACK_ENEMY unit=light target=any     # target: a unit type or "any"
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from typing import Union

import numpy as np

from . import _kernels
from .engine import (
    COMBAT_TYPES,
    DELTAS,
    NOOP,
    STATS,
    Action,
    Direction,
    GameState,
    Player,
    Unit,
    UnitType,
    attack,
    harvest,
    in_range,
    move,
    produce,
    return_,
)

log = logging.getLogger(__name__)

MAX_PLAN_LENGTH = 12


@dataclass(frozen=True)
class DeployUnit:
    unit_type: UnitType
    target: tuple[int, int]


@dataclass(frozen=True)
class HarvestMineral:
    worker_count: int


@dataclass(frozen=True)
class BuildBuilding:
    building_type: UnitType
    site: tuple[int, int]


@dataclass(frozen=True)
class ProduceUnit:
    unit_type: UnitType
    direction: Direction | None = None


@dataclass(frozen=True)
class AttackEnemy:
    attacker_type: UnitType
    target_type: UnitType | None = None  # None means any enemy


AbstractAction = Union[DeployUnit, HarvestMineral, BuildBuilding, ProduceUnit, AttackEnemy]


@dataclass(frozen=True)
class Plan:
    entries: tuple[AbstractAction, ...] = ()
    created_tick: int = 0

    def __len__(self) -> int:
        return len(self.entries)

    def count(self, kind: type) -> int:
        return sum(isinstance(e, kind) for e in self.entries)


PENDING, ACTIVE, DONE, FAILED = "pending", "active", "done", "failed"


@dataclass
class ExecutorState:
    status: list[str]
    assigned: dict[int, int] = field(default_factory=dict)  # unit id -> entry index

    @classmethod
    def for_plan(cls, plan: Plan) -> "ExecutorState":
        return cls([PENDING] * len(plan.entries))

    def copy(self) -> "ExecutorState":
        return ExecutorState(list(self.status), dict(self.assigned))

    def units_of(self, index: int) -> list[int]:
        return sorted(uid for uid, i in self.assigned.items() if i == index)


# -- pathfinding ---------------------------------------------------------------


def blocked_grid(state: GameState) -> np.ndarray:
    grid = np.zeros((state.height, state.width), dtype=np.uint8)
    for u in state.units.values():
        grid[u.y, u.x] = 1
    return grid


class _Fields:
    """Per-tick cache of BFS distance fields keyed by their source cells."""

    def __init__(self, state: GameState):
        self.state = state
        self.blocked = blocked_grid(state)
        self._cache: dict[tuple, np.ndarray] = {}

    def field(self, sources: tuple[tuple[int, int], ...]) -> np.ndarray:
        f = self._cache.get(sources)
        if f is None:
            mask = np.zeros_like(self.blocked)
            for x, y in sources:
                mask[y, x] = 1
            f = _kernels.bfs_field(self.blocked, mask)
            self._cache[sources] = f
        return f

    def first_step(self, pos: tuple[int, int], sources: tuple[tuple[int, int], ...]) -> tuple[int, int] | None:
        """(direction, path length) of a shortest path from ``pos`` into any source cell."""
        f = self.field(sources)
        best_d, best = -1, int(_kernels.UNREACHABLE)
        x, y = pos
        w, h = self.state.width, self.state.height
        for d in range(4):
            dx, dy = DELTAS[d]
            nx, ny = x + dx, y + dy
            if 0 <= nx < w and 0 <= ny < h and f[ny, nx] < best:
                best, best_d = int(f[ny, nx]), d
        if best_d < 0:
            return None
        return best_d, best + 1


def pathfind(state: GameState, start: tuple[int, int], goal: tuple[int, int]) -> list[Direction] | None:
    """Shortest 4-connected path; other units block, ``goal`` itself is exempt.

    Ties prefer N, E, S, W at every step. Returns ``None`` when unreachable.
    """
    if start == goal:
        return []
    blocked = blocked_grid(state)
    mask = np.zeros_like(blocked)
    mask[goal[1], goal[0]] = 1
    f = _kernels.bfs_field(blocked, mask)
    unreachable = int(_kernels.UNREACHABLE)
    path: list[Direction] = []
    x, y = start
    while (x, y) != goal:
        best_d, best = -1, unreachable
        for d in range(4):
            dx, dy = DELTAS[d]
            nx, ny = x + dx, y + dy
            if 0 <= nx < state.width and 0 <= ny < state.height and f[ny, nx] < best:
                best, best_d = int(f[ny, nx]), d
        if best_d < 0:
            return None
        path.append(Direction(best_d))
        x, y = x + DELTAS[best_d][0], y + DELTAS[best_d][1]
    return path


# -- executor ------------------------------------------------------------------


def _adjacent_dir(u: Unit, cell: tuple[int, int]) -> int | None:
    for d in range(4):
        dx, dy = DELTAS[d]
        if (u.x + dx, u.y + dy) == cell:
            return d
    return None


class _Tick:
    """Working context for one controller call."""

    def __init__(self, state: GameState, player: Player, exec_: ExecutorState):
        self.state = state
        self.player = player
        self.exec = exec_
        self.occ = state.occupancy()
        self.fields = _Fields(state)
        self.budget = state.resources[player]
        self.out: dict[int, Action] = {}
        self.own = sorted((u for u in state.units.values() if u.owner == player), key=lambda u: u.id)
        self.enemies = sorted((u for u in state.units.values() if u.owner == player.opponent),
                              key=lambda u: u.id)
        # Workers only mine on their own side of the map; crossing over for the
        # enemy's patches would read as aggression and feed the enemy's army.
        (ox, oy), (ex, ey) = state.homes[player], state.homes[player.opponent]
        self.patches = tuple(sorted(
            (u.x, u.y) for u in state.units.values()
            if u.type == UnitType.MINERAL and u.resources > 0
            and abs(u.x - ox) + abs(u.y - oy) < abs(u.x - ex) + abs(u.y - ey)))
        self.bases = tuple(sorted((u.x, u.y) for u in self.own if u.type == UnitType.BASE))

    def home_side(self, x: int, y: int) -> bool:
        """True when (x, y) is at least as close to our home as to the enemy's."""
        (ox, oy), (ex, ey) = self.state.homes[self.player], self.state.homes[self.player.opponent]
        return abs(x - ox) + abs(y - oy) <= abs(x - ex) + abs(y - ey)

    def idle(self, u: Unit) -> bool:
        return not u.busy and u.id not in self.out

    def free(self, u: Unit) -> bool:
        return self.idle(u) and u.id not in self.exec.assigned

    def emit(self, u: Unit, a: Action) -> None:
        self.out[u.id] = a

    def step_toward(self, u: Unit, sources: tuple[tuple[int, int], ...]) -> bool:
        if not sources:
            return False
        st = self.fields.first_step((u.x, u.y), sources)
        if st is None:
            return False
        d, _ = st
        dx, dy = DELTAS[d]
        if (u.x + dx, u.y + dy) in self.occ:
            return False
        self.emit(u, move(d))
        return True

    def path_len(self, u: Unit, sources: tuple[tuple[int, int], ...]) -> int:
        if (u.x, u.y) in sources:
            return 0
        st = self.fields.first_step((u.x, u.y), sources)
        return st[1] if st is not None else int(_kernels.UNREACHABLE)

    def nearest_free(self, utype: UnitType, sources: tuple[tuple[int, int], ...]) -> Unit | None:
        cands = [u for u in self.own if u.type == utype and self.free(u)]
        if not cands:
            return None
        return min(cands, key=lambda u: (self.path_len(u, sources), u.id))

    def enemy_in_range(self, u: Unit, prefer: UnitType | None = None) -> Unit | None:
        st = STATS[u.type]
        hits = [e for e in self.enemies if in_range(st, u.x, u.y, e.x, e.y)]
        if not hits:
            return None
        if prefer is not None:
            pref = [e for e in hits if e.type == prefer]
            if pref:
                return pref[0]
        return hits[0]


def tick_controller(state: GameState, player: Player, plan: Plan,
                    exec_: ExecutorState | None = None) -> tuple[dict[int, Action], ExecutorState]:
    """One tick of plan execution for ``player``: returns assignments for every idle unit."""
    ex = exec_.copy() if exec_ is not None else ExecutorState.for_plan(plan)
    if len(ex.status) != len(plan.entries):
        raise ValueError("executor state does not match plan")
    ex.assigned = {uid: i for uid, i in ex.assigned.items()
                   if uid in state.units and ex.status[i] in (PENDING, ACTIVE)}
    t = _Tick(state, Player(player), ex)

    for i, entry in enumerate(plan.entries):
        if ex.status[i] in (DONE, FAILED):
            continue
        if isinstance(entry, HarvestMineral):
            _run_harvest(t, i, entry)
        elif isinstance(entry, BuildBuilding):
            _run_build(t, i, entry)
        elif isinstance(entry, ProduceUnit):
            _run_produce(t, i, entry)
        elif isinstance(entry, DeployUnit):
            _run_deploy(t, i, entry)
        elif isinstance(entry, AttackEnemy):
            _run_attack(t, i, entry)
        if ex.status[i] in (DONE, FAILED):
            for uid in ex.units_of(i):
                del ex.assigned[uid]

    # unclaimed idle fighters strike back at anything in range, but only on home ground
    for u in t.own:
        if t.free(u) and STATS[u.type].can_attack:
            e = t.enemy_in_range(u)
            if e is not None and (t.home_side(u.x, u.y) or t.home_side(e.x, e.y)):
                t.emit(u, attack(e.x, e.y))
    for u in t.own:
        if t.idle(u):
            t.out[u.id] = NOOP
    return t.out, ex


def _run_harvest(t: _Tick, i: int, e: HarvestMineral) -> None:
    ex = t.exec
    if not t.bases:
        ex.status[i] = FAILED
        return
    mine = [t.state.units[uid] for uid in ex.units_of(i)]
    if not t.patches and not any(u.carrying for u in mine):
        ex.status[i] = DONE
        return
    while len(mine) < e.worker_count:
        w = t.nearest_free(UnitType.WORKER, t.patches or t.bases)
        if w is None:
            break
        ex.assigned[w.id] = i
        mine.append(w)
    if mine:
        ex.status[i] = ACTIVE
    for w in sorted(mine, key=lambda u: u.id):
        if not t.idle(w):
            continue
        if w.carrying:
            for d in range(4):
                dx, dy = DELTAS[d]
                b = t.occ.get((w.x + dx, w.y + dy))
                if b is not None and b.type == UnitType.BASE and b.owner == t.player:
                    t.emit(w, return_(d))
                    break
            else:
                t.step_toward(w, t.bases)
        else:
            for d in range(4):
                dx, dy = DELTAS[d]
                m = t.occ.get((w.x + dx, w.y + dy))
                if m is not None and m.type == UnitType.MINERAL and m.resources > 0:
                    t.emit(w, harvest(d))
                    break
            else:
                t.step_toward(w, t.patches)


def _run_build(t: _Tick, i: int, e: BuildBuilding) -> None:
    ex = t.exec
    st = t.state
    if not st.in_bounds(*e.site) or e.building_type != UnitType.BARRACKS:
        ex.status[i] = FAILED
        return
    occupant = t.occ.get(e.site)
    built = occupant is not None and occupant.owner == t.player and occupant.type == e.building_type
    builders = ex.units_of(i)
    w = st.units[builders[0]] if builders else None
    if ex.status[i] == ACTIVE:
        if built:
            ex.status[i] = DONE
            return
        if w is not None and w.busy:
            return  # construction in progress, already paid
        ex.status[i] = PENDING  # spawn was blocked; try again
    if w is None:
        w = t.nearest_free(UnitType.WORKER, (e.site,))
        if w is None:
            if not any(u.type == UnitType.WORKER for u in t.own):
                ex.status[i] = FAILED
            return
        ex.assigned[w.id] = i
    cost = STATS[e.building_type].cost
    affordable = t.budget >= cost
    t.budget -= cost
    if not t.idle(w):
        return
    if occupant is not None and occupant.id != w.id and not STATS[occupant.type].can_move:
        ex.status[i] = FAILED
        return
    if w.carrying:
        # drop the load first so it is not lost if the builder dies
        for d in range(4):
            dx, dy = DELTAS[d]
            b = t.occ.get((w.x + dx, w.y + dy))
            if b is not None and b.type == UnitType.BASE and b.owner == t.player:
                t.emit(w, return_(d))
                return
    d = _adjacent_dir(w, e.site)
    if d is not None:
        if affordable and occupant is None:
            t.emit(w, produce(d, e.building_type))
            ex.status[i] = ACTIVE
        return
    if (w.x, w.y) == e.site:
        for d in range(4):
            dx, dy = DELTAS[d]
            c = (w.x + dx, w.y + dy)
            if st.in_bounds(*c) and c not in t.occ:
                t.emit(w, move(d))
                return
        return
    t.step_toward(w, (e.site,))


def _producers(t: _Tick, utype: UnitType) -> list[Unit]:
    return [u for u in t.own if utype in STATS[u.type].produces and u.type != UnitType.WORKER]


def _run_produce(t: _Tick, i: int, e: ProduceUnit) -> None:
    ex = t.exec
    producers = _producers(t, e.unit_type)
    if not producers:
        return  # may appear later (barracks under construction)
    cost = STATS[e.unit_type].cost
    affordable = t.budget >= cost
    t.budget -= cost
    if not affordable:
        return
    for p in producers:
        if not t.idle(p):
            continue
        order = [int(e.direction)] if e.direction is not None else []
        order += [d for d in range(4) if d not in order]
        for d in order:
            dx, dy = DELTAS[d]
            c = (p.x + dx, p.y + dy)
            if t.state.in_bounds(*c) and c not in t.occ:
                t.emit(p, produce(d, e.unit_type))
                ex.status[i] = DONE
                return


def _run_deploy(t: _Tick, i: int, e: DeployUnit) -> None:
    ex = t.exec
    st = t.state
    if not st.in_bounds(*e.target):
        ex.status[i] = FAILED
        return
    mine = ex.units_of(i)
    if mine:
        u = st.units[mine[0]]
    else:
        u = t.nearest_free(e.unit_type, (e.target,))
        if u is None:
            return
        ex.assigned[u.id] = i
        ex.status[i] = ACTIVE
    if (u.x, u.y) == e.target:
        ex.status[i] = DONE
        return
    if not t.idle(u):
        return
    occupant = t.occ.get(e.target)
    if occupant is not None and not STATS[occupant.type].can_move:
        ex.status[i] = FAILED
        return
    if STATS[u.type].can_attack:
        foe = t.enemy_in_range(u)
        if foe is not None and (t.home_side(u.x, u.y) or t.home_side(foe.x, foe.y)):
            t.emit(u, attack(foe.x, foe.y))
            return
    t.step_toward(u, (e.target,))


def _run_attack(t: _Tick, i: int, e: AttackEnemy) -> None:
    ex = t.exec
    if not t.enemies:
        ex.status[i] = DONE
        return
    for u in t.own:
        if u.type == e.attacker_type and t.free(u):
            ex.assigned[u.id] = i
    mine = ex.units_of(i)
    if mine:
        ex.status[i] = ACTIVE
    preferred = [x for x in t.enemies if e.target_type is None or x.type == e.target_type]
    pool = preferred or t.enemies
    for uid in mine:
        u = t.state.units[uid]
        if not t.idle(u):
            continue
        foe = t.enemy_in_range(u, e.target_type)
        if foe is not None:
            t.emit(u, attack(foe.x, foe.y))
            continue
        target = min(pool, key=lambda x: (abs(x.x - u.x) + abs(x.y - u.y), x.id))
        t.step_toward(u, ((target.x, target.y),))


# -- validation and text format ---------------------------------------------------------


def validate_plan(plan: Plan, state: GameState, player: Player = Player.P1,
                  max_length: int = MAX_PLAN_LENGTH) -> list[str]:
    issues = []
    if len(plan.entries) > max_length:
        issues.append(f"plan has {len(plan.entries)} entries (cap {max_length})")
    stock = state.resources[player]
    for n, e in enumerate(plan.entries):
        where = f"entry {n} ({type(e).__name__})"
        if isinstance(e, (DeployUnit, BuildBuilding)):
            x, y = e.target if isinstance(e, DeployUnit) else e.site
            if not state.in_bounds(x, y):
                issues.append(f"{where}: position ({x},{y}) out of bounds")
        if isinstance(e, BuildBuilding):
            if e.building_type != UnitType.BARRACKS:
                issues.append(f"{where}: workers cannot build {e.building_type.name.lower()}")
            elif STATS[e.building_type].cost > stock:
                issues.append(f"{where}: cannot afford {e.building_type.name.lower()} "
                              f"(cost {STATS[e.building_type].cost}, stock {stock})")
        if isinstance(e, ProduceUnit):
            if e.unit_type not in (UnitType.WORKER, UnitType.LIGHT, UnitType.HEAVY, UnitType.RANGED):
                issues.append(f"{where}: {e.unit_type.name.lower()} is not producible")
            elif STATS[e.unit_type].cost > stock:
                issues.append(f"{where}: cannot afford {e.unit_type.name.lower()} now")
        if isinstance(e, (DeployUnit, AttackEnemy)):
            utype = e.unit_type if isinstance(e, DeployUnit) else e.attacker_type
            if utype not in COMBAT_TYPES:
                issues.append(f"{where}: {utype.name.lower()} cannot move")
        if isinstance(e, HarvestMineral) and e.worker_count < 1:
            issues.append(f"{where}: worker_count must be >= 1")
    return issues


_NAMES = {
    DeployUnit: "DEPLOY_UNIT",
    HarvestMineral: "HARVEST_MINERAL",
    BuildBuilding: "BUILD_BUILDING",
    ProduceUnit: "PRODUCE_UNIT",
    AttackEnemy: "ATTACK_ENEMY",
}


def _tname(t: UnitType | None) -> str:
    return "any" if t is None else t.name.lower()


def entry_to_text(e: AbstractAction) -> str:
    name = _NAMES[type(e)]
    if isinstance(e, DeployUnit):
        return f"{name} type={_tname(e.unit_type)} x={e.target[0]} y={e.target[1]}"
    if isinstance(e, HarvestMineral):
        return f"{name} workers={e.worker_count}"
    if isinstance(e, BuildBuilding):
        return f"{name} type={_tname(e.building_type)} x={e.site[0]} y={e.site[1]}"
    if isinstance(e, ProduceUnit):
        d = "any" if e.direction is None else e.direction.name
        return f"{name} type={_tname(e.unit_type)} dir={d}"
    return f"{name} unit={_tname(e.attacker_type)} target={_tname(e.target_type)}"


def plan_to_text(plan: Plan) -> str:
    return "\n".join(entry_to_text(e) for e in plan.entries)


class PlanSyntaxError(ValueError):
    pass


def _utype(v: str, allow_any: bool = False) -> UnitType | None:
    v = v.strip().lower()
    if allow_any and v == "any":
        return None
    try:
        return UnitType[v.upper()]
    except KeyError:
        raise PlanSyntaxError(f"unknown unit type {v!r}") from None


def _int(kv: dict[str, str], key: str) -> int:
    if key not in kv:
        raise PlanSyntaxError(f"missing {key}=")
    try:
        return int(kv[key])
    except ValueError:
        raise PlanSyntaxError(f"{key} must be an integer, got {kv[key]!r}") from None


def entry_from_text(line: str) -> AbstractAction:
    parts = line.split()
    if not parts:
        raise PlanSyntaxError("empty entry")
    name = parts[0].upper().strip("[]")
    kv = {}
    for tok in parts[1:]:
        if "=" not in tok:
            raise PlanSyntaxError(f"expected key=value, got {tok!r}")
        k, v = tok.split("=", 1)
        kv[k.lower()] = v
    if name == "DEPLOY_UNIT":
        return DeployUnit(_utype(kv.get("type", "")), (_int(kv, "x"), _int(kv, "y")))
    if name == "HARVEST_MINERAL":
        return HarvestMineral(_int(kv, "workers"))
    if name == "BUILD_BUILDING":
        return BuildBuilding(_utype(kv.get("type", "barracks")), (_int(kv, "x"), _int(kv, "y")))
    if name == "PRODUCE_UNIT":
        d = kv.get("dir", "any").upper()
        if d == "ANY":
            direction = None
        elif d in Direction.__members__:
            direction = Direction[d]
        else:
            raise PlanSyntaxError(f"bad direction {d!r}")
        return ProduceUnit(_utype(kv.get("type", "")), direction)
    if name == "ATTACK_ENEMY":
        return AttackEnemy(_utype(kv.get("unit", "")), _utype(kv.get("target", "any"), allow_any=True))
    raise PlanSyntaxError(f"unknown abstract action {parts[0]!r}")
