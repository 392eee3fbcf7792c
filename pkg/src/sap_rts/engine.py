"""Deterministic two-player grid-world RTS simulator (MicroRTS flavoured).

Units carry at most one in-progress atomic action. Each call to :func:`step`
advances the clock by one tick: newly assigned actions start, every busy
counter decrements, and actions reaching zero complete simultaneously.

Completion order within a tick:

1. attacks resolve against the positions at the start of the tick;
2. killed units are removed (minerals they carried are recorded as lost);
3. harvests and returns of the survivors apply;
4. moves and spawns claim target cells. A cell must be empty after the
   removals; when several completions claim the same cell one wins uniformly
   at random (seeded) and the others are cancelled (spawns are refunded).
"""

from __future__ import annotations

import random
from dataclasses import dataclass, field, replace
from enum import IntEnum
from typing import Iterable, NamedTuple


class UnitType(IntEnum):
    BASE = 0
    BARRACKS = 1
    WORKER = 2
    LIGHT = 3
    HEAVY = 4
    RANGED = 5
    MINERAL = 6


class Player(IntEnum):
    P1 = 0
    P2 = 1
    NEUTRAL = 2

    @property
    def opponent(self) -> "Player":
        if self is Player.NEUTRAL:
            raise ValueError("neutral has no opponent")
        return Player(1 - self)


class Direction(IntEnum):
    N = 0
    E = 1
    S = 2
    W = 3

    @property
    def opposite(self) -> "Direction":
        return Direction((self + 2) % 4)


DELTAS = ((0, -1), (1, 0), (0, 1), (-1, 0))


class ActionKind(IntEnum):
    NOOP = 0
    MOVE = 1
    HARVEST = 2
    RETURN = 3
    PRODUCE = 4
    ATTACK = 5


class Action(NamedTuple):
    """Atomic per-unit command. Directional kinds use ``direction``; Attack uses ``target``."""

    kind: ActionKind
    direction: int = -1
    unit_type: int = -1
    target: tuple[int, int] | None = None

    def __repr__(self) -> str:
        if self.kind == ActionKind.NOOP:
            return "noop"
        if self.kind == ActionKind.ATTACK:
            return f"attack({self.target[0]},{self.target[1]})"
        d = Direction(self.direction).name
        if self.kind == ActionKind.PRODUCE:
            return f"produce({d},{UnitType(self.unit_type).name.lower()})"
        return f"{self.kind.name.lower()}({d})"


NOOP = Action(ActionKind.NOOP)


def move(d: Direction | int) -> Action:
    return Action(ActionKind.MOVE, int(d))


def harvest(d: Direction | int) -> Action:
    return Action(ActionKind.HARVEST, int(d))


def return_(d: Direction | int) -> Action:
    return Action(ActionKind.RETURN, int(d))


def produce(d: Direction | int, unit_type: UnitType | int) -> Action:
    return Action(ActionKind.PRODUCE, int(d), int(unit_type))


def attack(x: int, y: int) -> Action:
    return Action(ActionKind.ATTACK, target=(x, y))


@dataclass(frozen=True)
class UnitStats:
    hp_max: int
    cost: int
    attack_damage: int = 0
    attack_range: int = 0
    move_time: int = 0
    harvest_time: int = 0
    return_time: int = 0
    attack_time: int = 0
    produce_time: int = 0
    produces: tuple[UnitType, ...] = ()

    @property
    def can_move(self) -> bool:
        return self.move_time > 0

    @property
    def can_attack(self) -> bool:
        return self.attack_damage > 0


DEFAULT_STATS: dict[UnitType, UnitStats] = {
    UnitType.BASE: UnitStats(hp_max=10, cost=10, produce_time=250, produces=(UnitType.WORKER,)),
    UnitType.BARRACKS: UnitStats(
        hp_max=4, cost=5, produce_time=100,
        produces=(UnitType.LIGHT, UnitType.HEAVY, UnitType.RANGED),
    ),
    UnitType.WORKER: UnitStats(
        hp_max=1, cost=1, attack_damage=1, attack_range=1, move_time=10,
        harvest_time=20, return_time=10, attack_time=5, produce_time=50,
        produces=(UnitType.BARRACKS,),
    ),
    UnitType.LIGHT: UnitStats(hp_max=4, cost=2, attack_damage=2, attack_range=1, move_time=8,
                              attack_time=5, produce_time=80),
    UnitType.HEAVY: UnitStats(hp_max=8, cost=3, attack_damage=4, attack_range=1, move_time=10,
                              attack_time=5, produce_time=120),
    UnitType.RANGED: UnitStats(hp_max=1, cost=2, attack_damage=1, attack_range=3, move_time=10,
                               attack_time=5, produce_time=100),
    UnitType.MINERAL: UnitStats(hp_max=1, cost=0),
}

# Live table read by the rules; change it only through apply_stat_overrides/reset_stats.
STATS: dict[UnitType, UnitStats] = dict(DEFAULT_STATS)


def apply_stat_overrides(overrides: dict[str, dict]) -> None:
    """Patch the live stats table, e.g. ``{"worker": {"hp_max": 2}}``. Process-wide."""
    for name, fields in overrides.items():
        try:
            ut = UnitType[name.upper()]
        except KeyError:
            raise ValueError(f"unknown unit type {name!r}") from None
        bad = set(fields) - set(UnitStats.__dataclass_fields__) | {"produces"} & set(fields)
        if bad:
            raise ValueError(f"cannot override {sorted(bad)} for {name}")
        STATS[ut] = replace(STATS[ut], **{k: int(v) for k, v in fields.items()})


def reset_stats() -> None:
    STATS.clear()
    STATS.update(DEFAULT_STATS)

COMBAT_TYPES = (UnitType.WORKER, UnitType.LIGHT, UnitType.HEAVY, UnitType.RANGED)
MOBILE_TYPES = COMBAT_TYPES


class IllegalActionError(ValueError):
    """Raised by :func:`step` when an assignment is not startable."""


@dataclass(slots=True)
class Unit:
    id: int
    owner: Player
    type: UnitType
    x: int
    y: int
    hp: int
    carrying: int = 0
    resources: int = 0  # remaining minerals; patches only
    action: Action | None = None
    remaining: int = 0

    @property
    def pos(self) -> tuple[int, int]:
        return (self.x, self.y)

    @property
    def busy(self) -> bool:
        return self.action is not None

    def copy(self) -> "Unit":
        return Unit(self.id, self.owner, self.type, self.x, self.y, self.hp,
                    self.carrying, self.resources, self.action, self.remaining)


@dataclass
class GameState:
    map_id: str
    width: int
    height: int
    units: dict[int, Unit]
    resources: list[int]
    step_limit: int
    rng_state: int
    tick: int = 0
    next_id: int = 0
    # Cumulative minerals committed to production (net of refunds) and minerals
    # destroyed with workers that died carrying them. Both feed the
    # conservation ledger.
    spent: list[int] = field(default_factory=lambda: [0, 0])
    lost: int = 0
    homes: tuple[tuple[int, int], tuple[int, int]] = ((0, 0), (0, 0))

    def copy(self) -> "GameState":
        return GameState(
            self.map_id, self.width, self.height,
            {uid: u.copy() for uid, u in self.units.items()},
            list(self.resources), self.step_limit, self.rng_state, self.tick,
            self.next_id, list(self.spent), self.lost, self.homes,
        )

    def in_bounds(self, x: int, y: int) -> bool:
        return 0 <= x < self.width and 0 <= y < self.height

    def occupancy(self) -> dict[tuple[int, int], Unit]:
        return {(u.x, u.y): u for u in self.units.values()}

    def units_of(self, player: Player) -> list[Unit]:
        return [u for u in self.units.values() if u.owner == player]

    def mineral_total(self) -> int:
        """Conserved quantity: stocks + carried + patches + spent + lost."""
        total = sum(self.resources) + sum(self.spent) + self.lost
        for u in self.units.values():
            total += u.carrying + u.resources
        return total


@dataclass(frozen=True)
class Outcome:
    status: str  # "ongoing" | "win" | "draw"
    winner: Player | None = None

    @property
    def terminal(self) -> bool:
        return self.status != "ongoing"

    def __str__(self) -> str:
        return f"win({self.winner.name})" if self.status == "win" else self.status


ONGOING = Outcome("ongoing")
DRAW = Outcome("draw")


@dataclass
class StepEvents:
    """What happened during one tick; consumed by match logs and metrics."""

    tick: int = 0
    issued: list[tuple[int, Action]] = field(default_factory=list)
    completed: list[tuple[int, Action, bool]] = field(default_factory=list)
    damage: list[tuple[int, int, int]] = field(default_factory=list)  # (attacker owner, victim id, hp lost)
    killed: list[tuple[int, Player, UnitType]] = field(default_factory=list)
    spawned: list[tuple[int, Player, UnitType]] = field(default_factory=list)

    def to_record(self) -> dict:
        return {
            "tick": self.tick,
            "issued": [[uid, repr(a)] for uid, a in self.issued],
            "completed": [[uid, repr(a), ok] for uid, a, ok in self.completed],
            "damage": [list(d) for d in self.damage],
            "killed": [[uid, int(o), t.name.lower()] for uid, o, t in self.killed],
            "spawned": [[uid, int(o), t.name.lower()] for uid, o, t in self.spawned],
        }


# -- maps -------------------------------------------------------------------

_CHAR_UNITS = {
    "b": (Player.P1, UnitType.BASE), "B": (Player.P2, UnitType.BASE),
    "w": (Player.P1, UnitType.WORKER), "W": (Player.P2, UnitType.WORKER),
    "k": (Player.P1, UnitType.BARRACKS), "K": (Player.P2, UnitType.BARRACKS),
    "l": (Player.P1, UnitType.LIGHT), "L": (Player.P2, UnitType.LIGHT),
    "h": (Player.P1, UnitType.HEAVY), "H": (Player.P2, UnitType.HEAVY),
    "r": (Player.P1, UnitType.RANGED), "R": (Player.P2, UnitType.RANGED),
    "M": (Player.NEUTRAL, UnitType.MINERAL),
}


@dataclass(frozen=True)
class MapDef:
    rows: tuple[str, ...]
    patch_size: int
    step_limit: int
    start_resources: int = 5


MAPS: dict[str, MapDef] = {
    "basesWorkers8x8": MapDef(
        rows=(
            "M.......",
            "Mwb.....",
            "........",
            "........",
            "........",
            "........",
            ".....BWM",
            ".......M",
        ),
        patch_size=25,
        step_limit=2000,
    ),
    "basesWorkers16x16": MapDef(
        rows=(
            "M...............",
            "Mwb.............",
            *("................",) * 12,
            ".............BWM",
            "...............M",
        ),
        patch_size=40,
        step_limit=4000,
    ),
}


def parse_map(
    text: str | Iterable[str],
    *,
    map_id: str = "custom",
    patch_size: int = 25,
    step_limit: int = 2000,
    start_resources: int = 5,
    seed: int = 0,
) -> GameState:
    """Build a state from the one-char-per-cell text format (see README)."""
    rows = [r for r in (text.split() if isinstance(text, str) else text)]
    if not rows:
        raise ValueError("empty map")
    width = len(rows[0])
    if any(len(r) != width for r in rows):
        raise ValueError("ragged map rows")
    units: dict[int, Unit] = {}
    bases: dict[Player, tuple[int, int]] = {}
    nid = 0
    for y, row in enumerate(rows):
        for x, ch in enumerate(row):
            if ch == ".":
                continue
            if ch not in _CHAR_UNITS:
                raise ValueError(f"unknown map character {ch!r} at ({x},{y})")
            owner, utype = _CHAR_UNITS[ch]
            u = Unit(nid, owner, utype, x, y, STATS[utype].hp_max)
            if utype == UnitType.MINERAL:
                u.resources = patch_size
            units[nid] = u
            if utype == UnitType.BASE:
                bases.setdefault(owner, (x, y))
            nid += 1
    height = len(rows)
    homes = (
        bases.get(Player.P1, (0, 0)),
        bases.get(Player.P2, (width - 1, height - 1)),
    )
    return GameState(
        map_id=map_id, width=width, height=height, units=units,
        resources=[start_resources, start_resources], step_limit=step_limit,
        rng_state=seed & 0xFFFFFFFFFFFFFFFF, next_id=nid, homes=homes,
    )


def load_map(map_id: str, seed: int = 0) -> GameState:
    if map_id not in MAPS:
        raise KeyError(f"unknown map {map_id!r}; known: {sorted(MAPS)}")
    m = MAPS[map_id]
    return parse_map(m.rows, map_id=map_id, patch_size=m.patch_size,
                     step_limit=m.step_limit, start_resources=m.start_resources, seed=seed)


def render(state: GameState) -> str:
    """Inverse of :func:`parse_map` for the unit types it knows."""
    inv = {v: k for k, v in _CHAR_UNITS.items()}
    grid = [["."] * state.width for _ in range(state.height)]
    for u in state.units.values():
        grid[u.y][u.x] = inv[(u.owner, u.type)]
    return "\n".join("".join(r) for r in grid)


# -- rules -------------------------------------------------------------------


def in_range(stats: UnitStats, ax: int, ay: int, bx: int, by: int) -> bool:
    dx, dy = ax - bx, ay - by
    return dx * dx + dy * dy <= stats.attack_range * stats.attack_range


def action_duration(unit: Unit, action: Action) -> int:
    st = STATS[unit.type]
    k = action.kind
    if k == ActionKind.MOVE:
        return st.move_time
    if k == ActionKind.HARVEST:
        return st.harvest_time
    if k == ActionKind.RETURN:
        return st.return_time
    if k == ActionKind.ATTACK:
        return st.attack_time
    if k == ActionKind.PRODUCE:
        return STATS[UnitType(action.unit_type)].produce_time
    return 0


def _neighbour(state: GameState, unit: Unit, d: int) -> tuple[int, int] | None:
    if not 0 <= d < 4:
        return None
    dx, dy = DELTAS[d]
    x, y = unit.x + dx, unit.y + dy
    return (x, y) if state.in_bounds(x, y) else None


def is_legal(state: GameState, unit: Unit, action: Action,
             occ: dict[tuple[int, int], Unit] | None = None) -> bool:
    """Whether ``action`` may start for the idle ``unit`` in ``state``."""
    if unit.busy or unit.owner == Player.NEUTRAL:
        return False
    k = action.kind
    if k == ActionKind.NOOP:
        return True
    if occ is None:
        occ = state.occupancy()
    st = STATS[unit.type]
    if k == ActionKind.ATTACK:
        if not st.can_attack or action.target is None:
            return False
        other = occ.get(action.target)
        return (other is not None and other.owner == unit.owner.opponent
                and in_range(st, unit.x, unit.y, other.x, other.y))
    cell = _neighbour(state, unit, action.direction)
    if cell is None:
        return False
    other = occ.get(cell)
    if k == ActionKind.MOVE:
        return st.can_move and other is None
    if k == ActionKind.HARVEST:
        return (unit.type == UnitType.WORKER and unit.carrying == 0 and other is not None
                and other.type == UnitType.MINERAL and other.resources > 0)
    if k == ActionKind.RETURN:
        return (unit.type == UnitType.WORKER and unit.carrying > 0 and other is not None
                and other.type == UnitType.BASE and other.owner == unit.owner)
    if k == ActionKind.PRODUCE:
        if action.unit_type not in st.produces or other is not None:
            return False
        return state.resources[unit.owner] >= STATS[UnitType(action.unit_type)].cost
    return False


def legal_actions(state: GameState, unit_id: int) -> set[Action]:
    unit = state.units.get(unit_id)
    if unit is None:
        raise KeyError(f"unknown unit {unit_id}")
    if unit.busy:
        raise ValueError(f"unit {unit_id} is busy")
    if unit.owner == Player.NEUTRAL:
        return set()
    occ = state.occupancy()
    st = STATS[unit.type]
    candidates = [NOOP]
    for d in Direction:
        candidates += [move(d), harvest(d), return_(d)]
        candidates += [produce(d, t) for t in st.produces]
    if st.can_attack:
        r = st.attack_range
        for dy in range(-r, r + 1):
            for dx in range(-r, r + 1):
                if dx or dy:
                    candidates.append(attack(unit.x + dx, unit.y + dy))
    return {a for a in candidates if is_legal(state, unit, a, occ)}


def _draw(rng_state: int, n: int) -> tuple[int, int]:
    r = random.Random(rng_state)
    return r.randrange(n), r.getrandbits(64)


def step(state: GameState, assignments: dict[int, Action],
         events: StepEvents | None = None) -> GameState:
    """Advance one tick. Illegal assignments raise and leave ``state`` untouched."""
    occ = state.occupancy()
    committed = [0, 0]
    for uid, act in assignments.items():
        unit = state.units.get(uid)
        if unit is None or not is_legal(state, unit, act, occ):
            raise IllegalActionError(f"illegal assignment {uid}: {act!r} at tick {state.tick}")
        if act.kind == ActionKind.PRODUCE:
            committed[unit.owner] += STATS[UnitType(act.unit_type)].cost
    for p in (0, 1):
        if committed[p] > state.resources[p]:
            raise IllegalActionError(f"player {p} cannot afford combined production at tick {state.tick}")

    s = state.copy()
    s.tick += 1
    if events is not None:
        events.tick = state.tick
    for uid in sorted(assignments):
        act = assignments[uid]
        if act.kind == ActionKind.NOOP:
            continue
        u = s.units[uid]
        u.action = act
        u.remaining = action_duration(u, act)
        if act.kind == ActionKind.PRODUCE:
            cost = STATS[UnitType(act.unit_type)].cost
            s.resources[u.owner] -= cost
            s.spent[u.owner] += cost
        if events is not None:
            events.issued.append((uid, act))

    done: list[Unit] = []
    for uid in sorted(s.units):
        u = s.units[uid]
        if u.action is not None:
            u.remaining -= 1
            if u.remaining <= 0:
                done.append(u)
    if not done:
        return s

    start_occ = {(u.x, u.y): u for u in s.units.values()}

    # 1. attacks against start-of-tick positions
    incoming: dict[int, int] = {}
    for u in done:
        if u.action.kind == ActionKind.ATTACK:
            victim = start_occ.get(u.action.target)
            hit = victim is not None and victim.owner == u.owner.opponent
            if hit:
                incoming[victim.id] = incoming.get(victim.id, 0) + STATS[u.type].attack_damage
            if events is not None:
                events.completed.append((u.id, u.action, hit))
    for vid in sorted(incoming):
        victim = s.units[vid]
        lost_hp = min(victim.hp, incoming[vid])
        victim.hp -= incoming[vid]
        if events is not None:
            events.damage.append((int(victim.owner.opponent), vid, lost_hp))
        if victim.hp <= 0:
            s.lost += victim.carrying
            del s.units[vid]
            if events is not None:
                events.killed.append((vid, victim.owner, victim.type))

    # 2. resource transfers of survivors
    survivors = [u for u in done if u.id in s.units and u.action.kind != ActionKind.ATTACK]
    occ_after = {(u.x, u.y): u for u in s.units.values()}
    harvesters: dict[int, list[Unit]] = {}
    claims: dict[tuple[int, int], list[Unit]] = {}
    for u in survivors:
        k = u.action.kind
        dx, dy = DELTAS[u.action.direction]
        cell = (u.x + dx, u.y + dy)
        if k == ActionKind.HARVEST:
            patch = occ_after.get(cell)
            if patch is not None and patch.type == UnitType.MINERAL:
                harvesters.setdefault(patch.id, []).append(u)
            elif events is not None:
                events.completed.append((u.id, u.action, False))
        elif k == ActionKind.RETURN:
            base = occ_after.get(cell)
            ok = base is not None and base.type == UnitType.BASE and base.owner == u.owner
            if ok:
                s.resources[u.owner] += u.carrying
                u.carrying = 0
            if events is not None:
                events.completed.append((u.id, u.action, ok))
        elif k in (ActionKind.MOVE, ActionKind.PRODUCE):
            if cell in occ_after:
                _fail_claim(s, u, events)
            else:
                claims.setdefault(cell, []).append(u)
    for pid in sorted(harvesters, key=lambda p: harvesters[p][0].id):
        patch = s.units[pid]
        group = harvesters[pid]
        winners = group
        if len(group) > patch.resources:
            pool = list(group)
            winners = []
            while len(winners) < patch.resources:
                i, s.rng_state = _draw(s.rng_state, len(pool))
                winners.append(pool.pop(i))
        for u in group:
            ok = u in winners
            if ok:
                u.carrying = 1
                patch.resources -= 1
            if events is not None:
                events.completed.append((u.id, u.action, ok))
        if patch.resources <= 0:
            del s.units[pid]

    # 3. cell claims (moves and spawns)
    for cell in sorted(claims, key=lambda c: claims[c][0].id):
        group = claims[cell]
        win = 0
        if len(group) > 1:
            win, s.rng_state = _draw(s.rng_state, len(group))
        for i, u in enumerate(group):
            if i != win:
                _fail_claim(s, u, events)
                continue
            if u.action.kind == ActionKind.MOVE:
                u.x, u.y = cell
            else:
                utype = UnitType(u.action.unit_type)
                nid = s.next_id
                s.next_id += 1
                s.units[nid] = Unit(nid, u.owner, utype, cell[0], cell[1], STATS[utype].hp_max)
                if events is not None:
                    events.spawned.append((nid, u.owner, utype))
            if events is not None:
                events.completed.append((u.id, u.action, True))

    for u in done:
        u.action = None
        u.remaining = 0
    return s


def _fail_claim(s: GameState, u: Unit, events: StepEvents | None) -> None:
    if u.action.kind == ActionKind.PRODUCE:
        cost = STATS[UnitType(u.action.unit_type)].cost
        s.resources[u.owner] += cost
        s.spent[u.owner] -= cost
    if events is not None:
        events.completed.append((u.id, u.action, False))


def ticks_to_next_completion(state: GameState) -> int | None:
    rem = [u.remaining for u in state.units.values() if u.action is not None]
    return min(rem) if rem else None


def fast_forward(state: GameState, n: int) -> GameState:
    """Equivalent to ``n`` all-Noop steps, valid while no action completes."""
    if n <= 0:
        return state
    nxt = ticks_to_next_completion(state)
    if nxt is not None and n >= nxt:
        raise ValueError(f"cannot skip {n} ticks; an action completes in {nxt}")
    s = state.copy()
    s.tick += n
    for u in s.units.values():
        if u.action is not None:
            u.remaining -= n
    return s


def outcome(state: GameState) -> Outcome:
    alive = [False, False]
    for u in state.units.values():
        if u.owner != Player.NEUTRAL:
            alive[u.owner] = True
    if alive[0] and not alive[1]:
        return Outcome("win", Player.P1)
    if alive[1] and not alive[0]:
        return Outcome("win", Player.P2)
    if not alive[0] and not alive[1]:
        return DRAW
    if state.tick >= state.step_limit:
        return DRAW
    return ONGOING


# -- symmetry ------------------------------------------------------------------


def rotate_action(action: Action, width: int, height: int) -> Action:
    if action.kind == ActionKind.NOOP:
        return action
    if action.kind == ActionKind.ATTACK:
        tx, ty = action.target
        return action._replace(target=(width - 1 - tx, height - 1 - ty))
    return action._replace(direction=(action.direction + 2) % 4)


def rotate180(state: GameState) -> GameState:
    w, h = state.width, state.height
    swap = {Player.P1: Player.P2, Player.P2: Player.P1, Player.NEUTRAL: Player.NEUTRAL}
    units = {}
    for uid, u in state.units.items():
        v = u.copy()
        v.x, v.y = w - 1 - u.x, h - 1 - u.y
        v.owner = swap[u.owner]
        if u.action is not None:
            v.action = rotate_action(u.action, w, h)
        units[uid] = v
    (h1x, h1y), (h2x, h2y) = state.homes
    return GameState(
        state.map_id, w, h, units, [state.resources[1], state.resources[0]],
        state.step_limit, state.rng_state, state.tick, state.next_id,
        [state.spent[1], state.spent[0]], state.lost,
        ((w - 1 - h2x, h - 1 - h2y), (w - 1 - h1x, h - 1 - h1y)),
    )
