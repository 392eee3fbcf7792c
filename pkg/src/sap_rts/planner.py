"""Strategy-conditioned planning.

``rule_plan`` is the deterministic reference planner. It first derives a set
of action groups from the strategy (how many workers harvest, which units to
produce, whether and where to build barracks, who attacks, who guards), then
applies the expert tips that match the strategy as count/weight/parameter
adjustments, and finally orders the groups by weight into a :class:`Plan`.

``RemotePlanner`` asks a chat-completion service for the plan text instead
and falls back to ``rule_plan`` on any failure.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from typing import Protocol, Sequence

from .actions import (
    MAX_PLAN_LENGTH,
    AbstractAction,
    AttackEnemy,
    BuildBuilding,
    DeployUnit,
    HarvestMineral,
    Plan,
    PlanSyntaxError,
    ProduceUnit,
    entry_from_text,
    plan_to_text,
    validate_plan,
)
from .engine import STATS, GameState, Player, UnitType, outcome
from .strategy import DIMENSIONS, Strategy, describe_space, parse_strategy

log = logging.getLogger(__name__)

ENV_INFO = """\
Two-player real-time strategy game on a small grid with full observability.
Units: Base (produces Worker), Barracks (built by a Worker; produces Light, Heavy, Ranged),
Worker (harvests minerals, builds, fights weakly), Light (fast melee), Heavy (slow, tough melee),
Ranged (fragile, attacks from 3 cells). Workers carry one mineral from a patch back to a Base.
Costs: Worker 1, Light 2, Heavy 3, Ranged 2, Barracks 5. A player loses when all of its units are
destroyed; the game is a draw when the step limit is reached with both players alive."""

PLAN_FORMAT = """\
Answer with one abstract action per line, nothing else:
HARVEST_MINERAL workers=<n>
BUILD_BUILDING type=barracks x=<col> y=<row>
PRODUCE_UNIT type=<worker|light|heavy|ranged> dir=<N|E|S|W|any>
DEPLOY_UNIT type=<worker|light|heavy|ranged> x=<col> y=<row>
ATTACK_ENEMY unit=<worker|light|heavy|ranged> target=<any|worker|light|heavy|ranged|base|barracks>"""


@dataclass(frozen=True)
class TipEffect:
    action: str  # AbstractAction class name
    kind: str  # "count" | "weight" | "override"
    value: object
    param: str | None = None


@dataclass(frozen=True)
class ExpertTip:
    condition: tuple[str, object]
    directive_text: str
    effect: TipEffect

    def applies_to(self, s: Strategy) -> bool:
        dim, value = self.condition
        return getattr(s, dim) == value


_ACTION_NAMES = {c.__name__ for c in (DeployUnit, HarvestMineral, BuildBuilding, ProduceUnit, AttackEnemy)}


def _tip(dim: str, value, text: str, action: str, kind: str, amount, param: str | None = None) -> ExpertTip:
    assert value in DIMENSIONS[dim] and action in _ACTION_NAMES
    return ExpertTip((dim, value), text, TipEffect(action, kind, amount, param))


DEFAULT_TIPS: tuple[ExpertTip, ...] = (
    _tip("economy", "low", "If Economy is low, keep a single worker on minerals.",
         "HarvestMineral", "override", 1, "worker_count"),
    _tip("economy", "med", "If Economy is med, plan one extra [Produce Unit] worker.",
         "ProduceUnit", "count", 1, "worker"),
    _tip("economy", "high", "If Economy is high, plan more [Produce Unit] workers and keep them harvesting.",
         "ProduceUnit", "count", 2, "worker"),
    _tip("barracks", "none", "If Barracks is none, never plan [Build Building].",
         "BuildBuilding", "count", -1),
    _tip("barracks", "early", "If Barracks is early, put [Build Building] before everything else.",
         "BuildBuilding", "weight", 15),
    _tip("barracks", "late", "If Barracks is late, plan [Build Building] only after the economy runs.",
         "BuildBuilding", "weight", -5),
    _tip("composition", "worker", "If Composition is worker, keep planning [Produce Unit] workers.",
         "ProduceUnit", "count", 3, "worker"),
    *(
        _tip("composition", c, f"If Composition is {c}, plan several [Produce Unit] {c} units from the barracks.",
             "ProduceUnit", "count", 2, "combat")
        for c in ("light", "heavy", "ranged", "mixed")
    ),
    _tip("aggression", True, "If the Aggression Feature is set to True, plan more [Attack Enemy] abstract actions.",
         "AttackEnemy", "count", 3),
    _tip("aggression", False, "If the Aggression Feature is set to False, do not plan [Attack Enemy].",
         "AttackEnemy", "count", -9),
    _tip("attack_target", "closest", "If Attack Target is closest, use [Attack Enemy] with target=any.",
         "AttackEnemy", "override", "any", "target_type"),
    _tip("attack_target", "workers", "If Attack Target is workers, use [Attack Enemy] with target=worker.",
         "AttackEnemy", "override", "worker", "target_type"),
    _tip("attack_target", "buildings", "If Attack Target is buildings, use [Attack Enemy] with a building target.",
         "AttackEnemy", "override", "building", "target_type"),
    _tip("defense", "none", "If Defense is none, do not plan [Deploy Unit].",
         "DeployUnit", "count", -9),
    _tip("defense", "perimeter", "If Defense is perimeter, plan [Deploy Unit] around the base before attacking.",
         "DeployUnit", "weight", 10),
    _tip("defense", "full", "If Defense is full, plan [Deploy Unit] around the base before anything offensive.",
         "DeployUnit", "weight", 10),
)


def matching_tips(s: Strategy, tips: Sequence[ExpertTip]) -> list[ExpertTip]:
    return [t for t in tips if t.applies_to(s)]


# -- rule planner -------------------------------------------------------------------------

_PRIMARY = {
    "worker": UnitType.WORKER, "light": UnitType.LIGHT, "heavy": UnitType.HEAVY,
    "ranged": UnitType.RANGED, "mixed": UnitType.LIGHT,
}
_MIXED_CYCLE = (UnitType.LIGHT, UnitType.HEAVY, UnitType.RANGED)
_HARVESTERS = {"low": 1, "med": 2, "high": 3}
_DEPLOYS = {"none": 0, "perimeter": 2, "full": 4}
_ATTACKER_ORDER = (UnitType.WORKER, UnitType.LIGHT, UnitType.HEAVY, UnitType.RANGED)
LATE_BARRACKS_TICK = 600


@dataclass
class _Group:
    weight: float
    count: int
    params: dict = field(default_factory=dict)


def _base_groups(s: Strategy) -> dict[str, _Group]:
    primary = _PRIMARY[s.composition]
    g = {
        "harvest": _Group(60, 1, {"worker_count": _HARVESTERS[s.economy]}),
        "workers": _Group(40, 1),
        "build": _Group(55 if s.barracks == "early" else 25, 0 if s.barracks == "none" else 1),
        "combat": _Group(30, 1 if s.composition != "worker" else 0),
        "deploy": _Group(15, _DEPLOYS[s.defense], {"unit_type": primary}),
        "attack": _Group(20, 1 if s.aggression else 0, {
            "target_type": {"closest": "any", "workers": "worker", "buildings": "building"}[s.attack_target],
            "primary": primary,
        }),
    }
    return g


def _group_for(effect: TipEffect) -> str:
    if effect.action == "ProduceUnit":
        return "workers" if effect.param == "worker" else "combat"
    return {
        "HarvestMineral": "harvest", "BuildBuilding": "build", "DeployUnit": "deploy",
        "AttackEnemy": "attack",
    }[effect.action]


def apply_tips(groups: dict[str, _Group], tips: Sequence[ExpertTip]) -> None:
    for t in tips:
        e = t.effect
        g = groups[_group_for(e)]
        if e.kind == "count":
            g.count = max(0, g.count + int(e.value))
        elif e.kind == "weight":
            g.weight += float(e.value)
        elif e.kind == "override":
            g.params[e.param] = e.value
        else:
            raise ValueError(f"unknown tip effect kind {e.kind!r}")


def _barracks_site(obs: GameState, player: Player) -> tuple[int, int] | None:
    """Nearest empty cell two steps from the own base that keeps mineral lanes clear."""
    base = next((u for u in sorted(obs.units.values(), key=lambda u: u.id)
                 if u.owner == player and u.type == UnitType.BASE), None)
    if base is None:
        return None
    occ = obs.occupancy()
    ex, ey = obs.homes[player.opponent]
    cands = []
    for dy in range(-3, 4):
        for dx in range(-3, 4):
            x, y = base.x + dx, base.y + dy
            d = abs(dx) + abs(dy)
            if d < 2 or not obs.in_bounds(x, y) or (x, y) in occ:
                continue
            near_mineral = any(
                o.type == UnitType.MINERAL and abs(o.x - x) + abs(o.y - y) <= 2 for o in occ.values()
            )
            if near_mineral:
                continue
            cands.append((d, abs(x - ex) + abs(y - ey), y, x))
    if not cands:
        return None
    d, _, y, x = min(cands)
    return (x, y)


def _ring_cells(obs: GameState, player: Player, n: int) -> list[tuple[int, int]]:
    base = next((u for u in sorted(obs.units.values(), key=lambda u: u.id)
                 if u.owner == player and u.type == UnitType.BASE), None)
    if base is None or n <= 0:
        return []
    occ = obs.occupancy()
    ex, ey = obs.homes[player.opponent]
    cands = []
    for dy in range(-2, 3):
        for dx in range(-2, 3):
            x, y = base.x + dx, base.y + dy
            if abs(dx) + abs(dy) != 2 or not obs.in_bounds(x, y):
                continue
            o = occ.get((x, y))
            if o is not None and (o.owner != player or not STATS[o.type].can_move):
                continue
            cands.append((abs(x - ex) + abs(y - ey), y, x))
    cands.sort()
    return [(x, y) for _, y, x in cands[:n]]


def _attack_target(obs: GameState, player: Player, kind: str) -> UnitType | None:
    if kind == "worker":
        return UnitType.WORKER
    if kind == "building":
        enemy = player.opponent
        has_barracks = any(u.owner == enemy and u.type == UnitType.BARRACKS for u in obs.units.values())
        return UnitType.BARRACKS if has_barracks else UnitType.BASE
    if kind == "any":
        return None
    return UnitType[str(kind).upper()]


def rule_plan(obs: GameState, player: Player, s: Strategy, tips: Sequence[ExpertTip] = (),
              max_length: int = MAX_PLAN_LENGTH) -> Plan:
    player = Player(player)
    groups = _base_groups(s)
    apply_tips(groups, matching_tips(s, tips))

    own = [u for u in obs.units.values() if u.owner == player]
    n_workers = sum(u.type == UnitType.WORKER for u in own)
    has_barracks = any(u.type == UnitType.BARRACKS for u in own)
    building_barracks = any(
        u.action is not None and u.action.unit_type == UnitType.BARRACKS for u in own
    )
    stock = obs.resources[player]
    barracks_cost = STATS[UnitType.BARRACKS].cost

    ranked: list[tuple[float, int, list[AbstractAction]]] = []

    def add(name: str, order: int, entries: list[AbstractAction]) -> None:
        if entries:
            ranked.append((groups[name].weight, order, entries))

    h = groups["harvest"]
    harvesters = int(h.params["worker_count"])
    if h.count > 0:
        add("harvest", 0, [HarvestMineral(harvesters)])

    b = groups["build"]
    if b.count > 0 and not has_barracks and not building_barracks and s.barracks != "none":
        late_ok = stock >= barracks_cost + 3 or obs.tick >= LATE_BARRACKS_TICK
        if s.barracks == "early" or late_ok:
            site = _barracks_site(obs, player)
            if site is not None:
                entry = [BuildBuilding(UnitType.BARRACKS, site)]
                if s.barracks == "late":
                    # once the gate opens the builder must be pulled off the mineral line
                    ranked.append((max(b.weight, h.weight + 1), 1, entry))
                else:
                    add("build", 1, entry)

    deploy = groups["deploy"]
    deploy_type = deploy.params["unit_type"]
    target_workers = harvesters
    a = groups["attack"]
    if s.composition == "worker":
        target_workers += 2 + (4 if a.count > 0 else 0)
    if deploy_type == UnitType.WORKER:
        target_workers += deploy.count
    w = groups["workers"]
    n_new = min(w.count, max(0, target_workers - n_workers))
    add("workers", 2, [ProduceUnit(UnitType.WORKER) for _ in range(n_new)])

    c = groups["combat"]
    if s.composition != "worker" and (has_barracks or building_barracks or b.count > 0):
        if s.composition == "mixed":
            n_combat = sum(u.type in _MIXED_CYCLE for u in own)
            types = [_MIXED_CYCLE[(n_combat + i) % 3] for i in range(c.count)]
        else:
            types = [_PRIMARY[s.composition]] * c.count
        add("combat", 3, [ProduceUnit(t) for t in types])

    cells = _ring_cells(obs, player, deploy.count)
    add("deploy", 4, [DeployUnit(deploy_type, cell) for cell in cells])

    if a.count > 0:
        target = _attack_target(obs, player, a.params["target_type"])
        primary = a.params["primary"]
        attackers = [primary] + [t for t in _ATTACKER_ORDER if t != primary]
        add("attack", 5, [AttackEnemy(t, target) for t in attackers[:a.count]])

    ranked.sort(key=lambda r: (-r[0], r[1]))
    entries: list[AbstractAction] = [e for _, _, es in ranked for e in es]
    return Plan(tuple(entries[:max_length]), obs.tick)


def counter_strategy(s: Strategy) -> Strategy:
    """Rule stand-in for asking the planner to choose a counter: flip aggression and defense."""
    flipped = {"none": "full", "perimeter": "perimeter", "full": "none"}
    return s.replace(aggression=not s.aggression, defense=flipped[s.defense])


# -- prompts -------------------------------------------------------------------------------


class PromptBudgetError(ValueError):
    pass


@dataclass(frozen=True)
class PromptBundle:
    system: str
    strategy: str
    tips: str
    observation: str
    output_format: str

    def sections(self) -> list[tuple[str, str]]:
        out = [("Game rules", self.system), ("Strategy", self.strategy)]
        if self.tips:
            out.append(("Expert tips", self.tips))
        out += [("Observation", self.observation), ("Output format", self.output_format)]
        return out

    def text(self) -> str:
        return "\n\n".join(f"## {title}\n{body}" for title, body in self.sections())

    def __len__(self) -> int:
        return len(self.text())


def render_observation(obs: GameState, player: Player, compact: bool = False) -> str:
    player = Player(player)
    lines = [f"tick {obs.tick}/{obs.step_limit}, map {obs.width}x{obs.height}, you are {player.name}",
             f"minerals: you {obs.resources[player]}, enemy {obs.resources[player.opponent]}"]
    patches = [u for u in obs.units.values() if u.type == UnitType.MINERAL]
    lines.append(f"mineral patches: {len(patches)} holding {sum(u.resources for u in patches)}")
    units = sorted((u for u in obs.units.values() if u.owner != Player.NEUTRAL), key=lambda u: u.id)
    if compact:
        for p in (player, player.opponent):
            counts: dict[str, int] = {}
            for u in units:
                if u.owner == p:
                    counts[u.type.name.lower()] = counts.get(u.type.name.lower(), 0) + 1
            who = "own" if p == player else "enemy"
            lines.append(f"{who} units: " + ", ".join(f"{k} {v}" for k, v in sorted(counts.items())))
        return "\n".join(lines)
    lines.append("id | side | type | x | y | hp | carrying | busy")
    for u in units:
        side = "own" if u.owner == player else "enemy"
        busy = repr(u.action) if u.action is not None else "-"
        lines.append(f"{u.id} | {side} | {u.type.name.lower()} | {u.x} | {u.y} | {u.hp} | {u.carrying} | {busy}")
    return "\n".join(lines)


def assemble_prompt(obs: GameState, player: Player, s: Strategy | None, tips: Sequence[ExpertTip] = (),
                    env_info: str = ENV_INFO, budget: int = 6000) -> PromptBundle:
    if s is None:
        strat = "No strategy given; plan directly from the observation."
    else:
        strat = "Play this strategy:\n" + "\n".join(
            f"- {k}: {str(getattr(s, k)).lower()}" for k in DIMENSIONS)
    tip_text = "\n".join(f"- {t.directive_text}" for t in tips)
    for compact in (False, True):
        bundle = PromptBundle(env_info, strat, tip_text, render_observation(obs, player, compact), PLAN_FORMAT)
        if len(bundle) <= budget:
            return bundle
    raise PromptBudgetError(f"prompt needs {len(bundle)} characters, budget {budget}")


def strategy_prompt(previous: Sequence[Strategy], env_info: str = ENV_INFO) -> str:
    prev = "\n".join(f"- {p.to_text()}" for p in previous) or "- (none yet)"
    return (f"{env_info}\n\nStrategy space:\n{describe_space()}\n\n"
            f"Strategies already proposed:\n{prev}\n\n"
            "Propose one new strategy different from all of the above. Answer on one line as\n"
            "economy=<..> barracks=<..> composition=<..> aggression=<true|false> "
            "attack_target=<..> defense=<..>")


class RemoteStrategySource:
    """Strategy generator backed by a chat-completion service (plugs into ``generate_library``)."""

    provenance = "generated-by-port"

    def __init__(self, client, env_info: str = ENV_INFO):
        self.client = client
        self.env_info = env_info

    def __call__(self, rng, previous: Sequence[Strategy]) -> Strategy:
        return parse_strategy(self.client.complete(self.env_info, strategy_prompt(previous, self.env_info)))


# -- parsing -------------------------------------------------------------------------------


class PlanParseError(ValueError):
    pass


def parse_plan(text: str, state: GameState | None = None, player: Player = Player.P1,
               max_length: int = MAX_PLAN_LENGTH) -> tuple[Plan, list[str]]:
    """Parse plan records; skip bad lines with a warning. Raises if nothing parses."""
    entries: list[AbstractAction] = []
    warnings: list[str] = []
    for n, raw in enumerate((text or "").splitlines(), 1):
        line = raw.split("#", 1)[0].strip().strip("`").lstrip("-*").strip()
        if line[:1].isdigit() and "." in line[:4]:
            line = line.split(".", 1)[1].strip()
        if not line:
            continue
        try:
            entries.append(entry_from_text(line))
        except PlanSyntaxError as exc:
            warnings.append(f"line {n}: {exc}")
    if not entries:
        raise PlanParseError("no parseable plan entries" + (f" ({warnings[0]})" if warnings else ""))
    if len(entries) > max_length:
        warnings.append(f"plan truncated from {len(entries)} to {max_length} entries")
        entries = entries[:max_length]
    plan = Plan(tuple(entries), state.tick if state is not None else 0)
    if state is not None:
        warnings += validate_plan(plan, state, player, max_length)
    for w in warnings:
        log.warning("plan: %s", w)
    return plan, warnings


# -- ports ---------------------------------------------------------------------------------


class PlannerPort(Protocol):
    def __call__(self, obs: GameState, player: Player, s: Strategy | None,
                 tips: Sequence[ExpertTip]) -> Plan: ...


VANILLA_STRATEGY = Strategy("med", "early", "light", True, "closest", "none")


class RulePlanner:
    """Default planner. Without a strategy it plays the generic plan a planner would pick unaided."""

    def __init__(self, default: Strategy = VANILLA_STRATEGY, max_length: int = MAX_PLAN_LENGTH):
        self.default = default
        self.max_length = max_length

    def __call__(self, obs, player, s, tips=()):
        return rule_plan(obs, player, s if s is not None else self.default, tips, self.max_length)

    def counter(self, opponent: Strategy) -> Strategy:
        return counter_strategy(opponent)


class RemotePlanner:
    """Plans through a chat-completion service; never raises, falls back to ``fallback``."""

    def __init__(self, client, fallback: PlannerPort | None = None, env_info: str = ENV_INFO,
                 prompt_budget: int = 6000):
        self.client = client
        self.fallback = fallback or RulePlanner()
        self.env_info = env_info
        self.prompt_budget = prompt_budget
        self.failures = 0

    def __call__(self, obs, player, s, tips=()):
        if outcome(obs).terminal:
            return self.fallback(obs, player, s, tips)
        try:
            bundle = assemble_prompt(obs, player, s, tips, self.env_info, self.prompt_budget)
            reply = self.client.complete(bundle.system, bundle.text())
            plan, _ = parse_plan(reply, obs, player)
            return plan
        except Exception as exc:
            self.failures += 1
            log.warning("remote planner failed (%s); using rule planner", exc)
            return self.fallback(obs, player, s, tips)

    def counter(self, opponent: Strategy) -> Strategy:
        """Ask the service to choose a counter-strategy; falls back to the rule counter."""
        prompt = (f"The opponent plays: {opponent.to_text()}\n\nStrategy space:\n{describe_space()}\n\n"
                  "Choose and play a counter-strategy. Answer on one line as\n"
                  "economy=<..> barracks=<..> composition=<..> aggression=<true|false> "
                  "attack_target=<..> defense=<..>")
        try:
            return parse_strategy(self.client.complete(self.env_info, prompt))
        except Exception as exc:
            self.failures += 1
            log.warning("remote counter-strategy failed (%s); using rule counter", exc)
            return counter_strategy(opponent)


__all__ = [
    "DEFAULT_TIPS", "ENV_INFO", "ExpertTip", "PLAN_FORMAT", "PlanParseError", "PlannerPort",
    "PromptBudgetError", "PromptBundle", "RemotePlanner", "RemoteStrategySource", "RulePlanner", "TipEffect",
    "VANILLA_STRATEGY", "apply_tips", "assemble_prompt", "counter_strategy", "matching_tips",
    "parse_plan", "plan_to_text", "render_observation", "rule_plan", "strategy_prompt",
]
