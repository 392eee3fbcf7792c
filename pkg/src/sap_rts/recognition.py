"""Trajectory recording, heuristic summarisation and opponent recognition.

The summary has a fixed size whatever the match length: counters, a
tick-weighted half-board occupancy split and a short ring of recent attack
positions. Recognition maps it back onto the strategy space with threshold
rules, or with a remote chat-completion model that falls back to the rules.
"""

from __future__ import annotations

import logging
from collections import deque
from dataclasses import asdict, dataclass, field
from typing import Iterable, Sequence

from .engine import MOBILE_TYPES, STATS, Action, ActionKind, GameState, Player, UnitType
from .strategy import NEUTRAL, Strategy, describe_space, parse_strategy

log = logging.getLogger(__name__)

ATTACK_RING = 16
_COMBAT = (UnitType.LIGHT, UnitType.HEAVY, UnitType.RANGED)


def _side(state: GameState, player: int, x: int, y: int) -> float:
    """1 if (x, y) is nearer the own home, 0 if nearer the enemy home, 0.5 on the midline."""
    (ox, oy), (ex, ey) = state.homes[player], state.homes[1 - player]
    d_own = abs(x - ox) + abs(y - oy)
    d_enemy = abs(x - ex) + abs(y - ey)
    if d_own < d_enemy:
        return 1.0
    if d_own > d_enemy:
        return 0.0
    return 0.5


@dataclass
class _PlayerCounters:
    harvest_count: int = 0
    return_count: int = 0
    produce_count: dict[str, int] = field(default_factory=dict)
    attack_count: int = 0
    attack_victims: dict[str, int] = field(default_factory=dict)
    attack_positions: deque = field(default_factory=lambda: deque(maxlen=ATTACK_RING))
    attack_own_half: float = 0.0
    barracks_completed_tick: int | None = None
    first_harvest_tick: int | None = None
    last_harvest_tick: int | None = None
    own_weight: float = 0.0
    total_weight: float = 0.0
    dist_weight: float = 0.0


@dataclass
class Trajectory:
    """Per-tick records of a match plus incrementally maintained summary counters."""

    max_records: int = 4096
    records: deque = field(default_factory=deque)
    last_tick: int = -1
    length: int = 0
    elapsed: int = 0
    counters: tuple[_PlayerCounters, _PlayerCounters] = field(
        default_factory=lambda: (_PlayerCounters(), _PlayerCounters()))

    def __len__(self) -> int:
        return self.length


def record(traj: Trajectory, state: GameState, issued: dict[int, Action],
           completed: Iterable[tuple[int, Action, bool]] = (), span: int = 1) -> Trajectory:
    """Append the tick of ``state`` with the actions issued in it.

    ``completed`` carries the completions of the step that followed (used for
    harvest/return counts); ``span`` is the number of ticks this snapshot
    stands for when the caller fast-forwarded over idle ticks.
    """
    if state.tick <= traj.last_tick:
        raise ValueError(f"tick {state.tick} is not after {traj.last_tick}")
    digest = {"tick": state.tick, "resources": tuple(state.resources), "units": len(state.units)}
    p1 = {uid: repr(a) for uid, a in issued.items() if a.kind != ActionKind.NOOP
          and uid in state.units and state.units[uid].owner == Player.P1}
    p2 = {uid: repr(a) for uid, a in issued.items() if a.kind != ActionKind.NOOP
          and uid in state.units and state.units[uid].owner == Player.P2}
    traj.records.append((digest, p1, p2))
    while len(traj.records) > traj.max_records:
        traj.records.popleft()
    traj.last_tick = state.tick
    traj.length += 1
    traj.elapsed = state.tick + span

    occ = state.occupancy()
    for uid, a in issued.items():
        u = state.units.get(uid)
        if u is None or u.owner == Player.NEUTRAL:
            continue
        c = traj.counters[u.owner]
        if a.kind == ActionKind.PRODUCE:
            name = UnitType(a.unit_type).name.lower()
            c.produce_count[name] = c.produce_count.get(name, 0) + 1
        elif a.kind == ActionKind.ATTACK:
            c.attack_count += 1
            c.attack_positions.append((u.x, u.y))
            c.attack_own_half += _side(state, u.owner, u.x, u.y)
            victim = occ.get(a.target)
            if victim is not None:
                name = victim.type.name.lower()
                c.attack_victims[name] = c.attack_victims.get(name, 0) + 1
    for uid, a, ok in completed:
        if not ok:
            continue
        u = state.units.get(uid)
        if u is None or u.owner == Player.NEUTRAL:
            continue
        if a.kind == ActionKind.HARVEST:
            c = traj.counters[u.owner]
            c.harvest_count += 1
            if c.first_harvest_tick is None:
                c.first_harvest_tick = state.tick
            c.last_harvest_tick = state.tick
        elif a.kind == ActionKind.RETURN:
            traj.counters[u.owner].return_count += 1

    for u in state.units.values():
        if u.owner == Player.NEUTRAL:
            continue
        c = traj.counters[u.owner]
        if u.type == UnitType.BARRACKS and c.barracks_completed_tick is None:
            c.barracks_completed_tick = state.tick
        if u.type in MOBILE_TYPES:
            ex, ey = state.homes[1 - u.owner]
            c.own_weight += span * _side(state, u.owner, u.x, u.y)
            c.total_weight += span
            c.dist_weight += span * (abs(u.x - ex) + abs(u.y - ey))
    return traj


@dataclass(frozen=True)
class PlayerSummary:
    harvest_count: int = 0
    return_count: int = 0
    produce_count: dict[str, int] = field(default_factory=dict)
    attack_count: int = 0
    attack_victims: dict[str, int] = field(default_factory=dict)
    attack_issue_positions: tuple[tuple[int, int], ...] = ()
    attack_own_half_fraction: float = 0.0
    barracks_completed_tick: int | None = None
    harvest_window: int = 0
    occupancy_own_half: float = 0.0
    occupancy_enemy_half: float = 0.0
    mean_army_distance_to_enemy_base: float = 0.0


@dataclass(frozen=True)
class TrajectorySummary:
    elapsed: int
    players: tuple[PlayerSummary, PlayerSummary]

    def to_record(self) -> dict:
        return {"elapsed": self.elapsed, "players": [asdict(p) for p in self.players]}

    def render(self, player: Player) -> str:
        p = self.players[player]
        lines = [f"ticks observed: {self.elapsed}",
                 f"completed harvests: {p.harvest_count} over {p.harvest_window} ticks, returns: {p.return_count}",
                 "units produced: " + (", ".join(f"{k} {v}" for k, v in sorted(p.produce_count.items())) or "none"),
                 f"attacks issued: {p.attack_count}; victims: "
                 + (", ".join(f"{k} {v}" for k, v in sorted(p.attack_victims.items())) or "none"),
                 f"share of attacks issued from own half: {p.attack_own_half_fraction:.2f}",
                 f"barracks completed at tick: {p.barracks_completed_tick if p.barracks_completed_tick is not None else 'never'}",
                 f"time share of mobile units in own half: {p.occupancy_own_half:.2f}, enemy half: {p.occupancy_enemy_half:.2f}",
                 f"mean distance of mobile units to enemy base: {p.mean_army_distance_to_enemy_base:.1f}"]
        return "\n".join(lines)


def extract(traj: Trajectory) -> TrajectorySummary:
    out = []
    for c in traj.counters:
        own = c.own_weight / c.total_weight if c.total_weight else 0.0
        out.append(PlayerSummary(
            harvest_count=c.harvest_count,
            return_count=c.return_count,
            produce_count=dict(sorted(c.produce_count.items())),
            attack_count=c.attack_count,
            attack_victims=dict(sorted(c.attack_victims.items())),
            attack_issue_positions=tuple(c.attack_positions),
            attack_own_half_fraction=c.attack_own_half / c.attack_count if c.attack_count else 0.0,
            barracks_completed_tick=c.barracks_completed_tick,
            harvest_window=(c.last_harvest_tick - c.first_harvest_tick
                            if c.first_harvest_tick is not None else 0),
            occupancy_own_half=own,
            occupancy_enemy_half=1.0 - own if c.total_weight else 0.0,
            mean_army_distance_to_enemy_base=c.dist_weight / c.total_weight if c.total_weight else 0.0,
        ))
    return TrajectorySummary(traj.elapsed if traj.length else 0, (out[0], out[1]))


@dataclass(frozen=True)
class RecognitionConfig:
    economy_cuts: tuple[float, float] = (0.52, 0.78)
    early_barracks_tick: int = 220
    enemy_half_aggression: float = 0.25
    enemy_half_attack_share: float = 0.5
    defense_full: float = 0.9
    defense_perimeter: float = 0.6
    mixed_share: float = 0.25

    @property
    def max_harvest_rate(self) -> float:
        w = STATS[UnitType.WORKER]
        cycle = w.harvest_time + w.return_time + 2 * w.move_time
        return 3.0 / cycle


def _margin(value: float, cuts: Sequence[float], scale: float) -> float:
    if not cuts:
        return 0.0
    d = min(abs(value - c) for c in cuts)
    return max(0.0, min(1.0, d / scale))


def recognize(summary: TrajectorySummary, player: Player = Player.P2,
              cfg: RecognitionConfig = RecognitionConfig()) -> tuple[Strategy, dict[str, float]]:
    """Rule-based estimate of ``player``'s strategy with per-dimension confidences."""
    p = summary.players[player]
    if summary.elapsed == 0 or (p.harvest_count == 0 and p.attack_count == 0 and not p.produce_count
                                and p.barracks_completed_tick is None and p.occupancy_own_half == 0.0):
        return NEUTRAL, {k: 0.0 for k in NEUTRAL.__dataclass_fields__}
    conf: dict[str, float] = {}

    # rate while mining was going on, so that running dry late does not read as a weak economy
    cycle = int(round(1.0 / (cfg.max_harvest_rate / 3)))
    rate = p.harvest_count / max(cycle, p.harvest_window + cycle) / cfg.max_harvest_rate
    lo, hi = cfg.economy_cuts
    economy = "low" if rate < lo else "med" if rate < hi else "high"
    conf["economy"] = _margin(rate, cfg.economy_cuts, lo)

    bt = p.barracks_completed_tick
    if bt is None:
        barracks = "none"
        conf["barracks"] = min(1.0, summary.elapsed / (2 * cfg.early_barracks_tick))
    else:
        barracks = "early" if bt <= cfg.early_barracks_tick else "late"
        conf["barracks"] = _margin(bt, (cfg.early_barracks_tick,), cfg.early_barracks_tick)

    combat = {t: p.produce_count.get(t.name.lower(), 0) for t in _COMBAT}
    n_combat = sum(combat.values())
    if barracks == "none":
        composition = "worker"
        conf["composition"] = conf["barracks"]
    elif n_combat == 0:
        composition = "light"
        conf["composition"] = 0.0
    else:
        shares = {t: v / n_combat for t, v in combat.items()}
        if sum(s >= cfg.mixed_share for s in shares.values()) >= 2:
            composition = "mixed"
        else:
            composition = max(_COMBAT, key=lambda t: (shares[t], -int(t))).name.lower()
        conf["composition"] = max(shares.values())

    # Attacks launched from the far half are the clearest sign; a defender only
    # fights on its own side. Time share catches armies that march but have not struck yet.
    away = 1.0 - p.attack_own_half_fraction if p.attack_count else 0.0
    enemy_half = p.occupancy_enemy_half
    aggression = bool((p.attack_count > 0 and away >= cfg.enemy_half_attack_share)
                      or enemy_half > cfg.enemy_half_aggression)
    if p.attack_count:
        conf["aggression"] = max(_margin(away, (cfg.enemy_half_attack_share,), 0.5),
                                 _margin(enemy_half, (cfg.enemy_half_aggression,), cfg.enemy_half_aggression))
    else:
        conf["aggression"] = min(1.0, summary.elapsed / 1000)

    victims = p.attack_victims
    if not victims:
        attack_target = "closest"
        conf["attack_target"] = 0.0
    else:
        total = sum(victims.values())
        worker = victims.get("worker", 0)
        building = victims.get("base", 0) + victims.get("barracks", 0)
        other = total - worker - building
        best = max((worker, "workers"), (building, "buildings"), (other, "closest"),
                   key=lambda kv: kv[0])
        attack_target = best[1]
        conf["attack_target"] = best[0] / total

    own = p.occupancy_own_half
    defense = "full" if own >= cfg.defense_full else "perimeter" if own >= cfg.defense_perimeter else "none"
    conf["defense"] = _margin(own, (cfg.defense_perimeter, cfg.defense_full), 0.1)

    s = Strategy(economy, barracks, composition, aggression, attack_target, defense)
    return s, {k: float(conf[k]) for k in NEUTRAL.__dataclass_fields__}


def recognition_prompt(summary: TrajectorySummary, player: Player) -> str:
    return (
        "You watch an opponent in a real-time strategy game. Summary of its behaviour so far:\n"
        f"{summary.render(player)}\n\nStrategy space:\n{describe_space()}\n\n"
        "Which strategy is the opponent playing? Answer on one line as\n"
        "economy=<..> barracks=<..> composition=<..> aggression=<true|false> "
        "attack_target=<..> defense=<..>"
    )


def recognize_remote(summary: TrajectorySummary, client, player: Player = Player.P2,
                     cfg: RecognitionConfig = RecognitionConfig()) -> tuple[Strategy, dict[str, float]]:
    """Ask a chat-completion model; any failure falls back to :func:`recognize`."""
    try:
        reply = client.complete("You recognise strategies in RTS games.", recognition_prompt(summary, player))
        s = parse_strategy(reply)
    except Exception as exc:
        log.warning("remote recognition failed (%s); using rule-based recognizer", exc)
        return recognize(summary, player, cfg)
    return s, {k: 1.0 for k in NEUTRAL.__dataclass_fields__}


class RuleRecognizer:
    def __init__(self, cfg: RecognitionConfig = RecognitionConfig()):
        self.cfg = cfg

    def __call__(self, summary: TrajectorySummary, player: Player) -> tuple[Strategy, dict[str, float]]:
        return recognize(summary, player, self.cfg)


class RemoteRecognizer:
    def __init__(self, client, cfg: RecognitionConfig = RecognitionConfig()):
        self.client = client
        self.cfg = cfg

    def __call__(self, summary: TrajectorySummary, player: Player) -> tuple[Strategy, dict[str, float]]:
        return recognize_remote(summary, self.client, player, self.cfg)
