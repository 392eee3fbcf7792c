"""Match loop: drives the engine, queries both seats and collects metrics."""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import IO

from ..engine import (
    ActionKind,
    GameState,
    Outcome,
    Player,
    StepEvents,
    fast_forward,
    load_map,
    outcome,
    step,
    ticks_to_next_completion,
)
from ..recognition import Trajectory, record
from .agents import Agent

BUCKET = 100
KINDS = ("move", "harvest", "return", "produce", "attack")


@dataclass
class MatchConfig:
    map_id: str = "basesWorkers8x8"
    seed: int = 0
    step_limit: int | None = None
    k: int = 200
    episodes: int = 1


@dataclass
class PlayerMetrics:
    damage_dealt: int = 0
    damage_taken: int = 0
    resources_harvested: int = 0
    units_produced: int = 0


@dataclass
class MatchResult:
    outcome: Outcome
    final_tick: int
    metrics: tuple[PlayerMetrics, PlayerMetrics]
    action_histogram: dict[int, list[dict[str, int]]]  # bucket -> per player kind counts
    metric_series: dict[int, list[dict[str, int]]]  # bucket -> per player metric deltas
    replans: tuple[list, list] = field(default_factory=lambda: ([], []))
    agents: tuple[str, str] = ("", "")
    seed: int = 0

    def score(self, player: Player) -> float:
        """1 for a win, 0.5 for a draw, 0 for a loss."""
        if self.outcome.status == "draw":
            return 0.5
        return 1.0 if self.outcome.winner == player else 0.0

    def total_actions(self) -> int:
        return sum(sum(p.values()) for b in self.action_histogram.values() for p in b)

    def to_record(self) -> dict:
        return {
            "agents": list(self.agents),
            "seed": self.seed,
            "outcome": str(self.outcome),
            "final_tick": self.final_tick,
            "metrics": [vars(m) for m in self.metrics],
            "action_histogram": {str(k): v for k, v in sorted(self.action_histogram.items())},
            "metric_series": {str(k): v for k, v in sorted(self.metric_series.items())},
            "replans": [[e.to_record() for e in seat] for seat in self.replans],
        }


def _bucket(table: dict, tick: int, keys: tuple[str, ...]) -> list[dict[str, int]]:
    b = tick // BUCKET
    if b not in table:
        table[b] = [dict.fromkeys(keys, 0), dict.fromkeys(keys, 0)]
    return table[b]


def run_match(cfg: MatchConfig, agent1: Agent, agent2: Agent, log: IO[str] | str | Path | None = None,
              state: GameState | None = None) -> MatchResult:
    """Play one episode. ``agent1`` holds P1 (top-left), ``agent2`` holds P2."""
    if state is None:
        state = load_map(cfg.map_id, cfg.seed)
    if cfg.step_limit is not None:
        state.step_limit = cfg.step_limit
    seats = ((Player.P1, agent1), (Player.P2, agent2))
    for p, ag in seats:
        ag.reset(state, p)
    traj = Trajectory()
    metrics = (PlayerMetrics(), PlayerMetrics())
    hist: dict[int, list[dict[str, int]]] = {}
    series: dict[int, list[dict[str, int]]] = {}
    owner_of = {u.id: u.owner for u in state.units.values()}
    can_skip = all(ag.skippable for _, ag in seats)
    intervals = [ag.k for _, ag in seats if ag.k]

    close = False
    if isinstance(log, (str, Path)):
        log = open(log, "w")
        close = True
    try:
        while not outcome(state).terminal:
            assignments = {}
            stable = True
            for _, ag in seats:
                out, st = ag.act(state, traj)
                assignments.update(out)
                stable &= st
            issued = {uid: a for uid, a in assignments.items() if a.kind != ActionKind.NOOP}

            span = 1
            if can_skip and stable and not issued:
                nxt = ticks_to_next_completion(state)
                span = state.step_limit - state.tick
                if nxt is not None:
                    span = min(span, nxt)
                for k in intervals:
                    span = min(span, k - state.tick % k)
                span = max(span, 1)
            before = state
            if span > 1:
                state = fast_forward(state, span - 1)
            ev = StepEvents()
            state = step(state, issued, ev)
            ev.tick = before.tick

            record(traj, before, issued, ev.completed, span)
            _account(before, ev, metrics, hist, series, owner_of)
            for uid, o, _ in ev.spawned:
                owner_of[uid] = o
            if log is not None:
                rec = ev.to_record()
                rec["span"] = span
                log.write(json.dumps(rec) + "\n")
    finally:
        if close:
            log.close()

    for _, ag in seats:
        ag.end_episode(traj)
    replans = tuple(list(getattr(ag, "events", [])) for _, ag in seats)
    return MatchResult(
        outcome=outcome(state), final_tick=state.tick, metrics=metrics,
        action_histogram=hist, metric_series=series, replans=replans,
        agents=(agent1.name, agent2.name), seed=cfg.seed,
    )


def _account(before: GameState, ev: StepEvents, metrics, hist, series, owner_of) -> None:
    mkeys = ("damage_dealt", "resources_harvested", "units_produced")
    for uid, a in ev.issued:
        p = before.units[uid].owner
        _bucket(hist, ev.tick, KINDS)[p][a.kind.name.lower()] += 1
    for attacker_owner, _, lost in ev.damage:
        metrics[attacker_owner].damage_dealt += lost
        metrics[1 - attacker_owner].damage_taken += lost
        _bucket(series, ev.tick, mkeys)[attacker_owner]["damage_dealt"] += lost
    for uid, a, ok in ev.completed:
        if ok and a.kind == ActionKind.RETURN:
            p = owner_of[uid]
            metrics[p].resources_harvested += 1
            _bucket(series, ev.tick, mkeys)[p]["resources_harvested"] += 1
    for _, o, _ in ev.spawned:
        metrics[o].units_produced += 1
        _bucket(series, ev.tick, mkeys)[o]["units_produced"] += 1
