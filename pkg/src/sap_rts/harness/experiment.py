"""Experiments built on the match loop: pairwise tables, pool scores, ablations, recognition."""

from __future__ import annotations

import random
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from ..engine import Player
from ..recognition import RecognitionConfig, extract, recognize
from ..sen import SENParams, best_response
from ..strategy import DIMENSIONS, Strategy, enumerate_space
from .agents import DEFAULT_K, FixedStrategyAgent, PassiveAgent
from .match import MatchConfig, MatchResult, run_match
from .specs import AgentSpec, build_agent
from .tournament import run_battle_pair

ABLATIONS = ("sap", "sap_epe", "sap_no_sen", "sap_no_tips")


def play_series(a: AgentSpec, b: AgentSpec, episodes: int, base_seed: int = 0,
                map_id: str = "basesWorkers8x8", sen: SENParams | None = None,
                ports: dict | None = None) -> list[tuple[float, MatchResult]]:
    """``episodes`` matches with alternating seats; scores are from ``a``'s side.

    Agents persist across the series so per-episode learners (SAP-EPE) carry over.
    ``ports`` (``planner``/``recognizer``) replaces the rule stand-ins.
    """
    ports = ports or {}
    ag_a, ag_b = build_agent(a, sen, **ports), build_agent(b, sen, **ports)
    out = []
    for e in range(episodes):
        cfg = MatchConfig(map_id=map_id, seed=base_seed + e, k=a.k)
        if e % 2 == 0:
            res = run_match(cfg, ag_a, ag_b)
            out.append((res.score(Player.P1), res))
        else:
            res = run_match(cfg, ag_b, ag_a)
            out.append((res.score(Player.P2), res))
    return out


@dataclass
class Cell:
    wins: int = 0
    draws: int = 0
    losses: int = 0

    @property
    def n(self) -> int:
        return self.wins + self.draws + self.losses

    def rates(self) -> tuple[float, float, float]:
        n = max(1, self.n)
        return self.wins / n, self.draws / n, self.losses / n

    def score(self) -> float:
        return (self.wins + 0.5 * self.draws) / max(1, self.n)


@dataclass
class ExperimentReport:
    labels: list[str]
    cells: dict[tuple[str, str], Cell] = field(default_factory=dict)
    results: list[MatchResult] = field(default_factory=list)

    def matrix(self) -> np.ndarray:
        """Win+0.5*draw rate of the row agent against the column agent (nan on the diagonal)."""
        m = np.full((len(self.labels), len(self.labels)), np.nan)
        for (r, c), cell in self.cells.items():
            m[self.labels.index(r), self.labels.index(c)] = cell.score()
        return m


def run_experiment(specs: dict[str, AgentSpec], episodes: int = 10, base_seed: int = 0,
                   map_id: str = "basesWorkers8x8", sen: SENParams | None = None,
                   ports: dict | None = None) -> ExperimentReport:
    """Every unordered pair of agents plays ``episodes`` matches; both directions are filled."""
    if len(specs) < 2:
        raise ValueError("need at least two agents")
    labels = list(specs)
    rep = ExperimentReport(labels)
    for i, la in enumerate(labels):
        for lb in labels[i + 1:]:
            fwd, back = Cell(), Cell()
            for s, res in play_series(specs[la], specs[lb], episodes, base_seed, map_id, sen, ports):
                if s == 1.0:
                    fwd.wins += 1
                    back.losses += 1
                elif s == 0.5:
                    fwd.draws += 1
                    back.draws += 1
                else:
                    fwd.losses += 1
                    back.wins += 1
                rep.results.append(res)
            rep.cells[(la, lb)] = fwd
            rep.cells[(lb, la)] = back
    return rep


def score_vs_pool(spec: AgentSpec, pool: Sequence[Strategy], episodes: int = 2, base_seed: int = 0,
                  map_id: str = "basesWorkers8x8", sen: SENParams | None = None,
                  ports: dict | None = None) -> np.ndarray:
    """Per-match scores of ``spec`` against FixedStrategy opponents drawn from ``pool``."""
    scores = []
    for i, opp in enumerate(pool):
        series = play_series(spec, AgentSpec("fixed", strategy=opp, k=spec.k), episodes,
                             base_seed + 1000 * i, map_id, sen, ports)
        scores.extend(s for s, _ in series)
    return np.array(scores)


def fixed_baseline_vs_pool(pool: Sequence[Strategy], episodes: int = 2, base_seed: int = 0,
                           map_id: str = "basesWorkers8x8", k: int = DEFAULT_K) -> np.ndarray:
    """Same opponents and seeds as :func:`score_vs_pool`, each faced by another random pool member."""
    rng = random.Random(base_seed)
    scores = []
    for i, opp in enumerate(pool):
        me = rng.choice([s for s in pool if s != opp] or [opp])
        rec = run_battle_pair(me, opp, episodes, base_seed + 1000 * i, map_id, k)
        scores.extend([rec.r] * episodes)
    return np.array(scores)


def bootstrap_gap(a: np.ndarray, b: np.ndarray, reps: int = 2000, seed: int = 0,
                  level: float = 0.95) -> tuple[float, float, float]:
    """Mean(a) - mean(b) with a percentile bootstrap interval (independent resampling)."""
    a, b = np.asarray(a, float), np.asarray(b, float)
    rng = np.random.default_rng(seed)
    ia = rng.integers(0, len(a), (reps, len(a)))
    ib = rng.integers(0, len(b), (reps, len(b)))
    diffs = a[ia].mean(axis=1) - b[ib].mean(axis=1)
    tail = (1 - level) / 2 * 100
    lo, hi = np.percentile(diffs, [tail, 100 - tail])
    return float(a.mean() - b.mean()), float(lo), float(hi)


def ablation_study(sen_path: str, pool: Sequence[Strategy], episodes: int = 2, base_seed: int = 0,
                   variants: Sequence[str] = ABLATIONS, map_id: str = "basesWorkers8x8",
                   sen: SENParams | None = None, ports: dict | None = None) -> dict:
    scores = {v: score_vs_pool(AgentSpec(v, sen_path=sen_path), pool, episodes, base_seed, map_id, sen, ports)
              for v in variants}
    gaps = {f"{x} - {y}": bootstrap_gap(scores[x], scores[y], seed=base_seed)
            for x, y in zip(variants, variants[1:])}
    return {"scores": scores, "gaps": gaps}


@dataclass
class Bar:
    opponent: Strategy
    response: Strategy
    predicted: float
    wins: int
    draws: int
    episodes: int

    @property
    def score(self) -> float:
        return (self.wins + 0.5 * self.draws) / self.episodes


def searched_response_bars(sen: SENParams, opponents: Sequence[Strategy], episodes: int = 5,
                           base_seed: int = 0, map_id: str = "basesWorkers8x8") -> list[Bar]:
    bars = []
    for opp in opponents:
        br, v = best_response(sen, opp)
        rec = run_battle_pair(br, opp, episodes, base_seed, map_id)
        bars.append(Bar(opp, br, v, rec.wins, rec.draws, episodes))
    return bars


def recognition_accuracy(episodes: int = 50, base_seed: int = 0, map_id: str = "basesWorkers8x8",
                         observer: Strategy | None = None, cfg: RecognitionConfig = RecognitionConfig(),
                         k: int = DEFAULT_K) -> dict:
    """Per-dimension recognition accuracy of the rule recognizer on full-episode trajectories.

    For each aggression value, ``episodes`` opponents are drawn uniformly from the strategies
    with that value and play P2 against ``observer`` (a passive seat when None).
    Returns ``{"by_value": {value: {dim: acc}}, "overall": {dim: acc}}``.
    """
    space = enumerate_space()
    rng = random.Random(base_seed)
    table: dict[bool, dict[str, int]] = {}
    hits_all = dict.fromkeys(DIMENSIONS, 0)
    for value in (False, True):
        pool = [s for s in space if s.aggression == value]
        hits = dict.fromkeys(DIMENSIONS, 0)
        for e in range(episodes):
            truth = rng.choice(pool)
            me = FixedStrategyAgent(observer, k=k) if observer is not None else PassiveAgent()
            holder = _TrajectoryTap()
            run_match(MatchConfig(map_id=map_id, seed=base_seed + e, k=k), me, holder.wrap(truth, k))
            guess, _ = recognize(extract(holder.traj), Player.P2, cfg)
            for d in DIMENSIONS:
                hit = getattr(guess, d) == getattr(truth, d)
                hits[d] += hit
                hits_all[d] += hit
        table[value] = {d: hits[d] / episodes for d in DIMENSIONS}
    return {"by_value": table, "overall": {d: hits_all[d] / (2 * episodes) for d in DIMENSIONS}}


class _TrajectoryTap:
    """Keeps the trajectory handed to a seat at episode end."""

    traj = None

    def wrap(self, strategy: Strategy, k: int) -> FixedStrategyAgent:
        tap = self
        agent = FixedStrategyAgent(strategy, k=k)
        original = agent.end_episode

        def end_episode(traj):
            tap.traj = traj
            original(traj)

        agent.end_episode = end_episode
        return agent
