"""Pairwise battles between fixed strategies and the round-robin that feeds the SEN."""

from __future__ import annotations

import json
import logging
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path
from typing import Iterable

from ..engine import Player
from ..sen import ResultDataset, ResultRecord
from ..strategy import Strategy, StrategyLibrary, space_index
from .agents import DEFAULT_K, FixedStrategyAgent
from .match import MatchConfig, run_match

log = logging.getLogger(__name__)


def run_battle_pair(si: Strategy, sj: Strategy, n: int = 5, base_seed: int = 0,
                    map_id: str = "basesWorkers8x8", k: int = DEFAULT_K) -> ResultRecord:
    """Score of ``si`` against ``sj`` over ``n`` episodes, seats alternating, draws worth 0.5.

    Seats follow the space order of the pair, so ``(si, sj)`` and ``(sj, si)``
    replay the same games and ``r_ij + r_ji == 1`` exactly.
    """
    if n < 1:
        raise ValueError("need at least one episode")
    flip = space_index(si) > space_index(sj)
    wins = draws = 0
    for e in range(n):
        cfg = MatchConfig(map_id=map_id, seed=base_seed + e, k=k)
        a, b = FixedStrategyAgent(si, k=k), FixedStrategyAgent(sj, k=k)
        seat = Player.P1 if (e + flip) % 2 == 0 else Player.P2
        res = run_match(cfg, a, b) if seat == Player.P1 else run_match(cfg, b, a)
        s = res.score(seat)
        wins += s == 1.0
        draws += s == 0.5
    return ResultRecord(si, sj, (wins + 0.5 * draws) / n, wins=wins, draws=draws, episodes=n)


def _pair_job(args) -> tuple[int, int, dict]:
    i, j, si, sj, n, base_seed, map_id, k = args
    return i, j, run_battle_pair(si, sj, n, base_seed, map_id, k).to_json()


def _load_partial(path: Path) -> dict[tuple, ResultRecord]:
    done = {}
    if not path.exists():
        return done
    with open(path) as fh:
        for line in fh:
            try:
                rec = ResultRecord.from_json(json.loads(line))
            except (json.JSONDecodeError, KeyError, ValueError):
                continue  # torn last line from an interrupted run
            done[(rec.a, rec.b)] = rec
    return done


def run_round_robin(lib: StrategyLibrary | Iterable[Strategy], n: int = 5, base_seed: int = 0,
                    workers: int = 1, out_path: str | Path | None = None,
                    map_id: str = "basesWorkers8x8", k: int = DEFAULT_K) -> ResultDataset:
    """All ordered pairs (self-pairs included). Resumes from ``out_path`` when it holds partial results."""
    strategies = list(lib)
    if not strategies:
        raise ValueError("empty strategy library")
    done: dict[tuple, ResultRecord] = {}
    fh = None
    if out_path is not None:
        out_path = Path(out_path)
        done = _load_partial(out_path)
        # rewrite only the clean records so a torn line cannot survive
        with open(out_path, "w") as w:
            for rec in done.values():
                w.write(json.dumps(rec.to_json()) + "\n")
        fh = open(out_path, "a")
    jobs = [(i, j, si, sj, n, base_seed, map_id, k)
            for i, si in enumerate(strategies) for j, sj in enumerate(strategies)
            if (si, sj) not in done]
    log.info("round robin: %d pairs, %d cached, %d to run", len(strategies) ** 2, len(done), len(jobs))
    try:
        if workers > 1 and len(jobs) > 1:
            with ProcessPoolExecutor(workers) as pool:
                results = pool.map(_pair_job, jobs, chunksize=max(1, len(jobs) // (workers * 8)))
                _collect(results, done, fh)
        else:
            _collect(map(_pair_job, jobs), done, fh)
    finally:
        if fh is not None:
            fh.close()
    return ResultDataset([done[(si, sj)] for si in strategies for sj in strategies])


def _collect(results, done, fh) -> None:
    for _, _, d in results:
        rec = ResultRecord.from_json(d)
        done[(rec.a, rec.b)] = rec
        if fh is not None:
            fh.write(json.dumps(d) + "\n")
            fh.flush()
