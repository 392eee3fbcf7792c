"""Acceptance criteria, one test each, each printing a single PASS/FAIL line.

The slow part is the 30x30 round robin (a few minutes on one core). Point
SAP_RTS_ACCEPT_DIR at a directory to keep its outputs between runs; the
tournament resumes from whatever it finds there.

Run standalone with ``python tests/test_acceptance.py``.
"""

from __future__ import annotations

import itertools
import json
import os
import random
import sys
import time
from pathlib import Path

import numpy as np
import pytest

from sap_rts import sen as S
from sap_rts.cli import main as cli
from sap_rts.harness.experiment import (
    ablation_study, fixed_baseline_vs_pool, play_series, recognition_accuracy, score_vs_pool,
)
from sap_rts.harness.reports import write_recognition
from sap_rts.harness.specs import AgentSpec
from sap_rts.harness.tournament import run_battle_pair
from sap_rts.sen import ResultDataset, SENParams
from sap_rts.strategy import DIMENSIONS, InvalidStrategyError, Strategy, StrategyLibrary, encode, enumerate_space

sys.path.insert(0, str(Path(__file__).parent))
from helpers import check_episode  # noqa: E402
from test_sen import fd_max_rel_error  # noqa: E402

WORKERS = 8
MAP_ID = "basesWorkers8x8"


@pytest.fixture
def verdict(capsys):
    def emit(tag: str, ok: bool, detail: str) -> None:
        with capsys.disabled():
            print(f"\n[{'PASS' if ok else 'FAIL'}] {tag}: {detail}", flush=True)
        assert ok, f"{tag}: {detail}"
    return emit


@pytest.fixture(scope="module")
def pipeline(tmp_path_factory):
    """gen-strategies, tournament, train-sen and eval-sen through the CLI."""
    keep = os.environ.get("SAP_RTS_ACCEPT_DIR")
    out = Path(keep) if keep else tmp_path_factory.mktemp("accept")
    base = ["--out-dir", str(out), "--seed", "0", "--workers", str(WORKERS)]
    timings = {}
    for cmd in (["gen-strategies"], ["tournament"], ["train-sen"], ["eval-sen", "--episodes", "5"]):
        t0 = time.perf_counter()
        assert cli(base + cmd) == 0, cmd
        timings[cmd[0]] = time.perf_counter() - t0
    return out, timings


@pytest.fixture(scope="module")
def sen_path(pipeline):
    return pipeline[0] / "sen.json"


@pytest.fixture(scope="module")
def pool(pipeline):
    out = pipeline[0]
    return list(StrategyLibrary.load(out / "seen.json")) + list(StrategyLibrary.load(out / "unseen.json"))


# -- C1 ---------------------------------------------------------------------------------------------


def test_c1_library_and_tournament(pipeline, verdict):
    out, timings = pipeline
    lib = StrategyLibrary.load(out / "strategies.json")
    seen = StrategyLibrary.load(out / "seen.json")
    unseen = StrategyLibrary.load(out / "unseen.json")
    ds = ResultDataset.load(out / "dataset.jsonl")
    pairs = {(r.a, r.b) for r in ds.records}
    ok = (len(lib) == len(set(lib)) == 50 and (len(seen), len(unseen)) == (30, 20)
          and set(seen) | set(unseen) == set(lib) and not set(seen) & set(unseen)
          and len(ds) == 900 and pairs == set(itertools.product(seen, seen))
          and all(r.episodes == 5 for r in ds.records)
          and timings["tournament"] < 3600)
    verdict("C1", ok, f"{len(set(lib))} unique, split {len(seen)}/{len(unseen)}, {len(ds)} records "
                      f"(N=5, {MAP_ID}, {WORKERS} workers on {os.cpu_count()} cpu) "
                      f"in {timings['tournament']:.0f}s")


# -- C2 ---------------------------------------------------------------------------------------------


def test_c2_gradient_check(verdict):
    t0 = time.perf_counter()
    errs = [fd_max_rel_error(seed) for seed in range(10)]
    dt = time.perf_counter() - t0
    verdict("C2", max(errs) <= 1e-4 and dt < 10,
            f"max rel error {max(errs):.2e} over {len(errs)} seeds in {dt:.2f}s")


# -- C3 ---------------------------------------------------------------------------------------------


def test_c3_sen_heldout(pipeline, verdict):
    out = pipeline[0]
    metrics = json.loads((out / "sen_eval.json").read_text())["metrics"]
    split = ResultDataset.load(out / "dataset_split.jsonl")
    n_test = len(split.subset("test"))
    emitted = (out / "reports" / "confusion_matrix.csv").read_text().count("\n") == 3
    ok = (metrics["accuracy"] >= 0.75 and metrics["fp_rate"] <= 0.30 and emitted
          and n_test == 180 and metrics["n"] == n_test)
    verdict("C3", ok, f"accuracy {metrics['accuracy']:.3f}, fp rate {metrics['fp_rate']:.3f} on {n_test} "
                      f"held-out records, confusion {metrics['confusion']}")


# -- C4 ---------------------------------------------------------------------------------------------


def _oracle_candidates() -> list[Strategy]:
    out = []
    for combo in itertools.product(*DIMENSIONS.values()):
        try:
            out.append(Strategy(**dict(zip(DIMENSIONS, combo))))
        except InvalidStrategyError:
            pass
    return out


def _oracle_best(p: SENParams, opp: Strategy, cands: list[Strategy]) -> tuple[Strategy, float]:
    best, best_v = None, -np.inf
    tail = encode(opp)
    for s in cands:
        h = np.concatenate([encode(s), tail])
        for w, b in zip(p.weights[:-1], p.biases[:-1]):
            h = np.maximum(h @ w + b, 0.0)
        z = float(h @ p.weights[-1][:, 0] + p.biases[-1][0])
        v = 1.0 / (1.0 + np.exp(-z))
        if v > best_v:  # strict: the first maximizer is kept
            best, best_v = s, v
    return best, best_v


def test_c4_best_response_exhaustive(sen_path, verdict):
    p = SENParams.load(sen_path)
    cands = _oracle_candidates()
    rng = random.Random(4)
    opponents = rng.sample(cands, 20)
    agree = 0
    for opp in opponents:
        got, v = S.best_response(p, opp)
        want, wv = _oracle_best(p, opp, cands)
        agree += got == want and abs(v - wv) < 1e-9
    flat = SENParams([w.copy() for w in p.weights], [b.copy() for b in p.biases])
    flat.weights[-1][:] = 0.0
    tie_first = all(S.best_response(flat, opp)[0] == cands[0] for opp in opponents[:3])
    verdict("C4", agree == 20 and tie_first,
            f"{agree}/20 opponents match the exhaustive maximizer over {len(cands)} strategies, "
            f"all-tie case picks the first: {tie_first}")


# -- C5 ---------------------------------------------------------------------------------------------


def test_c5_searched_response_vs_unseen(pipeline, verdict):
    out = pipeline[0]
    doc = json.loads((out / "sen_eval.json").read_text())["searched_response"]
    bars = doc["bars"]
    csv_rows = (out / "reports" / "searched_response.csv").read_text().strip().count("\n")
    ok = doc["aggregate"] >= 0.60 and len(bars) == 20 and all(b["episodes"] == 5 for b in bars) and csv_rows == 20
    per = " ".join(f"{(b['wins'] + 0.5 * b['draws']) / b['episodes']:.1f}" for b in bars)
    verdict("C5", ok, f"aggregate {doc['aggregate']:.3f} over {len(bars)} unseen x 5 seeds; bars [{per}]")


# -- C6 ---------------------------------------------------------------------------------------------


def test_c6_sap_vs_pool_and_baselines(sen_path, pool, verdict):
    sap = AgentSpec("sap", sen_path=str(sen_path))
    mine = score_vs_pool(sap, pool, episodes=2, base_seed=7)
    base = fixed_baseline_vs_pool(pool, episodes=2, base_seed=7)
    h2h = {v: np.mean([s for s, _ in play_series(sap, AgentSpec(v), 10, base_seed=3)]) for v in ("vanilla", "tips")}
    gap = mine.mean() - base.mean()
    ok = len(mine) >= 100 and gap >= 0.10 and h2h["vanilla"] >= 0.5 and h2h["tips"] >= 0.5
    verdict("C6", ok, f"SAP {mine.mean():.3f} vs fixed {base.mean():.3f} over {len(mine)} matches "
                      f"(gap {gap:+.3f}); head-to-head vs Vanilla {h2h['vanilla']:.2f}, vs TA {h2h['tips']:.2f}")


# -- C7 ---------------------------------------------------------------------------------------------


def test_c7_ablation_order(sen_path, pool, verdict):
    variants = ("sap", "sap_no_sen", "sap_no_tips")
    ab = ablation_study(str(sen_path), pool, episodes=2, base_seed=7, variants=variants)
    means = [ab["scores"][v].mean() for v in variants]
    n = min(len(s) for s in ab["scores"].values())
    gaps = "; ".join(f"{k} {g:+.3f} [{lo:+.3f}, {hi:+.3f}]" for k, (g, lo, hi) in ab["gaps"].items())
    ok = n >= 100 and means[0] >= means[1] >= means[2]
    verdict("C7", ok, " >= ".join(f"{v} {m:.3f}" for v, m in zip(variants, means)) + f" ({n} matches each); {gaps}")


# -- C8 ---------------------------------------------------------------------------------------------


def test_c8_recognition(pipeline, verdict):
    table = recognition_accuracy(50, base_seed=0)
    write_recognition(pipeline[0] / "reports" / "recognition_accuracy.csv", table)
    agg = {v: table["by_value"][v]["aggression"] for v in (False, True)}
    full = "; ".join(f"aggression={str(v).lower()}: " + ", ".join(f"{d} {a:.2f}" for d, a in dims.items())
                     for v, dims in table["by_value"].items())
    verdict("C8", min(agg.values()) >= 0.80, f"aggression recognized {agg[False]:.2f} (false) / "
                                             f"{agg[True]:.2f} (true) over 50 episodes each; {full}")


# -- C9 ---------------------------------------------------------------------------------------------


def test_c9_engine_invariants(verdict):
    t0 = time.perf_counter()
    ticks = sum(check_episode(seed) for seed in range(1000))
    dt = time.perf_counter() - t0
    verdict("C9", dt < 300, f"determinism, occupancy, conservation and rotate180 symmetry held over "
                            f"1000 episodes ({ticks} ticks) in {dt:.1f}s")


# -- C10 --------------------------------------------------------------------------------------------


def test_c10_self_play_balance(verdict):
    rng = random.Random(10)
    picks = rng.sample(enumerate_space(), 5)
    rs = [run_battle_pair(s, s, 50, base_seed=500).r for s in picks]
    verdict("C10", all(0.35 <= r <= 0.65 for r in rs), "r_ii = " + ", ".join(f"{r:.2f}" for r in rs) + " at 50 seeds")


if __name__ == "__main__":
    sys.exit(pytest.main([__file__, "-q"]))
