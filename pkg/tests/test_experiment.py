import csv

import numpy as np
import pytest

from sap_rts.harness import experiment as X
from sap_rts.harness.match import MatchConfig, run_match
from sap_rts.harness.agents import FixedStrategyAgent, PassiveAgent
from sap_rts.harness.reports import emit_reports, write_metric_series
from sap_rts.harness.specs import AgentSpec, AgentSpecError, build_agent
from sap_rts.sen import init_params
from sap_rts.strategy import Strategy

RUSH = Strategy("low", "none", "worker", True, "closest", "none")
TURTLE = Strategy("high", "late", "heavy", False, "buildings", "full")


def test_two_agent_experiment():
    rep = X.run_experiment({"rush": AgentSpec("fixed", RUSH), "vanilla": AgentSpec("vanilla")}, episodes=10)
    fwd, back = rep.cells[("rush", "vanilla")], rep.cells[("vanilla", "rush")]
    assert fwd.n == back.n == 10
    assert sum(fwd.rates()) == pytest.approx(1.0)
    assert (fwd.wins, fwd.draws, fwd.losses) == (back.losses, back.draws, back.wins)
    m = rep.matrix()
    assert np.isnan(m[0, 0]) and 0 <= m[0, 1] <= 1 and m[0, 1] + m[1, 0] == pytest.approx(1.0)
    assert len(rep.results) == 10
    with pytest.raises(ValueError):
        X.run_experiment({"a": AgentSpec("vanilla")})


def test_bootstrap_gap():
    a, b = np.ones(50), np.zeros(50)
    d, lo, hi = X.bootstrap_gap(a, b)
    assert d == lo == hi == 1.0
    rng = np.random.default_rng(0)
    d, lo, hi = X.bootstrap_gap(rng.random(100), rng.random(100), seed=1)
    assert lo <= d <= hi


def test_pool_ablation_and_baseline(sen_file):
    pool = [RUSH, TURTLE]
    ab = X.ablation_study(str(sen_file), pool, episodes=1, variants=("sap", "sap_no_sen"))
    assert set(ab["scores"]) == {"sap", "sap_no_sen"} and all(len(v) == 2 for v in ab["scores"].values())
    assert set(ab["gaps"]) == {"sap - sap_no_sen"}
    fb = X.fixed_baseline_vs_pool(pool, episodes=2)
    assert len(fb) == 4 and ((fb >= 0) & (fb <= 1)).all()


def test_searched_response_bars():
    bars = X.searched_response_bars(init_params(hidden=(8, 8)), [RUSH], episodes=2)
    assert len(bars) == 1 and bars[0].episodes == 2 and 0 <= bars[0].score <= 1


def test_recognition_accuracy_shape():
    tab = X.recognition_accuracy(episodes=2)
    assert set(tab["by_value"]) == {False, True}
    assert all(0 <= v <= 1 for v in tab["overall"].values())


def test_agent_specs(sen_file):
    with pytest.raises(AgentSpecError):
        AgentSpec("sap")
    with pytest.raises(AgentSpecError):
        AgentSpec("sap", sen_path=str(sen_file) + ".missing")
    with pytest.raises(AgentSpecError):
        AgentSpec("bot", bot="alphaStar")
    with pytest.raises(AgentSpecError):
        AgentSpec("fixed")
    spec = AgentSpec.from_dict({"kind": "fixed", "strategy": RUSH.to_text()})
    assert spec.strategy == RUSH and spec.label().startswith("fixed[")
    for kind in ("sap", "sap_epe", "sap_no_tips"):
        assert build_agent(AgentSpec(kind, sen_path=str(sen_file))).sen is not None
    assert build_agent(AgentSpec("sap_no_sen")).mode == "no_sen"
    assert build_agent(AgentSpec("bot", bot="lightRushLike")).name == "lightRushLike"


def _rows(path):
    with open(path) as fh:
        return list(csv.reader(fh))


def test_empty_reports_are_header_only(tmp_path):
    paths = emit_reports(tmp_path)
    assert len(paths) == 6
    for p in paths:
        assert len(_rows(p)) == 1


def test_reports_from_results(tmp_path):
    rep = X.run_experiment({"rush": AgentSpec("fixed", RUSH), "passive": AgentSpec("bot", bot="passive")},
                           episodes=2)
    emit_reports(tmp_path, rep, confusion=[[3, 1], [2, 4]],
                 recognition={"by_value": {True: {"aggression": 1.0}}, "overall": {"aggression": 1.0}})
    win = _rows(tmp_path / "win_matrix.csv")
    assert len(win) == 3 and all(0 <= float(r[-1]) <= 1 for r in win[1:])
    assert _rows(tmp_path / "confusion_matrix.csv")[1] == ["loss_or_draw", "3", "1"]
    assert len(_rows(tmp_path / "action_series.csv")) > 1
    assert len(_rows(tmp_path / "recognition_accuracy.csv")) == 3


def test_single_short_match_gives_single_bucket(tmp_path):
    r = run_match(MatchConfig(seed=0, step_limit=50), FixedStrategyAgent(RUSH), PassiveAgent())
    rows = _rows(write_metric_series(tmp_path / "m.csv", [r]))
    assert len(rows) == 1 + 2  # one bucket, one row per player
