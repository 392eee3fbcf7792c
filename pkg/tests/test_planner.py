import random

import pytest

from sap_rts.actions import AttackEnemy, BuildBuilding, DeployUnit, HarvestMineral, ProduceUnit
from sap_rts.engine import Player, UnitType, load_map, rotate180
from sap_rts.planner import (
    DEFAULT_TIPS, PlanParseError, PromptBudgetError, RemotePlanner, RemoteStrategySource, RulePlanner,
    assemble_prompt, counter_strategy, matching_tips, parse_plan, plan_to_text, rule_plan,
)
from sap_rts.strategy import DIMENSIONS, Strategy, enumerate_space, generate_library


class FakeClient:
    def __init__(self, *replies):
        self.replies = list(replies)
        self.prompts = []

    def complete(self, system, user):
        self.prompts.append(user)
        r = self.replies.pop(0)
        if isinstance(r, Exception):
            raise r
        return r


def test_every_tip_is_well_formed():
    for t in DEFAULT_TIPS:
        dim, value = t.condition
        assert value in DIMENSIONS[dim]
        assert t.effect.action in {"DeployUnit", "HarvestMineral", "BuildBuilding", "ProduceUnit", "AttackEnemy"}


def test_each_strategy_matches_one_tip_per_dimension():
    for s in enumerate_space()[::37]:
        tips = matching_tips(s, DEFAULT_TIPS)
        assert sorted(t.condition[0] for t in tips) == sorted(DIMENSIONS)


def test_rule_plans_valid_and_bounded():
    s0 = load_map("basesWorkers8x8")
    for s in enumerate_space():
        plan = rule_plan(s0, Player.P1, s, matching_tips(s, DEFAULT_TIPS))
        assert 0 < len(plan) <= 12


def test_plan_reflects_strategy():
    s0 = load_map("basesWorkers8x8")
    s0.resources = [20, 20]
    agg = Strategy("med", "early", "heavy", True, "workers", "none")
    plan = rule_plan(s0, Player.P1, agg, matching_tips(agg, DEFAULT_TIPS))
    assert plan.count(AttackEnemy) > 0 and plan.count(BuildBuilding) == 1 and plan.count(DeployUnit) == 0
    assert any(isinstance(e, AttackEnemy) and e.target_type == UnitType.WORKER for e in plan.entries)
    assert any(isinstance(e, ProduceUnit) and e.unit_type == UnitType.HEAVY for e in plan.entries)
    calm = Strategy("low", "none", "worker", False, "closest", "full")
    plan = rule_plan(s0, Player.P1, calm, matching_tips(calm, DEFAULT_TIPS))
    assert plan.count(AttackEnemy) == 0 and plan.count(BuildBuilding) == 0 and plan.count(DeployUnit) > 0
    assert any(isinstance(e, HarvestMineral) and e.worker_count == 1 for e in plan.entries)


def test_rule_plan_is_mirror_consistent():
    s0 = load_map("basesWorkers8x8", 0)
    for s in random.Random(1).sample(enumerate_space(), 10):
        assert rule_plan(s0, Player.P1, s) == rule_plan(rotate180(s0), Player.P1, s)


def test_counter_strategy():
    s = Strategy("med", "late", "ranged", True, "closest", "none")
    c = counter_strategy(s)
    assert c.aggression is False and c.defense == "full" and c.economy == s.economy


def test_prompt_sections_and_budget():
    s0 = load_map("basesWorkers8x8")
    s = enumerate_space()[100]
    bundle = assemble_prompt(s0, Player.P1, s, matching_tips(s, DEFAULT_TIPS))
    titles = [t for t, _ in bundle.sections()]
    assert titles == ["Game rules", "Strategy", "Expert tips", "Observation", "Output format"]
    no_tips = assemble_prompt(s0, Player.P1, None, ())
    assert "Expert tips" not in [t for t, _ in no_tips.sections()]
    with pytest.raises(PromptBudgetError):
        assemble_prompt(s0, Player.P1, s, DEFAULT_TIPS, budget=100)


def test_parse_plan_tolerates_noise():
    s0 = load_map("basesWorkers8x8")
    text = "Here is the plan:\n1. HARVEST_MINERAL workers=1\n- FLY away\n```\nATTACK_ENEMY unit=worker target=any\n```"
    plan, warnings = parse_plan(text, s0)
    assert plan.entries == (HarvestMineral(1), AttackEnemy(UnitType.WORKER, None))
    assert any("FLY" in w or "line" in w for w in warnings)
    with pytest.raises(PlanParseError):
        parse_plan("nothing useful")


def test_parse_plan_truncates():
    plan, warnings = parse_plan("\n".join(["HARVEST_MINERAL workers=1"] * 20))
    assert len(plan) == 12 and any("truncated" in w for w in warnings)


def test_remote_planner_uses_reply_and_falls_back():
    s0 = load_map("basesWorkers8x8")
    s = enumerate_space()[3]
    rp = RemotePlanner(FakeClient("HARVEST_MINERAL workers=2", "gibberish", RuntimeError("down")))
    assert rp(s0, Player.P1, s, ()).entries == (HarvestMineral(2),)
    assert rp(s0, Player.P1, s, ()) == RulePlanner()(s0, Player.P1, s, ())
    assert rp(s0, Player.P1, s, ()) == RulePlanner()(s0, Player.P1, s, ())
    assert rp.failures == 2


def test_remote_counter_and_source():
    s = enumerate_space()[50]
    target = enumerate_space()[400]
    rp = RemotePlanner(FakeClient(target.to_text(), "no idea"))
    assert rp.counter(s) == target
    assert rp.counter(s) == counter_strategy(s)
    src = RemoteStrategySource(FakeClient(*(x.to_text() for x in enumerate_space()[:3])))
    lib = generate_library(3, src)
    assert list(lib) == list(enumerate_space()[:3]) and set(lib.provenance) == {"generated-by-port"}


def test_plan_text_is_parseable_by_port():
    s0 = load_map("basesWorkers8x8")
    s = Strategy("high", "early", "mixed", True, "buildings", "perimeter")
    plan = rule_plan(s0, Player.P1, s, matching_tips(s, DEFAULT_TIPS))
    back, _ = parse_plan(plan_to_text(plan), s0)
    assert back.entries == plan.entries
