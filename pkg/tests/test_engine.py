import random

import pytest
from hypothesis import given, settings, strategies as st

from sap_rts import engine as E
from sap_rts.engine import (
    NOOP, STATS, ActionKind, Direction, IllegalActionError, Player, UnitType,
    attack, fast_forward, harvest, legal_actions, load_map, move, outcome, parse_map, produce,
    render, rotate180, step,
)

from helpers import check_episode, random_assignments, random_state


def test_initial_8x8():
    s = load_map("basesWorkers8x8", 0)
    assert (s.width, s.height, s.tick) == (8, 8, 0)
    types = sorted((u.owner, u.type) for u in s.units.values() if u.owner != Player.NEUTRAL)
    assert types == [(Player.P1, UnitType.BASE), (Player.P1, UnitType.WORKER),
                     (Player.P2, UnitType.BASE), (Player.P2, UnitType.WORKER)]
    assert outcome(s) == E.ONGOING


def test_layout_is_seed_independent():
    a, b = load_map("basesWorkers8x8", 0), load_map("basesWorkers8x8", 12345)
    assert render(a) == render(b)
    assert a.units == b.units


@pytest.mark.parametrize("map_id", sorted(E.MAPS))
def test_initial_map_is_mirror_symmetric(map_id):
    s = load_map(map_id, 3)
    r = rotate180(s)
    occ = {(u.x, u.y, u.owner, u.type, u.hp, u.resources) for u in s.units.values()}
    rocc = {(u.x, u.y, u.owner, u.type, u.hp, u.resources) for u in r.units.values()}
    assert occ == rocc
    assert r.resources == s.resources and r.homes == s.homes


def test_unknown_map():
    with pytest.raises(KeyError):
        load_map("nope")


def test_rotate_corner_and_involution():
    s = load_map("basesWorkers8x8")
    corner = next(u for u in s.units.values() if (u.x, u.y) == (0, 0))
    assert rotate180(s).units[corner.id].pos == (7, 7)
    assert rotate180(rotate180(s)) == s


def test_render_roundtrip():
    s = load_map("basesWorkers8x8")
    assert render(parse_map(render(s))) == render(s)
    with pytest.raises(ValueError):
        parse_map("ab\nc")


def test_legal_actions_boxed_in_worker():
    s = parse_map([".l.", "lwl", ".l."])
    w = next(u for u in s.units.values() if u.type == UnitType.WORKER)
    assert legal_actions(s, w.id) == {NOOP}


def test_legal_actions_initial_worker_and_base():
    s = load_map("basesWorkers8x8")
    w = next(u for u in s.units.values() if u.owner == Player.P1 and u.type == UnitType.WORKER)
    assert harvest(Direction.W) in legal_actions(s, w.id)  # mineral at (0,1)
    b = next(u for u in s.units.values() if u.owner == Player.P1 and u.type == UnitType.BASE)
    assert produce(Direction.N, UnitType.WORKER) in legal_actions(s, b.id)


def test_legal_actions_errors():
    s = load_map("basesWorkers8x8")
    with pytest.raises(KeyError):
        legal_actions(s, 999)
    w = next(u for u in s.units.values() if u.owner == Player.P1 and u.type == UnitType.WORKER)
    s2 = step(s, {w.id: move(Direction.S)})
    with pytest.raises(ValueError):
        legal_actions(s2, w.id)


def test_noop_step_only_advances_tick():
    s = load_map("basesWorkers8x8")
    n = step(s, {})
    assert n.tick == 1
    n.tick = 0
    assert n == s


def test_move_completes_at_move_time():
    s = parse_map(["....", ".w..", "....", "...W"])
    w = next(u for u in s.units.values() if u.owner == Player.P1)
    t = STATS[UnitType.WORKER].move_time
    s = step(s, {w.id: move(Direction.E)})
    for _ in range(t - 2):
        s = step(s, {})
        assert s.units[w.id].pos == (1, 1)
    s = step(s, {})
    assert s.tick == t and s.units[w.id].pos == (2, 1)


def test_light_kills_worker():
    s = parse_map(["lW..", "....", "....", "...."])
    light = next(u for u in s.units.values() if u.type == UnitType.LIGHT)
    s = step(s, {light.id: attack(1, 0)})
    for _ in range(STATS[UnitType.LIGHT].attack_time - 1):
        s = step(s, {})
    assert not any(u.owner == Player.P2 for u in s.units.values())
    assert outcome(s) == E.Outcome("win", Player.P1)


def test_illegal_assignment_rejects_whole_call():
    s = load_map("basesWorkers8x8")
    w = next(u for u in s.units.values() if u.owner == Player.P1 and u.type == UnitType.WORKER)
    before = s.copy()
    with pytest.raises(IllegalActionError):
        step(s, {w.id: move(Direction.W)})  # mineral there
    assert s == before


def test_unaffordable_combined_production_rejected():
    s = parse_map(["b.b", "...", "..."], start_resources=1)
    bases = [u.id for u in s.units.values()]
    with pytest.raises(IllegalActionError):
        step(s, {bases[0]: produce(Direction.S, UnitType.WORKER), bases[1]: produce(Direction.S, UnitType.WORKER)})


def test_outcomes():
    s = load_map("basesWorkers8x8")
    s.tick = s.step_limit
    assert outcome(s) == E.DRAW
    t = parse_map(["w..", "...", "..."])
    assert outcome(t) == E.Outcome("win", Player.P1)


def test_move_conflict_resolved_by_seed():
    winners = set()
    for seed in range(30):
        s = parse_map(["w.W"], seed=seed)
        ids = sorted(s.units)
        s = step(s, {ids[0]: move(Direction.E), ids[1]: move(Direction.W)})
        for _ in range(STATS[UnitType.WORKER].move_time - 1):
            s = step(s, {})
        movers = [u.owner for u in s.units.values() if u.pos == (1, 0)]
        assert len(movers) == 1
        winners.add(movers[0])
        assert len(s.units) == 2
    assert winners == {Player.P1, Player.P2}


def test_fast_forward_equals_noop_steps():
    rng = random.Random(5)
    nxt = None
    while nxt is None or nxt < 3:
        s = random_state(rng)
        s = step(s, random_assignments(s, rng, p_noop=0.0))
        nxt = E.ticks_to_next_completion(s)
    slow = s
    for _ in range(nxt - 1):
        slow = step(slow, {})
    assert fast_forward(s, nxt - 1) == slow
    with pytest.raises(ValueError):
        fast_forward(s, nxt)


def test_stat_overrides():
    try:
        E.apply_stat_overrides({"worker": {"hp_max": 3}})
        assert STATS[UnitType.WORKER].hp_max == 3
        with pytest.raises(ValueError):
            E.apply_stat_overrides({"dragon": {"hp_max": 1}})
        with pytest.raises(ValueError):
            E.apply_stat_overrides({"worker": {"produces": []}})
    finally:
        E.reset_stats()
    assert STATS[UnitType.WORKER].hp_max == 1


def test_attack_on_vacated_cell_misses():
    s = parse_map(["rW.", "...", "..."])
    r = next(u for u in s.units.values() if u.type == UnitType.RANGED)
    w = next(u for u in s.units.values() if u.type == UnitType.WORKER)
    s = step(s, {w.id: move(Direction.S)})
    for _ in range(STATS[UnitType.WORKER].move_time - 4):
        s = step(s, {})
    s = step(s, {r.id: attack(1, 0)})  # worker still on (1,0) but leaves before the hit lands
    for _ in range(STATS[UnitType.RANGED].attack_time):
        s = step(s, {})
    assert s.units[w.id].pos == (1, 1)


@settings(max_examples=60, deadline=None)
@given(st.integers(0, 2**31))
def test_random_episode_properties(seed):
    check_episode(seed, ticks=30)


def test_action_kinds_cover_rotation():
    for d in Direction:
        assert E.rotate_action(move(d), 8, 8).direction == d.opposite
    assert E.rotate_action(attack(1, 2), 8, 8).target == (6, 5)
    assert E.rotate_action(NOOP, 8, 8).kind == ActionKind.NOOP
