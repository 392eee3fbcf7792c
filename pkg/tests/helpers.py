"""Random states and random legal play for the engine property tests."""

from __future__ import annotations

import random

from sap_rts.engine import (
    STATS, ActionKind, GameState, IllegalActionError, Player, Unit, UnitType,
    legal_actions, load_map, rotate180, rotate_action, step,
)

_OWNED = (UnitType.BASE, UnitType.BARRACKS, UnitType.WORKER, UnitType.LIGHT, UnitType.HEAVY, UnitType.RANGED)


def random_state(rng: random.Random) -> GameState:
    """A small cluttered board, so short episodes see fights, harvests and move conflicts."""
    if rng.random() < 0.2:
        return load_map(rng.choice(["basesWorkers8x8", "basesWorkers16x16"]), rng.randrange(1 << 30))
    w, h = rng.randint(4, 8), rng.randint(4, 8)
    cells = rng.sample([(x, y) for x in range(w) for y in range(h)], rng.randint(3, min(14, w * h)))
    units = {}
    for uid, (x, y) in enumerate(cells):
        r = rng.random()
        if r < 0.2:
            u = Unit(uid, Player.NEUTRAL, UnitType.MINERAL, x, y, 1, resources=rng.randint(1, 3))
        else:
            t = rng.choice(_OWNED)
            u = Unit(uid, rng.choice((Player.P1, Player.P2)), t, x, y, rng.randint(1, STATS[t].hp_max))
            if t == UnitType.WORKER:
                u.carrying = rng.randint(0, 1)
        units[uid] = u
    return GameState("fuzz", w, h, units, [rng.randint(0, 12), rng.randint(0, 12)], step_limit=500,
                     rng_state=rng.getrandbits(64), next_id=len(units), homes=((0, 0), (w - 1, h - 1)))


def random_assignments(state: GameState, rng: random.Random, p_noop: float = 0.3) -> dict:
    """A legal joint assignment: random legal action per idle unit, production kept affordable."""
    budget = list(state.resources)
    out = {}
    for uid in sorted(state.units):
        u = state.units[uid]
        if u.owner == Player.NEUTRAL or u.busy:
            continue
        acts = sorted(legal_actions(state, uid), key=repr)
        if rng.random() < p_noop:
            continue
        a = rng.choice(acts)
        if a.kind == ActionKind.PRODUCE:
            cost = STATS[UnitType(a.unit_type)].cost
            if cost > budget[u.owner]:
                continue
            budget[u.owner] -= cost
        if a.kind != ActionKind.NOOP:
            out[uid] = a
    return out


def rotate_assignments(assignments: dict, state: GameState) -> dict:
    return {uid: rotate_action(a, state.width, state.height) for uid, a in assignments.items()}


def check_episode(seed: int, ticks: int = 40) -> int:
    """Play one random episode and assert every engine property along the way.

    Returns the number of steps taken.
    """
    rng = random.Random(seed)
    s = random_state(rng)
    start_total = s.mineral_total()
    trace = [s]
    plays = []
    for _ in range(ticks):
        a = random_assignments(s, rng)
        nxt = step(s, a)
        plays.append(a)
        # occupancy
        assert len(nxt.occupancy()) == len(nxt.units)
        # conservation
        assert nxt.mineral_total() == start_total
        # hp only goes down, and the dead are gone
        for uid, u in nxt.units.items():
            assert u.hp > 0
            if uid in s.units and u.type != UnitType.MINERAL:
                assert u.hp <= s.units[uid].hp
            assert 0 <= u.x < nxt.width and 0 <= u.y < nxt.height
            assert u.carrying in (0, 1)
        assert min(nxt.resources) >= 0
        # symmetry
        assert step(rotate180(s), rotate_assignments(a, s)) == rotate180(nxt)
        s = nxt
        trace.append(s)
    # determinism: replay the recorded assignment sequence from a fresh start
    rng = random.Random(seed)
    r = random_state(rng)
    assert r == trace[0]
    for i, a in enumerate(plays):
        r = step(r, a)
        assert r == trace[i + 1]
    return ticks


__all__ = ["IllegalActionError", "check_episode", "random_assignments", "random_state", "rotate_assignments"]
