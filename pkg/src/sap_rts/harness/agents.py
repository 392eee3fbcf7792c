"""Agents that sit in a match seat.

Plan-based agents regenerate their plan every ``k`` ticks and ground it with
the executor every tick. The SAP agent runs recognise -> best response ->
plan at each replan tick; its ablations swap out one of those pieces.
"""

from __future__ import annotations

import logging
import random
from dataclasses import dataclass
from typing import Sequence

from ..actions import ExecutorState, Plan, tick_controller
from ..engine import (
    NOOP,
    STATS,
    Action,
    ActionKind,
    GameState,
    Player,
    UnitType,
    legal_actions,
    rotate180,
    rotate_action,
)
from ..planner import (
    DEFAULT_TIPS,
    VANILLA_STRATEGY,
    ExpertTip,
    PlannerPort,
    RulePlanner,
    counter_strategy,
    matching_tips,
)
from ..recognition import RuleRecognizer, Trajectory, extract
from ..sen import SENParams, best_response
from ..strategy import NEUTRAL, Strategy

log = logging.getLogger(__name__)

DEFAULT_K = 200


class Agent:
    """Base seat controller. Subclasses override :meth:`act`."""

    name = "agent"
    k: int | None = None  # replan interval; the match loop never skips across a multiple of k
    skippable = True  # idle ticks may be fast-forwarded when act() is a no-op fixed point

    def reset(self, state: GameState, player: Player) -> None:
        self.player = Player(player)

    def act(self, state: GameState, traj: Trajectory) -> tuple[dict[int, Action], bool]:
        """Assignments for this tick and whether internal state stayed unchanged."""
        raise NotImplementedError

    def end_episode(self, traj: Trajectory) -> None:
        pass


class PassiveAgent(Agent):
    name = "passive"

    def act(self, state, traj):
        return {u.id: NOOP for u in state.units.values() if u.owner == self.player and not u.busy}, True


class RandomBiasedAgent(Agent):
    """Uniform over legal actions after weighting kinds (attack > economy > produce > move)."""

    name = "randomBiased"
    skippable = False
    WEIGHTS = {ActionKind.ATTACK: 8.0, ActionKind.HARVEST: 4.0, ActionKind.RETURN: 4.0,
               ActionKind.PRODUCE: 2.0, ActionKind.MOVE: 1.0, ActionKind.NOOP: 0.5}

    def __init__(self, seed: int = 0):
        self.seed = seed

    def reset(self, state, player):
        super().reset(state, player)
        self.rng = random.Random(self.seed * 2 + int(player) + state.rng_state)

    def act(self, state, traj):
        out = {}
        budget = state.resources[self.player]
        for u in sorted(state.units.values(), key=lambda u: u.id):
            if u.owner != self.player or u.busy:
                continue
            acts = sorted(legal_actions(state, u.id), key=repr)
            acts = [a for a in acts if a.kind != ActionKind.PRODUCE
                    or STATS[UnitType(a.unit_type)].cost <= budget]
            weights = [self.WEIGHTS[a.kind] for a in acts]
            a = self.rng.choices(acts, weights)[0]
            if a.kind == ActionKind.PRODUCE:
                budget -= STATS[UnitType(a.unit_type)].cost
            out[u.id] = a
        return out, False


class PlanAgent(Agent):
    """Replans every ``k`` ticks (at t mod k == 0) and executes the current plan.

    Planning and grounding run in a canonical frame: the P2 seat sees the
    board rotated by 180 degrees and plays it as P1, so both seats make
    mirror-image decisions. The stored plan is in that frame.
    """

    def __init__(self, k: int = DEFAULT_K):
        if k <= 0:
            raise ValueError("plan interval k must be positive")
        self.k = k

    def reset(self, state, player):
        super().reset(state, player)
        self.plan = Plan()
        self.exec = ExecutorState.for_plan(self.plan)
        self.last_plan_tick = -1
        self.plans_made = 0

    def make_plan(self, view: GameState, traj: Trajectory) -> Plan:
        """Plan for P1 on ``view`` (the canonical-frame board)."""
        raise NotImplementedError

    def act(self, state, traj):
        flip = self.player == Player.P2
        view = rotate180(state) if flip else state
        if state.tick % self.k == 0 and state.tick != self.last_plan_tick:
            self.plan = self.make_plan(view, traj)
            self.exec = ExecutorState.for_plan(self.plan)
            self.last_plan_tick = state.tick
            self.plans_made += 1
        out, ex = tick_controller(view, Player.P1, self.plan, self.exec)
        stable = ex == self.exec
        self.exec = ex
        if flip:
            out = {uid: rotate_action(a, state.width, state.height) for uid, a in out.items()}
        return out, stable


class FixedStrategyAgent(PlanAgent):
    def __init__(self, strategy: Strategy, planner: PlannerPort | None = None,
                 tips: Sequence[ExpertTip] = DEFAULT_TIPS, k: int = DEFAULT_K, name: str | None = None):
        super().__init__(k)
        self.strategy = strategy
        self.planner = planner or RulePlanner()
        self.tips = matching_tips(strategy, tips)
        self.name = name or f"fixed[{strategy}]"

    def make_plan(self, view, traj):
        return self.planner(view, Player.P1, self.strategy, self.tips)


class VanillaAgent(PlanAgent):
    """Plans from the observation alone: no strategy, no tips."""

    name = "vanilla"

    def __init__(self, planner: PlannerPort | None = None, k: int = DEFAULT_K):
        super().__init__(k)
        self.planner = planner or RulePlanner()

    def make_plan(self, view, traj):
        return self.planner(view, Player.P1, None, ())


class TipsAugmentedAgent(PlanAgent):
    """Plans from the observation plus expert tips, without a strategy."""

    name = "tips_augmented"

    def __init__(self, planner: PlannerPort | None = None, tips: Sequence[ExpertTip] = DEFAULT_TIPS,
                 k: int = DEFAULT_K):
        super().__init__(k)
        self.planner = planner or RulePlanner()
        self.tips = matching_tips(getattr(self.planner, "default", VANILLA_STRATEGY), tips)

    def make_plan(self, view, traj):
        return self.planner(view, Player.P1, None, self.tips)


@dataclass
class ReplanEvent:
    tick: int
    recognized: Strategy
    confidence: dict[str, float]
    response: Strategy
    predicted: float | None

    def to_record(self) -> dict:
        return {"tick": self.tick, "recognized": self.recognized.to_text(), "confidence": self.confidence,
                "response": self.response.to_text(), "predicted": self.predicted}


class SAPAgent(PlanAgent):
    """Recognise the opponent, search the best response with the SEN, plan for it.

    ``mode`` selects the ablation: ``"sap"`` (full), ``"no_sen"`` (counter
    strategy chosen by the planner port instead of the SEN), ``"no_tips"``
    (plans generated without expert tips). With ``per_episode=True`` the
    strategy is fixed within an episode and updated from the previous
    episode's trajectory.
    """

    def __init__(self, sen: SENParams | None, recognizer=None, planner: PlannerPort | None = None,
                 tips: Sequence[ExpertTip] = DEFAULT_TIPS, k: int = DEFAULT_K, mode: str = "sap",
                 per_episode: bool = False):
        super().__init__(k)
        if mode not in ("sap", "no_sen", "no_tips"):
            raise ValueError(f"unknown SAP mode {mode!r}")
        if mode != "no_sen" and sen is None:
            raise ValueError("SAP needs SEN parameters")
        self.sen = sen
        self.recognizer = recognizer or RuleRecognizer()
        self.planner = planner or RulePlanner()
        self.all_tips = tuple(tips)
        self.mode = mode
        self.per_episode = per_episode
        self.name = {"sap": "SAP", "no_sen": "SAP w/o SEN", "no_tips": "SAP w/o tips"}[mode]
        if per_episode:
            self.name = "SAP-EPE"
        self.events: list[ReplanEvent] = []
        self._cache: dict[Strategy, tuple[Strategy, float | None]] = {}
        self._episode_choice: ReplanEvent | None = None

    def reset(self, state, player):
        super().reset(state, player)
        self.events = []

    def respond(self, opp: Strategy) -> tuple[Strategy, float | None]:
        if opp not in self._cache:
            if self.mode == "no_sen":
                counter = getattr(self.planner, "counter", counter_strategy)
                self._cache[opp] = (counter(opp), None)
            else:
                self._cache[opp] = best_response(self.sen, opp)
        return self._cache[opp]

    def _decide(self, traj: Trajectory, tick: int) -> ReplanEvent:
        summary = extract(traj)
        opp, conf = self.recognizer(summary, self.player.opponent)
        response, predicted = self.respond(opp)
        return ReplanEvent(tick, opp, conf, response, predicted)

    def make_plan(self, view, traj):
        if self.per_episode:
            ev = self._episode_choice
            if ev is None:
                response, predicted = self.respond(NEUTRAL)
                ev = ReplanEvent(0, NEUTRAL, {}, response, predicted)
            ev = ReplanEvent(view.tick, ev.recognized, ev.confidence, ev.response, ev.predicted)
        else:
            ev = self._decide(traj, view.tick)
        self.events.append(ev)
        tips = () if self.mode == "no_tips" else matching_tips(ev.response, self.all_tips)
        return self.planner(view, Player.P1, ev.response, tips)

    def end_episode(self, traj):
        if self.per_episode:
            self._episode_choice = self._decide(traj, traj.elapsed)


BOT_STRATEGIES = {
    "workerRushLike": Strategy("low", "none", "worker", True, "closest", "none"),
    "lightRushLike": Strategy("low", "early", "light", True, "closest", "none"),
}


def scripted_bot(kind: str, seed: int = 0, k: int = DEFAULT_K) -> Agent:
    if kind == "passive":
        return PassiveAgent()
    if kind == "randomBiased":
        return RandomBiasedAgent(seed)
    if kind in BOT_STRATEGIES:
        return FixedStrategyAgent(BOT_STRATEGIES[kind], k=k, name=kind)
    raise ValueError(f"unknown scripted bot {kind!r}")
