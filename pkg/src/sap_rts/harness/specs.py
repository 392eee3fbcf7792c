"""Declarative agent specs, so seats can be described in config files and shipped to workers."""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path

from ..planner import PlannerPort, RulePlanner
from ..sen import SENParams
from ..strategy import Strategy, parse_strategy
from .agents import (
    BOT_STRATEGIES,
    DEFAULT_K,
    Agent,
    FixedStrategyAgent,
    SAPAgent,
    TipsAugmentedAgent,
    VanillaAgent,
    scripted_bot,
)

SAP_KINDS = {"sap": "sap", "sap_epe": "sap", "sap_no_sen": "no_sen", "sap_no_tips": "no_tips"}
KINDS = (*SAP_KINDS, "fixed", "vanilla", "tips", "bot")
BOTS = ("passive", "randomBiased", *BOT_STRATEGIES)


class AgentSpecError(ValueError):
    pass


@dataclass(frozen=True)
class AgentSpec:
    kind: str
    strategy: Strategy | None = None
    bot: str | None = None
    sen_path: str | None = None
    k: int = DEFAULT_K
    seed: int = 0

    def __post_init__(self):
        if self.kind not in KINDS:
            raise AgentSpecError(f"unknown agent kind {self.kind!r}; expected one of {KINDS}")
        if self.k <= 0:
            raise AgentSpecError("k must be positive")
        if self.kind == "fixed" and self.strategy is None:
            raise AgentSpecError("fixed agent needs a strategy")
        if self.kind == "bot" and self.bot not in BOTS:
            raise AgentSpecError(f"unknown bot {self.bot!r}; expected one of {BOTS}")
        if self.kind in SAP_KINDS and self.kind != "sap_no_sen":
            if self.sen_path is None or not Path(self.sen_path).exists():
                raise AgentSpecError(f"{self.kind} needs an existing SEN file, got {self.sen_path!r}")

    @classmethod
    def from_dict(cls, d: dict) -> "AgentSpec":
        d = dict(d)
        if isinstance(d.get("strategy"), str):
            d["strategy"] = parse_strategy(d["strategy"])
        elif isinstance(d.get("strategy"), dict):
            d["strategy"] = Strategy(**d["strategy"])
        return cls(**d)

    def label(self) -> str:
        if self.kind == "fixed":
            return f"fixed[{self.strategy}]"
        if self.kind == "bot":
            return self.bot
        return self.kind


_SEN_CACHE: dict[str, SENParams] = {}


def _load_sen(path: str) -> SENParams:
    if path not in _SEN_CACHE:
        _SEN_CACHE[path] = SENParams.load(path)
    return _SEN_CACHE[path]


def build_agent(spec: AgentSpec, sen: SENParams | None = None, planner: PlannerPort | None = None,
                recognizer=None) -> Agent:
    """Instantiate a seat. ``sen`` overrides ``spec.sen_path`` when given."""
    planner = planner or RulePlanner()
    if spec.kind in SAP_KINDS:
        if sen is None and spec.sen_path is not None:
            sen = _load_sen(spec.sen_path)
        return SAPAgent(sen, recognizer=recognizer, planner=planner, k=spec.k, mode=SAP_KINDS[spec.kind],
                        per_episode=spec.kind == "sap_epe")
    if spec.kind == "fixed":
        return FixedStrategyAgent(spec.strategy, planner, k=spec.k)
    if spec.kind == "vanilla":
        return VanillaAgent(planner, k=spec.k)
    if spec.kind == "tips":
        return TipsAugmentedAgent(planner, k=spec.k)
    return scripted_bot(spec.bot, spec.seed, spec.k)
