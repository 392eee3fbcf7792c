"""Explicit strategy space, its numeric encoding and library generation.

A strategy is a point on six orthogonal dimensions. The vector encoding is
ordinal for ordered dimensions (economy, defense), one-hot for categorical
ones, and a 0/1 flag for aggression::

    [economy | barracks x3 | composition x5 | aggression | attack_target x3 | defense]
"""

from __future__ import annotations

import itertools
import json
import logging
import random
from dataclasses import asdict, dataclass, fields
from pathlib import Path
from typing import Callable, Protocol, Sequence

import numpy as np

log = logging.getLogger(__name__)

ECONOMY = ("low", "med", "high")
BARRACKS = ("none", "early", "late")
COMPOSITION = ("worker", "light", "heavy", "ranged", "mixed")
AGGRESSION = (False, True)
ATTACK_TARGET = ("closest", "workers", "buildings")
DEFENSE = ("none", "perimeter", "full")

DIMENSIONS: dict[str, tuple] = {
    "economy": ECONOMY,
    "barracks": BARRACKS,
    "composition": COMPOSITION,
    "aggression": AGGRESSION,
    "attack_target": ATTACK_TARGET,
    "defense": DEFENSE,
}

VECTOR_LENGTH = 14
_ORDINAL = (0.0, 0.5, 1.0)


class InvalidStrategyError(ValueError):
    pass


@dataclass(frozen=True, order=False)
class Strategy:
    economy: str = "low"
    barracks: str = "none"
    composition: str = "worker"
    aggression: bool = False
    attack_target: str = "closest"
    defense: str = "none"

    def __post_init__(self):
        for f in fields(self):
            v = getattr(self, f.name)
            if v not in DIMENSIONS[f.name] or (f.name == "aggression" and not isinstance(v, bool)):
                raise InvalidStrategyError(f"{f.name}={v!r} not in {DIMENSIONS[f.name]}")
        if self.composition != "worker" and self.barracks == "none":
            raise InvalidStrategyError(f"composition {self.composition!r} needs barracks")

    def replace(self, **changes) -> "Strategy":
        d = asdict(self)
        d.update(changes)
        return Strategy(**d)

    def to_text(self) -> str:
        return " ".join(f"{k}={str(v).lower()}" for k, v in asdict(self).items())

    def __str__(self) -> str:
        return self.to_text()


NEUTRAL = Strategy()


def encode(s: Strategy) -> np.ndarray:
    v = np.zeros(VECTOR_LENGTH)
    v[0] = _ORDINAL[ECONOMY.index(s.economy)]
    v[1 + BARRACKS.index(s.barracks)] = 1.0
    v[4 + COMPOSITION.index(s.composition)] = 1.0
    v[9] = 1.0 if s.aggression else 0.0
    v[10 + ATTACK_TARGET.index(s.attack_target)] = 1.0
    v[13] = _ORDINAL[DEFENSE.index(s.defense)]
    return v


def _one_hot(block: np.ndarray, name: str) -> int:
    if not np.all((block == 0.0) | (block == 1.0)) or block.sum() != 1.0:
        raise InvalidStrategyError(f"{name} block {block.tolist()} is not one-hot")
    return int(np.argmax(block))


def _ordinal(value: float, name: str) -> int:
    for i, o in enumerate(_ORDINAL):
        if value == o:
            return i
    raise InvalidStrategyError(f"{name} slot {value!r} not in {_ORDINAL}")


def decode(v: Sequence[float]) -> Strategy:
    v = np.asarray(v, dtype=float)
    if v.shape != (VECTOR_LENGTH,):
        raise InvalidStrategyError(f"expected vector of length {VECTOR_LENGTH}, got shape {v.shape}")
    if v[9] not in (0.0, 1.0):
        raise InvalidStrategyError(f"aggression slot {v[9]!r} not in (0, 1)")
    return Strategy(
        economy=ECONOMY[_ordinal(v[0], "economy")],
        barracks=BARRACKS[_one_hot(v[1:4], "barracks")],
        composition=COMPOSITION[_one_hot(v[4:9], "composition")],
        aggression=bool(v[9]),
        attack_target=ATTACK_TARGET[_one_hot(v[10:13], "attack_target")],
        defense=DEFENSE[_ordinal(v[13], "defense")],
    )


def _build_space() -> tuple[Strategy, ...]:
    out = []
    for combo in itertools.product(*DIMENSIONS.values()):
        kw = dict(zip(DIMENSIONS, combo))
        if kw["composition"] != "worker" and kw["barracks"] == "none":
            continue
        out.append(Strategy(**kw))
    return tuple(out)


_SPACE = _build_space()
_SPACE_MATRIX = np.stack([encode(s) for s in _SPACE])
_INDEX = {s: i for i, s in enumerate(_SPACE)}
_SPACE_MATRIX.setflags(write=False)


def enumerate_space() -> tuple[Strategy, ...]:
    """Every valid strategy once, lexicographic in dimension then domain order."""
    return _SPACE


def space_index(s: Strategy) -> int:
    """Position of ``s`` in :func:`enumerate_space`."""
    return _INDEX[s]


def space_matrix() -> np.ndarray:
    """Read-only ``(|space|, 14)`` matrix of encoded strategies in enumeration order."""
    return _SPACE_MATRIX


def parse_strategy(text: str) -> Strategy:
    """Parse ``key=value`` pairs (any order, whitespace/comma separated)."""
    kv = {}
    for tok in text.replace(",", " ").split():
        if "=" not in tok:
            continue
        k, v = tok.split("=", 1)
        k = k.strip().lower()
        if k in DIMENSIONS:
            kv[k] = v.strip().strip("'\".;").lower()
    missing = [k for k in DIMENSIONS if k not in kv]
    if missing:
        raise InvalidStrategyError(f"missing dimensions: {missing}")
    agg = kv["aggression"]
    if agg not in ("true", "false"):
        raise InvalidStrategyError(f"aggression must be true/false, got {agg!r}")
    kv["aggression"] = agg == "true"
    return Strategy(**kv)


def describe_space() -> str:
    lines = []
    for name, dom in DIMENSIONS.items():
        lines.append(f"- {name}: {', '.join(str(v).lower() for v in dom)}")
    lines.append("- constraint: composition other than worker requires barracks early or late")
    return "\n".join(lines)


# -- library ---------------------------------------------------------------------------------


class StrategySource(Protocol):
    """Proposes the next library candidate given the strategies accepted so far."""

    provenance: str

    def __call__(self, rng: random.Random, previous: Sequence[Strategy]) -> Strategy | None: ...


class UniformSampler:
    provenance = "sampled"

    def __call__(self, rng: random.Random, previous: Sequence[Strategy]) -> Strategy:
        return rng.choice(_SPACE)


@dataclass(frozen=True)
class StrategyLibrary:
    strategies: tuple[Strategy, ...]
    provenance: tuple[str, ...]

    def __post_init__(self):
        if len(self.strategies) != len(self.provenance):
            raise ValueError("one provenance tag per strategy")
        if len(set(self.strategies)) != len(self.strategies):
            raise ValueError("library contains duplicate strategies")

    def __len__(self) -> int:
        return len(self.strategies)

    def __iter__(self):
        return iter(self.strategies)

    def __getitem__(self, i):
        return self.strategies[i]

    def to_records(self) -> list[dict]:
        return [
            {**asdict(s), "vector": encode(s).tolist(), "provenance": p}
            for s, p in zip(self.strategies, self.provenance)
        ]

    def save(self, path: str | Path) -> None:
        doc = {"format_version": 1, "strategies": self.to_records()}
        Path(path).write_text(json.dumps(doc, indent=1))

    @classmethod
    def load(cls, path: str | Path) -> "StrategyLibrary":
        doc = json.loads(Path(path).read_text())
        if doc.get("format_version") != 1:
            raise ValueError(f"unsupported library format {doc.get('format_version')!r}")
        strategies, prov = [], []
        for rec in doc["strategies"]:
            s = Strategy(**{k: rec[k] for k in DIMENSIONS})
            if "vector" in rec and not np.array_equal(encode(s), np.asarray(rec["vector"])):
                raise ValueError(f"vector does not match fields for {s}")
            strategies.append(s)
            prov.append(rec.get("provenance", "sampled"))
        return cls(tuple(strategies), tuple(prov))


def generate_library(k: int, generator: StrategySource | Callable | None = None, seed: int = 0,
                     max_retries: int = 20) -> StrategyLibrary:
    """Draw ``k`` unique strategies, redrawing duplicates and falling back to unused samples."""
    if k > len(_SPACE):
        raise ValueError(f"K={k} exceeds the strategy space size {len(_SPACE)}")
    if k < 0:
        raise ValueError("K must be non-negative")
    gen = generator or UniformSampler()
    tag = getattr(gen, "provenance", "generated-by-port")
    rng = random.Random(seed)
    chosen: list[Strategy] = []
    seen: set[Strategy] = set()
    tags: list[str] = []
    for _ in range(k):
        cand = None
        for _attempt in range(max_retries):
            try:
                cand = gen(rng, tuple(chosen))
            except Exception as exc:  # a broken source must not stop the pipeline
                log.warning("strategy source failed: %s", exc)
                cand = None
            if cand is not None and cand not in seen:
                break
            cand = None
        source_tag = tag
        if cand is None:
            unused = [s for s in _SPACE if s not in seen]
            cand = rng.choice(unused)
            source_tag = "sampled"
        chosen.append(cand)
        seen.add(cand)
        tags.append(source_tag)
    return StrategyLibrary(tuple(chosen), tuple(tags))


def split_seen_unseen(lib: StrategyLibrary, n_seen: int, seed: int = 0) -> tuple[StrategyLibrary, StrategyLibrary]:
    if not 0 <= n_seen <= len(lib):
        raise ValueError(f"n_seen={n_seen} outside [0, {len(lib)}]")
    idx = list(range(len(lib)))
    random.Random(seed).shuffle(idx)
    seen = sorted(idx[:n_seen])
    unseen = sorted(idx[n_seen:])

    def sub(ix):
        return StrategyLibrary(tuple(lib.strategies[i] for i in ix), tuple(lib.provenance[i] for i in ix))

    return sub(seen), sub(unseen)
