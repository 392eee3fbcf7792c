"""Run configuration: one YAML (or JSON) file, every field optional.

Schema (defaults shown)::

    seed: 0
    map: basesWorkers8x8
    stats: {}                      # per unit type overrides, e.g. {worker: {hp_max: 2}}
    library: {size: 50, seen: 30}
    tournament: {episodes: 5, k: 200}
    sen:
      hidden: [64, 64]
      learning_rate: 0.01
      momentum: 0.9
      epochs: 2000
      batch_size: 32
      patience: 20
      val_fraction: 0.1
      test_fraction: 0.2
    recognition:                   # thresholds of the rule recognizer
      economy_cuts: [0.52, 0.78]
      early_barracks_tick: 220
      enemy_half_aggression: 0.25
      enemy_half_attack_share: 0.5
      defense_full: 0.9
      defense_perimeter: 0.6
      mixed_share: 0.25
    experiment:
      episodes: 2                  # per opponent (pool runs) or per pair (matrix runs)
      k: 200
      agents: {}                   # label -> agent spec, e.g. {sap: {kind: sap}, vr: {kind: vanilla}}
    remote:
      enabled: false               # use a chat-completion service for planning/recognition
      url_env: SAP_LLM_URL         # names of environment variables, never the secrets themselves
      key_env: SAP_LLM_API_KEY
      model_env: SAP_LLM_MODEL
      timeout: 30
"""

from __future__ import annotations

import hashlib
import json
from dataclasses import asdict, dataclass, field, fields
from pathlib import Path

import yaml

from .engine import MAPS
from .recognition import RecognitionConfig
from .sen import TrainConfig


class ConfigError(ValueError):
    pass


@dataclass
class LibraryConfig:
    size: int = 50
    seen: int = 30


@dataclass
class TournamentConfig:
    episodes: int = 5
    k: int = 200


@dataclass
class SENConfig:
    hidden: tuple[int, ...] = (64, 64)
    learning_rate: float = 0.01
    momentum: float = 0.9
    epochs: int = 2000
    batch_size: int = 32
    patience: int = 20
    val_fraction: float = 0.1
    test_fraction: float = 0.2

    def train_config(self, seed: int) -> TrainConfig:
        return TrainConfig(self.learning_rate, self.momentum, self.epochs, self.batch_size, seed,
                           tuple(self.hidden), self.patience, self.val_fraction)


@dataclass
class ExperimentConfig:
    episodes: int = 2
    k: int = 200
    agents: dict = field(default_factory=dict)


@dataclass
class RemoteConfig:
    enabled: bool = False
    url_env: str = "SAP_LLM_URL"
    key_env: str = "SAP_LLM_API_KEY"
    model_env: str = "SAP_LLM_MODEL"
    timeout: float = 30.0


@dataclass
class Config:
    seed: int = 0
    map: str = "basesWorkers8x8"
    stats: dict = field(default_factory=dict)
    library: LibraryConfig = field(default_factory=LibraryConfig)
    tournament: TournamentConfig = field(default_factory=TournamentConfig)
    sen: SENConfig = field(default_factory=SENConfig)
    recognition: RecognitionConfig = field(default_factory=RecognitionConfig)
    experiment: ExperimentConfig = field(default_factory=ExperimentConfig)
    remote: RemoteConfig = field(default_factory=RemoteConfig)

    def validate(self) -> "Config":
        if self.map not in MAPS:
            raise ConfigError(f"unknown map {self.map!r}; known: {sorted(MAPS)}")
        if not 0 < self.library.seen < self.library.size:
            raise ConfigError("library.seen must be between 0 and library.size")
        if self.tournament.episodes < 1 or self.experiment.episodes < 1:
            raise ConfigError("episode counts must be positive")
        if self.tournament.k < 1 or self.experiment.k < 1:
            raise ConfigError("k must be positive")
        if not 0 < self.sen.test_fraction < 1:
            raise ConfigError("sen.test_fraction must be in (0, 1)")
        try:
            self.sen.train_config(self.seed)
        except ValueError as exc:
            raise ConfigError(f"sen: {exc}") from None
        return self

    def to_dict(self) -> dict:
        return json.loads(json.dumps(asdict(self)))

    def digest(self) -> str:
        blob = json.dumps(self.to_dict(), sort_keys=True).encode()
        return hashlib.sha256(blob).hexdigest()[:16]


_SECTIONS = {"library": LibraryConfig, "tournament": TournamentConfig, "sen": SENConfig,
             "recognition": RecognitionConfig, "experiment": ExperimentConfig, "remote": RemoteConfig}


def _section(cls, raw, name: str):
    if raw is None:
        return cls()
    if not isinstance(raw, dict):
        raise ConfigError(f"section {name!r} must be a mapping")
    known = {f.name for f in fields(cls)}
    extra = set(raw) - known
    if extra:
        raise ConfigError(f"unknown keys in {name!r}: {sorted(extra)}")
    vals = {k: tuple(v) if isinstance(v, list) else v for k, v in raw.items()}
    return cls(**vals)


def from_dict(raw: dict | None) -> Config:
    raw = dict(raw or {})
    known = {f.name for f in fields(Config)}
    extra = set(raw) - known
    if extra:
        raise ConfigError(f"unknown top-level keys: {sorted(extra)}")
    kw = {k: _section(cls, raw.pop(k, None), k) for k, cls in _SECTIONS.items()}
    try:
        cfg = Config(**raw, **kw)
    except TypeError as exc:
        raise ConfigError(str(exc)) from None
    return cfg.validate()


def load(path: str | Path | None) -> Config:
    """Read a YAML/JSON config; ``None`` gives the defaults."""
    if path is None:
        return from_dict({})
    try:
        raw = yaml.safe_load(Path(path).read_text())
    except yaml.YAMLError as exc:
        raise ConfigError(f"cannot parse {path}: {exc}") from None
    if raw is not None and not isinstance(raw, dict):
        raise ConfigError("config file must hold a mapping")
    return from_dict(raw)
