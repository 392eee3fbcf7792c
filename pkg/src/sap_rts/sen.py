"""Strategy evaluation network: P(strategy a beats strategy b).

A small ReLU MLP over the concatenated strategy vectors with a logistic
output, trained with binary cross-entropy on soft win rates and used to
search the whole strategy space for a best response.
"""

from __future__ import annotations

import json
import logging
import random
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

from . import _kernels
from .strategy import DIMENSIONS, VECTOR_LENGTH, Strategy, encode, enumerate_space, space_matrix

log = logging.getLogger(__name__)

EPS = 1e-7
FORMAT_VERSION = 1


@dataclass
class SENParams:
    weights: list[np.ndarray]
    biases: list[np.ndarray]

    def __post_init__(self):
        if len(self.weights) != len(self.biases) or not self.weights:
            raise ValueError("need one bias per weight matrix")
        for i, (w, b) in enumerate(zip(self.weights, self.biases)):
            if w.ndim != 2 or b.shape != (w.shape[1],):
                raise ValueError(f"layer {i}: weight {w.shape} and bias {b.shape} disagree")
            if i and self.weights[i - 1].shape[1] != w.shape[0]:
                raise ValueError(f"layer {i} input {w.shape[0]} != previous output {self.weights[i - 1].shape[1]}")
        if self.weights[-1].shape[1] != 1:
            raise ValueError("output layer must have one unit")

    @property
    def input_size(self) -> int:
        return self.weights[0].shape[0]

    def copy(self) -> "SENParams":
        return SENParams([w.copy() for w in self.weights], [b.copy() for b in self.biases])

    def flat(self) -> np.ndarray:
        return np.concatenate([a.ravel() for pair in zip(self.weights, self.biases) for a in pair])

    def all_finite(self) -> bool:
        return all(np.isfinite(a).all() for a in (*self.weights, *self.biases))

    def save(self, path: str | Path) -> None:
        doc = {
            "format_version": FORMAT_VERSION,
            "activation": "relu",
            "output": "sigmoid",
            "layers": [
                {"weight_shape": list(w.shape), "weight": w.ravel().tolist(), "bias": b.tolist()}
                for w, b in zip(self.weights, self.biases)
            ],
        }
        Path(path).write_text(json.dumps(doc))

    @classmethod
    def load(cls, path: str | Path) -> "SENParams":
        doc = json.loads(Path(path).read_text())
        if doc.get("format_version") != FORMAT_VERSION:
            raise ValueError(f"unsupported SEN file version {doc.get('format_version')!r}")
        ws, bs = [], []
        for layer in doc["layers"]:
            ws.append(np.asarray(layer["weight"], dtype=float).reshape(layer["weight_shape"]))
            bs.append(np.asarray(layer["bias"], dtype=float))
        return cls(ws, bs)


def init_params(hidden: Sequence[int] = (64, 64), input_size: int = 2 * VECTOR_LENGTH,
                seed: int = 0) -> SENParams:
    rng = np.random.default_rng(seed)
    sizes = [input_size, *hidden, 1]
    ws, bs = [], []
    for fan_in, fan_out in zip(sizes[:-1], sizes[1:]):
        lim = 1.0 / np.sqrt(fan_in)
        ws.append(rng.uniform(-lim, lim, size=(fan_in, fan_out)))
        bs.append(rng.uniform(-lim, lim, size=fan_out))
    return SENParams(ws, bs)


def sigmoid(z):
    e = np.exp(-np.abs(z))
    return np.where(z >= 0, 1.0 / (1.0 + e), e / (1.0 + e))


def logits(p: SENParams, x: np.ndarray) -> np.ndarray:
    x = np.atleast_2d(np.asarray(x, dtype=float))
    if x.shape[1] != p.input_size:
        raise ValueError(f"input width {x.shape[1]} != network input {p.input_size}")
    if len(p.weights) == 3:
        return _kernels.mlp_logits(np.ascontiguousarray(x), *_flat_layers(p))
    h = x
    for w, b in zip(p.weights[:-1], p.biases[:-1]):
        h = np.maximum(h @ w + b, 0.0)
    return (h @ p.weights[-1] + p.biases[-1])[:, 0]


def _flat_layers(p: SENParams):
    out = []
    for w, b in zip(p.weights, p.biases):
        out += [np.ascontiguousarray(w), np.ascontiguousarray(b)]
    return out


def predict(p: SENParams, x: np.ndarray) -> np.ndarray:
    return sigmoid(logits(p, x))


def forward(p: SENParams, a, b) -> float:
    """Win probability of strategy ``a`` against ``b`` (vectors or Strategy objects)."""
    va = encode(a) if isinstance(a, Strategy) else np.asarray(a, dtype=float)
    vb = encode(b) if isinstance(b, Strategy) else np.asarray(b, dtype=float)
    if va.ndim != 1 or vb.ndim != 1:
        raise ValueError("forward takes single vectors; use predict for batches")
    x = np.concatenate([va, vb])[None, :]
    h = x
    for w, bias in zip(p.weights[:-1], p.biases[:-1]):
        h = np.maximum(h @ w + bias, 0.0)
    return float(sigmoid((h @ p.weights[-1] + p.biases[-1])[0, 0]))


def bce_loss(pred, target):
    pred = np.clip(np.asarray(pred, dtype=float), EPS, 1.0 - EPS)
    target = np.asarray(target, dtype=float)
    out = -(target * np.log(pred) + (1.0 - target) * np.log(1.0 - pred))
    return float(out) if out.ndim == 0 else out


def batch_loss(p: SENParams, x: np.ndarray, y: np.ndarray) -> float:
    return float(np.mean(bce_loss(predict(p, x), y)))


def gradient(p: SENParams, x: np.ndarray, y: np.ndarray) -> tuple[list[np.ndarray], list[np.ndarray]]:
    """Exact gradient of :func:`batch_loss` by backpropagation."""
    x = np.atleast_2d(np.asarray(x, dtype=float))
    y = np.asarray(y, dtype=float).reshape(-1)
    if len(x) == 0:
        raise ValueError("empty batch")
    if x.shape[1] != p.input_size or len(y) != len(x):
        raise ValueError("batch shape mismatch")
    acts = [x]
    pre = []
    h = x
    for w, b in zip(p.weights[:-1], p.biases[:-1]):
        z = h @ w + b
        pre.append(z)
        h = np.maximum(z, 0.0)
        acts.append(h)
    z_out = (h @ p.weights[-1] + p.biases[-1])[:, 0]
    prob = sigmoid(z_out)
    clipped = (prob < EPS) | (prob > 1.0 - EPS)
    # d loss / d logit for the clamped BCE; zero where the clamp is active
    delta = np.where(clipped, 0.0, prob - y)[:, None] / len(x)
    gw = [None] * len(p.weights)
    gb = [None] * len(p.biases)
    for i in range(len(p.weights) - 1, -1, -1):
        gw[i] = acts[i].T @ delta
        gb[i] = delta.sum(axis=0)
        if i:
            delta = (delta @ p.weights[i].T) * (pre[i - 1] > 0)
    return gw, gb


# -- data -------------------------------------------------------------------------------------


@dataclass
class ResultRecord:
    a: Strategy
    b: Strategy
    r: float
    split: str = "train"
    wins: int = 0
    draws: int = 0
    episodes: int = 0

    def to_json(self) -> dict:
        return {"i": asdict(self.a), "j": asdict(self.b), "vec_i": encode(self.a).tolist(),
                "vec_j": encode(self.b).tolist(), "r": self.r, "split": self.split,
                "wins": self.wins, "draws": self.draws, "episodes": self.episodes}

    @classmethod
    def from_json(cls, d: dict) -> "ResultRecord":
        a = Strategy(**{k: d["i"][k] for k in DIMENSIONS})
        b = Strategy(**{k: d["j"][k] for k in DIMENSIONS})
        r = float(d["r"])
        if not 0.0 <= r <= 1.0:
            raise ValueError(f"r={r} outside [0, 1]")
        return cls(a, b, r, d.get("split", "train"), d.get("wins", 0), d.get("draws", 0), d.get("episodes", 0))


@dataclass
class ResultDataset:
    records: list[ResultRecord] = field(default_factory=list)

    def __len__(self) -> int:
        return len(self.records)

    def subset(self, split: str) -> "ResultDataset":
        return ResultDataset([r for r in self.records if r.split == split])

    def arrays(self) -> tuple[np.ndarray, np.ndarray]:
        if not self.records:
            return np.zeros((0, 2 * VECTOR_LENGTH)), np.zeros(0)
        x = np.stack([np.concatenate([encode(r.a), encode(r.b)]) for r in self.records])
        y = np.array([r.r for r in self.records], dtype=float)
        return x, y

    def with_split(self, test_fraction: float = 0.2, seed: int = 0) -> "ResultDataset":
        idx = list(range(len(self.records)))
        random.Random(seed).shuffle(idx)
        n_test = int(round(test_fraction * len(idx)))
        test = set(idx[:n_test])
        return ResultDataset([
            ResultRecord(r.a, r.b, r.r, "test" if i in test else "train", r.wins, r.draws, r.episodes)
            for i, r in enumerate(self.records)
        ])

    def save(self, path: str | Path) -> None:
        with open(path, "w") as fh:
            for r in self.records:
                fh.write(json.dumps(r.to_json()) + "\n")

    @classmethod
    def load(cls, path: str | Path) -> "ResultDataset":
        recs = []
        with open(path) as fh:
            for line in fh:
                if line.strip():
                    recs.append(ResultRecord.from_json(json.loads(line)))
        return cls(recs)


# -- training -----------------------------------------------------------------------------------


@dataclass(frozen=True)
class TrainConfig:
    learning_rate: float = 0.01
    momentum: float = 0.9
    epochs: int = 2000
    batch_size: int = 32
    seed: int = 0
    hidden: tuple[int, ...] = (64, 64)
    patience: int = 20
    val_fraction: float = 0.1

    def __post_init__(self):
        if self.learning_rate < 0 or self.epochs < 1 or self.batch_size < 1 or self.patience < 1:
            raise ValueError("learning rate must be >= 0; epochs, batch size, patience positive")
        if not self.hidden or min(self.hidden) < 1:
            raise ValueError("hidden sizes must be positive")


@dataclass
class TrainHistory:
    train_loss: list[float] = field(default_factory=list)
    val_loss: list[float] = field(default_factory=list)
    best_val: list[float] = field(default_factory=list)
    best_epoch: int = 0


def train(data: ResultDataset, cfg: TrainConfig = TrainConfig(),
          history: TrainHistory | None = None) -> SENParams:
    """Mini-batch momentum SGD with early stopping on a held-out slice of the train split."""
    train_part = data.subset("train") if any(r.split == "train" for r in data.records) else data
    if len(train_part) == 0:
        raise ValueError("no training records")
    x, y = train_part.arrays()
    rng = np.random.default_rng(cfg.seed)
    order = rng.permutation(len(x))
    n_val = int(round(cfg.val_fraction * len(x))) if len(x) >= 10 else 0
    val_idx, fit_idx = order[:n_val], order[n_val:]
    xv, yv = (x[val_idx], y[val_idx]) if n_val else (x, y)
    xf, yf = x[fit_idx], y[fit_idx]

    params = init_params(cfg.hidden, x.shape[1], cfg.seed)
    vel_w = [np.zeros_like(w) for w in params.weights]
    vel_b = [np.zeros_like(b) for b in params.biases]
    best = params.copy()
    best_loss = batch_loss(params, xv, yv)
    hist = history if history is not None else TrainHistory()
    stale = 0
    for epoch in range(cfg.epochs):
        perm = rng.permutation(len(xf))
        for start in range(0, len(xf), cfg.batch_size):
            sel = perm[start:start + cfg.batch_size]
            gw, gb = gradient(params, xf[sel], yf[sel])
            for i in range(len(params.weights)):
                vel_w[i] = cfg.momentum * vel_w[i] - cfg.learning_rate * gw[i]
                vel_b[i] = cfg.momentum * vel_b[i] - cfg.learning_rate * gb[i]
                params.weights[i] += vel_w[i]
                params.biases[i] += vel_b[i]
        vl = batch_loss(params, xv, yv)
        hist.train_loss.append(batch_loss(params, xf, yf))
        hist.val_loss.append(vl)
        if vl < best_loss:
            best_loss = vl
            best = params.copy()
            hist.best_epoch = epoch
            stale = 0
        else:
            stale += 1
        hist.best_val.append(best_loss)
        if stale >= cfg.patience:
            break
    return best


def evaluate(p: SENParams, test: ResultDataset, threshold: float = 0.5) -> dict:
    if len(test) == 0:
        raise ValueError("empty test set")
    x, y = test.arrays()
    truth = (y > 0.5).astype(int)
    pred = (predict(p, x) > threshold).astype(int)
    tn = int(np.sum((truth == 0) & (pred == 0)))
    fp = int(np.sum((truth == 0) & (pred == 1)))
    fn = int(np.sum((truth == 1) & (pred == 0)))
    tp = int(np.sum((truth == 1) & (pred == 1)))
    return {
        "accuracy": (tp + tn) / len(truth),
        "confusion": [[tn, fp], [fn, tp]],
        "fp_rate": fp / (fp + tn) if fp + tn else 0.0,
        "n": len(truth),
    }


# -- best response -----------------------------------------------------------------------------


def response_scores(p: SENParams, opp: Strategy) -> np.ndarray:
    """Predicted win probability of every strategy (enumeration order) against ``opp``."""
    mat = space_matrix()
    x = np.hstack([mat, np.broadcast_to(encode(opp), mat.shape)])
    return predict(p, x)


def best_response(p: SENParams, opp: Strategy) -> tuple[Strategy, float]:
    """Exhaustive argmax over the strategy space; ties go to the first enumerated strategy."""
    scores = response_scores(p, opp)
    top = scores.max()
    space = enumerate_space()
    # Batched and single-row arithmetic may differ in the last bits; settle
    # near-ties with the canonical single-pair forward.
    cands = np.flatnonzero(scores >= top - 1e-9)
    best_i, best_v = -1, -1.0
    for i in cands:
        v = forward(p, space[i], opp)
        if v > best_v:
            best_i, best_v = int(i), v
    return space[best_i], best_v


def strategies_from(records: Iterable[ResultRecord]) -> list[Strategy]:
    seen: dict[Strategy, None] = {}
    for r in records:
        seen.setdefault(r.a)
        seen.setdefault(r.b)
    return list(seen)
