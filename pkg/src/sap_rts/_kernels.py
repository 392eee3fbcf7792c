"""Hot numeric kernels with a numba path and a pure-numpy fallback.

The backend is picked once at import time. Set ``SAP_RTS_NUMBA=0`` to force
the numpy fallback (useful for debugging and for the benchmark comparison).
Both paths must return identical integer results; float results agree to
rounding.
"""

from __future__ import annotations

import os

import numpy as np

UNREACHABLE = np.int32(1 << 30)

_WANT_NUMBA = os.environ.get("SAP_RTS_NUMBA", "1").strip().lower() not in ("0", "false", "no", "off")

try:
    if not _WANT_NUMBA:
        raise ImportError("numba disabled by SAP_RTS_NUMBA")
    from numba import njit
except ImportError:  # pragma: no cover - depends on environment
    njit = None

BACKEND = "numba" if njit is not None else "numpy"


# -- BFS distance field -----------------------------------------------------


def _bfs_field_numpy(blocked: np.ndarray, sources: np.ndarray) -> np.ndarray:
    """Multi-source 4-connected BFS by repeated frontier dilation.

    ``sources`` cells get distance 0 even if blocked; blocked cells are never
    expanded into.
    """
    h, w = blocked.shape
    dist = np.full((h, w), UNREACHABLE, dtype=np.int32)
    frontier = sources.astype(bool).copy()
    dist[frontier] = 0
    free = ~blocked.astype(bool)
    seen = frontier.copy()
    d = 0
    while frontier.any():
        d += 1
        grown = np.zeros_like(frontier)
        grown[1:, :] |= frontier[:-1, :]
        grown[:-1, :] |= frontier[1:, :]
        grown[:, 1:] |= frontier[:, :-1]
        grown[:, :-1] |= frontier[:, 1:]
        frontier = grown & free & ~seen
        seen |= frontier
        dist[frontier] = d
    return dist


def _bfs_field_loop(blocked, sources):
    h, w = blocked.shape
    dist = np.full((h, w), UNREACHABLE, dtype=np.int32)
    qx = np.empty(h * w, dtype=np.int32)
    qy = np.empty(h * w, dtype=np.int32)
    head = 0
    tail = 0
    for y in range(h):
        for x in range(w):
            if sources[y, x]:
                dist[y, x] = 0
                qx[tail] = x
                qy[tail] = y
                tail += 1
    while head < tail:
        x = qx[head]
        y = qy[head]
        head += 1
        nd = dist[y, x] + 1
        for k in range(4):
            if k == 0:
                nx, ny = x, y - 1
            elif k == 1:
                nx, ny = x + 1, y
            elif k == 2:
                nx, ny = x, y + 1
            else:
                nx, ny = x - 1, y
            if 0 <= nx < w and 0 <= ny < h and not blocked[ny, nx] and dist[ny, nx] > nd:
                dist[ny, nx] = nd
                qx[tail] = nx
                qy[tail] = ny
                tail += 1
    return dist


# -- batched MLP forward ------------------------------------------------------


def _mlp_logits_numpy(x, w1, b1, w2, b2, w3, b3):
    h = np.maximum(x @ w1 + b1, 0.0)
    h = np.maximum(h @ w2 + b2, 0.0)
    return (h @ w3 + b3)[:, 0]


def _mlp_logits_loop(x, w1, b1, w2, b2, w3, b3):
    n = x.shape[0]
    d_in, h1 = w1.shape
    h2 = w2.shape[1]
    out = np.empty(n, dtype=np.float64)
    a1 = np.empty(h1, dtype=np.float64)
    a2 = np.empty(h2, dtype=np.float64)
    for i in range(n):
        for j in range(h1):
            s = b1[j]
            for k in range(d_in):
                s += x[i, k] * w1[k, j]
            a1[j] = s if s > 0.0 else 0.0
        for j in range(h2):
            s = b2[j]
            for k in range(h1):
                s += a1[k] * w2[k, j]
            a2[j] = s if s > 0.0 else 0.0
        s = b3[0]
        for k in range(h2):
            s += a2[k] * w3[k, 0]
        out[i] = s
    return out


# Past a handful of rows BLAS beats the compiled triple loop, so batches go to numpy.
MLP_LOOP_MAX_ROWS = 2

if njit is not None:
    bfs_field = njit(cache=True)(_bfs_field_loop)
    _mlp_logits_compiled = njit(cache=True)(_mlp_logits_loop)

    def mlp_logits(x, w1, b1, w2, b2, w3, b3):
        if x.shape[0] <= MLP_LOOP_MAX_ROWS:
            return _mlp_logits_compiled(x, w1, b1, w2, b2, w3, b3)
        return _mlp_logits_numpy(x, w1, b1, w2, b2, w3, b3)
else:
    bfs_field = _bfs_field_numpy
    mlp_logits = _mlp_logits_numpy

# Always-available references, used by the benchmark and the parity tests.
bfs_field_numpy = _bfs_field_numpy
mlp_logits_numpy = _mlp_logits_numpy
