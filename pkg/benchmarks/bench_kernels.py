"""Compare the numba kernels with the numpy fallbacks.

    python benchmarks/bench_kernels.py            # kernel micro-benchmarks
    python benchmarks/bench_kernels.py --matches 20  # plus whole matches under each backend

The whole-match timing runs each backend in a fresh interpreter, since the
backend is chosen at import time from SAP_RTS_NUMBA.
"""

from __future__ import annotations

import argparse
import json
import os
import subprocess
import sys
import timeit

import numpy as np

from sap_rts import _kernels as K


def _grid(size: int, seed: int = 0):
    rng = np.random.default_rng(seed)
    blocked = (rng.random((size, size)) < 0.25).astype(np.uint8)
    sources = np.zeros_like(blocked)
    sources[0, 0] = sources[size - 1, size - 1] = 1
    return blocked, sources


def _mlp(n: int, seed: int = 0):
    rng = np.random.default_rng(seed)
    shapes = ((n, 28), (28, 64), (64,), (64, 64), (64,), (64, 1), (1,))
    return [np.ascontiguousarray(rng.normal(size=s)) for s in shapes]


def best_of(fn, repeat: int = 5) -> float:
    number = max(1, int(0.05 / max(1e-7, timeit.timeit(fn, number=1))))
    return min(timeit.repeat(fn, number=number, repeat=repeat)) / number


def kernel_table() -> list[dict]:
    rows = []
    fast = K.BACKEND == "numba"
    for size in (8, 16, 32, 64):
        blocked, sources = _grid(size)
        K.bfs_field(blocked, sources)  # compile outside the timer
        t_np = best_of(lambda: K.bfs_field_numpy(blocked, sources))
        t_nb = best_of(lambda: K.bfs_field(blocked, sources)) if fast else float("nan")
        rows.append({"kernel": "bfs_field", "size": f"{size}x{size}", "numpy_us": t_np * 1e6, "numba_us": t_nb * 1e6})
    for n in (1, 4, 32, 594, 4096):
        args = _mlp(n)
        K.mlp_logits(*args)
        t_np = best_of(lambda: K.mlp_logits_numpy(*args))
        t_nb = best_of(lambda: K.mlp_logits(*args)) if fast else float("nan")
        rows.append({"kernel": "mlp_logits", "size": f"{n} rows", "numpy_us": t_np * 1e6, "numba_us": t_nb * 1e6})
    return rows


_MATCH_SNIPPET = """
import time
from sap_rts import _kernels
from sap_rts.harness.agents import FixedStrategyAgent
from sap_rts.harness.match import MatchConfig, run_match
from sap_rts.strategy import enumerate_space
sp = enumerate_space()
run_match(MatchConfig(seed=0), FixedStrategyAgent(sp[1]), FixedStrategyAgent(sp[2]))
t = time.perf_counter()
for i in range({n}):
    run_match(MatchConfig(seed=i), FixedStrategyAgent(sp[(7 * i) % len(sp)]), FixedStrategyAgent(sp[(13 * i + 5) % len(sp)]))
print(_kernels.BACKEND, (time.perf_counter() - t) / {n})
"""


def match_timing(n: int) -> dict:
    out = {}
    for flag in ("1", "0"):
        env = dict(os.environ, SAP_RTS_NUMBA=flag)
        res = subprocess.run([sys.executable, "-c", _MATCH_SNIPPET.format(n=n)], env=env,
                             capture_output=True, text=True, check=True)
        backend, secs = res.stdout.split()
        out[backend] = float(secs)
    return out


def main() -> None:
    ap = argparse.ArgumentParser(description=__doc__, formatter_class=argparse.RawDescriptionHelpFormatter)
    ap.add_argument("--matches", type=int, default=0, help="also time this many whole matches per backend")
    ap.add_argument("--json", help="write results to this file")
    args = ap.parse_args()

    rows = kernel_table()
    print(f"backend in this process: {K.BACKEND}")
    print(f"{'kernel':<11} {'size':>10} {'numpy us':>10} {'numba us':>10} {'speedup':>8}")
    for r in rows:
        speed = r["numpy_us"] / r["numba_us"] if r["numba_us"] == r["numba_us"] else float("nan")
        print(f"{r['kernel']:<11} {r['size']:>10} {r['numpy_us']:>10.2f} {r['numba_us']:>10.2f} {speed:>7.1f}x")
    result = {"kernels": rows}
    if args.matches:
        per = match_timing(args.matches)
        result["match_seconds"] = per
        print("seconds per match: " + ", ".join(f"{k} {v:.3f}" for k, v in per.items()))
    if args.json:
        with open(args.json, "w") as fh:
            json.dump(result, fh, indent=2)


if __name__ == "__main__":
    main()
