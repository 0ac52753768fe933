"""Time the batched cell LP kernel with numba on and off.

Each path runs in its own interpreter because the switch is read at import.

    python3 benchmarks/bench_kernels.py [--cells 2000] [--l 2] [--r 1] [--repeat 3]
"""
import argparse
import json
import os
import subprocess
import sys

import numpy as np

WORKER = r"""
import json, sys, time
import numpy as np
from suphun import _jit
from suphun.minimax import fit_counts

cells, l, r, repeat, seed = (int(v) for v in sys.argv[1:6])
d = 1
S = 2 ** (l * d)
rng = np.random.default_rng(seed)
counts = rng.poisson(rng.uniform(0.5, 30, size=(cells, 1)), size=(cells, S)).astype(float)
n = int(counts.sum())
fit_counts(counts[:2], l, (r,), n, 1.0 / cells)  # compile / warm up
times = []
for _ in range(repeat):
    t0 = time.perf_counter()
    C, F = fit_counts(counts, l, (r,), n, 1.0 / cells)
    times.append(time.perf_counter() - t0)
np.save(sys.argv[6], np.concatenate([C.reshape(len(C), -1), F[:, None]], axis=1))
print(json.dumps({"numba": _jit.NUMBA_ENABLED, "best_s": min(times)}))
"""


def run(disabled, args, out):
    env = dict(os.environ)
    env.pop("SUPHUN_DISABLE_NUMBA", None)
    if disabled:
        env["SUPHUN_DISABLE_NUMBA"] = "1"
    argv = [sys.executable, "-c", WORKER, str(args.cells), str(args.l), str(args.r), str(args.repeat), str(args.seed), out]
    res = subprocess.run(argv, env=env, check=True, capture_output=True, text=True)
    return json.loads(res.stdout.strip().splitlines()[-1])


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--cells", type=int, default=2000)
    ap.add_argument("--l", type=int, default=2)
    ap.add_argument("--r", type=int, default=1)
    ap.add_argument("--repeat", type=int, default=3)
    ap.add_argument("--seed", type=int, default=1)
    ap.add_argument("--tmp", default=".")
    args = ap.parse_args(argv)
    paths = [os.path.join(args.tmp, f"bench_{tag}.npy") for tag in ("jit", "py")]
    fast = run(False, args, paths[0])
    slow = run(True, args, paths[1])
    a, b = (np.load(p) for p in paths)
    for p in paths:
        os.remove(p)
    diff = float(np.abs(a - b).max())
    print(f"cells={args.cells} l={args.l} r={args.r}")
    print(f"numba   : {fast['best_s']:.4f} s (enabled={fast['numba']})")
    print(f"fallback: {slow['best_s']:.4f} s (enabled={slow['numba']})")
    print(f"speedup : {slow['best_s'] / fast['best_s']:.1f}x   max |diff| = {diff:.2e}")
    return 0 if diff <= 1e-9 else 1


if __name__ == "__main__":
    raise SystemExit(main())
