import os
import subprocess
import sys
from pathlib import Path

import numpy as np

from suphun import _jit, _simplex

SCRIPT = """
import numpy as np
from suphun import _jit, _simplex
rng = np.random.default_rng(0)
A = rng.uniform(0.1, 1.0, size=(8, 3))
N = rng.integers(0, 20, size=(40, 8)).astype(float)
C, F, status = _simplex.fit_counts_batch(A, N, 1e-9)
print(_jit.NUMBA_ENABLED)
print(repr(F.tolist()))
"""


def _run(disable):
    env = dict(os.environ)
    env.pop("SUPHUN_DISABLE_NUMBA", None)
    if disable:
        env["SUPHUN_DISABLE_NUMBA"] = "1"
    out = subprocess.run([sys.executable, "-c", SCRIPT], env=env, capture_output=True, text=True, check=True).stdout
    flag, values = out.strip().splitlines()
    return flag == "True", np.array(eval(values))


def test_env_flag_selects_fallback():
    enabled, jit_vals = _run(disable=False)
    disabled, py_vals = _run(disable=True)
    assert enabled and not disabled
    np.testing.assert_allclose(py_vals, jit_vals, atol=1e-9)


def test_py_func_is_always_available():
    assert callable(_simplex.minimax_lp.py_func)
    assert _jit.maybe_njit(lambda x: x + 1).py_func(1) == 2


def test_benchmark_paths_agree(tmp_path):
    bench = Path(__file__).resolve().parents[1] / "benchmarks" / "bench_kernels.py"
    res = subprocess.run(
        [sys.executable, str(bench), "--cells", "50", "--repeat", "1", "--tmp", str(tmp_path)],
        capture_output=True, text=True,
    )
    assert res.returncode == 0, res.stdout + res.stderr
    assert "speedup" in res.stdout
