import os
import runpy
import subprocess
import sys

import numpy as np
import pytest
import scipy.sparse as sp

from rdpglink import _accel

ROOT = os.path.dirname(os.path.dirname(os.path.abspath(__file__)))


def backend_in_subprocess(value):
    env = dict(os.environ, RDPGLINK_BACKEND=value)
    out = subprocess.run([sys.executable, "-c", "from rdpglink import _accel; print(_accel.backend_name())"],
                         env=env, capture_output=True, text=True)
    return out.returncode, out.stdout.strip()


def test_env_var_selects_backend():
    assert backend_in_subprocess("numpy") == (0, "numpy")
    assert backend_in_subprocess("numba") == (0, "numba")
    code, _ = backend_in_subprocess("fortran")
    assert code != 0


def test_use_backend_restores_previous():
    before = _accel.backend_name()
    with _accel.use_backend("numpy"):
        assert _accel.backend_name() == "numpy"
    assert _accel.backend_name() == before
    with pytest.raises(ValueError):
        _accel.set_backend("cuda")


def test_matvec_backends_agree(rng):
    A = sp.random(300, 200, density=0.05, format="csr", random_state=2)
    x = rng.standard_normal(200)
    for name in _accel.BACKENDS:
        got = _accel.kernels(name).csr_matvec(A.indptr, A.indices, A.data, x)
        np.testing.assert_allclose(got, A @ x, atol=1e-12)


def test_benchmark_script_runs(capsys):
    path = os.path.join(ROOT, "benchmarks", "bench_kernels.py")
    mod = runpy.run_path(path)
    mod["main"](["--series", "20", "--n", "500", "--repeat", "1"])
    out = capsys.readouterr().out
    assert "numba" in out and "numpy" in out and "speed-up" in out
