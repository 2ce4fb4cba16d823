import os
import subprocess
import sys

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from malab import _kernels

needs_compiled = pytest.mark.skipif(_kernels.compiled_backend is None, reason="compiled kernels not built")


@needs_compiled
@settings(max_examples=50, deadline=None)
@given(st.floats(1.1, 6.0), st.integers(50, 2000), st.integers(5, 300))
def test_conjugate_sweep_backends_agree(p, num_t, num_s):
    t = np.linspace(0.0, 10.0, num_t)
    w = t ** p
    s = np.linspace(0.0, p * 10.0 ** (p - 1), num_s)
    vc, ac = _kernels.compiled_backend.conjugate_sweep(t, w, s)
    vp, ap = _kernels.python_backend.conjugate_sweep(t, w, s)
    np.testing.assert_allclose(vc, vp, rtol=1e-12, atol=1e-12)
    np.testing.assert_array_equal(np.asarray(ac), np.asarray(ap))


def test_conjugate_sweep_matches_power_closed_form():
    # (t^p)* (s) = (p-1) (s/p)^(p/(p-1)); discrete max underestimates by O(dt^2)
    p = 3.0
    t = np.linspace(0.0, 10.0, 20001)
    s = np.linspace(0.0, 100.0, 41)
    vals, _ = _kernels.conjugate_sweep(t, t ** p, s)
    exact = (p - 1) * (s / p) ** (p / (p - 1))
    assert np.all(vals <= exact + 1e-12)
    np.testing.assert_allclose(vals, exact, atol=1e-4)


def test_get_backend_names():
    assert _kernels.get_backend("python") is _kernels.python_backend
    with pytest.raises(ValueError):
        _kernels.get_backend("fortran")


def test_pure_python_env_forces_fallback():
    env = dict(os.environ, MALAB_PURE_PYTHON="1")
    out = subprocess.run([sys.executable, "-c", "import malab; print(malab.BACKEND)"],
                         capture_output=True, text=True, env=env, check=True)
    assert out.stdout.strip() == "python"
