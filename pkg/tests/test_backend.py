import os
import subprocess
import sys

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from pathvisc import _backend
from pathvisc import geometry as G

fb = _backend.fallback
cc = _backend.compiled
needs_compiled = pytest.mark.skipif(cc is None, reason="compiled extension not built")


def test_backend_selected():
    assert _backend.BACKEND in ("compiled", "python")
    assert _backend.kernels is (cc if cc is not None else fb)


def test_environment_forces_fallback():
    env = dict(os.environ, PATHVISC_BACKEND="python")
    r = subprocess.run([sys.executable, "-c", "import pathvisc; print(pathvisc.BACKEND)"],
                       env=env, capture_output=True, text=True)
    assert r.stdout.strip() == "python"


@needs_compiled
@settings(max_examples=20, deadline=None)
@given(seed=st.integers(0, 10_000), tangent=st.booleans())
def test_diag_flow_agrees(seed, tangent):
    rng = np.random.default_rng(seed)
    fields = [G.ScalarField(2, rng.uniform(-0.2, 0.2), tuple(rng.uniform(-0.05, 0.05, 2)),
                            ((rng.uniform(-0.3, 0.3), tuple(rng.integers(0, 3, 2).astype(float)),
                              rng.uniform(0, 6)),)) for _ in range(2)]
    params = G.DiagonalMetric(fields).kernel_params
    x, p = rng.uniform(0, 6, 2), rng.uniform(-1, 1, 2)
    a = fb.diag_flow(*params, x, p, 64, tangent)
    b = cc.diag_flow(*params, x, p, 64, tangent)
    for u, v in zip(a[:4], b[:4]):
        assert np.allclose(u, v, rtol=1e-12, atol=1e-13, equal_nan=True)
    assert abs(a[4] - b[4]) < 1e-12


@needs_compiled
@settings(max_examples=20, deadline=None)
@given(seed=st.integers(0, 10_000), slope=st.floats(-2, 2), pb=st.sampled_from([0.0, 5.0]))
def test_lf_1d_agrees(seed, slope, pb):
    rng = np.random.default_rng(seed)
    n = 50
    u = rng.standard_normal(n)
    g = rng.uniform(0.5, 2.0, n)
    a, na = fb.lf_advance_1d(u, g, slope, 0.1, 0.1, 0.9, 100_000, pb)
    b, nb = cc.lf_advance_1d(u, g, slope, 0.1, 0.1, 0.9, 100_000, pb)
    assert na == nb
    assert np.allclose(a, b, rtol=1e-12, atol=1e-12)


@needs_compiled
@settings(max_examples=15, deadline=None)
@given(seed=st.integers(0, 10_000), slope=st.floats(-2, 2))
def test_lf_2d_agrees(seed, slope):
    rng = np.random.default_rng(seed)
    n = 12
    u = rng.standard_normal((n, n))
    g11, g22 = rng.uniform(0.5, 2.0, (2, n, n))
    g12 = rng.uniform(-0.2, 0.2, (n, n))
    a, na = fb.lf_advance_2d(u, g11, g12, g22, slope, 0.05, 0.3, 0.9, 100_000)
    b, nb = cc.lf_advance_2d(u, g11, g12, g22, slope, 0.05, 0.3, 0.9, 100_000)
    assert na == nb
    assert np.allclose(a, b, rtol=1e-12, atol=1e-12)


@needs_compiled
def test_substep_cap_flag_agrees():
    u = np.sin(np.linspace(0, 6, 100))
    g = np.ones(100)
    assert fb.lf_advance_1d(u, g, 1.0, 10.0, 0.06, 0.9, 2)[1] == -1
    assert cc.lf_advance_1d(u, g, 1.0, 10.0, 0.06, 0.9, 2)[1] == -1


@needs_compiled
@settings(max_examples=15, deadline=None)
@given(seed=st.integers(0, 10_000), s=st.floats(0.01, 2.0))
def test_hopf_lax_agrees(seed, s):
    u = np.random.default_rng(seed).standard_normal(64)
    assert np.allclose(fb.hopf_lax_1d(u, 0.1, 6.4, s), cc.hopf_lax_1d(u, 0.1, 6.4, s), rtol=1e-13, atol=1e-13)
