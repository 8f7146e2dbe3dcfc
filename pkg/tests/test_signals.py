import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from oracles import grid_sup
from pathvisc.errors import HorizonMismatch, ThetaTildeInfinite
from pathvisc.signals import (
    Modulus,
    PathSignal,
    brownian_levels,
    delta_gamma_pm,
    delta_pm,
    linear_signal,
    sample_brownian,
    sup_distance,
    theta,
    theta_tilde,
    weighted_increment,
    zero_signal,
    zigzag_signal,
)


def test_path_signal_validation():
    with pytest.raises(ValueError):
        PathSignal([0.0, 1.0], [0.5, 1.0])
    with pytest.raises(ValueError):
        PathSignal([0.1, 1.0], [0.0, 1.0])
    with pytest.raises(ValueError):
        PathSignal([0.0, 0.5, 0.5], [0.0, 1.0, 1.0])


def test_evaluation_and_slopes():
    s = zigzag_signal(0.2, 2)
    assert s(0.0) == 0.0
    assert s(0.125) == pytest.approx(0.1)
    assert s.slope_at(0.0) == pytest.approx(0.8)
    assert s.slope_at(0.25) == pytest.approx(-0.8)
    assert s.is_breakpoint(0.5) and not s.is_breakpoint(0.4)
    assert s.total_variation() == pytest.approx(0.8)


def test_restrict_inside_segment():
    s = linear_signal(2.0, 1.0).restrict(0.3)
    assert s.T == pytest.approx(0.3)
    assert s(0.3) == pytest.approx(0.6)
    with pytest.raises(HorizonMismatch):
        linear_signal(1.0, 1.0).restrict(2.0)


def test_csv_roundtrip(tmp_path):
    s = sample_brownian(1.0, 5, 3)
    p = tmp_path / "s.csv"
    s.to_csv(p)
    r = PathSignal.from_csv(p)
    assert np.array_equal(r.breakpoints, s.breakpoints)
    assert np.array_equal(r.values, s.values)


def test_delta_pm_examples():
    assert delta_pm(linear_signal(), zero_signal()) == (1.0, 0.0)
    xi = zigzag_signal(0.3, 4)
    assert delta_pm(xi, xi) == (0.0, 0.0)
    assert delta_pm(zigzag_signal(0.05, 8), zero_signal()) == (pytest.approx(0.05), 0.0)


def test_delta_horizon_mismatch():
    with pytest.raises(HorizonMismatch):
        delta_pm(linear_signal(T=0.5), zero_signal(1.0), 1.0)


def test_delta_gamma_reduces_and_closed_form():
    xi, zeta = zigzag_signal(0.3, 3), linear_signal(0.1)
    assert delta_gamma_pm(xi, zeta, 0.0) == delta_pm(xi, zeta)
    # int_0^1 e^s ds
    dp, dm = delta_gamma_pm(linear_signal(), zero_signal(), 1.0)
    assert dp == pytest.approx(math.e - 1, rel=1e-14)
    assert dp == 1.7182818284590453
    assert dm == 0.0


def test_weighted_increment_matches_quadrature():
    from scipy.integrate import quad

    xi, zeta = zigzag_signal(0.4, 3), linear_signal(0.2)
    g, t = 2.5, 0.77
    cuts = np.union1d(xi.breakpoints, zeta.breakpoints)
    cuts = np.append(cuts[cuts < t], t)
    ref = 0.0
    for a, b in zip(cuts[:-1], cuts[1:]):
        m = 0.5 * (a + b)
        slope = xi.slope_at(m) - zeta.slope_at(m)
        ref += quad(lambda s: slope * np.exp(g * s), a, b, epsabs=1e-14)[0]
    assert weighted_increment(xi, zeta, g, t) == pytest.approx(ref, rel=1e-12)


def test_delta_gamma_overflow_is_inf():
    dp, _ = delta_gamma_pm(linear_signal(), zero_signal(), 1e6)
    assert dp == math.inf


def test_theta_examples():
    assert theta(Modulus(1.0), 2.0) == pytest.approx(0.25)
    assert theta(Modulus(0.0, 3.0), 1.0) == 0.0
    assert theta(Modulus(1.0, 1.0), 0.5) == pytest.approx(0.75)
    assert theta(Modulus(1.0, 1.0), 1e6) <= 1e-4


def test_theta_tilde_examples():
    assert theta_tilde(Modulus(1.0, 1.0), 4.0) == 0.0
    assert theta_tilde(Modulus(1.0, 1.0), 1.0) == pytest.approx(0.5)
    with pytest.raises(ThetaTildeInfinite):
        theta_tilde(Modulus(1.0), 1.0)


@settings(max_examples=40, deadline=None)
@given(L=st.floats(0.01, 5), M=st.floats(0.01, 5), lam=st.floats(0.05, 20))
def test_theta_matches_grid_search(L, M, lam):
    w = Modulus(L, M)
    rmax = 10 * max(M / L, L / lam)
    ref = grid_sup(lambda r: w(r) - lam * r * r / 2, rmax)
    dr = rmax / 100_000
    got = theta(w, lam)
    assert ref <= got + 1e-12
    assert got - ref <= 2 * L * dr + lam * dr * dr


@settings(max_examples=40, deadline=None)
@given(L=st.floats(0.01, 5), M=st.floats(0.01, 5), gam=st.floats(0.01, 20))
def test_theta_tilde_matches_grid_search(L, M, gam):
    w = Modulus(L, M)
    rmax = 10 * max(M / L, 1.0)
    ref = grid_sup(lambda r: w(r) - gam * r / 2, rmax)
    dr = rmax / 100_000
    got = theta_tilde(w, gam)
    assert ref <= got + 1e-12
    assert got - ref <= 2 * (L + gam) * dr


@settings(max_examples=30, deadline=None)
@given(L=st.floats(0.01, 5), M=st.floats(0.01, 5), a=st.floats(0.01, 10), b=st.floats(0.01, 10))
def test_theta_monotone(L, M, a, b):
    w = Modulus(L, M)
    lo, hi = sorted((a, b))
    assert theta(w, hi) <= theta(w, lo) + 1e-15
    assert theta_tilde(w, hi) <= theta_tilde(w, lo) + 1e-15


def test_modulus_meet_and_conversion():
    w = Modulus(1.0, 2.0).meet(Modulus(3.0, 0.5))
    assert (w.lipschitz_L, w.cap_M) == (1.0, 0.5)
    assert Modulus.from_euclidean(0.5, 1.0, 1.0).lipschitz_L == 1.0
    assert not Modulus(1.0).bounded and Modulus(1.0, 1.0).bounded


@settings(max_examples=25, deadline=None)
@given(seed=st.integers(0, 10_000), level=st.integers(0, 8))
def test_brownian_bridge_consistency(seed, level):
    a = sample_brownian(1.0, level, seed)
    b = sample_brownian(1.0, level + 1, seed)
    assert a(0.0) == 0.0
    assert np.array_equal(b.values[::2], a.values)


def test_brownian_level_difference_is_offsets():
    levels, offsets = brownian_levels(1.0, 6, 11)
    a = sample_brownian(1.0, 5, 11)
    b = sample_brownian(1.0, 6, 11)
    assert sup_distance(a, b) == pytest.approx(np.max(np.abs(offsets[6])), rel=1e-14)


def test_brownian_refinement_distance_decreases_on_average():
    d = np.array([[sup_distance(sample_brownian(1.0, n, s), sample_brownian(1.0, n + 4, s))
                   for n in range(0, 6)] for s in range(20)])
    mean = d.mean(axis=0)
    assert np.all(np.diff(mean) < 0)


def test_sup_distance_examples():
    xi = zigzag_signal(0.07, 5)
    assert sup_distance(xi, xi) == 0.0
    assert sup_distance(linear_signal(), zero_signal()) == 1.0
    assert sup_distance(xi, zero_signal()) == pytest.approx(0.07)


@settings(max_examples=30, deadline=None)
@given(seed=st.integers(0, 1000))
def test_delta_antisymmetry(seed):
    xi = sample_brownian(1.0, 4, seed)
    zeta = sample_brownian(1.0, 3, seed + 1)
    dp, dm = delta_pm(xi, zeta)
    assert dp >= 0 and dm >= 0
    assert delta_pm(zeta, xi) == (dm, dp)
