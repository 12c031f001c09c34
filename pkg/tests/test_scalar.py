import math

import mpmath
import numpy as np
import pytest
from hypothesis import assume, given, settings, strategies as st

from ubound.scalar import (BoundEstimate, BoundKind, Regime, ScalarParams, classify_regime,
                           companion_matrix, decay_envelope, historical_bounds, kernel_integral,
                           kernel_sign_changes, optimal_position_bound, optimal_velocity_bound,
                           position_kernel, quadrature_bound_oracle, velocity_kernel)

# values frozen from 30-digit mpmath evaluations of the closed forms
K_2_2 = 0.673916454469735229551776536782
POS_1_1 = 1.38958200024615310046

positive = st.floats(min_value=1e-4, max_value=1e6, allow_nan=False, allow_infinity=False)


def K(b, c):
    return optimal_velocity_bound(ScalarParams(b, c)).value


# --- parameters and regimes ------------------------------------------------------

@pytest.mark.parametrize("b,c", [(0, 1), (-1, 1), (1, 0), (1, -2), (math.nan, 1), (1, math.inf)])
def test_invalid_params_rejected(b, c):
    with pytest.raises(ValueError):
        ScalarParams(b, c)


def test_bound_estimate_validation():
    with pytest.raises(ValueError):
        BoundEstimate(-1.0, BoundKind.EMPIRICAL, "x")
    with pytest.raises(ValueError):
        BoundEstimate(1.0, BoundKind.EMPIRICAL, "x", tolerance=-1.0)
    assert float(BoundEstimate(0.5, BoundKind.EMPIRICAL, "x")) == 0.5


def test_classify_critical():
    r = classify_regime(ScalarParams(1, 2))
    assert r.regime is Regime.CRITICAL
    assert r.delta == 0.0
    assert r.first_zero == pytest.approx(1.0)


def test_classify_non_oscillatory():
    r = classify_regime(ScalarParams(2, 3))
    assert r.regime is Regime.NON_OSCILLATORY
    assert r.delta == pytest.approx(1 / 3, rel=1e-15)
    assert r.alpha == pytest.approx(2.0, rel=1e-15)
    assert r.beta == pytest.approx(1.0, rel=1e-15)
    assert sorted(np.roots([1, 3, 2])) == pytest.approx([-2.0, -1.0])
    assert r.first_zero == pytest.approx(math.log(2), rel=1e-14)


def test_classify_oscillatory():
    r = classify_regime(ScalarParams(2, 2))
    assert r.regime is Regime.OSCILLATORY
    assert (r.delta, r.gamma, r.omega) == pytest.approx((1.0, 1.0, 1.0), rel=1e-15)
    assert r.first_zero == pytest.approx(math.pi / 4, rel=1e-15)


def test_near_critical_is_critical():
    c = 2.0
    b = 1.0 * (1 + 1e-14)
    assert classify_regime(ScalarParams(b, c)).regime is Regime.CRITICAL
    assert classify_regime(ScalarParams(1.0 * (1 + 1e-9), c)).regime is Regime.OSCILLATORY
    assert classify_regime(ScalarParams(1.0 * (1 + 1e-9), c), tol=1e-8).regime is Regime.CRITICAL


@given(positive, positive)
def test_root_identities(b, c):
    r = classify_regime(ScalarParams(b, c))
    if r.regime is Regime.NON_OSCILLATORY:
        assert r.alpha * r.beta == pytest.approx(b, rel=1e-12)
        assert r.alpha + r.beta == pytest.approx(c, rel=1e-12)
        assert r.alpha >= r.beta > 0
        assert c * c > 4 * b
    elif r.regime is Regime.OSCILLATORY:
        assert r.gamma == pytest.approx(c / 2)
        assert r.omega == pytest.approx(math.sqrt(b - c * c / 4), rel=1e-9)
        assert c * c < 4 * b


# --- optimal constants -------------------------------------------------------------

def test_velocity_bound_examples():
    assert K(1, 2) == pytest.approx(2 / math.e, abs=1e-15)
    assert K(2, 3) == pytest.approx(0.5, abs=1e-15)
    assert K(2, 2) == pytest.approx(K_2_2, rel=1e-14)
    assert optimal_velocity_bound(ScalarParams(1, 2)).kind is BoundKind.EXACT_CLOSED_FORM


def test_velocity_bound_matches_mpmath_formula():
    mpmath.mp.dps = 30
    for b, c in [(3.0, 5.0), (0.01, 7.0), (5.0, 1.0), (1e4, 0.3)]:
        d = mpmath.sqrt(abs(1 - 4 * mpmath.mpf(b) / c ** 2))
        if c * c > 4 * b:
            ref = 2 / mpmath.sqrt(b) * ((1 - d) / (1 + d)) ** (1 / (2 * d))
        else:
            ref = 2 / mpmath.sqrt(b) * mpmath.exp(-mpmath.atan(d) / d) / (1 - mpmath.exp(-mpmath.pi / d))
        assert K(b, c) == pytest.approx(float(ref), rel=1e-13)


def test_position_bound_examples():
    assert optimal_position_bound(ScalarParams(1, 2)).value == 1.0
    assert optimal_position_bound(ScalarParams(1, 3)).value == 1.0
    assert optimal_position_bound(ScalarParams(1, 1)).value == pytest.approx(POS_1_1, rel=1e-14)
    assert POS_1_1 == pytest.approx(1 / math.tanh(math.pi / (2 * math.sqrt(3))), rel=1e-15)


def test_position_bound_matches_oracle():
    for b, c in [(1, 1), (2, 3), (1, 2), (5, 0.5)]:
        p = ScalarParams(b, c)
        est = quadrature_bound_oracle(p, abs_tol=1e-9, kernel="position")
        assert abs(est.value - optimal_position_bound(p).value) <= 1e-8


@pytest.mark.parametrize("b", [0.1, 1.0, 100.0])
@pytest.mark.parametrize("sign", [-1, 1])
def test_branch_continuity(b, sign):
    c = 2 * math.sqrt(b) + sign * 1e-6
    crit = 4 / (math.e * 2 * math.sqrt(b))
    assert abs(K(b, c) - crit) <= 1e-4 * crit


@given(positive, positive)
@settings(max_examples=300)
def test_envelope_property(b, c):
    k = K(b, c)
    assert 4 / (math.pi * c) < k < 2 / c


@given(positive, positive, st.floats(min_value=1.001, max_value=100))
def test_monotone_in_b_and_c(b, c, factor):
    # outside this band K equals its limit 4/(pi c) or 2/c to the last bit
    assume(1e-8 <= b / c ** 2 <= 1e8 and 1e-8 <= b * factor / c ** 2 <= 1e8)
    assume(1e-8 <= b / (c * factor) ** 2)
    assert K(b * factor, c) < K(b, c)
    assert K(b, c * factor) < K(b, c)


def test_limits():
    assert abs(K(1e8, 1) - 4 / math.pi) <= 1e-3 * 4 / math.pi
    assert abs(K(1e-8, 1) - 2) <= 1e-3 * 2


def test_extreme_ratios_stay_finite():
    # K coincides with a limit up to rounding here, so allow a few ulps
    for b, c in [(1e-12, 1e6), (1e12, 1e-6), (1.0, 1e-12)]:
        k = K(b, c)
        assert math.isfinite(k)
        assert 4 / (math.pi * c) * (1 - 1e-14) <= k <= 2 / c * (1 + 1e-14)


# --- kernels ------------------------------------------------------------------------

def test_kernels_at_zero(regimes):
    for p in regimes:
        assert velocity_kernel(p, 0.0) == pytest.approx(1.0, abs=1e-15)
        assert position_kernel(p, 0.0) == 0.0


def test_kernel_zero_examples():
    assert velocity_kernel(ScalarParams(2, 3), math.log(2)) == pytest.approx(0.0, abs=1e-15)
    assert velocity_kernel(ScalarParams(2, 2), math.pi / 4) == pytest.approx(0.0, abs=1e-15)
    assert position_kernel(ScalarParams(1, 2), 1.0) == pytest.approx(math.exp(-1), rel=1e-15)
    assert position_kernel(ScalarParams(2, 3), math.log(2)) == pytest.approx(0.25, rel=1e-14)


def test_kernel_is_derivative_of_position_kernel(regimes):
    s = np.linspace(0.01, 5, 50)
    for p in regimes:
        h = 1e-6 / max(1.0, p.c)
        fd = (position_kernel(p, s + h) - position_kernel(p, s - h)) / (2 * h)
        scale = np.max(np.abs(velocity_kernel(p, s))) + 1e-300
        assert np.max(np.abs(fd - velocity_kernel(p, s))) <= 1e-5 * max(scale, 1.0)


def test_kernel_vectorized():
    out = velocity_kernel(ScalarParams(1, 1), np.array([0.0, 1.0, 2.0]))
    assert out.shape == (3,)
    assert isinstance(velocity_kernel(ScalarParams(1, 1), 1.0), float)


def test_kernel_sign_changes_examples():
    assert kernel_sign_changes(classify_regime(ScalarParams(2, 3)), 10) == pytest.approx([math.log(2)])
    # critical kernel e^{-s}(1 - s) vanishes at s = 2/c = 1
    assert kernel_sign_changes(classify_regime(ScalarParams(1, 2)), 10) == pytest.approx([1.0])
    zs = kernel_sign_changes(classify_regime(ScalarParams(2, 2)), 10)
    assert zs == pytest.approx([math.pi / 4 + k * math.pi for k in range(3)])
    with pytest.raises(ValueError):
        kernel_sign_changes(classify_regime(ScalarParams(2, 2)), 0)


def test_sign_changes_are_kernel_zeros():
    p = ScalarParams(3, 0.7)
    for z in kernel_sign_changes(classify_regime(p), 20):
        assert abs(velocity_kernel(p, z)) < 1e-12
        assert velocity_kernel(p, z - 1e-6) * velocity_kernel(p, z + 1e-6) < 0


def test_kernel_integral_identities(regimes):
    for p in regimes:
        gi, _ = kernel_integral(p, "velocity", abs_tol=1e-11)
        Gi, _ = kernel_integral(p, "position", abs_tol=1e-11)
        assert abs(gi) <= 1e-9
        assert Gi == pytest.approx(1 / p.b, abs=1e-9)


# --- oracle ------------------------------------------------------------------------

def test_oracle_examples():
    est = quadrature_bound_oracle(ScalarParams(1, 2), abs_tol=1e-10)
    assert est.kind is BoundKind.QUADRATURE_ORACLE
    assert abs(est.value - 2 / math.e) <= 1e-10
    assert est.tolerance <= 1e-10
    assert abs(quadrature_bound_oracle(ScalarParams(2, 3)).value - 0.5) <= 1e-10
    assert abs(quadrature_bound_oracle(ScalarParams(1e6, 1), abs_tol=1e-8).value - 4 / math.pi) <= 1e-2


def test_oracle_against_mpmath_integral():
    mpmath.mp.dps = 25
    b, c = 2.0, 2.0
    w = mpmath.mpf(1)
    g = lambda s: abs(mpmath.exp(-s) * (mpmath.cos(w * s) - mpmath.sin(w * s)))
    pts = [0] + [mpmath.pi / 4 + k * mpmath.pi for k in range(40)]
    ref = mpmath.quad(g, pts) + mpmath.quad(g, [pts[-1], mpmath.inf])
    assert quadrature_bound_oracle(ScalarParams(b, c)).value == pytest.approx(float(ref), abs=1e-10)
    assert float(ref) == pytest.approx(K_2_2, abs=1e-12)


def test_oracle_rejects_bad_tolerance():
    with pytest.raises(ValueError):
        quadrature_bound_oracle(ScalarParams(1, 1), abs_tol=0)


# --- historical constants and decay envelope --------------------------------------

def test_historical_examples():
    h = historical_bounds(ScalarParams(1, 2))
    assert h["loud_v"] == 2 and h["fithar_v"] == 2 and h["loud_u"] == 2
    assert historical_bounds(ScalarParams(1, 1))["fithar_v"] == 3
    assert historical_bounds(ScalarParams(1, 1))["haraux_u"] == pytest.approx(POS_1_1)


@given(positive, positive)
def test_historical_dominate_optimal(b, c):
    p = ScalarParams(b, c)
    h = historical_bounds(p)
    k = K(b, c)
    assert h["loud_v"] >= k and h["fithar_v"] >= k and h["aloharaux_v"] >= k * (1 - 1e-12)
    assert h["loud_u"] >= h["haraux_u"] * (1 - 1e-12)
    assert h["fithar_u"] >= h["haraux_u"] * (1 - 1e-12)


def test_companion_matrix():
    assert np.array_equal(companion_matrix(ScalarParams(2, 3)), [[0, -1], [2, 3]])


@pytest.mark.parametrize("b,c,rate", [(2, 3, 1.0), (2, 2, 1.0), (1, 2, 0.999)])
def test_decay_envelope_rates(b, c, rate):
    env = decay_envelope(ScalarParams(b, c))
    assert env["rate"] == pytest.approx(rate, rel=1e-12)
    assert env["constant"] >= 1


def test_decay_envelope_dominates_flow():
    from scipy.linalg import expm
    for p in [ScalarParams(2, 3), ScalarParams(1, 1), ScalarParams(1, 2), ScalarParams(0.3, 5)]:
        env = decay_envelope(p)
        m = companion_matrix(p)
        for t in np.linspace(0, 30, 301):
            assert np.linalg.norm(expm(-m * t), 2) <= env["constant"] * math.exp(-env["rate"] * t) * (1 + 1e-9)
