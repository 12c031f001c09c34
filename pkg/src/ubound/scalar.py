"""Scalar damped oscillator u'' + c u' + b u = f: regimes, kernels, optimal constants.

Closed forms live next to an independent quadrature route
(:func:`quadrature_bound_oracle`) so the two can be checked against each other.
"""
from dataclasses import dataclass
from enum import Enum
import math

import numpy as np
from scipy.linalg import expm

from .quadrature import integrate_panels, QuadratureBudgetError

CRITICAL_TOL = 1e-12
CRITICAL_RATE_MARGIN = 1e-3
ENVELOPE_SAFETY = 1.1


class Regime(Enum):
    NON_OSCILLATORY = "non-oscillatory"
    CRITICAL = "critical"
    OSCILLATORY = "oscillatory"


class BoundKind(Enum):
    EXACT_CLOSED_FORM = "exact-closed-form"
    QUADRATURE_ORACLE = "quadrature-oracle"
    GUARANTEED_UPPER = "guaranteed-upper"
    GUARANTEED_LOWER = "guaranteed-lower"
    EMPIRICAL = "empirical"


@dataclass(frozen=True)
class BoundEstimate:
    """A nonnegative constant with how it was obtained."""

    value: float
    kind: BoundKind
    provenance: str
    tolerance: float | None = None

    def __post_init__(self):
        if not self.value >= 0:
            raise ValueError(f"bound value must be nonnegative, got {self.value}")
        if self.tolerance is not None and not self.tolerance >= 0:
            raise ValueError(f"tolerance must be nonnegative, got {self.tolerance}")

    def __float__(self):
        return float(self.value)


@dataclass(frozen=True)
class ScalarParams:
    b: float
    c: float

    def __post_init__(self):
        if not (math.isfinite(self.b) and self.b > 0):
            raise ValueError(f"stiffness b must be positive, got b={self.b}")
        if not (math.isfinite(self.c) and self.c > 0):
            raise ValueError(f"damping c must be positive, got c={self.c}")


@dataclass(frozen=True)
class RegimeData:
    """Regime of x^2 + c x + b = 0 and the derived root data.

    ``alpha``/``beta`` are the decay rates of the non-oscillatory case (for the
    critical case both equal c/2); ``gamma``/``omega`` are the real and
    imaginary root parts of the oscillatory case. ``first_zero`` holds the
    sign-change datum of the velocity kernel: s0 (non-oscillatory), 2/c
    (critical), or y0 = arctan(delta) (oscillatory, a phase, not a time).
    """

    b: float
    c: float
    regime: Regime
    delta: float
    alpha: float = math.nan
    beta: float = math.nan
    gamma: float = math.nan
    omega: float = math.nan
    first_zero: float = math.nan

    @property
    def half_gap(self):
        """(alpha - beta)/2 in the non-oscillatory case."""
        return 0.5 * math.sqrt(max(self.c * self.c - 4.0 * self.b, 0.0))


def classify_regime(p, tol=CRITICAL_TOL):
    """Classify ``p`` by the sign of c^2 - 4b; near-zero discriminants are critical."""
    if tol < 0:
        raise ValueError("tol must be nonnegative")
    b, c = p.b, p.c
    disc = c * c - 4.0 * b
    if abs(disc) <= tol * c * c:
        return RegimeData(b, c, Regime.CRITICAL, 0.0, alpha=c / 2, beta=c / 2,
                          gamma=c / 2, omega=0.0, first_zero=2.0 / c)
    if disc > 0:
        sq = math.sqrt(disc)
        alpha = 0.5 * (c + sq)
        beta = 2.0 * b / (c + sq)  # stable form of (c - sq)/2
        delta = sq / c
        s0 = _log_ratio_over_gap(alpha, beta, delta, c)
        return RegimeData(b, c, Regime.NON_OSCILLATORY, delta, alpha=alpha,
                          beta=beta, first_zero=s0)
    omega = math.sqrt(b - 0.25 * c * c)
    delta = 2.0 * omega / c
    return RegimeData(b, c, Regime.OSCILLATORY, delta, gamma=0.5 * c,
                      omega=omega, first_zero=math.atan(delta))


def _log_ratio_over_gap(alpha, beta, delta, c):
    # log(alpha/beta)/(alpha-beta) = 2 atanh(delta)/(c delta)
    if delta < 0.5:
        return 2.0 * math.atanh(delta) / (c * delta)
    return (math.log(alpha) - math.log(beta)) / (alpha - beta)


def _as_regime(r):
    return classify_regime(r) if isinstance(r, ScalarParams) else r


def optimal_velocity_bound(p):
    """Optimal constant K(b, c) for velocity bounds, in closed form."""
    r = classify_regime(p)
    b, c, d = r.b, r.c, r.delta
    if r.regime is Regime.CRITICAL:
        k = 4.0 / (math.e * c)
    elif r.regime is Regime.NON_OSCILLATORY:
        # ((1-d)/(1+d))^(1/(2d)) = exp(-atanh(d)/d); beta/alpha form avoids 1-d cancellation
        if d < 0.5:
            log_factor = -math.atanh(d) / d
        else:
            log_factor = (math.log(r.beta) - math.log(r.alpha)) / (2.0 * d)
        k = 2.0 / math.sqrt(b) * math.exp(log_factor)
    else:
        k = (2.0 / math.sqrt(b)) * math.exp(-math.atan(d) / d) / (-math.expm1(-math.pi / d))
    return BoundEstimate(k, BoundKind.EXACT_CLOSED_FORM, "scalar optimal velocity bound K(b,c)")


def optimal_position_bound(p):
    """Optimal position constant: coth(c pi / (2 sqrt(4b - c^2)))/b, or 1/b when c >= 2 sqrt(b)."""
    r = classify_regime(p)
    if r.regime is Regime.OSCILLATORY:
        x = p.c * math.pi / (2.0 * math.sqrt(4.0 * p.b - p.c * p.c))
        value = 1.0 / (p.b * math.tanh(x))
    else:
        value = 1.0 / p.b
    return BoundEstimate(value, BoundKind.EXACT_CLOSED_FORM, "scalar optimal position bound")


def velocity_kernel(r, s):
    """Impulse response of u' (derivative of :func:`position_kernel`); g(0) = 1."""
    r = _as_regime(r)
    s = np.asarray(s, dtype=float)
    if r.regime is Regime.CRITICAL:
        h = 0.5 * r.c * s
        out = np.exp(-h) * (1.0 - h)
    elif r.regime is Regime.NON_OSCILLATORY:
        q = r.half_gap
        # (a e^{-a s} - b e^{-b s})/(a - b) written around the slow rate
        em = np.expm1(-2.0 * q * s)
        out = np.exp(-r.beta * s) * (0.5 * r.c * em / (2.0 * q) + 0.5 * (2.0 + em))
    else:
        ws = r.omega * s
        out = np.exp(-r.gamma * s) * (np.cos(ws) - (r.gamma / r.omega) * np.sin(ws))
    return out if out.ndim else float(out)


def position_kernel(r, s):
    """Impulse response of u; G(0) = 0 and its integral over [0, inf) is 1/b."""
    r = _as_regime(r)
    s = np.asarray(s, dtype=float)
    if r.regime is Regime.CRITICAL:
        out = s * np.exp(-0.5 * r.c * s)
    elif r.regime is Regime.NON_OSCILLATORY:
        q = r.half_gap
        out = -np.exp(-r.beta * s) * np.expm1(-2.0 * q * s) / (2.0 * q)
    else:
        out = np.exp(-r.gamma * s) * np.sin(r.omega * s) / r.omega
    return out if out.ndim else float(out)


def kernel_sign_changes(r, horizon, kernel="velocity"):
    """Sign-change times of the velocity (or position) kernel in [0, horizon]."""
    r = _as_regime(r)
    if not horizon > 0:
        raise ValueError("horizon must be positive")
    if r.regime is not Regime.OSCILLATORY:
        if kernel == "position":
            return []
        return [r.first_zero] if r.first_zero <= horizon else []
    phase0 = r.first_zero if kernel == "velocity" else math.pi
    if phase0 / r.omega > horizon:
        return []
    k_max = int(math.floor((horizon * r.omega - phase0) / math.pi))
    zeros = [(phase0 + k * math.pi) / r.omega for k in range(k_max + 1)]
    return [z for z in zeros if z <= horizon]


def historical_bounds(p):
    """Earlier published ultimate-bound constants, for comparison with K(b, c).

    Keys: ``loud_u``, ``loud_v`` (Loud), ``fithar_u``, ``fithar_v``
    (Fitzgibbon-Haraux), ``haraux_u`` (optimal position constant) and
    ``aloharaux_v`` (Aloui-Haraux abstract bound specialised to the scalar case).
    """
    b, c = p.b, p.c
    sb = math.sqrt(b)
    return {
        "loud_u": min(1.0 / b + 4.0 / c ** 2, 1.0 / b + 4.0 / (c * sb)),
        "loud_v": 4.0 / c,
        "fithar_u": max(1.0 / b, 2.0 / (c * sb)),
        "fithar_v": (2.0 / c + 1.0 / sb) if c < 2.0 * sb else 2.0 / sb,
        "haraux_u": optimal_position_bound(p).value,
        "aloharaux_v": max(math.sqrt(3.0) / sb, 3.0 / (c * math.sqrt(2.0))),
    }


def companion_matrix(p):
    """Generator of the first-order system U' + M U = (0, f) with U = (u, u')."""
    return np.array([[0.0, -1.0], [p.b, p.c]])


def decay_envelope(p, samples=4000):
    """Exponential majorant ||exp(-M t)|| <= C exp(-rate t) of the homogeneous flow.

    The rate is the slow decay rate (beta, c/2, or c/2 shaved by a small
    margin in the critical case); C is the sampled maximum of
    ``||exp(-M t)|| exp(rate t)`` times a 1.1 safety factor.
    """
    r = classify_regime(p)
    m = companion_matrix(p)
    if r.regime is Regime.OSCILLATORY:
        rate = r.gamma
        # e^{rate t} S(t) is 2 pi/omega periodic
        t = np.linspace(0.0, 2.0 * math.pi / r.omega, samples)
    else:
        if r.regime is Regime.CRITICAL:
            rate = 0.5 * p.c * (1.0 - CRITICAL_RATE_MARGIN)
            slow = 0.5 * p.c * CRITICAL_RATE_MARGIN
        else:
            rate = r.beta
            slow = 2.0 * r.half_gap
        t_max = 40.0 / min(slow, rate)
        t = np.concatenate([[0.0], np.geomspace(1e-6 / p.c, t_max, samples - 1)])
    shifted = rate * np.eye(2) - m
    peak = 1.0
    for ti in t:
        peak = max(peak, np.linalg.norm(expm(shifted * ti), 2))
    return {"rate": rate, "constant": ENVELOPE_SAFETY * peak}


# --- quadrature oracle --------------------------------------------------------

def _tail_bound(r, kernel, s):
    """Rigorous bound on the integral of |kernel| over [s, inf)."""
    if r.regime is Regime.CRITICAL:
        a = 0.5 * r.c
        if kernel == "velocity":
            return s * math.exp(-a * s) if s >= 2.0 / r.c else math.inf
        return math.exp(-a * s) * (s / a + 1.0 / a ** 2)
    if r.regime is Regime.NON_OSCILLATORY:
        gap = 2.0 * r.half_gap
        e = math.exp(-r.beta * s)
        if kernel == "velocity":
            # tail equals G(s) past s0, and G(s) <= min(s, 1/gap) e^{-beta s}
            return e * min(s, 1.0 / gap) if s >= r.first_zero else math.inf
        return e * min(1.0 / (r.beta * gap), s / r.beta + 1.0 / r.beta ** 2)
    amp = math.hypot(1.0, r.gamma / r.omega) if kernel == "velocity" else 1.0 / r.omega
    return amp * math.exp(-r.gamma * s) / r.gamma


def _truncation_point(r, kernel, budget):
    start = r.first_zero if r.regime is not Regime.OSCILLATORY else 0.0
    slow = r.beta if r.regime is Regime.NON_OSCILLATORY else 0.5 * r.c
    s = max(start, 1.0 / slow)
    while _tail_bound(r, kernel, s) > budget:
        s *= 1.25
    lo = max(start, s / 1.25)
    for _ in range(40):
        mid = 0.5 * (lo + s)
        if _tail_bound(r, kernel, mid) > budget:
            lo = mid
        else:
            s = mid
    return s


def _monotone_panels(lo, hi, scale):
    """Split [lo, hi] geometrically below ``scale`` and uniformly above it."""
    pts = [lo, hi]
    if hi > lo:
        first = max(lo, hi * 1e-12)
        if first < min(scale, hi):
            pts += list(np.geomspace(first, min(scale, hi), 40))
        if hi > scale:
            pts += list(np.linspace(max(lo, scale), hi, int(min(hi / scale, 4000)) + 2))
    pts = np.unique(np.clip(pts, lo, hi))
    return pts[:-1], pts[1:]


def _oracle_integrand(regime, kernel, c_a, c_b):
    # c_a, c_b carry per-regime constants; returns f(x, scale, phase)
    if regime is Regime.OSCILLATORY:
        gamma, omega = c_a, c_b
        ratio = gamma / omega

        if kernel == "velocity":
            def f(x, scale, phase):
                th = phase + omega * x
                return scale * np.exp(-gamma * x) * (np.cos(th) - ratio * np.sin(th))
        else:
            def f(x, scale, phase):
                return scale * np.exp(-gamma * x) * np.sin(phase + omega * x) / omega
        return f
    return None


def _kernel_integral(p, kernel, absolute, abs_tol, max_panels):
    r = classify_regime(p)
    # the tail bound is nearly sharp, so a tight truncation avoids a visible bias
    s_end = _truncation_point(r, kernel, 1e-3 * abs_tol)
    tail = _tail_bound(r, kernel, s_end)
    quad_tol = 0.5 * abs_tol
    if r.regime is Regime.OSCILLATORY:
        # panels between consecutive kernel zeros; x is the offset from the
        # panel's zero, phase is reduced mod pi so trig arguments stay small
        om, gm = r.omega, r.gamma
        phase0 = r.first_zero if kernel == "velocity" else 0.0
        # zeros at (phase0 + k pi)/omega; for G the k = 0 zero is s = 0
        n_zeros = max(int(math.floor((s_end * om - phase0) / math.pi)) + 1, 1)
        k = np.arange(n_zeros)
        starts = (phase0 + k * math.pi) / om
        f = _oracle_integrand(r.regime, kernel, gm, om)
        g = (lambda x, sc, ph: np.abs(f(x, sc, ph))) if absolute else f
        # interior panels share one local shape and differ only by the factor
        # exp(-gamma * start) (times (-1)^k when signed); integrate the shape
        # once and weight it by the summed factors
        weights = np.exp(-gm * starts[:-1]) if n_zeros > 1 else np.array([])
        if not absolute:
            weights = weights * (-1.0) ** k[:-1]
        lo = [0.0, 0.0]
        hi = [math.pi / om, max(s_end - starts[-1], 0.0)]
        scale = [1.0, math.exp(-gm * starts[-1]) * (1.0 if absolute else (-1.0) ** k[-1])]
        phase = [phase0, phase0]
        if kernel == "velocity":
            lo.append(0.0)
            hi.append(min(r.first_zero / om, s_end))
            scale.append(1.0)
            phase.append(0.0)
        w_sum = math.fsum(np.abs(weights)) if weights.size else 0.0
        share = quad_tol / (2.0 * max(w_sum, 1.0))
        shape, shape_err, _ = integrate_panels(g, lo[:1], hi[:1], (scale[:1], phase[:1]),
                                               tol=share, max_panels=max_panels)
        rest, rest_err, _ = integrate_panels(g, lo[1:], hi[1:], (scale[1:], phase[1:]),
                                             tol=0.5 * quad_tol, max_panels=max_panels)
        value = shape * math.fsum(weights) + rest if weights.size else rest
        err = shape_err * w_sum + rest_err
    else:
        kern = velocity_kernel if kernel == "velocity" else position_kernel
        f = (lambda x: np.abs(kern(r, x))) if absolute else (lambda x: kern(r, x))
        slow = r.beta if r.regime is Regime.NON_OSCILLATORY else 0.5 * r.c
        fast = r.alpha if r.regime is Regime.NON_OSCILLATORY else 0.5 * r.c
        if kernel == "velocity":
            z = r.first_zero
            lo1, hi1 = _monotone_panels(0.0, z, 1.0 / fast)
            lo2, hi2 = _monotone_panels(0.0, s_end - z, 1.0 / slow)
            lo = np.concatenate([lo1, z + lo2])
            hi = np.concatenate([hi1, z + hi2])
        else:
            lo, hi = _monotone_panels(0.0, s_end, 1.0 / slow)
        value, err, _ = integrate_panels(f, lo, hi, tol=quad_tol, max_panels=max_panels)
    return value, err + tail


def quadrature_bound_oracle(p, abs_tol=1e-10, kernel="velocity", max_panels=4_000_000):
    """Integral of |kernel| over [0, inf) by adaptive quadrature.

    Panels are split at the kernel's sign changes, and the integral is
    truncated where an explicit exponential tail bound drops below a
    thousandth of the tolerance. The reported tolerance is the quadrature error estimate plus
    that tail bound.
    """
    if not abs_tol > 0:
        raise ValueError("abs_tol must be positive")
    value, tol = _kernel_integral(p, kernel, True, abs_tol, max_panels)
    if tol > abs_tol:
        raise QuadratureBudgetError(f"reached {tol:.3e}, requested {abs_tol:.3e}")
    name = "velocity" if kernel == "velocity" else "position"
    return BoundEstimate(value, BoundKind.QUADRATURE_ORACLE,
                         f"adaptive G7/K15 quadrature of |{name} kernel|", tolerance=tol)


def kernel_integral(p, kernel="velocity", abs_tol=1e-10, max_panels=4_000_000):
    """Signed integral of a kernel over [0, inf); returns (value, error bound)."""
    return _kernel_integral(p, kernel, False, abs_tol, max_panels)
