"""Modal trajectories of u'' + c u' + A u = f for diagonal A.

Every mode obeys u_i'' + c u_i' + lambda_i u_i = f_i. On a segment where f_i
is the constant phi, y = u - phi/lambda evolves through the exact propagator

    [[g + c G, G], [-lambda G, g]]

built from the position kernel G (G(0) = 0, G'(0) = 1) and its derivative g.
"""
from dataclasses import dataclass, field
import math

import numpy as np

from .scalar import CRITICAL_TOL
from .signals import ForcingSignal


class SimulationError(RuntimeError):
    pass


@dataclass
class ModalState:
    u: np.ndarray
    v: np.ndarray
    t: float = 0.0

    def __post_init__(self):
        self.u = np.atleast_1d(np.asarray(self.u, dtype=float)).copy()
        self.v = np.atleast_1d(np.asarray(self.v, dtype=float)).copy()
        if self.u.shape != self.v.shape:
            raise ValueError("u and v must have the same number of modes")

    @classmethod
    def zeros(cls, n, t=0.0):
        return cls(np.zeros(n), np.zeros(n), t)

    @property
    def modes(self):
        return self.u.size


@dataclass
class Trajectory:
    times: np.ndarray
    u: np.ndarray  # (samples, modes)
    v: np.ndarray
    method: str
    step: float | None = None
    spectrum: np.ndarray | None = None
    c: float | None = None
    forcing: object = field(default=None, repr=False)

    def state(self, k):
        return ModalState(self.u[k], self.v[k], float(self.times[k]))

    @property
    def final(self):
        return self.state(-1)

    def to_csv(self, path):
        n = self.u.shape[1]
        header = ["time"] + [f"{a}{i + 1}" for i in range(n) for a in ("u", "v")]
        with open(path, "w") as fh:
            fh.write(",".join(header) + "\n")
            for k, t in enumerate(self.times):
                cells = [format(t, ".17g")]
                for i in range(n):
                    cells += [format(self.u[k, i], ".17g"), format(self.v[k, i], ".17g")]
                fh.write(",".join(cells) + "\n")


def modal_kernels(lam, c, t):
    """Position kernel G and velocity kernel g for each mode, broadcast over ``t``.

    Near-critical modes (|c^2 - 4 lambda| <= 1e-12 c^2) use the critical forms.
    """
    lam = np.asarray(lam, dtype=float)
    t = np.asarray(t, dtype=float)
    lam, t = np.broadcast_arrays(lam, t)
    disc = c * c - 4.0 * lam
    crit = np.abs(disc) <= CRITICAL_TOL * c * c
    over = (disc > 0) & ~crit
    under = (disc < 0) & ~crit
    G = np.empty(t.shape)
    g = np.empty(t.shape)
    if crit.any():
        tc = t[crit]
        e = np.exp(-0.5 * c * tc)
        G[crit] = tc * e
        g[crit] = e * (1.0 - 0.5 * c * tc)
    if over.any():
        q = 0.5 * np.sqrt(disc[over])
        beta = 2.0 * lam[over] / (c + 2.0 * q)
        to = t[over]
        em = np.expm1(-2.0 * q * to)
        e = np.exp(-beta * to)
        G[over] = -e * em / (2.0 * q)
        g[over] = e * (0.5 * c * em / (2.0 * q) + 0.5 * (2.0 + em))
    if under.any():
        w = 0.5 * np.sqrt(-disc[under])
        tu = t[under]
        e = np.exp(-0.5 * c * tu)
        s, co = np.sin(w * tu), np.cos(w * tu)
        G[under] = e * s / w
        g[under] = e * (co - 0.5 * c / w * s)
    return G, g


def _propagate(lam, c, u, v, phi, h):
    """Exact state after time ``h`` of constant forcing ``phi`` (all per mode)."""
    G, g = modal_kernels(lam, c, h)
    y = u - phi / lam
    u_new = phi / lam + y * (g + c * G) + v * G
    v_new = -lam * y * G + v * g
    return u_new, v_new


def _check(spectrum, f):
    lam = np.atleast_1d(np.asarray(spectrum, dtype=float))
    if np.any(lam <= 0):
        raise ValueError("spectrum must be positive")
    if f is not None and f.channels != lam.size:
        raise ValueError(f"forcing has {f.channels} channels but the spectrum has {lam.size} modes")
    return lam


def evolve_exact(spectrum, c, f, initial, t_end, sample_dt=None):
    """Evolve ``initial`` (a :class:`ModalState`) to ``t_end`` under piecewise-constant ``f``.

    Every forcing breakpoint inside the interval is a sample; ``sample_dt``
    adds evenly spaced samples within segments. No discretization error.
    """
    lam = _check(spectrum, f)
    if initial.modes != lam.size:
        raise ValueError("initial state does not match the spectrum")
    t0 = initial.t
    if t_end < t0:
        raise ValueError("t_end precedes the initial time")
    times = [t0]
    us = [initial.u.copy()]
    vs = [initial.v.copy()]
    u, v = initial.u.copy(), initial.v.copy()
    for a, b, phi in f.segments(t0, t_end):
        if sample_dt:
            inner = np.arange(a + sample_dt, b, sample_dt)
            inner = inner[inner < b - 1e-12 * max(1.0, abs(b))]
            if inner.size:
                uu, vv = _propagate(lam[None, :], c, u[None, :], v[None, :], phi[None, :],
                                    (inner - a)[:, None])
                times.extend(inner)
                us.extend(uu)
                vs.extend(vv)
        u, v = _propagate(lam, c, u, v, phi, b - a)
        times.append(b)
        us.append(u)
        vs.append(v)
    return Trajectory(np.array(times), np.array(us), np.array(vs), "exact-piecewise",
                      sample_dt, lam, c, f)


def evolve_rk4(spectrum, c, f, initial, t_end, dt):
    """Classical fixed-step RK4 on the first-order modal system.

    ``f`` is a callable of time returning per-mode forcing, or a
    :class:`ForcingSignal`; for the latter, the stage at the start of a step
    uses the value just to the right of it.
    """
    if not dt > 0:
        raise ValueError("dt must be positive")
    lam = np.atleast_1d(np.asarray(spectrum, dtype=float))
    steps = max(int(math.ceil((t_end - initial.t) / dt - 1e-9)), 0)
    times = initial.t + dt * np.arange(steps + 1)
    times[-1] = t_end if steps else initial.t
    is_signal = isinstance(f, ForcingSignal)

    def force(t, t_lo):
        if is_signal:
            return f(max(t, np.nextafter(t_lo, math.inf)))
        return np.broadcast_to(np.asarray(f(t), dtype=float), lam.shape)

    def rhs(t, u, v, t_lo):
        return v, force(t, t_lo) - c * v - lam * u

    u, v = initial.u.copy(), initial.v.copy()
    us, vs = [u], [v]
    for k in range(steps):
        t, h = times[k], times[k + 1] - times[k]
        k1u, k1v = rhs(t, u, v, t)
        k2u, k2v = rhs(t + h / 2, u + h / 2 * k1u, v + h / 2 * k1v, t)
        k3u, k3v = rhs(t + h / 2, u + h / 2 * k2u, v + h / 2 * k2v, t)
        k4u, k4v = rhs(t + h, u + h * k3u, v + h * k3v, t)
        u = u + h / 6 * (k1u + 2 * k2u + 2 * k3u + k4u)
        v = v + h / 6 * (k1v + 2 * k2v + 2 * k3v + k4v)
        us.append(u)
        vs.append(v)
    return Trajectory(times, np.array(us), np.array(vs), "rk4", dt, lam, c,
                      f if is_signal else None)


def bounded_solution_at(spectrum, c, f, t=0.0):
    """State at time ``t`` of the unique globally bounded solution.

    Integrates the kernels exactly against each constant segment of ``f`` on
    (-inf, t]:  u(t) = int G(s) f(t-s) ds,  u'(t) = int g(s) f(t-s) ds, using
    int G = (P(s1) - P(s2))/lambda with P = g + c G, and int g = G(s2) - G(s1).
    Constant leading and trailing segments are integrated to infinity.
    """
    lam = _check(spectrum, f)
    if f.periodic:
        return periodic_solution(lam, c, f, t=t)[0]
    u = np.zeros(lam.size)
    v = np.zeros(lam.size)
    edges = np.concatenate([[-math.inf], f.breakpoints, [math.inf]])
    for j, phi in enumerate(f.values):
        a, b = edges[j], min(edges[j + 1], t)
        if b <= a or not np.any(phi):
            continue
        s1, s2 = t - b, t - a  # s2 may be inf
        G1, g1 = modal_kernels(lam, c, s1)
        P1 = g1 + c * G1
        if math.isinf(s2):
            G2 = np.zeros_like(G1)
            P2 = np.zeros_like(G1)
        else:
            G2, g2 = modal_kernels(lam, c, s2)
            P2 = g2 + c * G2
        u += phi * (P1 - P2) / lam
        v += phi * (G2 - G1)
    return ModalState(u, v, t)


def bounded_solution_at_zero(spectrum, c, f):
    return bounded_solution_at(spectrum, c, f, 0.0)


def monodromy(spectrum, c, f):
    """Affine one-period map U(t0 + T) = M U(t0) + D per mode, t0 the window start.

    Returns ``(M, D)`` with shapes ``(modes, 2, 2)`` and ``(modes, 2)``.
    """
    lam = _check(spectrum, f)
    t0 = float(f.breakpoints[0])
    n = lam.size
    M = np.broadcast_to(np.eye(2), (n, 2, 2)).copy()
    D = np.zeros((n, 2))
    for a, b, phi in f.segments(t0, t0 + f.period):
        G, g = modal_kernels(lam, c, b - a)
        Phi = np.stack([np.stack([g + c * G, G], -1), np.stack([-lam * G, g], -1)], -2)
        e = np.stack([phi / lam, np.zeros(n)], -1)
        M = Phi @ M
        D = np.einsum("nij,nj->ni", Phi, D) + e - np.einsum("nij,nj->ni", Phi, e)
    return M, D


def periodic_solution(spectrum, c, f, t=0.0, max_condition=1e12):
    """Periodic solution for periodic ``f``: the state at ``t`` and one period of trajectory.

    Solves (I - M) U(t0) = D per mode, with (M, D) from :func:`monodromy`.
    """
    if not f.periodic:
        raise ValueError("periodic_solution needs a periodic forcing")
    lam = _check(spectrum, f)
    M, D = monodromy(lam, c, f)
    I_M = np.eye(2)[None] - M
    cond = np.linalg.cond(I_M)
    if np.any(cond > max_condition):
        raise SimulationError(f"I - M is ill-conditioned (cond = {cond.max():.3e})")
    U0 = np.linalg.solve(I_M, D[..., None])[..., 0]
    t0 = float(f.breakpoints[0])
    start = ModalState(U0[:, 0], U0[:, 1], t0)
    traj = evolve_exact(lam, c, f, start, t0 + f.period)
    # state at t: propagate from the window start to t reduced into (t0, t0 + T]
    k = math.floor((t - t0) / f.period)
    tau = t - k * f.period
    if tau == t0:
        at = ModalState(start.u, start.v, t)
    else:
        end = evolve_exact(lam, c, f, start, tau).final
        at = ModalState(end.u, end.v, t)
    return at, traj


# --- ultimate sup estimation --------------------------------------------------

def _stationary_offsets(lam, c, A, B, h):
    """Offsets tau in (0, h) where A g(tau) + B G(tau) = 0, per interval and mode.

    Returns a list of (interval_index, mode_index, tau) arrays.
    """
    disc = c * c - 4.0 * lam
    crit = np.abs(disc) <= CRITICAL_TOL * c * c
    idx_all, mode_all, tau_all = [], [], []
    hh = np.broadcast_to(h, A.shape)
    with np.errstate(divide="ignore", invalid="ignore"):
        # non-oscillatory: e^{-(alpha-beta) tau} = (A beta - B)/(A alpha - B)
        over = (disc > 0) & ~crit
        sq = np.sqrt(np.where(over, disc, 0.0))
        alpha = 0.5 * (c + sq)
        beta = 2.0 * lam / (c + sq)
        ratio = (A * beta - B) / (A * alpha - B)
        tau_o = -np.log(ratio) / (alpha - beta)
        # critical: A (1 - c tau/2) + B tau = 0
        tau_c = A / (0.5 * c * A - B)
        cand = np.where(over, tau_o, np.where(crit, tau_c, np.nan))
        ok = np.isfinite(cand) & (cand > 0) & (cand < hh) & ~((disc < 0) & ~crit)
    k, m = np.nonzero(ok)
    idx_all.append(k)
    mode_all.append(m)
    tau_all.append(cand[k, m])
    under = np.broadcast_to((disc < 0) & ~crit, A.shape)
    if np.any(under):
        w = np.broadcast_to(0.5 * np.sqrt(np.where(under, -disc, 1.0)), A.shape)
        # A cos + C sin = 0 with C = (B - A c/2)/w: zeros at (first + j pi)/w
        phase = np.arctan2(A, (B - 0.5 * c * A) / w)
        first = np.mod(math.pi - phase, math.pi)
        count = np.where(under, np.floor((w * hh - first) / math.pi) + 1, 0).astype(np.int64)
        count = np.maximum(count, 0)
        flat = np.repeat(np.arange(count.size), count.ravel())
        if flat.size:
            starts = np.cumsum(count.ravel()) - count.ravel()
            j = np.arange(flat.size) - starts[flat]
            taus = (first.ravel()[flat] + math.pi * j) / w.ravel()[flat]
            keep = (taus > 0) & (taus < hh.ravel()[flat])
            k, m = np.unravel_index(flat[keep], A.shape)
            idx_all.append(k)
            mode_all.append(m)
            tau_all.append(taus[keep])
    return np.concatenate(idx_all), np.concatenate(mode_all), np.concatenate(tau_all)


def ultimate_sup_estimator(traj, burn_in, functional="velocity"):
    """Sup of the functional over samples at times >= ``burn_in``.

    ``functional`` is ``velocity`` (||u'||), ``position`` (||u||) or ``energy``
    ((sum lambda u^2 + v^2)^{1/2}). For exact piecewise trajectories the
    velocity and position sups also include inter-sample extrema of each
    mode's closed-form solution.
    """
    keep = traj.times >= burn_in
    if not np.any(keep):
        raise ValueError("no samples after burn-in")
    u, v = traj.u[keep], traj.v[keep]
    lam = traj.spectrum
    if functional == "velocity":
        best = np.linalg.norm(v, axis=1).max()
    elif functional == "position":
        best = np.linalg.norm(u, axis=1).max()
    elif functional == "energy":
        if lam is None:
            raise ValueError("energy needs the trajectory's spectrum")
        return float(np.sqrt((lam * u ** 2 + v ** 2).sum(axis=1)).max())
    else:
        raise ValueError(f"unknown functional {functional!r}")
    if traj.method != "exact-piecewise" or traj.forcing is None or u.shape[0] < 2:
        return float(best)
    t = traj.times[keep]
    h = np.diff(t)
    phi = traj.forcing(0.5 * (t[:-1] + t[1:]))
    y0 = u[:-1] - phi / lam
    v0 = v[:-1]
    c = traj.c
    if functional == "velocity":
        A, B = lam * y0 + c * v0, lam * v0
    else:
        A, B = v0, -lam * y0
    k, m, tau = _stationary_offsets(lam[None, :], c, A, B, h[:, None])
    if tau.size:
        uu, vv = _propagate(lam[None, :], c, u[:-1][k], v[:-1][k], phi[k], tau[:, None])
        vals = vv if functional == "velocity" else uu
        best = max(best, np.linalg.norm(vals, axis=1).max())
    return float(best)
