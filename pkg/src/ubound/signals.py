"""Piecewise-constant multichannel forcing terms.

Segments are left-open, right-closed: with breakpoints t_0 < t_1 < ..., an
aperiodic signal takes ``values[0]`` on (-inf, t_0], ``values[i]`` on
(t_{i-1}, t_i] and ``values[-1]`` on (t_last, inf). A periodic signal with
period T takes ``values[i]`` on (t_i, t_{i+1}] with t_m = t_0 + T, repeated.
"""
from dataclasses import dataclass, field
import math

import numpy as np

from .scalar import kernel_sign_changes, classify_regime, ScalarParams, _tail_bound


class SignalFormatError(ValueError):
    pass


class ConstructionError(ValueError):
    """A construction parameter violates one of the lemma's hypotheses."""


@dataclass(frozen=True, eq=False)
class ForcingSignal:
    breakpoints: np.ndarray
    values: np.ndarray
    period: float | None = None

    def __post_init__(self):
        bp = np.array(self.breakpoints, dtype=float).reshape(-1)
        vals = np.array(self.values, dtype=float)
        if vals.ndim == 1:
            vals = vals[:, None]
        if vals.ndim != 2 or vals.shape[1] == 0:
            raise SignalFormatError("a signal needs at least one channel")
        if np.any(~np.isfinite(bp)):
            raise SignalFormatError("breakpoints must be finite")
        if np.any(np.diff(bp) <= 0):
            raise SignalFormatError("breakpoints must be strictly increasing")
        if not np.all(np.isfinite(vals)):
            raise SignalFormatError("values must be finite")
        if self.period is None:
            if vals.shape[0] != bp.size + 1:
                raise SignalFormatError(
                    f"aperiodic signal needs {bp.size + 1} segments, got {vals.shape[0]}")
        else:
            if not self.period > 0:
                raise SignalFormatError("period must be positive")
            if bp.size == 0 or vals.shape[0] != bp.size:
                raise SignalFormatError("periodic signal needs one value row per breakpoint")
            if bp[-1] - bp[0] >= self.period:
                raise SignalFormatError("periodic breakpoints must lie within one period")
        bp.setflags(write=False)
        vals.setflags(write=False)
        object.__setattr__(self, "breakpoints", bp)
        object.__setattr__(self, "values", vals)

    @property
    def channels(self):
        return self.values.shape[1]

    @property
    def periodic(self):
        return self.period is not None

    def __eq__(self, other):
        if not isinstance(other, ForcingSignal):
            return NotImplemented
        return (self.period == other.period
                and np.array_equal(self.breakpoints, other.breakpoints)
                and np.array_equal(self.values, other.values))

    def sup_norm(self):
        return float(np.max(np.linalg.norm(self.values, axis=1)))

    def _reduce(self, t):
        t0 = self.breakpoints[0]
        tau = t0 + np.mod(t - t0, self.period)
        return np.where(tau == t0, t0 + self.period, tau)

    def segment_index(self, t):
        t = np.asarray(t, dtype=float)
        if self.period is None:
            return np.searchsorted(self.breakpoints, t, side="left")
        ends = np.append(self.breakpoints[1:], self.breakpoints[0] + self.period)
        return np.searchsorted(ends, self._reduce(t), side="left")

    def __call__(self, t):
        """Value(s) at time(s) ``t``; shape ``t.shape + (channels,)``."""
        return self.values[self.segment_index(t)]

    def segments(self, t_start, t_end):
        """Constant pieces ``(a, b, value)`` covering [t_start, t_end] in order."""
        if t_end < t_start:
            raise ValueError("t_end must not precede t_start")
        if self.period is None:
            cuts = self.breakpoints[(self.breakpoints > t_start) & (self.breakpoints < t_end)]
        else:
            t0, T = self.breakpoints[0], self.period
            k_lo = math.floor((t_start - t0) / T) - 1
            k_hi = math.ceil((t_end - t0) / T) + 1
            tiles = self.breakpoints[None, :] + T * np.arange(k_lo, k_hi + 1)[:, None]
            cuts = tiles.ravel()
            cuts = cuts[(cuts > t_start) & (cuts < t_end)]
        edges = np.concatenate([[t_start], cuts, [t_end]])
        out = []
        for a, b in zip(edges[:-1], edges[1:]):
            if b > a:
                out.append((float(a), float(b), self(0.5 * (a + b))))
        if not out:
            out.append((float(t_start), float(t_end), self(t_end)))
        return out

    def shift(self, dt):
        """The signal t -> f(t - dt)."""
        return ForcingSignal(self.breakpoints + dt, self.values, self.period)

    def window(self, t_start, t_end):
        """Restriction to (t_start, t_end], zero outside."""
        pieces = self.segments(t_start, t_end)
        bp = [t_start] + [b for _, b, _ in pieces]
        zero = np.zeros(self.channels)
        vals = [zero] + [v for _, _, v in pieces] + [zero]
        return ForcingSignal(bp, vals)


def constant_signal(value):
    value = np.atleast_1d(np.asarray(value, dtype=float))
    return ForcingSignal([], value[None, :])


def extremal_scalar_forcing(r, horizon, kernel="velocity"):
    """Unit forcing on (-horizon, 0] whose sign tracks the kernel, f(-s) = sign(kernel(s)).

    Zero for t > 0 and t <= -horizon.
    """
    if isinstance(r, ScalarParams):
        r = classify_regime(r)
    if not horizon > 0:
        raise ValueError("horizon must be positive")
    zeros = [z for z in kernel_sign_changes(r, horizon, kernel) if 0 < z < horizon]
    # segment (-z_0, 0] is +1, then alternate going back in time
    bp = [-horizon] + [-z for z in reversed(zeros)] + [0.0]
    m = len(zeros)
    signs = [(-1.0) ** (m - j) for j in range(m + 1)]
    return ForcingSignal(bp, np.array([0.0] + signs + [0.0])[:, None])


def extremal_truncation_error(r, horizon, kernel="velocity"):
    """Bound on what cutting the extremal forcing at ``-horizon`` loses at t = 0."""
    if isinstance(r, ScalarParams):
        r = classify_regime(r)
    return _tail_bound(r, kernel, horizon)


@dataclass(frozen=True)
class ExtremalConstruction:
    """n-mode unit forcing that keeps every modal velocity positive at t = 0.

    Channel i is -1 on (-T_{i-1}, -T_i] (T_0 = +inf), and the last channel is
    additionally +1 on (-T_n, 0], with switch times T_i = epsilon / beta_i.
    """

    epsilon: float
    big_l: float
    modes: tuple
    c: float
    alphas: tuple = field(init=False)
    betas: tuple = field(init=False)
    switch_times: tuple = field(init=False)

    def __post_init__(self):
        modes = tuple(float(x) for x in self.modes)
        object.__setattr__(self, "modes", modes)
        _check_construction(self.epsilon, self.big_l, modes, self.c)
        lam = np.array(modes)
        sq = np.sqrt(self.c * self.c - 4.0 * lam)
        betas = 2.0 * lam / (self.c + sq)
        object.__setattr__(self, "alphas", tuple(0.5 * (self.c + sq)))
        object.__setattr__(self, "betas", tuple(betas))
        object.__setattr__(self, "switch_times", tuple(self.epsilon / betas))

    @property
    def n(self):
        return len(self.modes)

    @property
    def margin(self):
        """exp(-epsilon) - 2 exp(-L), positive by hypothesis."""
        return math.exp(-self.epsilon) - 2.0 * math.exp(-self.big_l)

    @property
    def c_threshold(self):
        return threshold(self.epsilon, self.big_l, self.modes[-1])

    @property
    def guaranteed_gain(self):
        return self.margin * math.sqrt(self.n + 3)

    def with_damping(self, c):
        return ExtremalConstruction(self.epsilon, self.big_l, self.modes, c)

    def forcing(self):
        n = self.n
        times = np.array(self.switch_times)
        bp = np.concatenate([-times, [0.0]])
        vals = np.zeros((n + 2, n))
        vals[0, 0] = -1.0
        for i in range(1, n):
            vals[i, i] = -1.0
        vals[n, n - 1] = 1.0
        return ForcingSignal(bp, vals)


def threshold(epsilon, big_l, top_mode):
    """Smallest admissible damping sqrt(4 L lambda_n / epsilon)."""
    return math.sqrt(4.0 * big_l * top_mode / epsilon)


def _check_construction(epsilon, big_l, modes, c):
    if not epsilon > 0:
        raise ConstructionError(f"epsilon > 0 fails (epsilon={epsilon})")
    if not big_l > epsilon:
        raise ConstructionError(f"L > epsilon fails (L={big_l}, epsilon={epsilon})")
    if not math.exp(-epsilon) - 2.0 * math.exp(-big_l) > 0:
        raise ConstructionError("exp(-epsilon) - 2 exp(-L) > 0 fails")
    if len(modes) == 0:
        raise ConstructionError("at least one mode is required")
    if modes[0] <= 0:
        raise ConstructionError("modes must be positive eigenvalues")
    ratio = 2.0 * big_l / epsilon
    for i in range(len(modes) - 1):
        if not modes[i + 1] >= ratio * modes[i]:
            raise ConstructionError(
                f"lambda_{i + 2} >= (2L/epsilon) lambda_{i + 1} fails: "
                f"{modes[i + 1]} / {modes[i]} = {modes[i + 1] / modes[i]:.6g} < {ratio:.6g}")
    c_min = threshold(epsilon, big_l, modes[-1])
    if not c >= c_min:
        raise ConstructionError(
            f"c >= sqrt(4 L lambda_n / epsilon) fails: c={c} < {c_min:.6g}")


def build_construction(epsilon, big_l, modes, c):
    """Validate the parameters and return ``(construction, forcing)``."""
    con = ExtremalConstruction(epsilon, big_l, tuple(modes), c)
    return con, con.forcing()


def periodize(f, period, window_start=None):
    """Periodic signal that agrees with ``f`` on (window_start, window_start + period].

    The default window is (-period, 0], the stretch that determines the
    globally bounded solution at time 0.
    """
    if f.periodic:
        raise ValueError("signal is already periodic")
    if not period > 0:
        raise ValueError("period must be positive")
    start = -period if window_start is None else window_start
    pieces = f.segments(start, start + period)
    bp = [start] + [b for _, b, _ in pieces[:-1]]
    vals = [v for _, _, v in pieces]
    return ForcingSignal(bp, vals, period=period)


# --- text I/O ---------------------------------------------------------------

_MAGIC = "# ubound-signal v1"


def write_signal(f, path):
    """Write ``f`` as comma-separated rows ``segment_start, values...``.

    The first row of an aperiodic signal starts at ``-inf``.
    """
    starts = list(f.breakpoints) if f.periodic else [-math.inf] + list(f.breakpoints)
    with open(path, "w") as fh:
        fh.write(_MAGIC + "\n")
        fh.write(f"# channels: {f.channels}\n")
        fh.write(f"# period: {format(f.period, '.17g') if f.periodic else 'none'}\n")
        for t, row in zip(starts, f.values):
            cells = [format(t, ".17g")] + [format(v, ".17g") for v in row]
            fh.write(",".join(cells) + "\n")


def read_signal(path):
    channels = None
    period = None
    rows = []
    with open(path) as fh:
        for lineno, line in enumerate(fh, 1):
            line = line.strip()
            if not line:
                continue
            if line.startswith("#"):
                key, _, val = line[1:].partition(":")
                key, val = key.strip(), val.strip()
                if key == "channels":
                    channels = int(val)
                elif key == "period":
                    period = None if val == "none" else float(val)
                continue
            try:
                rows.append([float(x) for x in line.split(",")])
            except ValueError as exc:
                raise SignalFormatError(f"{path}:{lineno}: {exc}") from None
    if channels is None or channels < 1:
        raise SignalFormatError(f"{path}: missing or empty channel count")
    if not rows:
        raise SignalFormatError(f"{path}: no segments")
    if any(len(r) != channels + 1 for r in rows):
        raise SignalFormatError(f"{path}: every row needs 1 + {channels} fields")
    starts = [r[0] for r in rows]
    vals = [r[1:] for r in rows]
    if period is None:
        if starts[0] != -math.inf:
            raise SignalFormatError(f"{path}: aperiodic signal must start at -inf")
        starts = starts[1:]
    return ForcingSignal(starts, vals, period)
