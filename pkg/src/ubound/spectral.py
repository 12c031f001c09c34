"""Bounds for u'' + c u' + A u = f with A given by its spectrum.

K(A, c) is the best constant in limsup ||u'|| <= K limsup ||f||. Upper bounds
come from splitting the spectrum into dyadic blocks; lower bounds come from the
n-mode construction in :mod:`ubound.signals`, evaluated exactly.
"""
from dataclasses import dataclass, field
import math

import numpy as np

from .scalar import BoundEstimate, BoundKind, ScalarParams, optimal_velocity_bound
from .signals import ConstructionError, ExtremalConstruction


class SpectrumError(ValueError):
    pass


@dataclass(frozen=True)
class SpectrumModel:
    """Eigenvalues lambda_1 <= ... <= lambda_N of a coercive self-adjoint A.

    ``dimension`` is the finite dimension d, or None for a truncation of an
    infinite-dimensional operator.
    """

    eigenvalues: tuple
    dimension: int | None = None

    def __post_init__(self):
        lam = tuple(float(x) for x in np.atleast_1d(self.eigenvalues))
        if not lam:
            raise SpectrumError("spectrum is empty")
        if not all(math.isfinite(x) for x in lam):
            raise SpectrumError("eigenvalues must be finite")
        if lam[0] <= 0:
            raise SpectrumError(f"eigenvalues must be positive (coercivity), got {lam[0]}")
        if any(b < a for a, b in zip(lam, lam[1:])):
            raise SpectrumError("eigenvalues must be nondecreasing")
        if self.dimension is not None and self.dimension < len(lam):
            raise SpectrumError("dimension is smaller than the number of eigenvalues")
        object.__setattr__(self, "eigenvalues", lam)

    @classmethod
    def finite(cls, eigenvalues):
        lam = sorted(float(x) for x in np.atleast_1d(eigenvalues))
        return cls(tuple(lam), len(lam))

    @property
    def lam1(self):
        return self.eigenvalues[0]

    def __len__(self):
        return len(self.eigenvalues)

    def array(self):
        return np.array(self.eigenvalues)


def _lam1(spec):
    if isinstance(spec, SpectrumModel):
        return spec.lam1
    return float(np.min(spec))  # a bare lambda_1 or an eigenvalue list


def upper_bound_general(spec, c):
    """4/c when c^2 <= 4 lambda_1, else (4/c) sqrt(log2(c^2/lambda_1))."""
    if not c > 0:
        raise ValueError("c must be positive")
    lam1 = _lam1(spec)
    if c * c <= 4.0 * lam1:
        return BoundEstimate(4.0 / c, BoundKind.GUARANTEED_UPPER, "general upper bound, 4/c branch")
    val = 4.0 / c * math.sqrt(math.log2(c * c / lam1))
    return BoundEstimate(val, BoundKind.GUARANTEED_UPPER, "general upper bound, dyadic branch")


def upper_bound_finite_dim(d, c):
    """Strict upper bound 2 sqrt(d)/c in dimension d."""
    if d < 1 or int(d) != d:
        raise ValueError("dimension must be a positive integer")
    if not c > 0:
        raise ValueError("c must be positive")
    return BoundEstimate(2.0 * math.sqrt(d) / c, BoundKind.GUARANTEED_UPPER,
                         "finite-dimensional upper bound 2 sqrt(d)/c")


def mM_bound(m, M, c):
    """(1 + sqrt(3 M/m))/c for m <= A <= M and c^2 >= 4m."""
    if not 0 < m <= M:
        raise ValueError("need 0 < m <= M")
    if not c * c >= 4.0 * m:
        raise ValueError(f"c^2 >= 4m fails: c={c}, m={m}")
    return BoundEstimate((1.0 + math.sqrt(3.0 * M / m)) / c, BoundKind.GUARANTEED_UPPER,
                         "bounded-operator lemma")


@dataclass(frozen=True)
class PartitionBlock:
    index: float  # j, or math.inf for the top block
    lo: float
    hi: float
    members: tuple

    @property
    def is_tail(self):
        return math.isinf(self.index)


def _dyadic_k(x):
    """Integer k with 2^k < x <= 2^{k+1}, for x > 1."""
    k = math.ceil(math.log2(x)) - 1
    while 2.0 ** (k + 1) < x:
        k += 1
    while 2.0 ** k >= x:
        k -= 1
    return k


def dyadic_partition(spec, c):
    """Blocks [2^j b, 2^{j+1} b) for j = 0..k, and [2^{k+1} b, inf) above c^2/4.

    b = lambda_1 and 2^k < c^2/(4b) <= 2^{k+1}. When c^2 <= 4b a single tail
    block holds the whole spectrum.
    """
    lam = spec.array() if isinstance(spec, SpectrumModel) else np.atleast_1d(np.asarray(spec, float))
    b = float(lam[0])
    x = c * c / (4.0 * b)
    if x <= 1.0:
        return [PartitionBlock(math.inf, b, math.inf, tuple(range(lam.size)))]
    k = _dyadic_k(x)
    edges = [b * 2.0 ** j for j in range(k + 2)]
    blocks = []
    for j in range(k + 1):
        lo, hi = edges[j], edges[j + 1]
        idx = tuple(int(i) for i in np.nonzero((lam >= lo) & (lam < hi))[0])
        blocks.append(PartitionBlock(j, lo, hi, idx))
    top = edges[-1]
    blocks.append(PartitionBlock(math.inf, top, math.inf,
                                 tuple(int(i) for i in np.nonzero(lam >= top)[0])))
    return blocks


# --- lower bounds from the construction -----------------------------------------

def _at_damping(con, c):
    if c is None or c == con.c:
        return con
    return con.with_damping(c)


def guaranteed_lower_bound(con, c=None):
    """(e^{-eps} - 2 e^{-L}) sqrt(n + 3)/c, valid for c at or above the threshold."""
    con = _at_damping(con, c)
    return BoundEstimate(con.guaranteed_gain / con.c, BoundKind.GUARANTEED_LOWER,
                         f"{con.n}-mode construction, eps={con.epsilon}, L={con.big_l}")


@dataclass(frozen=True)
class ConstructionValues:
    per_mode_v0: tuple
    norm_v0: float
    c: float
    floors_hold: bool


def evaluate_construction(con, c=None):
    """Exact modal velocities at t = 0 of the bounded solution under ``con.forcing()``.

    Mode i < n sees -1 on (-T_{i-1}, -T_i], giving G(T_i) - G(T_{i-1}) with
    G(s) = (e^{-beta s} - e^{-alpha s})/(alpha - beta); the last mode also
    sees +1 on (-T_n, 0] and gets 2 G(T_n) - G(T_{n-1}).
    """
    con = _at_damping(con, c)
    c = con.c
    T = (math.inf,) + con.switch_times
    vals = []
    for i in range(con.n):
        a, b, lam = con.alphas[i], con.betas[i], con.modes[i]
        root = math.sqrt(c * c - 4.0 * lam)
        prev, cur = T[i], T[i + 1]
        ea_prev = 0.0 if math.isinf(prev) else math.exp(-a * prev)
        eb_prev = 0.0 if math.isinf(prev) else math.exp(-b * prev)
        if i < con.n - 1:
            v = (ea_prev - math.exp(-a * cur) - eb_prev + math.exp(-b * cur)) / root
        else:
            v = (2.0 * math.exp(-b * cur) - 2.0 * math.exp(-a * cur) + ea_prev - eb_prev) / root
        vals.append(v)
    floor = con.margin / c
    ok = all(v >= floor for v in vals[:-1]) and vals[-1] >= 2.0 * floor
    return ConstructionValues(tuple(vals), math.hypot(*vals) if len(vals) > 1 else abs(vals[0]), c, ok)


# --- log regime -------------------------------------------------------------------

@dataclass(frozen=True)
class LogRegimeParams:
    """Constants of the sqrt(log c)/c lower bound for spectra with ratios in [R0, R].

    R0 = 2 L0/eps0; sigma_n = sqrt(2 R0 R^{n-1} lambda_1).
    """

    eps0: float = 0.2
    L0: float = 2.0
    R: float | None = None
    lam1: float = 1.0
    R0: float = field(init=False)

    def __post_init__(self):
        R0 = 2.0 * self.L0 / self.eps0
        object.__setattr__(self, "R0", R0)
        if self.R is None:
            object.__setattr__(self, "R", R0)
        if not math.exp(-self.eps0) - 2.0 * math.exp(-self.L0) >= 0.5:
            raise ValueError("exp(-eps0) - 2 exp(-L0) >= 1/2 fails")
        if not R0 > 1:
            raise ValueError("R0 = 2 L0/eps0 must exceed 1")
        if not self.R >= R0:
            raise ValueError(f"R >= R0 fails: R={self.R}, R0={R0}")
        if not self.lam1 > 0:
            raise ValueError("lambda_1 must be positive")

    def sigma(self, n):
        return math.sqrt(2.0 * self.R0 * self.R ** (n - 1) * self.lam1)

    @property
    def n0(self):
        n = 1
        while not (self.sigma(n) >= 1.0 and self.R ** (n - 1) >= 2.0 * self.R0 * self.lam1):
            n += 1
        return n

    def bracket(self, c):
        """n with sigma_n <= c < sigma_{n+1}."""
        if c < self.sigma(1):
            raise ValueError("c lies below sigma_1")
        n = 1 + int(math.floor(math.log(c * c / (2.0 * self.R0 * self.lam1)) / math.log(self.R)))
        while self.sigma(n) > c:
            n -= 1
        while self.sigma(n + 1) <= c:
            n += 1
        return n


def log_regime_bound(params, c):
    """(1/2) sqrt(log2 c)/(c sqrt(log2 R)), valid once c >= sigma_{n0}."""
    if c < params.sigma(params.n0):
        raise ValueError(f"c >= sigma_n0 fails: c={c} < {params.sigma(params.n0):.6g}")
    val = 0.5 * math.sqrt(math.log2(c)) / (c * math.sqrt(math.log2(params.R)))
    return BoundEstimate(val, BoundKind.GUARANTEED_LOWER,
                         f"log regime, R={params.R:g}, bracket n={params.bracket(c)}")


# --- spectra ---------------------------------------------------------------------

def weyl_spectrum(d, gamma_w, count):
    """lambda_k = (k/gamma_w)^{2/d}, k = 1..count, inverting N(lambda) = gamma_w lambda^{d/2}."""
    if d < 1 or not gamma_w > 0 or count < 1:
        raise ValueError("need d >= 1, gamma_w > 0 and count >= 1")
    k = np.arange(1, count + 1, dtype=float)
    return SpectrumModel(tuple((k / gamma_w) ** (2.0 / d)), None)


def ratio_subsequence(spec, r_lo, r_hi):
    """Greedy chain of 0-based indices with consecutive ratios in [r_lo, r_hi].

    Starts at the first eigenvalue and repeatedly takes the smallest later
    index whose ratio to the last pick is admissible.
    """
    if not r_hi >= r_lo > 1:
        raise ValueError("need r_hi >= r_lo > 1")
    lam = spec.array() if isinstance(spec, SpectrumModel) else np.asarray(spec, float)
    chain = [0]
    while True:
        last = chain[-1]
        ratio = lam[last + 1:] / lam[last]
        ok = np.nonzero((ratio >= r_lo) & (ratio <= r_hi))[0]
        if ok.size == 0:
            return chain
        chain.append(last + 1 + int(ok[0]))


def symmetric_eigenvalues(matrix, cap=512, require_positive=True, max_sweeps=60):
    """Eigenvalues of a symmetric matrix by cyclic Jacobi rotations.

    Returns a :class:`SpectrumModel`; with ``require_positive=False`` the
    sorted eigenvalues come back as a plain array, since an indefinite
    matrix is no operator model here.
    """
    A = np.array(matrix, dtype=float)
    if A.ndim != 2 or A.shape[0] != A.shape[1]:
        raise SpectrumError("matrix must be square")
    d = A.shape[0]
    if d == 0:
        raise SpectrumError("matrix is empty")
    if d > cap:
        raise SpectrumError(f"dimension {d} exceeds the cap {cap}")
    if not np.all(np.isfinite(A)):
        raise SpectrumError("matrix entries must be finite")
    scale = np.linalg.norm(A)
    if np.linalg.norm(A - A.T) > 1e-12 * scale:
        raise SpectrumError("matrix is not symmetric")
    A = 0.5 * (A + A.T)
    target = 1e-12 * scale
    for _ in range(max_sweeps):
        off = np.linalg.norm(A - np.diag(np.diag(A)))
        if off <= target:
            break
        for p in range(d - 1):
            for q in range(p + 1, d):
                apq = A[p, q]
                if abs(apq) <= 1e-20 * scale:
                    A[p, q] = A[q, p] = 0.0
                    continue
                theta = (A[q, q] - A[p, p]) / (2.0 * apq)
                if abs(theta) > 1e150:
                    t = 0.5 / theta
                else:
                    t = math.copysign(1.0, theta) / (abs(theta) + math.sqrt(theta * theta + 1.0))
                cs = 1.0 / math.sqrt(t * t + 1.0)
                sn = t * cs
                col_p, col_q = A[:, p].copy(), A[:, q].copy()
                A[:, p] = cs * col_p - sn * col_q
                A[:, q] = sn * col_p + cs * col_q
                row_p, row_q = A[p, :].copy(), A[q, :].copy()
                A[p, :] = cs * row_p - sn * row_q
                A[q, :] = sn * row_p + cs * row_q
                A[p, q] = A[q, p] = 0.0
    else:
        raise SpectrumError("Jacobi iteration did not converge")
    lam = np.sort(np.diag(A))
    if not require_positive:
        return lam
    if lam[0] <= 0:
        raise SpectrumError(f"non-positive eigenvalue {lam[0]:.6g} (A must be coercive)")
    return SpectrumModel(tuple(lam), d)


# --- non-monotonicity in A --------------------------------------------------------

@dataclass(frozen=True)
class WitnessReport:
    A1: SpectrumModel
    A2: SpectrumModel
    c_star: float | None
    lower_A2: float | None
    two_over_c: float | None
    k_A1: float | None
    evidence: tuple  # rows (c, lower(A2, c), 2/c, K(b, c))


def nonmonotonicity_witness(c_range=None, eps0=0.01, L0=3.2, delta=0.1, b=None, points=64):
    """Find c with K(A1, c) < K(A2, c) although A1 < A2 (both 2 x 2, diagonal).

    A2 has eigenvalues R0 and R0^2 (R0 = 2 L0/eps0); A1 = b I with b below
    both. The evidence is lower(A2, c) > 2/c >= K(b, c), where lower is the
    exact construction value.
    """
    margin = math.exp(-eps0) - 2.0 * math.exp(-L0)
    if not margin >= 1.0 - delta or not (1.0 - delta) * math.sqrt(5.0) >= 2.0:
        raise ValueError("parameters do not satisfy the witness recipe")
    R0 = 2.0 * L0 / eps0
    modes = (R0, R0 * R0)
    A2 = SpectrumModel(modes, 2)
    if b is None:
        b = 0.5 * modes[0]
    if not 0 < b < modes[0]:
        raise ValueError("A1 = b I needs 0 < b < lambda_min(A2)")
    A1 = SpectrumModel((b, b), 2)
    from .signals import threshold
    c_min = threshold(eps0, L0, modes[-1])
    lo, hi = c_range if c_range is not None else (c_min, 10.0 * c_min)
    if lo < c_min:
        raise ConstructionError(f"c range starts below the construction threshold {c_min:.6g}")
    rows = []
    found = None
    for c in np.geomspace(lo, hi, points):
        c = float(c)
        con = ExtremalConstruction(eps0, L0, modes, c)
        low = evaluate_construction(con).norm_v0
        k1 = optimal_velocity_bound(ScalarParams(b, c)).value
        rows.append((c, low, 2.0 / c, k1))
        if found is None and low > 2.0 / c >= k1:
            found = rows[-1]
    if found is None:
        return WitnessReport(A1, A2, None, None, None, None, tuple(rows))
    return WitnessReport(A1, A2, found[0], found[1], found[2], found[3], tuple(rows))


# --- file formats -----------------------------------------------------------------

def read_spectrum(path, dimension=None):
    """One eigenvalue per line; '#' starts a comment."""
    vals = []
    with open(path) as fh:
        for lineno, line in enumerate(fh, 1):
            line = line.split("#", 1)[0].strip()
            if not line:
                continue
            try:
                vals.append(float(line))
            except ValueError:
                raise SpectrumError(f"{path}:{lineno}: not a number: {line!r}") from None
    return SpectrumModel(tuple(sorted(vals)), dimension)


def write_spectrum(spec, path):
    with open(path, "w") as fh:
        for x in spec.eigenvalues:
            fh.write(format(x, ".17g") + "\n")


def read_matrix(path):
    """Row-major whitespace-separated matrix; '#' starts a comment."""
    rows = []
    with open(path) as fh:
        for line in fh:
            line = line.split("#", 1)[0].strip()
            if line:
                try:
                    rows.append([float(x) for x in line.split()])
                except ValueError as exc:
                    raise SpectrumError(f"{path}: {exc}") from None
    if not rows or any(len(r) != len(rows) for r in rows):
        raise SpectrumError(f"{path}: matrix must be square")
    return np.array(rows)
