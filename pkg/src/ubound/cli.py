"""Command-line front end: ``python -m ubound <command> ...``.

Exit codes: 0 success, 2 parameter error, 3 I/O error.
"""
import argparse
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
import csv
import io
import math
import os
import sys

import numpy as np

from .quadrature import QuadratureBudgetError
from .scalar import (ScalarParams, classify_regime, historical_bounds, optimal_position_bound,
                     optimal_velocity_bound, quadrature_bound_oracle)
from .signals import ConstructionError, build_construction, threshold, write_signal
from .spectral import (LogRegimeParams, SpectrumError, SpectrumModel, evaluate_construction,
                       guaranteed_lower_bound, log_regime_bound, ratio_subsequence,
                       read_spectrum, upper_bound_finite_dim, upper_bound_general,
                       weyl_spectrum)
from .equivalence import run_equivalence

EXIT_OK, EXIT_PARAM, EXIT_IO = 0, 2, 3


class ParamError(ValueError):
    pass


@dataclass(frozen=True)
class SweepConfig:
    axis: str
    lo: float
    hi: float
    count: int
    log: bool

    def __post_init__(self):
        if self.axis not in ("b", "c", "dimension", "period"):
            raise ParamError(f"unknown sweep axis {self.axis!r}")
        if not (self.lo > 0 and self.hi > 0):
            raise ParamError("range endpoints must be positive")
        if self.count < 2:
            raise ParamError("range needs at least 2 points")

    def grid(self):
        if self.log:
            pts = np.geomspace(self.lo, self.hi, self.count)
        else:
            pts = np.linspace(self.lo, self.hi, self.count)
        if self.axis == "dimension":
            pts = np.unique(np.round(pts).astype(int))
            pts = pts[pts >= 1]
        return [p.item() for p in pts]


def parse_range(text):
    """``lo:hi:n`` or ``lo:hi:n:log`` (also ``:lin``)."""
    parts = text.split(":")
    if len(parts) not in (3, 4):
        raise ParamError(f"range must be lo:hi:n[:log], got {text!r}")
    try:
        lo, hi, n = float(parts[0]), float(parts[1]), int(parts[2])
    except ValueError:
        raise ParamError(f"range must be lo:hi:n[:log], got {text!r}") from None
    scale = parts[3] if len(parts) == 4 else "lin"
    if scale not in ("log", "lin"):
        raise ParamError(f"range scale must be 'log' or 'lin', got {scale!r}")
    if not (lo > 0 and hi > 0):
        raise ParamError("range endpoints must be positive")
    if n < 2:
        raise ParamError("range needs at least 2 points")
    return lo, hi, n, scale == "log"


def parse_modes(text):
    """Eigenvalues from a comma list, a file, or ``geometric:first:ratio:n`` /
    ``weyl:d:gamma:n``."""
    if os.path.exists(text):
        return read_spectrum(text).eigenvalues
    if text.startswith(("geometric:", "weyl:")):
        kind, *args = text.split(":")
        if len(args) != 3:
            raise ParamError(f"generator spec needs three fields: {text!r}")
        try:
            a, b, n = float(args[0]), float(args[1]), int(args[2])
        except ValueError:
            raise ParamError(f"bad generator spec {text!r}") from None
        if n < 1:
            raise ParamError("generator needs at least one mode")
        if kind == "geometric":
            if not (a > 0 and b > 0):
                raise ParamError("geometric generator needs positive first term and ratio")
            return tuple(a * b ** i for i in range(n))
        return weyl_spectrum(int(a), b, n).eigenvalues
    try:
        return tuple(float(x) for x in text.split(",") if x.strip())
    except ValueError:
        raise ParamError(f"--modes is neither a file, a generator, nor a number list: {text!r}") from None


def _floats(text, name):
    try:
        vals = [float(x) for x in str(text).split(",") if x.strip()]
    except ValueError:
        raise ParamError(f"{name} must be a comma-separated list of numbers") from None
    if not vals:
        raise ParamError(f"{name} must not be empty")
    return vals


def _threads():
    raw = os.environ.get("UBOUND_THREADS", "")
    try:
        return max(1, int(raw)) if raw else 1
    except ValueError:
        raise ParamError("UBOUND_THREADS must be an integer") from None


def _ordered_map(fn, items):
    """Map in parallel (up to UBOUND_THREADS workers) with input order kept."""
    n = _threads()
    if n == 1:
        return [fn(x) for x in items]
    with ThreadPoolExecutor(max_workers=n) as pool:
        return list(pool.map(fn, items))


def _need(args, *names):
    for name in names:
        if getattr(args, name) is None:
            raise ParamError(f"--{name.replace('_', '-')} is required")


def _scalar(args):
    _need(args, "b", "c")
    try:
        return ScalarParams(args.b, args.c)
    except ValueError as exc:
        raise ParamError(str(exc)) from None


def _fmt(x):
    if x is None:
        return ""
    if isinstance(x, float):
        return format(x, ".17g")
    return str(x)


def _write_table(rows, header, out):
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for row in rows:
        w.writerow([_fmt(x) for x in row])
    if out is None or out == "-":
        sys.stdout.write(buf.getvalue())
    else:
        with open(out, "w", newline="") as fh:
            fh.write(buf.getvalue())


# --- commands -------------------------------------------------------------------

def cmd_constants(args):
    p = _scalar(args)
    r = classify_regime(p)
    k = optimal_velocity_bound(p)
    pos = optimal_position_bound(p)
    print(f"b = {p.b:.17g}")
    print(f"c = {p.c:.17g}")
    print(f"regime = {r.regime.value}")
    print(f"delta = {r.delta:.17g}")
    for name in ("alpha", "beta", "gamma", "omega"):
        val = getattr(r, name)
        if not math.isnan(val):
            print(f"{name} = {val:.17g}")
    print(f"first_zero = {r.first_zero:.17g}")
    print(f"K = {k.value:.17g}  [{k.kind.value}; {k.provenance}]")
    print(f"position_bound = {pos.value:.17g}  [{pos.kind.value}; {pos.provenance}]")
    if args.oracle:
        o = quadrature_bound_oracle(p, kernel="position" if args.functional == "position" else "velocity")
        print(f"oracle = {o.value:.17g}  [{o.kind.value}; {o.provenance}; tol {o.tolerance:.3g}]")
    for name, val in historical_bounds(p).items():
        print(f"{name} = {val:.17g}  [historical]")
    print(f"envelope_lower = {4.0 / (math.pi * p.c):.17g}  [4/(pi c)]")
    print(f"envelope_upper = {2.0 / p.c:.17g}  [2/c]")
    return EXIT_OK


def _scalar_row(b, c, functional):
    p = ScalarParams(b, c)
    kernel = "position" if functional == "position" else "velocity"
    closed = (optimal_position_bound(p) if kernel == "position" else optimal_velocity_bound(p)).value
    oracle = quadrature_bound_oracle(p, kernel=kernel).value
    hist = list(historical_bounds(p).values())
    return [b, c, closed, oracle, *hist, 4.0 / (math.pi * c), 2.0 / c, c * closed]


def _dimension_row(d, b, c, eps, big_l):
    # geometric spectrum b R^i with the smallest admissible ratio R = 2L/eps
    ratio = 2.0 * big_l / eps
    modes = tuple(b * ratio ** i for i in range(d))
    usable = [x for x in modes if threshold(eps, big_l, x) <= c]
    lower = exact = None
    if usable:
        con, _ = build_construction(eps, big_l, usable, c)
        lower = guaranteed_lower_bound(con).value
        exact = evaluate_construction(con).norm_v0
    return [d, c, len(usable), lower, exact, upper_bound_finite_dim(d, c).value,
            upper_bound_general(b, c).value]


def cmd_sweep(args):
    _need(args, "range")
    lo, hi, n, log = parse_range(args.range)
    cfg = SweepConfig(args.axis, lo, hi, n, log)
    pts = cfg.grid()
    if cfg.axis in ("b", "c"):
        fixed = "c" if cfg.axis == "b" else "b"
        _need(args, fixed)
        if getattr(args, fixed) <= 0:
            raise ParamError(f"--{fixed} must be positive")
        if cfg.axis == "b":
            rows = _ordered_map(lambda x: _scalar_row(x, args.c, args.functional), pts)
        else:
            rows = _ordered_map(lambda x: _scalar_row(args.b, x, args.functional), pts)
        hist = list(historical_bounds(ScalarParams(1.0, 1.0)).keys())
        header = ["b", "c", "closed_form", "oracle", *hist, "four_over_pi_c", "two_over_c", "c_times_K"]
    elif cfg.axis == "dimension":
        _need(args, "c")
        b = 1.0 if args.b is None else args.b
        if b <= 0 or args.c <= 0:
            raise ParamError("--b and --c must be positive")
        rows = _ordered_map(lambda d: _dimension_row(int(d), b, args.c, args.epsilon, args.length_l), pts)
        header = ["dimension", "c", "modes_used", "guaranteed_lower", "construction_value",
                  "upper_finite_dim", "upper_general"]
    else:
        p = _scalar(args)
        rep = run_equivalence(p, pts, [pts[-1]], functional=args.functional)
        rows = [[T, rep.ob_p[T], rep.ob_g0, v.achieved_gap, v.predicted_gap]
                for T, v in zip(pts, rep.verdicts)]
        header = ["period", "ob_p", "ob_g0", "achieved_gap", "predicted_gap"]
    _write_table(rows, header, args.out)
    return EXIT_OK


def cmd_construct(args):
    _need(args, "modes")
    modes = parse_modes(args.modes)
    if not modes:
        raise ParamError("--modes is empty")
    c = args.c if args.c is not None else threshold(args.epsilon, args.length_l, max(modes))
    con, forcing = build_construction(args.epsilon, args.length_l, modes, c)
    ev = evaluate_construction(con)
    lower = guaranteed_lower_bound(con).value
    up_d = upper_bound_finite_dim(con.n, c).value
    up_g = upper_bound_general(con.modes[0], c).value
    print(f"modes = {', '.join(format(x, '.17g') for x in con.modes)}")
    print(f"epsilon = {con.epsilon:.17g}")
    print(f"L = {con.big_l:.17g}")
    print(f"c = {c:.17g}")
    print(f"threshold = {con.c_threshold:.17g}")
    print(f"switch_times = {', '.join(format(x, '.17g') for x in con.switch_times)}")
    print(f"guaranteed_lower = {lower:.17g}")
    print(f"per_mode_v0 = {', '.join(format(x, '.17g') for x in ev.per_mode_v0)}")
    print(f"norm_v0 = {ev.norm_v0:.17g}")
    print(f"upper_finite_dim = {up_d:.17g}")
    print(f"upper_general = {up_g:.17g}")
    ok = lower <= ev.norm_v0 <= min(up_d, up_g) and ev.floors_hold
    print(f"sandwich = {'ok' if ok else 'VIOLATED'}")
    if args.out:
        write_signal(forcing, args.out)
        print(f"forcing written to {args.out}")
    return EXIT_OK


def cmd_equivalence(args):
    p = _scalar(args)
    periods = _floats(args.period if args.period is not None else "5,10,20", "--period")
    horizons = _floats(args.horizon if args.horizon is not None else "5,10,20", "--horizon")
    try:
        rep = run_equivalence(p, periods, horizons, functional=args.functional,
                              forcing="zero" if args.zero_forcing else "extremal")
    except ValueError as exc:
        raise ParamError(str(exc)) from None
    print(rep.text())
    if args.out:
        rep.to_csv(args.out)
        root, ext = os.path.splitext(args.out)
        rep.summary_csv(root + ".summary" + (ext or ".csv"))
    return EXIT_OK


def _laplacian_row(spec, c, eps0, big_l0, cap, params):
    chain = ratio_subsequence(spec, 2.0 * big_l0 / eps0, cap)
    lam = spec.array()[chain]
    usable = lam[lam <= c * c * eps0 / (4.0 * big_l0)]
    exact = None
    if usable.size:
        con, _ = build_construction(eps0, big_l0, tuple(usable), c)
        exact = c * evaluate_construction(con).norm_v0
    lower = None
    if params is not None and c >= params.sigma(params.n0):
        lower = c * log_regime_bound(params, c).value
    upper = c * upper_bound_general(spec, c).value
    return [c, int(usable.size), lower, exact, upper]


def cmd_laplacian_demo(args):
    _need(args, "dimension", "range")
    count = int(args.modes) if args.modes is not None else 10_000
    lo, hi, n, log = parse_range(args.range)
    spec = weyl_spectrum(args.dimension, args.gamma, count)
    eps0, big_l0 = args.epsilon, args.length_l
    r0 = 2.0 * big_l0 / eps0
    cap = args.ratio_cap if args.ratio_cap is not None else 2.0 * r0
    try:
        params = LogRegimeParams(eps0, big_l0, cap, spec.lam1)
    except ValueError:
        params = None  # margin below 1/2: no log-regime lower bound
    cs = np.geomspace(lo, hi, n) if log else np.linspace(lo, hi, n)
    rows = _ordered_map(lambda c: _laplacian_row(spec, float(c), eps0, big_l0, cap, params), cs)
    _write_table(rows, ["c", "modes_used", "lower_times_c", "construction_times_c",
                        "upper_times_c"], args.out)
    return EXIT_OK


# --- parser ---------------------------------------------------------------------

def build_parser():
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--b", type=float, help="stiffness (smallest eigenvalue)")
    common.add_argument("--c", type=float, help="damping")
    common.add_argument("--out", help="output path (CSV or forcing file)")
    common.add_argument("--seed", type=int, default=0,
                        help="accepted for reproducibility; every command is deterministic")
    common.add_argument("--functional", choices=("velocity", "position", "energy"),
                        default="velocity")

    lemma = argparse.ArgumentParser(add_help=False)
    lemma.add_argument("--epsilon", type=float, default=None)
    lemma.add_argument("--length-l", dest="length_l", type=float, default=None)

    parser = argparse.ArgumentParser(prog="ubound",
                                     description="Ultimate bounds for damped second-order equations.")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("constants", parents=[common], help="scalar constants for (b, c)")
    p.add_argument("--oracle", action="store_true", help="also run the quadrature oracle")
    p.set_defaults(func=cmd_constants)

    p = sub.add_parser("sweep", parents=[common, lemma], help="CSV sweep along one axis")
    p.add_argument("--axis", choices=("b", "c", "dimension", "period"), default="b")
    p.add_argument("--range", help="lo:hi:n[:log]")
    p.set_defaults(func=cmd_sweep, lemma_defaults=(1.0, 2.0))

    p = sub.add_parser("construct", parents=[common, lemma], help="n-mode lower-bound construction")
    p.add_argument("--modes", help="comma list, spectrum file, geometric:first:ratio:n or weyl:d:gamma:n")
    p.set_defaults(func=cmd_construct, lemma_defaults=(1.0, 2.0))

    p = sub.add_parser("equivalence", parents=[common], help="ultimate/global/periodic comparison")
    p.add_argument("--period", help="comma-separated periods")
    p.add_argument("--horizon", help="comma-separated horizons")
    p.add_argument("--zero-forcing", action="store_true", help="control run with f = 0")
    p.set_defaults(func=cmd_equivalence)

    p = sub.add_parser("laplacian-demo", parents=[common, lemma],
                       help="sqrt(log c)/c regime on a Weyl-law spectrum")
    p.add_argument("--dimension", type=int)
    p.add_argument("--gamma", type=float, default=1.0)
    p.add_argument("--modes", type=int, help="number of eigenvalues")
    p.add_argument("--range", help="c range lo:hi:n[:log]")
    p.add_argument("--ratio-cap", dest="ratio_cap", type=float,
                   help="largest admitted eigenvalue ratio R (default 2 R0)")
    p.set_defaults(func=cmd_laplacian_demo, lemma_defaults=(0.2, 2.0))
    return parser


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    eps_default, l_default = getattr(args, "lemma_defaults", (None, None))
    if hasattr(args, "epsilon") and args.epsilon is None:
        args.epsilon = eps_default
    if hasattr(args, "length_l") and args.length_l is None:
        args.length_l = l_default
    try:
        return args.func(args)
    except (ParamError, ConstructionError, SpectrumError, QuadratureBudgetError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_PARAM
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_IO
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_PARAM


if __name__ == "__main__":
    sys.exit(main())
