import csv
import math

import numpy as np
import pytest

from ubound.equivalence import run_equivalence, translation_invariance
from ubound.scalar import ScalarParams, classify_regime
from ubound.signals import build_construction, extremal_scalar_forcing, periodize


def test_b2_c3_converges_to_half():
    rep = run_equivalence(ScalarParams(2, 3), [5, 10, 20], [5, 10, 20])
    assert rep.ob_g0 == pytest.approx(0.5, abs=1e-10)
    assert rep.tail_model[1] == pytest.approx(1.0)
    gaps = [abs(rep.ob_p[T] - rep.ob_g0) for T in (5, 10, 20)]
    assert gaps[0] > gaps[1] > gaps[2]
    # the gap decays at the slow rate beta = 1
    for T, gap in zip((5, 10, 20), gaps):
        assert 0.5 < gap / math.exp(-T) < 1.5
    assert rep.passed


def test_b1_c2_single_period():
    rep = run_equivalence(ScalarParams(1, 2), [40], [40])
    assert abs(rep.ob_p[40] - 2 / math.e) <= 1e-8
    assert abs(rep.ob_u[40] - 2 / math.e) <= 1e-8
    assert rep.passed


def test_zero_forcing_control():
    rep = run_equivalence(ScalarParams(1, 1), [5, 10], [5, 10], forcing="zero")
    assert rep.ob_g0 == 0
    assert all(v == 0 for v in rep.ob_p.values())
    assert all(v == 0 for v in rep.ob_u.values())
    assert rep.passed


@pytest.mark.parametrize("functional", ["velocity", "position"])
@pytest.mark.parametrize("b,c", [(1, 1), (2, 2), (0.5, 3)])
def test_ordering_and_convergence(functional, b, c):
    p = ScalarParams(b, c)
    delta = 0.5 * c if c * c <= 4 * b else classify_regime(p).beta
    big = 40.0 / delta
    rep = run_equivalence(p, [big / 8, big / 2, big], [big / 8, big / 2, big], functional=functional)
    assert rep.passed
    ests = [rep.ob_u[h] for h in sorted(rep.ob_u)]
    assert all(b_ >= a_ - 1e-12 for a_, b_ in zip(ests, ests[1:]))
    assert abs(rep.ob_p[big] - rep.ob_g0) <= 1e-6
    assert abs(rep.ob_u[big] - rep.ob_g0) <= 1e-6


def test_energy_has_no_verdict():
    rep = run_equivalence(ScalarParams(1, 1), [10], [10], functional="energy")
    assert rep.passed is None
    assert all(v.passed is None for v in rep.verdicts)
    assert rep.ob_p[10] > 0


def test_input_validation():
    with pytest.raises(ValueError):
        run_equivalence(ScalarParams(1, 1), [], [1])
    with pytest.raises(ValueError):
        run_equivalence(ScalarParams(1, 1), [10, 5], [1])
    with pytest.raises(ValueError):
        run_equivalence(ScalarParams(1, 1), [5], [1], functional="momentum")
    with pytest.raises(ValueError):
        run_equivalence(ScalarParams(1, 1), [5], [1], forcing="random")
    rep = run_equivalence((2.0, 3.0), [5], [5])
    assert rep.b == 2.0


def test_translation_invariance():
    f = extremal_scalar_forcing(classify_regime(ScalarParams(1, 1)), 20)
    for dt in (0.5, 3.7, -11.25):
        assert translation_invariance([1.0], 1.0, f, dt) <= 1e-12
    _, g = build_construction(1.0, 2.0, (4, 16, 64), 23)
    assert translation_invariance([4.0, 16.0, 64.0], 23.0, g, 2.5) <= 1e-12
    pf = periodize(f, 7.0)
    assert translation_invariance([1.0], 1.0, pf.window(-30, 0), 1.75) <= 1e-12


def test_report_export(tmp_path):
    rep = run_equivalence(ScalarParams(2, 3), [5, 10], [5])
    rep.to_csv(tmp_path / "r.csv")
    rep.summary_csv(tmp_path / "s.csv")
    rows = list(csv.reader(open(tmp_path / "r.csv")))
    assert rows[0][:3] == ["kind", "parameter", "estimate"]
    assert [r[0] for r in rows[1:]] == ["periodic", "periodic", "ultimate"]
    summary = dict(csv.reader(open(tmp_path / "s.csv")))
    assert summary["verdict"] == "PASS"
    assert float(summary["ob_g0"]) == rep.ob_g0
    assert "PASS" in rep.text()
