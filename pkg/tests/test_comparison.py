import json
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from talenti import fem, weighted_space
from talenti.comparison import (
    ComparisonReport,
    compare_fem,
    compare_half_line,
    coarea_check,
    detect_equality,
    domain_avr,
    gradient_lr_check,
    isoperimetric_check,
    talenti_compare,
)
from talenti.model_space import h_n
from talenti.radial_solver import solve_radial_poisson
from talenti.weighted_space import model


def test_disk_is_an_equality_case(disk_report):
    r = disk_report
    assert r.avr == 1.0
    assert r.passed
    assert r.equality_detected
    assert abs(r.talenti_margin) <= 0.05 * 0.05 * r.scale
    assert r.scale == pytest.approx(0.25, rel=1e-3)
    assert r.domain_measure == pytest.approx(math.pi, rel=5e-3)


def test_disk_gradient_energy(disk_report):
    g = disk_report.gradient_checks["r=p"]
    # int |grad u|^2 for u = (1 - r^2)/4 on the unit disk is pi/8
    assert g.rhs == pytest.approx(math.pi / 8, rel=5e-3)
    assert g.lhs == pytest.approx(math.pi / 8, rel=5e-3)
    assert disk_report.polya_szego.lhs == pytest.approx(math.pi / 8, rel=2e-2)


def test_sector_is_an_equality_case(quarter_sector_report):
    r = quarter_sector_report
    assert r.avr == pytest.approx(0.25)
    assert r.passed and r.equality_detected
    # the model ball has the sector's area
    assert r.r_a == pytest.approx(0.5, rel=1e-3)


def test_square_is_strict(square_report):
    r = square_report
    assert r.passed
    assert not r.equality_detected
    assert r.talenti_margin > 0
    assert r.talenti_deficit > 0.05 * r.deficit_scale
    assert r.isoperimetric_min_ratio > 1.0
    assert r.coarea_max_relative_residual < 0.03


def test_reports_all_inequalities(square_report):
    r = square_report
    assert set(r.gradient_checks) == {"r=1", "r=(1+p)/2", "r=p"}
    for g in r.gradient_checks.values():
        assert g.lhs <= g.rhs
    assert r.polya_szego.lhs <= r.polya_szego.rhs


def test_zero_datum():
    r = compare_fem(fem.Square(1.0), 0.0, 2.0, 0.2)
    assert r.scale == 0.0
    assert r.talenti_margin == 0.0 and r.talenti_deficit == 0.0
    assert r.equality_detected and r.passed
    assert r.isoperimetric_skipped == list(range(10))


def test_detect_equality_tolerance(square_report):
    assert not detect_equality(square_report)
    assert detect_equality(square_report, eq_tol=1.0)


@pytest.mark.parametrize("p", [2.0, 3.0])
def test_homogeneity_in_the_datum(p):
    lam = 2.0
    a = compare_fem(fem.Square(1.0), 1.0, p, 0.1)
    b = compare_fem(fem.Square(1.0), lam, p, 0.1)
    k = lam ** (1 / (p - 1))
    assert b.scale == pytest.approx(k * a.scale, rel=1e-6)
    assert b.talenti_deficit == pytest.approx(k * a.talenti_deficit, rel=0.05)


def test_chain_of_inequalities(square_report):
    # isoperimetry at every level implies the comparison: both hold together
    assert square_report.extras["chain_min_ratio"] >= 1.0
    assert square_report.talenti.margin_full >= -square_report.talenti.tolerance


@pytest.mark.parametrize("theta", [math.pi / 4, math.pi])
def test_sector_fem_matches_cone_half_line(theta):
    fem_rep = compare_fem(fem.Sector(1.0, theta), 1.0, 2.0, 0.05)
    hl = compare_half_line(weighted_space.cone(2.0, theta), 1.0, 1.0, 2.0)
    assert hl.avr == pytest.approx(theta / (2 * math.pi))
    assert fem_rep.avr == pytest.approx(hl.avr)
    assert fem_rep.scale == pytest.approx(hl.scale, rel=0.01)
    assert fem_rep.r_a == pytest.approx(hl.r_a, rel=0.01)
    assert hl.equality_detected and fem_rep.equality_detected


def test_half_line_model_ball_is_exact():
    r = compare_half_line(model(3.0), 1.0, 1.0, 2.5)
    assert r.equality_detected
    assert r.talenti_deficit <= 1e-10 * r.deficit_scale
    assert r.isoperimetric_min_ratio == pytest.approx(1.0, rel=1e-9)
    assert r.coarea_max_relative_residual < 1e-3


def test_half_line_rejects_increasing_datum():
    from talenti.radial_solver import Datum

    with pytest.raises(ValueError):
        compare_half_line(model(2.0), 1.0, Datum(lambda t: 1.0 + np.asarray(t)), 2.0)


def test_perturbed_cone_is_strict():
    r = compare_half_line(weighted_space.perturbed_cone(2.0, 0.5), 1.0, 1.0, 2.0)
    assert r.passed
    assert not r.equality_detected
    assert r.talenti_margin > 0
    assert r.isoperimetric_min_ratio > 1.0


def test_json_and_csv_roundtrip(square_report, tmp_path):
    d = json.loads(square_report.to_json(tmp_path / "r.json"))
    assert d["passed"] is True
    assert "seconds" not in d
    assert "seconds" in json.loads(square_report.to_json(timing=True))
    text = square_report.to_csv(tmp_path / "s.csv")
    header, row = text.strip().splitlines()
    assert header.split(",") == list(ComparisonReport.CSV_COLUMNS)
    assert len(row.split(",")) == len(ComparisonReport.CSV_COLUMNS)
    assert (tmp_path / "s.csv").read_text() == text


def test_talenti_compare_grid_mismatch():
    x = np.linspace(0, 1, 5)
    with pytest.raises(ValueError):
        talenti_compare(np.zeros(4), np.zeros(5), x, 1.0, 2.0, 2.0, 0.0)
    with pytest.raises(ValueError):
        talenti_compare(np.zeros(5), np.zeros(5), x + 0.1, 1.0, 2.0, 2.0, 0.0)


def test_gradient_exponent_range():
    v = solve_radial_poisson(model(2.0), 1.0, 1.0, 2.0)
    with pytest.raises(ValueError):
        gradient_lr_check(1.0, v, 1.0, 2.5, 2.0, 2.0, 0.0)
    with pytest.raises(ValueError):
        gradient_lr_check(1.0, v, 1.0, 0.5, 2.0, 2.0, 0.0)


def test_isoperimetric_check_skips_empty_levels():
    ratio, skipped = isoperimetric_check([1.0, 0.0], [0.1, 0.0], 1.0, 2.0)
    assert skipped == [1] and ratio > 0
    assert isoperimetric_check([0.0], [0.0], 1.0, 2.0) == (math.inf, [0])


def test_domain_avr():
    assert domain_avr(fem.Disk(2.0)) == 1.0
    assert domain_avr(fem.Square(1.0)) == 1.0
    assert domain_avr(fem.Sector(1.0, math.pi / 3)) == pytest.approx(1 / 6)
    assert domain_avr(fem.Sector(1.0, 2 * math.pi)) == 1.0


@given(st.lists(st.floats(0.0, 10.0), min_size=1, max_size=8))
def test_coarea_check_zero_on_identical(vals):
    assert coarea_check(vals, vals) == 0.0


@settings(max_examples=30, deadline=None)
@given(st.floats(0.05, 1.0), st.floats(1.2, 4.0), st.floats(1.01, 4.0))
def test_talenti_identity_profile_is_equality(avr, p, N):
    # u* = AVR^{-q/N} v gives zero margin and zero deficit
    x = np.linspace(0, 1, 101)
    v = (1 - x**2) / 4
    q = p / (p - 1)
    res = talenti_compare(v / avr ** (q / N), v, x, avr, p, N, 1e-12)
    assert abs(res.margin) < 1e-14 and res.deficit < 1e-12 and res.passed


@settings(max_examples=30, deadline=None)
@given(st.floats(0.0, 0.5))
def test_violation_reported(bump):
    x = np.linspace(0, 1, 101)
    v = 1 - x
    res = talenti_compare(v * (1 + bump), v, x, 1.0, 2.0, 2.0, 1e-12)
    expected = bump * math.sqrt(float(np.trapezoid((1 - x) ** 2 * h_n(2.0, x), x)))
    assert res.violation == pytest.approx(expected, rel=1e-3, abs=1e-12)
    assert res.deficit == pytest.approx(res.violation, rel=1e-12, abs=1e-15)
    assert res.passed == (bump <= 1e-12)
