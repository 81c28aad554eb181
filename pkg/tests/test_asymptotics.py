import math
from fractions import Fraction

import numpy as np
import pytest
import sympy

from lumpkit.asymptotics import (
    GroupSettings,
    PatternSettings,
    classify_groups,
    compare_maps,
    diameter,
    hausdorff,
    heat_poly,
    heat_roots,
    lattice_fit,
    leading_condition,
    leading_schur_roots,
    match_points,
    mirror_distance,
    nearest_spacing,
    newton_roots,
    nu_of_t,
    pattern_checks,
    predict_peaks,
    rescaled_schur,
    scaling_ratio,
    triangle_orientation,
)
from lumpkit.field_eval import PeakMap, PeakRecord, SolutionSpec
from lumpkit.polyring import SigmaPoly, evaluate, substitute_sigma
from lumpkit.schur_engine import q_expansion, w_minor

SPEC11 = SolutionSpec.of((1, 1))


# --- heat polynomials -------------------------------------------------------


def test_low_order_heat_polynomials():
    assert heat_poly(0).coeffs == {(0, 0): 1}
    assert heat_poly(1).coeffs == {(1, 0): 1}
    assert heat_poly(2).coeffs == {(2, 0): Fraction(1, 2), (0, 1): 1}
    assert heat_poly(3).coeffs == {(3, 0): Fraction(1, 6), (1, 1): 1}
    assert heat_poly(-1).coeffs == {}


def test_generating_function_through_order_twelve():
    alpha, rho, nu = sympy.symbols("alpha rho nu")
    series = sympy.series(sympy.exp(alpha * rho + alpha**2 * nu), alpha, 0, 13).removeO()
    for r in range(13):
        expected = sympy.expand(series.coeff(alpha, r))
        built = sum(sympy.Rational(int(c.numerator), int(c.denominator)) * rho**j * nu**k for (j, k), c in heat_poly(r).coeffs.items())
        assert sympy.expand(built - expected) == 0


@pytest.mark.parametrize("r", range(16))
def test_heat_derivative_identities(r):
    h = heat_poly(r)
    assert h.diff_rho().coeffs == heat_poly(r - 1).coeffs
    assert h.diff_nu().coeffs == (heat_poly(r - 2).coeffs if r >= 2 else {})


def test_heat_evaluation_paths_agree():
    h = heat_poly(5)
    assert h.evaluate_exact(Fraction(3, 2), Fraction(-2)) == sum(
        c * Fraction(3, 2) ** j * Fraction(-2) ** k for (j, k), c in h.coeffs.items()
    )
    assert h.evaluate(1.5, -2.0) == pytest.approx(float(h.evaluate_exact(Fraction(3, 2), -2)))
    np.testing.assert_allclose(np.sort_complex(heat_roots(2, -2)), [-2, 2])


@pytest.mark.parametrize("omega, t, nu", [(Fraction(1, 2), -5, 2), (Fraction(1, 2), 5, -2), (1, 0, -1)])
def test_nu_of_t(omega, t, nu):
    assert nu_of_t(omega, t) == nu


def test_rescaled_schur_is_exact_at_first_order():
    rho = np.array([0.5 + 0.3j, -2 + 1j])
    z = rho * 20
    np.testing.assert_allclose(rescaled_schur(SPEC11, 1, z.real, z.imag, 400.0), rho, rtol=1e-14)


@pytest.mark.parametrize("sign", [1, -1])
def test_rescaled_schur_error_decays_like_inverse_root_t(sign):
    rho = 3 * np.exp(1j * np.linspace(0, 2 * np.pi, 16, endpoint=False))
    errors = []
    for mag in (400.0, 40_000.0):
        t = sign * mag
        nu = float(nu_of_t(SPEC11.omega, t))
        z = rho * math.sqrt(mag)
        worst = 0.0
        for n in range(2, 6):
            h = heat_poly(n).evaluate(rho, nu)
            diff = rescaled_schur(SPEC11, n, z.real, z.imag, t) - h
            worst = max(worst, np.abs(diff).max() / np.abs(h).max())
        errors.append(worst)
    # Two decades in |t| should shrink the error tenfold.
    assert errors[1] == pytest.approx(errors[0] / 10, rel=0.15)
    assert errors[1] < 0.05


# --- leading condition ------------------------------------------------------


def test_leading_condition_is_the_bracketed_combination():
    lam = SPEC11.lam
    params = SPEC11.params
    bracket = SigmaPoly.zero()
    for s, c in q_expansion(lam, (0, 1), SPEC11.b).items():
        bracket = bracket + w_minor(lam, s, SPEC11.k0, K=3).scale(c)
    cond = leading_condition(SPEC11, 10)
    assert cond.poly == substitute_sigma(bracket, params).fix_t(10)


@pytest.mark.parametrize(
    "parts", [(1,), (2,), (1, 1), (3,), (1, 2), (1, 1, 1), (4,), (1, 3), (2, 2), (1, 1, 2), (1, 1, 1, 1)]
)
def test_leading_condition_degree_is_lump_count(parts):
    spec = SolutionSpec.of(parts)
    assert leading_condition(spec, 10).poly.total_degree() == spec.M


def test_float_leading_condition_matches_exact():
    spec = SolutionSpec.of((1, 2))
    cond = leading_condition(spec, Fraction(-10))
    rng = np.random.default_rng(5)
    pts = rng.uniform(-10, 10, size=(12, 2))
    f, _, _ = cond.jet(pts[:, 0], pts[:, 1])
    exact = np.array([complex(evaluate(cond.poly, (r, s, 0.0))) for r, s in pts])
    np.testing.assert_allclose(f, exact, rtol=1e-9)


def test_leading_zero_set_is_finite():
    cond = leading_condition(SPEC11, 10)
    r, s = sympy.symbols("r s")
    re_part = im_part = sympy.Integer(0)
    for (er, es, _), c in cond.poly.items():
        mono = r**er * s**es
        re_part += sympy.Rational(int(c.re.numerator), int(c.re.denominator)) * mono
        im_part += sympy.Rational(int(c.im.numerator), int(c.im.denominator)) * mono
    res = sympy.resultant(re_part, im_part, r)
    assert sympy.Poly(res, s).degree() > 0


# --- prediction -------------------------------------------------------------


@pytest.fixture(scope="module")
def predicted11():
    return {t: classify_groups(predict_peaks(SPEC11, t), SPEC11) for t in (10.0, -10.0)}


@pytest.mark.parametrize("t", [10.0, -10.0])
def test_prediction_for_one_one(predicted11, t):
    pm = predicted11[t]
    assert len(pm.peaks) == SPEC11.M
    assert pm.notes["consistent"]
    assert (pm.notes["multi_groups"], pm.notes["singles"]) == (2, 2)
    cond = leading_condition(SPEC11, t, exact=False)
    pos = pm.positions()
    f, fr, fs = cond.jet(pos[:, 0], pos[:, 1])
    assert np.all(np.abs(f) <= 1e-6 * (np.abs(fr) + np.abs(fs)) * (1 + np.abs(pos).max()))


def test_multi_groups_sit_in_the_axis_band(predicted11):
    for t, pm in predicted11.items():
        cross = 1 if t > 0 else 0
        members = np.array([[p.r, p.s] for p in pm.peaks if p.kind == "multi"])
        assert np.abs(members[:, cross]).max() <= GroupSettings().band * math.sqrt(abs(t))


def test_newton_merges_duplicate_seeds():
    cond = leading_condition(SPEC11, 10.0, exact=False)
    root = predict_peaks(SPEC11, 10.0).positions()[0]
    found = newton_roots(cond, np.array([root + 1e-3, root - 1e-3, root]), half=20.0)
    assert len(found) == 1
    np.testing.assert_allclose(found[0], root, atol=1e-8)


def test_prediction_rejects_zero_time():
    with pytest.raises(ValueError):
        predict_peaks(SPEC11, 0.0)


def test_template_roots_for_simple_shapes():
    one = leading_schur_roots(SolutionSpec.of((1,)), 10.0)
    np.testing.assert_allclose(one, [0])
    two = np.sort_complex(leading_schur_roots(SolutionSpec.of((2,)), 10.0))
    np.testing.assert_allclose(two, [-2, 2])  # rho^2 / 2 - 2 = 0


# --- classification ---------------------------------------------------------


def _map(points, t, spec):
    return PeakMap([PeakRecord(float(r), float(s), 1.0) for r, s in points], t, spec, "predicted")


def test_classification_takes_tight_runs_first():
    spec = SolutionSpec.of((1, 1))  # n = 2, m_n = 2, N = 2
    pts = [(-9, 0), (-8, 0.1), (0, 0), (7, 0), (8, -0.1), (0, 9)]
    pm = classify_groups(_map(pts, 100.0, spec), spec)
    kinds = {(p.r, p.s): p.kind for p in pm.peaks}
    assert kinds[(0.0, 0.0)] == "single" and kinds[(0.0, 9.0)] == "single"
    assert pm.notes["multi_groups"] == 2 and pm.notes["consistent"]
    assert len({p.group for p in pm.peaks}) == 4


def test_classification_uses_s_axis_for_negative_time():
    spec = SolutionSpec.of((1, 1))
    pts = [(0, -9), (0.1, -8), (0, 7), (-0.1, 8), (9, 0), (-9, 3)]
    pm = classify_groups(_map(pts, -100.0, spec), spec)
    assert pm.notes["multi_groups"] == 2 and pm.notes["singles"] == 2


def test_inconsistent_counts_are_flagged():
    spec = SolutionSpec.of((1, 1))
    pm = classify_groups(_map([(0, 0), (30, 30)], 100.0, spec), spec)
    assert not pm.notes["consistent"]
    with pytest.raises(ValueError):
        classify_groups(_map([], 100.0, spec), spec)


# --- geometry and patterns --------------------------------------------------


def test_geometry_helpers():
    square = np.array([[0, 0], [1, 0], [0, 1], [1, 1]], float)
    assert diameter(square) == pytest.approx(math.sqrt(2))
    assert nearest_spacing(square) == pytest.approx(1)
    assert hausdorff(square, square + [0, 0.5]) == pytest.approx(0.5)
    rows, cols, dist = match_points(square, square[::-1] + 0.01)
    assert np.all(dist < 0.02)
    assert mirror_distance(square - 0.5, "s") == pytest.approx(0)
    assert mirror_distance(np.array([[1.0, 0], [2, 0], [3, 1]]), "r") > 0.1


def test_lattice_fit_accepts_sheared_grid_and_rejects_noise():
    ii, jj = np.meshgrid(range(3), range(4), indexing="ij")
    grid = np.stack([ii.ravel() * 2.0 + jj.ravel() * 0.5, jj.ravel() * 1.5], axis=1)
    assert lattice_fit(grid, 3, 4) < 1e-9
    noisy = grid + np.random.default_rng(0).normal(scale=0.4, size=grid.shape)
    assert lattice_fit(noisy, 3, 4) > 0.05
    assert lattice_fit(grid[:-1], 3, 4) == math.inf


def test_triangle_orientation_sign():
    tri = np.array([(-k, h) for k in range(4) for h in np.linspace(-k, k, k + 1)], float)
    assert triangle_orientation(tri) > 0
    assert triangle_orientation(-tri) < 0


def test_scaling_ratio_of_an_exact_dilation():
    pts = np.array([[1.0, 2.0], [-3.0, 0.5], [0.2, -4.0]])
    median, ratios = scaling_ratio(pts, 2 * pts[::-1])
    assert median == pytest.approx(2.0)
    np.testing.assert_allclose(ratios, 2.0)


def test_pattern_checks_on_synthetic_shapes():
    spec = SolutionSpec.of((4, 4, 4))
    ii, jj = np.meshgrid(range(3), range(4), indexing="ij")
    pm = _map(np.stack([ii.ravel() * 5.0, jj.ravel() * 4.0], axis=1), 100.0, spec)
    report = pattern_checks(pm, spec)
    assert report.passed("lattice")
    doc = report.to_json()
    assert doc["partition"] == [4, 4, 4] and doc["checks"][0]["name"] == "lattice"

    odd = SolutionSpec.of((1, 3))
    sym = _map([(-2, 1), (2, 1), (-1, 3), (1, 3)], 50.0, odd)
    assert pattern_checks(sym, odd).passed("mirror_s_axis")

    plain = SolutionSpec.of((1, 5))
    assert pattern_checks(_map([(0, 0), (1, 1)], 5.0, plain), plain).checks[0]["name"] == "no_special_shape"


def test_duality_check_uses_partner_map():
    spec = SolutionSpec.of((2, 2))
    pts = np.array([(-3.0, 2.0), (3.0, 2.0), (-3.0, -2.0), (3.0, -2.0)])
    report = pattern_checks(_map(pts, 25.0, spec), spec, PatternSettings(), partner=_map(pts + 0.01, -25.0, spec))
    assert report.passed("duality")
    assert report.checks[-1]["informational"]


def test_compare_maps_summary():
    spec = SPEC11
    a = _map([(0, 0), (10, 0)], 10.0, spec)
    b = _map([(0.5, 0), (10, 1)], 10.0, spec)
    out = compare_maps(a, b)
    assert out["mean"] == pytest.approx(0.75)
    assert out["relative_mean"] == pytest.approx(0.075)
    assert compare_maps(a, _map([], 10.0, spec))["mean"] == math.inf
