from fractions import Fraction

import pytest
from hypothesis import given, strategies as st

from lumpkit.polyring import (
    Gaussian,
    I,
    ParameterError,
    RSTPoly,
    SigmaParams,
    SigmaPoly,
    diff_rst,
    diff_sigma,
    evaluate,
    evaluate_sigma,
    evaluate_termwise,
    format_coefficient,
    modulus_squared,
    substitute_sigma,
    to_mpq,
)
from lumpkit.schur_engine import schur_p

small_q = st.fractions(min_value=-5, max_value=5, max_denominator=6)
gaussians = st.builds(Gaussian, small_q, small_q)


def _sigma_poly(terms):
    out = SigmaPoly.zero()
    for exps, c in terms:
        mono = SigmaPoly.constant(c)
        for slot, e in enumerate(exps):
            mono = mono * SigmaPoly.var(slot // 2 + 1, bool(slot % 2)) ** e
        out = out + mono
    return out


sigma_polys = st.lists(
    st.tuples(st.tuples(*[st.integers(0, 2)] * 6), gaussians), min_size=0, max_size=20
).map(_sigma_poly)
nonzero_sigma_polys = sigma_polys.filter(lambda p: not p.is_zero())

rst_polys = st.dictionaries(
    st.tuples(st.integers(0, 3), st.integers(0, 3), st.integers(0, 2)), gaussians, max_size=12
).map(RSTPoly.from_exponents)
points = st.tuples(small_q, small_q, small_q)

PARAMS = SigmaParams(Fraction(1, 2), Fraction(1, 2))
s1, s2, s3 = (SigmaPoly.var(j) for j in (1, 2, 3))
r, s, t = (RSTPoly.var(v) for v in "rst")


# --- coefficients -----------------------------------------------------------


def test_gaussian_arithmetic_is_exact():
    z = Gaussian(Fraction(1, 3), Fraction(-2, 7))
    assert z * z.conjugate() == z.abs2()
    assert (z / z) == 1
    assert I**2 == -1 and I**-1 == -I
    assert Gaussian.coerce(complex(0.5, -0.25)) == Gaussian(Fraction(1, 2), Fraction(-1, 4))
    with pytest.raises(ZeroDivisionError):
        z / 0


def test_to_mpq_accepts_strings_and_rejects_bools():
    assert to_mpq("3/4") == Fraction(3, 4)
    assert to_mpq("0.5") == Fraction(1, 2)
    with pytest.raises(TypeError):
        to_mpq(True)


def test_coefficient_text():
    assert format_coefficient((to_mpq("1/2"), to_mpq(-3))) == "1/2-3*i"
    assert Gaussian(0, 1).text() == "0+1*i"


# --- SigmaPoly --------------------------------------------------------------


def test_conjugate_swaps_variables():
    assert s1.conjugate() == SigmaPoly.var(1, starred=True)
    p = (s1 * I + s2.conjugate() * 3) * s3
    assert p.conjugate() == (SigmaPoly.var(1, True) * (-I) + s2 * 3) * SigmaPoly.var(3, True)


def test_multiplicative_identity():
    p2 = s1 * s1 * Fraction(1, 2) + s2
    assert p2 * 1 == p2
    assert p2 * SigmaPoly.one() == p2


def test_star_variables_keeps_coefficients():
    p = s1 * I
    assert p.star_variables() == SigmaPoly.var(1, True) * I


def test_truncate_drops_high_indices():
    p = s1 + SigmaPoly.var(4) * s2
    assert p.truncate(3) == s1


def test_diff_sigma_examples():
    assert diff_sigma(s1**3 * Fraction(1, 6), 1) == s1**2 * Fraction(1, 2)
    assert diff_sigma(schur_p(3), 3) == SigmaPoly.one()
    assert diff_sigma(schur_p(2), 3).is_zero()
    assert diff_sigma(s1 * SigmaPoly.var(1, True), 1, starred=True) == s1
    with pytest.raises(ValueError):
        diff_sigma(s1, 0)


def test_canonical_text_orders_by_degree():
    assert schur_p(2).text() == "(1+0*i)*s2 + (1/2+0*i)*s1^2"
    assert SigmaPoly.zero().text() == "0"


def test_weighted_degree_of_generators():
    assert s3.weighted_degree() == 3
    assert SigmaPoly.var(2, True).weighted_degree() == 2
    assert SigmaPoly.zero().weighted_degree() == -1


@given(sigma_polys, sigma_polys, sigma_polys)
def test_ring_axioms(a, b, c):
    assert (a + b) + c == a + (b + c)
    assert (a * b) * c == a * (b * c)
    assert a + b == b + a
    assert a * b == b * a
    assert a * (b + c) == a * b + a * c
    assert (a - a).is_zero()


@given(sigma_polys)
def test_conjugate_is_an_involution(p):
    assert p.conjugate().conjugate() == p


@given(nonzero_sigma_polys, nonzero_sigma_polys)
def test_weighted_degree_is_additive(p, q):
    assert (p * q).weighted_degree() == p.weighted_degree() + q.weighted_degree()


@given(sigma_polys, sigma_polys)
def test_substitution_is_a_ring_homomorphism(p, q):
    sp, sq = substitute_sigma(p, PARAMS), substitute_sigma(q, PARAMS)
    assert substitute_sigma(p * q, PARAMS) == sp * sq
    assert substitute_sigma(p + q, PARAMS) == sp + sq


@given(sigma_polys, points)
def test_substitution_agrees_with_sigma_evaluation(p, pt):
    values = PARAMS.sigma_values(*pt)
    assert evaluate(substitute_sigma(p, PARAMS), pt) == evaluate_sigma(p, values)


# --- substitution fixtures --------------------------------------------------


def test_sigma_images():
    assert substitute_sigma(s1, PARAMS) == r * I - s
    assert substitute_sigma(SigmaPoly.var(4), PARAMS).is_zero()
    assert substitute_sigma(s2, PARAMS) == s * (-2) + t * 2 + s * I
    # sigma_3 = i s / (6 b^2 w) - i t / (3 b w) = 4i s/3 - 4i t/3 at b = w = 1/2
    assert substitute_sigma(s3, PARAMS) == (s - t) * Gaussian(0, Fraction(4, 3))


def test_starred_variables_map_to_conjugate_images():
    img = substitute_sigma(SigmaPoly.var(2, True), PARAMS)
    assert img == substitute_sigma(s2, PARAMS).conjugate()


def test_gamma_shifts():
    params = SigmaParams(Fraction(1, 2), Fraction(1, 2), (Fraction(1), Fraction(2), Fraction(3)))
    assert substitute_sigma(s1, params) == (r + 1) * I - s
    assert substitute_sigma(s3, params) == (s - t) * Gaussian(0, Fraction(4, 3)) + Gaussian(0, 3)


@pytest.mark.parametrize("b, omega", [(0, 1), (1, 0)])
def test_degenerate_parameters(b, omega):
    with pytest.raises(ParameterError):
        SigmaParams(b, omega)


# --- RSTPoly ----------------------------------------------------------------


def test_modulus_squared_examples():
    assert modulus_squared(r * I - s) == r * r + s * s
    real = r * 3 + t
    assert modulus_squared(real) == real * real
    assert modulus_squared(r * I).real


@given(rst_polys, points)
def test_modulus_squared_is_pointwise_abs2(p, pt):
    sq = modulus_squared(p)
    assert sq.real
    assert evaluate(sq, pt) == evaluate(p, pt).abs2()


def test_evaluate_examples():
    assert evaluate(r * r + s * s, (3, 4, 11)) == 25
    assert evaluate(RSTPoly.zero(), (1, 2, 3)) == 0
    assert evaluate(r * r + s * s, (3.0, 4.0, 0.0)) == pytest.approx(25.0)


@given(rst_polys, points)
def test_evaluate_matches_termwise(p, pt):
    assert evaluate(p, pt) == evaluate_termwise(p, pt)


def test_diff_rst_examples():
    assert diff_rst(r * r * s, "r") == r * s * 2
    assert diff_rst(diff_rst(r * r + s * s, "r"), "s").is_zero()
    assert diff_rst(t**3, "t", 2) == t * 6
    with pytest.raises(ValueError):
        diff_rst(r, "r", 0)


@given(rst_polys)
def test_mixed_partials_commute(p):
    assert diff_rst(diff_rst(p, "r"), "s") == diff_rst(diff_rst(p, "s"), "r")


@given(rst_polys, points)
def test_central_difference_approximates_derivative(p, pt):
    x, y, z = (float(v) for v in pt)
    exact = complex(evaluate(diff_rst(p, "r"), pt))
    # Taylor remainder: |error| <= h^2/6 * max |d^3 p / dr^3| over [x-h, x+h].
    third = sum(
        abs(complex(c)) * e * (e - 1) * (e - 2) * 6.0 ** (e - 3) * abs(y) ** es * abs(z) ** et
        for (e, es, et), c in p.items()
        if e >= 3
    )
    for h in (1e-2, 5e-3):
        fd = (evaluate(p, (x + h, y, z)) - evaluate(p, (x - h, y, z))) / (2 * h)
        assert abs(fd - exact) <= h * h / 6 * third + 1e-9 * (1 + abs(exact))


def test_real_flag_is_checked():
    with pytest.raises(ValueError):
        RSTPoly.from_exponents({(1, 0, 0): 1j}, real=True)
    assert RSTPoly.from_exponents({(1, 0, 0): 2}, real=True).real


def test_fix_t_and_degrees():
    p = r * r * t + s * t * t
    fixed = p.fix_t(Fraction(1, 2))
    assert fixed == r * r * Fraction(1, 2) + s * Fraction(1, 4)
    assert p.degree_in("t") == 2 and p.total_degree() == 3
