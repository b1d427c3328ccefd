from pysturm import *
from pysturm.defaults import make_rng, random_unit_vector
from fractions import Fraction
import json
import math
import os

import numpy as np
import pytest
import sympy as sp

PATH = os.path.dirname(os.path.realpath(__file__))


with open(os.path.join(PATH, 'oracles.json')) as f:
    oracles = json.load(f)


def test_hermite_polynomials():

    for m, coefficients in oracles['hermite'].items():
        h = hermite(int(m))
        assert h.degree == int(m)
        assert list(h.coefficients) == coefficients

    assert hermite(3).to_text() == '8x^3 - 12x'
    assert hermite(2).to_text() == '4x^2 - 2'
    assert hermite(0).to_text() == '1'

    assert hermite(4)(Fraction(1, 2)) == 12 - 12 + 1
    assert math.isclose(hermite(4)(0.5), 1.)


def test_hermite_recurrence_budget():

    for m in range(MAX_HERMITE_DEGREE + 1):
        h = hermite(m)
        assert h.leading == 2**m
        assert h.ode_residual().is_zero

    with pytest.raises(BudgetExceeded):
        hermite(MAX_HERMITE_DEGREE + 1)
    with pytest.raises(ValueError):
        hermite(-1)


def test_gamma_and_normalization():

    for m, value in oracles['gamma'].items():
        assert math.isclose(gamma_norm(int(m)), value, rel_tol=1e-14)

    for n in range(1, 11):
        assert normalization_error(n) <= 1e-10

    h = OscillatorEigenfunction(3)
    assert h.eigenvalue == 5
    assert math.isclose(h(0.), -2*gamma_norm(2))
    with pytest.raises(ValueError):
        OscillatorEigenfunction(0)


def test_eigenfunction_solves_equation():

    h = OscillatorEigenfunction(4)
    x = np.linspace(-3., 3., 61)
    delta = 1e-4
    second = (h(x + delta) - 2*h(x) + h(x - delta))/delta**2
    residual = -second + x**2*h(x) - h.eigenvalue*h(x)

    assert np.max(np.abs(residual)) <= 1e-5


def test_slater_vandermonde_constant():

    assert math.isclose(slater_vandermonde_ratio_constant(2), oracles['slater_vandermonde_B2'], rel_tol=1e-14)
    assert math.isclose(slater_vandermonde_ratio_constant(1), gamma_norm(0))

    for n in range(1, MAX_SLATER_SIZE):
        constant = slater_vandermonde_constant(n, samples=50, seed=n)
        assert constant == slater_vandermonde_ratio_constant(n)

    # two points: S = gamma_0 gamma_1 2 (x_2 - x_1) exp(-(x_1^2 + x_2^2)/2)
    x = [-0.4, 1.1]
    expected = 2*gamma_norm(0)*gamma_norm(1)*(x[1] - x[0])*math.exp(-(x[0]**2 + x[1]**2)/2)
    assert math.isclose(oscillator_slater_det(x), expected, rel_tol=1e-12)

    with pytest.raises(ValueError):
        slater_vandermonde_constant(MAX_SLATER_SIZE + 1)


def test_eigenfunction_zero_counts():

    for n in range(1, 9):
        b = np.zeros(n)
        b[-1] = 1.
        multiplicities = oscillator_root_multiplicities(b)
        assert multiplicities == ({1: n - 1} if n > 1 else {})
        assert oscillator_zero_count(b) == n - 1


def test_double_root():

    # 4 (x - 1)^2 = H_2 - 4 H_1 + 6 H_0
    x = sp.Symbol('x')
    poly = sp.Poly(4*(x - 1)**2, x)
    assert hermite_expansion(poly) == [6, -4, 1]

    b = coefficients_for_polynomial(poly, 3)
    assert oscillator_root_multiplicities(b) == {2: 1}
    assert root_multiplicity(polynomial_part(b), 1) == 2
    assert oscillator_zero_count(b) == 2

    with pytest.raises(ValueError):
        coefficients_for_polynomial(sp.Poly(x**3, x), 3)


def test_zero_count_bound():

    rng = make_rng(59)
    for _ in range(200):
        n = int(rng.integers(1, 9))
        assert oscillator_zero_count(random_unit_vector(rng, n)) <= n - 1

    with pytest.raises(ZeroVector):
        oscillator_zero_count([0., 0., 0.])
    with pytest.raises(ZeroVector):
        oscillator_root_multiplicities([0., 0.])
    with pytest.raises(BudgetExceeded):
        oscillator_zero_count(np.ones(MAX_ZERO_COUNT_SIZE + 1))


def test_simple_prescribed_zeros():

    rng = make_rng(61)
    for n in range(2, 7):
        values = sorted({Fraction(int(v), 8) for v in rng.choice(np.arange(-24, 25), n - 1, replace=False)})
        orders, total = confluent_orders(GroupedPoint(tuple(values), (1,)*(n - 1)), n)
        assert orders == (1,)*(n - 1)
        assert total == n - 1


@pytest.mark.parametrize('values, multiplicities, n', [((0,), (5,), 6),
                                                       ((-1, 1), (2, 3), 6),
                                                       ((Fraction(-1, 2), 0, Fraction(2, 3)), (1, 2, 1), 5),
                                                       ((Fraction(1, 3),), (2,), 3)])
def test_confluent_prescribed_zeros(values, multiplicities, n):

    orders, total = confluent_orders(GroupedPoint(values, multiplicities), n)

    assert orders == multiplicities
    assert total == n - 1


def test_confluent_polynomial_validation():

    with pytest.raises(ValueError):
        confluent_polynomial(GroupedPoint((0,), (2,)), 4)

    # a single simple zero at c leaves, up to a constant, x - c
    poly = confluent_polynomial(GroupedPoint((Fraction(1, 2),), (1,)), 2)
    assert poly.degree() == 1
    assert poly.eval(sp.Rational(1, 2)) == 0


def test_rationalize():

    assert rationalize(0.5) == sp.Rational(1, 2)
    assert rationalize(1/3) == sp.Rational(1, 3)
    assert rationalize(5.999999999999999) == 6
    assert rationalize(math.pi) != sp.Rational(22, 7)
    assert abs(float(rationalize(math.pi)) - math.pi) <= 1e-12*math.pi


def test_real_root_multiplicities():

    x = sp.Symbol('x')
    p = sp.Poly((x - 1)**2*(x + 2)**3*(x**2 + 1)*(x - 5), x)
    assert real_root_multiplicities(p) == {1: 1, 2: 1, 3: 1}
    assert root_multiplicity(p, 1) == 2
    assert root_multiplicity(p, -2) == 3
    assert root_multiplicity(p, 0) == 0
    assert root_multiplicity(sp.Poly((3*x - 1)**4, x), Fraction(1, 3)) == 4

    assert real_root_multiplicities(sp.Poly(x**2 + 1, x)) == {}
    with pytest.raises(ZeroVector):
        real_root_multiplicities(sp.Poly(0, x))
