from pysturm import *
from pysturm.defaults import make_rng, random_ordered_points
import json
import math
import os

import numpy as np
import pytest

PATH = os.path.dirname(os.path.realpath(__file__))


with open(os.path.join(PATH, 'oracles.json')) as f:
    oracles = json.load(f)


def sine_det(points, derivative_orders=None):
    """Closed-form determinant for q = 0, columns sqrt(2) d^r/dx^r sin(j pi x)."""
    n = len(points)
    if derivative_orders is None:
        derivative_orders = [0]*n
    m = np.empty((n, n))
    for i in range(n):
        k = (i + 1)*math.pi
        for j, (x, r) in enumerate(zip(points, derivative_orders)):
            m[i, j] = math.sqrt(2)*k**r*math.sin(k*x + r*math.pi/2)
    return np.linalg.det(m)


def test_node_spec():

    spec = NodeSpec.parse('0.2:1, 0.5:2,0.8')
    assert spec.points == (0.2, 0.5, 0.8)
    assert spec.multiplicities == (1, 2, 1)
    assert spec.total == 4
    assert spec.columns() == [(0.2, 0), (0.5, 0), (0.5, 1), (0.8, 0)]
    assert NodeSpec.parse(str(spec)) == spec
    assert NodeSpec.simple([0.1, 0.3]).multiplicities == (1, 1)

    for text in ('0.5:x', '0.5:0', '1.5:1', '0.6:1,0.4:1'):
        with pytest.raises(ValueError):
            NodeSpec.parse(text)


def test_coefficient_vector():

    b = CoefficientVector.of([0., 3., 4.])
    assert b.norm == 5.
    assert b.m_low == 2
    assert np.isclose(b.normalized().as_array(), [0., 0.6, 0.8]).all()
    assert np.asarray(b).shape == (3,)
    assert math.isclose(b.cosine_similarity([0., -6., -8.]), -1.)

    with pytest.raises(ZeroVector):
        CoefficientVector.of([0., 0.]).normalized()
    with pytest.raises(ValueError):
        CoefficientVector.of([1., math.inf])


@pytest.mark.usefixtures('zero_basis')
def test_free_slater_values(zero_basis):

    sub = zero_basis.subbasis(2)
    assert math.isclose(slater_det(sub, [0.25, 0.75]), oracles['slater_q0_quarter_points'], rel_tol=1e-8)

    h1 = zero_basis.subbasis(1)
    assert math.isclose(slater_det(h1, [0.3]), math.sqrt(2)*math.sin(0.3*math.pi), rel_tol=1e-8)

    rng = make_rng(5)
    sub = zero_basis.subbasis(4)
    for _ in range(10):
        x = rng.uniform(0., 1., 4)
        assert math.isclose(slater_det(sub, x), sine_det(x), rel_tol=1e-6, abs_tol=1e-9)


@pytest.mark.usefixtures('any_basis')
def test_repeated_points_vanish(any_basis):

    sub = any_basis.subbasis(4)
    assert abs(slater_det(sub, [0.2, 0.4, 0.4, 0.9])) <= 1e-12
    assert abs(slater_det(sub, [0.3, 0.3, 0.3, 0.3])) <= 1e-12


@pytest.mark.usefixtures('any_basis')
def test_antisymmetry(any_basis):

    sub = any_basis.subbasis(4)
    rng = make_rng(17)
    for _ in range(100):
        x = rng.uniform(0., 1., 4)
        i = int(rng.integers(0, 3))
        y = x.copy()
        y[i], y[i+1] = x[i+1], x[i]
        assert np.isclose(slater_det(sub, y), -slater_det(sub, x), rtol=1e-12, atol=1e-12)


@pytest.mark.usefixtures('zero_basis', 'normalized_zero_basis')
def test_sign_normalize_free(zero_basis, normalized_zero_basis):

    # raw probe determinant for k = 2 is -3
    assert slater_det(zero_basis.subbasis(2), [1/3, 2/3]) < 0
    assert normalized_zero_basis.signs[:2] == (1, -1)
    assert slater_det(normalized_zero_basis.subbasis(2), [0.3, 0.7]) > 0

    # idempotent
    assert sign_normalize(normalized_zero_basis).signs == normalized_zero_basis.signs


@pytest.mark.usefixtures('any_basis')
def test_positive_on_ordered_simplex(any_basis):

    rng = make_rng(23)
    for n in range(1, 6):
        sub = any_basis.subbasis(n)
        for _ in range(100):
            assert slater_det(sub, random_ordered_points(rng, n, separation=0.05)) > 0


@pytest.mark.usefixtures('any_basis')
def test_no_sign_change_along_segments(any_basis):

    sub = any_basis.subbasis(4)
    rng = make_rng(29)
    for _ in range(20):
        a = random_ordered_points(rng, 4, separation=0.02)
        b = random_ordered_points(rng, 4, separation=0.02)
        values = [slater_det(sub, (1 - s)*a + s*b) for s in np.linspace(0., 1., 50)]
        assert min(values) > 0


@pytest.mark.usefixtures('any_basis')
def test_sign_pattern_between_nodes(any_basis):

    n = 4
    sub = any_basis.subbasis(n)
    rng = make_rng(31)
    for _ in range(20):
        c = random_ordered_points(rng, n - 1, separation=0.05)
        edges = np.concatenate(([0.], c, [1.]))
        for j in range(n):
            x = (edges[j] + edges[j+1])/2
            value = slater_det(sub, np.append(c, x))
            assert np.sign(value) == (-1)**(n - 1 - j)


@pytest.mark.usefixtures('any_basis')
def test_not_identically_zero(any_basis):

    rng = make_rng(37)
    for n in range(1, 7):
        sub = any_basis.subbasis(n)
        values = [abs(slater_det(sub, rng.uniform(0., 1., n))) for _ in range(50)]
        assert max(values) > 1e-6


@pytest.mark.usefixtures('zero_basis')
def test_cofactors_free(zero_basis):

    s = cofactor_coeffs(zero_basis.subbasis(2), [0.5])
    assert np.isclose(s.as_array(), oracles['cofactors_q0_n2_half'], atol=1e-9).all()

    assert cofactor_coeffs(zero_basis.subbasis(1), []).values == (1.,)


@pytest.mark.usefixtures('any_basis')
def test_cofactor_expansion(any_basis):

    sub = any_basis.subbasis(3)
    c = [0.3, 0.6]
    s = cofactor_coeffs(sub, c)

    x = np.linspace(0., 1., 17)
    expansion = s.as_array() @ sub.values(x)
    direct = np.array([slater_det(sub, c + [xi]) for xi in x])
    assert np.max(np.abs(expansion - direct)) <= 1e-8*np.max(np.abs(direct))

    # the combination vanishes at the prescribed points
    assert np.max(np.abs(s.as_array() @ sub.values(c))) <= 1e-9*s.norm


@pytest.mark.usefixtures('zero_basis')
def test_cofactor_validation(zero_basis):

    sub = zero_basis.subbasis(3)
    with pytest.raises(ValueError):
        cofactor_coeffs(sub, [0.5])
    with pytest.raises(ValueError):
        cofactor_coeffs(sub, [0.5, 0.5])
    with pytest.raises(ValueError):
        cofactor_coeffs(sub, [0., 0.5])


@pytest.mark.usefixtures('any_basis')
def test_confluent_slater_reduces_to_slater(any_basis):

    sub = any_basis.subbasis(4)
    spec = NodeSpec.simple([0.15, 0.5, 0.85])
    for x in (0.05, 0.33, 0.7):
        assert math.isclose(confluent_slater(sub, spec, x), slater_det(sub, [0.15, 0.5, 0.85, x]),
                            rel_tol=1e-10, abs_tol=1e-12)

    with pytest.raises(ValueError):
        confluent_slater(sub, NodeSpec.simple([0.5]), 0.2)


@pytest.mark.usefixtures('zero_basis')
def test_confluent_double_zero_free(zero_basis):

    # S(1/2) = S'(1/2) = 0 leaves sin(pi x) + sin(3 pi x)
    sub = zero_basis.subbasis(3)
    spec = NodeSpec((0.5,), (2,))
    b = confluent_coeffs(sub, spec)
    assert abs(b.cosine_similarity([1., 0., 1.])) >= 1 - 1e-8

    s = LinearCombination(sub, b)
    d = s.derivatives_upto(0.5, 2)
    omega = 3*math.pi
    assert abs(d[0]) <= 1e-7*s.sup_norm
    assert abs(d[1]) <= 1e-7*s.sup_norm*omega
    assert abs(d[2]) >= 1e-4*s.sup_norm*omega**2


@pytest.mark.usefixtures('zero_basis')
def test_confluent_matrix_det_free(zero_basis):

    sub = zero_basis.subbasis(3)
    spec = NodeSpec((0.3, 0.7), (1, 2))
    det = confluent_matrix_det(sub, spec)
    expected = sine_det([0.3, 0.7, 0.7], [0, 0, 1])

    assert expected < 0
    assert math.isclose(det.value, expected, rel_tol=1e-7)
    assert float(det) == det.value
    assert det.relative > 1e-10

    simple = confluent_matrix_det(sub, NodeSpec.simple([0.2, 0.5, 0.9]))
    assert math.isclose(simple.value, slater_det(sub, [0.2, 0.5, 0.9]), rel_tol=1e-10)

    with pytest.raises(ValueError):
        confluent_matrix_det(sub, NodeSpec.simple([0.2, 0.5]))


@pytest.mark.usefixtures('cos_basis')
def test_confluent_matrix_det_grid_independent(cos_basis):

    spec = NodeSpec((0.25, 0.75), (2, 2))
    fine = confluent_matrix_det(cos_basis.subbasis(4), spec)
    coarse_basis = sign_normalize(solve_basis(cos_basis.problem, 4, n_grid=2048))
    coarse = confluent_matrix_det(coarse_basis, spec)

    assert fine.value != 0.
    assert math.isclose(fine.value, coarse.value, rel_tol=1e-6)


@pytest.mark.usefixtures('zero_basis')
def test_confluent_coeffs_validation(zero_basis):

    sub = zero_basis.subbasis(3)
    with pytest.raises(ValueError):
        confluent_coeffs(sub, NodeSpec((0.5,), (1,)))
    with pytest.raises(ValueError):
        confluent_coeffs(sub, NodeSpec((0.5,), (3,)))

    assert issubclass(NearSingular, ContractViolation)
