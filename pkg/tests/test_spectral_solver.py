from pysturm import *
from pysturm.defaults import make_rng
import math

import numpy as np
import pytest


@pytest.fixture(scope='module')
def flat():
    return DirichletProblem.from_source('0')


def test_prufer_angle_free_problem(flat):

    assert math.isclose(prufer_terminal_angle(flat, math.pi**2), math.pi, abs_tol=1e-8)
    # theta' = cos(theta)^2 gives tan(theta) = x
    assert math.isclose(prufer_terminal_angle(flat, 0.), math.pi/4, abs_tol=1e-8)

    for j in (1, 3, 7):
        k = j*math.pi
        assert math.isclose(prufer_terminal_angle(flat, k**2, scale=k), k, rel_tol=1e-9)


def test_prufer_angle_is_increasing():

    problem = DirichletProblem.from_source('10*cos(4*x)')
    rng = make_rng(11)
    for _ in range(100):
        a, b = np.sort(rng.uniform(-50., 500., 2))
        if b - a < 1e-3:
            continue
        assert prufer_terminal_angle(problem, a) < prufer_terminal_angle(problem, b)


def test_prufer_invalid_arguments(flat):

    with pytest.raises(ValueError):
        prufer_terminal_angle(flat, math.nan)
    with pytest.raises(ValueError):
        prufer_terminal_angle(flat, 1., scale=0.)


@pytest.mark.usefixtures('zero_basis')
def test_free_eigenpairs(zero_basis):

    assert zero_basis.n == 12
    for pair in zero_basis.pairs:
        j = pair.index
        assert math.isclose(pair.eigenvalue, (j*math.pi)**2, rel_tol=1e-8)
        exact = math.sqrt(2)*np.sin(j*math.pi*pair.grid)
        assert np.max(np.abs(pair.values - exact)) <= 1e-7
        assert pair.slopes[0] > 0
        assert pair.node_count() == j - 1


def test_constant_shift():

    problem = DirichletProblem.from_source('7.5')
    for j in range(1, 5):
        lam = find_eigenvalue(problem, j)
        assert abs(lam - (j*math.pi)**2 - 7.5) <= 1e-8*(j*math.pi)**2


@pytest.mark.usefixtures('any_basis')
def test_node_counts_and_ordering(any_basis):

    assert [p.node_count() for p in any_basis.pairs] == list(range(any_basis.n))
    assert np.all(np.diff(any_basis.eigenvalues) > 0)


def test_invalid_index(flat):

    with pytest.raises(ValueError):
        find_eigenvalue(flat, 0)
    with pytest.raises(ValueError):
        solve_eigen(flat, 1, n_grid=100)


@pytest.mark.usefixtures('zero_basis', 'cos_basis')
def test_orthonormality(zero_basis, cos_basis):

    gram = orthonormality_matrix(zero_basis.subbasis(6))
    assert np.max(np.abs(gram - np.eye(6))) <= 1e-8

    gram = orthonormality_matrix(cos_basis.subbasis(6))
    assert np.max(np.abs(gram - np.eye(6))) <= 1e-7

    assert np.isclose(orthonormality_matrix(zero_basis.subbasis(1)), [[1.]]).all()


@pytest.mark.usefixtures('zero_basis')
def test_eigenfunction_derivatives(zero_basis):

    h1 = zero_basis.pairs[0]
    lam = math.pi**2
    root2 = math.sqrt(2)

    assert math.isclose(eval_derivative(h1, 0.5, 0), root2, rel_tol=1e-8)
    assert math.isclose(eval_derivative(h1, 0.3, 1), root2*math.pi*math.cos(0.3*math.pi), rel_tol=1e-7)
    assert math.isclose(eval_derivative(h1, 0.5, 2), -lam*root2, rel_tol=1e-7)
    for x in (0.2, 0.45, 0.9):
        assert math.isclose(eval_derivative(h1, x, 4), lam**2*root2*math.sin(math.pi*x), rel_tol=1e-6)

    with pytest.raises(OrderBudget):
        eval_derivative(h1, 0.5, 13)
    with pytest.raises(ValueError):
        eval_derivative(h1, 1.5, 0)


@pytest.mark.usefixtures('cos_basis')
def test_third_derivative_matches_finite_difference(cos_basis):

    pair = cos_basis.pairs[2]
    x = 0.37
    delta = 1e-4
    fd = (eval_derivative(pair, x + delta, 2) - eval_derivative(pair, x - delta, 2))/(2*delta)
    value = eval_derivative(pair, x, 3)
    scale = pair.eigenvalue**1.5

    assert abs(value - fd) <= 1e-6*scale


@pytest.mark.usefixtures('any_basis')
def test_grid_residual(any_basis):

    q = any_basis.problem.potential
    x = any_basis.grid[::8]
    dx = x[1] - x[0]
    for pair in any_basis.pairs:
        h = pair.values[::8]
        second = (h[2:] - 2*h[1:-1] + h[:-2])/dx**2
        residual = second - (q.values(x[1:-1]) - pair.eigenvalue)*h[1:-1]
        assert np.max(np.abs(residual)) <= 1e-3*abs(pair.eigenvalue)*np.max(np.abs(h))


def test_grid_refinement():

    problem = DirichletProblem.from_source('10*cos(4*x)')
    coarse = solve_eigen(problem, 3, n_grid=4096)
    fine = solve_eigen(problem, 3, n_grid=8192)

    assert math.isclose(coarse.eigenvalue, fine.eigenvalue, rel_tol=1e-9)
    assert np.max(np.abs(coarse.values - fine.values[::2])) <= 1e-8


def test_grid_default_from_environment(monkeypatch):

    monkeypatch.delenv('SOL_GRID_DEFAULT', raising=False)
    assert grid_default() == 4096

    monkeypatch.setenv('SOL_GRID_DEFAULT', '512')
    assert grid_default() == 512

    monkeypatch.setenv('SOL_GRID_DEFAULT', '100')
    with pytest.raises(ValueError):
        grid_default()

    monkeypatch.setenv('SOL_GRID_DEFAULT', 'fine')
    with pytest.raises(ValueError):
        grid_default()


@pytest.mark.usefixtures('zero_basis')
def test_spectral_basis(zero_basis):

    sub = zero_basis.subbasis(3)
    assert sub.n == 3
    assert math.isclose(sub.fermionic_ground_energy, 14*math.pi**2, rel_tol=1e-8)

    x = np.linspace(0.1, 0.9, 5)
    assert sub.values(x).shape == (3, 5)
    assert sub.derivative_table(x, 3).shape == (4, 3, 5)
    assert sub.column(0.25).shape == (3,)
    assert np.isclose(sub.values(x)[1], math.sqrt(2)*np.sin(2*math.pi*x), atol=1e-8).all()

    flipped = sub.with_flips([False, True, False])
    assert flipped.signs == (1, -1, 1)
    assert np.isclose(flipped.values(x)[1], -sub.values(x)[1]).all()

    with pytest.raises(ValueError):
        zero_basis.subbasis(0)
    with pytest.raises(ValueError):
        SpectralBasis(zero_basis.problem, zero_basis.pairs[1:3])


def test_count_sign_changes():

    assert count_sign_changes(np.array([1., -1., 1.])) == 2
    assert count_sign_changes(np.array([1., 0., 1.])) == 0
    assert count_sign_changes(np.array([1., 0., -1.])) == 1
    assert count_sign_changes(np.array([0., 0.])) == 0
