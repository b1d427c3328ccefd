import pytest

from pysturm import DirichletProblem, sign_normalize, solve_basis

# Session-wide bases, shared by every test module

@pytest.fixture(scope='session')
def zero_basis():
    """First 12 eigenpairs of q = 0, signs as returned by the solver."""
    return solve_basis(DirichletProblem.from_source('0'), 12)


@pytest.fixture(scope='session')
def cos_basis():
    return sign_normalize(solve_basis(DirichletProblem.from_source('10*cos(4*x)'), 10))


@pytest.fixture(scope='session')
def well_basis():
    return sign_normalize(solve_basis(DirichletProblem.from_source('25*(x-0.5)^2'), 10))


@pytest.fixture(scope='session')
def normalized_zero_basis(zero_basis):
    return sign_normalize(zero_basis)


@pytest.fixture(params=['normalized_zero_basis', 'cos_basis', 'well_basis'])
def any_basis(request):
    return request.getfixturevalue(request.param)
