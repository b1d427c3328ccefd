from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field
from functools import cached_property
from typing import List, Optional, Sequence, Tuple, Union

import numpy as np
from scipy.integrate import simpson, solve_ivp
from scipy.interpolate import CubicHermiteSpline
from scipy.optimize import brentq, newton
from scipy.special import comb
from tqdm import tqdm

from pysturm.defaults import (BRACKET_LIMIT, BRACKET_RTOL, MAX_DERIVATIVE_ORDER,
                              RK_ATOL, RK_MAX_STEPS, RK_METHOD, RK_RTOL,
                              SECANT_STEPS, MIN_GRID, grid_default)
from pysturm.errors import BracketFailure, IntegrationFailure, OrderBudget
from pysturm.potential_parser import Potential, parse_potential
from pysturm.typing_local import RealArray


@dataclass(frozen=True, eq=False)
class DirichletProblem:
    """
    The problem -y'' + q(x) y = lambda y on [0, 1] with y(0) = y(1) = 0.
    """

    potential: Potential

    @classmethod
    def from_source(cls, src: str) -> DirichletProblem:
        return cls(parse_potential(src))


    @property
    def q_sup(self) -> float:
        """max |q| estimated on the probe grid."""
        return self.potential.sup_norm


    def initial_bracket(self, j: int) -> Tuple[float, float]:
        """[-|q| - 1, (j pi)^2 + |q| + 1]"""
        return -self.q_sup - 1., (j*math.pi)**2 + self.q_sup + 1.


class _StepBudget(Exception):
    pass


# DOP853 evaluates the right hand side 12 times per step
_RHS_PER_STEP = 12


def prufer_terminal_angle(problem: DirichletProblem,
                          lam: float,
                          scale: float = 1.) -> float:
    """
    Terminal value theta(1) of the Prufer angle.

    Integrates theta' = k cos(theta)^2 + (lam - q(x))/k sin(theta)^2,
    theta(0) = 0, with the adaptive Dormand-Prince 8(5,3) scheme. With any
    scale k > 0, theta(1) is a strictly increasing function of lam and
    equals j*pi exactly at the j-th Dirichlet eigenvalue.

    Parameters
    ----------
    problem : DirichletProblem
        Problem to shoot.
    lam : float
        Trial eigenvalue.
    scale : float
        Scale k of the angle, k = 1 gives tan(theta) = y/y'.

    Raises
    ------
    IntegrationFailure
        If the integrator fails or needs more than 10^6 steps.
    """

    if not math.isfinite(lam):
        raise ValueError('lam must be finite, got {}'.format(lam))
    if scale <= 0:
        raise ValueError('scale must be positive, got {}'.format(scale))

    q = problem.potential.scalar()
    k = float(scale)
    calls = [0]

    def rhs(x: float, theta: RealArray) -> List[float]:
        calls[0] += 1
        if calls[0] > RK_MAX_STEPS*_RHS_PER_STEP:
            raise _StepBudget()
        s = math.sin(theta[0])
        c = math.cos(theta[0])
        return [k*c*c + (lam - q(x))/k*s*s]

    try:
        sol = solve_ivp(rhs, (0., 1.), [0.],
                        method=RK_METHOD,
                        rtol=RK_RTOL,
                        atol=RK_ATOL)
    except _StepBudget:
        raise IntegrationFailure('Prufer integration at lambda={} exceeded {} steps'.format(lam, RK_MAX_STEPS))

    if not sol.success:
        raise IntegrationFailure('Prufer integration at lambda={} failed: {}'.format(lam, sol.message))

    return float(sol.y[0, -1])


def _angle_scale(j: int) -> float:
    return max(1., j*math.pi)


def find_eigenvalue(problem: DirichletProblem, j: int) -> float:
    """
    Eigenvalue lambda_j, root of theta(1; lambda) = j pi.

    The initial bracket is expanded exponentially until it contains the
    root, then shrunk by Brent's method to a width 1e-11 (1 + |lambda|),
    followed by secant steps kept only when they stay in the final bracket.
    """

    if j < 1:
        raise ValueError('Eigenvalue index starts at 1, got {}'.format(j))

    k = _angle_scale(j)
    target = j*math.pi

    def f(lam: float) -> float:
        return prufer_terminal_angle(problem, lam, k) - target

    low, high = problem.initial_bracket(j)
    f_low = f(low)
    while f_low >= 0:
        low = high - 2*(high - low)
        if abs(low) > BRACKET_LIMIT:
            raise BracketFailure('No lower eigenvalue bracket for j={} within |lambda| <= {:.0e}'.format(j, BRACKET_LIMIT))
        f_low = f(low)
    f_high = f(high)
    while f_high <= 0:
        high = low + 2*(high - low)
        if abs(high) > BRACKET_LIMIT:
            raise BracketFailure('No upper eigenvalue bracket for j={} within |lambda| <= {:.0e}'.format(j, BRACKET_LIMIT))
        f_high = f(high)

    xtol = BRACKET_RTOL*(1. + min(abs(low), abs(high)))
    root = brentq(f, low, high, xtol=xtol, rtol=4*np.finfo(float).eps)

    # secant polish
    with warnings.catch_warnings():
        warnings.simplefilter('ignore', RuntimeWarning)
        try:
            polished = float(newton(f, root, x1=root + xtol, maxiter=SECANT_STEPS,
                                    tol=xtol*1e-3, disp=False))
        except (ZeroDivisionError, OverflowError, IntegrationFailure):
            polished = root
    if math.isfinite(polished) and abs(polished - root) <= xtol:
        root = polished

    return float(root)


@dataclass(frozen=True, eq=False)
class EigenPair:
    """
    Dirichlet eigenpair (lambda_j, h_j) with h_j normalized in L2 and
    h_j'(0) > 0 unless flipped.

    values and slopes hold h_j and h_j' on the uniform grid of len(grid)
    nodes; the interpolant is the piecewise cubic Hermite spline through
    them.
    """

    index: int
    eigenvalue: float
    problem: DirichletProblem
    grid: RealArray = field(repr=False)
    values: RealArray = field(repr=False)
    slopes: RealArray = field(repr=False)
    sign: int = 1

    @cached_property
    def interpolant(self) -> CubicHermiteSpline:
        return CubicHermiteSpline(self.grid, self.values, self.slopes)


    @property
    def n_grid(self) -> int:
        """Number of grid intervals."""
        return len(self.grid) - 1


    def __call__(self, x: Union[float, RealArray]) -> Union[float, RealArray]:
        return self.interpolant(x)


    def flipped(self) -> EigenPair:
        """Same pair with h_j replaced by -h_j."""
        return EigenPair(index=self.index,
                         eigenvalue=self.eigenvalue,
                         problem=self.problem,
                         grid=self.grid,
                         values=-self.values,
                         slopes=-self.slopes,
                         sign=-self.sign)


    def node_count(self) -> int:
        """Sign changes of h_j on the interior grid nodes."""
        return count_sign_changes(self.values[1:-1])


def count_sign_changes(values: RealArray) -> int:
    signs = np.sign(values)
    signs = signs[signs != 0]
    return int(np.count_nonzero(signs[1:] != signs[:-1]))


def _uniform_grid(n_grid: int) -> RealArray:
    return np.linspace(0., 1., n_grid + 1)


def solve_eigen(problem: DirichletProblem,
                j: int,
                n_grid: Optional[int] = None) -> EigenPair:
    """
    Compute the j-th Dirichlet eigenpair.

    Parameters
    ----------
    problem : DirichletProblem
        The problem.
    j : int
        1-based index of the eigenpair.
    n_grid : int
        Number of intervals of the uniform dense grid, SOL_GRID_DEFAULT or
        4096 by default.
    """

    if n_grid is None:
        n_grid = grid_default()
    if n_grid < MIN_GRID:
        raise ValueError('n_grid must be at least {}, got {}'.format(MIN_GRID, n_grid))

    lam = find_eigenvalue(problem, j)

    q = problem.potential.scalar()

    def rhs(x: float, y: RealArray) -> List[float]:
        return [y[1], (q(x) - lam)*y[0]]

    grid = _uniform_grid(n_grid)
    sol = solve_ivp(rhs, (0., 1.), [0., 1.],
                    method=RK_METHOD,
                    t_eval=grid,
                    rtol=RK_RTOL,
                    atol=RK_ATOL)
    if not sol.success:
        raise IntegrationFailure('Eigenfunction integration for j={} failed: {}'.format(j, sol.message))

    values = sol.y[0]
    slopes = sol.y[1]
    norm = math.sqrt(simpson(values**2, x=grid))
    values = values/norm
    slopes = slopes/norm

    pair = EigenPair(index=j,
                     eigenvalue=lam,
                     problem=problem,
                     grid=grid,
                     values=values,
                     slopes=slopes)

    # h'(0) > 0
    if pair.slopes[0] < 0:
        pair = pair.flipped()

    return pair


def _derivative_table(problem: DirichletProblem,
                      eigenvalues: RealArray,
                      x: RealArray,
                      values: RealArray,
                      slopes: RealArray,
                      order: int) -> RealArray:
    """
    Derivatives 0..order of eigenfunctions from their values and slopes.

    Uses h'' = (q - lambda) h differentiated with the Leibniz rule:
    h^{(k)} = sum_i C(k-2, i) g^{(i)} h^{(k-2-i)}, g = q - lambda.
    values and slopes have shape (n, len(x)), the result
    (order + 1, n, len(x)).
    """

    if order > MAX_DERIVATIVE_ORDER:
        raise OrderBudget('Derivative order {} exceeds the cap {}'.format(order, MAX_DERIVATIVE_ORDER))
    if order < 0:
        raise ValueError('Derivative order must be non-negative')

    table = np.empty((order + 1,) + values.shape)
    table[0] = values
    if order >= 1:
        table[1] = slopes
    if order < 2:
        return table

    potential = problem.potential
    g = [potential.values(x, i)[None, :] for i in range(order - 1)]
    g[0] = g[0] - eigenvalues[:, None]
    for k in range(2, order + 1):
        acc = np.zeros(values.shape)
        for i in range(k - 1):
            acc += comb(k - 2, i, exact=True)*g[i]*table[k - 2 - i]
        table[k] = acc

    return table


def eval_derivative(pair: EigenPair, x: float, m: int) -> float:
    """
    m-th derivative of h_j at x.

    Orders 0 and 1 come from the interpolant, higher orders from the
    differential equation through the Leibniz recurrence with the symbolic
    derivatives of q.

    Raises
    ------
    OrderBudget
        For m > 12.
    """

    if m > MAX_DERIVATIVE_ORDER:
        raise OrderBudget('Derivative order {} exceeds the cap {}'.format(m, MAX_DERIVATIVE_ORDER))
    if not 0. <= x <= 1.:
        raise ValueError('x must lie in [0, 1], got {}'.format(x))

    xs = np.array([float(x)])
    values = pair.interpolant(xs)[None, :]
    if m == 0:
        return float(values[0, 0])
    slopes = pair.interpolant(xs, 1)[None, :]

    table = _derivative_table(pair.problem, np.array([pair.eigenvalue]), xs, values, slopes, m)

    return float(table[m, 0, 0])


@dataclass(frozen=True, eq=False)
class SpectralBasis:
    """
    The first n eigenpairs of a Dirichlet problem, sharing one grid.
    """

    problem: DirichletProblem
    pairs: Tuple[EigenPair, ...]

    def __post_init__(self) -> None:
        pairs = tuple(self.pairs)
        object.__setattr__(self, 'pairs', pairs)
        if not pairs:
            raise ValueError('A spectral basis needs at least one eigenpair')
        if [p.index for p in pairs] != list(range(1, len(pairs) + 1)):
            raise ValueError('Eigenpair indices must be 1..n')
        if any(p.n_grid != pairs[0].n_grid for p in pairs):
            raise ValueError('Eigenpairs must share the same grid')


    def __len__(self) -> int:
        return len(self.pairs)


    @property
    def n(self) -> int:
        return len(self.pairs)


    @property
    def grid(self) -> RealArray:
        return self.pairs[0].grid


    @property
    def n_grid(self) -> int:
        return self.pairs[0].n_grid


    @cached_property
    def eigenvalues(self) -> RealArray:
        return np.array([p.eigenvalue for p in self.pairs])


    @cached_property
    def grid_values(self) -> RealArray:
        """h_j on the grid nodes, shape (n, n_grid + 1)."""
        return np.array([p.values for p in self.pairs])


    @cached_property
    def _spline(self) -> CubicHermiteSpline:
        return CubicHermiteSpline(self.grid,
                                  np.array([p.values for p in self.pairs]).T,
                                  np.array([p.slopes for p in self.pairs]).T,
                                  axis=0)


    @property
    def signs(self) -> Tuple[int, ...]:
        return tuple(p.sign for p in self.pairs)


    @property
    def fermionic_ground_energy(self) -> float:
        """lambda_1 + ... + lambda_n"""
        return float(np.sum(self.eigenvalues))


    def values(self, x: Union[float, Sequence[float], RealArray]) -> RealArray:
        """h_j(x_k), shape (n, len(x))."""
        xs = np.atleast_1d(np.asarray(x, dtype=float))
        return self._spline(xs).T


    def derivative_table(self, x: Union[float, Sequence[float], RealArray], order: int) -> RealArray:
        """h_j^{(m)}(x_k) for m = 0..order, shape (order + 1, n, len(x))."""
        xs = np.atleast_1d(np.asarray(x, dtype=float))
        values = self._spline(xs).T
        slopes = self._spline(xs, 1).T
        return _derivative_table(self.problem, self.eigenvalues, xs, values, slopes, order)


    def derivatives(self, x: Union[float, Sequence[float], RealArray], m: int) -> RealArray:
        """h_j^{(m)}(x_k), shape (n, len(x))."""
        return self.derivative_table(x, m)[m]


    def column(self, x: float, m: int = 0) -> RealArray:
        """The vector (h_1^{(m)}(x), ..., h_n^{(m)}(x))."""
        return self.derivatives([x], m)[:, 0]


    def subbasis(self, n: int) -> SpectralBasis:
        """The first n eigenpairs."""
        if not 1 <= n <= self.n:
            raise ValueError('Sub-basis size must be between 1 and {}, got {}'.format(self.n, n))
        return SpectralBasis(self.problem, self.pairs[:n])


    def with_flips(self, flips: Sequence[bool]) -> SpectralBasis:
        """Basis with h_j replaced by -h_j wherever flips[j-1] is True."""
        if len(flips) != self.n:
            raise ValueError('Need one flip flag per eigenpair')
        return SpectralBasis(self.problem,
                             tuple(p.flipped() if f else p for p, f in zip(self.pairs, flips)))


def solve_basis(problem: DirichletProblem,
                n: int,
                n_grid: Optional[int] = None,
                verbose: bool = False) -> SpectralBasis:
    """
    Compute the first n eigenpairs.

    Parameters
    ----------
    problem : DirichletProblem
        The problem.
    n : int
        Number of eigenpairs.
    n_grid : int
        Dense grid resolution, see solve_eigen.
    verbose : bool
        Display a progress bar.
    """

    if n < 1:
        raise ValueError('n must be a positive integer, got {}'.format(n))

    it = tqdm if verbose else lambda t: t
    pairs = [solve_eigen(problem, j, n_grid) for j in it(range(1, n + 1))]

    return SpectralBasis(problem, tuple(pairs))


def orthonormality_matrix(basis: SpectralBasis) -> RealArray:
    """Gram matrix (int h_i h_j) by the composite Simpson rule."""

    v = basis.grid_values

    return simpson(v[:, None, :]*v[None, :, :], x=basis.grid, axis=-1)
