from dataclasses import dataclass, field
from functools import lru_cache
from itertools import combinations
from math import factorial, prod
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np
import sympy as sp

from pysturm.defaults import MAX_EXACT_SIZE, make_rng
from pysturm.errors import BudgetExceeded, NotConstant
from pysturm.typing_local import Rational


def _check_budget(n: int) -> None:
    if n < 1:
        raise ValueError('n must be a positive integer, got {}'.format(n))
    if n > MAX_EXACT_SIZE:
        raise BudgetExceeded('n={} is beyond the exact arithmetic budget n <= {}'.format(n, MAX_EXACT_SIZE))


def variables(n: int) -> Tuple[sp.Symbol, ...]:
    """The symbols x1, ..., xn."""
    return tuple(sp.symbols('x1:{}'.format(n + 1)))


def value_at(p: sp.Poly, point: Sequence[Rational]) -> sp.Rational:
    """Exact value of p at a point with integer, Fraction or float coordinates."""

    if len(point) != len(p.gens):
        raise ValueError('Point has {} coordinates, expected {}'.format(len(point), len(p.gens)))

    return p.eval(tuple(sp.Rational(v) for v in point))


@lru_cache(maxsize=None)
def build_P(n: int) -> sp.Poly:
    """
    Expanded Vandermonde polynomial prod_{i<j} (x_i - x_j) in n variables.

    Parameters
    ----------
    n : int
        Number of variables, 1 <= n <= 8.
    """

    _check_budget(n)

    xs = variables(n)
    p = sp.Poly(1, *xs)
    for i, j in combinations(range(n), 2):
        p = p*sp.Poly(xs[i] - xs[j], *xs)

    return p


def build_Q(n: int,
            indices: Optional[Sequence[int]] = None,
            nvars: Optional[int] = None) -> sp.Poly:
    """
    The polynomial prod_{j=2}^{n} (x_1 - x_j).

    With `indices` (and `nvars`), the n variables of the product are the
    given variables of a larger ring, so that
    build_Q(n - i + 1, range(i - 1, n), n) is Q_{n+1-i}(x_i, ..., x_n).
    """

    _check_budget(n)
    if indices is None:
        indices = range(n)
    indices = list(indices)
    if len(indices) != n:
        raise ValueError('Need {} variables, got {}'.format(n, len(indices)))
    if nvars is None:
        nvars = max(indices) + 1

    xs = variables(nvars)
    first = xs[indices[0]]
    p = sp.Poly(1, *xs)
    for v in indices[1:]:
        p = p*sp.Poly(first - xs[v], *xs)

    return p


def vandermonde_matrix(points: Sequence[Rational]) -> sp.Matrix:
    """Rows 1, x, ..., x^{n-1} evaluated at the points."""
    points = [sp.Rational(p) for p in points]
    return sp.Matrix([[p**i for p in points] for i in range(len(points))])


def vandermonde_det(points: Sequence[Rational]) -> sp.Rational:
    """
    Exact determinant of the Vandermonde matrix of the points.

    Computed by fraction-free elimination. It is related to the Vandermonde
    polynomial by P_n(points) = (-1)^{n(n-1)/2} det.
    """

    _check_budget(len(points))

    return vandermonde_matrix(points).det(method='bareiss')


def vandermonde_sign(n: int) -> int:
    """The sign (-1)^{n(n-1)/2} relating P_n to the Vandermonde determinant."""
    return -1 if (n*(n-1)//2) % 2 else 1


def laplacian(p: sp.Poly) -> sp.Poly:
    result = sp.Poly(0, *p.gens)
    for x in p.gens:
        result = result + p.diff((x, 2))
    return result


def mixed_derivative_constant(n: int) -> int:
    """
    Apply d^{n-1}/dx_n^{n-1} ... d/dx_2 to P_n.

    The result is the constant (-1)^{n(n-1)/2} (n-1)! (n-2)! ... 1!; its
    magnitude is the factorial product and its sign is the one of the
    monomial x_2 x_3^2 ... x_n^{n-1} in P_n.

    Raises
    ------
    NotConstant
        If the derivative still depends on the variables.
    """

    p = build_P(n)
    for i in range(1, n):
        p = p.diff((p.gens[i], i))

    if not p.is_ground:
        raise NotConstant('D_{} P_{} has degree {}'.format(n, n, p.total_degree()))

    return int(p.LC())


def factorial_product(n: int) -> int:
    """(n-1)! (n-2)! ... 1!"""
    return prod(factorial(k) for k in range(1, n))


def divide(p: sp.Poly, d: sp.Poly) -> Tuple[sp.Poly, sp.Poly]:
    """Division with remainder in the lexicographic order x1 > x2 > ..., returns (quotient, remainder)."""
    return p.div(d)


@dataclass(frozen=True)
class GroupedPoint:
    """
    Point of R^n whose coordinates take the distinct values
    values[0] < ... < values[p-1], value j being repeated multiplicities[j]
    times.
    """

    values: Tuple[sp.Rational, ...]
    multiplicities: Tuple[int, ...]

    def __post_init__(self) -> None:

        values = tuple(sp.Rational(v) for v in self.values)
        multiplicities = tuple(int(k) for k in self.multiplicities)
        object.__setattr__(self, 'values', values)
        object.__setattr__(self, 'multiplicities', multiplicities)

        if len(values) == 0:
            raise ValueError('A grouped point needs at least one value')
        if len(values) != len(multiplicities):
            raise ValueError('values and multiplicities must have the same length')
        if any(a >= b for a, b in zip(values, values[1:])):
            raise ValueError('values must be strictly increasing, got {}'.format(values))
        if any(k < 1 for k in multiplicities):
            raise ValueError('multiplicities must be positive, got {}'.format(multiplicities))


    @classmethod
    def from_coordinates(cls, coordinates: Sequence[Rational]) -> 'GroupedPoint':
        """Group a sorted coordinate vector by equal entries."""
        values: List[sp.Rational] = []
        multiplicities: List[int] = []
        for c in coordinates:
            c = sp.Rational(c)
            if values and c == values[-1]:
                multiplicities[-1] += 1
            else:
                values.append(c)
                multiplicities.append(1)
        return cls(tuple(values), tuple(multiplicities))


    @property
    def n(self) -> int:
        return sum(self.multiplicities)


    @property
    def p(self) -> int:
        return len(self.values)


    def coordinates(self) -> Tuple[sp.Rational, ...]:
        """The vector c with values[j] repeated multiplicities[j] times."""
        return tuple(v for v, k in zip(self.values, self.multiplicities) for _ in range(k))


    def group_slices(self) -> List[slice]:
        slices = []
        start = 0
        for k in self.multiplicities:
            slices.append(slice(start, start + k))
            start += k
        return slices


    @property
    def local_degree(self) -> int:
        """sum_j k_j (k_j - 1) / 2"""
        return local_expansion_degree(self)


def local_expansion_degree(c: GroupedPoint) -> int:
    return sum(k*(k-1)//2 for k in c.multiplicities)


def local_factor_rho(c: GroupedPoint) -> sp.Rational:
    """
    Nonzero constant rho(c) = prod_{i<j} (c_i - c_j)^{k_i k_j} of the
    local factorization of P_n around c.
    """

    _check_budget(c.n)

    rho = sp.Integer(1)
    for i, j in combinations(range(c.p), 2):
        rho *= (c.values[i] - c.values[j])**(c.multiplicities[i]*c.multiplicities[j])

    return rho


def local_factor_rho_stagewise(c: GroupedPoint) -> sp.Rational:
    """
    Product of the stagewise factors
    rho_i = [prod_{j>i} (c_i - c_j)^{k_j}]^{k_i}.
    """

    rho = sp.Integer(1)
    for i in range(c.p):
        stage = sp.Integer(1)
        for j in range(i+1, c.p):
            stage *= (c.values[i] - c.values[j])**c.multiplicities[j]
        rho *= stage**c.multiplicities[i]

    return rho


@dataclass(frozen=True)
class LocalFactorizationReport:
    """
    Outcome of verify_local_factorization.

    max_deviation maps each t to max |r(t) - 1| over the trials;
    fitted_constant is the constant C fitted on the largest t.
    """

    point: GroupedPoint
    trials: int
    max_deviation: Dict[sp.Rational, sp.Rational] = field(default_factory=dict)
    fitted_constant: float = 0.
    passed: bool = True

    def within(self, constant: float) -> bool:
        """True when |r(t) - 1| <= constant*t for every t."""
        bound = sp.Rational(constant)
        return all(bool(dev <= bound*t) for t, dev in self.max_deviation.items())


DEFAULT_STEPS = (sp.Rational(1, 100), sp.Rational(1, 1000), sp.Rational(1, 10000))


def _random_direction(c: GroupedPoint,
                      rng: np.random.Generator,
                      resolution: int) -> List[sp.Rational]:
    """
    Integer lattice direction scaled into [-1/2, 1/2], with distinct
    coordinates inside each group.
    """

    half = resolution//2
    while True:
        eta = [sp.Rational(int(v), resolution) for v in rng.integers(-half, half + 1, c.n)]
        if all(len(set(eta[s])) == s.stop - s.start for s in c.group_slices()):
            return eta


def local_ratio(c: GroupedPoint,
                eta: Sequence[Rational],
                t: Rational) -> sp.Rational:
    """
    r(t) = P_n(c + t eta) / [rho(c) prod_j P_{k_j}(t eta^{(j)})]
    in exact rational arithmetic.
    """

    t = sp.Rational(t)
    eta = [sp.Rational(e) for e in eta]
    shifted = [ci + t*ei for ci, ei in zip(c.coordinates(), eta)]
    numerator = value_at(build_P(c.n), shifted)

    denominator = local_factor_rho(c)
    for s, k in zip(c.group_slices(), c.multiplicities):
        denominator *= value_at(build_P(k), [t*e for e in eta[s]])

    return numerator/denominator


def verify_local_factorization(c: GroupedPoint,
                               trials: int,
                               seed: Optional[int] = 0,
                               steps: Sequence[Rational] = DEFAULT_STEPS,
                               resolution: int = 1000) -> LocalFactorizationReport:
    """
    Check that P_n(c + t eta) ~ rho(c) prod_j P_{k_j}(t eta^{(j)}) as t -> 0.

    For random directions eta, the ratio r(t) is computed exactly for each t
    in `steps`. The constant C is fitted on the largest t as twice the
    observed |r - 1|/t, and the check passes when every smaller t satisfies
    |r(t) - 1| <= C t.

    Parameters
    ----------
    c : GroupedPoint
        Expansion point, c.n <= 8.
    trials : int
        Number of random directions.
    seed : int
        Seed of the direction generator.
    steps : Sequence[Rational]
        Values of t, in decreasing order.
    resolution : int
        Directions live on the lattice (1/resolution) Z^n.
    """

    _check_budget(c.n)
    if trials < 0:
        raise ValueError('trials must be non-negative')

    steps = sorted((sp.Rational(t) for t in steps), reverse=True)
    rng = make_rng(seed)

    deviation: Dict[sp.Rational, sp.Rational] = {t: sp.Integer(0) for t in steps}
    for _ in range(trials):
        eta = _random_direction(c, rng, resolution)
        for t in steps:
            dev = abs(local_ratio(c, eta, t) - 1)
            if dev > deviation[t]:
                deviation[t] = dev

    if not steps:
        return LocalFactorizationReport(c, trials)

    fitted = 2*deviation[steps[0]]/steps[0]
    passed = all(bool(deviation[t] <= fitted*t) for t in steps[1:])

    return LocalFactorizationReport(point=c,
                                    trials=trials,
                                    max_deviation=deviation,
                                    fitted_constant=float(fitted),
                                    passed=passed)
