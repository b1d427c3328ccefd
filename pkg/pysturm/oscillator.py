"""
Harmonic oscillator -y'' + x^2 y = lambda y on the real line.

The eigenfunctions are h_n(x) = gamma_{n-1} H_{n-1}(x) exp(-x^2/2) with
eigenvalue 2n - 1, H_m the Hermite polynomials. Since the Gaussian factor
is positive, every zero question reduces to exact algebra on polynomials.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from functools import lru_cache
from typing import Dict, List, Optional, Sequence, Tuple, Union

import numpy as np
import sympy as sp
from scipy.special import roots_hermite

from pysturm.defaults import make_rng
from pysturm.errors import BudgetExceeded, VerificationFailure, ZeroVector
from pysturm.typing_local import Rational, RealArray
from pysturm.vandermonde import GroupedPoint, build_P, value_at


MAX_HERMITE_DEGREE = 40
MAX_SLATER_SIZE = 7
MAX_ZERO_COUNT_SIZE = 12

_x = sp.Symbol('x')


def rationalize(value: float,
                tol: float = 1e-12) -> sp.Rational:
    """
    Snap a float to the simplest nearby fraction.

    Best rational approximations with growing denominator bound are tried
    until one lies within tol*max(1, |value|); the exact binary value of the
    float is returned when none does.
    """

    exact = sp.Rational(value)
    bound = tol*max(1., abs(value))
    for digits in range(1, 16):
        candidate = exact.limit_denominator(10**digits)
        if abs(float(candidate) - value) <= bound:
            return candidate

    return exact


def real_root_multiplicities(poly: sp.Poly) -> Dict[int, int]:
    """
    Count the real roots of poly grouped by multiplicity.

    The square-free factors are counted with Sturm sequences; returns a
    mapping multiplicity -> number of distinct real roots.
    """

    if poly.is_zero:
        raise ZeroVector('The zero polynomial has infinitely many roots')

    counts: Dict[int, int] = {}
    for factor, multiplicity in poly.sqf_list()[1]:
        count = int(factor.count_roots())
        if count:
            counts[multiplicity] = counts.get(multiplicity, 0) + count

    return counts


def root_multiplicity(poly: sp.Poly, root: Rational) -> int:
    """Exact vanishing order of poly at a rational point."""

    if poly.is_zero:
        raise ValueError('The zero polynomial vanishes at infinite order')

    root = sp.Rational(root)
    linear = sp.Poly(_x - root, _x)
    order = 0
    while poly.eval(root) == 0:
        poly = poly.exquo(linear)
        order += 1

    return order


@dataclass(frozen=True)
class HermitePoly:
    """Physicists' Hermite polynomial H_m with exact integer coefficients."""

    degree: int
    poly: sp.Poly

    @property
    def coefficients(self) -> Tuple[int, ...]:
        """Coefficients from the constant term upwards."""
        return tuple(int(c) for c in reversed(self.poly.all_coeffs()))


    @property
    def leading(self) -> int:
        return int(self.poly.LC())


    def __call__(self, t: Union[float, RealArray, Rational]) -> Union[float, RealArray, sp.Rational]:
        if isinstance(t, (int, Fraction, sp.Rational)):
            return self.poly.eval(sp.Rational(t))
        return np.polynomial.polynomial.polyval(t, [float(c) for c in self.coefficients])


    def ode_residual(self) -> sp.Poly:
        """H'' - 2x H' + 2m H, the zero polynomial for a Hermite polynomial."""
        p = self.poly
        return p.diff((_x, 2)) - sp.Poly(2*_x, _x)*p.diff(_x) + 2*self.degree*p


    def to_text(self) -> str:
        terms = []
        for power in range(self.degree, -1, -1):
            c = self.coefficients[power]
            if c == 0:
                continue
            monomial = '' if power == 0 else ('x' if power == 1 else 'x^{}'.format(power))
            if abs(c) == 1 and power > 0:
                body = monomial
            else:
                body = '{}{}'.format(abs(c), monomial)
            sign = '-' if c < 0 else '+'
            terms.append((sign, body))
        if not terms:
            return '0'
        first_sign, first_body = terms[0]
        text = ('-' if first_sign == '-' else '') + first_body
        for sign, body in terms[1:]:
            text += ' {} {}'.format(sign, body)
        return text


@lru_cache(maxsize=None)
def hermite(m: int) -> HermitePoly:
    """
    H_m from H_{m+1} = 2x H_m - 2m H_{m-1}, H_0 = 1, H_1 = 2x.

    Parameters
    ----------
    m : int
        Degree, 0 <= m <= 40.
    """

    if m < 0:
        raise ValueError('Hermite degree must be non-negative, got {}'.format(m))
    if m > MAX_HERMITE_DEGREE:
        raise BudgetExceeded('Hermite degree {} is beyond {}'.format(m, MAX_HERMITE_DEGREE))

    if m == 0:
        return HermitePoly(0, sp.Poly(1, _x))
    if m == 1:
        return HermitePoly(1, sp.Poly(2*_x, _x))

    poly = sp.Poly(2*_x, _x)*hermite(m - 1).poly - 2*(m - 1)*hermite(m - 2).poly

    return HermitePoly(m, poly)


def gamma_norm(m: int) -> float:
    """(2^m m! sqrt(pi))^{-1/2}, computed through logarithms."""

    if m < 0:
        raise ValueError('Degree must be non-negative, got {}'.format(m))
    if m > MAX_HERMITE_DEGREE:
        raise BudgetExceeded('Degree {} is beyond {}'.format(m, MAX_HERMITE_DEGREE))

    return math.exp(-0.5*(m*math.log(2.) + math.lgamma(m + 1) + 0.5*math.log(math.pi)))


@dataclass(frozen=True)
class OscillatorEigenfunction:
    """h_n(x) = gamma_{n-1} H_{n-1}(x) exp(-x^2/2), eigenvalue 2n - 1."""

    index: int

    def __post_init__(self) -> None:
        if self.index < 1:
            raise ValueError('Eigenfunction index starts at 1, got {}'.format(self.index))


    @property
    def gamma(self) -> float:
        return gamma_norm(self.index - 1)


    @property
    def hermite(self) -> HermitePoly:
        return hermite(self.index - 1)


    @property
    def eigenvalue(self) -> int:
        return 2*self.index - 1


    def __call__(self, t: Union[float, RealArray]) -> Union[float, RealArray]:
        t = np.asarray(t, dtype=float)
        return self.gamma*self.hermite(t)*np.exp(-t**2/2)


def normalization_error(n: int) -> float:
    """|int h_n^2 - 1| by Gauss-Hermite quadrature, exact for this degree."""

    nodes, weights = roots_hermite(n + 5)
    h = OscillatorEigenfunction(n)
    # the quadrature weight is exp(-x^2), matching h_n^2
    value = h.gamma**2*np.sum(weights*h.hermite(nodes)**2)

    return float(abs(value - 1.))


def oscillator_slater_det(points: Sequence[float]) -> float:
    """|h_i(x_j)| for the first len(points) oscillator eigenfunctions."""
    points = np.asarray(points, dtype=float)
    n = len(points)
    matrix = np.array([OscillatorEigenfunction(i)(points) for i in range(1, n + 1)])
    return float(np.linalg.det(matrix))


def slater_vandermonde_ratio_constant(n: int) -> float:
    """B_n = (-1)^{n(n-1)/2} 2^{n(n-1)/2} gamma_0 ... gamma_{n-1}."""
    half = n*(n-1)//2
    return (-1)**half*2.**half*math.prod(gamma_norm(m) for m in range(n))


def slater_vandermonde_constant(n: int,
                                samples: int = 20,
                                seed: Optional[int] = 0,
                                rtol: float = 1e-8) -> float:
    """
    Constant B_n of S_n(x) = B_n exp(-|x|^2/2) P_n(x) for the oscillator.

    The closed form is checked against both sides of the identity at
    `samples` random points of [-2, 2]^n with distinct coordinates.

    Raises
    ------
    VerificationFailure
        If the relative disagreement exceeds rtol at some point.
    """

    if not 1 <= n <= MAX_SLATER_SIZE:
        raise ValueError('n must be between 1 and {}, got {}'.format(MAX_SLATER_SIZE, n))

    constant = slater_vandermonde_ratio_constant(n)
    p = build_P(n)
    rng = make_rng(seed)
    for _ in range(samples):
        point = rng.uniform(-2., 2., n)
        if len(set(point)) < n:
            continue
        slater = oscillator_slater_det(point)
        if abs(slater) < 1e-12:
            continue
        expected = constant*math.exp(-float(np.sum(point**2))/2)*float(value_at(p, point.tolist()))
        if abs(slater - expected) > rtol*abs(slater):
            raise VerificationFailure('S_{} = {:.16e} but B_n exp(-|x|^2/2) P_n = {:.16e} at {}'.format(n, slater, expected, point.tolist()))

    return constant


def polynomial_part(b: Sequence[float]) -> sp.Poly:
    """
    Polynomial sum_j b_j gamma_{j-1} H_{j-1} of the combination sum_j b_j h_j,
    each product b_j gamma_{j-1} rationalized to within 1e-12.
    """

    poly = sp.Poly(0, _x, domain='QQ')
    for j, bj in enumerate(b):
        if bj == 0:
            continue
        poly = poly + rationalize(float(bj)*gamma_norm(j))*hermite(j).poly

    return poly


def oscillator_root_multiplicities(b: Sequence[float]) -> Dict[int, int]:
    """
    Real zeros of sum_j b_j h_j grouped by multiplicity.

    Raises
    ------
    ZeroVector
        If b = 0.
    """

    b = [float(v) for v in b]
    if len(b) > MAX_ZERO_COUNT_SIZE:
        raise BudgetExceeded('n={} is beyond {}'.format(len(b), MAX_ZERO_COUNT_SIZE))
    poly = polynomial_part(b)
    if poly.is_zero:
        raise ZeroVector('The combination vanishes identically')

    return real_root_multiplicities(poly)


def oscillator_zero_count(b: Sequence[float]) -> int:
    """Number of real zeros of sum_j b_j h_j counted with multiplicity."""
    return sum(k*c for k, c in oscillator_root_multiplicities(b).items())


def hermite_expansion(poly: sp.Poly) -> List[sp.Rational]:
    """Coefficients a_m with poly = sum_m a_m H_m."""

    remainder = poly
    degree = max(poly.degree(), 0)
    coefficients = [sp.Integer(0)]*(degree + 1)
    for m in range(degree, -1, -1):
        a = remainder.coeff_monomial(_x**m)/hermite(m).leading
        coefficients[m] = a
        if a:
            remainder = remainder - a*hermite(m).poly

    return coefficients


def coefficients_for_polynomial(poly: sp.Poly, n: int) -> RealArray:
    """Coefficients b over h_1..h_n whose polynomial part is `poly`."""

    if poly.degree() > n - 1:
        raise ValueError('Degree {} needs more than {} eigenfunctions'.format(poly.degree(), n))

    b = np.zeros(n)
    for m, am in enumerate(hermite_expansion(poly)):
        b[m] = float(am)/gamma_norm(m)

    return b


def _shift_operator(p: sp.Poly) -> sp.Poly:
    """p -> p' - x p, the derivative of p(x) exp(-x^2/2) without the Gaussian."""
    return p.diff(_x) - sp.Poly(_x, _x)*p


def confluent_polynomial(spec: GroupedPoint, n: int) -> sp.Poly:
    """
    Polynomial part of the oscillator confluent determinant
    |h(c_1) ... h^{(k_1-1)}(c_1) ... h(x)| with multiplicities summing to
    n-1, up to a positive constant.
    """

    if spec.n != n - 1:
        raise ValueError('The multiplicities must sum to n-1={}, got {}'.format(n - 1, spec.n))
    if n > MAX_ZERO_COUNT_SIZE:
        raise BudgetExceeded('n={} is beyond {}'.format(n, MAX_ZERO_COUNT_SIZE))

    columns: List[List[sp.Rational]] = []
    for c, k in zip(spec.values, spec.multiplicities):
        derived = [hermite(i).poly for i in range(n)]
        for _ in range(k):
            columns.append([p.eval(c) for p in derived])
            derived = [_shift_operator(p) for p in derived]

    # rows i = 0..n-1, expansion along the missing last column
    rows = sp.Matrix(columns).T
    poly = sp.Poly(0, _x, domain='QQ')
    for i in range(n):
        minor = rows.copy()
        minor.row_del(i)
        cofactor = (-1)**(n + i + 1)*minor.det(method='bareiss')
        poly = poly + cofactor*hermite(i).poly

    return poly


def confluent_orders(spec: GroupedPoint, n: int) -> Tuple[Tuple[int, ...], int]:
    """
    Exact vanishing orders at each prescribed point, and the total number of
    real zeros counted with multiplicity.
    """

    poly = confluent_polynomial(spec, n)
    orders = tuple(root_multiplicity(poly, c) for c in spec.values)
    total = sum(k*c for k, c in real_root_multiplicities(poly).items())

    return orders, total
