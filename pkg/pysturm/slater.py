from __future__ import annotations

import math
import warnings
from dataclasses import dataclass
from typing import List, Optional, Sequence, Tuple, Union

import numpy as np

from pysturm.defaults import make_rng, random_ordered_points
from pysturm.errors import DegenerateProbe, NearSingular, ZeroVector
from pysturm.spectral_solver import SpectralBasis
from pysturm.typing_local import RealArray


# |det| below this is treated as a vanishing probe determinant
PROBE_THRESHOLD = 1e-13
# confluent determinants below this times the column-norm product are singular
SINGULAR_THRESHOLD = 1e-10
RANDOM_PROBES = 20


@dataclass(frozen=True)
class NodeSpec:
    """
    Prescribed zeros: distinct points 0 < c_1 < ... < c_p < 1, point c_j
    with multiplicity k_j.
    """

    points: Tuple[float, ...]
    multiplicities: Tuple[int, ...]

    def __post_init__(self) -> None:

        points = tuple(float(c) for c in self.points)
        multiplicities = tuple(int(k) for k in self.multiplicities)
        object.__setattr__(self, 'points', points)
        object.__setattr__(self, 'multiplicities', multiplicities)

        if len(points) != len(multiplicities):
            raise ValueError('points and multiplicities must have the same length')
        if any(not 0. < c < 1. for c in points):
            raise ValueError('Node points must lie in ]0, 1[, got {}'.format(points))
        if any(a >= b for a, b in zip(points, points[1:])):
            raise ValueError('Node points must be strictly increasing, got {}'.format(points))
        if any(k < 1 for k in multiplicities):
            raise ValueError('Multiplicities must be positive, got {}'.format(multiplicities))


    @classmethod
    def simple(cls, points: Sequence[float]) -> NodeSpec:
        """All multiplicities equal to one."""
        return cls(tuple(points), (1,)*len(points))


    @classmethod
    def parse(cls, text: str) -> NodeSpec:
        """
        Parse "p:k,p:k,..." where p is a point and k its multiplicity; a
        missing ":k" means k = 1.
        """

        points: List[float] = []
        multiplicities: List[int] = []
        for item in text.split(','):
            item = item.strip()
            if not item:
                continue
            point, _, k = item.partition(':')
            try:
                points.append(float(point))
                multiplicities.append(int(k) if k.strip() else 1)
            except ValueError:
                raise ValueError('Malformed zero "{}", expected "point:multiplicity"'.format(item))

        return cls(tuple(points), tuple(multiplicities))


    def __str__(self) -> str:
        return ','.join('{!r}:{}'.format(c, k) for c, k in zip(self.points, self.multiplicities))


    @property
    def total(self) -> int:
        """k_1 + ... + k_p"""
        return sum(self.multiplicities)


    def columns(self) -> List[Tuple[float, int]]:
        """(point, derivative order) of every determinant column."""
        return [(c, r) for c, k in zip(self.points, self.multiplicities) for r in range(k)]


@dataclass(frozen=True)
class CoefficientVector:
    """Coefficients b_1, ..., b_n of a combination of eigenfunctions."""

    values: Tuple[float, ...]

    def __post_init__(self) -> None:
        values = tuple(float(v) for v in np.ravel(self.values))
        object.__setattr__(self, 'values', values)
        if not all(math.isfinite(v) for v in values):
            raise ValueError('Coefficients must be finite')


    @classmethod
    def of(cls, b: Union[Sequence[float], RealArray, CoefficientVector]) -> CoefficientVector:
        if isinstance(b, CoefficientVector):
            return b
        return cls(tuple(np.ravel(np.asarray(b, dtype=float))))


    def __len__(self) -> int:
        return len(self.values)


    def __array__(self, dtype=None, copy=None) -> RealArray:
        return np.asarray(self.values, dtype=dtype if dtype is not None else float)


    def as_array(self) -> RealArray:
        return np.array(self.values)


    @property
    def norm(self) -> float:
        return float(np.linalg.norm(self.values))


    def is_zero(self) -> bool:
        return all(v == 0. for v in self.values)


    def normalized(self) -> CoefficientVector:
        if self.is_zero():
            raise ZeroVector('Cannot normalize a zero coefficient vector')
        return CoefficientVector(tuple(np.array(self.values)/self.norm))


    @property
    def m_low(self) -> int:
        """Lowest 1-based index with a nonzero coefficient."""
        for i, v in enumerate(self.values):
            if v != 0.:
                return i + 1
        raise ZeroVector('Zero coefficient vector has no support')


    def cosine_similarity(self, other: Union[CoefficientVector, Sequence[float], RealArray]) -> float:
        a = self.as_array()
        b = np.asarray(other, dtype=float)
        return float(np.dot(a, b)/(np.linalg.norm(a)*np.linalg.norm(b)))


def slater_matrix(basis: SpectralBasis, points: Sequence[float]) -> RealArray:
    """The matrix h_i(x_j)."""
    points = np.asarray(points, dtype=float)
    if points.ndim != 1 or len(points) != basis.n:
        raise ValueError('Expected {} points, got {}'.format(basis.n, np.shape(points)))
    if not np.all(np.isfinite(points)):
        raise ValueError('Points must be finite')
    return basis.values(points)


def slater_det(basis: SpectralBasis, points: Sequence[float]) -> float:
    """
    Slater determinant |h_i(x_j)| of the basis at n points.

    The determinant is computed by LU factorization with partial pivoting.
    """
    return float(np.linalg.det(slater_matrix(basis, points)))


def _probe_points(k: int) -> RealArray:
    return np.arange(1, k + 1)/(k + 1)


def sign_normalize(basis: SpectralBasis, seed: Optional[int] = 0) -> SpectralBasis:
    """
    Flip eigenfunction signs so that every leading Slater determinant is
    positive.

    For k = 1..n, h_k is flipped when the determinant of h_1..h_k at the
    equispaced probe (1/(k+1), ..., k/(k+1)) is negative. A probe
    determinant smaller than 1e-13 in magnitude is replaced by random
    ordered probes.

    Raises
    ------
    DegenerateProbe
        If every probe determinant vanishes for some k.
    """

    flips: List[bool] = []
    current = basis
    rng = None
    for k in range(1, basis.n + 1):
        sub = current.subbasis(k)
        value = slater_det(sub, _probe_points(k))
        if abs(value) < PROBE_THRESHOLD:
            warnings.warn('[pysturm] Vanishing probe determinant for k={}, using random ordered probes'.format(k),
                          stacklevel=2)
            if rng is None:
                rng = make_rng(seed)
            for _ in range(RANDOM_PROBES):
                value = slater_det(sub, random_ordered_points(rng, k))
                if abs(value) >= PROBE_THRESHOLD:
                    break
            else:
                raise DegenerateProbe('Every probe determinant of order {} vanishes'.format(k))
        flip = value < 0
        flips.append(flip)
        if flip:
            current = current.with_flips([j == k - 1 for j in range(basis.n)])

    return current


def _cofactors(matrix: RealArray) -> RealArray:
    """
    Cofactors of the missing last column of an n x (n-1) matrix:
    s_j = (-1)^{n+j} det(matrix without row j), 1-based j.
    """

    n = matrix.shape[0]
    if n == 1:
        return np.ones(1)
    s = np.empty(n)
    for j in range(n):
        minor = np.delete(matrix, j, axis=0)
        s[j] = (-1)**(n + j + 1)*np.linalg.det(minor)
    return s


def cofactor_coeffs(basis: SpectralBasis, c: Sequence[float]) -> CoefficientVector:
    """
    Coefficients s_j(c) with sum_j s_j(c) h_j(x) = S_n(c_1, ..., c_{n-1}, x).

    Parameters
    ----------
    basis : SpectralBasis
        Basis of size n.
    c : Sequence[float]
        n-1 distinct points of ]0, 1[.
    """

    c = [float(v) for v in c]
    if len(c) != basis.n - 1:
        raise ValueError('Expected {} points, got {}'.format(basis.n - 1, len(c)))
    if any(not 0. < v < 1. for v in c):
        raise ValueError('Points must lie in ]0, 1[, got {}'.format(tuple(c)))
    if len(set(c)) != len(c):
        raise ValueError('Points must be distinct, got {}'.format(tuple(c)))

    return CoefficientVector.of(_cofactors(slater_matrix_partial(basis, c)))


def slater_matrix_partial(basis: SpectralBasis, c: Sequence[float]) -> RealArray:
    """The n x len(c) matrix h_i(c_j)."""
    if len(c) == 0:
        return np.empty((basis.n, 0))
    return basis.values(np.asarray(c, dtype=float))


def confluent_matrix(basis: SpectralBasis, spec: NodeSpec) -> RealArray:
    """
    Columns h^{(r)}(c_j), r = 0..k_j - 1, for every prescribed point.
    """

    columns = []
    for point, k in zip(spec.points, spec.multiplicities):
        table = basis.derivative_table([point], k - 1)
        for r in range(k):
            columns.append(table[r, :, 0])

    if not columns:
        return np.empty((basis.n, 0))

    return np.array(columns).T


def confluent_coeffs(basis: SpectralBasis, spec: NodeSpec) -> CoefficientVector:
    """
    Expansion along the last column of the confluent determinant
    |h(c_1) ... h^{(k_1-1)}(c_1) ... h^{(k_p-1)}(c_p) h(x)|.

    Raises
    ------
    NearSingular
        If the cofactors all vanish relative to the column norms.
    """

    if spec.total != basis.n - 1:
        raise ValueError('The multiplicities must sum to n-1={}, got {}'.format(basis.n - 1, spec.total))

    matrix = confluent_matrix(basis, spec)
    s = _cofactors(matrix)
    scale = float(np.prod(np.linalg.norm(matrix, axis=0))) if matrix.size else 1.
    if np.linalg.norm(s) <= SINGULAR_THRESHOLD*scale:
        raise NearSingular('Confluent cofactors vanish for {} (|s|={:.3e}, scale={:.3e})'.format(spec, np.linalg.norm(s), scale))

    return CoefficientVector.of(s)


def confluent_slater(basis: SpectralBasis, spec: NodeSpec, x: float) -> float:
    """
    Confluent Slater determinant with last column h(x).

    With all multiplicities equal to one it is S_n(c_1, ..., c_{n-1}, x).
    """

    if spec.total != basis.n - 1:
        raise ValueError('The multiplicities must sum to n-1={}, got {}'.format(basis.n - 1, spec.total))
    if not 0. <= x <= 1.:
        raise ValueError('x must lie in [0, 1], got {}'.format(x))

    matrix = np.column_stack([confluent_matrix(basis, spec), basis.column(x)])

    return float(np.linalg.det(matrix))


@dataclass(frozen=True)
class ConditionedDeterminant:
    """Determinant together with the product of its column norms."""

    value: float
    scale: float

    @property
    def relative(self) -> float:
        return abs(self.value)/self.scale if self.scale else math.inf


    def __float__(self) -> float:
        return self.value


def confluent_matrix_det(basis: SpectralBasis, spec: NodeSpec) -> ConditionedDeterminant:
    """
    Determinant of the square confluent matrix (multiplicities summing to n).

    Raises
    ------
    NearSingular
        If |det| <= 1e-10 times the product of the column norms.
    """

    if spec.total != basis.n:
        raise ValueError('The multiplicities must sum to n={}, got {}'.format(basis.n, spec.total))

    matrix = confluent_matrix(basis, spec)
    value = float(np.linalg.det(matrix))
    scale = float(np.prod(np.linalg.norm(matrix, axis=0)))
    result = ConditionedDeterminant(value, scale)
    if result.relative <= SINGULAR_THRESHOLD:
        raise NearSingular('Confluent determinant {:.3e} is below {:.0e} times the column norms {:.3e}'.format(value, SINGULAR_THRESHOLD, scale))

    return result
