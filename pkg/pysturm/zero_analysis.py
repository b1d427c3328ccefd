from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field
from functools import cached_property
from typing import Dict, List, Optional, Sequence, Tuple, Union

import numpy as np
from scipy.integrate import cumulative_simpson
from scipy.linalg import null_space
from scipy.optimize import brentq, minimize_scalar

from pysturm.defaults import MAX_DERIVATIVE_ORDER, MIN_GRID, grid_default
from pysturm.errors import UnresolvedZero, ZeroVector
from pysturm.slater import (CoefficientVector, NodeSpec, cofactor_coeffs,
                            confluent_coeffs, confluent_matrix)
from pysturm.spectral_solver import SpectralBasis
from pysturm.typing_local import RealArray, ZeroKind


# Derivative ratio |S^{(m)}(c)| / (|S| omega^m) below which S^{(m)}(c) = 0
ZERO_TOL = 1e-7
# Ratio above which a sign change is accepted as a simple zero at once
SIMPLE_TOL = 1e-3
# Local minima of |S| below this times |S| are antinode candidates
ANTINODE_CANDIDATE_TOL = 1e-3
ROOT_XTOL = 1e-12
# Zeros closer than this many grid cells trigger one grid doubling
CLOSE_CELLS = 4
# Relocation window, in grid cells, around a multiple zero
RELOCATION_CELLS = 2
# Bisection steps toward 0 or 1 when bracketing a zero in an end cell
ENDPOINT_HALVINGS = 30


@dataclass(frozen=True)
class ZeroRecord:
    """Isolated interior zero with its vanishing order."""

    location: float
    multiplicity: int
    kind: ZeroKind

    def __post_init__(self) -> None:
        if not 0. < self.location < 1.:
            raise ValueError('Zero location must be interior, got {}'.format(self.location))
        if self.multiplicity < 1:
            raise ValueError('Multiplicity must be positive')
        expected = 'node' if self.multiplicity % 2 else 'antinode'
        if self.kind != expected:
            raise ValueError('A zero of order {} is a {}'.format(self.multiplicity, expected))


    @classmethod
    def of_order(cls, location: float, multiplicity: int) -> ZeroRecord:
        return cls(location, multiplicity, 'node' if multiplicity % 2 else 'antinode')


    def as_dict(self) -> Dict[str, Union[float, int, str]]:
        return {'location': self.location,
                'multiplicity': self.multiplicity,
                'kind': self.kind}


@dataclass(frozen=True)
class ZeroReport:
    """
    Zeros of a combination in ]0, 1[, sorted by location.

    node_count (N) counts zeros of odd order, antinode_count (A) zeros of
    even order.
    """

    records: Tuple[ZeroRecord, ...] = ()
    grid: int = 0

    def __post_init__(self) -> None:
        records = tuple(sorted(self.records, key=lambda r: r.location))
        object.__setattr__(self, 'records', records)


    @property
    def node_count(self) -> int:
        return sum(1 for r in self.records if r.kind == 'node')


    @property
    def antinode_count(self) -> int:
        return sum(1 for r in self.records if r.kind == 'antinode')


    @property
    def total_with_multiplicity(self) -> int:
        return sum(r.multiplicity for r in self.records)


    @property
    def distinct_count(self) -> int:
        return len(self.records)


    @property
    def max_multiplicity(self) -> int:
        return max((r.multiplicity for r in self.records), default=0)


    @property
    def locations(self) -> Tuple[float, ...]:
        return tuple(r.location for r in self.records)


    @property
    def multiplicities(self) -> Tuple[int, ...]:
        return tuple(r.multiplicity for r in self.records)


    def as_dict(self) -> Dict[str, object]:
        return {'zeros': [r.as_dict() for r in self.records],
                'N': self.node_count,
                'A': self.antinode_count,
                'total_with_multiplicity': self.total_with_multiplicity}


def nodal_domain_count(report: ZeroReport) -> int:
    """Connected components of ]0, 1[ minus the zero set."""
    return report.distinct_count + 1


class LinearCombination:
    """
    The function S_b(x) = sum_j b_j h_j(x) over a spectral basis.
    """

    def __init__(self,
                 basis: SpectralBasis,
                 b: Union[CoefficientVector, Sequence[float], RealArray]) -> None:

        coefficients = np.asarray(b, dtype=float)
        if coefficients.shape != (basis.n,):
            raise ValueError('Expected {} coefficients, got shape {}'.format(basis.n, coefficients.shape))
        if not np.all(np.isfinite(coefficients)):
            raise ValueError('Coefficients must be finite')
        if not np.any(coefficients):
            raise ZeroVector('The zero combination has no isolated zeros')

        self.basis = basis
        self.coefficients = coefficients


    def __call__(self, x: Union[float, RealArray]) -> Union[float, RealArray]:
        values = self.coefficients @ self.basis.values(x)
        return float(values[0]) if np.ndim(x) == 0 else values


    def derivative(self, x: Union[float, RealArray], m: int) -> Union[float, RealArray]:
        values = self.coefficients @ self.basis.derivatives(x, m)
        return float(values[0]) if np.ndim(x) == 0 else values


    def derivatives_upto(self, x: float, order: int) -> RealArray:
        """S^{(m)}(x) for m = 0..order."""
        table = self.basis.derivative_table([x], order)
        return np.einsum('j,mj->m', self.coefficients, table[:, :, 0])


    @cached_property
    def grid_values(self) -> RealArray:
        return self.coefficients @ self.basis.grid_values


    @cached_property
    def sup_norm(self) -> float:
        """max |S_b| on the basis grid."""
        return float(np.max(np.abs(self.grid_values)))


    def curve(self, grid: Optional[int] = None) -> Tuple[RealArray, RealArray]:
        """Plot-ready samples (x, S_b(x)) on a uniform grid."""
        if grid is None:
            return self.basis.grid, self.grid_values
        x = np.linspace(0., 1., grid + 1)
        return x, self(x)


class _Classifier:
    """
    Vanishing-order test of S at a point.

    Derivative m is considered zero when
    |S^{(m)}(c)| <= ZERO_TOL |S|_inf omega^m with omega = max(pi, sqrt|lambda_n|),
    the natural frequency of the highest eigenfunction.
    """

    def __init__(self, s: LinearCombination, cell: float) -> None:
        self.s = s
        self.cell = cell
        self.norm = s.sup_norm
        self.omega = max(math.pi, math.sqrt(abs(s.basis.eigenvalues[-1])))


    def ratios(self, c: float, order: int) -> RealArray:
        d = self.s.derivatives_upto(c, order)
        return np.abs(d)/(self.norm*self.omega**np.arange(order + 1))


    def relocate(self, c: float, m: int, window: Optional[float] = None) -> float:
        """
        Root of S^{(m)} within `window` of c (RELOCATION_CELLS cells by
        default), or c itself when S^{(m)} does not change sign there.
        """

        if m == 0:
            return c
        if window is None:
            window = RELOCATION_CELLS*self.cell
        low = max(c - window, self.cell/64)
        high = min(c + window, 1. - self.cell/64)

        def f(x: float) -> float:
            return self.s.derivative(x, m)

        f_low, f_high = f(low), f(high)
        if f_low == 0.:
            return low
        if f_high == 0.:
            return high
        if np.sign(f_low) == np.sign(f_high):
            return c
        return float(brentq(f, low, high, xtol=ROOT_XTOL))


    def exact_order(self, c: float, k: int, window: Optional[float] = None) -> Optional[float]:
        """
        Location of a zero of exact order k near c, or None: the zero is
        placed at the root of S^{(k-1)}, derivatives 0..k-1 must vanish
        there and derivative k must not.
        """

        location = self.relocate(c, k - 1, window)
        r = self.ratios(location, k)
        if np.all(r[:k] <= ZERO_TOL) and r[k] > ZERO_TOL:
            return location
        return None


    def is_simple(self, c: float) -> bool:
        """Slope large enough for a sign change at c to be a simple zero."""
        return bool(self.ratios(c, 1)[1] >= SIMPLE_TOL)


    def resolve_cluster(self, members: Sequence[Tuple[float, bool]]) -> List[ZeroRecord]:
        """
        Zeros behind a cluster of close candidates (location, odd) whose
        slope is too small for a simple zero.

        Rounding noise around a multiple zero splits it into several sign
        changes and minima of |S| spread over a few cells. The cluster is
        one zero of the highest order confirmed near its centre, an order
        whose parity matches the net sign change across the cluster. When
        no order is confirmed, each odd candidate whose slope does not
        vanish is a simple zero; a net sign change always leaves at least
        one, the steepest.

        Raises
        ------
        UnresolvedZero
            If every derivative up to the order cap vanishes.
        """

        odd_members = [c for c, odd in members if odd]

        # minima of |S| that stay away from zero
        if not odd_members and all(self.ratios(c, 0)[0] > ZERO_TOL for c, _ in members):
            return []

        parity = len(odd_members) % 2
        locations = np.array([c for c, _ in members])
        centre = float(np.mean(locations))
        window = float(np.ptp(locations))/2 + RELOCATION_CELLS*self.cell

        for k in range(MAX_DERIVATIVE_ORDER, 1, -1):
            if k % 2 != parity:
                continue
            location = self.exact_order(centre, k, window)
            if location is not None:
                return [ZeroRecord.of_order(location, k)]

        records: List[ZeroRecord] = []
        slopes: List[float] = []
        for c, odd in members:
            r = self.ratios(c, MAX_DERIVATIVE_ORDER)
            if np.all(r <= ZERO_TOL):
                raise UnresolvedZero('Every derivative up to order {} vanishes at x={}'.format(MAX_DERIVATIVE_ORDER, c))
            if odd:
                slopes.append(float(r[1]))
                if r[1] > ZERO_TOL:
                    records.append(ZeroRecord.of_order(c, 1))

        if parity and not records:
            records.append(ZeroRecord.of_order(odd_members[int(np.argmax(slopes))], 1))

        return records


def _candidates(x: RealArray,
                v: RealArray,
                norm: float) -> Tuple[List[Tuple[float, float]], List[int], List[int]]:
    """
    Sign-change brackets, indices of exact zero samples and indices of
    antinode candidates among the interior samples x[1:-1].
    """

    last = len(x) - 1

    left, right = v[1:last-1], v[2:last]
    change = (left != 0.) & (right != 0.) & (np.sign(left) != np.sign(right))
    starts = np.nonzero(change)[0] + 1
    brackets = [(float(x[i]), float(x[i+1])) for i in starts]

    exact = np.nonzero(v[1:last] == 0.)[0] + 1

    i = np.arange(2, last - 1)
    before, here, after = np.abs(v[i-1]), np.abs(v[i]), np.abs(v[i+1])
    sign = np.sign(v[i])
    same_sign = (sign != 0.) & (np.sign(v[i-1]) == sign) & (np.sign(v[i+1]) == sign)
    minima = i[same_sign & (here <= before) & (here < after) & (here <= ANTINODE_CANDIDATE_TOL*norm)]

    return brackets, exact.tolist(), minima.tolist()


def _toward(s: LinearCombination, end: float, inner: float, sign: float) -> Optional[float]:
    """Halve from inner toward end until S takes the given sign."""
    t = inner
    for _ in range(ENDPOINT_HALVINGS):
        t = end + (t - end)/2
        if np.sign(s(t)) == sign:
            return t
    return None


def _endpoint_brackets(s: LinearCombination, x: RealArray) -> List[Tuple[float, float]]:
    """
    Brackets of zeros in the end cells ]0, x_1[ and ]x_{M-1}, 1[.

    S vanishes at both ends, so near 0 it has the sign of S'(0) and near 1
    the sign of -S'(1); a sample of the other sign in the end cell means a
    zero in between.
    """

    brackets: List[Tuple[float, float]] = []

    first = float(x[1])
    sign = np.sign(s.derivative(0., 1))
    value = s(first)
    if sign != 0. and value != 0. and np.sign(value) != sign:
        a = _toward(s, 0., first, sign)
        if a is not None:
            brackets.append((a, first))

    last = float(x[-2])
    sign = -np.sign(s.derivative(1., 1))
    value = s(last)
    if sign != 0. and value != 0. and np.sign(value) != sign:
        b = _toward(s, 1., last, sign)
        if b is not None:
            brackets.append((last, b))

    return brackets


def _clusters(members: List[Tuple[float, bool]], gap: float) -> List[List[Tuple[float, bool]]]:
    """Split candidates sorted by location wherever two are more than `gap` apart."""
    clusters: List[List[Tuple[float, bool]]] = []
    for member in sorted(members):
        if clusters and member[0] - clusters[-1][-1][0] <= gap:
            clusters[-1].append(member)
        else:
            clusters.append([member])
    return clusters


def _find_zeros_on_grid(s: LinearCombination, grid: int) -> List[ZeroRecord]:

    if grid == s.basis.n_grid:
        x, v = s.basis.grid, s.grid_values
    else:
        x = np.linspace(0., 1., grid + 1)
        v = s(x)
    cell = 1./grid
    classifier = _Classifier(s, cell)

    brackets, exact, minima = _candidates(x, v, s.sup_norm)
    brackets.extend(_endpoint_brackets(s, x))

    records: List[ZeroRecord] = []
    weak: List[Tuple[float, bool]] = []

    for a, b in brackets:
        c = float(brentq(s, a, b, xtol=ROOT_XTOL))
        if classifier.is_simple(c):
            records.append(ZeroRecord.of_order(c, 1))
        else:
            weak.append((c, True))

    for i in exact:
        c = float(x[i])
        odd = bool(np.sign(v[i-1]) != np.sign(v[i+1]))
        if odd and classifier.is_simple(c):
            records.append(ZeroRecord.of_order(c, 1))
        else:
            weak.append((c, odd))

    for i in minima:
        # golden section on |S|, then polish as a root of S'
        try:
            res = minimize_scalar(lambda t: abs(s(t)), bracket=(x[i-1], x[i], x[i+1]), method='golden')
            c = float(res.x) if x[i-1] < res.x < x[i+1] else float(x[i])
        except ValueError:
            c = float(x[i])
        weak.append((classifier.relocate(c, 1), False))

    for cluster in _clusters(weak, CLOSE_CELLS*cell):
        records.extend(classifier.resolve_cluster(cluster))

    # merge duplicates found from two candidate kinds
    records.sort(key=lambda r: r.location)
    merged: List[ZeroRecord] = []
    for record in records:
        if merged and abs(record.location - merged[-1].location) < cell/2:
            if record.multiplicity > merged[-1].multiplicity:
                merged[-1] = record
            continue
        merged.append(record)

    return [r for r in merged if 0. < r.location < 1.]


def find_zeros(basis: SpectralBasis,
               b: Union[CoefficientVector, Sequence[float], RealArray],
               grid: Optional[int] = None) -> ZeroReport:
    """
    Locate the zeros of S_b in ]0, 1[ with their multiplicities.

    S_b is sampled on a uniform grid. Sign changes, including those in the
    two end cells detected against the signs of S_b'(0) and S_b'(1), are
    refined by Brent's method to 1e-12, and local minima of |S_b| without
    sign change (below 1e-3 |S_b|) by golden section followed by a root of
    S_b'. A sign change with a steep slope is a simple zero. The remaining
    candidates are grouped when less than 4 cells apart and each group is
    one zero whose order is the highest m for which S_b..S_b^{(m-1)}
    vanish and S_b^{(m)} does not; odd orders are nodes, even orders
    antinodes. The grid is doubled once when two zeros are closer than
    4 cells.

    Parameters
    ----------
    basis : SpectralBasis
        Basis h_1..h_n.
    b : CoefficientVector
        Coefficients of the combination, not all zero.
    grid : int
        Number of grid intervals (at least 256), SOL_GRID_DEFAULT or 4096
        by default.

    Raises
    ------
    ZeroVector
        If b = 0.
    UnresolvedZero
        If a zero has no nonzero derivative up to order 12.
    """

    if grid is None:
        grid = grid_default()
    if grid < MIN_GRID:
        raise ValueError('grid must be at least {}, got {}'.format(MIN_GRID, grid))

    s = LinearCombination(basis, b)
    records = _find_zeros_on_grid(s, grid)

    locations = [r.location for r in records]
    if any(hi - lo < CLOSE_CELLS/grid for lo, hi in zip(locations, locations[1:])):
        warnings.warn('[pysturm] Zeros closer than {} grid cells, doubling the grid to {}'.format(CLOSE_CELLS, 2*grid),
                      stacklevel=2)
        grid *= 2
        records = _find_zeros_on_grid(s, grid)

    return ZeroReport(tuple(records), grid)


@dataclass(frozen=True)
class Verdict:
    """Outcome of one bound check, `claim` names the checked statement."""

    claim: str
    passed: bool
    detail: Dict[str, object] = field(default_factory=dict)

    def __bool__(self) -> bool:
        return self.passed


    def as_dict(self) -> Dict[str, object]:
        return {'id': self.claim, 'passed': self.passed, **self.detail}


def check_sturm_upper(report: ZeroReport, n: int) -> Verdict:
    """At most n-1 zeros in ]0, 1[ counted with multiplicity."""
    total = report.total_with_multiplicity
    return Verdict('sturm_upper_bound', total <= n - 1,
                   {'total_with_multiplicity': total, 'bound': n - 1})


def check_sign_changes_lower(report: ZeroReport, m_low: int) -> Verdict:
    """At least m_low-1 sign changes when b is supported on m_low..n."""
    return Verdict('sign_change_lower_bound', report.node_count >= m_low - 1,
                   {'N': report.node_count, 'bound': m_low - 1})


def check_gantmacher_krein(report: ZeroReport, n: int) -> Verdict:
    """N + 2A <= n-1."""
    value = report.node_count + 2*report.antinode_count
    return Verdict('node_antinode_bound', value <= n - 1,
                   {'N': report.node_count, 'A': report.antinode_count, 'value': value, 'bound': n - 1})


def check_weak_upper(report: ZeroReport, n: int) -> Verdict:
    """At most n-1 distinct zeros, hence at most n nodal domains."""
    distinct = report.distinct_count
    domains = nodal_domain_count(report)
    return Verdict('distinct_zero_bound', distinct <= n - 1 and domains <= n,
                   {'distinct': distinct, 'nodal_domains': domains, 'bound': n - 1})


def check_multiple_zero_corollary(report: ZeroReport, n: int) -> Verdict:
    """A zero of order >= 2 forces at most n-2 distinct zeros."""
    if report.max_multiplicity < 2:
        return Verdict('multiple_zero_distinct_bound', True, {'vacuous': True})
    distinct = report.distinct_count
    return Verdict('multiple_zero_distinct_bound', distinct <= n - 2,
                   {'distinct': distinct, 'bound': n - 2})


def check_all(report: ZeroReport, n: int, m_low: int = 1) -> List[Verdict]:
    return [check_sturm_upper(report, n),
            check_sign_changes_lower(report, m_low),
            check_gantmacher_krein(report, n),
            check_weak_upper(report, n),
            check_multiple_zero_corollary(report, n)]


def liouville_iterate(basis: SpectralBasis,
                      b: Union[CoefficientVector, Sequence[float], RealArray],
                      ell: int) -> CoefficientVector:
    """
    Coefficients of the ell-th Liouville iterate, b'_k = (lambda_1 - lambda_k)^ell b_k,
    renormalized to unit length.

    The factors are divided by |lambda_1 - lambda_n| before exponentiation,
    which only changes the length of the vector. An iterate that vanishes,
    for b = 0 or for b supported on h_1 with ell >= 1, is the zero vector.
    """

    if ell < 0:
        raise ValueError('ell must be non-negative, got {}'.format(ell))

    coefficients = np.asarray(b, dtype=float)
    if coefficients.shape != (basis.n,):
        raise ValueError('Expected {} coefficients, got shape {}'.format(basis.n, coefficients.shape))

    lam = basis.eigenvalues
    spread = abs(lam[0] - lam[-1])
    factors = (lam[0] - lam)/spread if spread > 0 else np.zeros(basis.n)
    mapped = coefficients*factors**ell if ell else coefficients.copy()
    if not np.any(mapped):
        return CoefficientVector.of(mapped)

    return CoefficientVector.of(mapped/np.linalg.norm(mapped))


def liouville_identity_residual(basis: SpectralBasis,
                                b: Union[CoefficientVector, Sequence[float], RealArray]) -> float:
    """
    Residual of h_1 U' - h_1' U = int_0^x h_1 U_1 on the basis grid, where
    U = S_b and U_1 has coefficients (lambda_1 - lambda_k) b_k; relative to
    max |h_1 U'|.
    """

    coefficients = LinearCombination(basis, b).coefficients
    x = basis.grid
    lam = basis.eigenvalues

    table = basis.derivative_table(x, 1)
    h1, dh1 = table[0, 0], table[1, 0]
    uu, du = coefficients @ table[0], coefficients @ table[1]
    u1 = ((lam[0] - lam)*coefficients) @ table[0]

    wronskian = h1*du - dh1*uu
    integral = cumulative_simpson(h1*u1, x=x, initial=0.)
    scale = float(np.max(np.abs(h1*du)))

    return float(np.max(np.abs(wronskian - integral))/scale)


def reconstruct_from_zeros(basis: SpectralBasis, spec: NodeSpec) -> CoefficientVector:
    """
    Coefficients of the combination vanishing at the prescribed points with
    the prescribed orders, from the last-column expansion of the confluent
    determinant. Multiplicities must sum to n-1.

    Raises
    ------
    NearSingular
        If the confluent cofactors vanish.
    """

    return confluent_coeffs(basis, spec)


def combination_vanishing_on(basis: SpectralBasis, spec: NodeSpec) -> CoefficientVector:
    """
    Unit coefficient vector spanning the combinations whose derivatives
    0..k_j-1 vanish at every c_j, computed as the null space of the
    constraint matrix.
    """

    constraints = confluent_matrix(basis, spec).T
    if constraints.size == 0:
        raise ValueError('An empty specification constrains nothing')

    kernel = null_space(constraints)
    if kernel.shape[1] != 1:
        raise ValueError('The constraints leave a {}-dimensional kernel'.format(kernel.shape[1]))

    return CoefficientVector.of(kernel[:, 0])


def sign_change_witness(basis: SpectralBasis, z: Sequence[float]) -> CoefficientVector:
    """
    Combination of h_1..h_{M+1} changing sign exactly at the M points z,
    padded with zeros to the basis size.
    """

    z = [float(v) for v in z]
    if len(z) >= basis.n:
        raise ValueError('At most {} sign changes fit in the basis, got {}'.format(basis.n - 1, len(z)))

    s = cofactor_coeffs(basis.subbasis(len(z) + 1), z).as_array()

    return CoefficientVector.of(np.concatenate((s, np.zeros(basis.n - len(s)))))


def matches_spec(report: ZeroReport,
                 spec: NodeSpec,
                 tol: float = 1e-8) -> bool:
    """True when the report holds exactly the prescribed zeros and orders."""

    if report.distinct_count != len(spec.points):
        return False

    return all(abs(r.location - c) <= tol and r.multiplicity == k
               for r, c, k in zip(report.records, spec.points, spec.multiplicities))
