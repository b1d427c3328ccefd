"""
Command line front end.

    pysturm spectrum    --q "10*cos(4*x)" --n 6
    pysturm verify      --q 0 --n 6 --trials 1000 --seed 7
    pysturm reconstruct --q 0 --n 4 --zeros 0.2:1,0.5:1,0.8:1
    pysturm oscillator  --n 5
    pysturm vandermonde --n 5

Every command writes a report {config, results, verdict} (JSON) or a table
of per-result scalars (CSV) to --out or standard output. Exit codes: 0 when
every check passes, 1 on usage or parse errors, 2 when a mathematical
statement is violated.
"""
from __future__ import annotations

import argparse
import csv
import io
import json
import math
import sys
from dataclasses import asdict, dataclass
from typing import Callable, Dict, List, Optional, Sequence, Tuple

import numpy as np
import sympy as sp
from tqdm import tqdm

from pysturm.defaults import (MAX_EXACT_SIZE, MIN_GRID, grid_default, make_rng,
                              random_unit_vector)
from pysturm.errors import ContractViolation, EvalDomainError, ExpressionSyntaxError
from pysturm.oscillator import (MAX_SLATER_SIZE, confluent_orders, hermite,
                                normalization_error, oscillator_zero_count,
                                slater_vandermonde_constant)
from pysturm.slater import NodeSpec, sign_normalize
from pysturm.spectral_solver import (DirichletProblem, SpectralBasis,
                                     orthonormality_matrix, solve_basis)
from pysturm.typing_local import OutputFormat
from pysturm.vandermonde import (GroupedPoint, build_P, divide, factorial_product,
                                 laplacian, local_factor_rho,
                                 local_factor_rho_stagewise, mixed_derivative_constant,
                                 value_at, vandermonde_det, vandermonde_sign,
                                 variables, verify_local_factorization)
from pysturm.zero_analysis import (LinearCombination, check_all,
                                   combination_vanishing_on, find_zeros,
                                   matches_spec, reconstruct_from_zeros)


Result = Dict[str, object]

ORTHONORMALITY_TOL = 1e-7
RECONSTRUCTION_TOL = 1e-8
LOCAL_FACTOR_CONSTANT = 10

# Statement checked by each result id, reported in the "claim" field
CLAIMS: Dict[str, str] = {
    'eigenpair': 'simple_eigenvalues_node_count',
    'orthonormality': 'orthonormal_eigenfunctions',
    'fermionic_ground_energy': 'fermionic_ground_energy',
    'trial': 'combination_zero_bounds',
    'reconstruction': 'prescribed_zeros_reconstruction',
    'proportionality': 'prescribed_zeros_uniqueness',
    'sturm_upper_bound': 'sturm_upper_bound',
    'sign_change_lower_bound': 'sign_change_lower_bound',
    'node_antinode_bound': 'node_antinode_bound',
    'distinct_zero_bound': 'distinct_zero_bound',
    'multiple_zero_distinct_bound': 'multiple_zero_distinct_bound',
    'hermite_ode': 'hermite_equation',
    'normalization': 'oscillator_orthonormality',
    'slater_vandermonde_identity': 'oscillator_slater_vandermonde',
    'oscillator_zero_bound': 'oscillator_sturm_upper_bound',
    'simple_zeros': 'oscillator_prescribed_zeros',
    'confluent_orders': 'oscillator_prescribed_zeros',
    'harmonicity': 'vandermonde_harmonic',
    'factorial_constant': 'vandermonde_factorial_constant',
    'vandermonde_determinant': 'vandermonde_determinant',
    'divisibility': 'vandermonde_divisibility',
    'local_factorization': 'vandermonde_local_factorization',
}


@dataclass(frozen=True)
class RunConfig:
    """Validated command line configuration."""

    command: str
    potential: str = '0'
    n: int = 6
    grid: int = 4096
    seed: int = 0
    trials: int = 100
    m_low: int = 1
    zeros: Optional[str] = None
    out: Optional[str] = None
    fmt: OutputFormat = 'json'
    dump_curve: Optional[str] = None
    verbose: bool = False

    def __post_init__(self) -> None:
        if self.n < 1:
            raise ValueError('--n must be at least 1, got {}'.format(self.n))
        if self.grid < MIN_GRID:
            raise ValueError('--grid must be at least {}, got {}'.format(MIN_GRID, self.grid))
        if self.trials < 0:
            raise ValueError('--trials must be non-negative, got {}'.format(self.trials))
        if not 1 <= self.m_low <= self.n:
            raise ValueError('--m-low must be between 1 and n={}, got {}'.format(self.n, self.m_low))
        if self.fmt not in ('json', 'csv'):
            raise ValueError('--format must be json or csv, got {}'.format(self.fmt))


    def report_fields(self) -> Dict[str, object]:
        """Configuration echoed in reports, without output paths."""
        d = asdict(self)
        for key in ('out', 'dump_curve', 'verbose'):
            d.pop(key)
        return d


def _progress(config: RunConfig) -> Callable:
    return tqdm if config.verbose else lambda t: t


def _basis(config: RunConfig) -> SpectralBasis:
    problem = DirichletProblem.from_source(config.potential)
    basis = solve_basis(problem, config.n, config.grid, verbose=config.verbose)
    return sign_normalize(basis, seed=config.seed)


def _floats(values: Sequence[float]) -> List[float]:
    return [float(v) for v in values]


def _write_curve(path: str, x: np.ndarray, columns: Dict[str, np.ndarray]) -> None:
    with open(path, 'w', newline='') as f:
        writer = csv.writer(f)
        writer.writerow(['x'] + list(columns))
        for i, xi in enumerate(x):
            writer.writerow([repr(float(xi))] + [repr(float(c[i])) for c in columns.values()])


def _verdict_of(results: Sequence[Result]) -> bool:
    return all(bool(r.get('passed', True)) for r in results)


def with_claim(result: Result) -> Result:
    """Copy of a result with its claim id right after its id."""
    rest = {k: v for k, v in result.items() if k not in ('id', 'claim')}
    return {'id': result['id'], 'claim': CLAIMS[str(result['id'])], **rest}


def cmd_spectrum(config: RunConfig) -> List[Result]:
    """Eigenvalues, node counts and orthonormality of the first n eigenpairs."""

    problem = DirichletProblem.from_source(config.potential)
    basis = solve_basis(problem, config.n, config.grid, verbose=config.verbose)

    results: List[Result] = []
    previous = -math.inf
    for pair in basis.pairs:
        nodes = pair.node_count()
        results.append({'id': 'eigenpair',
                        'index': pair.index,
                        'eigenvalue': pair.eigenvalue,
                        'node_count': nodes,
                        'expected_node_count': pair.index - 1,
                        'passed': nodes == pair.index - 1 and pair.eigenvalue > previous})
        previous = pair.eigenvalue

    gram = orthonormality_matrix(basis)
    deviation = float(np.max(np.abs(gram - np.eye(basis.n))))
    results.append({'id': 'orthonormality',
                    'max_deviation': deviation,
                    'passed': deviation <= ORTHONORMALITY_TOL})
    results.append({'id': 'fermionic_ground_energy',
                    'value': basis.fermionic_ground_energy})

    if config.dump_curve:
        _write_curve(config.dump_curve, basis.grid,
                     {'h{}'.format(p.index): p.values for p in basis.pairs})

    return results


def cmd_verify(config: RunConfig) -> List[Result]:
    """Randomized bound suite over unit coefficient vectors."""

    results: List[Result] = []
    if config.trials == 0:
        return results

    basis = _basis(config)
    rng = make_rng(config.seed)
    for trial in _progress(config)(range(config.trials)):
        b = random_unit_vector(rng, config.n, config.m_low)
        report = find_zeros(basis, b, config.grid)
        verdicts = check_all(report, config.n, config.m_low)
        results.append({'id': 'trial',
                        'trial': trial,
                        'coefficients': _floats(b),
                        'total_with_multiplicity': report.total_with_multiplicity,
                        'N': report.node_count,
                        'A': report.antinode_count,
                        'verdicts': {v.claim: v.passed for v in verdicts},
                        'passed': all(verdicts)})
        if trial == 0 and config.dump_curve:
            x, s = LinearCombination(basis, b).curve()
            _write_curve(config.dump_curve, x, {'S': s})

    return results


def cmd_reconstruct(config: RunConfig) -> List[Result]:
    """Combination with prescribed zeros, re-detected and compared."""

    if not config.zeros:
        raise ValueError('reconstruct needs --zeros')
    spec = NodeSpec.parse(config.zeros)
    if spec.total != config.n - 1:
        raise ValueError('The multiplicities sum to {}, expected n-1={}'.format(spec.total, config.n - 1))

    basis = _basis(config)
    b = reconstruct_from_zeros(basis, spec)
    report = find_zeros(basis, b, config.grid)
    verdicts = check_all(report, config.n)

    if spec.points:
        independent = combination_vanishing_on(basis, spec)
        residual = 1. - abs(b.cosine_similarity(independent))
    else:
        residual = 0.

    results: List[Result] = [
        {'id': 'reconstruction',
         'coefficients': _floats(b.values),
         **report.as_dict(),
         'passed': matches_spec(report, spec, RECONSTRUCTION_TOL)},
        {'id': 'proportionality',
         'residual': residual,
         'passed': residual <= RECONSTRUCTION_TOL},
    ]
    results.extend(v.as_dict() for v in verdicts)

    if config.dump_curve:
        x, s = LinearCombination(basis, b).curve()
        _write_curve(config.dump_curve, x, {'S': s})

    return results


def cmd_oscillator(config: RunConfig) -> List[Result]:
    """Exact harmonic oscillator identities."""

    n = config.n
    if n > MAX_SLATER_SIZE:
        raise ValueError('oscillator supports n <= {}, got {}'.format(MAX_SLATER_SIZE, n))

    results: List[Result] = []
    for m in range(max(n, 11)):
        h = hermite(m)
        item: Result = {'id': 'hermite_ode', 'degree': m, 'passed': h.ode_residual().is_zero}
        if m < n:
            item['polynomial'] = h.to_text()
            item['coefficients'] = list(h.coefficients)
        results.append(item)

    for j in range(1, n + 1):
        error = normalization_error(j)
        results.append({'id': 'normalization', 'index': j, 'error': error, 'passed': error <= 1e-10})

    try:
        constant = slater_vandermonde_constant(n, seed=config.seed)
        results.append({'id': 'slater_vandermonde_identity', 'B_n': constant, 'passed': True})
    except ContractViolation as e:
        results.append({'id': 'slater_vandermonde_identity', 'message': str(e), 'passed': False})

    rng = make_rng(config.seed)
    worst = 0
    for _ in range(config.trials):
        count = oscillator_zero_count(random_unit_vector(rng, n))
        worst = max(worst, count)
    results.append({'id': 'oscillator_zero_bound',
                    'trials': config.trials,
                    'max_zero_count': worst,
                    'bound': n - 1,
                    'passed': worst <= n - 1})

    if n >= 2:
        c = sorted({sp.Rational(int(v), 8) for v in rng.integers(-24, 25, n - 1)})
        while len(c) < n - 1:
            c = sorted(set(c) | {sp.Rational(int(rng.integers(-24, 25)), 8)})
        orders, total = confluent_orders(GroupedPoint(tuple(c), (1,)*(n - 1)), n)
        results.append({'id': 'simple_zeros',
                        'points': [str(v) for v in c],
                        'orders': list(orders),
                        'total_with_multiplicity': total,
                        'passed': all(k == 1 for k in orders) and total == n - 1})

        multiplicities = _confluent_pattern(n - 1)
        values = tuple(sp.Rational(2*j - len(multiplicities) + 1, 4) for j in range(len(multiplicities)))
        orders, total = confluent_orders(GroupedPoint(values, multiplicities), n)
        results.append({'id': 'confluent_orders',
                        'points': [str(v) for v in values],
                        'multiplicities': list(multiplicities),
                        'orders': list(orders),
                        'total_with_multiplicity': total,
                        'passed': orders == multiplicities and total == n - 1})

    return results


def _confluent_pattern(total: int) -> Tuple[int, ...]:
    """Multiplicities (2, 2, ..., 1) summing to total."""
    pattern = [2]*(total//2)
    if total % 2:
        pattern.append(1)
    return tuple(pattern)


def cmd_vandermonde(config: RunConfig) -> List[Result]:
    """Exact Vandermonde polynomial identities."""

    n = config.n
    if n > MAX_EXACT_SIZE:
        raise ValueError('vandermonde supports n <= {}, got {}'.format(MAX_EXACT_SIZE, n))

    results: List[Result] = []
    for m in range(2, n + 1):
        results.append({'id': 'harmonicity', 'n': m, 'passed': laplacian(build_P(m)).is_zero})

    for m in range(2, n + 1):
        constant = mixed_derivative_constant(m)
        expected = factorial_product(m)
        results.append({'id': 'factorial_constant',
                        'n': m,
                        'value': constant,
                        'magnitude': expected,
                        'passed': constant == vandermonde_sign(m)*expected})

    rng = make_rng(config.seed)
    ok = True
    for _ in range(config.trials):
        points = [sp.Rational(int(v), 7) for v in rng.integers(-20, 21, n)]
        ok &= bool(value_at(build_P(n), points) == vandermonde_sign(n)*vandermonde_det(points))
    results.append({'id': 'vandermonde_determinant', 'n': n, 'trials': config.trials, 'passed': ok})

    for m in range(2, min(n, 4) + 1):
        xs = variables(m)
        _, remainder = divide(build_P(m), sp.Poly(xs[0] - xs[1], *xs))
        results.append({'id': 'divisibility', 'n': m, 'passed': remainder.is_zero})

    examples = [GroupedPoint((0, 1, 2), (2, 2, 1)), GroupedPoint((0, 1, 2), (3, 1, 1))]
    for point in examples:
        rho = local_factor_rho(point)
        report = verify_local_factorization(point, max(1, min(config.trials, 20)), seed=config.seed)
        results.append({'id': 'local_factorization',
                        'values': [str(v) for v in point.values],
                        'multiplicities': list(point.multiplicities),
                        'rho': str(rho),
                        'stagewise_rho': str(local_factor_rho_stagewise(point)),
                        'max_deviation': {str(t): float(d) for t, d in report.max_deviation.items()},
                        'fitted_constant': report.fitted_constant,
                        'passed': (report.passed
                                   and report.within(LOCAL_FACTOR_CONSTANT)
                                   and rho == local_factor_rho_stagewise(point))})

    return results


COMMANDS: Dict[str, Callable[[RunConfig], List[Result]]] = {
    'spectrum': cmd_spectrum,
    'verify': cmd_verify,
    'reconstruct': cmd_reconstruct,
    'oscillator': cmd_oscillator,
    'vandermonde': cmd_vandermonde,
}


def render(config: RunConfig, results: Sequence[Result], passed: bool) -> str:
    """Serialize a report in the configured format."""

    if config.fmt == 'json':
        report = {'config': config.report_fields(),
                  'results': list(results),
                  'verdict': 'pass' if passed else 'fail'}
        return json.dumps(report, indent=2) + '\n'

    # csv keeps scalar fields only
    columns: List[str] = []
    rows = []
    for r in results:
        row = {k: v for k, v in r.items() if isinstance(v, (int, float, str, bool))}
        for k in row:
            if k not in columns:
                columns.append(k)
        rows.append(row)
    buffer = io.StringIO()
    writer = csv.DictWriter(buffer, fieldnames=columns, lineterminator='\n')
    writer.writeheader()
    writer.writerows(rows)

    return buffer.getvalue()


def build_parser() -> argparse.ArgumentParser:

    common = argparse.ArgumentParser(add_help=False)
    common.add_argument('--q', default='0', help='potential q(x), e.g. "10*cos(4*x)"')
    common.add_argument('--n', type=int, default=6, help='basis size')
    common.add_argument('--grid', type=int, default=None,
                        help='dense grid intervals (default: $SOL_GRID_DEFAULT or 4096)')
    common.add_argument('--trials', type=int, default=100, help='number of random trials')
    common.add_argument('--seed', type=int, default=0, help='random seed')
    common.add_argument('--m-low', type=int, default=1, dest='m_low',
                        help='lowest eigenfunction index in random combinations')
    common.add_argument('--zeros', default=None, help='prescribed zeros "p:k,p:k,..."')
    common.add_argument('--out', default=None, help='report path (default: standard output)')
    common.add_argument('--format', choices=('json', 'csv'), default='json', dest='fmt')
    common.add_argument('--dump-curve', default=None, dest='dump_curve',
                        help='write plot-ready (x, S(x)) samples to this csv file')
    common.add_argument('--verbose', action='store_true', help='progress bars on standard error')

    parser = argparse.ArgumentParser(prog='pysturm',
                                     description='Zeros of combinations of Sturm-Liouville eigenfunctions.')
    sub = parser.add_subparsers(dest='command', required=True)
    for name, command in COMMANDS.items():
        sub.add_parser(name, parents=[common], help=(command.__doc__ or '').strip())

    return parser


def main(argv: Optional[Sequence[str]] = None) -> int:

    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as e:
        return 0 if e.code == 0 else 1

    try:
        config = RunConfig(command=args.command,
                           potential=args.q,
                           n=args.n,
                           grid=args.grid if args.grid is not None else grid_default(),
                           seed=args.seed,
                           trials=args.trials,
                           m_low=args.m_low,
                           zeros=args.zeros,
                           out=args.out,
                           fmt=args.fmt,
                           dump_curve=args.dump_curve,
                           verbose=args.verbose)
        results = [with_claim(r) for r in COMMANDS[config.command](config)]
    except (ExpressionSyntaxError, EvalDomainError, ValueError) as e:
        print('pysturm: error: {}'.format(e), file=sys.stderr)
        return 1
    except (ContractViolation, RuntimeError) as e:
        print('pysturm: contract violation: {}'.format(e), file=sys.stderr)
        return 2

    passed = _verdict_of(results)
    text = render(config, results, passed)
    if config.out:
        with open(config.out, 'w', newline='') as f:
            f.write(text)
    else:
        sys.stdout.write(text)

    return 0 if passed else 2


def run() -> None:
    sys.exit(main())
