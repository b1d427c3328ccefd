import os
from typing import Optional, Sequence

import numpy as np


# Dense grid (number of intervals) used for quadrature and zero search
DEFAULT_GRID = 4096
MIN_GRID = 256
GRID_ENV_VARIABLE = 'SOL_GRID_DEFAULT'

# Load-time probe of the potential
PROBE_POINTS = 257
PROBE_INTERVAL = (-0.05, 1.05)

# Adaptive Runge-Kutta tolerances
RK_METHOD = 'DOP853'
RK_RTOL = 1e-10
RK_ATOL = 1e-12
RK_MAX_STEPS = 10**6

# Eigenvalue search
BRACKET_LIMIT = 1e8
BRACKET_RTOL = 1e-11
SECANT_STEPS = 3

MAX_DERIVATIVE_ORDER = 12
MAX_EXACT_SIZE = 8


def grid_default() -> int:
    """
    Return the default dense grid resolution.

    The environment variable SOL_GRID_DEFAULT overrides DEFAULT_GRID.
    """

    value = os.environ.get(GRID_ENV_VARIABLE)
    if value is None or value.strip() == '':
        return DEFAULT_GRID

    try:
        grid = int(value)
    except ValueError:
        raise ValueError('{} must be an integer, got "{}"'.format(GRID_ENV_VARIABLE, value))

    if grid < MIN_GRID:
        raise ValueError('{} must be at least {}, got {}'.format(GRID_ENV_VARIABLE, MIN_GRID, grid))

    return grid


def make_rng(seed: Optional[int] = None) -> np.random.Generator:
    """
    Seeded random generator backed by the 64-bit counter-based Philox
    bit generator, so that a given seed reproduces the same stream on every
    platform.
    """

    return np.random.Generator(np.random.Philox(seed))


def random_unit_vector(rng: np.random.Generator,
                       n: int,
                       m_low: int = 1) -> np.ndarray:
    """
    Draw a vector uniformly on the unit sphere of the coordinates m_low..n
    (1-based); the coordinates below m_low are zero.
    """

    if not 1 <= m_low <= n:
        raise ValueError('m_low must be between 1 and n={}, got {}'.format(n, m_low))

    b = np.zeros(n)
    while True:
        g = rng.standard_normal(n - m_low + 1)
        norm = np.linalg.norm(g)
        if norm > 0:
            break
    b[m_low-1:] = g/norm

    return b


def random_ordered_points(rng: np.random.Generator,
                          count: int,
                          low: float = 0.,
                          high: float = 1.,
                          separation: float = 0.) -> np.ndarray:
    """
    Draw `count` sorted points in ]low, high[ whose mutual distance, and
    distance to the interval ends, is larger than `separation`.
    """

    if count*separation >= high - low:
        raise ValueError('Cannot place {} points separated by {} in ]{}, {}['.format(count, separation, low, high))

    while True:
        x = np.sort(rng.uniform(low, high, count))
        gaps: Sequence[float] = np.diff(np.concatenate(([low], x, [high])))
        if np.all(np.asarray(gaps) > separation):
            return x
