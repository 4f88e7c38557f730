"""
Tracy-Widom tables from the Hastings-McLeod solution of Painleve II.

solve_painleve2 integrates q'' = x q + 2 q^3 downward from Airy boundary data
together with the tail integrals G = int_x^inf q^2, F_int = int_x^inf (y - x) q^2
and J = int_x^inf q. build_tw_table assembles F1, F2 and F4 from them and
convolve_self gives the law of U + V for U, V independent F2 variables.
"""
import logging
import math
from dataclasses import dataclass, field

import numpy as np
from django.conf import settings
from scipy.integrate import cumulative_trapezoid, quad, trapezoid
from scipy.optimize import brentq
from scipy.special import airy

from .exceptions import DomainError, InputError, NumericError, ParameterError
from .numerics import integrate_ode

logger = logging.getLogger(__name__)

# Below this point q is continued by its large-|x| expansion; integrating
# further down amplifies the local error roughly like exp((2 sqrt(2)/3) |x|^(3/2)).
SPLICE_X = -6.0
SPLICE_AGREEMENT = 1e-3

TW_LABELS = {1: 'F1', 2: 'F2', 4: 'F4'}
UPLUSV = 'UplusV'
F4_CONVENTIONS = ('sqrt2', 'unscaled')

CDF_EDGE_TOL = 1e-6
MASS_TOL = 1e-4
CONVOLUTION_MASS_TOL = 1e-3


@dataclass(frozen=True)
class PainleveSolution:
    grid: np.ndarray
    q: np.ndarray
    qprime: np.ndarray
    G: np.ndarray
    F_int: np.ndarray
    J: np.ndarray
    tol: float
    grid_step: float
    splice_x: float
    splice_mismatch: float = 0.0

    def at(self, x, name='q'):
        """Linear interpolation of one component at x (the grid is descending)."""
        return float(np.interp(x, self.grid[::-1], getattr(self, name)[::-1]))


@dataclass(frozen=True)
class DistributionTable:
    grid: np.ndarray
    cdf: np.ndarray
    pdf: np.ndarray
    label: str
    beta: int = None
    meta: dict = field(default_factory=dict, compare=False)

    def __post_init__(self):
        grid = np.asarray(self.grid, dtype=float)
        cdf = np.asarray(self.cdf, dtype=float)
        pdf = np.asarray(self.pdf, dtype=float)
        if not (grid.shape == cdf.shape == pdf.shape) or grid.ndim != 1 or grid.size < 2:
            raise InputError(f"table columns must be equal-length vectors, got {grid.shape}, {cdf.shape}, {pdf.shape}")
        if np.any(np.diff(grid) <= 0.0):
            raise InputError("table grid must be strictly ascending")
        object.__setattr__(self, 'grid', grid)
        object.__setattr__(self, 'cdf', cdf)
        object.__setattr__(self, 'pdf', pdf)

    @property
    def step(self):
        return (self.grid[-1] - self.grid[0]) / (self.grid.size - 1)

    def validate(self):
        """Raise NumericError unless the table is a proper distribution to the stated tolerances."""
        problems = {}
        if np.any(np.diff(self.cdf) < 0.0):
            problems['cdf_decreasing'] = int(np.argmin(np.diff(self.cdf)))
        if self.cdf.min() < 0.0 or self.cdf.max() > 1.0:
            problems['cdf_range'] = (float(self.cdf.min()), float(self.cdf.max()))
        if self.cdf[0] > CDF_EDGE_TOL or self.cdf[-1] < 1.0 - CDF_EDGE_TOL:
            problems['cdf_edges'] = (float(self.cdf[0]), float(self.cdf[-1]))
        if np.any(self.pdf < 0.0):
            problems['pdf_negative'] = float(self.pdf.min())
        mass = float(trapezoid(self.pdf, self.grid))
        if abs(mass - 1.0) > MASS_TOL:
            problems['mass'] = mass
        if problems:
            raise NumericError(f"table {self.label} failed validation", **problems)
        return self

    def cdf_at(self, x):
        values = np.clip(np.interp(x, self.grid, self.cdf, left=0.0, right=1.0), 0.0, 1.0)
        return float(values) if np.ndim(values) == 0 else values

    def pdf_at(self, x):
        values = np.interp(x, self.grid, self.pdf, left=0.0, right=0.0)
        return float(values) if np.ndim(values) == 0 else values


def _airy_tail(x):
    """Exact Airy boundary data and the tail integrals of the linearized problem at x."""
    ai, aip, _, _ = airy(x)
    G = aip * aip - x * ai * ai
    F_int = (2.0 * x * x * ai * ai - 2.0 * x * aip * aip - ai * aip) / 3.0
    # J = int_x^inf Ai, integrated on the tail itself.
    J = quad(lambda t: airy(t)[0], x, np.inf, epsabs=0.0, epsrel=1e-12, limit=200)[0]
    return np.array([ai, aip, G, F_int, J])


def hastings_mcleod(x):
    """q and q' from the expansion sqrt(-x/2) (1 + x^-3/8 - 73 x^-6/128 + 10657 x^-9/1024), x < 0."""
    x = np.asarray(x, dtype=float)
    root = np.sqrt(-x / 2.0)
    series = 1.0 + x ** -3 / 8.0 - 73.0 * x ** -6 / 128.0 + 10657.0 * x ** -9 / 1024.0
    dseries = -3.0 * x ** -4 / 8.0 + 438.0 * x ** -7 / 128.0 - 95913.0 * x ** -10 / 1024.0
    return root * series, -series / (4.0 * root) + root * dseries


def _painleve_rhs(x, y):
    q, qp, G, _, _ = y
    return np.array([qp, x * q + 2.0 * q ** 3, -q * q, -G, -q])


def _tail_rhs(x, y):
    q, _ = hastings_mcleod(x)
    return np.array([-q * q, -y[0], -q])


def _sample_trajectory(trajectory, nodes, column):
    # Trajectory x values are descending and contain every node exactly.
    return np.interp(nodes[::-1], trajectory.x[::-1], trajectory.y[::-1, column])[::-1]


def solve_painleve2(x_start=None, x_end=None, tol=None, grid_step=None):
    """
    Hastings-McLeod solution of Painleve II on the uniform grid x_start, x_start - h, ..., x_end.

    The ODE carries (q, q', G, F_int, J) down to SPLICE_X with relative
    tolerance ``tol``; below it q comes from the asymptotic expansion while
    G, F_int and J keep being integrated.
    """
    options = settings.RMTLAB
    x_start = options['X_START'] if x_start is None else float(x_start)
    x_end = options['X_END'] if x_end is None else float(x_end)
    tol = options['PAINLEVE_TOL'] if tol is None else float(tol)
    grid_step = options['GRID_STEP'] if grid_step is None else float(grid_step)

    if x_start < 6.0:
        raise ParameterError(f"x_start must be >= 6 for the Airy boundary data, got {x_start}")
    if x_end > -8.0:
        raise ParameterError(f"x_end must be <= -8, got {x_end}")
    if not 0.0 < tol < 1e-4:
        raise ParameterError(f"tol must lie in (0, 1e-4), got {tol}")
    steps = (x_start - x_end) / grid_step
    if grid_step <= 0.0 or abs(steps - round(steps)) > 1e-6:
        raise ParameterError(f"grid_step {grid_step} does not divide [{x_end}, {x_start}]")

    grid = np.round(x_start - grid_step * np.arange(int(round(steps)) + 1), 10)
    splice_index = int(np.argmin(np.abs(grid - max(x_end, SPLICE_X))))
    splice_x = float(grid[splice_index])
    logger.info(f"Solving Painleve II on [{x_end}, {x_start}] with tol={tol}, step={grid_step}")

    y0 = _airy_tail(x_start)
    upper_nodes = grid[:splice_index + 1]
    try:
        upper = integrate_ode(_painleve_rhs, y0, x_start, splice_x, tol, atol=1e-30, checkpoints=upper_nodes[1:-1])
    except NumericError as exc:
        logger.error(f"Painleve II integration diverged: {exc}")
        raise
    columns = [_sample_trajectory(upper, upper_nodes, k) for k in range(5)]

    q_splice = float(hastings_mcleod(splice_x)[0])
    mismatch = abs(float(columns[0][-1]) - q_splice)
    if not mismatch <= SPLICE_AGREEMENT:
        raise NumericError(
            "Painleve solution does not match the Hastings-McLeod asymptotics",
            x=splice_x, q=float(columns[0][-1]), expected=q_splice,
        )

    lower_nodes = grid[splice_index:]
    if lower_nodes.size > 1:
        tails = integrate_ode(
            _tail_rhs, [columns[2][-1], columns[3][-1], columns[4][-1]], splice_x, lower_nodes[-1], tol,
            atol=1e-30, checkpoints=lower_nodes[1:-1],
        )
        q_low, qp_low = hastings_mcleod(lower_nodes[1:])
        lower = [q_low, qp_low] + [_sample_trajectory(tails, lower_nodes, k)[1:] for k in range(3)]
        columns = [np.concatenate((upper_col, lower_col)) for upper_col, lower_col in zip(columns, lower)]

    q = columns[0]
    if np.any(q <= 0.0):
        bad = int(np.argmax(q <= 0.0))
        raise NumericError("Painleve solution left the positive branch", x=float(grid[bad]), q=float(q[bad]))

    logger.info(f"Painleve II solved: q({splice_x})={q[splice_index]:.8f}, splice mismatch {mismatch:.2e}")
    return PainleveSolution(
        grid=grid, q=q, qprime=columns[1], G=columns[2], F_int=columns[3], J=columns[4],
        tol=tol, grid_step=grid_step, splice_x=splice_x, splice_mismatch=mismatch,
    )


def build_tw_table(beta, sol, f4_convention='sqrt2'):
    """
    F_beta for beta in {1, 2, 4}:

        F2 = exp(-F_int),               pdf F2 * G
        F1 = exp(-J/2) sqrt(F2),        pdf F1 * (q + G) / 2
        F4(x/sqrt(2)) = cosh(J/2) sqrt(F2) under the 'sqrt2' convention;
        'unscaled' stores cosh(J/2) sqrt(F2) at x itself.
    """
    if beta not in TW_LABELS:
        raise DomainError(f"Tracy-Widom tables exist for beta in {{1, 2, 4}}, got {beta}")
    if f4_convention not in F4_CONVENTIONS:
        raise ParameterError(f"f4_convention must be one of {F4_CONVENTIONS}, got '{f4_convention}'")

    x = sol.grid[::-1]
    q, G, F_int, J = sol.q[::-1], sol.G[::-1], sol.F_int[::-1], sol.J[::-1]
    F2 = np.exp(-F_int)
    meta = {'tol': sol.tol, 'grid_step': sol.grid_step}

    if beta == 2:
        grid, cdf, pdf = x, F2, F2 * G
    elif beta == 1:
        cdf = np.exp(-0.5 * J) * np.sqrt(F2)
        grid, pdf = x, 0.5 * cdf * (q + G)
    else:
        root = np.sqrt(F2)
        cdf = np.cosh(0.5 * J) * root
        pdf = -0.5 * q * np.sinh(0.5 * J) * root + 0.5 * cdf * G
        grid = x
        if f4_convention == 'sqrt2':
            grid, pdf = x / math.sqrt(2.0), math.sqrt(2.0) * pdf
        meta['f4_convention'] = f4_convention

    cdf = np.clip(np.maximum.accumulate(cdf), 0.0, 1.0)
    table = DistributionTable(grid, cdf, np.maximum(pdf, 0.0), TW_LABELS[beta], beta, meta)
    return table.validate()


def lambda0_cdf(beta, x, table):
    """P(Lambda0 <= x) = 1 - F_beta(-x), saturating to 0 or 1 off the table."""
    if table.label != TW_LABELS.get(beta):
        raise InputError(f"lambda0_cdf for beta={beta} needs the {TW_LABELS.get(beta)} table, got {table.label}")
    values = np.clip(1.0 - np.interp(-np.asarray(x, dtype=float), table.grid, table.cdf, left=0.0, right=1.0), 0.0, 1.0)
    return float(values) if np.ndim(values) == 0 else values


def build_lambda0_table(table):
    """The reflected table of Lambda0 = -X for X ~ F_beta."""
    return DistributionTable(
        grid=-table.grid[::-1],
        cdf=1.0 - table.cdf[::-1],
        pdf=table.pdf[::-1],
        label=f"Lambda0_{table.beta}",
        beta=table.beta,
        meta=dict(table.meta),
    )


def convolve_pair(first, second, label=UPLUSV):
    """Density of X + Y for independent X ~ first, Y ~ second on a common step; symmetric in its arguments."""
    h_first, h_second = first.step, second.step
    if abs(h_first - h_second) > 1e-9 * max(h_first, h_second):
        raise InputError(f"convolution needs equal grid steps, got {h_first} and {h_second}")
    h = 0.5 * (h_first + h_second)

    pdf = 0.5 * (np.convolve(first.pdf, second.pdf) + np.convolve(second.pdf, first.pdf)) * h
    grid = (first.grid[0] + second.grid[0]) + h * np.arange(pdf.size)
    mass = float(trapezoid(pdf, dx=h))
    if abs(mass - 1.0) > CONVOLUTION_MASS_TOL:
        raise NumericError("convolution grid too coarse", mass=mass, step=h)
    pdf = pdf / mass
    cdf = np.clip(cumulative_trapezoid(pdf, dx=h, initial=0.0), 0.0, 1.0)
    meta = {key: value for key, value in first.meta.items() if second.meta.get(key) == value}
    return DistributionTable(grid, cdf, pdf, label, None, meta).validate()


def convolve_self(tw2):
    """Law of U + V for U, V independent with distribution ``tw2``."""
    if tw2.label != TW_LABELS[2]:
        raise InputError(f"convolve_self expects the F2 table, got {tw2.label}")
    return convolve_pair(tw2, tw2)


def _check_alpha(alpha):
    if not 0.0 < alpha < 1.0:
        raise ParameterError(f"alpha must lie in (0, 1), got {alpha}")


def critical_value(alpha, conv):
    """The s > 0 with P(|U+V| <= s) = 1 - alpha."""
    _check_alpha(alpha)
    s_max = min(conv.grid[-1], -conv.grid[0])
    if s_max <= 0.0:
        raise InputError("critical_value needs a table whose grid straddles 0")

    def coverage(s):
        return conv.cdf_at(s) - conv.cdf_at(-s) - (1.0 - alpha)

    return float(brentq(coverage, 0.0, s_max, xtol=1e-12, rtol=4 * np.finfo(float).eps))


def two_sided_p_value(statistic, conv):
    t = abs(statistic)
    return float(min(1.0, max(0.0, 1.0 - (conv.cdf_at(t) - conv.cdf_at(-t)))))


def table_moments(table):
    """(mean, standard deviation) of a table by trapezoid quadrature."""
    mean = float(trapezoid(table.grid * table.pdf, table.grid))
    second = float(trapezoid(table.grid ** 2 * table.pdf, table.grid))
    return mean, math.sqrt(max(second - mean * mean, 0.0))
