"""
Large-deviation rate functions and the limiting spectral densities they are
compared against.
"""
import logging
import math
from dataclasses import dataclass

import numpy as np
from django.conf import settings
from scipy.integrate import quad
from scipy.special import gammaln

from .ensembles import HermiteParams, sample_hermite
from .exceptions import InputError, NumericError, ParameterError

logger = logging.getLogger(__name__)

SIDES = ('max', 'min')
COMPARISON_LAWS = ('mp', 'edelman_square')

_GAMMA_ACCURACY = 1e-15
_GAMMA_MAX_ITERATIONS = 200_000
_TINY = 1e-300


@dataclass(frozen=True)
class GriddedMeasure:
    """A probability measure given by masses on the cell centers of a uniform grid."""
    grid: np.ndarray
    mass: np.ndarray

    def __post_init__(self):
        grid = np.asarray(self.grid, dtype=float).ravel()
        mass = np.asarray(self.mass, dtype=float).ravel()
        if grid.size == 0 or grid.shape != mass.shape:
            raise InputError(f"grid and mass must be non-empty and equal length, got {grid.size} and {mass.size}")
        if not (np.all(np.isfinite(grid)) and np.all(np.isfinite(mass))):
            raise InputError("measure contains non-finite values")
        if np.any(mass < 0.0):
            raise InputError("measure has negative mass")
        if abs(float(mass.sum()) - 1.0) > 1e-10:
            raise InputError(f"measure has total mass {mass.sum()!r}, expected 1")
        if grid.size > 1:
            steps = np.diff(grid)
            if steps[0] <= 0.0 or np.max(np.abs(steps - steps[0])) > 1e-9 * max(1.0, abs(steps[0])):
                raise InputError("measure grid must be uniform and ascending")
        object.__setattr__(self, 'grid', grid)
        object.__setattr__(self, 'mass', mass)

    def __len__(self):
        return self.grid.size

    @property
    def step(self):
        if self.grid.size < 2:
            return 0.0
        return (self.grid[-1] - self.grid[0]) / (self.grid.size - 1)


@dataclass(frozen=True)
class RateValue:
    value: float
    inside: bool

    @classmethod
    def infinite(cls):
        return cls(math.inf, False)

    @property
    def is_infinite(self):
        return not self.inside

    def __float__(self):
        return float(self.value)


def _check_beta(beta):
    if not (math.isfinite(beta) and beta > 0.0):
        raise ParameterError(f"beta must be a positive real, got {beta}")


def rate_extreme(x, beta, side):
    """
    Rate of lambda_max / p (side='max', finite on [beta, inf)) or of
    lambda_min / p (side='min', finite on (0, beta]):

        I(x) = (x - beta) / 2 - (beta / 2) log(x / beta)
    """
    _check_beta(beta)
    if side not in SIDES:
        raise ParameterError(f"side must be 'max' or 'min', got '{side}'")
    inside = x >= beta if side == 'max' else 0.0 < x <= beta
    if not inside:
        return RateValue.infinite()
    return RateValue(0.5 * (x - beta) - 0.5 * beta * math.log(x / beta), True)


def _log_gamma_prefix(a, z):
    return -z + a * math.log(z) - float(gammaln(a))


def log_lower_gamma(a, z):
    """log P(a, z), the regularized lower incomplete gamma, by its power series (z < a + 1)."""
    if z <= 0.0:
        return -math.inf
    ap = a
    term = total = 1.0 / a
    for _ in range(_GAMMA_MAX_ITERATIONS):
        ap += 1.0
        term *= z / ap
        total += term
        if abs(term) < abs(total) * _GAMMA_ACCURACY:
            return math.log(total) + _log_gamma_prefix(a, z)
    raise NumericError("incomplete gamma series did not converge", a=a, z=z)


def log_upper_gamma(a, z):
    """log Q(a, z), the regularized upper incomplete gamma, by Lentz's continued fraction (z >= a + 1)."""
    b = z + 1.0 - a
    c = 1.0 / _TINY
    d = 1.0 / b
    h = d
    for i in range(1, _GAMMA_MAX_ITERATIONS):
        an = -i * (i - a)
        b += 2.0
        d = an * d + b
        if abs(d) < _TINY:
            d = _TINY
        c = b + an / c
        if abs(c) < _TINY:
            c = _TINY
        d = 1.0 / d
        delta = d * c
        h *= delta
        if abs(delta - 1.0) < _GAMMA_ACCURACY:
            return math.log(h) + _log_gamma_prefix(a, z)
    raise NumericError("incomplete gamma continued fraction did not converge", a=a, z=z)


def log_gamma_tail(a, z, upper):
    """log Q(a, z) if ``upper`` else log P(a, z), switching representation at z = a + 1."""
    if z < a + 1.0:
        log_p = log_lower_gamma(a, z)
        return math.log1p(-math.exp(log_p)) if upper else log_p
    log_q = log_upper_gamma(a, z)
    return log_q if upper else math.log1p(-math.exp(log_q))


def gamma_rate_oracle(x, beta, p):
    """
    -(1/p) log P(lambda >= p x) for x >= beta, -(1/p) log P(lambda <= p x) for
    x < beta, where lambda ~ Gamma(beta p / 2, 2) is the n = 1 Laguerre law.
    """
    _check_beta(beta)
    if not x > 0.0:
        raise ParameterError(f"x must be positive, got {x}")
    if not p > 0.0:
        raise ParameterError(f"p must be positive, got {p}")
    a = 0.5 * beta * p
    z = 0.5 * p * x
    return -log_gamma_tail(a, z, upper=x >= beta) / p


def semicircle_pdf(x, beta):
    """g_beta(x) = sqrt(2 beta - x^2) / (beta pi) on |x| <= sqrt(2 beta)."""
    _check_beta(beta)
    x = np.asarray(x, dtype=float)
    values = np.sqrt(np.clip(2.0 * beta - x * x, 0.0, None)) / (beta * math.pi)
    return float(values) if values.ndim == 0 else values


def semicircle_cdf(x, beta):
    _check_beta(beta)
    radius = math.sqrt(2.0 * beta)
    x = np.clip(np.asarray(x, dtype=float), -radius, radius)
    values = 0.5 + (x * np.sqrt(2.0 * beta - x * x) + 2.0 * beta * np.arcsin(x / radius)) / (2.0 * math.pi * beta)
    values = np.clip(values, 0.0, 1.0)
    return float(values) if values.ndim == 0 else values


def _mp_edges(gamma):
    if gamma is None or not 0.0 < gamma <= 1.0:
        raise ParameterError(f"Marchenko-Pastur ratio gamma must lie in (0, 1], got {gamma}")
    root = math.sqrt(gamma)
    return (1.0 - root) ** 2, (1.0 + root) ** 2


def comparison_pdfs(x, which, gamma=None):
    """
    Reference densities: 'mp' is Marchenko-Pastur with ratio gamma,
    (2 pi gamma x)^-1 sqrt((x - g1)(g2 - x)); 'edelman_square' is
    8 x^-3 exp(-4 / x^2), the limit of kappa_n / n for square matrices.
    """
    x = np.asarray(x, dtype=float)
    if which == 'mp':
        low, high = _mp_edges(gamma)
        inside = (x > low) & (x < high) & (x > 0.0)
        safe = np.where(inside, x, 1.0)
        values = np.where(
            inside,
            np.sqrt(np.clip((safe - low) * (high - safe), 0.0, None)) / (2.0 * math.pi * gamma * safe),
            0.0,
        )
    elif which == 'edelman_square':
        positive = x > 0.0
        safe = np.where(positive, x, 1.0)
        values = np.where(positive, 8.0 * safe ** -3 * np.exp(-4.0 / safe ** 2), 0.0)
    else:
        raise ParameterError(f"unknown comparison law '{which}', expected one of {COMPARISON_LAWS}")
    return float(values) if values.ndim == 0 else values


def comparison_cdfs(x, which, gamma=None):
    """CDFs of the comparison laws; Marchenko-Pastur by adaptive quadrature of its density."""
    x = np.asarray(x, dtype=float)
    if which == 'mp':
        low, high = _mp_edges(gamma)

        def one(value):
            if value <= low:
                return 0.0
            if value >= high:
                return 1.0
            return quad(comparison_pdfs, low, value, args=('mp', gamma), limit=200)[0]

        values = np.clip(np.vectorize(one, otypes=[float])(x), 0.0, 1.0)
    elif which == 'edelman_square':
        positive = x > 0.0
        safe = np.where(positive, x, 1.0)
        values = np.where(positive, np.exp(-4.0 / safe ** 2), 0.0)
    else:
        raise ParameterError(f"unknown comparison law '{which}', expected one of {COMPARISON_LAWS}")
    return float(values) if values.ndim == 0 else values


def kernel_value(x, y, beta):
    """g(x, y) = (x^2 + y^2) / 2 - beta log|x - y|; +inf on the diagonal."""
    if x == y:
        return math.inf
    return 0.5 * (x * x + y * y) - beta * math.log(abs(x - y))


def discretize_density(cdf, lower, upper, step):
    """Cell masses cdf(right edge) - cdf(left edge) on [lower, upper], renormalized to 1."""
    if not step > 0.0 or not upper > lower:
        raise ParameterError(f"need step > 0 and upper > lower, got step={step}, [{lower}, {upper}]")
    cells = int(math.ceil((upper - lower) / step - 1e-9))
    edges = lower + step * np.arange(cells + 1)
    mass = np.diff(np.asarray(cdf(edges), dtype=float))
    mass = np.clip(mass, 0.0, None)
    total = float(mass.sum())
    if total <= 0.0:
        raise InputError("density has no mass on the requested interval")
    if abs(total - 1.0) > 1e-6:
        logger.warning(f"discretized density captured mass {total:.8f} on [{lower}, {upper}]")
    return GriddedMeasure(0.5 * (edges[:-1] + edges[1:]), mass / total)


def _log_antiderivative(t):
    # Second antiderivative of log|t|, zero at t = 0.
    t = np.abs(np.asarray(t, dtype=float))
    safe = np.where(t > 0.0, t, 1.0)
    return np.where(t > 0.0, 0.5 * t * t * np.log(safe) - 0.75 * t * t, 0.0)


def cell_average_log(k, h):
    """Average of log|u - v| over u, v in two width-h cells whose centers are k cells apart."""
    k = np.asarray(k, dtype=float)
    return (_log_antiderivative((k + 1.0) * h) - 2.0 * _log_antiderivative(k * h)
            + _log_antiderivative((k - 1.0) * h)) / (h * h)


def rate_functional(nu, beta):
    """
    I_beta(nu) = 1/2 int int g(x, y) nu(dx) nu(dy) + (beta/4) log(beta/2) - 3 beta / 8.

    Each cell of ``nu`` is treated as uniform mass on its width-h interval: the
    log term uses the exact cell-pair averages (log h - 3/2 on the diagonal)
    and the second moment carries the h^2/12 within-cell correction.
    """
    _check_beta(beta)
    h = nu.step
    if len(nu) == 1 or h <= 0.0 or np.count_nonzero(nu.mass) <= 1:
        return RateValue.infinite()

    m = nu.mass
    second_moment = float(np.sum(m * (nu.grid ** 2 + h * h / 12.0)))
    # c[k] = sum_i m_i m_{i+k}, lags 0..N-1 in fixed order.
    lags = np.correlate(m, m, mode='full')[m.size - 1:]
    weights = cell_average_log(np.arange(m.size), h)
    log_energy = float(lags[0] * weights[0] + 2.0 * np.sum(lags[1:] * weights[1:]))

    value = 0.5 * second_moment - 0.5 * beta * log_energy + 0.25 * beta * math.log(beta / 2.0) - 0.375 * beta
    return RateValue(value, True)


@dataclass(frozen=True)
class ConcentrationResult:
    n: int
    beta: float
    t: float
    replicates: int
    exceedances: int
    empirical_prob: float
    bound: float
    constant: float

    @property
    def standard_error(self):
        prob = self.empirical_prob
        return math.sqrt(max(prob * (1.0 - prob), 0.0) / self.replicates)

    @property
    def holds(self):
        return self.empirical_prob <= self.bound


def concentration_bound(n, t, constant):
    """C exp(-n t^2 / 2 + C n t), inf when it overflows."""
    exponent = -0.5 * n * t * t + constant * n * t
    if exponent > 700.0:
        return math.inf
    return constant * math.exp(exponent)


def concentration_check(n, t, replicates, rng, beta=1.0, constant=None, strict=True):
    """
    Frequency of max |lambda_i| >= sqrt(n) t over ``replicates`` beta-Hermite
    draws, paired with the concentration bound at the fitted constant
    (settings.RMTLAB['CONCENTRATION_C'] unless ``constant`` is given).

    An exceeded bound raises NumericError; with ``strict=False`` it is only
    logged and the result is returned for reporting.
    """
    if int(n) != n or n < 2:
        raise ParameterError(f"n must be an integer >= 2, got {n}")
    if not t > 0.0:
        raise ParameterError(f"t must be positive, got {t}")
    if int(replicates) != replicates or replicates < 1:
        raise ParameterError(f"replicates must be a positive integer, got {replicates}")
    constant = settings.RMTLAB['CONCENTRATION_C'] if constant is None else float(constant)

    params = HermiteParams(n, beta)
    threshold = math.sqrt(n) * t
    exceedances = 0
    for _ in range(int(replicates)):
        values = sample_hermite(params, rng).values
        if max(abs(values[0]), abs(values[-1])) >= threshold:
            exceedances += 1

    result = ConcentrationResult(
        n=int(n), beta=float(beta), t=float(t), replicates=int(replicates), exceedances=exceedances,
        empirical_prob=exceedances / replicates, bound=concentration_bound(n, t, constant), constant=constant,
    )
    if not result.holds:
        logger.warning(f"Concentration bound exceeded at n={n}, t={t}: {result.empirical_prob} > {result.bound}")
        if strict:
            raise NumericError(
                "empirical exceedance frequency is above the concentration bound",
                n=int(n), t=float(t), empirical_prob=result.empirical_prob, bound=result.bound, constant=constant,
            )
    return result
