"""
Normalizations for Laguerre spectra in the rectangular regime p >> n.

hermite_transform carries Laguerre eigenvalues onto the Hermite scale,
extreme_centerings_beta2 / smallest_centering give the centering and scaling
constants for the extreme eigenvalues, and condition_statistic studentizes the
condition number for comparison with the U+V law.
"""
import logging
import math
from dataclasses import dataclass

import numpy as np

from .ensembles import LAGUERRE, LaguerreParams
from .exceptions import DomainError, InputError
from .numerics import ks_distance

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class TransformedSample:
    x: np.ndarray
    source: LaguerreParams

    @property
    def lower_edge(self):
        """Image of lambda = 0 under the transform."""
        return -math.sqrt(self.source.beta * self.source.p / 2.0)


@dataclass(frozen=True)
class ScaledEmpiricalMeasure:
    """The empirical measure (1/n) sum delta_{x_i / sqrt(n)} of a transformed sample."""
    atoms: np.ndarray

    @classmethod
    def from_sample(cls, sample):
        x = np.asarray(getattr(sample, 'x', sample), dtype=float)
        return cls(np.sort(x) / math.sqrt(x.size))

    @property
    def weights(self):
        return np.full(self.atoms.size, 1.0 / self.atoms.size)

    def cdf(self, grid):
        return np.searchsorted(self.atoms, grid, side='right') / float(self.atoms.size)

    def ks_to_semicircle(self, beta):
        from .ldp import semicircle_cdf

        return ks_distance(self.atoms, lambda x: semicircle_cdf(x, beta))


@dataclass(frozen=True)
class ExtremeCentering:
    mu_low: float
    mu_high: float
    sigma: float


def _check_laguerre(params):
    if not isinstance(params, LaguerreParams):
        raise InputError(f"expected Laguerre parameters, got {type(params).__name__}")


def hermite_transform(s, params):
    """x_i = sqrt(p / (2 beta)) * (lambda_i / p - beta); order is preserved."""
    _check_laguerre(params)
    if s.ensemble != LAGUERRE or s.params != params:
        raise InputError(f"spectrum was sampled under {s.params}, not {params}")
    x = math.sqrt(params.p / (2.0 * params.beta)) * (s.values / params.p - params.beta)
    return TransformedSample(x, params)


def inverse_hermite_transform(x, params):
    """lambda_i = p * (beta + sqrt(2 beta / p) * x_i)."""
    x = np.asarray(getattr(x, 'x', x), dtype=float)
    return params.p * (params.beta + math.sqrt(2.0 * params.beta / params.p) * x)


def extreme_centerings_beta2(params):
    """(mu_{n,1}, mu_{n,2}, sigma_n) = (2p - 4 sqrt(np), 2p + 4 sqrt(np), 2 sqrt(p) n^(-1/6))."""
    _check_laguerre(params)
    if params.beta != 2.0:
        raise DomainError(f"joint extreme-eigenvalue centering is stated for beta=2 only, got beta={params.beta}")
    n, p = params.n, params.p
    root = 4.0 * math.sqrt(n * p)
    return ExtremeCentering(
        mu_low=2.0 * p - root,
        mu_high=2.0 * p + root,
        sigma=2.0 * math.sqrt(p) * n ** (-1.0 / 6.0),
    )


def smallest_centering(params):
    """(mu_n, sigma_n) = (beta (p - 2 sqrt(np)), beta sqrt(p) n^(-1/6)) for lambda_min."""
    _check_laguerre(params)
    n, p, beta = params.n, params.p, params.beta
    return beta * (p - 2.0 * math.sqrt(n * p)), beta * math.sqrt(p) * n ** (-1.0 / 6.0)


def condition_number(s):
    """kappa = sqrt(lambda_max / lambda_min) for a Spectrum or an ascending eigenvalue vector."""
    values = np.asarray(getattr(s, 'values', s), dtype=float)
    if values.size == 0:
        raise InputError("condition number of an empty spectrum")
    if np.any(values <= 0.0):
        raise DomainError(f"condition number needs positive eigenvalues, smallest is {values.min()}")
    return math.sqrt(float(values.max()) / float(values.min()))


def condition_constants(params):
    """(alpha_n, beta_n) = (2 sqrt(p) n^(1/6), 1 + 2 sqrt(n/p))."""
    _check_laguerre(params)
    if params.beta != 2.0:
        raise DomainError(f"studentized condition number is stated for beta=2 only, got beta={params.beta}")
    n, p = params.n, params.p
    return 2.0 * math.sqrt(p) * n ** (1.0 / 6.0), 1.0 + 2.0 * math.sqrt(n / p)


def condition_statistic(s, params):
    alpha_n, beta_n = condition_constants(params)
    return alpha_n * (condition_number(s) - beta_n)
