"""
Exact samplers for the beta-Hermite and beta-Laguerre eigenvalue laws via
their tridiagonal / bidiagonal matrix models, and log-density evaluators for
the joint densities f_beta and f_{n,beta}.
"""
import logging
import math
from dataclasses import dataclass

import numpy as np
from scipy.special import gammaln

from .exceptions import InputError, NumericError, ParameterError
from .numerics import SymTridiagonal, eig_sym_tridiagonal, sample_chi

logger = logging.getLogger(__name__)

HERMITE = 'hermite'
LAGUERRE = 'laguerre'


def _check_beta(beta):
    if not (math.isfinite(beta) and beta > 0.0):
        raise ParameterError(f"beta must be a positive real, got {beta}")


@dataclass(frozen=True)
class HermiteParams:
    n: int
    beta: float

    def __post_init__(self):
        if int(self.n) != self.n or self.n < 1:
            raise ParameterError(f"n must be an integer >= 1, got {self.n}")
        _check_beta(self.beta)
        object.__setattr__(self, 'n', int(self.n))
        object.__setattr__(self, 'beta', float(self.beta))

    ensemble = HERMITE

    def as_dict(self):
        return {'ensemble': HERMITE, 'n': self.n, 'p': None, 'beta': self.beta}


@dataclass(frozen=True)
class LaguerreParams:
    """
    beta-Laguerre parameters. ``p`` is any real >= n; integer p is not
    required (the joint density is well defined for real p).
    """
    n: int
    p: float
    beta: float

    def __post_init__(self):
        if int(self.n) != self.n or self.n < 1:
            raise ParameterError(f"n must be an integer >= 1, got {self.n}")
        _check_beta(self.beta)
        if not math.isfinite(self.p) or self.p < self.n:
            raise ParameterError(f"p must be >= n (rectangular regime), got p={self.p}, n={self.n}")
        object.__setattr__(self, 'n', int(self.n))
        object.__setattr__(self, 'p', float(self.p))
        object.__setattr__(self, 'beta', float(self.beta))

    ensemble = LAGUERRE

    @property
    def exponent(self):
        """Power of each lambda_i in f_{n,beta}: (beta/2)(p - n + 1) - 1."""
        return 0.5 * self.beta * (self.p - self.n + 1) - 1.0

    def as_dict(self):
        return {'ensemble': LAGUERRE, 'n': self.n, 'p': self.p, 'beta': self.beta}


@dataclass(frozen=True)
class Spectrum:
    values: np.ndarray
    params: object
    seed_info: tuple = (None, None)

    def __post_init__(self):
        values = np.asarray(self.values, dtype=float).ravel()
        if values.size != self.params.n:
            raise InputError(f"spectrum has {values.size} values, params say n={self.params.n}")
        if np.any(np.diff(values) < 0.0):
            raise InputError("spectrum values must be sorted ascending")
        object.__setattr__(self, 'values', values)

    @property
    def ensemble(self):
        return self.params.ensemble

    @property
    def lambda_min(self):
        return float(self.values[0])

    @property
    def lambda_max(self):
        return float(self.values[-1])


def hermite_model(params, rng):
    """The tridiagonal model T/sqrt(2): N(0, 2) diagonal, chi_{beta(n-1)}, ..., chi_beta off-diagonal."""
    n, beta = params.n, params.beta
    diag = rng.generator.normal(0.0, math.sqrt(2.0), size=n)
    if n > 1:
        offdiag = sample_chi(beta * np.arange(n - 1, 0, -1), rng)
    else:
        offdiag = np.empty(0)
    return SymTridiagonal(diag / math.sqrt(2.0), offdiag / math.sqrt(2.0))


def sample_hermite(params, rng):
    """One draw of the beta-Hermite eigenvalues (joint law f_beta)."""
    values = eig_sym_tridiagonal(hermite_model(params, rng))
    return Spectrum(values, params, rng.seed_info)


def laguerre_model(params, rng, bidiagonal='lower'):
    """
    The tridiagonal matrix B B^T for the n x n bidiagonal B with diagonal
    chi_{beta p}, chi_{beta(p-1)}, ..., chi_{beta(p-n+1)} and off-diagonal
    chi_{beta(n-1)}, ..., chi_beta. ``bidiagonal='upper'`` places the
    off-diagonal above the diagonal instead of below it.
    """
    n, p, beta = params.n, params.p, params.beta
    a = np.atleast_1d(sample_chi(beta * (p - np.arange(n)), rng))
    b = sample_chi(beta * np.arange(n - 1, 0, -1), rng) if n > 1 else np.empty(0)

    if bidiagonal == 'lower':
        diag = a ** 2 + np.concatenate(([0.0], b ** 2))
        offdiag = a[:-1] * b
    elif bidiagonal == 'upper':
        diag = a ** 2 + np.concatenate((b ** 2, [0.0]))
        offdiag = b * a[1:]
    else:
        raise ParameterError(f"bidiagonal must be 'lower' or 'upper', got '{bidiagonal}'")
    return SymTridiagonal(diag, offdiag)


def sample_laguerre(params, rng, bidiagonal='lower'):
    """
    One draw of the beta-Laguerre eigenvalues (joint law f_{n,beta}).
    Costs 2n-1 chi draws and one tridiagonal eigensolve for any p.
    """
    values = eig_sym_tridiagonal(laguerre_model(params, rng, bidiagonal))
    if values[0] <= 0.0:
        raise NumericError(
            "Laguerre spectrum has a non-positive eigenvalue",
            lambda_min=values[0], n=params.n, p=params.p, beta=params.beta,
        )
    return Spectrum(values, params, rng.seed_info)


def _log_vandermonde(x, beta):
    diffs = np.abs(x[:, None] - x[None, :])[np.triu_indices(x.size, k=1)]
    if np.any(diffs == 0.0):
        return -math.inf
    return beta * float(np.sum(np.log(diffs)))


def log_laguerre_constant(params):
    """log c_n^{beta,p}."""
    n, p, half = params.n, params.p, 0.5 * params.beta
    j = np.arange(1, n + 1)
    return float(
        -half * n * p * math.log(2.0)
        + np.sum(gammaln(1.0 + half) - gammaln(1.0 + half * j) - gammaln(half * (p - n + j)))
    )


def log_hermite_constant(params):
    """log K_n^beta."""
    n, half = params.n, 0.5 * params.beta
    j = np.arange(1, n + 1)
    return float(-0.5 * n * math.log(2.0 * math.pi) + np.sum(gammaln(1.0 + half) - gammaln(1.0 + half * j)))


def log_density_laguerre(lam, params):
    """log f_{n,beta}(lambda); -inf off the positive orthant or on ties."""
    lam = np.asarray(lam, dtype=float).ravel()
    if lam.size != params.n:
        raise InputError(f"expected {params.n} coordinates, got {lam.size}")
    if np.any(lam <= 0.0):
        return -math.inf
    vandermonde = _log_vandermonde(lam, params.beta)
    if vandermonde == -math.inf:
        return -math.inf
    return (
        log_laguerre_constant(params)
        + vandermonde
        + params.exponent * float(np.sum(np.log(lam)))
        - 0.5 * float(np.sum(lam))
    )


def log_density_hermite(x, params):
    """log f_beta(x); -inf on ties."""
    x = np.asarray(x, dtype=float).ravel()
    if x.size != params.n:
        raise InputError(f"expected {params.n} coordinates, got {x.size}")
    vandermonde = _log_vandermonde(x, params.beta)
    if vandermonde == -math.inf:
        return -math.inf
    return log_hermite_constant(params) + vandermonde - 0.5 * float(np.sum(x ** 2))
