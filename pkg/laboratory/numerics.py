"""
Numerical kernel shared by every other module: reproducible random streams,
Gamma/chi sampling, symmetric tridiagonal and Hermitian eigenvalues, an
adaptive Dormand-Prince integrator and Kolmogorov-Smirnov distances.
"""
import logging
import math
from dataclasses import dataclass, field

import numpy as np
import scipy.linalg
import scipy.stats
from django.conf import settings

from .exceptions import InputError, NumericError, ParameterError

logger = logging.getLogger(__name__)

EPS = float(np.finfo(float).eps)


@dataclass
class RngStream:
    """
    A single-consumer random stream identified by (master_seed, stream_index).

    The generator is a counter-based Philox keyed by a SeedSequence whose
    spawn key is the stream index, so equal identifiers replay the same draws
    and distinct indices are independent regardless of execution order.
    """
    master_seed: int
    stream_index: int = 0
    _generator: np.random.Generator = field(default=None, init=False, repr=False, compare=False)

    def __post_init__(self):
        if not 0 <= int(self.master_seed) < 2 ** 64:
            raise ParameterError(f"master_seed must be a 64-bit unsigned integer, got {self.master_seed}")
        if int(self.stream_index) < 0:
            raise ParameterError(f"stream_index must be >= 0, got {self.stream_index}")
        self.master_seed = int(self.master_seed)
        self.stream_index = int(self.stream_index)

    @property
    def generator(self):
        if self._generator is None:
            seed = np.random.SeedSequence(self.master_seed, spawn_key=(self.stream_index,))
            self._generator = np.random.Generator(np.random.Philox(seed))
        return self._generator

    @property
    def seed_info(self):
        return (self.master_seed, self.stream_index)


def _standard_gamma(shape, generator):
    """Marsaglia-Tsang squeeze/rejection for an array of shapes; shapes < 1 are boosted by one."""
    shape = np.asarray(shape, dtype=float)
    boosted = shape < 1.0
    alpha = np.where(boosted, shape + 1.0, shape).ravel()
    d = alpha - 1.0 / 3.0
    c = 1.0 / np.sqrt(9.0 * d)

    out = np.empty(alpha.size)
    pending = np.arange(alpha.size)
    while pending.size:
        dp, cp = d[pending], c[pending]
        x = generator.standard_normal(pending.size)
        v = (1.0 + cp * x) ** 3
        u = generator.random(pending.size)
        with np.errstate(invalid='ignore', divide='ignore'):
            squeeze = u < 1.0 - 0.0331 * x ** 4
            full = np.log(u) < 0.5 * x * x + dp * (1.0 - v + np.log(v))
        accept = (v > 0.0) & (squeeze | full)
        out[pending[accept]] = dp[accept] * v[accept]
        pending = pending[~accept]

    out = out.reshape(shape.shape)
    if np.any(boosted):
        u = generator.random(shape.shape)
        with np.errstate(divide='ignore'):
            out = np.where(boosted, out * u ** (1.0 / shape), out)
    return out


def sample_gamma(shape, scale, rng, size=None):
    """
    Draw from Gamma(shape, scale). ``shape`` may be an array (one draw per
    entry); ``size`` draws that many values for a scalar shape.
    """
    shape_arr = np.asarray(shape, dtype=float)
    if np.any(~np.isfinite(shape_arr)) or np.any(shape_arr <= 0.0):
        raise ParameterError(f"Gamma shape must be positive, got {shape}")
    if not (np.isfinite(scale) and scale > 0.0):
        raise ParameterError(f"Gamma scale must be positive, got {scale}")
    if size is not None:
        shape_arr = np.broadcast_to(shape_arr, size)
    draws = scale * _standard_gamma(shape_arr, rng.generator)
    if draws.ndim == 0:
        return float(draws)
    return draws


def sample_chi(k, rng, size=None):
    """chi_k = sqrt(Gamma(k/2, 2)); k may be any positive real or an array of them."""
    k_arr = np.asarray(k, dtype=float)
    if np.any(~np.isfinite(k_arr)) or np.any(k_arr <= 0.0):
        raise ParameterError(f"chi degrees of freedom must be positive, got {k}")
    draws = np.sqrt(sample_gamma(k_arr / 2.0, 2.0, rng, size=size))
    if np.ndim(draws) == 0:
        return float(draws)
    return draws


@dataclass(frozen=True)
class SymTridiagonal:
    diag: np.ndarray
    offdiag: np.ndarray

    def __post_init__(self):
        diag = np.asarray(self.diag, dtype=float).ravel()
        offdiag = np.asarray(self.offdiag, dtype=float).ravel()
        if diag.size == 0:
            raise InputError("tridiagonal matrix must have at least one row")
        if offdiag.size != diag.size - 1:
            raise InputError(f"offdiag has length {offdiag.size}, expected {diag.size - 1}")
        if not (np.all(np.isfinite(diag)) and np.all(np.isfinite(offdiag))):
            raise InputError("tridiagonal entries must be finite")
        object.__setattr__(self, 'diag', diag)
        object.__setattr__(self, 'offdiag', offdiag)

    @property
    def n(self):
        return self.diag.size

    def to_dense(self):
        return np.diag(self.diag) + np.diag(self.offdiag, 1) + np.diag(self.offdiag, -1)


@dataclass(frozen=True)
class EmpiricalSample:
    values: np.ndarray

    def __post_init__(self):
        values = np.sort(np.asarray(self.values, dtype=float).ravel())
        if not np.all(np.isfinite(values)):
            raise InputError("empirical sample contains non-finite values")
        object.__setattr__(self, 'values', values)

    def __len__(self):
        return self.values.size

    def cdf(self, grid):
        return np.searchsorted(self.values, grid, side='right') / float(self.values.size)


def _implicit_ql(d, e, tol, max_sweeps):
    """Eigenvalues of a symmetric tridiagonal matrix by implicitly shifted QL (tqli)."""
    n = len(d)
    e = list(e) + [0.0]
    sweeps = 0
    for l in range(n):
        while True:
            m = l
            while m < n - 1:
                if abs(e[m]) <= tol * (abs(d[m]) + abs(d[m + 1])):
                    break
                m += 1
            if m == l:
                break
            sweeps += 1
            if sweeps > max_sweeps:
                raise NumericError(
                    "implicit QL did not converge",
                    sweeps=sweeps, index=l, offdiag=e[l], n=n,
                )
            # Wilkinson shift from the leading 2x2 block.
            g = (d[l + 1] - d[l]) / (2.0 * e[l])
            r = math.hypot(g, 1.0)
            g = d[m] - d[l] + e[l] / (g + math.copysign(r, g))
            s = c = 1.0
            p = 0.0
            i = m - 1
            while i >= l:
                f = s * e[i]
                b = c * e[i]
                r = math.hypot(f, g)
                e[i + 1] = r
                if r == 0.0:
                    # underflow: deflate and restart the sweep
                    d[i + 1] -= p
                    e[m] = 0.0
                    break
                s = f / r
                c = g / r
                g = d[i + 1] - p
                r = (d[i] - g) * s + 2.0 * c * b
                p = s * r
                d[i + 1] = g + p
                g = c * r - b
                i -= 1
            else:
                d[l] -= p
                e[l] = g
                e[m] = 0.0
    return d


def eig_sym_tridiagonal(T, tol=EPS, backend=None):
    """
    All eigenvalues of the symmetric tridiagonal ``T``, ascending.

    ``backend`` is ``'ql'`` (implicit QL with Wilkinson shifts, capped at 50*n
    sweeps) or ``'lapack'`` (scipy's stemr driver); it defaults to
    ``settings.RMTLAB['EIGEN_BACKEND']``.
    """
    if tol <= 0.0:
        raise ParameterError(f"tol must be positive, got {tol}")
    backend = backend or settings.RMTLAB['EIGEN_BACKEND']
    if T.n == 1:
        return T.diag.copy()
    if backend == 'lapack':
        values = scipy.linalg.eigvalsh_tridiagonal(T.diag, T.offdiag)
    elif backend == 'ql':
        values = _implicit_ql(T.diag.tolist(), T.offdiag.tolist(), max(tol, EPS), 50 * T.n)
    else:
        raise ParameterError(f"unknown eigen backend '{backend}'")
    return np.sort(np.asarray(values, dtype=float))


def householder_tridiagonalize(H):
    """
    Unitary Householder reduction of a Hermitian matrix to a real symmetric
    tridiagonal one. The complex sub-diagonal left by the reflectors is made
    real by a diagonal unitary similarity (its moduli are kept).
    """
    A = np.array(H, dtype=complex)
    n = A.shape[0]
    for k in range(n - 2):
        x = A[k + 1:, k]
        norm = np.linalg.norm(x)
        if norm == 0.0:
            continue
        phase = x[0] / abs(x[0]) if x[0] != 0 else 1.0
        v = x.copy()
        v[0] += phase * norm
        v /= np.linalg.norm(v)
        A[k + 1:, k:] -= 2.0 * np.outer(v, v.conj() @ A[k + 1:, k:])
        A[:, k + 1:] -= 2.0 * np.outer(A[:, k + 1:] @ v, v.conj())
    return SymTridiagonal(np.real(np.diag(A)), np.abs(np.diag(A, -1)))


def eig_hermitian(real, imag=None, tol=EPS):
    """
    Eigenvalues of a complex Hermitian matrix given as paired real/imaginary
    grids (or a single complex array), ascending.
    """
    H = np.asarray(real, dtype=complex if imag is None else float)
    if imag is not None:
        imag = np.asarray(imag, dtype=float)
        if imag.shape != H.shape:
            raise InputError(f"real part {H.shape} and imaginary part {imag.shape} differ in shape")
        H = H + 1j * imag
    if H.ndim != 2 or H.shape[0] != H.shape[1] or H.shape[0] == 0:
        raise InputError(f"expected a non-empty square matrix, got shape {H.shape}")
    if not np.all(np.isfinite(H)):
        raise InputError("matrix contains non-finite entries")

    scale = max(float(np.max(np.abs(H))), 1.0)
    asymmetry = float(np.max(np.abs(H - H.conj().T)))
    if asymmetry > 1e-10 * scale:
        raise InputError(f"matrix is not Hermitian: max |H - H*| = {asymmetry:.3e}")
    H = 0.5 * (H + H.conj().T)
    return eig_sym_tridiagonal(householder_tridiagonalize(H), tol=tol)


@dataclass(frozen=True)
class Trajectory:
    x: np.ndarray
    y: np.ndarray


# Dormand-Prince 5(4) tableau.
_DP_C = np.array([0.0, 1 / 5, 3 / 10, 4 / 5, 8 / 9, 1.0, 1.0])
_DP_A = [
    [],
    [1 / 5],
    [3 / 40, 9 / 40],
    [44 / 45, -56 / 15, 32 / 9],
    [19372 / 6561, -25360 / 2187, 64448 / 6561, -212 / 729],
    [9017 / 3168, -355 / 33, 46732 / 5247, 49 / 176, -5103 / 18656],
    [35 / 384, 0.0, 500 / 1113, 125 / 192, -2187 / 6784, 11 / 84],
]
_DP_E = np.array([71 / 57600, 0.0, -71 / 16695, 71 / 1920, -17253 / 339200, 22 / 525, -1 / 40])

_SAFETY = 0.9
_PI_ALPHA = 0.7 / 5
_PI_BETA = 0.4 / 5


def integrate_ode(rhs, y0, x0, x1, tol, atol=None, max_step=None, checkpoints=None, max_steps=1_000_000):
    """
    Integrate y' = rhs(x, y) from x0 to x1 (either direction) with an embedded
    Dormand-Prince 5(4) pair and PI step control.

    The local error of every accepted step satisfies
    |err_i| <= atol + tol * max(|y_i|, |y_new_i|) (``atol`` defaults to ``tol``).
    Steps are shortened so that each value in ``checkpoints`` is an accepted
    step end. Returns the accepted steps as a Trajectory.
    """
    if x0 == x1:
        raise ParameterError("integration interval is empty (x0 == x1)")
    if tol <= 0.0:
        raise ParameterError(f"tol must be positive, got {tol}")
    atol = tol if atol is None else atol
    direction = 1.0 if x1 > x0 else -1.0
    span = abs(x1 - x0)
    max_step = span if max_step is None else min(max_step, span)

    stops = []
    if checkpoints is not None:
        stops = sorted(
            (float(c) for c in checkpoints if direction * (c - x0) > 0 and direction * (x1 - c) > 0),
            key=lambda c: direction * c,
        )
    stops.append(float(x1))

    x = float(x0)
    y = np.array(y0, dtype=float)
    k1 = np.asarray(rhs(x, y), dtype=float)
    if not np.all(np.isfinite(k1)):
        raise NumericError("right-hand side is not finite at the initial point", x=x)

    xs, ys = [x], [y.copy()]
    h = min(max_step, 1e-2 * span)
    err_prev = 1.0
    stop_index = 0

    for _ in range(max_steps):
        target = stops[stop_index]
        to_target = abs(target - x)
        h_step = min(h, to_target)
        lands = h_step >= to_target
        if h_step < 16.0 * EPS * max(abs(x), 1.0):
            raise NumericError("step size underflow", last_good_x=x, step=h_step)

        hs = direction * h_step
        ks = [k1]
        for stage in range(1, 7):
            yi = y + hs * sum(a * k for a, k in zip(_DP_A[stage], ks) if a != 0.0)
            ks.append(np.asarray(rhs(x + _DP_C[stage] * hs, yi), dtype=float))
        y_new = yi
        k7 = ks[-1]
        err_vec = hs * sum(e * k for e, k in zip(_DP_E, ks) if e != 0.0)

        with np.errstate(invalid='ignore', over='ignore'):
            scale = atol + tol * np.maximum(np.abs(y), np.abs(y_new))
            err = float(np.max(np.abs(err_vec) / scale))
        if not np.isfinite(err) or not np.all(np.isfinite(y_new)):
            h = 0.2 * h_step
            continue

        if err <= 1.0:
            x = target if lands else x + hs
            y = y_new
            k1 = k7
            xs.append(x)
            ys.append(y.copy())
            factor = _SAFETY * max(err, 1e-10) ** -_PI_ALPHA * err_prev ** _PI_BETA
            err_prev = max(err, 1e-4)
            h = min(max_step, max(h_step, h) * min(10.0, max(0.2, factor)))
            if lands:
                stop_index += 1
                if stop_index == len(stops):
                    return Trajectory(np.array(xs), np.vstack(ys))
        else:
            h = h_step * max(0.2, _SAFETY * err ** -0.2)

    raise NumericError("maximum number of steps exceeded", last_good_x=x, max_steps=max_steps)


def _array_cdf(cdf, values):
    try:
        if np.shape(cdf(values)) == values.shape:
            return cdf
    except (TypeError, ValueError):
        pass
    return np.vectorize(lambda v: float(cdf(v)), otypes=[float])


def ks_distance(sample, cdf):
    """Sup-distance between the empirical CDF of ``sample`` and ``cdf`` (scalar-only callables are vectorized)."""
    if not isinstance(sample, EmpiricalSample):
        sample = EmpiricalSample(sample)
    if len(sample) == 0:
        raise InputError("ks_distance needs a non-empty sample")
    return float(scipy.stats.kstest(sample.values, _array_cdf(cdf, sample.values)).statistic)


def ks_two_sample(a, b):
    """Two-sample Kolmogorov-Smirnov distance."""
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    if a.size == 0 or b.size == 0:
        raise InputError("ks_two_sample needs two non-empty samples")
    return float(scipy.stats.ks_2samp(a, b).statistic)
