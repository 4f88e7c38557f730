"""
Seeded experiment runners, the sphericity test on complex data files and the
Laguerre-to-Hermite convergence scan.

Replicates are identified by stream index and simulated in Celery chunks; the
chunks are gathered in submission order so every summary is independent of
how many workers ran them.
"""
import logging
import math
from dataclasses import asdict, dataclass, field
from pathlib import Path

import numpy as np
import pandas as pd
from celery import group
from django.conf import settings

from .config import ExperimentConfig
from .ensembles import LaguerreParams, sample_laguerre
from .exceptions import DomainError, InputError, NumericError, ParseError, UsageError
from .ldp import (
    comparison_cdfs, comparison_pdfs, gamma_rate_oracle, rate_extreme, semicircle_cdf, semicircle_pdf,
    concentration_check,
)
from .numerics import RngStream, eig_hermitian, ks_distance, ks_two_sample
from .scaling import (
    ScaledEmpiricalMeasure, condition_constants, condition_number, condition_statistic,
    extreme_centerings_beta2, hermite_transform, smallest_centering,
)
from .storage import TableCache, write_frame, write_sidecar
from .tasks import simulate_replicates
from .tracy_widom import (
    build_lambda0_table, critical_value, lambda0_cdf, table_moments, two_sided_p_value,
)

logger = logging.getLogger(__name__)

SUMMARY_COLUMNS = ['max', 'min', 'range', 'median']


@dataclass
class ExperimentResult:
    experiment_id: str
    output_dir: Path
    files: list = field(default_factory=list)
    summary: dict = field(default_factory=dict)


@dataclass(frozen=True)
class SphericityReport:
    n: int
    p: int
    kappa: float
    statistic: float
    critical_value_at_alpha: float
    alpha: float
    p_value: float
    decision: str

    @property
    def rejected(self):
        return self.decision == 'reject'

    def as_dict(self):
        return asdict(self)


def run_replicates(kind, params, master_seed, streams):
    """Simulate one record per stream index in Celery chunks; rows follow ``streams``."""
    streams = [int(index) for index in streams]
    size = settings.RMTLAB['CHUNK_SIZE']
    chunks = [streams[start:start + size] for start in range(0, len(streams), size)]
    job = group(simulate_replicates.s(kind, params, int(master_seed), chunk) for chunk in chunks)
    results = job.apply_async().get()
    return np.array([record for chunk in results for record in chunk], dtype=float)


class _Run:
    """Output bookkeeping for one experiment run."""

    def __init__(self, config):
        self.config = config
        self.result = ExperimentResult(config.experiment_id, Path(config.output_dir) / config.experiment_id)

    def emit(self, name, frame, **meta):
        path = self.result.output_dir / f"{name}.csv"
        sidecar = dict(self.config.provenance(), columns=list(frame.columns), **meta)
        self.result.files.append(write_frame(frame, path, sidecar))
        return path

    def finish(self, **summary):
        self.result.summary = summary
        payload = dict(self.config.provenance(), config=self.config.as_dict(), summary=summary)
        self.result.files.append(write_sidecar(self.result.output_dir / 'summary.json', payload))
        logger.info(f"Experiment {self.config.experiment_id} finished: {summary}")
        return self.result


def _params(config, p=None):
    return {'n': int(config.n), 'p': float(config.p if p is None else p), 'beta': float(config.beta)}


def _summary_frame(records):
    frame = pd.DataFrame(records, columns=SUMMARY_COLUMNS)
    frame.insert(0, 'replicate', np.arange(len(frame)))
    return frame


def _mean_and_se(values):
    values = np.asarray(values, dtype=float)
    se = float(values.std(ddof=1) / math.sqrt(values.size)) if values.size > 1 else math.nan
    return float(values.mean()), se


def fig1_compare(config, cache):
    """Transformed Laguerre versus Hermite: largest, smallest, range and median."""
    run = _Run(config)
    replicates = np.arange(config.replicates)
    params = _params(config)
    laguerre = run_replicates('laguerre_summary', params, config.master_seed, 2 * replicates)
    hermite = run_replicates('hermite_summary', params, config.master_seed, 2 * replicates + 1)
    run.emit('laguerre_transformed', _summary_frame(laguerre))
    run.emit('hermite', _summary_frame(hermite))

    summary = {
        f"ks_{name}": ks_two_sample(laguerre[:, k], hermite[:, k]) for k, name in enumerate(SUMMARY_COLUMNS)
    }
    return run.finish(replicates=int(config.replicates), **summary)


def fig2_condition(config, cache):
    """Studentized condition number against the U+V law for each p."""
    run = _Run(config)
    for p in config.p_list:
        condition_constants(LaguerreParams(config.n, p, config.beta))
    conv = cache.uplusv()
    conv_mean, conv_sd = table_moments(conv)

    rows, per_p = [], {}
    for j, p in enumerate(config.p_list):
        laguerre = LaguerreParams(config.n, p, config.beta)
        alpha_n, beta_n = condition_constants(laguerre)
        streams = j * config.replicates + np.arange(config.replicates)
        extremes = run_replicates('laguerre_extremes', _params(config, p), config.master_seed, streams)
        kappa = np.sqrt(extremes[:, 1] / extremes[:, 0])
        statistic = alpha_n * (kappa - beta_n)
        mean, se = _mean_and_se(statistic)
        per_p[str(p)] = {'ks_uplusv': ks_distance(statistic, conv.cdf_at), 'mean': mean, 'se': se}
        rows.append(pd.DataFrame({
            'p': p, 'replicate': np.arange(config.replicates), 'kappa': kappa, 'statistic': statistic,
        }))

    run.emit('condition_statistics', pd.concat(rows, ignore_index=True))
    run.emit('uplusv_overlay', pd.DataFrame({'x': conv.grid, 'cdf': conv.cdf, 'pdf': conv.pdf}))
    return run.finish(uplusv_mean=conv_mean, uplusv_sd=conv_sd, by_p=per_p)


def fig3_extremes(config, cache):
    """Scaled smallest (and for beta=2 largest) eigenvalues against the Tracy-Widom laws."""
    run = _Run(config)
    laguerre = LaguerreParams(config.n, config.p, config.beta)
    mu, sigma = smallest_centering(laguerre)
    centering = extreme_centerings_beta2(laguerre) if laguerre.beta == 2.0 else None

    extremes = run_replicates(
        'laguerre_extremes', _params(config), config.master_seed, np.arange(config.replicates),
    )
    frame = pd.DataFrame({'replicate': np.arange(config.replicates), 'min_scaled': (extremes[:, 0] - mu) / sigma})
    if centering is not None:
        frame['max_scaled'] = (extremes[:, 1] - centering.mu_high) / centering.sigma
    run.emit('extremes_scaled', frame)

    summary = {'mu': mu, 'sigma': sigma}
    beta = int(laguerre.beta) if laguerre.beta in (1.0, 2.0, 4.0) else None
    if beta is None:
        logger.info(f"No Tracy-Widom reference for beta={laguerre.beta}; emitting data only")
    else:
        conventions = ['sqrt2', 'unscaled'] if beta == 4 else [config.f4_convention]
        for convention in conventions:
            tw = cache.tw(beta, convention)
            key = 'ks_min' if len(conventions) == 1 else f"ks_min_{convention}"
            summary[key] = ks_distance(frame['min_scaled'].to_numpy(), lambda x: lambda0_cdf(beta, x, tw))
            reflected = build_lambda0_table(tw)
            name = 'lambda0_overlay' if len(conventions) == 1 else f"lambda0_overlay_{convention}"
            run.emit(name, pd.DataFrame({'x': reflected.grid, 'cdf': reflected.cdf, 'pdf': reflected.pdf}))

    if centering is not None:
        low, high = frame['min_scaled'].to_numpy(), frame['max_scaled'].to_numpy()
        summary['ks_max'] = ks_distance(high, cache.tw(2).cdf_at)
        summary.update(independence_statistics(low, high))
    return run.finish(**summary)


def independence_statistics(low, high):
    """Correlation of the scaled extremes and the quadrant check below both medians."""
    below_low = low < np.median(low)
    below_high = high < np.median(high)
    joint = float(np.mean(below_low & below_high))
    product = float(np.mean(below_low) * np.mean(below_high))
    return {
        'correlation': float(np.corrcoef(low, high)[0, 1]),
        'quadrant_joint': joint,
        'quadrant_product': product,
        'quadrant_difference': joint - product,
    }


def fig4_rates(config, cache):
    """Extreme-eigenvalue rate functions on (0, 5 beta] with the n=1 Gamma oracle."""
    run = _Run(config)
    rows = []
    worst = 0.0
    for beta in config.betas:
        for x in np.linspace(5.0 * beta / config.points, 5.0 * beta, config.points):
            rate_max = rate_extreme(x, beta, 'max')
            rate_min = rate_extreme(x, beta, 'min')
            oracle = gamma_rate_oracle(x, beta, config.oracle_p)
            finite = rate_max if rate_max.inside else rate_min
            worst = max(worst, abs(finite.value - oracle))
            rows.append((beta, x, rate_max.value, rate_min.value, oracle))
    frame = pd.DataFrame(rows, columns=['beta', 'x', 'rate_max', 'rate_min', 'gamma_oracle'])
    run.emit('rates', frame, oracle_p=config.oracle_p)
    return run.finish(max_abs_oracle_difference=worst)


def fig5_semicircle(config, cache):
    """Scaled empirical measures of transformed Laguerre draws against the semicircle."""
    run = _Run(config)
    laguerre = LaguerreParams(config.n, config.p, config.beta)
    ks = run_replicates('semicircle_ks', _params(config), config.master_seed, np.arange(config.replicates))[:, 0]
    run.emit('semicircle_ks', pd.DataFrame({'replicate': np.arange(config.replicates), 'ks_semicircle': ks}))

    first = sample_laguerre(laguerre, RngStream(config.master_seed, 0))
    atoms = ScaledEmpiricalMeasure.from_sample(hermite_transform(first, laguerre)).atoms
    run.emit('atoms_replicate0', pd.DataFrame({'atom': atoms}))
    radius = math.sqrt(2.0 * laguerre.beta)
    x = np.linspace(-radius, radius, 401)
    run.emit('semicircle_overlay', pd.DataFrame({
        'x': x, 'pdf': semicircle_pdf(x, laguerre.beta), 'cdf': semicircle_cdf(x, laguerre.beta),
    }))
    mean, se = _mean_and_se(ks)
    return run.finish(mean_ks_semicircle=mean, se=se)


def convergence_scan(n, p_list, beta, replicates, seed, output_dir=None):
    """
    KS distance between transformed-Laguerre and Hermite samples of lambda_max,
    lambda_min and the median, one row per p. Hermite replicate r uses stream r;
    Laguerre replicate r at the j-th p uses stream (j + 1) * replicates + r.

    With ``output_dir`` the table is also written as convergence_scan/convergence.csv.
    """
    params = {'n': int(n), 'beta': float(beta)}
    for p in p_list:
        LaguerreParams(n, p, beta)
    hermite = run_replicates('hermite_summary', dict(params, p=float(n)), seed, np.arange(replicates))

    rows = []
    for j, p in enumerate(p_list):
        streams = (j + 1) * replicates + np.arange(replicates)
        laguerre = run_replicates('laguerre_summary', dict(params, p=float(p)), seed, streams)
        rows.append({
            'p': p,
            'ks_max': ks_two_sample(laguerre[:, 0], hermite[:, 0]),
            'ks_min': ks_two_sample(laguerre[:, 1], hermite[:, 1]),
            'ks_median': ks_two_sample(laguerre[:, 3], hermite[:, 3]),
            'ks_null_scale': math.sqrt(2.0 / replicates),
        })
        logger.info(f"convergence_scan p={p}: {rows[-1]}")
    frame = pd.DataFrame(rows, columns=['p', 'ks_max', 'ks_min', 'ks_median', 'ks_null_scale'])

    if output_dir is not None:
        config = ExperimentConfig.build('convergence_scan', overrides={
            'n': n, 'p_list': list(p_list), 'beta': beta, 'replicates': replicates,
            'master_seed': seed, 'output_dir': output_dir,
        })
        _write_convergence(config, frame)
    return frame


def _write_convergence(config, frame):
    run = _Run(config)
    run.emit('convergence', frame)
    return run.finish(rows=frame.to_dict(orient='records'))


def _convergence_experiment(config, cache):
    frame = convergence_scan(config.n, config.p_list, config.beta, config.replicates, config.master_seed)
    return _write_convergence(config, frame)


def square_condition(config, cache):
    """kappa_n / n for square (p = n) complex Laguerre draws against Edelman's limit law."""
    run = _Run(config)
    params = dict(_params(config, p=config.n), beta=2.0)
    extremes = run_replicates('laguerre_extremes', params, config.master_seed, np.arange(config.replicates))
    scaled = np.sqrt(extremes[:, 1] / extremes[:, 0]) / config.n
    run.emit('kappa_over_n', pd.DataFrame({'replicate': np.arange(config.replicates), 'kappa_over_n': scaled}))
    x = np.linspace(0.05, 20.0, 400)
    run.emit('edelman_overlay', pd.DataFrame({
        'x': x, 'pdf': comparison_pdfs(x, 'edelman_square'), 'cdf': comparison_cdfs(x, 'edelman_square'),
    }))
    ks = ks_distance(scaled, lambda v: comparison_cdfs(v, 'edelman_square'))
    return run.finish(ks_edelman=ks)


def concentration(config, cache):
    """Exceedance frequency of max |lambda_i| >= sqrt(n) t on a t grid; every t reuses stream 0."""
    run = _Run(config)
    rows = []
    for t in config.t_list:
        result = concentration_check(
            config.n, t, config.replicates, RngStream(config.master_seed, 0), config.beta, strict=False,
        )
        rows.append({
            't': t, 'exceedances': result.exceedances, 'empirical_prob': result.empirical_prob,
            'standard_error': result.standard_error, 'bound': result.bound, 'holds': result.holds,
        })
    frame = pd.DataFrame(rows)
    constant = settings.RMTLAB['CONCENTRATION_C']
    run.emit('concentration', frame, constant=constant)
    result = run.finish(all_hold=bool(frame['holds'].all()))
    if not result.summary['all_hold']:
        failed = [float(t) for t in frame.loc[~frame['holds'], 't']]
        raise NumericError("concentration bound exceeded", t=failed, constant=constant, output_dir=str(result.output_dir))
    return result


def sphericity_level(config, cache):
    """Rejection rate of the sphericity test under the null, via the eigenvalue law of the Gram matrix."""
    run = _Run(config)
    laguerre = LaguerreParams(config.n, config.p, 2.0)
    alpha_n, beta_n = condition_constants(laguerre)
    alpha = config.alpha
    s = critical_value(alpha, cache.uplusv())
    extremes = run_replicates(
        'laguerre_extremes', dict(_params(config), beta=2.0), config.master_seed, np.arange(config.replicates),
    )
    statistic = alpha_n * (np.sqrt(extremes[:, 1] / extremes[:, 0]) - beta_n)
    reject = np.abs(statistic) > s
    run.emit('sphericity_null', pd.DataFrame({
        'replicate': np.arange(config.replicates), 'statistic': statistic, 'reject': reject,
    }))
    rate = float(reject.mean())
    return run.finish(alpha=alpha, critical_value=s, rejection_rate=rate,
                      se=math.sqrt(alpha * (1.0 - alpha) / config.replicates))


EXPERIMENTS = {
    'fig1_compare': fig1_compare,
    'fig2_condition': fig2_condition,
    'fig3_extremes': fig3_extremes,
    'fig4_rates': fig4_rates,
    'fig5_semicircle': fig5_semicircle,
    'convergence_scan': _convergence_experiment,
    'square_condition': square_condition,
    'concentration': concentration,
    'sphericity_level': sphericity_level,
}


def run_experiment(config, cache=None):
    runner = EXPERIMENTS.get(config.experiment_id)
    if runner is None:
        raise UsageError(f"unknown experiment '{config.experiment_id}', expected one of {sorted(EXPERIMENTS)}")
    config.validate()
    cache = cache or TableCache(config.cache_dir, config.tol, config.grid_step)
    logger.info(f"Starting experiment {config.experiment_id} (seed {config.master_seed}, hash {config.config_hash})")
    return runner(config, cache)


def read_complex_matrix(path):
    """
    An n x p complex matrix from a CSV with 2p columns re_1,im_1,...,re_p,im_p
    and one row per observation; a non-numeric first row is taken as a header.
    """
    try:
        frame = pd.read_csv(path, header=None, dtype=str, skip_blank_lines=True)
    except FileNotFoundError:
        raise InputError(f"data file not found: {path}")
    except pd.errors.EmptyDataError:
        raise ParseError(f"data file {path} is empty")
    except pd.errors.ParserError as e:
        raise ParseError(f"cannot parse {path}: {e}")

    first_line = 1
    if pd.to_numeric(frame.iloc[0], errors='coerce').isna().all():
        frame = frame.iloc[1:]
        first_line = 2
    if frame.empty:
        raise ParseError(f"data file {path} has no data rows")

    numeric = frame.apply(pd.to_numeric, errors='coerce')
    bad = np.argwhere(numeric.isna().to_numpy())
    if bad.size:
        row, column = bad[0]
        raise ParseError(f"non-numeric entry in {path}", row=int(row) + first_line, column=int(column) + 1)
    values = numeric.to_numpy(dtype=float)
    if not np.all(np.isfinite(values)):
        raise ParseError(f"non-finite entry in {path}")
    if values.shape[1] % 2:
        raise InputError(
            f"{path} has {values.shape[1]} columns; complex data needs alternating real/imaginary column pairs"
        )
    real, imag = values[:, 0::2], values[:, 1::2]
    if not np.any(imag):
        raise DomainError(f"{path} holds real-valued data; the sphericity law applies to complex Gaussian data only")
    return real + 1j * imag


def sphericity_test(path, alpha, cache=None, conv=None):
    """Reject sphericity when alpha_n |kappa_n - beta_n| exceeds the U+V critical value at level alpha."""
    data = read_complex_matrix(path)
    n, p = data.shape
    if p <= n:
        raise DomainError(f"sphericity test needs p > n, got n={n}, p={p}")
    laguerre = LaguerreParams(n, p, 2.0)
    conv = conv or (cache or TableCache()).uplusv()
    s = critical_value(alpha, conv)

    eigenvalues = eig_hermitian(data @ data.conj().T)
    kappa = condition_number(eigenvalues)
    statistic = condition_statistic(eigenvalues, laguerre)
    reject = abs(statistic) > s
    p_value = two_sided_p_value(statistic, conv)
    # Keep p_value < alpha exactly when the decision is reject.
    if reject:
        p_value = min(p_value, float(np.nextafter(alpha, 0.0)))
    else:
        p_value = max(p_value, alpha)

    report = SphericityReport(
        n=n, p=p, kappa=kappa, statistic=statistic, critical_value_at_alpha=s,
        alpha=alpha, p_value=p_value, decision='reject' if reject else 'retain',
    )
    logger.info(f"Sphericity test on {path}: {report}")
    return report
