import logging

import numpy as np
from celery import shared_task

from .ensembles import HermiteParams, LaguerreParams, sample_hermite, sample_laguerre
from .exceptions import RmtLabError
from .numerics import RngStream
from .scaling import ScaledEmpiricalMeasure, hermite_transform

logger = logging.getLogger(__name__)


def _summary(x):
    return [float(x[-1]), float(x[0]), float(x[-1] - x[0]), float(np.median(x))]


def _laguerre(params):
    return LaguerreParams(params['n'], params['p'], params['beta'])


def _hermite_summary(params, rng):
    return _summary(sample_hermite(HermiteParams(params['n'], params['beta']), rng).values)


def _laguerre_summary(params, rng):
    laguerre = _laguerre(params)
    return _summary(hermite_transform(sample_laguerre(laguerre, rng), laguerre).x)


def _laguerre_extremes(params, rng):
    spectrum = sample_laguerre(_laguerre(params), rng)
    return [spectrum.lambda_min, spectrum.lambda_max]


def _semicircle_ks(params, rng):
    laguerre = _laguerre(params)
    measure = ScaledEmpiricalMeasure.from_sample(hermite_transform(sample_laguerre(laguerre, rng), laguerre))
    return [measure.ks_to_semicircle(laguerre.beta)]


# Each kind maps one random stream to one fixed-length record of floats.
RECORD_KINDS = {
    'hermite_summary': _hermite_summary,
    'laguerre_summary': _laguerre_summary,
    'laguerre_extremes': _laguerre_extremes,
    'semicircle_ks': _semicircle_ks,
}


def replicate_record(kind, params, master_seed, stream_index):
    return RECORD_KINDS[kind](params, RngStream(master_seed, stream_index))


@shared_task
def simulate_replicates(kind, params, master_seed, stream_indices):
    """One chunk of replicates; the result keeps the order of ``stream_indices``."""
    logger.info(f"Starting {kind} chunk of {len(stream_indices)} replicates (seed {master_seed}, first stream {stream_indices[0]})")
    try:
        records = [replicate_record(kind, params, master_seed, index) for index in stream_indices]
    except RmtLabError as e:
        logger.error(f"Chunk {kind} failed at seed {master_seed}: {e}")
        raise
    logger.info(f"Finished {kind} chunk ending at stream {stream_indices[-1]}")
    return records
