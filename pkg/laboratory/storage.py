"""
CSV files with JSON sidecars for spectra, gridded measures, Tracy-Widom
tables and experiment outputs, plus the on-disk table cache.
"""
import json
import logging
import math
from pathlib import Path

import numpy as np
import pandas as pd
from django.conf import settings
from django.core.serializers.json import DjangoJSONEncoder

from .ensembles import HERMITE, LAGUERRE, HermiteParams, LaguerreParams, Spectrum
from .exceptions import InputError, ParseError
from .ldp import GriddedMeasure
from .tracy_widom import (
    TW_LABELS, UPLUSV, DistributionTable, build_tw_table, convolve_self, solve_painleve2,
)

logger = logging.getLogger(__name__)


class LabJSONEncoder(DjangoJSONEncoder):
    """DjangoJSONEncoder that also understands numpy scalars, arrays and paths."""

    def default(self, o):
        if isinstance(o, np.integer):
            return int(o)
        if isinstance(o, np.floating):
            return float(o)
        if isinstance(o, np.ndarray):
            return o.tolist()
        if isinstance(o, Path):
            return str(o)
        return super().default(o)


def sidecar_path(path):
    return Path(path).with_suffix('.json')


def write_sidecar(path, meta):
    target = sidecar_path(path)
    target.parent.mkdir(parents=True, exist_ok=True)
    target.write_text(json.dumps(meta, cls=LabJSONEncoder, indent=2, sort_keys=True) + '\n')
    return target


def read_sidecar(path):
    target = sidecar_path(path)
    try:
        return json.loads(target.read_text())
    except FileNotFoundError:
        raise InputError(f"missing metadata sidecar {target}")
    except json.JSONDecodeError as e:
        raise ParseError(f"invalid JSON in {target}: {e.msg}", row=e.lineno, column=e.colno)


def _read_columns(path, columns):
    try:
        frame = pd.read_csv(path)
    except FileNotFoundError:
        raise InputError(f"file not found: {path}")
    except (pd.errors.ParserError, pd.errors.EmptyDataError, UnicodeDecodeError) as e:
        raise ParseError(f"cannot parse {path}: {e}")
    if list(frame.columns) != list(columns):
        raise ParseError(f"{path} has header {list(frame.columns)}, expected {list(columns)}", row=0)
    for column in columns:
        values = pd.to_numeric(frame[column], errors='coerce')
        bad = values.isna().to_numpy()
        if bad.any():
            raise ParseError(f"non-numeric value in {path}", row=int(np.argmax(bad)) + 1, column=column)
        frame[column] = values
    return frame


def write_frame(frame, path, meta=None):
    """Write a data frame as CSV, with an optional JSON sidecar next to it."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    frame.to_csv(path, index=False)
    if meta is not None:
        write_sidecar(path, meta)
    logger.debug(f"Wrote {len(frame)} rows to {path}")
    return path


def write_spectrum(spectrum, path):
    params = spectrum.params
    frame = pd.DataFrame({'index': np.arange(1, params.n + 1), 'value': spectrum.values})
    master_seed, stream_index = spectrum.seed_info
    meta = dict(params.as_dict(), master_seed=master_seed, stream_index=stream_index)
    return write_frame(frame, path, meta)


def read_spectrum(path):
    frame = _read_columns(path, ['index', 'value'])
    meta = read_sidecar(path)
    try:
        if meta['ensemble'] == LAGUERRE:
            params = LaguerreParams(meta['n'], meta['p'], meta['beta'])
        elif meta['ensemble'] == HERMITE:
            params = HermiteParams(meta['n'], meta['beta'])
        else:
            raise InputError(f"unknown ensemble '{meta['ensemble']}' in {sidecar_path(path)}")
    except KeyError as e:
        raise InputError(f"sidecar {sidecar_path(path)} lacks key {e}")
    return Spectrum(frame['value'].to_numpy(), params, (meta.get('master_seed'), meta.get('stream_index')))


def write_measure(nu, path, beta_context=None):
    frame = pd.DataFrame({'x': nu.grid, 'mass': nu.mass})
    return write_frame(frame, path, {'grid_step': nu.step, 'beta_context': beta_context})


def read_measure(path):
    frame = _read_columns(path, ['x', 'mass'])
    read_sidecar(path)
    return GriddedMeasure(frame['x'].to_numpy(), frame['mass'].to_numpy())


def write_table(table, path, tol, grid_step):
    frame = pd.DataFrame({'x': table.grid, 'cdf': table.cdf, 'pdf': table.pdf})
    return write_frame(frame, path, table_metadata(table.label, table.beta, tol, grid_step, table.meta))


def read_table(path):
    frame = _read_columns(path, ['x', 'cdf', 'pdf'])
    meta = read_sidecar(path)
    extra = {key: meta[key] for key in ('tol', 'grid_step', 'f4_convention') if key in meta}
    return DistributionTable(
        frame['x'].to_numpy(), frame['cdf'].to_numpy(), frame['pdf'].to_numpy(),
        meta.get('label'), meta.get('beta'), extra,
    )


def table_metadata(label, beta, tol, grid_step, extra=None):
    meta = {
        'label': label,
        'beta': beta,
        'tol': float(tol),
        'grid_step': float(grid_step),
        'builder_version': settings.RMTLAB['VERSION'],
    }
    if extra and 'f4_convention' in extra:
        meta['f4_convention'] = extra['f4_convention']
    return meta


def _cache_file(cache_dir, label, tol, grid_step, f4_convention):
    suffix = f"_{f4_convention}" if label == TW_LABELS[4] else ''
    return Path(cache_dir) / f"{label}{suffix}_tol{tol:g}_h{grid_step:g}.csv"


class TableCache:
    """
    Tracy-Widom and U+V tables keyed by (label, tol, grid_step), built on
    first use and stored under ``cache_dir``. A Painleve solution is solved at
    most once per cache instance.
    """

    def __init__(self, cache_dir=None, tol=None, grid_step=None):
        options = settings.RMTLAB
        self.cache_dir = Path(cache_dir or options['CACHE_DIR'])
        self.tol = float(tol or options['PAINLEVE_TOL'])
        self.grid_step = float(grid_step or options['GRID_STEP'])
        self._solution = None
        self._tables = {}

    def solution(self):
        if self._solution is None:
            self._solution = solve_painleve2(tol=self.tol, grid_step=self.grid_step)
        return self._solution

    def _load(self, path, expected):
        if not path.exists():
            return None
        try:
            table = read_table(path)
            found = read_sidecar(path)
        except InputError as e:
            logger.warning(f"Ignoring unreadable cached table {path}: {e}")
            return None
        mismatched = {key: (found.get(key), value) for key, value in expected.items()
                      if not _same(found.get(key), value)}
        if mismatched:
            logger.warning(f"Cached table {path} does not match the request {mismatched}; rebuilding")
            return None
        logger.info(f"Loaded cached table {path}")
        return table

    def _get(self, label, beta, builder, f4_convention='sqrt2'):
        key = (label, f4_convention if label == TW_LABELS[4] else None)
        if key in self._tables:
            return self._tables[key]
        path = _cache_file(self.cache_dir, label, self.tol, self.grid_step, f4_convention)
        extra = {'f4_convention': f4_convention} if label == TW_LABELS[4] else None
        expected = table_metadata(label, beta, self.tol, self.grid_step, extra)
        table = self._load(path, expected)
        if table is None:
            logger.info(f"Building table {label} (tol={self.tol}, step={self.grid_step})")
            table = builder()
            write_table(table, path, self.tol, self.grid_step)
        self._tables[key] = table
        return table

    def tw(self, beta, f4_convention='sqrt2'):
        label = TW_LABELS.get(beta)
        if label is None:
            return build_tw_table(beta, None)
        return self._get(label, beta, lambda: build_tw_table(beta, self.solution(), f4_convention), f4_convention)

    def uplusv(self):
        return self._get(UPLUSV, None, lambda: convolve_self(self.tw(2)))


def _same(found, expected):
    if isinstance(expected, float) and isinstance(found, (int, float)):
        return math.isclose(found, expected, rel_tol=1e-12, abs_tol=0.0)
    return found == expected
