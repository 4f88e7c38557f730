"""
Experiment configuration: per-experiment defaults, overridden by a JSON or
TOML file, overridden by command-line flags.
"""
import hashlib
import json
import logging
try:
    import tomllib
except ModuleNotFoundError:  # Python < 3.11
    import tomli as tomllib
from dataclasses import asdict, dataclass, field, fields
from pathlib import Path

from django.conf import settings

from .ensembles import HermiteParams, LaguerreParams
from .exceptions import ParameterError, ParseError, UsageError

logger = logging.getLogger(__name__)

FIG2_P = [500, 2500, 25000, 125000]
CONVERGENCE_P = [500, 2500, 25000, 125000, 1250000]

EXPERIMENT_DEFAULTS = {
    'fig1_compare': {'n': 50, 'p': 1250000, 'beta': 2.0, 'replicates': 10000},
    'fig2_condition': {'n': 50, 'p_list': FIG2_P, 'beta': 2.0, 'replicates': 10000},
    'fig3_extremes': {'n': 50, 'p': 1250000, 'beta': 2.0, 'replicates': 10000},
    'fig4_rates': {'betas': [1.0, 2.0], 'points': 500, 'oracle_p': 10000},
    'fig5_semicircle': {'n': 200, 'p': 20000, 'beta': 2.0, 'replicates': 20},
    'convergence_scan': {'n': 50, 'p_list': CONVERGENCE_P, 'beta': 2.0, 'replicates': 1000},
    'square_condition': {'n': 50, 'beta': 2.0, 'replicates': 2000},
    'concentration': {'n': 50, 'beta': 1.0, 't_list': [3.0, 4.0, 5.0], 'replicates': 10000},
    'sphericity_level': {'n': 50, 'p': 125000, 'beta': 2.0, 'replicates': 500, 'alpha': 0.05},
}

# Keys that locate files rather than define the computation; excluded from the hash.
_LOCATION_KEYS = ('output_dir', 'cache_dir')


@dataclass
class ExperimentConfig:
    experiment_id: str
    n: int = None
    p: float = None
    beta: float = None
    replicates: int = 1
    master_seed: int = 0
    output_dir: Path = None
    cache_dir: Path = None
    p_list: list = field(default_factory=list)
    betas: list = field(default_factory=list)
    t_list: list = field(default_factory=list)
    points: int = None
    oracle_p: float = None
    alpha: float = None
    tol: float = None
    grid_step: float = None
    f4_convention: str = 'sqrt2'

    @classmethod
    def option_names(cls):
        return [f.name for f in fields(cls) if f.name != 'experiment_id']

    @classmethod
    def build(cls, experiment_id, config_file=None, overrides=None):
        """Merge defaults, the optional config file and non-None ``overrides``, then validate."""
        if experiment_id not in EXPERIMENT_DEFAULTS:
            raise UsageError(f"unknown experiment '{experiment_id}', expected one of {sorted(EXPERIMENT_DEFAULTS)}")
        values = dict(EXPERIMENT_DEFAULTS[experiment_id])
        if config_file is not None:
            values.update(read_config_file(config_file))
        values.update({key: value for key, value in (overrides or {}).items() if value is not None})

        unknown = sorted(set(values) - set(cls.option_names()))
        if unknown:
            raise UsageError(f"unknown configuration keys: {', '.join(unknown)}")
        values.setdefault('output_dir', settings.RMTLAB['OUTPUT_DIR'])
        values['output_dir'] = Path(values['output_dir'])
        if values.get('cache_dir') is not None:
            values['cache_dir'] = Path(values['cache_dir'])
        config = cls(experiment_id=experiment_id, **values)
        config.validate()
        return config

    def validate(self):
        if int(self.replicates) != self.replicates or self.replicates < 1:
            raise ParameterError(f"replicates must be a positive integer, got {self.replicates}")
        if not 0 <= int(self.master_seed) < 2 ** 64:
            raise ParameterError(f"master_seed must be a 64-bit unsigned integer, got {self.master_seed}")
        if self.n is not None:
            ps = self.p_list or ([self.p] if self.p is not None else [])
            for p in ps:
                LaguerreParams(self.n, p, self.beta)
            HermiteParams(self.n, self.beta)
        for beta in self.betas:
            if not beta > 0:
                raise ParameterError(f"beta must be positive, got {beta}")
        for t in self.t_list:
            if not t > 0:
                raise ParameterError(f"t must be positive, got {t}")
        if self.alpha is not None and not 0.0 < self.alpha < 1.0:
            raise ParameterError(f"alpha must lie in (0, 1), got {self.alpha}")
        if self.points is not None and self.points < 2:
            raise ParameterError(f"points must be >= 2, got {self.points}")

    def as_dict(self):
        return asdict(self)

    @property
    def config_hash(self):
        payload = {key: value for key, value in self.as_dict().items() if key not in _LOCATION_KEYS}
        encoded = json.dumps(payload, sort_keys=True, default=str).encode()
        return hashlib.sha256(encoded).hexdigest()[:16]

    def provenance(self):
        """Metadata embedded in every output sidecar."""
        return {
            'experiment_id': self.experiment_id,
            'master_seed': int(self.master_seed),
            'config_hash': self.config_hash,
            'version': settings.RMTLAB['VERSION'],
        }


def read_config_file(path):
    path = Path(path)
    try:
        text = path.read_text()
    except FileNotFoundError:
        raise UsageError(f"config file not found: {path}")
    try:
        if path.suffix == '.toml':
            values = tomllib.loads(text)
        else:
            values = json.loads(text)
    except json.JSONDecodeError as e:
        raise ParseError(f"invalid JSON config {path}: {e.msg}", row=e.lineno, column=e.colno)
    except tomllib.TOMLDecodeError as e:
        raise ParseError(f"invalid TOML config {path}: {e}")
    if not isinstance(values, dict):
        raise ParseError(f"config {path} must hold a single table/object")
    values.pop('experiment_id', None)
    logger.debug(f"Read config {path}: {values}")
    return values
