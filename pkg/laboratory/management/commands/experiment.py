from laboratory.config import EXPERIMENT_DEFAULTS, ExperimentConfig
from laboratory.harness import run_experiment
from laboratory.tracy_widom import F4_CONVENTIONS

from ._base import LabCommand


class Command(LabCommand):
    help = "Run a seeded experiment and write its CSV data and JSON summary under the output directory."

    def add_arguments(self, parser):
        parser.add_argument('experiment_id', help=f"one of {', '.join(sorted(EXPERIMENT_DEFAULTS))}")
        parser.add_argument('--config', help="JSON or TOML file with experiment options")
        parser.add_argument('--n', type=int)
        parser.add_argument('--p', type=float)
        parser.add_argument('--p-list', type=float, nargs='+')
        parser.add_argument('--beta', type=float)
        parser.add_argument('--betas', type=float, nargs='+')
        parser.add_argument('--t-list', type=float, nargs='+')
        parser.add_argument('--replicates', type=int)
        parser.add_argument('--seed', type=int, dest='master_seed')
        parser.add_argument('--alpha', type=float)
        parser.add_argument('--points', type=int)
        parser.add_argument('--oracle-p', type=float)
        parser.add_argument('--output-dir')
        parser.add_argument('--cache-dir')
        parser.add_argument('--tol', type=float)
        parser.add_argument('--grid-step', type=float)
        parser.add_argument('--f4-convention', choices=F4_CONVENTIONS)

    def run(self, *args, **options):
        overrides = {name: options.get(name) for name in ExperimentConfig.option_names()}
        config = ExperimentConfig.build(options['experiment_id'], options['config'], overrides)
        result = run_experiment(config)
        for path in result.files:
            self.stdout.write(str(path))
        self.write_json(result.summary)
