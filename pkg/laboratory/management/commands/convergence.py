from django.conf import settings

from laboratory.config import CONVERGENCE_P
from laboratory.harness import convergence_scan

from ._base import LabCommand


class Command(LabCommand):
    help = "KS distances between transformed-Laguerre and Hermite extremes and medians as p grows."

    def add_arguments(self, parser):
        parser.add_argument('--n', type=int, default=50)
        parser.add_argument('--p-list', type=float, nargs='+', default=CONVERGENCE_P)
        parser.add_argument('--beta', type=float, default=2.0)
        parser.add_argument('--replicates', type=int, default=1000)
        parser.add_argument('--seed', type=int, default=0)
        parser.add_argument('--output-dir')

    def run(self, *args, **options):
        frame = convergence_scan(
            options['n'], options['p_list'], options['beta'], options['replicates'], options['seed'],
            output_dir=options['output_dir'] or settings.RMTLAB['OUTPUT_DIR'],
        )
        self.stdout.write(frame.to_csv(index=False))
