from pathlib import Path

from django.conf import settings

from laboratory.ensembles import HermiteParams, LaguerreParams, sample_hermite, sample_laguerre
from laboratory.exceptions import UsageError
from laboratory.numerics import RngStream
from laboratory.storage import write_spectrum

from ._base import LabCommand


class Command(LabCommand):
    help = "Draw one beta-Hermite or beta-Laguerre spectrum and write it as CSV with a JSON sidecar."

    def add_arguments(self, parser):
        parser.add_argument('--ensemble', choices=['hermite', 'laguerre'], required=True)
        parser.add_argument('--n', type=int, required=True)
        parser.add_argument('--p', type=float, help="Laguerre only; any real p >= n")
        parser.add_argument('--beta', type=float, default=2.0)
        parser.add_argument('--seed', type=int, default=0)
        parser.add_argument('--stream', type=int, default=0)
        parser.add_argument('--bidiagonal', choices=['lower', 'upper'], default='lower')
        parser.add_argument('--output', help="CSV path (default: OUTPUT_DIR/spectrum_<ensemble>_<seed>_<stream>.csv)")

    def run(self, *args, **options):
        rng = RngStream(options['seed'], options['stream'])
        if options['ensemble'] == 'laguerre':
            if options['p'] is None:
                raise UsageError("--p is required for the Laguerre ensemble")
            spectrum = sample_laguerre(LaguerreParams(options['n'], options['p'], options['beta']), rng,
                                       options['bidiagonal'])
        else:
            spectrum = sample_hermite(HermiteParams(options['n'], options['beta']), rng)

        output = options['output'] or (
            Path(settings.RMTLAB['OUTPUT_DIR']) / f"spectrum_{options['ensemble']}_{options['seed']}_{options['stream']}.csv"
        )
        path = write_spectrum(spectrum, output)
        self.stdout.write(self.style.SUCCESS(f"Wrote {spectrum.params.n} eigenvalues to {path}"))
