from laboratory.ldp import SIDES, gamma_rate_oracle, rate_extreme

from ._base import LabCommand


class Command(LabCommand):
    help = "Evaluate the extreme-eigenvalue rate function, optionally next to the n=1 Gamma tail oracle."

    def add_arguments(self, parser):
        parser.add_argument('--side', choices=SIDES, required=True)
        parser.add_argument('--beta', type=float, required=True)
        parser.add_argument('--x', type=float, nargs='+', required=True)
        parser.add_argument('--oracle-p', type=float, help="also print -(1/p) log of the Gamma tail at this p")

    def run(self, *args, **options):
        header = 'x,rate,inside' + (',gamma_oracle' if options['oracle_p'] else '')
        self.stdout.write(header)
        for x in options['x']:
            rate = rate_extreme(x, options['beta'], options['side'])
            line = f"{x!r},{rate.value!r},{rate.inside}"
            if options['oracle_p']:
                line += f",{gamma_rate_oracle(x, options['beta'], options['oracle_p'])!r}"
            self.stdout.write(line)
