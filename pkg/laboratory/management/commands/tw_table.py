from laboratory.storage import TableCache
from laboratory.tracy_widom import F4_CONVENTIONS, table_moments

from ._base import LabCommand


class Command(LabCommand):
    help = "Build (or load from the cache) a Tracy-Widom table or the U+V table and print its moments."

    def add_arguments(self, parser):
        target = parser.add_mutually_exclusive_group(required=True)
        target.add_argument('--beta', type=int, help="1, 2 or 4")
        target.add_argument('--uplusv', action='store_true', help="the law of U+V for U, V i.i.d. F2")
        parser.add_argument('--f4-convention', choices=F4_CONVENTIONS, default='sqrt2')
        parser.add_argument('--cache-dir', help="overrides RMTLAB_CACHE")
        parser.add_argument('--tol', type=float)
        parser.add_argument('--grid-step', type=float)

    def run(self, *args, **options):
        cache = TableCache(options['cache_dir'], options['tol'], options['grid_step'])
        if options['uplusv']:
            table = cache.uplusv()
        else:
            table = cache.tw(options['beta'], options['f4_convention'])
        mean, sd = table_moments(table)
        self.write_json({
            'label': table.label,
            'beta': table.beta,
            'points': int(table.grid.size),
            'mean': mean,
            'sd': sd,
            'cache_dir': cache.cache_dir,
        })
