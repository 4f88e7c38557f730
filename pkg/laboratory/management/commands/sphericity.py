from laboratory.harness import sphericity_test
from laboratory.storage import TableCache, write_sidecar

from ._base import LabCommand


class Command(LabCommand):
    help = "Sphericity test on an n x p complex data matrix (CSV columns re_1,im_1,...,re_p,im_p)."

    def add_arguments(self, parser):
        parser.add_argument('data')
        parser.add_argument('--alpha', type=float, default=0.05)
        parser.add_argument('--cache-dir', help="overrides RMTLAB_CACHE")
        parser.add_argument('--report', help="also write the report as JSON to this path")

    def run(self, *args, **options):
        report = sphericity_test(options['data'], options['alpha'], cache=TableCache(options['cache_dir']))
        if options['report']:
            write_sidecar(options['report'], report.as_dict())
        self.write_json(report.as_dict())
