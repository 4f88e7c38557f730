import json
from io import StringIO

from django.core.management import CommandError, call_command
from django.test import SimpleTestCase, override_settings

from laboratory.storage import read_spectrum

from .test_harness import complex_gaussian, write_complex_csv
from .utils import TempDirMixin, lab_settings


def run(*args, **options):
    out = StringIO()
    call_command(*args, stdout=out, **options)
    return out.getvalue()


class RateCommandTests(SimpleTestCase):
    def test_prints_rates(self):
        lines = run('rate', side='max', beta=1.0, x=[2.0, 0.5]).splitlines()
        self.assertEqual(lines[0], 'x,rate,inside')
        x, rate, inside = lines[1].split(',')
        self.assertAlmostEqual(float(rate), 0.15342640972002736, places=14)
        self.assertEqual(inside, 'True')
        self.assertEqual(lines[2], '0.5,inf,False')

    def test_with_oracle(self):
        lines = run('rate', side='min', beta=2.0, x=[1.0], oracle_p=1e4).splitlines()
        self.assertEqual(lines[0], 'x,rate,inside,gamma_oracle')
        self.assertEqual(len(lines[1].split(',')), 4)

    def test_invalid_beta_exit_code(self):
        with self.assertRaises(CommandError) as caught:
            run('rate', side='max', beta=-1.0, x=[1.0])
        self.assertEqual(caught.exception.returncode, 3)


class SampleCommandTests(TempDirMixin, SimpleTestCase):
    def test_writes_a_laguerre_spectrum(self):
        path = self.tmp / 'spectrum.csv'
        run('sample', ensemble='laguerre', n=4, p=10.5, beta=1.0, seed=3, stream=2, output=str(path))
        spectrum = read_spectrum(path)
        self.assertEqual(spectrum.values.size, 4)
        self.assertEqual(tuple(spectrum.seed_info), (3, 2))

    def test_laguerre_needs_p(self):
        with self.assertRaises(CommandError) as caught:
            run('sample', ensemble='laguerre', n=4, output=str(self.tmp / 'x.csv'))
        self.assertEqual(caught.exception.returncode, 2)

    def test_p_below_n(self):
        with self.assertRaises(CommandError) as caught:
            run('sample', ensemble='laguerre', n=4, p=3.0, output=str(self.tmp / 'x.csv'))
        self.assertEqual(caught.exception.returncode, 3)


@override_settings(RMTLAB=lab_settings(GRID_STEP=0.05))
class TableAndTestCommandTests(TempDirMixin, SimpleTestCase):
    def test_tw_table(self):
        payload = json.loads(run('tw_table', beta=2, cache_dir=str(self.tmp)))
        self.assertEqual(payload['label'], 'F2')
        self.assertAlmostEqual(payload['mean'], -1.7711, delta=1e-2)
        self.assertEqual(payload['points'], 361)

    def test_tw_table_bad_beta(self):
        with self.assertRaises(CommandError) as caught:
            run('tw_table', beta=3, cache_dir=str(self.tmp))
        self.assertEqual(caught.exception.returncode, 3)

    def test_sphericity(self):
        data = write_complex_csv(self.tmp / 'data.csv', complex_gaussian(10, 400, 91))
        report_path = self.tmp / 'report.csv'
        payload = json.loads(run('sphericity', str(data), alpha=0.05, cache_dir=str(self.tmp), report=str(report_path)))
        self.assertEqual((payload['n'], payload['p']), (10, 400))
        self.assertIn(payload['decision'], ('reject', 'retain'))
        self.assertEqual(json.loads((self.tmp / 'report.json').read_text()), payload)

    def test_sphericity_parse_error(self):
        path = self.tmp / 'bad.csv'
        path.write_text('1.0,2.0\n3.0,x\n')
        with self.assertRaises(CommandError) as caught:
            run('sphericity', str(path), cache_dir=str(self.tmp))
        self.assertEqual(caught.exception.returncode, 3)


class ExperimentCommandTests(TempDirMixin, SimpleTestCase):
    def test_unknown_experiment(self):
        with self.assertRaises(CommandError) as caught:
            run('experiment', 'fig9', output_dir=str(self.tmp))
        self.assertEqual(caught.exception.returncode, 2)

    def test_runs_with_flags(self):
        out = run('experiment', 'fig4_rates', points=10, betas=[1.0], output_dir=str(self.tmp))
        self.assertIn(str(self.tmp / 'fig4_rates' / 'rates.csv'), out)
        self.assertTrue((self.tmp / 'fig4_rates' / 'summary.json').exists())

    def test_config_file(self):
        config = self.tmp / 'fig1.toml'
        config.write_text('n = 4\np = 20\nreplicates = 5\n')
        run('experiment', 'fig1_compare', config=str(config), output_dir=str(self.tmp), master_seed=2)
        summary = json.loads((self.tmp / 'fig1_compare' / 'summary.json').read_text())
        self.assertEqual(summary['config']['replicates'], 5)
        self.assertEqual(summary['master_seed'], 2)


class ConvergenceCommandTests(TempDirMixin, SimpleTestCase):
    def test_prints_csv(self):
        out = run('convergence', n=3, p_list=[30.0, 300.0], replicates=20, output_dir=str(self.tmp))
        lines = out.strip().splitlines()
        self.assertEqual(lines[0], 'p,ks_max,ks_min,ks_median,ks_null_scale')
        self.assertEqual(len(lines), 3)
