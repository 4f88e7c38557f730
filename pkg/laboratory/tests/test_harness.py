import json
import math

import numpy as np
import pandas as pd
from django.test import SimpleTestCase, override_settings

from laboratory.config import EXPERIMENT_DEFAULTS, ExperimentConfig
from laboratory.exceptions import DomainError, InputError, NumericError, ParameterError, ParseError, UsageError
from laboratory.harness import (
    convergence_scan, read_complex_matrix, run_experiment, run_replicates, sphericity_test,
)
from laboratory.tracy_widom import build_tw_table, convolve_self, solve_painleve2

from .utils import LAPACK, TempDirMixin, lab_settings


def complex_gaussian(n, p, seed):
    generator = np.random.default_rng(seed)
    return (generator.standard_normal((n, p)) + 1j * generator.standard_normal((n, p))) / math.sqrt(2.0)


def write_complex_csv(path, data, header=False):
    n, p = data.shape
    values = np.empty((n, 2 * p))
    values[:, 0::2] = data.real
    values[:, 1::2] = data.imag
    columns = [f"{part}_{j}" for j in range(1, p + 1) for part in ('re', 'im')]
    pd.DataFrame(values, columns=columns).to_csv(path, index=False, header=header)
    return path


class ExperimentConfigTests(TempDirMixin, SimpleTestCase):
    def test_defaults(self):
        config = ExperimentConfig.build('fig1_compare')
        self.assertEqual((config.n, config.p, config.beta), (50, 1250000, 2.0))
        self.assertEqual(config.replicates, 10000)
        self.assertEqual(config.master_seed, 0)

    def test_every_experiment_has_valid_defaults(self):
        for experiment_id in EXPERIMENT_DEFAULTS:
            with self.subTest(experiment_id=experiment_id):
                ExperimentConfig.build(experiment_id)

    def test_flags_override_file_override_defaults(self):
        path = self.tmp / 'run.json'
        path.write_text(json.dumps({'n': 10, 'p': 40, 'replicates': 5}))
        config = ExperimentConfig.build('fig1_compare', path, {'replicates': 7, 'beta': None})
        self.assertEqual((config.n, config.p, config.replicates, config.beta), (10, 40, 7, 2.0))

    def test_toml_file(self):
        path = self.tmp / 'run.toml'
        path.write_text('n = 12\np = 48.5\nmaster_seed = 9\n')
        config = ExperimentConfig.build('fig3_extremes', path)
        self.assertEqual((config.n, config.p, config.master_seed), (12, 48.5, 9))

    def test_unknown_experiment_and_key(self):
        with self.assertRaises(UsageError):
            ExperimentConfig.build('fig9')
        with self.assertRaises(UsageError):
            ExperimentConfig.build('fig1_compare', overrides={'colour': 'red'})
        with self.assertRaises(UsageError):
            ExperimentConfig.build('fig1_compare', self.tmp / 'missing.json')

    def test_malformed_file(self):
        path = self.tmp / 'broken.json'
        path.write_text('{\n  "n": 10,\n  "p": oops\n}')
        with self.assertRaises(ParseError) as caught:
            ExperimentConfig.build('fig1_compare', path)
        self.assertEqual(caught.exception.row, 3)

    def test_invalid_values(self):
        with self.assertRaises(ParameterError):
            ExperimentConfig.build('fig1_compare', overrides={'n': 10, 'p': 5})
        with self.assertRaises(ParameterError):
            ExperimentConfig.build('fig1_compare', overrides={'replicates': 0})
        with self.assertRaises(ParameterError):
            ExperimentConfig.build('sphericity_level', overrides={'alpha': 1.0})

    def test_hash_ignores_locations(self):
        first = ExperimentConfig.build('fig1_compare', overrides={'output_dir': self.tmp / 'a'})
        second = ExperimentConfig.build('fig1_compare', overrides={'output_dir': self.tmp / 'b', 'cache_dir': self.tmp})
        other_seed = ExperimentConfig.build('fig1_compare', overrides={'master_seed': 1})
        self.assertEqual(first.config_hash, second.config_hash)
        self.assertNotEqual(first.config_hash, other_seed.config_hash)
        self.assertEqual(first.provenance()['version'], '1.2.0')


class RunReplicatesTests(SimpleTestCase):
    PARAMS = {'n': 6, 'p': 30.0, 'beta': 2.0}

    def test_independent_of_chunk_size(self):
        streams = np.arange(17)
        with override_settings(RMTLAB=lab_settings(CHUNK_SIZE=250)):
            whole = run_replicates('laguerre_summary', self.PARAMS, 3, streams)
        with override_settings(RMTLAB=lab_settings(CHUNK_SIZE=4)):
            chunked = run_replicates('laguerre_summary', self.PARAMS, 3, streams)
        self.assertEqual(whole.shape, (17, 4))
        np.testing.assert_array_equal(whole, chunked)

    def test_rows_follow_stream_order(self):
        forward = run_replicates('laguerre_extremes', self.PARAMS, 3, [0, 1, 2])
        backward = run_replicates('laguerre_extremes', self.PARAMS, 3, [2, 1, 0])
        np.testing.assert_array_equal(forward, backward[::-1])
        self.assertTrue(np.all(forward[:, 0] < forward[:, 1]))


class ExperimentRunTests(TempDirMixin, SimpleTestCase):
    def build(self, experiment_id, output_dir=None, **overrides):
        overrides.setdefault('cache_dir', self.tmp / 'cache')
        overrides['output_dir'] = output_dir or self.tmp / 'out'
        return ExperimentConfig.build(experiment_id, overrides=overrides)

    def test_fig1_reruns_are_byte_identical(self):
        first = run_experiment(self.build('fig1_compare', self.tmp / 'a', n=5, p=50, replicates=20))
        second = run_experiment(self.build('fig1_compare', self.tmp / 'b', n=5, p=50, replicates=20))
        for name in ('laguerre_transformed.csv', 'hermite.csv', 'laguerre_transformed.json', 'hermite.json'):
            with self.subTest(name=name):
                self.assertEqual((first.output_dir / name).read_bytes(), (second.output_dir / name).read_bytes())
        self.assertEqual(set(first.summary), {'replicates', 'ks_max', 'ks_min', 'ks_range', 'ks_median'})

    def test_sidecar_provenance(self):
        config = self.build('fig1_compare', n=4, p=20, replicates=3, master_seed=11)
        result = run_experiment(config)
        meta = json.loads((result.output_dir / 'hermite.json').read_text())
        self.assertEqual(meta['master_seed'], 11)
        self.assertEqual(meta['config_hash'], config.config_hash)
        self.assertEqual(meta['columns'], ['replicate', 'max', 'min', 'range', 'median'])

    def test_fig4_rates(self):
        result = run_experiment(self.build('fig4_rates', points=50))
        frame = pd.read_csv(result.output_dir / 'rates.csv')
        self.assertEqual(len(frame), 100)
        self.assertEqual(list(frame.columns), ['beta', 'x', 'rate_max', 'rate_min', 'gamma_oracle'])
        self.assertLess(result.summary['max_abs_oracle_difference'], 5e-3)

    @override_settings(RMTLAB=LAPACK)
    def test_fig1_transformed_laguerre_matches_hermite(self):
        """
        2000 replicates instead of 10^4: the two-sample null 99% point is about
        0.052, and the transform leaves a shift of about n / sqrt(p) in x.
        """
        result = run_experiment(self.build('fig1_compare', replicates=2000))
        for key in ('ks_max', 'ks_min', 'ks_median'):
            with self.subTest(key=key):
                self.assertLessEqual(result.summary[key], 0.1)

    @override_settings(RMTLAB=LAPACK)
    def test_fig3_beta4_matches_the_sqrt2_convention(self):
        result = run_experiment(self.build('fig3_extremes', beta=4.0, replicates=1000, grid_step=0.05))
        summary = result.summary
        self.assertNotIn('ks_max', summary)
        self.assertTrue((result.output_dir / 'lambda0_overlay_unscaled.csv').exists())
        self.assertLess(summary['ks_min_sqrt2'], 0.25)
        self.assertGreater(summary['ks_min_unscaled'], 0.4)
        self.assertLess(summary['ks_min_sqrt2'], summary['ks_min_unscaled'])

    @override_settings(RMTLAB=LAPACK)
    def test_fig3_beta2_extremes(self):
        """
        2000 replicates instead of 10^4. Each bound is the 10^4 threshold plus
        the extra sampling error: KS null 99% point about 0.036, correlation
        standard error about 0.022, quadrant standard error about 0.01. The
        largest eigenvalue also carries the 2n left out of its centering.
        """
        result = run_experiment(self.build('fig3_extremes', replicates=2000, grid_step=0.05))
        summary = result.summary
        self.assertLessEqual(summary['ks_min'], 0.08)
        self.assertLess(abs(summary['correlation']), 0.1)
        self.assertLess(abs(summary['quadrant_difference']), 0.045)
        self.assertLess(summary['ks_max'], 0.15)

    @override_settings(RMTLAB=LAPACK)
    def test_square_condition(self):
        """n sigma_min^2 is exactly exponential for square complex data; only sigma_max carries finite-n bias."""
        result = run_experiment(self.build('square_condition', n=20, replicates=400))
        frame = pd.read_csv(result.output_dir / 'kappa_over_n.csv')
        self.assertEqual(len(frame), 400)
        self.assertTrue((frame['kappa_over_n'] > 0.0).all())
        self.assertTrue((result.output_dir / 'edelman_overlay.csv').exists())
        self.assertLess(result.summary['ks_edelman'], 0.2)

    def test_unknown_experiment(self):
        config = self.build('fig1_compare', n=4, p=20, replicates=2)
        config.experiment_id = 'fig9'
        with self.assertRaises(UsageError):
            run_experiment(config)

    def test_concentration_counts_fall_with_t(self):
        result = run_experiment(self.build('concentration', n=10, replicates=200, t_list=[0.5, 1.5, 3.0]))
        frame = pd.read_csv(result.output_dir / 'concentration.csv')
        self.assertTrue(np.all(np.diff(frame['exceedances']) <= 0))
        self.assertTrue(result.summary['all_hold'])

    @override_settings(RMTLAB=lab_settings(CONCENTRATION_C=0.1))
    def test_concentration_fails_when_a_bound_is_exceeded(self):
        config = self.build('concentration', n=10, replicates=20, t_list=[0.5, 10.0])
        with self.assertRaises(NumericError) as caught:
            run_experiment(config)
        self.assertEqual(caught.exception.diagnostics['t'], [0.5])
        frame = pd.read_csv(self.tmp / 'out' / 'concentration' / 'concentration.csv')
        self.assertEqual(list(frame['holds']), [False, True])
        summary = json.loads((self.tmp / 'out' / 'concentration' / 'summary.json').read_text())
        self.assertFalse(summary['summary']['all_hold'])

    @override_settings(RMTLAB=LAPACK)
    def test_sphericity_level(self):
        """
        Null rejection rate over 500 eigenvalue-law datasets. p = 5e7 keeps the
        centering bias of alpha_n (kappa - beta_n), about 4 n^(7/6) / sqrt(p),
        small next to the spread of U+V.
        """
        result = run_experiment(self.build('sphericity_level', p=50_000_000, replicates=500, grid_step=0.05))
        self.assertGreaterEqual(result.summary['rejection_rate'], 0.02)
        self.assertLessEqual(result.summary['rejection_rate'], 0.09)


@override_settings(RMTLAB=LAPACK)
class ConvergenceScanTests(TempDirMixin, SimpleTestCase):
    def test_large_p_is_close_to_hermite(self):
        frame = convergence_scan(5, [5_000_000], 2.0, 400, seed=4, output_dir=self.tmp)
        self.assertEqual(list(frame.columns), ['p', 'ks_max', 'ks_min', 'ks_median', 'ks_null_scale'])
        self.assertLess(frame.loc[0, 'ks_max'], 0.15)
        self.assertLess(frame.loc[0, 'ks_median'], 0.15)
        self.assertTrue((self.tmp / 'convergence_scan' / 'convergence.csv').exists())

    def test_small_p_is_further_away(self):
        frame = convergence_scan(5, [5, 5_000_000], 2.0, 400, seed=4)
        self.assertGreater(frame.loc[0, 'ks_max'], frame.loc[1, 'ks_max'])

    def test_single_replicate(self):
        frame = convergence_scan(5, [50], 1.0, 1, seed=0)
        self.assertEqual(len(frame), 1)
        self.assertEqual(frame.loc[0, 'ks_null_scale'], math.sqrt(2.0))
        self.assertTrue(0.0 <= frame.loc[0, 'ks_max'] <= 1.0)

    def test_p_below_n(self):
        with self.assertRaises(ParameterError):
            convergence_scan(5, [4], 2.0, 10, seed=0)


class SphericityTestTests(TempDirMixin, SimpleTestCase):
    @classmethod
    def setUpClass(cls):
        super().setUpClass()
        cls.conv = convolve_self(build_tw_table(2, solve_painleve2()))

    def run_test(self, data, alpha=0.05, **kwargs):
        path = write_complex_csv(self.tmp / 'data.csv', data, **kwargs)
        return sphericity_test(path, alpha, conv=self.conv)

    def assertConsistent(self, report):
        self.assertEqual(report.rejected, abs(report.statistic) > report.critical_value_at_alpha)
        self.assertEqual(report.rejected, report.p_value < report.alpha)

    def test_null_data(self):
        report = self.run_test(complex_gaussian(20, 2000, 71))
        self.assertEqual((report.n, report.p), (20, 2000))
        self.assertGreater(report.kappa, 1.0)
        self.assertConsistent(report)

    def test_consistency_at_several_levels(self):
        data = complex_gaussian(20, 2000, 72)
        for alpha in (0.01, 0.05, 0.5, 0.99):
            with self.subTest(alpha=alpha):
                self.assertConsistent(self.run_test(data, alpha))

    def test_scale_invariance(self):
        data = complex_gaussian(20, 2000, 73)
        base = self.run_test(data)
        scaled = self.run_test(7.3 * data)
        self.assertAlmostEqual(base.statistic, scaled.statistic, places=9)
        self.assertEqual(base.decision, scaled.decision)

    def test_unequal_variances_are_rejected(self):
        data = complex_gaussian(20, 2000, 74)
        data[0] *= 3.0
        report = self.run_test(data)
        self.assertTrue(report.rejected)
        self.assertConsistent(report)

    def test_header_row(self):
        data = complex_gaussian(4, 10, 75)
        without = self.run_test(data)
        with_header = self.run_test(data, header=True)
        self.assertEqual(without.statistic, with_header.statistic)

    def test_p_not_above_n(self):
        with self.assertRaises(DomainError):
            self.run_test(complex_gaussian(5, 5, 76))

    def test_real_data(self):
        path = self.tmp / 'real.csv'
        path.write_text('1.0,0.0,2.0,0.0\n3.0,0.0,4.0,0.0\n')
        with self.assertRaises(DomainError):
            read_complex_matrix(path)

    def test_odd_column_count(self):
        path = self.tmp / 'odd.csv'
        path.write_text('1.0,0.5,2.0\n3.0,0.5,4.0\n')
        with self.assertRaises(InputError):
            read_complex_matrix(path)

    def test_parse_error_location(self):
        path = self.tmp / 'bad.csv'
        path.write_text('re_1,im_1\n1.0,0.5\n2.0,oops\n')
        with self.assertRaises(ParseError) as caught:
            read_complex_matrix(path)
        self.assertEqual((caught.exception.row, caught.exception.column), (3, 2))

    def test_missing_file(self):
        with self.assertRaises(InputError):
            read_complex_matrix(self.tmp / 'absent.csv')
