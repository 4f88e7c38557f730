import math

import numpy as np
from django.test import SimpleTestCase, override_settings

from laboratory.ensembles import HermiteParams, LaguerreParams, Spectrum, sample_hermite, sample_laguerre
from laboratory.exceptions import DomainError, InputError
from laboratory.numerics import RngStream, ks_distance
from laboratory.scaling import (
    ScaledEmpiricalMeasure, condition_constants, condition_number, condition_statistic,
    extreme_centerings_beta2, hermite_transform, inverse_hermite_transform, smallest_centering,
)
from laboratory.tracy_widom import build_tw_table, convolve_self, solve_painleve2, table_moments

from .utils import LAPACK


def _spectrum(values, params):
    return Spectrum(np.sort(np.asarray(values, dtype=float)), params)


class HermiteTransformTests(SimpleTestCase):
    def test_center_maps_to_zero(self):
        params = LaguerreParams(1, 7, 2.0)
        self.assertEqual(hermite_transform(_spectrum([14.0], params), params).x[0], 0.0)

    def test_worked_value(self):
        params = LaguerreParams(1, 8, 2.0)
        self.assertAlmostEqual(hermite_transform(_spectrum([24.0], params), params).x[0], math.sqrt(2.0), places=14)

    def test_round_trip(self):
        params = LaguerreParams(3, 40, 1.5)
        spectrum = _spectrum([20.0, 55.5, 90.25], params)
        back = inverse_hermite_transform(hermite_transform(spectrum, params), params)
        np.testing.assert_allclose(back, spectrum.values, rtol=1e-14)

    def test_order_and_extremes_are_preserved(self):
        params = LaguerreParams(8, 30, 2.0)
        spectrum = sample_laguerre(params, RngStream(51))
        x = hermite_transform(spectrum, params).x
        self.assertTrue(np.all(np.diff(x) > 0.0))
        self.assertEqual(int(np.argmax(x)), int(np.argmax(spectrum.values)))
        self.assertEqual(int(np.argmin(x)), int(np.argmin(spectrum.values)))

    def test_invariant_under_rescaling(self):
        """Scaling lambda and p together by rho scales x by sqrt(rho)."""
        params = LaguerreParams(2, 10, 2.0)
        wider = LaguerreParams(2, 25, 2.0)
        values = np.array([12.0, 31.0])
        x = hermite_transform(_spectrum(values, params), params).x
        rescaled = hermite_transform(_spectrum(values * 2.5, wider), wider).x
        np.testing.assert_allclose(rescaled, x * math.sqrt(2.5), rtol=1e-13)

    def test_lower_edge(self):
        params = LaguerreParams(2, 50, 2.0)
        sample = hermite_transform(_spectrum([1.0, 2.0], params), params)
        self.assertAlmostEqual(sample.lower_edge, -math.sqrt(50.0), places=14)
        self.assertTrue(np.all(sample.x > sample.lower_edge))

    def test_mismatched_params(self):
        params = LaguerreParams(2, 10, 2.0)
        with self.assertRaises(InputError):
            hermite_transform(_spectrum([1.0, 2.0], params), LaguerreParams(2, 11, 2.0))
        with self.assertRaises(InputError):
            hermite_transform(_spectrum([1.0, 2.0], HermiteParams(2, 2.0)), params)


class CenteringTests(SimpleTestCase):
    def test_joint_extreme_constants(self):
        centering = extreme_centerings_beta2(LaguerreParams(50, 125_000, 2.0))
        self.assertAlmostEqual(centering.mu_low, 240_000.0, places=6)
        self.assertAlmostEqual(centering.mu_high, 260_000.0, places=6)
        self.assertAlmostEqual(centering.sigma, 368.4, delta=0.05)

    def test_condition_constants(self):
        alpha_n, beta_n = condition_constants(LaguerreParams(50, 125_000, 2.0))
        self.assertAlmostEqual(alpha_n, 1357.2, delta=0.2)
        self.assertAlmostEqual(beta_n, 1.04, places=12)

    def test_beta2_only(self):
        for fn in (extreme_centerings_beta2, condition_constants):
            with self.subTest(fn=fn.__name__):
                with self.assertRaises(DomainError):
                    fn(LaguerreParams(5, 50, 1.0))

    def test_smallest_centering(self):
        mu, sigma = smallest_centering(LaguerreParams(4, 9, 1.0))
        self.assertAlmostEqual(mu, -3.0, places=14)
        self.assertAlmostEqual(sigma, 3.0 * 4 ** (-1 / 6), places=14)
        mu, sigma = smallest_centering(LaguerreParams(50, 125_000, 2.0))
        self.assertAlmostEqual(mu, extreme_centerings_beta2(LaguerreParams(50, 125_000, 2.0)).mu_low, places=6)

    def test_smallest_centering_needs_laguerre(self):
        with self.assertRaises(InputError):
            smallest_centering(HermiteParams(4, 1.0))


class ConditionNumberTests(SimpleTestCase):
    def test_values(self):
        self.assertEqual(condition_number([1.0, 4.0]), 2.0)
        self.assertEqual(condition_number([3.0, 3.0, 3.0]), 1.0)
        params = LaguerreParams(2, 5, 1.0)
        self.assertEqual(condition_number(_spectrum([2.0, 18.0], params)), 3.0)

    def test_nonpositive_values(self):
        with self.assertRaises(DomainError):
            condition_number([0.0, 1.0])
        with self.assertRaises(DomainError):
            condition_number([-1.0, 1.0])

    def test_statistic_at_the_centering(self):
        params = LaguerreParams(50, 125_000, 2.0)
        values = np.full(50, 100.0)
        values[-1] = 100.0 * 1.04 ** 2
        self.assertAlmostEqual(condition_statistic(values, params), 0.0, delta=1e-9)


class ScaledMeasureTests(SimpleTestCase):
    def test_atoms_and_weights(self):
        measure = ScaledEmpiricalMeasure.from_sample(np.array([2.0, -2.0, 0.0, 4.0]))
        np.testing.assert_array_equal(measure.atoms, [-1.0, 0.0, 1.0, 2.0])
        self.assertAlmostEqual(measure.weights.sum(), 1.0, places=15)
        self.assertEqual(measure.cdf(0.0), 0.5)

    @override_settings(RMTLAB=LAPACK)
    def test_close_to_the_semicircle(self):
        params = LaguerreParams(200, 20_000, 2.0)
        measure = ScaledEmpiricalMeasure.from_sample(hermite_transform(sample_laguerre(params, RngStream(52)), params))
        radius = math.sqrt(2.0 * params.beta)
        self.assertTrue(np.all(np.abs(measure.atoms) <= 1.15 * radius))
        self.assertLessEqual(measure.ks_to_semicircle(params.beta), 0.05)

    @override_settings(RMTLAB=LAPACK)
    def test_mean_distance_over_seeds(self):
        params = LaguerreParams(200, 20_000, 2.0)
        distances = [
            ScaledEmpiricalMeasure.from_sample(
                hermite_transform(sample_laguerre(params, RngStream(seed)), params),
            ).ks_to_semicircle(params.beta)
            for seed in range(100, 120)
        ]
        self.assertLessEqual(float(np.mean(distances)), 0.05)

    @override_settings(RMTLAB=LAPACK)
    def test_hermite_draw_is_close_to_the_semicircle(self):
        measure = ScaledEmpiricalMeasure.from_sample(sample_hermite(HermiteParams(200, 1.0), RngStream(53)).values)
        self.assertLessEqual(measure.ks_to_semicircle(1.0), 0.05)


@override_settings(RMTLAB=LAPACK)
class ConditionStatisticLawTests(SimpleTestCase):
    """
    Studentized condition numbers at n=50, p=5e6 against U+V.

    The centering 1 + 2 sqrt(n/p) leaves a bias of about 4 n^(7/6) / sqrt(p)
    (0.17 here) and each edge law carries a finite-n shift of order n^(-2/3),
    so the thresholds add both to the sampling error of 1000 replicates.
    """
    N, P, REPLICATES = 50, 5_000_000, 1000

    @classmethod
    def setUpClass(cls):
        super().setUpClass()
        cls.conv = convolve_self(build_tw_table(2, solve_painleve2()))
        params = LaguerreParams(cls.N, cls.P, 2.0)
        cls.statistic = np.array([
            condition_statistic(sample_laguerre(params, RngStream(54, k)), params) for k in range(cls.REPLICATES)
        ])

    def test_mean(self):
        mean, _ = table_moments(self.conv)
        bias = 4.0 * self.N ** (7.0 / 6.0) / math.sqrt(self.P)
        se = self.statistic.std(ddof=1) / math.sqrt(self.REPLICATES)
        self.assertLess(abs(self.statistic.mean() - mean), bias + 4.0 * se + 0.1)

    def test_distribution(self):
        self.assertLessEqual(ks_distance(self.statistic, self.conv.cdf_at), 0.15)
