#!/usr/bin/env python3
"""
速度場測試：解析高斯速度場與經驗 softmax 速度場
"""
import unittest
import sys
import os

import numpy as np

# 添加專案根目錄到 Python 路徑
sys.path.insert(0, os.path.dirname(os.path.dirname(os.path.abspath(__file__))))

from core.gaussian_case import gaussian_case_setup
from core.measures import identity_covariance, matern_covariance, sample_batch
from core.oracles import velocity_mismatch_factor
from core.sources import MeasureSource
from core.velocity_fields import (
    AnalyticGaussianField, EmpiricalSoftmaxField, field_difference_cm, field_error_profile,
)
from models.spectral import SpectralCoeffs
from utils.seeding import make_rng
from utils.validators import ShapeMismatchError


def random_coeffs(rng, batch, n_modes, dim, scale=1.0):
    coeffs = scale * (rng.standard_normal((batch, n_modes, dim)) + 1j * rng.standard_normal((batch, n_modes, dim)))
    coeffs[:, 0, :] = coeffs[:, 0, :].real
    return coeffs


class TestAnalyticGaussianField(unittest.TestCase):
    """測試 AnalyticGaussianField 類別"""

    def setUp(self):
        self.data_cov = matern_covariance(1.0, 2.0, 1.0, 4, out_dim=2)
        self.noise_cov = identity_covariance(4, 2, scale=0.05)
        self.mean = SpectralCoeffs(random_coeffs(np.random.default_rng(1), 1, 4, 2)[0])
        self.field_a = AnalyticGaussianField(self.mean, self.data_cov, self.noise_cov)
        self.field_b = AnalyticGaussianField(None, self.data_cov, self.noise_cov)
        self.x = random_coeffs(np.random.default_rng(2), 5, 4, 2)

    def test_boundary_at_one(self):
        """測試 t=1 時 v(x) = x"""
        velocity = self.field_a.eval_batch(self.x, np.ones(5))
        np.testing.assert_allclose(velocity, self.x, atol=1e-12)

    def test_boundary_at_zero(self):
        """測試 t=0 時 v(x) = m - x"""
        velocity = self.field_a.eval_batch(self.x, np.zeros(5))
        np.testing.assert_allclose(velocity, self.mean.coeffs - self.x, atol=1e-12)

    def test_difference_independent_of_input(self):
        """測試兩個速度場的差與輸入無關"""
        t = np.full(5, 0.37)
        difference = self.field_a.eval_batch(self.x, t) - self.field_b.eval_batch(self.x, t)
        factor = velocity_mismatch_factor(self.data_cov.lambdas, self.noise_cov.lambdas, 0.37)

        for row in difference:
            np.testing.assert_allclose(row, factor * self.mean.coeffs, atol=1e-12)

    def test_single_eval(self):
        """測試單一輸入評估與批次一致"""
        x = SpectralCoeffs(self.x[0])
        single = self.field_a.eval(x, 0.5)
        batch = self.field_a.eval_batch(self.x[:1], np.array([0.5]))[0]
        np.testing.assert_allclose(single.coeffs, batch)

    def test_shape_checks(self):
        """測試形狀不一致與時間範圍"""
        with self.assertRaises(ShapeMismatchError):
            AnalyticGaussianField(None, self.data_cov, identity_covariance(3, 2))
        with self.assertRaises(ShapeMismatchError):
            self.field_a.eval(SpectralCoeffs.zeros(4, 1), 0.5)
        with self.assertRaises(ValueError):
            self.field_a.eval_batch(self.x, np.full(5, 1.2))

    def test_fingerprint(self):
        """測試指紋對狀態敏感且穩定"""
        self.assertEqual(self.field_a.fingerprint(), self.field_a.fingerprint())
        self.assertNotEqual(self.field_a.fingerprint(), self.field_b.fingerprint())
        self.assertEqual(len(self.field_a.fingerprint()), 16)

    def test_field_difference_cm(self):
        """測試單點的 CM 速度差"""
        x = SpectralCoeffs(self.x[0])
        value = field_difference_cm(self.field_a, self.field_b, x, 0.0, self.noise_cov, 4)
        weights = np.array([1.0, 2.0, 2.0, 2.0])[:, None]
        expected = float(np.sum(weights * np.abs(self.mean.coeffs) ** 2 / 0.05))
        self.assertAlmostEqual(value, expected, places=8)


class TestEmpiricalSoftmaxField(unittest.TestCase):
    """測試 EmpiricalSoftmaxField 類別"""

    def setUp(self):
        self.noise_cov = identity_covariance(3, 1, scale=0.1)
        self.atom = np.array([[[1.0], [0.5 - 0.5j], [0.2j]]])

    def test_single_atom(self):
        """測試單一樣本時 v = (p - x)/(1-t)"""
        field = EmpiricalSoftmaxField(self.atom, self.noise_cov)
        x = random_coeffs(np.random.default_rng(4), 3, 3, 1)
        t = np.array([0.0, 0.3, 0.8])

        expected = (self.atom - x) / (1.0 - t)[:, None, None]
        np.testing.assert_allclose(field.eval_batch(x, t), expected, atol=1e-12)

    def test_boundary_at_one(self):
        """測試 t=1 時 v(x) = x"""
        pool = np.concatenate([self.atom, -self.atom])
        for bandwidth in (0.0, 0.2):
            with self.subTest(bandwidth=bandwidth):
                field = EmpiricalSoftmaxField(pool, self.noise_cov, bandwidth=bandwidth)
                x = random_coeffs(np.random.default_rng(5), 2, 3, 1)
                np.testing.assert_array_equal(field.eval_batch(x, np.ones(2)), x)

    def test_weights_normalized(self):
        """測試後驗權重每列總和為 1"""
        rng = np.random.default_rng(6)
        pool = random_coeffs(rng, 20, 3, 1)
        field = EmpiricalSoftmaxField(pool, self.noise_cov)
        weights = field.weights_batch(random_coeffs(rng, 8, 3, 1), rng.random(8) * 0.99)

        self.assertEqual(weights.shape, (8, 20))
        np.testing.assert_allclose(weights.sum(axis=1), 1.0)
        self.assertTrue(np.all(weights >= 0.0))

    def test_symmetric_weights(self):
        """測試對稱樣本池在原點的權重相等"""
        field = EmpiricalSoftmaxField(np.concatenate([self.atom, -self.atom]), self.noise_cov)
        weights = field.weights_batch(np.zeros((1, 3, 1), dtype=np.complex128), np.array([0.5]))
        np.testing.assert_allclose(weights, [[0.5, 0.5]])

    def test_permutation_equivariant(self):
        """測試重排樣本池時權重隨之重排、速度場不變"""
        rng = np.random.default_rng(11)
        pool = random_coeffs(rng, 12, 3, 1)
        order = rng.permutation(12)
        field = EmpiricalSoftmaxField(pool, self.noise_cov)
        permuted = EmpiricalSoftmaxField(pool[order], self.noise_cov)
        x = random_coeffs(rng, 6, 3, 1)
        t = np.array([0.0, 0.1, 0.4, 0.6, 0.9, 0.95])

        np.testing.assert_allclose(permuted.weights_batch(x, t), field.weights_batch(x, t)[:, order], atol=1e-12)
        np.testing.assert_allclose(permuted.eval_batch(x, t), field.eval_batch(x, t), atol=1e-12)

    def test_default_is_exact_field(self):
        """測試預設速度場等於 (E - x)/(1-t)，權重只依 κ"""
        rng = np.random.default_rng(12)
        pool = random_coeffs(rng, 9, 3, 1)
        x = random_coeffs(rng, 4, 3, 1)
        t = np.array([0.05, 0.3, 0.6, 0.85])
        field = EmpiricalSoftmaxField(pool, self.noise_cov)
        self.assertEqual(field.bandwidth, 0.0)

        mode_weights = np.array([1.0, 2.0, 2.0])[None, None, :, None]
        distance = np.abs(x[:, None] - t[:, None, None, None] * pool[None]) ** 2
        log_w = -np.sum(mode_weights * distance / (2.0 * (1.0 - t[:, None, None, None]) ** 2 * 0.1), axis=(2, 3))
        log_w -= log_w.max(axis=1, keepdims=True)
        weights = np.exp(log_w) / np.exp(log_w).sum(axis=1, keepdims=True)
        posterior_mean = np.einsum("bn,nkd->bkd", weights, pool)

        expected = (posterior_mean - x) / (1.0 - t)[:, None, None]
        np.testing.assert_allclose(field.eval_batch(x, t), expected, rtol=1e-9, atol=1e-12)

    def test_collapse_to_nearest(self):
        """測試接近 t=1 時退化為最近的樣本"""
        pool = np.concatenate([self.atom, -self.atom])
        field = EmpiricalSoftmaxField(pool, self.noise_cov, t_collapse=0.01)
        x = 0.995 * self.atom

        weights = field.weights_batch(x, np.array([0.995]))
        np.testing.assert_array_equal(weights, [[1.0, 0.0]])

    def test_concentrates_on_matching_atom(self):
        """測試 x = t p 時權重集中在 p"""
        rng = np.random.default_rng(7)
        pool = random_coeffs(rng, 10, 3, 1, scale=3.0)
        field = EmpiricalSoftmaxField(pool, self.noise_cov)
        weights = field.weights_batch(0.9 * pool[4:5], np.array([0.9]))
        self.assertEqual(int(np.argmax(weights[0])), 4)
        self.assertGreater(weights[0, 4], 0.99)

    def test_chunked_evaluation(self):
        """測試分塊評估與一次評估一致"""
        rng = np.random.default_rng(8)
        pool = random_coeffs(rng, 15, 3, 1)
        field = EmpiricalSoftmaxField(pool, self.noise_cov, bandwidth=0.2)
        x = random_coeffs(rng, 1100, 3, 1)
        t = rng.random(1100) * 0.98

        chunked = field.eval_batch(x, t)
        direct = np.concatenate([field.eval_batch(x[:500], t[:500]), field.eval_batch(x[500:], t[500:])])
        np.testing.assert_allclose(chunked, direct, atol=1e-12)

    def test_validation(self):
        """測試建構參數驗證"""
        with self.assertRaises(ValueError):
            EmpiricalSoftmaxField(np.empty((0, 3, 1)), self.noise_cov)
        with self.assertRaises(ShapeMismatchError):
            EmpiricalSoftmaxField(np.zeros((2, 4, 1)), self.noise_cov)
        with self.assertRaises(ValueError):
            EmpiricalSoftmaxField(self.atom, self.noise_cov, bandwidth=-0.1)
        with self.assertRaises(ValueError):
            EmpiricalSoftmaxField(self.atom, self.noise_cov, bandwidth=0.2)
        with self.assertRaises(ValueError):
            EmpiricalSoftmaxField(self.atom, self.noise_cov, t_collapse=1.5)


class TestFieldErrorProfile(unittest.TestCase):
    """測試速度場誤差剖面"""

    def test_profile_against_reference(self):
        """測試同一速度場的誤差為 0，不同速度場的誤差在 t=1 為 0"""
        case = gaussian_case_setup(0.5, 1, n_modes=8, m_points=16)
        source = MeasureSource(case.measure_a)

        same = field_error_profile(case.field_a, case.field_a, source, case.noise, [0.2, 0.8], n_samples=16)
        self.assertEqual(same, {0.2: 0.0, 0.8: 0.0})

        profile = field_error_profile(case.field_b, case.field_a, source, case.noise, [0.0, 1.0], n_samples=16)
        self.assertGreater(profile[0.0], 0.0)
        self.assertAlmostEqual(profile[1.0], 0.0, places=12)

    def test_softmax_median_error_decreasing(self):
        """測試 softmax 速度場對解析速度場的中位數誤差隨樣本池 100、1000、5000 嚴格下降"""
        case = gaussian_case_setup(1.5, 1, n_modes=4, m_points=16)
        source = MeasureSource(case.measure_a)
        rng = make_rng(0, 1)
        t_grid = [0.2, 0.5, 0.8]

        errors = []
        for size in (100, 1000, 5000):
            field = EmpiricalSoftmaxField(sample_batch(case.measure_a, rng, size), case.noise.cov, bandwidth=0.0)
            profile = field_error_profile(field, case.field_a, source, case.noise, t_grid, n_samples=200, statistic="median")
            errors.append(sum(profile.values()))

        self.assertLess(errors[1], errors[0])
        self.assertLess(errors[2], errors[1])

    def test_unknown_statistic(self):
        """測試未知的誤差統計量"""
        case = gaussian_case_setup(0.5, 1, n_modes=8, m_points=16)
        with self.assertRaises(ValueError):
            field_error_profile(case.field_a, case.field_a, MeasureSource(case.measure_a), case.noise, [0.5], statistic="max")

    def test_shape_mismatch(self):
        """測試形狀不一致"""
        case = gaussian_case_setup(0.5, 1, n_modes=8, m_points=16)
        other = AnalyticGaussianField(None, matern_covariance(1.0, 1.0, 1.0, 4), identity_covariance(4))
        with self.assertRaises(ShapeMismatchError):
            field_error_profile(other, case.field_a, MeasureSource(case.measure_a), case.noise, [0.5])


if __name__ == '__main__':
    unittest.main()
