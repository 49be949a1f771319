#!/usr/bin/env python3
"""
對角高斯測度、Cameron-Martin 範數與協方差測試
"""
import unittest
import sys
import os

import numpy as np

# 添加專案根目錄到 Python 路徑
sys.path.insert(0, os.path.dirname(os.path.dirname(os.path.abspath(__file__))))

from core.measures import (
    cm_norm_sq, cm_norm_sq_batch, empirical_mode_variance, identity_covariance,
    matern_covariance, matern_from_length_scale, matern_operator_params,
    roughened_empirical_covariance, sample_batch, trace_diagnostic,
)
from models.covariance import CovarianceKind, DiagonalCovariance, GaussianMeasure
from models.spectral import SpectralCoeffs
from utils.seeding import make_rng
from utils.validators import ShapeMismatchError


class TestDiagonalCovariance(unittest.TestCase):
    """測試 DiagonalCovariance 類別"""

    def test_creation(self):
        """測試建立與一維提升"""
        cov = DiagonalCovariance([1.0, 0.5, 0.25])
        self.assertEqual(cov.shape, (3, 1))
        self.assertEqual(cov.kind, CovarianceKind.CUSTOM)
        self.assertFalse(cov.is_ill_conditioned)

    def test_validation(self):
        """測試特徵值必須嚴格為正且有限"""
        with self.assertRaises(ValueError):
            DiagonalCovariance([1.0, 0.0])
        with self.assertRaises(ValueError):
            DiagonalCovariance([1.0, -2.0])
        with self.assertRaises(ValueError):
            DiagonalCovariance([1.0, np.inf])

    def test_ill_conditioned(self):
        """測試條件數判斷"""
        self.assertTrue(DiagonalCovariance([1.0, 1e-16]).is_ill_conditioned)

    def test_truncate_and_scale(self):
        """測試截斷與縮放"""
        cov = identity_covariance(6, 2, scale=0.5)
        self.assertEqual(cov.truncate(3).shape, (3, 2))
        self.assertEqual(cov.truncate(3).kind, CovarianceKind.IDENTITY)

        scaled = cov.scaled(4.0)
        np.testing.assert_allclose(scaled.lambdas, 2.0)
        self.assertEqual(scaled.kind, CovarianceKind.CUSTOM)
        self.assertEqual(scaled.params["scaled_from"], "identity")

    def test_gaussian_measure_shape(self):
        """測試平均值與協方差形狀必須一致"""
        cov = identity_covariance(4)
        measure = GaussianMeasure.centered(cov)
        self.assertTrue(measure.mean.allclose(SpectralCoeffs.zeros(4, 1)))

        with self.assertRaises(ShapeMismatchError):
            GaussianMeasure(SpectralCoeffs.zeros(3, 1), cov)


class TestMaternCovariance(unittest.TestCase):
    """測試 Matérn 運算子頻譜"""

    def test_operator_spectrum(self):
        """測試 λ_k = σ² (4π²k² + τ²)^(-α)"""
        cov = matern_covariance(2.0, 3.0, 1.5, 5, out_dim=2)
        k = np.arange(5)
        expected = 2.0 * (4.0 * np.pi ** 2 * k ** 2 + 9.0) ** (-1.5)

        self.assertEqual(cov.shape, (5, 2))
        np.testing.assert_allclose(cov.lambdas[:, 0], expected, rtol=1e-14)
        np.testing.assert_allclose(cov.lambdas[:, 1], expected, rtol=1e-14)
        self.assertEqual(cov.kind, CovarianceKind.MATERN_OPERATOR)

    def test_kernel_parameter_mapping(self):
        """測試 (ν, ℓ, σ²) -> (σ²_op, τ, α)，ν = 1/2 時 σ²_op = 2σ²τ"""
        sigma2, tau, alpha = matern_operator_params(0.5, 0.1, 1.0)
        self.assertAlmostEqual(alpha, 1.0)
        self.assertAlmostEqual(tau, 10.0)
        self.assertAlmostEqual(sigma2, 20.0, places=10)

        cov = matern_from_length_scale(0.5, 0.1, 1.0, 4)
        self.assertAlmostEqual(cov.lambdas[0, 0], 20.0 / 100.0, places=12)
        self.assertEqual(cov.params["nu"], 0.5)

    def test_invalid_parameters(self):
        """測試非正參數"""
        with self.assertRaises(ValueError):
            matern_covariance(1.0, 0.0, 1.0, 4)
        with self.assertRaises(ValueError):
            matern_operator_params(-0.5, 0.1, 1.0)


class TestRoughenedCovariance(unittest.TestCase):
    """測試資料驅動的粗糙化頻譜"""

    def setUp(self):
        """兩個樣本：k=0 相同，k=1、k=2 互為相反數"""
        first = np.array([[1.0], [1.0], [1.0j]])
        self.samples = np.stack([first, np.array([[1.0], [-1.0], [-1.0j]])])

    def test_mode_variance(self):
        """測試逐模態經驗變異數"""
        np.testing.assert_allclose(empirical_mode_variance(self.samples)[:, 0], [0.0, 2.0, 2.0])

    def test_roughened_spectrum(self):
        """測試 λ_k = max(k,1)² · max(v_k, floor)"""
        cov = roughened_empirical_covariance(self.samples, floor_eps=1e-8, exponent=2)
        np.testing.assert_allclose(cov.lambdas[:, 0], [1e-8, 2.0, 8.0])
        self.assertEqual(cov.kind, CovarianceKind.ROUGHENED_EMPIRICAL)
        self.assertEqual(cov.params["n_samples"], 2)

        linear = roughened_empirical_covariance(self.samples, exponent=1)
        np.testing.assert_allclose(linear.lambdas[1:, 0], [2.0, 4.0])

    def test_invalid_inputs(self):
        """測試樣本不足與不支援的指數"""
        with self.assertRaises(ValueError):
            roughened_empirical_covariance(self.samples[:1])
        with self.assertRaises(ValueError):
            roughened_empirical_covariance(self.samples, exponent=3)

    def test_sequence_input(self):
        """測試以 SpectralCoeffs 列表輸入"""
        samples = [SpectralCoeffs(s) for s in self.samples]
        cov = roughened_empirical_covariance(samples)
        self.assertEqual(cov.shape, (3, 1))

        with self.assertRaises(ShapeMismatchError):
            roughened_empirical_covariance([SpectralCoeffs.zeros(3, 1), SpectralCoeffs.zeros(2, 1)])


class TestCameronMartinNorm(unittest.TestCase):
    """測試 Cameron-Martin 平方範數"""

    def setUp(self):
        self.coeffs = SpectralCoeffs(np.array([[2.0], [1.0j], [0.0]]))
        self.cov = DiagonalCovariance([1.0, 0.5, 2.0])

    def test_weighted_sum(self):
        """測試 |f_0|²/λ_0 + 2 Σ |f_k|²/λ_k"""
        self.assertAlmostEqual(cm_norm_sq(self.coeffs, self.cov, 3), 8.0)
        self.assertAlmostEqual(cm_norm_sq(self.coeffs, self.cov, 2), 8.0)
        self.assertAlmostEqual(cm_norm_sq(self.coeffs, self.cov, 1), 4.0)

    def test_batch(self):
        """測試批次計算"""
        batch = np.stack([self.coeffs.coeffs, 2.0 * self.coeffs.coeffs])
        np.testing.assert_allclose(cm_norm_sq_batch(batch, self.cov.lambdas, 3), [8.0, 32.0])

    def test_mode_bounds(self):
        """測試加總模態數超出範圍"""
        with self.assertRaises(ShapeMismatchError):
            cm_norm_sq(self.coeffs, self.cov, 4)
        with self.assertRaises(ShapeMismatchError):
            cm_norm_sq(self.coeffs, self.cov, 0)

    def test_dimension_mismatch(self):
        """測試輸出維度不一致"""
        with self.assertRaises(ShapeMismatchError):
            cm_norm_sq(SpectralCoeffs.zeros(3, 2), self.cov, 3)


class TestSampling(unittest.TestCase):
    """測試高斯測度取樣"""

    def test_second_moments(self):
        """測試 E|x_k|² = λ_k 且 k=0 為實數"""
        cov = DiagonalCovariance([2.0, 1.0, 0.5, 0.25])
        draws = sample_batch(GaussianMeasure.centered(cov), make_rng(5), 40000)

        self.assertEqual(draws.shape, (40000, 4, 1))
        np.testing.assert_array_equal(draws[:, 0, :].imag, 0.0)
        second_moment = np.mean(np.abs(draws) ** 2, axis=0)[:, 0]
        np.testing.assert_allclose(second_moment, cov.lambdas[:, 0], rtol=0.05)

        # k>=1 的實部與虛部各為 λ/2
        self.assertAlmostEqual(float(np.var(draws[:, 2, 0].real)), 0.25, delta=0.02)

    def test_mean_shift(self):
        """測試平均值平移"""
        cov = identity_covariance(3, scale=0.01)
        mean = SpectralCoeffs(np.array([[1.0], [0.5 - 0.5j], [0.0]]))
        draws = sample_batch(GaussianMeasure(mean, cov), make_rng(6), 20000)
        np.testing.assert_allclose(draws.mean(axis=0), mean.coeffs, atol=0.01)

    def test_reproducible(self):
        """測試相同種子得到相同樣本"""
        measure = GaussianMeasure.centered(identity_covariance(4, 2))
        first = sample_batch(measure, make_rng(9, 1), 10)
        second = sample_batch(measure, make_rng(9, 1), 10)
        other = sample_batch(measure, make_rng(9, 2), 10)

        np.testing.assert_array_equal(first, second)
        self.assertFalse(np.allclose(first, other))


class TestTraceDiagnostic(unittest.TestCase):
    """測試跡類診斷"""

    def test_matern_is_trace_class(self):
        """測試 α = 1 的 Matérn 尾端衰減約為 k^-2"""
        result = trace_diagnostic(matern_covariance(1.0, 1.0, 1.0, 64))
        self.assertAlmostEqual(result.tail_decay_exponent, 2.0, delta=0.01)
        self.assertTrue(result.trace_class_flag)

    def test_identity_is_not_trace_class(self):
        """測試白雜訊的衰減指數為 0"""
        result = trace_diagnostic(identity_covariance(32))
        self.assertAlmostEqual(result.tail_decay_exponent, 0.0, places=10)
        self.assertFalse(result.trace_class_flag)
        self.assertAlmostEqual(result.to_dict()["trace_truncated"], 32.0)

    def test_too_few_modes(self):
        """測試模態數不足"""
        with self.assertRaises(ValueError):
            trace_diagnostic(identity_covariance(7))


if __name__ == '__main__':
    unittest.main()
