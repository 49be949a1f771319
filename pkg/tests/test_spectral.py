#!/usr/bin/env python3
"""
頻譜轉換與函數表示測試
"""
import unittest
import sys
import os

import numpy as np

# 添加專案根目錄到 Python 路徑
sys.path.insert(0, os.path.dirname(os.path.dirname(os.path.abspath(__file__))))

from core.spectral_transform import (
    from_spectral, from_spectral_batch, l2_norm_sq, max_modes_for, nyquist_free_modes, one_sided_weights,
    to_spectral, to_spectral_batch, transform_length,
)
from models.spectral import FunctionSample, SpectralCoeffs, TimeGrid
from utils.validators import ResolutionError


def periodic_nodes(m_points):
    return np.arange(m_points) / m_points


class TestTimeGrid(unittest.TestCase):
    """測試 TimeGrid 類別"""

    def test_locations_and_physical_times(self):
        """測試取樣位置"""
        grid = TimeGrid(5, physical_horizon=8.0)
        np.testing.assert_allclose(grid.locations, [0.0, 0.25, 0.5, 0.75, 1.0])
        np.testing.assert_allclose(grid.physical_times, [0.0, 2.0, 4.0, 6.0, 8.0])
        self.assertEqual(grid.max_modes, 3)

    def test_index_of(self):
        """測試網格索引查詢"""
        grid = TimeGrid(5)
        self.assertEqual(grid.index_of(0.0), 0)
        self.assertEqual(grid.index_of(0.5), 2)
        self.assertEqual(grid.index_of(1.0), 4)

        # 不在網格上的時間不做內插
        with self.assertRaises(ValueError):
            grid.index_of(0.3)
        with self.assertRaises(ValueError):
            grid.index_of(1.5)

    def test_grid_validation(self):
        """測試網格驗證"""
        with self.assertRaises(ValueError):
            TimeGrid(1)
        with self.assertRaises(ValueError):
            TimeGrid(10, physical_horizon=0.0)


class TestFunctionSample(unittest.TestCase):
    """測試 FunctionSample 類別"""

    def test_one_dimensional_values_promoted(self):
        """測試一維函數值提升為 M x 1"""
        sample = FunctionSample(TimeGrid(4), [1.0, 2.0, 3.0, 4.0])
        self.assertEqual(sample.values.shape, (4, 1))
        self.assertEqual(sample.out_dim, 1)

    def test_invalid_values(self):
        """測試函數值驗證"""
        with self.assertRaises(ValueError):
            FunctionSample(TimeGrid(4), np.zeros((3, 1)))
        with self.assertRaises(ValueError):
            FunctionSample(TimeGrid(3), [0.0, np.nan, 1.0])


class TestSpectralCoeffs(unittest.TestCase):
    """測試 SpectralCoeffs 類別"""

    def test_zero_mode_must_be_real(self):
        """測試 k=0 係數虛部必須為零"""
        with self.assertRaises(ValueError):
            SpectralCoeffs(np.array([[1.0 + 0.5j], [0.0]]))

    def test_arithmetic(self):
        """測試係數的線性運算"""
        a = SpectralCoeffs(np.array([[1.0], [1.0 + 2.0j]]))
        b = SpectralCoeffs(np.array([[0.5], [-1.0j]]))

        self.assertTrue((a + b).allclose(SpectralCoeffs(np.array([[1.5], [1.0 + 1.0j]]))))
        self.assertTrue((a - b).allclose(SpectralCoeffs(np.array([[0.5], [1.0 + 3.0j]]))))
        self.assertTrue((2 * a).allclose(a + a))
        self.assertTrue((-a + a).allclose(SpectralCoeffs.zeros(2, 1)))

    def test_shape_mismatch(self):
        """測試形狀不一致時的錯誤"""
        with self.assertRaises(ValueError):
            SpectralCoeffs.zeros(2, 1) + SpectralCoeffs.zeros(3, 1)

    def test_truncate(self):
        """測試截斷"""
        coeffs = SpectralCoeffs(np.array([[1.0], [2.0j], [3.0]]))
        self.assertEqual(coeffs.truncate(2).n_modes, 2)
        with self.assertRaises(ValueError):
            coeffs.truncate(4)

    def test_to_dict(self):
        """測試字典轉換"""
        data = SpectralCoeffs(np.array([[1.0], [2.0j]])).to_dict()
        self.assertEqual(data["n_modes"], 2)
        self.assertEqual(data["imag"][1], [2.0])


class TestSpectralTransform(unittest.TestCase):
    """測試頻譜轉換"""

    def test_mode_limits(self):
        """測試可解析模態數"""
        self.assertEqual(max_modes_for(16), 9)
        self.assertEqual(transform_length(16, mirror=True), 30)
        self.assertEqual(max_modes_for(16, mirror=True), 16)
        np.testing.assert_array_equal(one_sided_weights(3), [1.0, 2.0, 2.0])

    def test_nyquist_weight(self):
        """測試偶數長度保留到 Nyquist 模態時該模態權重為 1"""
        np.testing.assert_array_equal(one_sided_weights(9, length=16)[-2:], [2.0, 1.0])
        np.testing.assert_array_equal(one_sided_weights(9)[-1], 2.0)
        np.testing.assert_array_equal(one_sided_weights(8, length=15)[1:], 2.0)
        np.testing.assert_array_equal(one_sided_weights(5, length=16)[1:], 2.0)

        self.assertEqual(nyquist_free_modes(16), 8)
        self.assertEqual(nyquist_free_modes(15), max_modes_for(15))
        self.assertEqual(nyquist_free_modes(16, mirror=True), 15)

    def test_parseval_with_nyquist(self):
        """測試含 Nyquist 成分時的 Parseval 恆等式"""
        alternating = 0.5 + (-1.0) ** np.arange(16)
        coeffs = SpectralCoeffs(to_spectral_batch(alternating[:, None], max_modes_for(16)))
        self.assertAlmostEqual(coeffs.coeffs[8, 0].real, 1.0, places=12)
        self.assertAlmostEqual(l2_norm_sq(coeffs, length=16), 1.25, places=12)

        rng = np.random.default_rng(21)
        values = rng.standard_normal((16, 2))
        full = SpectralCoeffs(to_spectral_batch(values, max_modes_for(16)))
        self.assertAlmostEqual(l2_norm_sq(full, length=16), float(np.sum(np.mean(values ** 2, axis=0))), places=12)

    def test_constant_function(self):
        """測試常數函數只有 k=0 係數，且等於樣本平均"""
        values = np.full((16, 2), 3.0)
        values[:, 1] = -1.5
        coeffs = to_spectral_batch(values, 5)

        np.testing.assert_allclose(coeffs[0].real, [3.0, -1.5])
        np.testing.assert_allclose(np.abs(coeffs[1:]), 0.0, atol=1e-14)

    def test_zero_mode_equals_mean(self):
        """測試 k=0 係數等於各維度的樣本平均"""
        rng = np.random.default_rng(3)
        sample = FunctionSample(TimeGrid(32), rng.standard_normal((32, 3)))
        coeffs = to_spectral(sample, 8)

        np.testing.assert_allclose(coeffs.coeffs[0].real, sample.values.mean(axis=0))
        np.testing.assert_array_equal(coeffs.coeffs[0].imag, 0.0)

    def test_sine_coefficient(self):
        """測試正弦函數的係數 sin(2πx) -> f_1 = -i/2"""
        values = np.sin(2.0 * np.pi * periodic_nodes(16))[:, None]
        coeffs = to_spectral_batch(values, 4)

        self.assertAlmostEqual(coeffs[1, 0].real, 0.0, places=12)
        self.assertAlmostEqual(coeffs[1, 0].imag, -0.5, places=12)

    def test_parseval_below_nyquist(self):
        """測試 Parseval 恆等式 (頻率低於 Nyquist)"""
        x = periodic_nodes(32)
        values = (0.7 + 1.2 * np.sin(2.0 * np.pi * x) + 0.4 * np.cos(2.0 * np.pi * 3.0 * x))[:, None]
        coeffs = SpectralCoeffs(to_spectral_batch(values, 8))

        expected = 0.7 ** 2 + 1.2 ** 2 / 2.0 + 0.4 ** 2 / 2.0
        self.assertAlmostEqual(l2_norm_sq(coeffs), expected, places=12)
        self.assertAlmostEqual(l2_norm_sq(coeffs), float(np.mean(values ** 2)), places=12)

    def test_reconstruction_with_all_modes(self):
        """測試保留全部模態時可以精確重建"""
        rng = np.random.default_rng(11)
        grid = TimeGrid(16)
        sample = FunctionSample(grid, rng.standard_normal((16, 2)))

        coeffs = to_spectral(sample, max_modes_for(16))
        restored = from_spectral(coeffs, grid)
        np.testing.assert_allclose(restored.values, sample.values, atol=1e-12)

    def test_truncated_reconstruction(self):
        """測試截斷後只保留低頻成分"""
        x = periodic_nodes(32)
        low = np.sin(2.0 * np.pi * x)
        high = 0.3 * np.cos(2.0 * np.pi * 10.0 * x)
        coeffs = to_spectral_batch((low + high)[:, None], 4)

        restored = from_spectral_batch(coeffs, 32)
        np.testing.assert_allclose(restored[:, 0], low, atol=1e-12)

    def test_batch_shapes(self):
        """測試批次轉換的形狀"""
        values = np.zeros((7, 20, 2))
        self.assertEqual(to_spectral_batch(values, 6).shape, (7, 6, 2))
        self.assertEqual(to_spectral_batch(values, 6, mirror=True).shape, (7, 6, 2))

    def test_resolution_error(self):
        """測試模態數超出網格解析範圍"""
        with self.assertRaises(ResolutionError):
            to_spectral_batch(np.zeros((16, 1)), max_modes_for(16) + 1)
        with self.assertRaises(ResolutionError):
            to_spectral_batch(np.zeros((16, 1)), 0)

        # ResolutionError 是 ValueError 的子類別
        self.assertTrue(issubclass(ResolutionError, ValueError))


if __name__ == '__main__':
    unittest.main()
