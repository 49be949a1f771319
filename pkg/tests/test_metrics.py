#!/usr/bin/env python3
"""
邊際分佈指標測試
"""
import unittest
import sys
import os

import numpy as np

# 添加專案根目錄到 Python 路徑
sys.path.insert(0, os.path.dirname(os.path.dirname(os.path.abspath(__file__))))

from core.marginal_metrics import (
    bootstrap_metrics, compute_metric_report, compute_metrics, max_sliced_wasserstein, mmd_rbf,
    random_directions, sliced_wasserstein, wasserstein,
)
from models.metric_report import MetricReport, PointCloud
from utils.validators import ShapeMismatchError


class TestWasserstein(unittest.TestCase):
    """測試精確 Wasserstein 距離"""

    def setUp(self):
        self.p = np.random.default_rng(0).standard_normal((20, 2))
        self.shift = np.array([3.0, 4.0])

    def test_translation(self):
        """測試平移 (3,4) 時 W₁ = W₂ = 5"""
        q = self.p + self.shift
        self.assertAlmostEqual(wasserstein(self.p, q, order=1), 5.0, places=9)
        self.assertAlmostEqual(wasserstein(self.p, q, order=2), 5.0, places=9)

    def test_identical_and_repeated(self):
        """測試相同點雲與重複點雲的距離為 0"""
        self.assertAlmostEqual(wasserstein(self.p, self.p, order=1), 0.0, places=12)

        small = self.p[:5]
        repeated = np.concatenate([small, small])
        self.assertAlmostEqual(wasserstein(small, repeated, order=1), 0.0, places=8)
        self.assertAlmostEqual(wasserstein(small, repeated, order=2), 0.0, places=4)

    def test_unequal_sizes(self):
        """測試不等大小時使用網路單純形法"""
        p = np.array([[0.0], [2.0]])
        q = np.array([[1.0]])
        self.assertAlmostEqual(wasserstein(p, q, order=1), 1.0, places=10)
        self.assertAlmostEqual(wasserstein(p, q, order=2), 1.0, places=10)

    def test_invalid_inputs(self):
        """測試維度不一致與不支援的階數"""
        with self.assertRaises(ShapeMismatchError):
            wasserstein(self.p, np.zeros((3, 3)))
        with self.assertRaises(ValueError):
            wasserstein(self.p, self.p, order=3)
        with self.assertRaises(ValueError):
            wasserstein(np.array([[np.nan, 0.0]]), self.p)


class TestSlicedWasserstein(unittest.TestCase):
    """測試切片與最大切片 Wasserstein 距離"""

    def test_one_dimensional_translation(self):
        """測試一維平移 2 時 SWD = MWD = 2"""
        p = np.random.default_rng(1).standard_normal(30)
        self.assertAlmostEqual(sliced_wasserstein(p, p + 2.0, n_projections=8), 2.0, places=9)
        self.assertAlmostEqual(max_sliced_wasserstein(p, p + 2.0, n_candidates=8), 2.0, places=9)

    def test_max_dominates_mean(self):
        """測試共用方向串流時 MWD >= SWD"""
        rng = np.random.default_rng(2)
        p = rng.standard_normal((40, 3))
        q = rng.standard_normal((40, 3)) * np.array([1.0, 2.0, 0.5])

        swd = sliced_wasserstein(p, q, n_projections=64, seed=4)
        mwd = max_sliced_wasserstein(p, q, n_candidates=128, refine_steps=10, seed=4)
        self.assertGreaterEqual(mwd, swd)

    def test_max_direction_refinement(self):
        """測試平移時最大方向收斂到平移方向"""
        p = np.random.default_rng(3).standard_normal((25, 2))
        value = max_sliced_wasserstein(p, p + np.array([3.0, 4.0]), n_candidates=256, refine_steps=50)
        self.assertGreater(value, 0.999 * 5.0)
        self.assertLessEqual(value, 5.0 + 1e-9)

    def test_random_directions(self):
        """測試方向為單位向量且可重現"""
        directions = random_directions(3, 10, seed=7)
        np.testing.assert_allclose(np.linalg.norm(directions, axis=1), 1.0)
        np.testing.assert_array_equal(directions, random_directions(3, 10, seed=7))

    def test_unequal_sizes(self):
        """測試不等大小的投影"""
        p = np.zeros((4, 2))
        q = np.zeros((6, 2))
        self.assertAlmostEqual(sliced_wasserstein(p, q, n_projections=4), 0.0, places=12)


class TestMmd(unittest.TestCase):
    """測試 RBF 核 MMD"""

    def test_identical_clouds(self):
        """測試相同點雲的 MMD 為 0"""
        p = np.random.default_rng(4).standard_normal((30, 2))
        self.assertAlmostEqual(mmd_rbf(p, p, unbiased=False), 0.0, places=7)
        self.assertEqual(mmd_rbf(p, p, unbiased=True), 0.0)

    def test_separated_clouds(self):
        """測試分離點雲的 MMD 為正且接近 √2"""
        p = np.zeros((10, 1))
        q = np.full((10, 1), 100.0)
        self.assertAlmostEqual(mmd_rbf(p, q, unbiased=False), np.sqrt(2.0), places=10)

    def test_validation(self):
        """測試頻寬與點數"""
        p = np.zeros((3, 1))
        with self.assertRaises(ValueError):
            mmd_rbf(p, p, bandwidth=0.0)
        with self.assertRaises(ValueError):
            mmd_rbf(p[:1], p, unbiased=True)


class TestMetricReport(unittest.TestCase):
    """測試多時間點的指標報告"""

    def setUp(self):
        rng = np.random.default_rng(5)
        self.reference = {0.0: rng.standard_normal((20, 2)), 0.5: rng.standard_normal((20, 2))}
        self.candidate = {0.5: self.reference[0.5] + np.array([3.0, 4.0]), 1.0: rng.standard_normal((20, 2))}

    def test_matched_times_only(self):
        """測試只比較共同的時間點"""
        report = compute_metric_report(self.reference, self.candidate, ["emd", "w2"])
        self.assertEqual(report.times, [0.5])
        self.assertAlmostEqual(report.values[0.5]["emd"], 5.0, places=9)
        self.assertEqual(sorted(report.flat_row()), ["0.5/emd", "0.5/w2"])
        self.assertEqual(report.metadata["metrics"], ["emd", "w2"])

    def test_all_metrics(self):
        """測試全部五種指標"""
        values = compute_metrics(self.reference[0.5], self.candidate[0.5], n_projections=16, n_candidates=16, refine_steps=5)
        self.assertEqual(sorted(values), ["emd", "mmd", "mwd", "swd", "w2"])
        self.assertTrue(all(v >= 0.0 for v in values.values()))

        with self.assertRaises(ValueError):
            compute_metrics(self.reference[0.5], self.candidate[0.5], ["energy"])

    def test_no_common_times(self):
        """測試沒有共同時間點"""
        with self.assertRaises(ValueError):
            compute_metric_report({0.0: self.reference[0.0]}, {1.0: self.candidate[1.0]}, ["emd"])

    def test_bootstrap(self):
        """測試子抽樣平均與標準差"""
        report = bootstrap_metrics(self.reference, self.candidate, ["emd", "mmd"], n_runs=3, subsample=10, seed=1)
        self.assertEqual(report.times, [0.5])
        self.assertIsNotNone(report.std)
        self.assertGreaterEqual(report.std[0.5]["emd"], 0.0)
        self.assertGreater(report.values[0.5]["emd"], 3.0)
        self.assertEqual(report.metadata["n_runs"], 3)
        self.assertIn("std", report.to_dict())

    def test_report_validation(self):
        """測試指標值必須非負有限"""
        with self.assertRaises(ValueError):
            MetricReport({0.0: {"emd": -1.0}})
        report = MetricReport()
        with self.assertRaises(ValueError):
            report.add(0.0, {"emd": np.nan})

    def test_point_cloud(self):
        """測試點雲的提升與平移"""
        cloud = PointCloud([1.0, 2.0, 3.0])
        self.assertEqual((cloud.n_points, cloud.dim), (3, 1))
        np.testing.assert_array_equal(cloud.translated([1.0]).points[:, 0], [2.0, 3.0, 4.0])


if __name__ == '__main__':
    unittest.main()
