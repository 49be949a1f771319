#!/usr/bin/env python3
"""
SDE 模擬與快照擷取測試
"""
import unittest
import sys
import os

import numpy as np
from scipy.optimize import brentq

# 添加專案根目錄到 Python 路徑
sys.path.insert(0, os.path.dirname(os.path.dirname(os.path.abspath(__file__))))

from config.default_settings import SYSTEM_DEFAULTS
from core.sde_simulator import (
    build_system, equispaced_times, euler_maruyama, extract_snapshots, linear_sde_system,
    lotka_volterra_invariant, lotka_volterra_system, petal_output, petal_system,
    petal_transverse_variance, repressilator_system,
)
from models.sde import SimConfig, Snapshot, SplitRule, TrajectoryDataset
from models.spectral import TimeGrid
from utils.validators import SimulationDivergedError


class TestSimConfig(unittest.TestCase):
    """測試 SimConfig 類別"""

    def test_grid_size(self):
        """測試網格點數為 T/dt + 1"""
        for name, expected in (("lotka-volterra", 401), ("repressilator", 751), ("petal", 101)):
            with self.subTest(system=name):
                defaults = SYSTEM_DEFAULTS[name]
                cfg = SimConfig(defaults["horizon"], defaults["dt"], 2)
                self.assertEqual(cfg.m_points, expected)

    def test_invalid_ratio(self):
        """測試 T/dt 不是整數時拒絕"""
        with self.assertRaises(ValueError):
            SimConfig(1.0, 0.3, 10)
        with self.assertRaises(ValueError):
            SimConfig(1.0, 0.01, 0)
        with self.assertRaises(ValueError):
            SimConfig(-1.0, 0.01, 10)


class TestEulerMaruyama(unittest.TestCase):
    """測試 Euler-Maruyama 模擬"""

    def test_output_shapes(self):
        """測試各系統的軌跡形狀"""
        for name, dim in (("lotka-volterra", 2), ("repressilator", 3), ("petal", 2)):
            with self.subTest(system=name):
                defaults = SYSTEM_DEFAULTS[name]
                cfg = SimConfig(defaults["horizon"], defaults["dt"], 3, seed=1)
                ds = euler_maruyama(build_system(name), cfg)
                self.assertEqual(ds.paths.shape, (3, cfg.m_points, dim))
                self.assertEqual(ds.provenance["system"], name)

    def test_lotka_volterra_invariant(self):
        """測試無雜訊時守恆量幾乎不變"""
        ds = euler_maruyama(lotka_volterra_system(sigma=0.0), SimConfig(1.0, 1e-3, 5))
        invariant = lotka_volterra_invariant(ds.paths)
        change = np.max(np.abs(invariant - invariant[:, :1]))
        self.assertLess(change, 2e-3)

    def test_linear_sde_mean(self):
        """測試 E[Y_1] = m₀ e^c"""
        system = linear_sde_system(0.5, 0.1, dim=1, m0=2.0, var0=0.2)
        ds = euler_maruyama(system, SimConfig(1.0, 0.01, 4000, seed=2))
        self.assertAlmostEqual(float(ds.paths[:, -1, 0].mean()), 2.0 * np.exp(0.5), delta=0.05)

    def test_reproducible(self):
        """測試相同種子得到相同軌跡"""
        cfg = SimConfig(1.0, 0.1, 4, seed=5)
        first = euler_maruyama(build_system("repressilator"), cfg)
        second = euler_maruyama(build_system("repressilator"), cfg)
        np.testing.assert_array_equal(first.paths, second.paths)

    def test_divergence(self):
        """測試發散時回報步驟索引"""
        with self.assertRaises(SimulationDivergedError) as context:
            euler_maruyama(linear_sde_system(100.0, 0.1), SimConfig(2.0, 0.1, 10))
        self.assertGreater(context.exception.step_index, 0)
        self.assertLessEqual(context.exception.step_index, 20)

    def test_unknown_system(self):
        """測試未知系統名稱"""
        with self.assertRaises(ValueError):
            build_system("van-der-pol")


class TestPetal(unittest.TestCase):
    """測試花瓣分支系統"""

    def test_output_map(self):
        """測試主幹座標與分支旋轉"""
        points = petal_output(np.array([[0.25, 0.0, 0.0], [0.25, 0.0, 2.0]]), 1.0, 0.25, 8)
        np.testing.assert_allclose(points[0], [0.25, 0.25], atol=1e-12)
        np.testing.assert_allclose(points[1], [-0.25, 0.25], atol=1e-12)

    def test_transverse_variance(self):
        """測試橫向偏移的變異數接近 OU 解析值"""
        expected = petal_transverse_variance(4.0)
        self.assertAlmostEqual(expected, 0.0017539, places=6)

        # 單一分支時可由輸出的 y 座標還原 z
        ds = euler_maruyama(petal_system(branches=1), SimConfig(4.0, 0.04, 4000, seed=3))
        u = 0.8
        slope = 0.25 * 2.0 * np.pi * np.cos(2.0 * np.pi * u)
        norm = np.sqrt(1.0 + slope ** 2)
        z = (ds.paths[:, -1, 1] - 0.25 * np.sin(2.0 * np.pi * u)) * norm

        self.assertLess(abs(float(np.var(z)) - expected) / expected, 0.1)


class TestRepressilator(unittest.TestCase):
    """測試 repressilator 的漂移"""

    def test_symmetric_fixed_point(self):
        """測試對稱不動點 β/(1+x³) = x 上確定性漂移為 0"""
        x_star = brentq(lambda x: 10.0 / (1.0 + x ** 3) - x, 0.0, 10.0, xtol=1e-14)
        system = repressilator_system()

        drift = system.drift(0.0, np.full((1, 3), x_star))
        np.testing.assert_allclose(drift, 0.0, atol=1e-10)
        self.assertGreater(np.max(np.abs(system.drift(0.0, np.full((1, 3), x_star + 0.1)))), 1e-2)

    def test_cyclic_shift(self):
        """測試漂移對循環位移 (X₁,X₂,X₃) -> (X₂,X₃,X₁) 等變"""
        system = repressilator_system()
        y = np.random.default_rng(3).uniform(0.5, 3.0, (5, 3))
        shifted = np.roll(y, -1, axis=1)
        np.testing.assert_allclose(system.drift(0.0, shifted), np.roll(system.drift(0.0, y), -1, axis=1))


class TestSnapshots(unittest.TestCase):
    """測試快照擷取"""

    def setUp(self):
        paths = np.arange(4 * 5 * 2, dtype=np.float64).reshape(4, 5, 2)
        self.ds = TrajectoryDataset(TimeGrid(5), paths, {"system": "test"})

    def test_equispaced_times(self):
        """測試等距時間"""
        self.assertEqual(equispaced_times(5), [0.0, 0.25, 0.5, 0.75, 1.0])
        with self.assertRaises(ValueError):
            equispaced_times(1)

    def test_odd_train_even_val(self):
        """測試依位置交替劃分"""
        snapshots = extract_snapshots(self.ds, equispaced_times(5))
        self.assertEqual(snapshots.label_counts(), {"train": 3, "validation": 2})
        self.assertEqual(sorted(snapshots.clouds("validation")), [0.25, 0.75])
        np.testing.assert_array_equal(snapshots.clouds("train")[0.5], self.ds.paths[:, 2, :])

    def test_explicit(self):
        """測試明確標籤"""
        snapshots = extract_snapshots(self.ds, [0.0, 1.0], SplitRule.EXPLICIT, ["validation", "train"])
        self.assertEqual(list(snapshots.clouds("train")), [1.0])

        with self.assertRaises(ValueError):
            extract_snapshots(self.ds, [0.0, 1.0], SplitRule.EXPLICIT, ["train"])

    def test_all_shared_resample(self):
        """測試所有時間都有 train 與 validation，路徑不重疊"""
        snapshots = extract_snapshots(self.ds, [0.0, 0.5], SplitRule.ALL_SHARED_RESAMPLE, seed=1)
        self.assertEqual(snapshots.times, [0.0, 0.5])
        self.assertEqual(snapshots.label_counts(), {"train": 2, "validation": 2})

        train = snapshots.clouds("train")[0.0]
        validation = snapshots.clouds("validation")[0.0]
        self.assertEqual((len(train), len(validation)), (2, 2))
        combined = sorted(np.concatenate([train, validation])[:, 0])
        self.assertEqual(combined, sorted(self.ds.paths[:, 0, 0]))

    def test_off_grid_time(self):
        """測試不在網格上的時間"""
        with self.assertRaises(ValueError):
            extract_snapshots(self.ds, [0.1])

    def test_snapshot_validation(self):
        """測試快照標籤與形狀"""
        with self.assertRaises(ValueError):
            Snapshot(0.0, "test", np.zeros((3, 2)))
        with self.assertRaises(ValueError):
            Snapshot(0.0, "train", np.zeros(3))


if __name__ == '__main__':
    unittest.main()
