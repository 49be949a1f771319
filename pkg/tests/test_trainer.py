#!/usr/bin/env python3
"""
網路速度場訓練測試
"""
import unittest
import sys
import os

import numpy as np
import torch

# 添加專案根目錄到 Python 路徑
sys.path.insert(0, os.path.dirname(os.path.dirname(os.path.abspath(__file__))))

from core.field_trainer import (
    SpectralMLP, TrainConfig, TrainedField, feature_weights, pack_features, train_field,
    unpack_features,
)
from core.gaussian_case import gaussian_case_setup
from core.measures import sample_batch
from utils.seeding import make_rng
from utils.validators import ShapeMismatchError


def tiny_config(**overrides):
    values = dict(iterations=5, batch_size=16, width=16, depth=1, log_every=1, seed=3)
    values.update(overrides)
    return TrainConfig(**values)


class TestFeaturePacking(unittest.TestCase):
    """測試複數係數與實數特徵的轉換"""

    def test_pack_layout(self):
        """測試特徵長度 D(2K-1) 與 k=0 虛部被捨棄"""
        coeffs = np.array([[[1.0, 2.0], [3.0 + 4.0j, 5.0 - 6.0j]]])
        features = pack_features(coeffs)

        self.assertEqual(features.shape, (1, 6))
        np.testing.assert_array_equal(features[0], [1.0, 2.0, 3.0, 5.0, 4.0, -6.0])

    def test_unpack_inverts_pack(self):
        """測試反轉換"""
        rng = np.random.default_rng(0)
        coeffs = rng.standard_normal((4, 5, 2)) + 1j * rng.standard_normal((4, 5, 2))
        coeffs[:, 0, :] = coeffs[:, 0, :].real
        np.testing.assert_array_equal(unpack_features(pack_features(coeffs), 5, 2), coeffs)

    def test_feature_weights(self):
        """測試 L² 與 CM 權重"""
        lambdas = np.array([[0.5], [0.25], [2.0]])
        l2, cm = feature_weights(lambdas)

        self.assertEqual(len(l2), 5)
        np.testing.assert_array_equal(l2, [1.0, 2.0, 2.0, 2.0, 2.0])
        np.testing.assert_allclose(cm, [2.0, 8.0, 1.0, 8.0, 1.0])


class TestTrainConfig(unittest.TestCase):
    """測試 TrainConfig 類別"""

    def test_loss_weight_schedule(self):
        """測試 w 由 w_start 線性衰減到 w_end"""
        cfg = TrainConfig(iterations=11, w_start=1.0, w_end=0.2)
        self.assertAlmostEqual(cfg.w_at(0), 1.0)
        self.assertAlmostEqual(cfg.w_at(5), 0.6)
        self.assertAlmostEqual(cfg.w_at(10), 0.2)
        self.assertEqual(TrainConfig(iterations=1).w_at(0), 1.0)

    def test_from_preset(self):
        """測試實驗預設值與覆寫"""
        cfg = TrainConfig.from_preset("lotka-volterra", iterations=10, batch_size=None)
        self.assertEqual(cfg.iterations, 10)
        self.assertEqual(cfg.batch_size, 32)
        self.assertAlmostEqual(cfg.lr, 6.21e-4)
        self.assertEqual(cfg.t_sampler, "curriculum")

        with self.assertRaises(ValueError):
            TrainConfig.from_preset("unknown")

    def test_validation(self):
        """測試設定驗證"""
        with self.assertRaises(ValueError):
            TrainConfig(t_sampler="beta")
        with self.assertRaises(ValueError):
            TrainConfig(activation="relu6")
        with self.assertRaises(ValueError):
            TrainConfig(w_end=1.5)
        with self.assertRaises(ValueError):
            TrainConfig(lr=1e-3, lr_min=1e-2)
        with self.assertRaises(ValueError):
            TrainConfig(ema_rate=1.0)


class TestSpectralMLP(unittest.TestCase):
    """測試網路與邊界包裝"""

    def setUp(self):
        torch.manual_seed(0)
        self.model = SpectralMLP(4, 2, width=16, depth=2, input_scale=2.0)
        rng = np.random.default_rng(1)
        coeffs = rng.standard_normal((6, 4, 2)) + 1j * rng.standard_normal((6, 4, 2))
        coeffs[:, 0, :] = coeffs[:, 0, :].real
        self.coeffs = coeffs

    def test_layer_dims(self):
        """測試輸入包含時間嵌入與條件位元"""
        self.assertEqual(SpectralMLP.layer_dims(14, 16, 2), [14 + 16 + 2, 16, 16, 14])
        self.assertEqual(len(self.model.linear_layers()), 3)

    def test_exact_boundary(self):
        """測試 t=1 時輸出逐位元等於輸入"""
        for condition in (0, 1):
            with self.subTest(condition=condition):
                field = TrainedField(self.model, condition)
                velocity = field.eval_batch(self.coeffs, np.ones(6))
                np.testing.assert_array_equal(velocity, self.coeffs)

    def test_conditions_differ(self):
        """測試兩個條件位元給出不同的速度場"""
        t = np.full(6, 0.3)
        first = TrainedField(self.model, 0).eval_batch(self.coeffs, t)
        second = TrainedField(self.model, 1).eval_batch(self.coeffs, t)
        self.assertFalse(np.allclose(first, second))
        self.assertNotEqual(TrainedField(self.model, 0).fingerprint(), TrainedField(self.model, 1).fingerprint())

    def test_invalid_condition(self):
        """測試條件位元只能是 0 或 1"""
        with self.assertRaises(ValueError):
            TrainedField(self.model, 2)
        with self.assertRaises(ValueError):
            SpectralMLP(4, 2, activation="relu6")


class TestTrainField(unittest.TestCase):
    """測試速度場訓練"""

    def setUp(self):
        self.case = gaussian_case_setup(1.5, 1, n_modes=4, m_points=16)
        rng = make_rng(7)
        self.samples_a = sample_batch(self.case.measure_a, rng, 40)
        self.samples_b = sample_batch(self.case.measure_b, rng, 40)

    def test_short_training(self):
        """測試短訓練的輸出結構"""
        result = train_field(self.samples_a, self.samples_b, self.case.noise, tiny_config())

        self.assertEqual(len(result.loss_history), 5)
        self.assertTrue(np.all(np.isfinite(result.loss_history)))
        self.assertTrue(np.isfinite(result.initial_eval_loss))
        self.assertTrue(np.isfinite(result.final_eval_loss))
        self.assertIs(result.field_a.model, result.ema_model)
        self.assertEqual(result.field_b.condition, 1)

        data = result.to_dict()
        self.assertEqual(data["iterations"], 5)
        self.assertEqual(len(data["fingerprints"]), 2)

        x = self.samples_a[:3]
        np.testing.assert_array_equal(result.field_a.eval_batch(x, np.ones(3)), x)

    def test_every_sampler(self):
        """測試所有時間採樣方式都能訓練"""
        for sampler in ("uniform", "logit-normal", "importance", "curriculum"):
            with self.subTest(sampler=sampler):
                result = train_field(
                    self.samples_a, self.samples_b, self.case.noise, tiny_config(iterations=2, t_sampler=sampler)
                )
                self.assertEqual(len(result.loss_history), 2)

    def test_deterministic(self):
        """測試相同種子得到相同的損失紀錄"""
        first = train_field(self.samples_a, self.samples_b, self.case.noise, tiny_config())
        second = train_field(self.samples_a, self.samples_b, self.case.noise, tiny_config())
        self.assertEqual(first.loss_history, second.loss_history)

    def test_shape_mismatch(self):
        """測試樣本形狀與雜訊不一致"""
        with self.assertRaises(ShapeMismatchError):
            train_field(self.samples_a[:, :3], self.samples_b[:, :3], self.case.noise, tiny_config())
        with self.assertRaises(ValueError):
            train_field(self.samples_a[:0], self.samples_b, self.case.noise, tiny_config())


if __name__ == '__main__':
    unittest.main()
