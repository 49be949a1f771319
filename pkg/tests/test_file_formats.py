#!/usr/bin/env python3
"""
檔案格式讀寫測試
"""
import json
import unittest
import sys
import os
import tempfile
from pathlib import Path

import numpy as np
import pandas as pd
import torch

# 添加專案根目錄到 Python 路徑
sys.path.insert(0, os.path.dirname(os.path.dirname(os.path.abspath(__file__))))

from core.field_trainer import SpectralMLP, TrainedField
from core.measures import matern_covariance
from models.sde import TrajectoryDataset
from models.spectral import TimeGrid
from utils.file_formats import (
    convert_csv_trajectories, load_weights, read_covariance_csv, read_fkl_json, read_snapshot_csv,
    read_trajectories, save_weights, write_covariance_csv, write_snapshot_csv, write_trajectories,
)
from utils.validators import FileFormatError


class FileFormatTestCase(unittest.TestCase):
    """使用暫存目錄的測試基底"""

    def setUp(self):
        self.temp_dir = tempfile.TemporaryDirectory()
        self.root = Path(self.temp_dir.name)

    def tearDown(self):
        self.temp_dir.cleanup()


class TestTrajectoryFile(FileFormatTestCase):
    """測試 FKLT 軌跡檔"""

    def setUp(self):
        super().setUp()
        paths = np.random.default_rng(0).standard_normal((3, 5, 2))
        self.ds = TrajectoryDataset(TimeGrid(5, 2.0), paths, {"system": "lotka-volterra", "seed": 4})

    def test_write_and_read(self):
        """測試寫入後讀回相同資料與 manifest"""
        path = write_trajectories(self.root / "lv.fklt", self.ds)
        loaded = read_trajectories(path)

        np.testing.assert_array_equal(loaded.paths, self.ds.paths)
        self.assertEqual(loaded.grid.physical_horizon, 2.0)
        self.assertEqual(loaded.provenance["seed"], 4)

        sidecar = json.loads((self.root / "lv.json").read_text(encoding="utf-8"))
        self.assertEqual(sidecar["shape"], [3, 5, 2])
        self.assertEqual(sidecar["system"], "lotka-volterra")

    def test_bad_magic(self):
        """測試錯誤的 magic"""
        path = self.root / "bad.fklt"
        path.write_bytes(b"NOPE" + bytes(16))
        with self.assertRaises(FileFormatError):
            read_trajectories(path)

    def test_truncated_payload(self):
        """測試負載不完整"""
        path = write_trajectories(self.root / "cut.fklt", self.ds, sidecar=False)
        path.write_bytes(path.read_bytes()[:-8])
        with self.assertRaises(FileFormatError):
            read_trajectories(path)
        self.assertFalse((self.root / "cut.json").exists())

    def test_missing_file(self):
        """測試檔案不存在"""
        with self.assertRaises(ValueError):
            read_trajectories(self.root / "missing.fklt")


class TestWeightsFile(FileFormatTestCase):
    """測試 FKLW 權重檔"""

    def test_save_and_load(self):
        """測試讀回的網路輸出相同"""
        torch.manual_seed(1)
        model = SpectralMLP(4, 2, width=8, depth=2, activation="silu", input_scale=0.5)
        ema_model = SpectralMLP(4, 2, width=8, depth=2, activation="silu", input_scale=0.5)

        path = save_weights(self.root / "net.fklw", model, ema_model)
        loaded_model, loaded_ema = load_weights(path)

        self.assertEqual(loaded_model.activation, "silu")
        self.assertEqual(loaded_model.input_scale, 0.5)

        rng = np.random.default_rng(2)
        x = rng.standard_normal((3, 4, 2)) + 1j * rng.standard_normal((3, 4, 2))
        x[:, 0, :] = x[:, 0, :].real
        t = np.array([0.1, 0.5, 0.9])
        for original, restored in ((model, loaded_model), (ema_model, loaded_ema)):
            np.testing.assert_array_equal(
                TrainedField(restored, 1).eval_batch(x, t), TrainedField(original, 1).eval_batch(x, t)
            )

    def test_corrupted(self):
        """測試錯誤的 magic 與大小"""
        torch.manual_seed(1)
        model = SpectralMLP(3, 1, width=4, depth=1)
        path = save_weights(self.root / "net.fklw", model, model)

        path.write_bytes(path.read_bytes()[:-4])
        with self.assertRaises(FileFormatError):
            load_weights(path)

        path.write_bytes(b"FKLT" + bytes(20))
        with self.assertRaises(FileFormatError):
            load_weights(path)


class TestCsvFiles(FileFormatTestCase):
    """測試 CSV 格式"""

    def test_covariance_csv(self):
        """測試協方差 CSV 讀回相同特徵值"""
        cov = matern_covariance(1.0, 2.0, 1.0, 5, out_dim=2)
        loaded = read_covariance_csv(write_covariance_csv(self.root / "cov.csv", cov))
        np.testing.assert_array_equal(loaded.lambdas, cov.lambdas)

    def test_incomplete_covariance_csv(self):
        """測試 (k, d) 網格不完整"""
        path = self.root / "cov.csv"
        pd.DataFrame({"k": [0, 1, 1], "d": [0, 0, 1], "lambda": [1.0, 0.5, 0.5]}).to_csv(path, index=False)
        with self.assertRaises(FileFormatError):
            read_covariance_csv(path)

    def test_snapshot_csv(self):
        """測試快照 CSV"""
        clouds = {0.0: np.array([[1.0, 2.0], [3.0, 4.0]]), 0.5: np.array([[5.0, 6.0]])}
        loaded = read_snapshot_csv(write_snapshot_csv(self.root / "snap.csv", clouds))

        self.assertEqual(sorted(loaded), [0.0, 0.5])
        np.testing.assert_array_equal(loaded[0.0], clouds[0.0])
        np.testing.assert_array_equal(loaded[0.5], clouds[0.5])

    def test_convert_long_csv(self):
        """測試長格式軌跡 CSV 轉換"""
        rows = [
            {"path": p, "time": t, "dim0": p + t, "dim1": p - t}
            for p in (0, 1) for t in (0.0, 0.5, 1.0, 1.5)
        ]
        path = self.root / "long.csv"
        pd.DataFrame(rows).sample(frac=1.0, random_state=0).to_csv(path, index=False)

        ds = convert_csv_trajectories(path)
        self.assertEqual(ds.paths.shape, (2, 4, 2))
        self.assertEqual(ds.grid.physical_horizon, 1.5)
        np.testing.assert_allclose(ds.paths[1, :, 0], [1.0, 1.5, 2.0, 2.5])

    def test_convert_rejects_uneven_times(self):
        """測試非等距時間"""
        path = self.root / "uneven.csv"
        pd.DataFrame({"path": [0, 0, 0], "time": [0.0, 0.1, 0.5], "dim0": [1.0, 2.0, 3.0]}).to_csv(path, index=False)
        with self.assertRaises(FileFormatError):
            convert_csv_trajectories(path)

    def test_fkl_json(self):
        """測試讀取正反向估計"""
        path = self.root / "fkl.json"
        path.write_text(json.dumps({"forward": {"value": 1.5}, "reverse": {"value": 2.5}}), encoding="utf-8")
        self.assertEqual(read_fkl_json(path), (1.5, 2.5))

        path.write_text(json.dumps({"forward": {"value": 1.5}}), encoding="utf-8")
        with self.assertRaises(FileFormatError):
            read_fkl_json(path)


if __name__ == '__main__':
    unittest.main()
