"""
檔案格式讀寫

- FKLT：軌跡檔，"FKLT" + u32 版本 + u32 manifest 長度 + JSON manifest + f64le 負載 (path, time, dim)
- FKLW：網路權重檔，"FKLW" + u32 版本 + u32 層數 + u32 層維度 + 權重/偏差區塊 + EMA 區塊
  + 尾端 (u32 n_modes, u32 out_dim, u32 激活函數代碼, f64 input_scale)
- 協方差 CSV (k, d, lambda)、快照 CSV (time, dim0, ...)、長格式軌跡 CSV (path, time, dim0, ...)
- fkl 子命令的估計 JSON (forward / reverse)
"""
import json
import struct
from pathlib import Path
from typing import Dict, Tuple, Union

import numpy as np
import pandas as pd
import torch
from loguru import logger

from config.default_settings import (
    CSV_ENCODING, CSV_FLOAT_FORMAT, SUPPORTED_ACTIVATIONS, TRAJECTORY_DTYPE, TRAJECTORY_MAGIC,
    WEIGHTS_MAGIC, WEIGHTS_VERSION,
)
from core.field_trainer import SpectralMLP
from models.covariance import CovarianceKind, DiagonalCovariance
from models.sde import TrajectoryDataset
from models.spectral import TimeGrid
from utils.validators import FileFormatError, validate_file_path

TRAJECTORY_VERSION = 1
PathLike = Union[str, Path]


def _prepare_output(path: PathLike) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    return path


def write_trajectories(path: PathLike, ds: TrajectoryDataset, sidecar: bool = True) -> Path:
    """
    寫入 FKLT 軌跡檔

    Args:
        path: 輸出路徑
        ds: 軌跡資料集
        sidecar: 是否另外寫出同名 .json manifest

    Returns:
        軌跡檔路徑
    """
    path = _prepare_output(path)
    manifest = {
        "system": ds.provenance.get("system", "unknown"),
        "provenance": ds.provenance,
        "shape": list(ds.paths.shape),
        "dtype": TRAJECTORY_DTYPE,
        "grid": ds.grid.to_dict(),
    }
    manifest_bytes = json.dumps(manifest, sort_keys=True).encode("utf-8")

    try:
        with open(path, "wb") as handle:
            handle.write(TRAJECTORY_MAGIC)
            handle.write(struct.pack("<II", TRAJECTORY_VERSION, len(manifest_bytes)))
            handle.write(manifest_bytes)
            handle.write(np.ascontiguousarray(ds.paths, dtype="<f8").tobytes())

        if sidecar:
            path.with_suffix(".json").write_text(json.dumps(manifest, indent=2), encoding="utf-8")

        logger.info(f"成功寫入軌跡檔: {path} {ds.paths.shape}")
        return path

    except OSError as e:
        logger.error(f"寫入軌跡檔失敗: {str(e)}")
        raise


def read_trajectories(path: PathLike) -> TrajectoryDataset:
    """
    讀取 FKLT 軌跡檔

    Raises:
        FileFormatError: 當 magic、版本、dtype 或負載大小不符時
    """
    path = validate_file_path(path)
    data = path.read_bytes()
    header_size = len(TRAJECTORY_MAGIC) + 8

    if len(data) < header_size or data[:4] != TRAJECTORY_MAGIC:
        raise FileFormatError(f"不是 FKLT 軌跡檔: {path}")

    version, manifest_length = struct.unpack("<II", data[4:header_size])
    if version != TRAJECTORY_VERSION:
        raise FileFormatError(f"不支援的 FKLT 版本 {version}: {path}")

    try:
        manifest = json.loads(data[header_size:header_size + manifest_length].decode("utf-8"))
    except (UnicodeDecodeError, json.JSONDecodeError) as e:
        raise FileFormatError(f"FKLT manifest 無法解析: {e}")

    if manifest.get("dtype") != TRAJECTORY_DTYPE:
        raise FileFormatError(f"不支援的資料型別: {manifest.get('dtype')}")

    shape = tuple(int(n) for n in manifest.get("shape", ()))
    payload = data[header_size + manifest_length:]
    if len(shape) != 3 or len(payload) != 8 * int(np.prod(shape)):
        raise FileFormatError(f"負載大小 {len(payload)} 與形狀 {shape} 不符")

    paths = np.frombuffer(payload, dtype="<f8").reshape(shape).astype(np.float64)
    grid = TimeGrid(**manifest["grid"])
    logger.info(f"讀取軌跡檔: {path} {shape}")
    return TrajectoryDataset(grid, paths, manifest.get("provenance", {}))


def save_weights(path: PathLike, model: SpectralMLP, ema_model: SpectralMLP) -> Path:
    """寫入 FKLW 權重檔 (原始權重與 EMA 權重)"""
    path = _prepare_output(path)
    layers = model.linear_layers()
    dims = [layers[0].in_features] + [layer.out_features for layer in layers]

    blocks = []
    for network in (model, ema_model):
        for layer in network.linear_layers():
            blocks.append(layer.weight.detach().numpy().astype("<f8").tobytes())
            blocks.append(layer.bias.detach().numpy().astype("<f8").tobytes())

    trailer = struct.pack(
        "<IIId",
        model.n_modes,
        model.out_dim,
        SUPPORTED_ACTIVATIONS.index(model.activation),
        model.input_scale,
    )

    try:
        with open(path, "wb") as handle:
            handle.write(WEIGHTS_MAGIC)
            handle.write(struct.pack("<II", WEIGHTS_VERSION, len(layers)))
            handle.write(struct.pack(f"<{len(dims)}I", *dims))
            for block in blocks:
                handle.write(block)
            handle.write(trailer)

        logger.info(f"成功寫入權重檔: {path}，層維度 {dims}")
        return path

    except OSError as e:
        logger.error(f"寫入權重檔失敗: {str(e)}")
        raise


def load_weights(path: PathLike) -> Tuple[SpectralMLP, SpectralMLP]:
    """
    讀取 FKLW 權重檔

    Returns:
        (model, ema_model)

    Raises:
        FileFormatError: 當 magic、版本或區塊大小不符時
    """
    path = validate_file_path(path)
    data = path.read_bytes()
    if len(data) < 12 or data[:4] != WEIGHTS_MAGIC:
        raise FileFormatError(f"不是 FKLW 權重檔: {path}")

    version, n_layers = struct.unpack("<II", data[4:12])
    if version != WEIGHTS_VERSION:
        raise FileFormatError(f"不支援的 FKLW 版本 {version}: {path}")
    if n_layers < 1:
        raise FileFormatError(f"層數無效: {n_layers}")

    offset = 12
    dims_size = 4 * (n_layers + 1)
    if len(data) < offset + dims_size:
        raise FileFormatError("層維度區塊不完整")
    dims = list(struct.unpack(f"<{n_layers + 1}I", data[offset:offset + dims_size]))
    offset += dims_size

    trailer_size = struct.calcsize("<IIId")
    block_size = 2 * 8 * sum(dims[i] * dims[i + 1] + dims[i + 1] for i in range(n_layers))
    if len(data) != offset + block_size + trailer_size:
        raise FileFormatError(f"權重區塊大小不符: 預期 {offset + block_size + trailer_size}，實際 {len(data)}")

    n_modes, out_dim, activation_code, input_scale = struct.unpack("<IIId", data[-trailer_size:])
    if activation_code >= len(SUPPORTED_ACTIVATIONS):
        raise FileFormatError(f"未知的激活函數代碼: {activation_code}")

    width, depth = (dims[1], n_layers - 1) if n_layers > 1 else (dims[1], 0)
    expected = SpectralMLP.layer_dims(out_dim * (2 * n_modes - 1), width, depth)
    if depth < 1 or dims != expected:
        raise FileFormatError(f"層維度 {dims} 與模態設定 {expected} 不一致")

    networks = []
    for _ in range(2):
        network = SpectralMLP(n_modes, out_dim, width, depth, SUPPORTED_ACTIVATIONS[activation_code], input_scale)
        for layer in network.linear_layers():
            for param in (layer.weight, layer.bias):
                count = param.numel()
                values = np.frombuffer(data, dtype="<f8", count=count, offset=offset)
                with torch.no_grad():
                    param.copy_(torch.from_numpy(values.reshape(tuple(param.shape)).astype(np.float64)))
                offset += 8 * count
        networks.append(network)

    logger.info(f"讀取權重檔: {path}，層維度 {dims}")
    return networks[0], networks[1]


def write_covariance_csv(path: PathLike, cov: DiagonalCovariance) -> Path:
    """以 (k, d, lambda) 長格式寫出協方差特徵值"""
    path = _prepare_output(path)
    k, d = np.meshgrid(np.arange(cov.n_modes), np.arange(cov.out_dim), indexing="ij")
    frame = pd.DataFrame({"k": k.ravel(), "d": d.ravel(), "lambda": cov.lambdas.ravel()})
    frame.to_csv(path, index=False, encoding=CSV_ENCODING, float_format="%.17g")
    logger.info(f"成功寫入協方差 CSV: {path}")
    return path


def read_covariance_csv(path: PathLike) -> DiagonalCovariance:
    """
    讀取 (k, d, lambda) 協方差 CSV

    Raises:
        FileFormatError: 當欄位缺漏或 (k, d) 網格不完整時
    """
    path = validate_file_path(path)
    frame = pd.read_csv(path, encoding=CSV_ENCODING)
    if not {"k", "d", "lambda"} <= set(frame.columns):
        raise FileFormatError(f"協方差 CSV 需要欄位 k, d, lambda: {list(frame.columns)}")

    n_modes, out_dim = int(frame["k"].max()) + 1, int(frame["d"].max()) + 1
    if len(frame) != n_modes * out_dim or frame.duplicated(["k", "d"]).any():
        raise FileFormatError(f"協方差 CSV 的 (k, d) 網格不完整: {len(frame)} 列，預期 {n_modes * out_dim}")

    lambdas = np.empty((n_modes, out_dim))
    lambdas[frame["k"].to_numpy(), frame["d"].to_numpy()] = frame["lambda"].to_numpy(dtype=np.float64)
    return DiagonalCovariance(lambdas, CovarianceKind.CUSTOM, {"source": str(path)})


def write_snapshot_csv(path: PathLike, clouds: Dict[float, np.ndarray]) -> Path:
    """寫出快照點雲，欄位 time, dim0, ..., dim{D-1}"""
    path = _prepare_output(path)
    frames = []
    for time in sorted(clouds):
        points = np.asarray(clouds[time], dtype=np.float64)
        frame = pd.DataFrame(points, columns=[f"dim{i}" for i in range(points.shape[1])])
        frame.insert(0, "time", time)
        frames.append(frame)

    pd.concat(frames, ignore_index=True).to_csv(
        path, index=False, encoding=CSV_ENCODING, float_format=CSV_FLOAT_FORMAT
    )
    logger.info(f"成功寫入快照 CSV: {path}，{len(clouds)} 個時間點")
    return path


def read_snapshot_csv(path: PathLike) -> Dict[float, np.ndarray]:
    """
    讀取快照 CSV

    Returns:
        時間 -> 點雲 (n x D)
    """
    path = validate_file_path(path)
    frame = pd.read_csv(path, encoding=CSV_ENCODING)
    dims = [c for c in frame.columns if c.startswith("dim")]
    if "time" not in frame.columns or not dims:
        raise FileFormatError(f"快照 CSV 需要欄位 time 與 dim0...: {list(frame.columns)}")

    return {
        float(time): group[dims].to_numpy(dtype=np.float64)
        for time, group in frame.groupby("time", sort=True)
    }


def convert_csv_trajectories(path: PathLike, horizon: float = None) -> TrajectoryDataset:
    """
    將長格式 CSV (path, time, dim0, ...) 轉為軌跡資料集

    每條路徑必須在同一組等距時間點上取樣。

    Raises:
        FileFormatError: 當欄位缺漏或時間網格不一致時
    """
    path = validate_file_path(path)
    frame = pd.read_csv(path, encoding=CSV_ENCODING)
    dims = [c for c in frame.columns if c.startswith("dim")]
    if not {"path", "time"} <= set(frame.columns) or not dims:
        raise FileFormatError(f"軌跡 CSV 需要欄位 path, time, dim0...: {list(frame.columns)}")

    frame = frame.sort_values(["path", "time"])
    groups = [group for _, group in frame.groupby("path", sort=True)]
    times = groups[0]["time"].to_numpy(dtype=np.float64)
    for group in groups[1:]:
        if not np.allclose(group["time"].to_numpy(dtype=np.float64), times):
            raise FileFormatError("各路徑的時間點不一致")

    if len(times) < 2 or not np.allclose(np.diff(times), times[1] - times[0], rtol=1e-6):
        raise FileFormatError("軌跡 CSV 的時間點必須等距且至少 2 個")

    paths = np.stack([group[dims].to_numpy(dtype=np.float64) for group in groups])
    span = horizon if horizon is not None else float(times[-1] - times[0])
    provenance = {"system": "imported", "source": path.name, "time_offset": float(times[0])}
    logger.info(f"轉換 CSV 軌跡: {path} -> {paths.shape}")
    return TrajectoryDataset(TimeGrid(len(times), span), paths, provenance)


def read_fkl_json(path: PathLike) -> Tuple[float, float]:
    """
    讀取 fkl 子命令寫出的估計 JSON

    Returns:
        (forward, reverse) 估計值

    Raises:
        FileFormatError: 當缺少 forward / reverse 估計時
    """
    path = validate_file_path(path)
    data = json.loads(path.read_text(encoding="utf-8"))
    try:
        return float(data["forward"]["value"]), float(data["reverse"]["value"])
    except (KeyError, TypeError, ValueError) as e:
        raise FileFormatError(f"FKL 估計 JSON 缺少 forward/reverse 的 value: {path}") from e
