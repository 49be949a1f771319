"""
由兩個軌跡資料集建立速度場並雙向估計 FKL
"""
from dataclasses import dataclass
from typing import Optional, Tuple

import numpy as np
from loguru import logger

from config.default_settings import (
    DEFAULT_MIRROR, DEFAULT_SOFTMAX_BANDWIDTH, DEFAULT_T_COLLAPSE, DEFAULT_THREADS,
    GAUSSIAN_NOISE_MATERN,
)
from core.field_trainer import TrainConfig, TrainedField, TrainingResult, train_field
from core.fkl_estimator import estimate_fkl
from core.gaussian_case import build_noise
from core.sources import FunctionSource, PoolSource, split_pool
from core.spectral_transform import to_spectral_batch
from core.velocity_fields import EmpiricalSoftmaxField, VelocityField
from models.covariance import GaussianMeasure
from models.estimate import FklConfig, FklEstimate
from models.sde import TrajectoryDataset
from utils.seeding import make_rng
from utils.validators import ShapeMismatchError

FIELD_BACKENDS = ["softmax", "trained"]


@dataclass(frozen=True, eq=False)
class FieldPair:
    """兩個測度的速度場、估計用樣本來源與共用雜訊"""
    field_a: VelocityField
    field_b: VelocityField
    source_a: FunctionSource
    source_b: FunctionSource
    noise: GaussianMeasure
    backend: str
    training: Optional[TrainingResult] = None


def dataset_coeffs(ds: TrajectoryDataset, n_modes: int, mirror: bool = DEFAULT_MIRROR) -> np.ndarray:
    """軌跡 (n, M, D) -> 頻譜係數 (n, K, D)"""
    return to_spectral_batch(ds.paths, n_modes, mirror)


def pooled_noise(
    coeffs_a: np.ndarray,
    coeffs_b: np.ndarray,
    kind: str = "roughened",
    m_points: Optional[int] = None,
    noise_matern: Tuple[float, float, float] = GAUSSIAN_NOISE_MATERN,
) -> GaussianMeasure:
    """以兩個樣本池的聯集建立參考雜訊測度"""
    if coeffs_a.shape[1:] != coeffs_b.shape[1:]:
        raise ShapeMismatchError(f"樣本池形狀不一致: {coeffs_a.shape[1:]} != {coeffs_b.shape[1:]}")
    n_modes, dim = coeffs_a.shape[1:]
    union = np.concatenate([coeffs_a, coeffs_b])
    cov = build_noise(kind, n_modes, dim, m_points or 2 * (n_modes - 1), noise_matern, union)
    return GaussianMeasure.centered(cov)


def build_field_pair(
    coeffs_a: np.ndarray,
    coeffs_b: np.ndarray,
    noise: GaussianMeasure,
    backend: str = "softmax",
    split: bool = True,
    t_collapse: float = DEFAULT_T_COLLAPSE,
    bandwidth: float = DEFAULT_SOFTMAX_BANDWIDTH,
    seed: int = 0,
    train_cfg: Optional[TrainConfig] = None,
    trained: Optional[TrainingResult] = None,
) -> FieldPair:
    """
    建立兩個樣本池的速度場

    Args:
        coeffs_a, coeffs_b: 兩個測度的係數樣本 (n, K, D)
        noise: 參考雜訊測度
        backend: softmax | trained
        split: softmax 後端是否把樣本池對半切分為速度場池與估計池
        t_collapse: softmax 的最近樣本門檻
        bandwidth: softmax 的平滑寬度
        seed: 切分與訓練種子
        train_cfg: trained 後端的訓練設定
        trained: 已訓練 (或從權重檔載入) 的結果，提供時略過訓練

    Returns:
        FieldPair
    """
    if backend == "softmax":
        rng = make_rng(seed, 0x5B17)
        if split:
            field_pool_a, source_pool_a = split_pool(coeffs_a, rng)
            field_pool_b, source_pool_b = split_pool(coeffs_b, rng)
        else:
            field_pool_a, source_pool_a = coeffs_a, coeffs_a
            field_pool_b, source_pool_b = coeffs_b, coeffs_b

        logger.info(f"建立 softmax 速度場，樣本池 {len(field_pool_a)} / {len(field_pool_b)}，split={split}")
        return FieldPair(
            EmpiricalSoftmaxField(field_pool_a, noise.cov, t_collapse, bandwidth),
            EmpiricalSoftmaxField(field_pool_b, noise.cov, t_collapse, bandwidth),
            PoolSource(source_pool_a),
            PoolSource(source_pool_b),
            noise,
            backend,
        )

    if backend == "trained":
        if trained is None:
            trained = train_field(coeffs_a, coeffs_b, noise, train_cfg or TrainConfig(seed=seed))
        return FieldPair(
            trained.field_a,
            trained.field_b,
            PoolSource(coeffs_a),
            PoolSource(coeffs_b),
            noise,
            backend,
            trained,
        )

    raise ValueError(f"資料集只支援速度場後端 {FIELD_BACKENDS}: {backend}")


def trained_result_from_models(model, ema_model) -> TrainingResult:
    """由載入的網路重建訓練結果 (無損失紀錄)"""
    return TrainingResult(
        field_a=TrainedField(ema_model, 0),
        field_b=TrainedField(ema_model, 1),
        model=model,
        ema_model=ema_model,
        config=TrainConfig(iterations=0),
    )


def estimate_both_directions(
    pair: FieldPair,
    cfg: FklConfig,
    threads: int = DEFAULT_THREADS,
) -> Tuple[FklEstimate, FklEstimate]:
    """
    正向 KL(A‖B) 與反向 KL(B‖A)

    Returns:
        (forward, reverse)
    """
    forward = estimate_fkl(pair.field_a, pair.field_b, pair.source_a, pair.noise, cfg, threads, "forward")
    reverse = estimate_fkl(pair.field_b, pair.field_a, pair.source_b, pair.noise, cfg, threads, "reverse")
    return forward, reverse
