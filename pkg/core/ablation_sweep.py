"""
FKL 估計器的消融掃描

每個網格點產生一筆估計；噪音種類與解析度的變化透過 build 回呼重新建構
速度場、來源與雜訊，並以 (noise, resolution) 快取。
"""
from dataclasses import dataclass, replace
from typing import Callable, Dict, Iterable, Optional, Tuple

import numpy as np
import pandas as pd
from loguru import logger

from config.default_settings import (
    DEFAULT_M_POINTS, DEFAULT_SOFTMAX_BANDWIDTH, DEFAULT_THREADS, TRUNCATION_MONOTONE_RTOL,
)
from core.fkl_estimator import estimate_fkl
from core.gaussian_case import gaussian_case_setup
from core.sources import FunctionSource, MeasureSource, PoolSource, split_pool
from core.measures import sample_batch
from core.spectral_transform import max_modes_for
from core.velocity_fields import EmpiricalSoftmaxField, VelocityField
from models.covariance import GaussianMeasure
from models.estimate import FklConfig
from utils.seeding import make_rng

SWEEP_AXES = ["n_sum_modes", "n_evals", "n_time", "t_max", "noise", "resolution", "seed"]


@dataclass(frozen=True, eq=False)
class SweepContext:
    """一個網格點所需的速度場、來源、雜訊與 (可選) 解析參考值"""
    field_a: VelocityField
    field_b: VelocityField
    source: FunctionSource
    noise: GaussianMeasure
    reference: Optional[float] = None


BuildFn = Callable[[str, int], SweepContext]


def _point_config(axis: str, value, base_cfg: FklConfig, context: SweepContext) -> FklConfig:
    if axis == "n_sum_modes":
        return replace(base_cfg, n_sum_modes=int(value))
    if axis == "n_evals":
        return replace(base_cfg, n_function_samples=int(value), n_time_per_function=1)
    if axis == "n_time":
        return replace(base_cfg, n_time_per_function=int(value))
    if axis == "t_max":
        return replace(base_cfg, sampler=replace(base_cfg.sampler, t_max=float(value)))
    if axis == "seed":
        return replace(base_cfg, seed=int(value))
    return replace(base_cfg, n_sum_modes=context.noise.cov.n_modes)


def sweep(
    axis: str,
    values: Iterable,
    base_cfg: FklConfig,
    build: BuildFn,
    base_noise: str = "matern",
    base_resolution: int = DEFAULT_M_POINTS,
    threads: int = DEFAULT_THREADS,
) -> pd.DataFrame:
    """
    沿單一軸掃描 FKL 估計

    Args:
        axis: 掃描軸（見 SWEEP_AXES）
        values: 軸上的取值
        base_cfg: 基準估計設定
        build: (noise, resolution) -> SweepContext
        base_noise: 非 noise 軸時使用的雜訊種類
        base_resolution: 非 resolution 軸時使用的網格解析度
        threads: 工作執行緒上限

    同一個 seed 的所有取值共用相同的 (x, t) 抽樣，因此 n_sum_modes 軸上的估計只差
    新增模態的非負項，誤差序列可以直接比較單調性 (見 nonincreasing)。

    Returns:
        每個取值一列的 DataFrame；noise / resolution 軸加總所有可用模態

    Raises:
        ValueError: 當軸名稱未知時
    """
    if axis not in SWEEP_AXES:
        raise ValueError(f"未知的掃描軸: {axis}，可用: {SWEEP_AXES}")

    values = list(values)
    logger.info(f"開始掃描 {axis}: {values}")
    contexts: Dict[Tuple[str, int], SweepContext] = {}

    rows = []
    for value in values:
        noise_kind = str(value) if axis == "noise" else base_noise
        resolution = int(value) if axis == "resolution" else base_resolution
        key = (noise_kind, resolution)
        if key not in contexts:
            contexts[key] = build(noise_kind, resolution)
        context = contexts[key]

        cfg = _point_config(axis, value, base_cfg, context)
        estimate = estimate_fkl(context.field_a, context.field_b, context.source, context.noise, cfg, threads)

        row = {
            "axis": axis,
            "value": value,
            "estimate": estimate.value,
            "std_error": estimate.std_error,
            "n_evals": estimate.n_evals,
            "n_sum_modes": cfg.n_sum_modes,
            "t_max": cfg.sampler.t_max,
            "noise": noise_kind,
            "resolution": resolution,
            "seed": cfg.seed,
            "reference": context.reference,
        }
        if context.reference is not None:
            row["abs_error"] = abs(estimate.value - context.reference)
            row["rel_error"] = row["abs_error"] / context.reference if context.reference else np.nan
        rows.append(row)
        logger.debug(f"{axis}={value}: {estimate}")

    logger.info(f"掃描完成，共 {len(rows)} 個網格點")
    return pd.DataFrame(rows)


def nonincreasing(values, rtol: float = TRUNCATION_MONOTONE_RTOL) -> bool:
    """序列在相對捨入誤差 rtol 內不遞增"""
    values = np.asarray(values, dtype=np.float64)
    scale = np.maximum(np.abs(values[:-1]), np.finfo(np.float64).tiny)
    return bool(np.all(values[1:] <= values[:-1] + rtol * scale))


def gaussian_builder(
    s: float = 1.5,
    f0: int = 1,
    dim: int = 1,
    backend: str = "analytic",
    pool_size: int = 1000,
    bandwidth: float = DEFAULT_SOFTMAX_BANDWIDTH,
    seed: int = 0,
) -> BuildFn:
    """
    高斯特例的 build 回呼

    解析度 M 對應 max_modes_for(M) - 1 個模態；softmax 後端由兩個測度各抽
    pool_size 個樣本建立速度場，估計時的 X₁ 取自與速度場樣本池分開的另一半。
    """
    if backend not in ("analytic", "softmax"):
        raise ValueError(f"未知的速度場後端: {backend}")

    def build(noise_kind: str, resolution: int) -> SweepContext:
        n_modes = max(max_modes_for(resolution) - 1, f0 + 1)
        case = gaussian_case_setup(
            s, f0, dim, n_modes=n_modes, m_points=resolution, noise_kind=noise_kind, seed=seed
        )
        if backend == "analytic":
            return SweepContext(
                case.field_a, case.field_b, MeasureSource(case.measure_a), case.noise, case.oracle_kl
            )

        rng = make_rng(seed, resolution)
        pool_a, held_a = split_pool(sample_batch(case.measure_a, rng, 2 * pool_size), rng)
        pool_b = sample_batch(case.measure_b, rng, pool_size)
        return SweepContext(
            EmpiricalSoftmaxField(pool_a, case.noise.cov, bandwidth=bandwidth),
            EmpiricalSoftmaxField(pool_b, case.noise.cov, bandwidth=bandwidth),
            PoolSource(held_a),
            case.noise,
            case.oracle_kl,
        )

    return build
