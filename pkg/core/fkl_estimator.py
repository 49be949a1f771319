"""
速度場 FKL 的 Monte Carlo 估計器

KL(ν^A ‖ ν^B) = ∫₀¹ (t/(1-t)) E ‖v^A_t(X_t) - v^B_t(X_t)‖²_{H_μ0} dt，
X_t = t X₁ + (1-t) X₀，X₁ ~ ν^A，X₀ ~ μ₀。全程不需要積分生成動態。
"""
from concurrent.futures import ThreadPoolExecutor
from dataclasses import replace
from typing import Optional, Sequence

import numpy as np
from loguru import logger
from scipy.special import expit, logit
from scipy.stats import norm

from config.default_settings import (
    BISECTION_MAX_ITER, BISECTION_TOL, DEFAULT_CHUNK_FUNCTIONS, DEFAULT_THREADS,
)
from core.measures import cm_norm_sq_batch, sample_batch
from core.sources import FunctionSource
from core.velocity_fields import VelocityField
from models.covariance import GaussianMeasure
from models.estimate import (
    FklConfig, FklEstimate, SamplerKind, TimeSampler, one_minus_t_antiderivative,
)
from utils.seeding import make_rng
from utils.validators import ShapeMismatchError


def _importance_inverse_cdf(sampler: TimeSampler, u: np.ndarray) -> np.ndarray:
    """以二分法解 F(t) = F(t_min) + u Z"""
    target = one_minus_t_antiderivative(sampler.t_min) + u * sampler.normalizer
    low = np.full(u.shape, sampler.t_min)
    high = np.full(u.shape, sampler.t_max)

    for _ in range(BISECTION_MAX_ITER):
        middle = 0.5 * (low + high)
        below = one_minus_t_antiderivative(middle) < target
        low = np.where(below, middle, low)
        high = np.where(below, high, middle)
        if np.max(high - low) < BISECTION_TOL:
            break

    return 0.5 * (low + high)


def _logit_normal_bounds(sampler: TimeSampler) -> tuple:
    lower = norm.cdf((logit(sampler.t_min) - sampler.mean) / sampler.std)
    upper = norm.cdf((logit(sampler.t_max) - sampler.mean) / sampler.std)
    return lower, upper


def sample_times(sampler: TimeSampler, rng: np.random.Generator, size: int) -> np.ndarray:
    """
    從採樣器抽取 size 個時間

    Args:
        sampler: 時間採樣器
        rng: 亂數產生器
        size: 樣本數

    Returns:
        [t_min, t_max] 內的時間陣列
    """
    u = rng.random(size)
    if sampler.kind is SamplerKind.UNIFORM:
        return sampler.t_min + (sampler.t_max - sampler.t_min) * u
    if sampler.kind is SamplerKind.IMPORTANCE:
        return _importance_inverse_cdf(sampler, u)

    lower, upper = _logit_normal_bounds(sampler)
    z = norm.ppf(lower + (upper - lower) * u)
    times = expit(sampler.mean + sampler.std * z)
    return np.clip(times, sampler.t_min, sampler.t_max)


def time_weights(sampler: TimeSampler, t: np.ndarray) -> np.ndarray:
    """
    每個時間樣本的權重 (t/(1-t)) / q(t)

    均勻採樣為 (t/(1-t))(t_max - t_min)，t/(1-t) 重要性採樣為常數 Z。
    """
    t = np.asarray(t, dtype=np.float64)
    ratio = t / (1.0 - t)
    if sampler.kind is SamplerKind.UNIFORM:
        return ratio * (sampler.t_max - sampler.t_min)
    if sampler.kind is SamplerKind.IMPORTANCE:
        return np.full(t.shape, sampler.normalizer)

    lower, upper = _logit_normal_bounds(sampler)
    z = (logit(t) - sampler.mean) / sampler.std
    density = norm.pdf(z) / (sampler.std * t * (1.0 - t) * (upper - lower))
    return ratio / density


def _check_shapes(
    field_a: VelocityField,
    field_b: VelocityField,
    source: FunctionSource,
    noise: GaussianMeasure,
    cfg: FklConfig,
) -> None:
    shapes = {
        "field_a": field_a.shape,
        "field_b": field_b.shape,
        "source": tuple(source.shape),
        "noise": noise.cov.shape,
    }
    if len(set(shapes.values())) > 1:
        raise ShapeMismatchError(f"形狀不一致: {shapes}")
    if cfg.n_sum_modes > field_a.n_modes:
        raise ShapeMismatchError(f"n_sum_modes {cfg.n_sum_modes} 超過速度場模態數 {field_a.n_modes}")


def _chunk_contributions(
    index: int,
    n_functions: int,
    field_a: VelocityField,
    field_b: VelocityField,
    source: FunctionSource,
    noise: GaussianMeasure,
    cfg: FklConfig,
) -> np.ndarray:
    rng = make_rng(cfg.seed, index)
    n_rows = n_functions * cfg.n_time_per_function

    x1 = np.repeat(source.draw(rng, n_functions), cfg.n_time_per_function, axis=0)
    x0 = sample_batch(noise, rng, n_rows)
    t = sample_times(cfg.sampler, rng, n_rows)
    xt = t[:, None, None] * x1 + (1.0 - t)[:, None, None] * x0

    difference = field_a.eval_batch(xt, t) - field_b.eval_batch(xt, t)
    g = cm_norm_sq_batch(difference, noise.cov.lambdas, cfg.n_sum_modes)
    return time_weights(cfg.sampler, t) * g


def estimate_fkl(
    field_a: VelocityField,
    field_b: VelocityField,
    source: FunctionSource,
    noise: GaussianMeasure,
    cfg: FklConfig,
    threads: int = DEFAULT_THREADS,
    direction: Optional[str] = None,
) -> FklEstimate:
    """
    估計 KL(ν^A ‖ ν^B)

    Args:
        field_a: ν^A 的速度場
        field_b: ν^B 的速度場
        source: X₁ ~ ν^A 的樣本來源
        noise: 參考高斯測度 μ₀
        cfg: 估計設定
        threads: 工作執行緒上限
        direction: 輸出標籤（forward / reverse）

    Returns:
        FklEstimate；每個函數區塊使用獨立的種子串流，結果依區塊順序合併

    Raises:
        ShapeMismatchError: 當形狀不一致時
    """
    _check_shapes(field_a, field_b, source, noise, cfg)
    fingerprints = (field_a.fingerprint(), field_b.fingerprint())

    if field_a is field_b:
        logger.info("兩個速度場為同一物件，FKL = 0")
        return FklEstimate(0.0, 0.0, cfg.n_evals, cfg, fingerprints, direction)

    logger.info(
        f"開始估計 FKL{' (' + direction + ')' if direction else ''}: "
        f"{cfg.n_function_samples} 個函數 x {cfg.n_time_per_function} 個時間，"
        f"採樣器 {cfg.sampler.kind.value}，N={cfg.n_sum_modes}"
    )

    sizes = [
        min(DEFAULT_CHUNK_FUNCTIONS, cfg.n_function_samples - start)
        for start in range(0, cfg.n_function_samples, DEFAULT_CHUNK_FUNCTIONS)
    ]
    with ThreadPoolExecutor(max_workers=max(1, threads)) as executor:
        parts = list(executor.map(
            lambda job: _chunk_contributions(job[0], job[1], field_a, field_b, source, noise, cfg),
            enumerate(sizes),
        ))

    contributions = np.concatenate(parts)
    value = float(np.mean(contributions))
    std_error = (
        float(np.std(contributions, ddof=1) / np.sqrt(len(contributions)))
        if len(contributions) > 1 else 0.0
    )

    estimate = FklEstimate(value, std_error, cfg.n_evals, cfg, fingerprints, direction)
    logger.info(f"FKL 估計完成: {estimate}")
    return estimate


def estimate_fkl_over_seeds(
    field_a: VelocityField,
    field_b: VelocityField,
    source: FunctionSource,
    noise: GaussianMeasure,
    cfg: FklConfig,
    seeds: Sequence[int],
    threads: int = DEFAULT_THREADS,
) -> dict:
    """
    以多個獨立種子重複估計

    Returns:
        {"mean", "std", "estimates"}，std 為種子間的樣本標準差
    """
    if not seeds:
        raise ValueError("至少需要一個種子")

    estimates = [
        estimate_fkl(field_a, field_b, source, noise, replace(cfg, seed=int(seed)), threads)
        for seed in seeds
    ]
    values = np.array([e.value for e in estimates])
    spread = float(np.std(values, ddof=1)) if len(values) > 1 else 0.0
    logger.info(f"{len(seeds)} 個種子的 FKL: {values.mean():.4f} ± {spread:.4f}")
    return {"mean": float(values.mean()), "std": spread, "estimates": estimates}
