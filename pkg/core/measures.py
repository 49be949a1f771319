"""
傅立葉對角高斯測度

Matérn 運算子頻譜、資料驅動的粗糙化頻譜、取樣、Cameron-Martin 範數與跡類診斷。
"""
from dataclasses import dataclass
from typing import Sequence, Union

import numpy as np
from loguru import logger
from scipy.special import gammaln

from config.default_settings import (
    DEFAULT_FLOOR_EPS, DEFAULT_ROUGHEN_EXPONENT, MIN_TRACE_DIAGNOSTIC_MODES,
    SUPPORTED_ROUGHEN_EXPONENTS,
)
from core.spectral_transform import one_sided_weights
from models.covariance import CovarianceKind, DiagonalCovariance, GaussianMeasure
from models.spectral import SpectralCoeffs
from utils.validators import ShapeMismatchError, validate_count, validate_positive


@dataclass(frozen=True)
class TraceDiagnostic:
    """協方差尾端衰減的診斷結果"""
    trace_truncated: float
    tail_decay_exponent: float
    trace_class_flag: bool

    def to_dict(self) -> dict:
        return {
            "trace_truncated": self.trace_truncated,
            "tail_decay_exponent": self.tail_decay_exponent,
            "trace_class_flag": self.trace_class_flag,
        }


def matern_covariance(
    sigma2: float,
    tau: float,
    alpha: float,
    n_modes: int,
    out_dim: int = 1,
) -> DiagonalCovariance:
    """
    Matérn 運算子頻譜 λ_k = σ² (4π²k² + τ²)^(-α)，各輸出維度相同

    Args:
        sigma2: 尺度 σ²
        tau: 反長度尺度 τ
        alpha: 平滑度指數 α
        n_modes: 模態數
        out_dim: 輸出維度

    Returns:
        DiagonalCovariance

    Raises:
        ValueError: 當參數非正時
    """
    sigma2 = validate_positive(sigma2, "sigma2")
    tau = validate_positive(tau, "tau")
    alpha = validate_positive(alpha, "alpha")
    n_modes = validate_count(n_modes, "n_modes")
    out_dim = validate_count(out_dim, "out_dim")

    k = np.arange(n_modes, dtype=np.float64)
    spectrum = sigma2 * (4.0 * np.pi ** 2 * k ** 2 + tau ** 2) ** (-alpha)
    lambdas = np.repeat(spectrum[:, None], out_dim, axis=1)
    return DiagonalCovariance(
        lambdas,
        CovarianceKind.MATERN_OPERATOR,
        {"sigma2": sigma2, "tau": tau, "alpha": alpha},
    )


def matern_operator_params(nu: float, length_scale: float, variance: float) -> tuple:
    """
    將核函數參數 (ν, ℓ, σ²) 換算為運算子參數 (σ²_op, τ, α)

    一維 Matérn 核的頻譜密度在 ω = 2πk 取值：
    α = ν + 1/2，τ = √(2ν)/ℓ，σ²_op = σ² · 2√π Γ(ν+1/2)/Γ(ν) · τ^(2ν)。

    Returns:
        (sigma2, tau, alpha)
    """
    nu = validate_positive(nu, "nu")
    length_scale = validate_positive(length_scale, "length_scale")
    variance = validate_positive(variance, "variance")

    alpha = nu + 0.5
    tau = np.sqrt(2.0 * nu) / length_scale
    log_sigma2 = (
        np.log(variance) + np.log(2.0 * np.sqrt(np.pi))
        + gammaln(nu + 0.5) - gammaln(nu) + 2.0 * nu * np.log(tau)
    )
    return float(np.exp(log_sigma2)), float(tau), float(alpha)


def matern_from_length_scale(
    nu: float,
    length_scale: float,
    variance: float,
    n_modes: int,
    out_dim: int = 1,
) -> DiagonalCovariance:
    """以核函數參數 (ν, ℓ, σ²) 建立 Matérn 運算子頻譜"""
    sigma2, tau, alpha = matern_operator_params(nu, length_scale, variance)
    cov = matern_covariance(sigma2, tau, alpha, n_modes, out_dim)
    params = dict(cov.params, nu=float(nu), length_scale=float(length_scale), variance=float(variance))
    return DiagonalCovariance(cov.lambdas, CovarianceKind.MATERN_OPERATOR, params)


def identity_covariance(n_modes: int, out_dim: int = 1, scale: float = 1.0) -> DiagonalCovariance:
    """
    平坦頻譜 λ ≡ scale（白雜訊，非跡類）

    scale = 1/M 對應解析度 M 的網格白雜訊。
    """
    scale = validate_positive(scale, "scale")
    lambdas = np.full((validate_count(n_modes, "n_modes"), validate_count(out_dim, "out_dim")), scale)
    return DiagonalCovariance(lambdas, CovarianceKind.IDENTITY, {"scale": scale})


def _stack_samples(samples: Union[Sequence[SpectralCoeffs], np.ndarray]) -> np.ndarray:
    if isinstance(samples, np.ndarray):
        stacked = np.asarray(samples, dtype=np.complex128)
    else:
        shapes = {s.shape for s in samples}
        if len(shapes) > 1:
            raise ShapeMismatchError(f"樣本形狀不一致: {sorted(shapes)}")
        stacked = np.stack([s.coeffs for s in samples]) if samples else np.empty((0, 1, 1))
    if stacked.ndim != 3:
        raise ShapeMismatchError(f"樣本必須為 (n, K, D): {stacked.shape}")
    return stacked


def empirical_mode_variance(samples: Union[Sequence[SpectralCoeffs], np.ndarray]) -> np.ndarray:
    """
    每個 (模態, 維度) 的經驗變異數，實部與虛部合併計算 E|f - f̄|²

    Raises:
        ValueError: 當樣本少於 2 個時
    """
    stacked = _stack_samples(samples)
    if stacked.shape[0] < 2:
        raise ValueError(f"經驗頻譜至少需要 2 個樣本: {stacked.shape[0]}")
    return np.var(stacked, axis=0, ddof=1)


def roughened_empirical_covariance(
    samples: Union[Sequence[SpectralCoeffs], np.ndarray],
    floor_eps: float = DEFAULT_FLOOR_EPS,
    exponent: int = DEFAULT_ROUGHEN_EXPONENT,
) -> DiagonalCovariance:
    """
    粗糙化的經驗頻譜 λ_{k,d} = max(|k|,1)^exponent · max(v_{k,d}, floor_eps)

    exponent=2 表示把雜訊係數的標準差乘上 k（變異數乘上 k²）。

    Args:
        samples: 樣本係數列表或 (n, K, D) 陣列
        floor_eps: 變異數下限
        exponent: 粗糙化指數 (1 或 2)

    Returns:
        DiagonalCovariance
    """
    floor_eps = validate_positive(floor_eps, "floor_eps")
    if exponent not in SUPPORTED_ROUGHEN_EXPONENTS:
        raise ValueError(f"粗糙化指數必須是 {SUPPORTED_ROUGHEN_EXPONENTS} 之一: {exponent}")

    variance = empirical_mode_variance(samples)
    n_modes = variance.shape[0]
    factor = np.maximum(np.arange(n_modes, dtype=np.float64), 1.0) ** exponent
    lambdas = factor[:, None] * np.maximum(variance, floor_eps)

    floored = int(np.sum(variance < floor_eps))
    if floored:
        logger.debug(f"粗糙化頻譜中有 {floored} 個係數觸及下限 {floor_eps:g}")

    return DiagonalCovariance(
        lambdas,
        CovarianceKind.ROUGHENED_EMPIRICAL,
        {"floor_eps": floor_eps, "exponent": exponent, "n_samples": int(_stack_samples(samples).shape[0])},
    )


def sample_batch(measure: GaussianMeasure, rng: np.random.Generator, size: int) -> np.ndarray:
    """
    從高斯測度抽取 size 個樣本

    k>=1 的實部與虛部各為 N(0, λ/2)，k=0 為實數 N(0, λ)，最後加上平均值。

    Returns:
        形狀 (size, K, D) 的複數陣列
    """
    shape = (int(size),) + measure.cov.shape
    lambdas = measure.cov.lambdas
    real = rng.standard_normal(shape)
    imag = rng.standard_normal(shape)

    draws = np.sqrt(lambdas / 2.0) * (real + 1j * imag)
    draws[:, 0, :] = np.sqrt(lambdas[0]) * real[:, 0, :]
    return draws + measure.mean.coeffs


def sample(measure: GaussianMeasure, rng: np.random.Generator) -> SpectralCoeffs:
    """從高斯測度抽取單一樣本"""
    return SpectralCoeffs(sample_batch(measure, rng, 1)[0])


def cm_norm_sq_batch(coeffs: np.ndarray, lambdas: np.ndarray, n_sum_modes: int) -> np.ndarray:
    """
    批次 Cameron-Martin 平方範數

    Args:
        coeffs: 形狀 (..., K, D) 的係數
        lambdas: 形狀 (K, D) 的特徵值
        n_sum_modes: 加總的模態數 N

    Returns:
        形狀 (...,) 的非負值
    """
    if n_sum_modes < 1 or n_sum_modes > min(coeffs.shape[-2], lambdas.shape[0]):
        raise ShapeMismatchError(
            f"加總模態數 {n_sum_modes} 超出儲存的模態數 {min(coeffs.shape[-2], lambdas.shape[0])}"
        )
    if coeffs.shape[-1] != lambdas.shape[1]:
        raise ShapeMismatchError(f"輸出維度不一致: {coeffs.shape[-1]} != {lambdas.shape[1]}")

    weights = one_sided_weights(n_sum_modes)[:, None] / lambdas[:n_sum_modes]
    return np.sum(weights * np.abs(coeffs[..., :n_sum_modes, :]) ** 2, axis=(-2, -1))


def cm_norm_sq(f: SpectralCoeffs, noise_cov: DiagonalCovariance, n_sum_modes: int) -> float:
    """
    ‖f‖²_{H_μ0} = Σ_d ( |f_0|²/λ_0 + 2 Σ_{k=1}^{N-1} |f_k|²/λ_k )
    """
    if noise_cov.is_ill_conditioned:
        logger.warning(f"協方差條件數不佳 (min λ < 1e-15 max λ): {noise_cov}")
    return float(cm_norm_sq_batch(f.coeffs, noise_cov.lambdas, n_sum_modes))


def trace_diagnostic(cov: DiagonalCovariance) -> TraceDiagnostic:
    """
    跡與尾端衰減指數診斷

    以最小平方法在後半段模態上擬合 log λ_k 對 log k 的斜率，p > 1 表示跡類。

    Raises:
        ValueError: 當儲存模態數少於 8 時
    """
    if cov.n_modes < MIN_TRACE_DIAGNOSTIC_MODES:
        raise ValueError(f"跡診斷至少需要 {MIN_TRACE_DIAGNOSTIC_MODES} 個模態: {cov.n_modes}")

    k = np.arange(cov.n_modes)
    tail = k >= max(cov.n_modes // 2, 1)
    mean_spectrum = cov.lambdas.mean(axis=1)
    slope, _ = np.polyfit(np.log(k[tail]), np.log(mean_spectrum[tail]), 1)
    exponent = float(-slope)

    return TraceDiagnostic(
        trace_truncated=float(cov.lambdas.sum()),
        tail_decay_exponent=exponent,
        trace_class_flag=exponent > 1.0,
    )
