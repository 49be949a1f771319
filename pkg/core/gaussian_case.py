"""
高斯平均值平移特例的共用設定

A = N(m, R)，B = N(0, R)，m(x) = s · sin(2π f₀ x) 於每個輸出維度，
R 與雜訊 μ₀ 皆為運算子 Matérn 頻譜。
"""
from dataclasses import dataclass
from typing import Optional, Tuple

import numpy as np
from loguru import logger

from config.default_settings import (
    DEFAULT_M_POINTS, DEFAULT_N_MODES, GAUSSIAN_DATA_MATERN, GAUSSIAN_NOISE_MATERN,
)
from core.measures import (
    identity_covariance, matern_from_length_scale,
    roughened_empirical_covariance, sample_batch,
)
from core.oracles import gaussian_analytic_field, gaussian_mean_shift_kl
from core.spectral_transform import max_modes_for, to_spectral_batch
from core.velocity_fields import AnalyticGaussianField
from models.covariance import DiagonalCovariance, GaussianMeasure
from models.spectral import SpectralCoeffs
from utils.seeding import make_rng
from utils.validators import ResolutionError, validate_count

NOISE_CHOICES = ["matern", "identity", "roughened", "smooth-matern"]

# 「過度平滑」的 Matérn 雜訊 (α = 6)
SMOOTH_NOISE_ALPHA = 6.0


@dataclass(frozen=True, eq=False)
class GaussianCase:
    """一個高斯特例的所有組件"""
    s: float
    f0: int
    dim: int
    m_points: int
    mean: SpectralCoeffs
    data_cov: DiagonalCovariance
    noise: GaussianMeasure
    measure_a: GaussianMeasure
    measure_b: GaussianMeasure
    field_a: AnalyticGaussianField
    field_b: AnalyticGaussianField
    oracle_kl: float

    @property
    def n_modes(self) -> int:
        return self.data_cov.n_modes

    def to_dict(self) -> dict:
        return {
            "s": self.s,
            "f0": self.f0,
            "dim": self.dim,
            "m_points": self.m_points,
            "n_modes": self.n_modes,
            "noise": self.noise.cov.kind.value,
            "oracle_kl": self.oracle_kl,
        }


def sine_mean(s: float, f0: int, dim: int, m_points: int, n_modes: int) -> SpectralCoeffs:
    """在週期節點 j/M 上取樣 s·sin(2π f₀ x) 後轉為係數"""
    nodes = np.arange(m_points) / m_points
    values = np.repeat((s * np.sin(2.0 * np.pi * f0 * nodes))[:, None], dim, axis=1)
    return SpectralCoeffs(to_spectral_batch(values, n_modes))


def build_noise(
    kind: str,
    n_modes: int,
    dim: int,
    m_points: int,
    noise_matern: Tuple[float, float, float] = GAUSSIAN_NOISE_MATERN,
    reference_samples: Optional[np.ndarray] = None,
) -> DiagonalCovariance:
    """
    依名稱建立雜訊協方差

    Args:
        kind: matern | identity | roughened | smooth-matern
        n_modes: 模態數
        dim: 輸出維度
        m_points: 網格解析度（identity 以 1/M 縮放）
        noise_matern: matern 雜訊的 (ν, ℓ, σ²)
        reference_samples: roughened 所需的資料樣本 (n, K, D)

    Returns:
        DiagonalCovariance
    """
    if kind == "matern":
        return matern_from_length_scale(*noise_matern, n_modes, dim)
    if kind == "identity":
        return identity_covariance(n_modes, dim, scale=1.0 / m_points)
    if kind == "smooth-matern":
        _, length_scale, variance = noise_matern
        return matern_from_length_scale(SMOOTH_NOISE_ALPHA - 0.5, length_scale, variance, n_modes, dim)
    if kind == "roughened":
        if reference_samples is None:
            raise ValueError("roughened 雜訊需要資料樣本")
        return roughened_empirical_covariance(reference_samples)
    raise ValueError(f"未知的雜訊種類: {kind}，可用: {NOISE_CHOICES}")


def gaussian_case_setup(
    s: float,
    f0: int,
    dim: int = 1,
    data_matern: Tuple[float, float, float] = GAUSSIAN_DATA_MATERN,
    noise_matern: Tuple[float, float, float] = GAUSSIAN_NOISE_MATERN,
    n_modes: int = DEFAULT_N_MODES,
    m_points: int = DEFAULT_M_POINTS,
    noise_kind: str = "matern",
    seed: int = 0,
) -> GaussianCase:
    """
    建立高斯平均值平移特例

    Args:
        s: 平均值振幅
        f0: 平均值頻率
        dim: 輸出維度
        data_matern: 資料協方差的 (ν, ℓ, σ²)
        noise_matern: 雜訊協方差的 (ν, ℓ, σ²)
        n_modes: 保留模態數
        m_points: 網格解析度
        noise_kind: 雜訊種類（見 NOISE_CHOICES）
        seed: roughened 雜訊抽取參考樣本的種子

    Returns:
        GaussianCase，oracle_kl = D s² / (4 c_{f₀})

    Raises:
        ResolutionError: 當 n_modes 或 f₀ 超出網格解析範圍時
    """
    validate_count(dim, "dim")
    n_modes = validate_count(n_modes, "n_modes")
    if n_modes > max_modes_for(m_points):
        raise ResolutionError(f"模態數 {n_modes} 超出 M={m_points} 的解析範圍")
    if not 0 <= f0 < n_modes:
        raise ResolutionError(f"平均值頻率 f0={f0} 必須小於模態數 {n_modes}")

    mean = sine_mean(s, f0, dim, m_points, n_modes)
    data_cov = matern_from_length_scale(*data_matern, n_modes, dim)
    measure_a = GaussianMeasure(mean, data_cov)
    measure_b = GaussianMeasure.centered(data_cov)

    reference = None
    if noise_kind == "roughened":
        reference = sample_batch(measure_b, make_rng(seed, 0x5EED), 1000)
    noise_cov = build_noise(noise_kind, n_modes, dim, m_points, noise_matern, reference)
    noise = GaussianMeasure.centered(noise_cov)

    oracle = gaussian_mean_shift_kl(mean, data_cov)
    logger.debug(f"高斯特例 s={s}, f0={f0}, D={dim}, noise={noise_kind}: 解析 KL = {oracle:.4f}")

    return GaussianCase(
        s=float(s),
        f0=int(f0),
        dim=int(dim),
        m_points=int(m_points),
        mean=mean,
        data_cov=data_cov,
        noise=noise,
        measure_a=measure_a,
        measure_b=measure_b,
        field_a=gaussian_analytic_field(mean, data_cov, noise_cov),
        field_b=gaussian_analytic_field(None, data_cov, noise_cov),
        oracle_kl=float(oracle),
    )


def single_mode_case(mean: float, data_var: float, noise_var: float) -> GaussianCase:
    """
    單一模態 (K=1, D=1) 的特例，KL = m²/(2c)
    """
    mean_coeffs = SpectralCoeffs(np.array([[mean]], dtype=np.complex128))
    data_cov = DiagonalCovariance([[data_var]])
    noise_cov = DiagonalCovariance([[noise_var]])
    return GaussianCase(
        s=float(mean),
        f0=0,
        dim=1,
        m_points=1,
        mean=mean_coeffs,
        data_cov=data_cov,
        noise=GaussianMeasure.centered(noise_cov),
        measure_a=GaussianMeasure(mean_coeffs, data_cov),
        measure_b=GaussianMeasure.centered(data_cov),
        field_a=gaussian_analytic_field(mean_coeffs, data_cov, noise_cov),
        field_b=gaussian_analytic_field(None, data_cov, noise_cov),
        oracle_kl=float(gaussian_mean_shift_kl(mean_coeffs, data_cov)),
    )
