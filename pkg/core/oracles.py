"""
兩個特例的封閉解

高斯平均值平移的 KL 與解析速度差；線性 SDE 的 Girsanov KL（封閉式與 Simpson 積分）。
"""
from typing import Optional

import numpy as np
from loguru import logger
from scipy.integrate import quad, simpson

from core.measures import cm_norm_sq
from core.velocity_fields import AnalyticGaussianField
from models.covariance import DiagonalCovariance
from models.sde import LinearSdeSpec
from models.spectral import SpectralCoeffs
from utils.validators import (
    ShapeMismatchError, validate_odd_nodes, validate_positive, validate_unit_time,
)


def gaussian_mean_shift_kl(mean_diff: SpectralCoeffs, data_cov: DiagonalCovariance) -> float:
    """
    KL(N(m^A, R) ‖ N(m^B, R)) = ½ ‖m^A - m^B‖²_{H_R}

    Args:
        mean_diff: 平均值差 m^A - m^B
        data_cov: 資料協方差 R

    Returns:
        KL 值（對 A、B 對稱）
    """
    if mean_diff.shape != data_cov.shape:
        raise ShapeMismatchError(f"平均值差形狀 {mean_diff.shape} 與協方差 {data_cov.shape} 不一致")
    return 0.5 * cm_norm_sq(mean_diff, data_cov, data_cov.n_modes)


def velocity_mismatch_factor(
    data_lambdas: np.ndarray,
    noise_lambdas: np.ndarray,
    t: np.ndarray,
) -> np.ndarray:
    """(1-t)κ / ((1-t)²κ + t²c)，t 可廣播"""
    one_minus = 1.0 - t
    return one_minus * noise_lambdas / (one_minus ** 2 * noise_lambdas + t ** 2 * data_lambdas)


def gaussian_velocity_mismatch(
    mean: SpectralCoeffs,
    data_cov: DiagonalCovariance,
    noise_cov: DiagonalCovariance,
    t: float,
) -> SpectralCoeffs:
    """
    與輸入無關的速度差 v^A_t - v^B_t = (1-t)κ_k / ((1-t)²κ_k + t²c_k) · m_k

    t=1 時恰為零，t=0 時等於 m。
    """
    t = validate_unit_time(t)
    if not (mean.shape == data_cov.shape == noise_cov.shape):
        raise ShapeMismatchError(
            f"形狀不一致: mean={mean.shape}, data={data_cov.shape}, noise={noise_cov.shape}"
        )
    factor = velocity_mismatch_factor(data_cov.lambdas, noise_cov.lambdas, t)
    return SpectralCoeffs(factor * mean.coeffs)


def gaussian_analytic_field(
    measure_mean: Optional[SpectralCoeffs],
    data_cov: DiagonalCovariance,
    noise_cov: DiagonalCovariance,
) -> AnalyticGaussianField:
    """
    高斯條件期望給出的解析速度場

    v_{t,k}(r) = m_k + a_k(t)(r_k - t m_k)，a_k(t) = (t c_k - (1-t)κ_k) / ((1-t)²κ_k + t²c_k)。
    measure_mean 為 None 時即為零平均的測度 B。
    """
    return AnalyticGaussianField(measure_mean, data_cov, noise_cov)


def linear_sde_second_moment(spec: LinearSdeSpec, t) -> np.ndarray:
    """
    E_A[‖Y_t‖²] = e^{2ct}(M₀+S₀) + (g²D/(2c))(e^{2ct}-1)

    c = 0 時取極限 (M₀+S₀) + g²D t。
    """
    t = np.asarray(t, dtype=np.float64)
    c = spec.drift_coeff
    g2d = spec.diffusion ** 2 * spec.dim
    initial = spec.m0_total + spec.s0_total

    if c == 0.0:
        return initial + g2d * t

    growth = np.expm1(2.0 * c * t)
    return (growth + 1.0) * initial + g2d / (2.0 * c) * growth


def _girsanov_prefactor(spec: LinearSdeSpec, c_b: float) -> float:
    return (spec.drift_coeff - c_b) ** 2 / (2.0 * spec.diffusion ** 2)


def linear_sde_kl_closed_form(spec: LinearSdeSpec, c_b: float) -> float:
    """
    線性 SDE 路徑測度的 KL(A ‖ B)，spec.drift_coeff 為 c_A

    KL = ((c_A-c_B)²/(2g²)) · [ (M₀+S₀)E + (g²D/(2c_A))(E - 1) ]，E = (e^{2c_A}-1)/(2c_A)

    Raises:
        ValueError: 當 c_A = 0 時（請改用 linear_sde_kl_quadrature）
    """
    c_a = spec.drift_coeff
    if c_a == 0.0:
        raise ValueError("c_A = 0 沒有封閉式，請改用 linear_sde_kl_quadrature")
    if not np.isfinite(c_b):
        raise ValueError(f"c_B 必須是有限值: {c_b}")

    growth_mean = np.expm1(2.0 * c_a) / (2.0 * c_a)
    g2d = spec.diffusion ** 2 * spec.dim
    integral = (spec.m0_total + spec.s0_total) * growth_mean + g2d / (2.0 * c_a) * (growth_mean - 1.0)
    return float(_girsanov_prefactor(spec, c_b) * integral)


def linear_sde_kl_quadrature(spec: LinearSdeSpec, c_b: float, n_nodes: int = 10001) -> float:
    """
    以複合 Simpson 法積分 Girsanov 被積函數

    Args:
        spec: 測度 A 的規格 (c = c_A)
        c_b: 測度 B 的漂移係數
        n_nodes: 奇數節點數 (>= 3)

    Returns:
        KL 值；c_A = 0 時使用二階矩的解析極限
    """
    n_nodes = validate_odd_nodes(n_nodes)
    t = np.linspace(0.0, 1.0, n_nodes)
    integrand = linear_sde_second_moment(spec, t)
    return float(_girsanov_prefactor(spec, c_b) * simpson(integrand, x=t))


def linear_sde_kl_pair(spec: LinearSdeSpec, c_b: float) -> dict:
    """同時計算正向 KL(A‖B) 與反向 KL(B‖A)"""
    reverse_spec = spec.with_drift(c_b)
    forward = (
        linear_sde_kl_closed_form(spec, c_b) if spec.drift_coeff != 0.0
        else linear_sde_kl_quadrature(spec, c_b)
    )
    reverse = (
        linear_sde_kl_closed_form(reverse_spec, spec.drift_coeff) if c_b != 0.0
        else linear_sde_kl_quadrature(reverse_spec, spec.drift_coeff)
    )
    return {"kl_forward": forward, "kl_reverse": reverse}


def single_mode_fkl_quadrature(
    mean: float,
    data_var: float,
    noise_var: float,
    t_min: float = 0.0,
    t_max: float = 1.0,
) -> float:
    """
    單一模態的速度公式積分 ∫ (t/(1-t)) |v^diff(t)|²/κ dt

    對任何 κ > 0 都應等於 m²/(2c)。

    Args:
        mean: 模態平均值 m
        data_var: 資料變異數 c
        noise_var: 雜訊變異數 κ
        t_min, t_max: 積分區間

    Returns:
        自適應積分值
    """
    c = validate_positive(data_var, "data_var")
    kappa = validate_positive(noise_var, "noise_var")

    def integrand(t: float) -> float:
        denominator = (1.0 - t) ** 2 * kappa + t ** 2 * c
        return t * (1.0 - t) * kappa * mean ** 2 / denominator ** 2

    value, abserr = quad(integrand, t_min, t_max, epsabs=1e-12, epsrel=1e-10, limit=200)
    logger.debug(f"單模態積分: {value:.10f} (誤差估計 {abserr:.2e})")
    return float(value)
