"""
實訊號的截斷傅立葉轉換與 L² 幾何

正規化：f_k = (1/M) Σ_j f(x_j) exp(-2πi k j / M)，係數以單邊 (rfft) 方式儲存。
轉換把 M 個樣本視為週期節點 j/M，因此常數與正弦訊號可被精確表示。
"""
from typing import Optional

import numpy as np
from loguru import logger

from models.spectral import FunctionSample, SpectralCoeffs, TimeGrid
from utils.validators import ResolutionError


def max_modes_for(m_points: int, mirror: bool = False) -> int:
    """網格在 (可選) 鏡射延伸後能解析的最大模態數"""
    length = transform_length(m_points, mirror)
    return length // 2 + 1


def transform_length(m_points: int, mirror: bool = False) -> int:
    """實際進行 FFT 的序列長度；鏡射延伸為 2M-2"""
    return 2 * m_points - 2 if mirror and m_points > 2 else m_points


def one_sided_weights(n_modes: int, length: Optional[int] = None) -> np.ndarray:
    """
    單邊儲存的 Parseval 權重 [1, 2, 2, ...]

    給定偶數的轉換長度 length 且保留到 Nyquist 模態 (length/2) 時，該模態是實數、權重為 1。
    """
    weights = np.full(n_modes, 2.0)
    weights[0] = 1.0
    if length is not None and length % 2 == 0 and n_modes == length // 2 + 1 and n_modes > 1:
        weights[-1] = 1.0
    return weights


def nyquist_free_modes(m_points: int, mirror: bool = False) -> int:
    """不含 Nyquist 模態的最大模態數 (偶數轉換長度時比 max_modes_for 少 1)"""
    length = transform_length(m_points, mirror)
    return (length - 1) // 2 + 1


def _mirror_extend(values: np.ndarray) -> np.ndarray:
    """沿時間軸 (倒數第二軸) 做偶反射延伸"""
    if values.shape[-2] <= 2:
        return values
    reflected = values[..., -2:0:-1, :]
    return np.concatenate([values, reflected], axis=-2)


def to_spectral_batch(values: np.ndarray, n_modes: int, mirror: bool = False) -> np.ndarray:
    """
    批次轉換到頻譜係數

    Args:
        values: 形狀 (..., M, D) 的實數陣列
        n_modes: 保留的模態數 K
        mirror: 是否先做偶反射延伸以降低洩漏

    Returns:
        形狀 (..., K, D) 的複數係數

    Raises:
        ResolutionError: 當 K 超出網格可解析範圍時
    """
    values = np.asarray(values, dtype=np.float64)
    if values.ndim < 2:
        raise ValueError(f"函數值至少需要 2 維 (M, D): {values.shape}")

    m_points = values.shape[-2]
    limit = max_modes_for(m_points, mirror)
    if n_modes < 1 or n_modes > limit:
        raise ResolutionError(
            f"模態數 {n_modes} 超出網格可解析上限 {limit} (M={m_points}, mirror={mirror})"
        )

    if mirror:
        values = _mirror_extend(values)
    length = values.shape[-2]

    coeffs = np.fft.rfft(values, axis=-2)[..., :n_modes, :] / length
    coeffs[..., 0, :] = coeffs[..., 0, :].real
    return coeffs


def to_spectral(f: FunctionSample, n_modes: int, mirror: bool = False) -> SpectralCoeffs:
    """
    將函數樣本投影到前 n_modes 個傅立葉模態

    Args:
        f: 函數樣本
        n_modes: 保留的模態數
        mirror: 是否做偶反射延伸

    Returns:
        SpectralCoeffs，k=0 係數等於各維度的樣本平均（mirror=False 時）
    """
    return SpectralCoeffs(to_spectral_batch(f.values, n_modes, mirror))


def from_spectral_batch(coeffs: np.ndarray, m_points: int) -> np.ndarray:
    """
    批次由頻譜係數重建週期節點上的函數值

    Args:
        coeffs: 形狀 (..., K, D) 的複數係數
        m_points: 輸出網格點數

    Returns:
        形狀 (..., M, D) 的實數陣列
    """
    coeffs = np.asarray(coeffs, dtype=np.complex128)
    n_keep = min(coeffs.shape[-2], m_points // 2 + 1)
    if n_keep < coeffs.shape[-2]:
        logger.debug(f"重建時捨棄 {coeffs.shape[-2] - n_keep} 個超出網格的模態")

    full_shape = coeffs.shape[:-2] + (m_points // 2 + 1, coeffs.shape[-1])
    full = np.zeros(full_shape, dtype=np.complex128)
    full[..., :n_keep, :] = coeffs[..., :n_keep, :]
    return np.fft.irfft(full * m_points, n=m_points, axis=-2)


def from_spectral(c: SpectralCoeffs, grid: TimeGrid) -> FunctionSample:
    """由頻譜係數重建函數樣本"""
    return FunctionSample(grid, from_spectral_batch(c.coeffs, grid.m_points))


def l2_norm_sq_batch(coeffs: np.ndarray, length: Optional[int] = None) -> np.ndarray:
    """批次單邊 Parseval 平方範數，回傳形狀 (...,)；length 為轉換長度 (用於 Nyquist 權重)"""
    coeffs = np.asarray(coeffs)
    weights = one_sided_weights(coeffs.shape[-2], length)[:, None]
    return np.sum(weights * np.abs(coeffs) ** 2, axis=(-2, -1))


def l2_norm_sq(c: SpectralCoeffs, length: Optional[int] = None) -> float:
    """
    ‖f‖²_{L²} = Σ_d ( |f_{0,d}|² + 2 Σ_{k>=1} |f_{k,d}|² )

    length 為偶數且 c 含 Nyquist 模態時，該項只計一次。
    """
    return float(l2_norm_sq_batch(c.coeffs, length))
