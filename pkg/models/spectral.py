"""
函數空間的離散表示資料結構定義
"""
from dataclasses import dataclass
from typing import Union

import numpy as np


@dataclass(frozen=True)
class TimeGrid:
    """
    [0,1] 上的均勻時間網格，物理時間長度只作為中繼資料

    locations 是包含兩端的 j/(M-1)，用於快照與物理時間；頻譜轉換則把同樣的 M 個樣本
    視為週期節點 j/M (見 core.spectral_transform)。
    """
    m_points: int
    physical_horizon: float = 1.0

    def __post_init__(self):
        """資料驗證"""
        if int(self.m_points) != self.m_points or self.m_points < 2:
            raise ValueError(f"網格點數必須是 >= 2 的整數: {self.m_points}")

        if not np.isfinite(self.physical_horizon) or self.physical_horizon <= 0:
            raise ValueError(f"物理時間長度必須大於 0: {self.physical_horizon}")

    @property
    def locations(self) -> np.ndarray:
        """重新縮放到 [0,1] 的取樣位置 j/(M-1)"""
        return np.linspace(0.0, 1.0, self.m_points)

    @property
    def physical_times(self) -> np.ndarray:
        """原始時間軸上的取樣位置"""
        return self.locations * self.physical_horizon

    @property
    def max_modes(self) -> int:
        """單邊儲存下可解析的最大模態數"""
        return self.m_points // 2 + 1

    def index_of(self, tau: float, tol: float = 1e-9) -> int:
        """
        取得重新縮放時間 tau 對應的網格索引

        Args:
            tau: [0,1] 中的時間
            tol: 容許的網格偏差

        Returns:
            網格索引

        Raises:
            ValueError: 當 tau 不在網格點上時（不做內插）
        """
        position = float(tau) * (self.m_points - 1)
        index = int(round(position))
        if not 0 <= index < self.m_points or abs(position - index) > tol * (self.m_points - 1):
            raise ValueError(f"時間 {tau} 不在網格點上 (M={self.m_points})")
        return index

    def to_dict(self) -> dict:
        """轉換為字典格式"""
        return {"m_points": self.m_points, "physical_horizon": self.physical_horizon}


@dataclass(frozen=True, eq=False)
class FunctionSample:
    """時間網格上的向量值函數樣本，values 形狀為 m_points x out_dim"""
    grid: TimeGrid
    values: np.ndarray

    def __post_init__(self):
        """資料驗證並固定為 2 維 float64"""
        values = np.asarray(self.values, dtype=np.float64)
        if values.ndim == 1:
            values = values[:, None]

        if values.ndim != 2 or values.shape[0] != self.grid.m_points:
            raise ValueError(
                f"函數值形狀 {values.shape} 與網格點數 {self.grid.m_points} 不符"
            )

        if values.shape[1] < 1:
            raise ValueError("輸出維度必須至少為 1")

        if not np.all(np.isfinite(values)):
            raise ValueError("函數值含有 NaN 或 Inf")

        values.setflags(write=False)
        object.__setattr__(self, "values", values)

    @property
    def out_dim(self) -> int:
        return self.values.shape[1]


Scalar = Union[int, float]


@dataclass(frozen=True, eq=False)
class SpectralCoeffs:
    """
    截斷的單邊傅立葉係數

    coeffs 形狀為 n_modes x out_dim，k>=1 的共軛夥伴 f_{-k} = conj(f_k) 為隱含。
    """
    coeffs: np.ndarray

    def __post_init__(self):
        """資料驗證：實訊號的 k=0 係數虛部必須為零"""
        coeffs = np.array(self.coeffs, dtype=np.complex128)
        if coeffs.ndim == 1:
            coeffs = coeffs[:, None]

        if coeffs.ndim != 2 or coeffs.shape[0] < 1 or coeffs.shape[1] < 1:
            raise ValueError(f"係數形狀必須為 n_modes x out_dim: {coeffs.shape}")

        if not np.all(np.isfinite(coeffs)):
            raise ValueError("係數含有 NaN 或 Inf")

        scale = max(1.0, float(np.max(np.abs(coeffs))))
        if np.max(np.abs(coeffs[0].imag)) > 1e-12 * scale:
            raise ValueError("k=0 係數的虛部必須為零（實訊號）")
        coeffs[0] = coeffs[0].real

        coeffs.setflags(write=False)
        object.__setattr__(self, "coeffs", coeffs)

    @classmethod
    def zeros(cls, n_modes: int, out_dim: int) -> "SpectralCoeffs":
        """建立全零係數"""
        return cls(np.zeros((n_modes, out_dim), dtype=np.complex128))

    @property
    def n_modes(self) -> int:
        return self.coeffs.shape[0]

    @property
    def out_dim(self) -> int:
        return self.coeffs.shape[1]

    @property
    def shape(self) -> tuple:
        return self.coeffs.shape

    def truncate(self, n_modes: int) -> "SpectralCoeffs":
        """保留前 n_modes 個模態"""
        if n_modes < 1 or n_modes > self.n_modes:
            raise ValueError(f"截斷模態數必須在 1..{self.n_modes}: {n_modes}")
        return SpectralCoeffs(self.coeffs[:n_modes])

    def _other(self, other: "SpectralCoeffs") -> np.ndarray:
        if not isinstance(other, SpectralCoeffs):
            return NotImplemented
        if other.shape != self.shape:
            raise ValueError(f"係數形狀不一致: {self.shape} != {other.shape}")
        return other.coeffs

    def __add__(self, other: "SpectralCoeffs") -> "SpectralCoeffs":
        other_coeffs = self._other(other)
        if other_coeffs is NotImplemented:
            return NotImplemented
        return SpectralCoeffs(self.coeffs + other_coeffs)

    def __sub__(self, other: "SpectralCoeffs") -> "SpectralCoeffs":
        other_coeffs = self._other(other)
        if other_coeffs is NotImplemented:
            return NotImplemented
        return SpectralCoeffs(self.coeffs - other_coeffs)

    def __mul__(self, scalar: Scalar) -> "SpectralCoeffs":
        if not isinstance(scalar, (int, float, np.floating, np.integer)):
            return NotImplemented
        return SpectralCoeffs(self.coeffs * float(scalar))

    __rmul__ = __mul__

    def __neg__(self) -> "SpectralCoeffs":
        return SpectralCoeffs(-self.coeffs)

    def allclose(self, other: "SpectralCoeffs", atol: float = 1e-12) -> bool:
        """逐係數比較"""
        return self.shape == other.shape and bool(np.allclose(self.coeffs, other.coeffs, rtol=0.0, atol=atol))

    def to_dict(self) -> dict:
        """轉換為字典格式（實部/虛部分開）"""
        return {
            "n_modes": self.n_modes,
            "out_dim": self.out_dim,
            "real": self.coeffs.real.tolist(),
            "imag": self.coeffs.imag.tolist(),
        }

    def __str__(self) -> str:
        """字串表示"""
        return f"SpectralCoeffs(n_modes={self.n_modes}, out_dim={self.out_dim})"
