"""
傅立葉基底下對角協方差與高斯測度資料結構定義
"""
from dataclasses import dataclass, field
from enum import Enum
from typing import Optional

import numpy as np

from config.default_settings import CONDITIONING_RATIO, MIN_EIGENVALUE
from models.spectral import SpectralCoeffs
from utils.validators import ShapeMismatchError


class CovarianceKind(str, Enum):
    """協方差的來源種類"""
    MATERN_OPERATOR = "matern-operator"
    ROUGHENED_EMPIRICAL = "roughened-empirical"
    IDENTITY = "identity"
    CUSTOM = "custom"


@dataclass(frozen=True, eq=False)
class DiagonalCovariance:
    """每個 (模態, 輸出維度) 的嚴格正特徵值 λ_{k,d}"""
    lambdas: np.ndarray
    kind: CovarianceKind = CovarianceKind.CUSTOM
    params: dict = field(default_factory=dict)

    def __post_init__(self):
        """資料驗證"""
        lambdas = np.array(self.lambdas, dtype=np.float64)
        if lambdas.ndim == 1:
            lambdas = lambdas[:, None]

        if lambdas.ndim != 2 or lambdas.shape[0] < 1 or lambdas.shape[1] < 1:
            raise ValueError(f"特徵值形狀必須為 n_modes x out_dim: {lambdas.shape}")

        if not np.all(np.isfinite(lambdas)):
            raise ValueError("特徵值含有 NaN 或 Inf")

        if np.any(lambdas <= MIN_EIGENVALUE):
            raise ValueError(f"特徵值必須嚴格大於 {MIN_EIGENVALUE:g}")

        lambdas.setflags(write=False)
        object.__setattr__(self, "lambdas", lambdas)
        object.__setattr__(self, "kind", CovarianceKind(self.kind))

    @property
    def n_modes(self) -> int:
        return self.lambdas.shape[0]

    @property
    def out_dim(self) -> int:
        return self.lambdas.shape[1]

    @property
    def shape(self) -> tuple:
        return self.lambdas.shape

    @property
    def is_ill_conditioned(self) -> bool:
        """最小特徵值低於 1e-15 倍最大特徵值"""
        return bool(self.lambdas.min() < CONDITIONING_RATIO * self.lambdas.max())

    def truncate(self, n_modes: int) -> "DiagonalCovariance":
        """保留前 n_modes 個模態"""
        if n_modes < 1 or n_modes > self.n_modes:
            raise ValueError(f"截斷模態數必須在 1..{self.n_modes}: {n_modes}")
        return DiagonalCovariance(self.lambdas[:n_modes], self.kind, dict(self.params))

    def scaled(self, factor: float) -> "DiagonalCovariance":
        """回傳 factor * C，種類改為 CUSTOM"""
        params = dict(self.params, scaled_from=self.kind.value, factor=float(factor))
        return DiagonalCovariance(self.lambdas * float(factor), CovarianceKind.CUSTOM, params)

    def to_dict(self) -> dict:
        """轉換為字典格式"""
        return {
            "kind": self.kind.value,
            "params": dict(self.params),
            "n_modes": self.n_modes,
            "out_dim": self.out_dim,
            "trace": float(self.lambdas.sum()),
        }

    def __str__(self) -> str:
        """字串表示"""
        return f"DiagonalCovariance({self.kind.value}, n_modes={self.n_modes}, out_dim={self.out_dim})"


@dataclass(frozen=True, eq=False)
class GaussianMeasure:
    """H 上的高斯測度 N(mean, cov)"""
    mean: SpectralCoeffs
    cov: DiagonalCovariance

    def __post_init__(self):
        """資料驗證"""
        if self.mean.shape != self.cov.shape:
            raise ShapeMismatchError(
                f"平均值形狀 {self.mean.shape} 與協方差形狀 {self.cov.shape} 不一致"
            )

    @classmethod
    def centered(cls, cov: DiagonalCovariance, mean: Optional[SpectralCoeffs] = None) -> "GaussianMeasure":
        """建立平均值為零 (或給定) 的測度"""
        if mean is None:
            mean = SpectralCoeffs.zeros(cov.n_modes, cov.out_dim)
        return cls(mean, cov)

    @property
    def n_modes(self) -> int:
        return self.cov.n_modes

    @property
    def out_dim(self) -> int:
        return self.cov.out_dim
