"""
FKL 估計設定與結果資料結構定義
"""
import json
from dataclasses import dataclass, field
from enum import Enum
from typing import Optional, Tuple

import numpy as np

from config.default_settings import (
    DEFAULT_LOGIT_NORMAL_MEAN, DEFAULT_LOGIT_NORMAL_STD, DEFAULT_N_FUNCTIONS,
    DEFAULT_N_SUM_MODES, DEFAULT_N_TIME, DEFAULT_SEED, DEFAULT_T_MAX, DEFAULT_T_MIN,
)
from utils.validators import SamplerSupportError, validate_count, validate_positive


class SamplerKind(str, Enum):
    """時間採樣方式"""
    UNIFORM = "uniform"
    LOGIT_NORMAL = "logit-normal"
    IMPORTANCE = "importance"


def one_minus_t_antiderivative(t):
    """F(t) = -ln(1-t) - t，t/(1-t) 的反導數"""
    t = np.asarray(t, dtype=np.float64)
    return -np.log1p(-t) - t


@dataclass(frozen=True)
class TimeSampler:
    """[t_min, t_max] 上的時間採樣器"""
    kind: SamplerKind = SamplerKind.IMPORTANCE
    t_min: float = DEFAULT_T_MIN
    t_max: float = DEFAULT_T_MAX
    mean: float = DEFAULT_LOGIT_NORMAL_MEAN
    std: float = DEFAULT_LOGIT_NORMAL_STD

    def __post_init__(self):
        """資料驗證"""
        object.__setattr__(self, "kind", SamplerKind(self.kind))
        if not (0.0 <= self.t_min < self.t_max < 1.0):
            raise SamplerSupportError(
                f"時間支撐必須滿足 0 <= t_min < t_max < 1: [{self.t_min}, {self.t_max}]"
            )
        if self.kind is SamplerKind.LOGIT_NORMAL:
            validate_positive(self.std, "logit-normal std")
            if self.t_min == 0.0:
                raise SamplerSupportError("logit-normal 採樣器需要 t_min > 0")

    @property
    def normalizer(self) -> float:
        """Z = F(t_max) - F(t_min)"""
        return float(one_minus_t_antiderivative(self.t_max) - one_minus_t_antiderivative(self.t_min))

    def to_dict(self) -> dict:
        data = {"kind": self.kind.value, "t_min": self.t_min, "t_max": self.t_max}
        if self.kind is SamplerKind.LOGIT_NORMAL:
            data.update({"mean": self.mean, "std": self.std})
        return data


@dataclass(frozen=True)
class FklConfig:
    """Monte Carlo 估計設定"""
    n_function_samples: int = DEFAULT_N_FUNCTIONS
    n_time_per_function: int = DEFAULT_N_TIME
    n_sum_modes: int = DEFAULT_N_SUM_MODES
    sampler: TimeSampler = field(default_factory=TimeSampler)
    seed: int = DEFAULT_SEED

    def __post_init__(self):
        """資料驗證"""
        validate_count(self.n_function_samples, "n_function_samples")
        validate_count(self.n_time_per_function, "n_time_per_function")
        validate_count(self.n_sum_modes, "n_sum_modes")
        validate_count(self.seed, "seed", minimum=0)

    @property
    def n_evals(self) -> int:
        return self.n_function_samples * self.n_time_per_function

    def to_dict(self) -> dict:
        return {
            "n_function_samples": self.n_function_samples,
            "n_time_per_function": self.n_time_per_function,
            "n_sum_modes": self.n_sum_modes,
            "sampler": self.sampler.to_dict(),
            "seed": self.seed,
        }


@dataclass(frozen=True)
class FklEstimate:
    """FKL 的 Monte Carlo 估計值與標準誤"""
    value: float
    std_error: float
    n_evals: int
    config: FklConfig
    field_fingerprints: Tuple[str, str] = ("", "")
    direction: Optional[str] = None

    def __post_init__(self):
        """資料驗證"""
        if not np.isfinite(self.value):
            raise ValueError(f"估計值必須是有限值: {self.value}")
        if self.std_error < 0:
            raise ValueError(f"標準誤不能為負數: {self.std_error}")

    def to_dict(self) -> dict:
        """依照輸出格式轉換為字典"""
        data = {
            "value": self.value,
            "std_error": self.std_error,
            "n_evals": self.n_evals,
            "sampler": self.config.sampler.to_dict(),
            "n_sum_modes": self.config.n_sum_modes,
            "seed": self.config.seed,
            "field_fingerprints": list(self.field_fingerprints),
            "n_function_samples": self.config.n_function_samples,
            "n_time_per_function": self.config.n_time_per_function,
            "within_function_correlation": "ignored",
        }
        if self.direction:
            data["direction"] = self.direction
        return data

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2)

    def __str__(self) -> str:
        """字串表示"""
        label = f"{self.direction}: " if self.direction else ""
        return f"{label}FKL = {self.value:.4f} ± {self.std_error:.4f} (n={self.n_evals})"
