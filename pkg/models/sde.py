"""
SDE 系統、模擬設定、軌跡資料集與快照資料結構定義
"""
from dataclasses import dataclass, field
from enum import Enum
from typing import Callable, Dict, List, Optional, Union

import numpy as np

from models.spectral import TimeGrid
from utils.validators import validate_count, validate_non_negative, validate_positive


DriftFn = Callable[[float, np.ndarray], np.ndarray]
InitSampler = Callable[[np.random.Generator, int], np.ndarray]
OutputMap = Callable[[np.ndarray], np.ndarray]


@dataclass(frozen=True)
class LinearSdeSpec:
    """線性 SDE dY = c Y dt + g dW，Y_0 ~ N(m0, Σ0) 每個維度獨立"""
    drift_coeff: float
    diffusion: float
    dim: int = 1
    init_mean: float = 2.0
    init_var: float = 0.2

    def __post_init__(self):
        """資料驗證"""
        if not np.isfinite(self.drift_coeff):
            raise ValueError(f"漂移係數必須是有限值: {self.drift_coeff}")
        validate_positive(self.diffusion, "diffusion")
        validate_count(self.dim, "dim")
        if not np.isfinite(self.init_mean):
            raise ValueError(f"初始平均值必須是有限值: {self.init_mean}")
        validate_non_negative(self.init_var, "init_var")

    @property
    def m0_total(self) -> float:
        """M₀ = D · m₀²"""
        return self.dim * self.init_mean ** 2

    @property
    def s0_total(self) -> float:
        """S₀ = D · Σ₀"""
        return self.dim * self.init_var

    def with_drift(self, drift_coeff: float) -> "LinearSdeSpec":
        """只替換漂移係數"""
        return LinearSdeSpec(drift_coeff, self.diffusion, self.dim, self.init_mean, self.init_var)

    def to_dict(self) -> dict:
        return {
            "drift_coeff": self.drift_coeff,
            "diffusion": self.diffusion,
            "dim": self.dim,
            "init_mean": self.init_mean,
            "init_var": self.init_var,
        }


@dataclass(frozen=True, eq=False)
class SdeSystem:
    """
    等向擴散的 SDE 系統

    state_dim 為內部狀態維度；output_map 把內部狀態映射到 dim 維的輸出
    （未提供時即為恆等映射，state_dim == dim）。
    """
    name: str
    dim: int
    drift: DriftFn
    diffusion: Union[float, np.ndarray]
    init_sampler: InitSampler
    state_dim: Optional[int] = None
    output_map: Optional[OutputMap] = None
    params: dict = field(default_factory=dict)

    def __post_init__(self):
        """資料驗證"""
        validate_count(self.dim, "dim")
        state_dim = self.dim if self.state_dim is None else validate_count(self.state_dim, "state_dim")
        object.__setattr__(self, "state_dim", state_dim)

        diffusion = np.broadcast_to(np.asarray(self.diffusion, dtype=np.float64), (state_dim,)).copy()
        if np.any(diffusion < 0) or not np.all(np.isfinite(diffusion)):
            raise ValueError(f"擴散係數必須是非負有限值: {self.diffusion}")
        diffusion.setflags(write=False)
        object.__setattr__(self, "diffusion", diffusion)

        if self.output_map is None and state_dim != self.dim:
            raise ValueError("內部狀態維度與輸出維度不同時必須提供 output_map")

    def observe(self, states: np.ndarray) -> np.ndarray:
        """把內部狀態 (..., state_dim) 映射到輸出 (..., dim)"""
        if self.output_map is None:
            return states
        return self.output_map(states)


@dataclass(frozen=True)
class SimConfig:
    """Euler-Maruyama 模擬設定"""
    horizon: float
    dt: float
    n_paths: int
    seed: int = 0

    def __post_init__(self):
        """資料驗證：T/dt 必須是整數步數"""
        validate_positive(self.horizon, "horizon")
        validate_positive(self.dt, "dt")
        validate_count(self.n_paths, "n_paths")
        ratio = self.horizon / self.dt
        if abs(ratio - round(ratio)) > 1e-9 * max(1.0, ratio) or round(ratio) < 1:
            raise ValueError(f"T/dt 必須是正整數步數: {self.horizon}/{self.dt} = {ratio}")

    @property
    def n_steps(self) -> int:
        return int(round(self.horizon / self.dt))

    @property
    def m_points(self) -> int:
        return self.n_steps + 1

    def to_dict(self) -> dict:
        return {"horizon": self.horizon, "dt": self.dt, "n_paths": self.n_paths, "seed": self.seed}


@dataclass(frozen=True, eq=False)
class TrajectoryDataset:
    """均勻時間網格上的軌跡集合，paths 形狀為 n_paths x m_points x D"""
    grid: TimeGrid
    paths: np.ndarray
    provenance: dict = field(default_factory=dict)

    def __post_init__(self):
        """資料驗證"""
        paths = np.asarray(self.paths, dtype=np.float64)
        if paths.ndim != 3:
            raise ValueError(f"軌跡陣列必須為 3 維 (path, time, dim): {paths.shape}")

        if paths.shape[1] != self.grid.m_points:
            raise ValueError(f"軌跡時間點數 {paths.shape[1]} 與網格 {self.grid.m_points} 不符")

        if not np.all(np.isfinite(paths)):
            raise ValueError("軌跡含有 NaN 或 Inf")

        paths.setflags(write=False)
        object.__setattr__(self, "paths", paths)

    @property
    def n_paths(self) -> int:
        return self.paths.shape[0]

    @property
    def m_points(self) -> int:
        return self.paths.shape[1]

    @property
    def dim(self) -> int:
        return self.paths.shape[2]

    def __str__(self) -> str:
        name = self.provenance.get("system", "unknown")
        return f"TrajectoryDataset({name}, shape={self.paths.shape})"


class SplitRule(str, Enum):
    """快照的訓練/驗證劃分規則"""
    ODD_TRAIN_EVEN_VAL = "odd-train-even-val"
    ALL_SHARED_RESAMPLE = "all-shared-resample"
    EXPLICIT = "explicit"


@dataclass(frozen=True, eq=False)
class Snapshot:
    """單一時間點的點雲"""
    time: float
    split: str
    points: np.ndarray

    def __post_init__(self):
        if self.split not in ("train", "validation"):
            raise ValueError(f"劃分標籤必須是 train 或 validation: {self.split}")
        points = np.asarray(self.points, dtype=np.float64)
        if points.ndim != 2:
            raise ValueError(f"點雲必須為 n x D: {points.shape}")
        object.__setattr__(self, "points", points)


@dataclass(frozen=True, eq=False)
class SnapshotSet:
    """由軌跡擷取的時間索引點雲"""
    snapshots: List[Snapshot]
    rule: SplitRule
    provenance: dict = field(default_factory=dict)

    @property
    def times(self) -> List[float]:
        """所有不重複的時間點 (已排序)"""
        return sorted({s.time for s in self.snapshots})

    def for_split(self, split: str) -> List[Snapshot]:
        """取得指定劃分的快照"""
        return [s for s in self.snapshots if s.split == split]

    def clouds(self, split: str) -> Dict[float, np.ndarray]:
        """時間 -> 點雲 的字典"""
        return {s.time: s.points for s in self.for_split(split)}

    def label_counts(self) -> dict:
        """各劃分的快照數"""
        return {
            "train": len(self.for_split("train")),
            "validation": len(self.for_split("validation")),
        }
