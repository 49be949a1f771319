"""
點雲與邊際指標報告資料結構定義
"""
from dataclasses import dataclass, field
from typing import Dict, List, Optional

import numpy as np


@dataclass(frozen=True, eq=False)
class PointCloud:
    """均勻權重的經驗點雲，points 形狀為 n x D"""
    points: np.ndarray

    def __post_init__(self):
        """資料驗證"""
        points = np.asarray(self.points, dtype=np.float64)
        if points.ndim == 1:
            points = points[:, None]

        if points.ndim != 2 or points.shape[0] < 1:
            raise ValueError(f"點雲必須為 n x D 且 n >= 1: {points.shape}")

        if not np.all(np.isfinite(points)):
            raise ValueError("點雲含有 NaN 或 Inf")

        points.setflags(write=False)
        object.__setattr__(self, "points", points)

    @property
    def n_points(self) -> int:
        return self.points.shape[0]

    @property
    def dim(self) -> int:
        return self.points.shape[1]

    def translated(self, shift: np.ndarray) -> "PointCloud":
        """平移所有點"""
        return PointCloud(self.points + np.asarray(shift, dtype=np.float64))


@dataclass
class MetricReport:
    """每個 (時間, 指標) 的值與中繼資料"""
    values: Dict[float, Dict[str, float]] = field(default_factory=dict)
    metadata: dict = field(default_factory=dict)
    std: Optional[Dict[float, Dict[str, float]]] = None

    def __post_init__(self):
        """資料驗證"""
        for time, row in self.values.items():
            for name, value in row.items():
                if not np.isfinite(value) or value < 0:
                    raise ValueError(f"指標值必須為非負有限值: τ={time}, {name}={value}")

    def add(self, time: float, metrics: Dict[str, float]) -> None:
        """加入一個時間點的指標"""
        for name, value in metrics.items():
            if not np.isfinite(value) or value < 0:
                raise ValueError(f"指標值必須為非負有限值: τ={time}, {name}={value}")
        self.values[float(time)] = dict(metrics)

    @property
    def times(self) -> List[float]:
        return sorted(self.values)

    def flat_row(self) -> Dict[str, float]:
        """展平成 '0.125/emd' 形式的欄位，一個方法一列"""
        row = {}
        for time in self.times:
            for name, value in self.values[time].items():
                row[f"{time:g}/{name}"] = value
        return row

    def to_dict(self) -> dict:
        data = {
            "values": {f"{t:g}": dict(self.values[t]) for t in self.times},
            "metadata": dict(self.metadata),
        }
        if self.std is not None:
            data["std"] = {f"{t:g}": dict(v) for t, v in sorted(self.std.items())}
        return data
