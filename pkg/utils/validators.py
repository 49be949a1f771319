"""
輸入驗證函數與錯誤型別
"""
import math
from pathlib import Path
from typing import Union

import numpy as np


class ResolutionError(ValueError):
    """要求的模態數超過網格可解析的上限"""


class ShapeMismatchError(ValueError):
    """係數、協方差或速度場的形狀不一致"""


class SamplerSupportError(ValueError):
    """時間採樣器的支撐區間無效（例如 t_max >= 1）"""


class FileFormatError(ValueError):
    """FKLT / FKLW / CSV 檔案格式錯誤"""


class SimulationDivergedError(RuntimeError):
    """Euler-Maruyama 模擬發散"""

    def __init__(self, message: str, step_index: int):
        super().__init__(message)
        self.step_index = step_index


class TrainingDivergedError(RuntimeError):
    """訓練損失出現 NaN"""

    def __init__(self, message: str, batch_seed: int):
        super().__init__(message)
        self.batch_seed = batch_seed


def validate_positive(value: float, name: str) -> float:
    """
    驗證參數為有限正數

    Args:
        value: 參數值
        name: 參數名稱（用於錯誤訊息）

    Returns:
        轉為 float 的參數值

    Raises:
        ValueError: 當參數非正或非有限時
    """
    try:
        number = float(value)
    except (TypeError, ValueError):
        raise ValueError(f"{name} 必須是數字: {value}")
    if not math.isfinite(number) or number <= 0:
        raise ValueError(f"{name} 必須是正數: {value}")
    return number


def validate_non_negative(value: float, name: str) -> float:
    """驗證參數為有限非負數"""
    try:
        number = float(value)
    except (TypeError, ValueError):
        raise ValueError(f"{name} 必須是數字: {value}")
    if not math.isfinite(number) or number < 0:
        raise ValueError(f"{name} 不能為負數: {value}")
    return number


def validate_count(value: int, name: str, minimum: int = 1) -> int:
    """
    驗證整數計數

    Args:
        value: 計數值
        name: 參數名稱
        minimum: 最小允許值

    Returns:
        驗證後的整數

    Raises:
        ValueError: 當計數不是整數或小於下限時
    """
    if isinstance(value, bool) or int(value) != value:
        raise ValueError(f"{name} 必須是整數: {value}")
    count = int(value)
    if count < minimum:
        raise ValueError(f"{name} 不能少於 {minimum}: {value}")
    return count


def validate_unit_time(t: float, allow_one: bool = True) -> float:
    """
    驗證時間點位於 [0, 1]

    Raises:
        ValueError: 當 t 超出範圍時
    """
    t = float(t)
    upper_ok = t <= 1.0 if allow_one else t < 1.0
    if not (0.0 <= t and upper_ok):
        bound = "[0, 1]" if allow_one else "[0, 1)"
        raise ValueError(f"時間 t 必須在 {bound} 範圍內: {t}")
    return t


def validate_unit_times(t: np.ndarray) -> np.ndarray:
    """批次版本的時間驗證，回傳 float64 陣列"""
    t = np.asarray(t, dtype=np.float64)
    if np.any(~np.isfinite(t)) or np.any(t < 0.0) or np.any(t > 1.0):
        raise ValueError("時間 t 必須在 [0, 1] 範圍內")
    return t


def validate_odd_nodes(n_nodes: int) -> int:
    """驗證 Simpson 積分節點數為 >= 3 的奇數"""
    n_nodes = validate_count(n_nodes, "n_nodes", minimum=3)
    if n_nodes % 2 == 0:
        raise ValueError(f"Simpson 積分節點數必須是奇數: {n_nodes}")
    return n_nodes


def validate_file_path(file_path: Union[str, Path], must_exist: bool = True) -> Path:
    """
    驗證檔案路徑

    Args:
        file_path: 檔案路徑
        must_exist: 檔案是否必須存在

    Returns:
        驗證後的 Path 物件

    Raises:
        ValueError: 當路徑無效時
    """
    path = Path(file_path)

    if must_exist:
        if not path.exists():
            raise ValueError(f"檔案不存在: {file_path}")

        if not path.is_file():
            raise ValueError(f"路徑不是檔案: {file_path}")

    return path
