"""
方法排名彙整與 Friedman 檢定統計量
"""
from typing import Optional, Sequence, Union

import numpy as np
import pandas as pd
from loguru import logger
from scipy.stats import chi2, friedmanchisquare, rankdata


def rank_methods(
    scores: Union[pd.DataFrame, np.ndarray],
    lower_is_better: bool = True,
    methods: Optional[Sequence[str]] = None,
    tasks: Optional[Sequence[str]] = None,
) -> dict:
    """
    每個任務內排名 (平手取平均名次) 後計算平均名次與 Friedman 統計量

    χ²_F = 12T/(M(M+1)) · Σ_j (R_j - (M+1)/2)²

    Args:
        scores: 方法 x 任務 的分數表
        lower_is_better: 分數越低越好
        methods: ndarray 輸入時的方法名稱
        tasks: ndarray 輸入時的任務名稱

    Returns:
        {"ranks", "avg_ranks", "friedman_statistic", "p_value"}

    Raises:
        ValueError: 當方法或任務少於 2 個，或分數含 NaN 時
    """
    if not isinstance(scores, pd.DataFrame):
        array = np.asarray(scores, dtype=np.float64)
        if array.ndim != 2:
            raise ValueError(f"分數表必須為 2 維: {array.shape}")
        scores = pd.DataFrame(
            array,
            index=list(methods) if methods is not None else [f"method_{i}" for i in range(array.shape[0])],
            columns=list(tasks) if tasks is not None else [f"task_{j}" for j in range(array.shape[1])],
        )

    values = scores.to_numpy(dtype=np.float64)
    n_methods, n_tasks = values.shape
    if n_methods < 2 or n_tasks < 2:
        raise ValueError(f"排名至少需要 2 個方法與 2 個任務: {values.shape}")
    if np.any(np.isnan(values)):
        raise ValueError("分數表含有 NaN")

    oriented = values if lower_is_better else -values
    ranks = np.column_stack([rankdata(oriented[:, j], method="average") for j in range(n_tasks)])
    avg_ranks = ranks.mean(axis=1)

    center = (n_methods + 1) / 2.0
    statistic = 12.0 * n_tasks / (n_methods * (n_methods + 1)) * float(np.sum((avg_ranks - center) ** 2))
    p_value = float(chi2.sf(statistic, n_methods - 1))

    if n_methods >= 3 and statistic > 0:
        try:
            reference = friedmanchisquare(*oriented).statistic
            logger.debug(f"Friedman 統計量 {statistic:.6g}（含平手修正的對照值 {reference:.6g}）")
        except (ValueError, ZeroDivisionError) as e:
            logger.debug(f"略過 Friedman 對照計算: {e}")

    logger.info(f"完成 {n_methods} 個方法、{n_tasks} 個任務的排名，χ²_F = {statistic:.4f}")
    return {
        "ranks": pd.DataFrame(ranks, index=scores.index, columns=scores.columns),
        "avg_ranks": pd.Series(avg_ranks, index=scores.index, name="avg_rank"),
        "friedman_statistic": statistic,
        "p_value": p_value,
    }
