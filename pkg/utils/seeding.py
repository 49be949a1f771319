"""
亂數產生器工具

所有隨機性都來自計數器型的 Philox 產生器家族。
工作者 i 的串流由 SeedSequence([seed, i]) 衍生，同一組 (seed, i) 永遠得到相同的串流。
"""
import os
from typing import Optional

import numpy as np
from loguru import logger

from config.default_settings import DEFAULT_SEED, SEED_ENV_VAR


def make_rng(seed: int, stream: int = 0) -> np.random.Generator:
    """
    建立可重現的亂數產生器

    Args:
        seed: 基礎種子
        stream: 工作者或區塊索引

    Returns:
        numpy Generator（Philox）
    """
    if seed < 0 or stream < 0:
        raise ValueError(f"種子與串流索引不能為負數: seed={seed}, stream={stream}")
    return np.random.Generator(np.random.Philox(np.random.SeedSequence([int(seed), int(stream)])))


def resolve_seed(seed: Optional[int] = None) -> int:
    """
    決定實際使用的種子：明確指定 > FKL_SEED 環境變數 > 預設值

    Raises:
        ValueError: 當環境變數不是整數時
    """
    if seed is not None:
        return int(seed)

    env_value = os.environ.get(SEED_ENV_VAR)
    if env_value:
        try:
            resolved = int(env_value)
        except ValueError:
            raise ValueError(f"{SEED_ENV_VAR} 必須是整數: {env_value}")
        logger.debug(f"使用環境變數 {SEED_ENV_VAR} 的種子: {resolved}")
        return resolved

    return DEFAULT_SEED
