"""
ν^A 的樣本來源：檔案樣本池或高斯測度
"""
from abc import ABC, abstractmethod
from typing import Sequence, Tuple, Union

import numpy as np
from loguru import logger

from core.measures import sample_batch
from models.covariance import GaussianMeasure
from models.spectral import SpectralCoeffs


class FunctionSource(ABC):
    """可重複抽取頻譜係數的來源"""

    @property
    @abstractmethod
    def shape(self) -> Tuple[int, int]:
        """(n_modes, out_dim)"""

    @abstractmethod
    def draw(self, rng: np.random.Generator, size: int) -> np.ndarray:
        """抽取 size 個樣本，回傳 (size, K, D)"""


class PoolSource(FunctionSource):
    """從有限樣本池中有放回地抽取"""

    def __init__(self, pool: Union[np.ndarray, Sequence[SpectralCoeffs]]):
        if not isinstance(pool, np.ndarray):
            pool = np.stack([p.coeffs for p in pool])
        pool = np.asarray(pool, dtype=np.complex128)
        if pool.ndim != 3 or pool.shape[0] < 1:
            raise ValueError(f"樣本池必須為非空的 (n, K, D) 陣列: {pool.shape}")
        self.pool = pool
        logger.debug(f"PoolSource 建立，樣本數: {pool.shape[0]}")

    @property
    def shape(self) -> Tuple[int, int]:
        return self.pool.shape[1], self.pool.shape[2]

    def __len__(self) -> int:
        return self.pool.shape[0]

    def draw(self, rng: np.random.Generator, size: int) -> np.ndarray:
        index = rng.integers(0, self.pool.shape[0], size=size)
        return self.pool[index]


class MeasureSource(FunctionSource):
    """直接從高斯測度取樣"""

    def __init__(self, measure: GaussianMeasure):
        self.measure = measure

    @property
    def shape(self) -> Tuple[int, int]:
        return self.measure.cov.shape

    def draw(self, rng: np.random.Generator, size: int) -> np.ndarray:
        return sample_batch(self.measure, rng, size)


def split_pool(pool: np.ndarray, rng: np.random.Generator) -> Tuple[np.ndarray, np.ndarray]:
    """
    將樣本池隨機對半切分為 (速度場樣本池, 估計樣本池)

    避免 x₁ 自己的原子主導 softmax 權重。

    Raises:
        ValueError: 當樣本少於 2 個時
    """
    pool = np.asarray(pool)
    if pool.shape[0] < 2:
        raise ValueError(f"切分樣本池至少需要 2 個樣本: {pool.shape[0]}")
    order = rng.permutation(pool.shape[0])
    half = pool.shape[0] // 2
    return pool[order[:half]], pool[order[half:]]
