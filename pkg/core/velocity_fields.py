"""
速度場介面與兩種免訓練的實作

- AnalyticGaussianField：高斯測度的解析條件期望
- EmpiricalSoftmaxField：有限樣本池的精確經驗最佳解 (Bayes 權重 softmax)

可訓練的網路速度場位於 core.field_trainer。
"""
import hashlib
from abc import ABC, abstractmethod
from typing import Dict, Optional, Sequence, Union

import numpy as np
from loguru import logger
from scipy.special import softmax

from config.default_settings import DEFAULT_FLOOR_EPS, DEFAULT_T_COLLAPSE
from core.measures import cm_norm_sq, cm_norm_sq_batch, sample_batch
from core.sources import FunctionSource
from core.spectral_transform import one_sided_weights
from models.covariance import DiagonalCovariance, GaussianMeasure
from models.spectral import SpectralCoeffs
from utils.seeding import make_rng
from utils.validators import ShapeMismatchError, validate_unit_time, validate_unit_times


# 單次 softmax 評估的列數上限（控制 B x n 權重矩陣的記憶體）
SOFTMAX_ROW_CHUNK = 512

ERROR_STATISTICS = {"mean": np.mean, "median": np.median}


class VelocityField(ABC):
    """v: H x [0,1] -> H 的速度場，凍結後評估為確定性"""

    exact_boundary: bool = False

    @property
    @abstractmethod
    def n_modes(self) -> int:
        """模態數"""

    @property
    @abstractmethod
    def out_dim(self) -> int:
        """輸出維度"""

    @abstractmethod
    def eval_batch(self, x: np.ndarray, t: np.ndarray) -> np.ndarray:
        """
        批次評估

        Args:
            x: 形狀 (B, K, D) 的複數係數
            t: 形狀 (B,) 的時間

        Returns:
            形狀 (B, K, D) 的速度係數
        """

    @abstractmethod
    def _state_arrays(self) -> Sequence[np.ndarray]:
        """決定指紋的狀態陣列"""

    @property
    def shape(self) -> tuple:
        return self.n_modes, self.out_dim

    def eval(self, x: SpectralCoeffs, t: float) -> SpectralCoeffs:
        """評估單一輸入"""
        t = validate_unit_time(t)
        self.check_input_shape(x.shape)
        return SpectralCoeffs(self.eval_batch(x.coeffs[None], np.array([t]))[0])

    def check_input_shape(self, shape: tuple) -> None:
        if tuple(shape[-2:]) != self.shape:
            raise ShapeMismatchError(f"輸入形狀 {tuple(shape[-2:])} 與速度場 {self.shape} 不一致")

    def fingerprint(self) -> str:
        """狀態雜湊，用來在輸出中辨識速度場"""
        digest = hashlib.sha256(type(self).__name__.encode())
        for array in self._state_arrays():
            digest.update(np.ascontiguousarray(array).tobytes())
        return digest.hexdigest()[:16]


class AnalyticGaussianField(VelocityField):
    """
    N(m, R) 對應的解析速度場

    v_{t,k}(r) = m_k + a_k(t)(r_k - t m_k)，a_k(t) = (t c_k - (1-t)κ_k) / ((1-t)²κ_k + t² c_k)
    """

    exact_boundary = True

    def __init__(
        self,
        mean: Optional[SpectralCoeffs],
        data_cov: DiagonalCovariance,
        noise_cov: DiagonalCovariance,
    ):
        if data_cov.shape != noise_cov.shape:
            raise ShapeMismatchError(f"資料協方差 {data_cov.shape} 與雜訊協方差 {noise_cov.shape} 不一致")
        if mean is not None and mean.shape != data_cov.shape:
            raise ShapeMismatchError(f"平均值形狀 {mean.shape} 與協方差 {data_cov.shape} 不一致")

        self.mean = mean
        self.data_cov = data_cov
        self.noise_cov = noise_cov

    @property
    def n_modes(self) -> int:
        return self.data_cov.n_modes

    @property
    def out_dim(self) -> int:
        return self.data_cov.out_dim

    def gain(self, t: np.ndarray) -> np.ndarray:
        """a_k(t)，形狀 (B, K, D)"""
        t = np.asarray(t, dtype=np.float64)[:, None, None]
        c = self.data_cov.lambdas
        kappa = self.noise_cov.lambdas
        return (t * c - (1.0 - t) * kappa) / ((1.0 - t) ** 2 * kappa + t ** 2 * c)

    def eval_batch(self, x: np.ndarray, t: np.ndarray) -> np.ndarray:
        t = validate_unit_times(t)
        self.check_input_shape(x.shape)
        a = self.gain(t)
        if self.mean is None:
            return a * x
        m = self.mean.coeffs
        return m + a * (x - t[:, None, None] * m)

    def _state_arrays(self) -> Sequence[np.ndarray]:
        arrays = [self.data_cov.lambdas, self.noise_cov.lambdas]
        if self.mean is not None:
            arrays.append(self.mean.coeffs)
        return arrays


class EmpiricalSoftmaxField(VelocityField):
    """
    經驗測度的精確速度場

    ℓ_i = -Σ_{k,d} w_k |x_{k,d} - t p^{(i)}_{k,d}|² / (2 Q_{k,d})，Q = t²S + (1-t)²κ；
    權重 = softmax(ℓ)，E = Σ_i 權重_i p^{(i)}。

    bandwidth h = 0 時 S = 0，即 v = (E - x)/(1-t)；t >= 1 - t_collapse 時改用最近的樣本。
    bandwidth h > 0 時以 S = h² · 樣本池頻譜 對每個原子做高斯平滑，
    v = [(1-t)κ E - ((1-t)κ - tS) x] / Q，在 t → 1 時連續收斂到 x。
    """

    exact_boundary = True

    def __init__(
        self,
        pool: Union[np.ndarray, Sequence[SpectralCoeffs]],
        noise_cov: DiagonalCovariance,
        t_collapse: float = DEFAULT_T_COLLAPSE,
        bandwidth: float = 0.0,
    ):
        if not isinstance(pool, np.ndarray):
            pool = np.stack([p.coeffs for p in pool]) if len(pool) else np.empty((0,) + noise_cov.shape)
        pool = np.asarray(pool, dtype=np.complex128)

        if pool.ndim != 3 or pool.shape[0] < 1:
            raise ValueError(f"樣本池必須非空: {pool.shape}")
        if pool.shape[1:] != noise_cov.shape:
            raise ShapeMismatchError(f"樣本池形狀 {pool.shape[1:]} 與雜訊協方差 {noise_cov.shape} 不一致")
        if not 0.0 < t_collapse < 1.0:
            raise ValueError(f"t_collapse 必須在 (0, 1): {t_collapse}")
        if bandwidth < 0:
            raise ValueError(f"bandwidth 不能為負數: {bandwidth}")
        if bandwidth > 0 and pool.shape[0] < 2:
            raise ValueError("平滑 (bandwidth > 0) 需要至少 2 個樣本估計樣本池頻譜")

        self.pool = pool
        self.noise_cov = noise_cov
        self.t_collapse = float(t_collapse)
        self.bandwidth = float(bandwidth)

        n_pool = pool.shape[0]
        self._pool_real = pool.real.reshape(n_pool, -1)
        self._pool_imag = pool.imag.reshape(n_pool, -1)
        self._pool_energy = (np.abs(pool) ** 2).reshape(n_pool, -1)
        self._mode_weights = one_sided_weights(noise_cov.n_modes)[:, None]

        if bandwidth > 0:
            spread = np.maximum(np.var(pool, axis=0, ddof=1), DEFAULT_FLOOR_EPS)
            self.smoothing = bandwidth ** 2 * spread
        else:
            self.smoothing = np.zeros(noise_cov.shape)

        logger.debug(
            f"EmpiricalSoftmaxField 建立，樣本數: {n_pool}，形狀: {pool.shape[1:]}，bandwidth: {bandwidth}"
        )

    @property
    def n_modes(self) -> int:
        return self.pool.shape[1]

    @property
    def out_dim(self) -> int:
        return self.pool.shape[2]

    @property
    def pool_size(self) -> int:
        return self.pool.shape[0]

    def _collapse_mask(self, t: np.ndarray) -> np.ndarray:
        if self.bandwidth > 0:
            return np.zeros(t.shape, dtype=bool)
        return t >= 1.0 - self.t_collapse

    def _log_weights(self, x: np.ndarray, t: np.ndarray) -> np.ndarray:
        """ℓ 去掉與 i 無關的 |x|² 項，形狀 (B, n)"""
        t_col = t[:, None, None]
        q = t_col ** 2 * self.smoothing + (1.0 - t_col) ** 2 * self.noise_cov.lambdas
        scale = (self._mode_weights / (2.0 * q)).reshape(len(t), -1)

        cross = (scale * x.real.reshape(len(t), -1)) @ self._pool_real.T
        cross += (scale * x.imag.reshape(len(t), -1)) @ self._pool_imag.T
        energy = scale @ self._pool_energy.T
        return 2.0 * t[:, None] * cross - (t ** 2)[:, None] * energy

    def weights_batch(self, x: np.ndarray, t: np.ndarray) -> np.ndarray:
        """
        樣本池的後驗權重

        Returns:
            形狀 (B, n) 的權重，每列總和為 1
        """
        t = validate_unit_times(t)
        self.check_input_shape(x.shape)
        collapse = self._collapse_mask(t)
        t_eff = np.where(collapse | (t >= 1.0), 1.0 - self.t_collapse, t)
        log_w = self._log_weights(x, t_eff)

        weights = softmax(log_w, axis=1)
        if np.any(collapse):
            nearest = np.argmax(log_w[collapse], axis=1)
            one_hot = np.zeros((int(collapse.sum()), self.pool_size))
            one_hot[np.arange(len(nearest)), nearest] = 1.0
            weights[collapse] = one_hot
        return weights

    def _eval_rows(self, x: np.ndarray, t: np.ndarray) -> np.ndarray:
        weights = self.weights_batch(x, t)
        posterior_mean = (weights @ self.pool.reshape(self.pool_size, -1)).reshape(x.shape)

        at_one = t >= 1.0
        t_safe = np.where(at_one, 0.0, t)[:, None, None]
        if self.bandwidth > 0:
            kappa = self.noise_cov.lambdas
            q = t_safe ** 2 * self.smoothing + (1.0 - t_safe) ** 2 * kappa
            velocity = ((1.0 - t_safe) * kappa * posterior_mean
                        - ((1.0 - t_safe) * kappa - t_safe * self.smoothing) * x) / q
        else:
            velocity = (posterior_mean - x) / (1.0 - t_safe)

        velocity[at_one] = x[at_one]
        return velocity

    def eval_batch(self, x: np.ndarray, t: np.ndarray) -> np.ndarray:
        t = validate_unit_times(t)
        self.check_input_shape(x.shape)
        x = np.asarray(x, dtype=np.complex128)
        if len(t) <= SOFTMAX_ROW_CHUNK:
            return self._eval_rows(x, t)

        parts = [
            self._eval_rows(x[start:start + SOFTMAX_ROW_CHUNK], t[start:start + SOFTMAX_ROW_CHUNK])
            for start in range(0, len(t), SOFTMAX_ROW_CHUNK)
        ]
        return np.concatenate(parts, axis=0)

    def _state_arrays(self) -> Sequence[np.ndarray]:
        return [self.pool, self.noise_cov.lambdas, np.array([self.t_collapse, self.bandwidth])]


def field_difference_cm(
    field_a: VelocityField,
    field_b: VelocityField,
    x: SpectralCoeffs,
    t: float,
    noise_cov: DiagonalCovariance,
    n_sum_modes: int,
) -> float:
    """
    ‖v^A_t(x) - v^B_t(x)‖²_{H_μ0}（不含時間權重 t/(1-t)）
    """
    if field_a.shape != field_b.shape:
        raise ShapeMismatchError(f"兩個速度場形狀不一致: {field_a.shape} != {field_b.shape}")
    difference = field_a.eval(x, t) - field_b.eval(x, t)
    return cm_norm_sq(difference, noise_cov, n_sum_modes)


def field_error_profile(
    field: VelocityField,
    reference: VelocityField,
    source: FunctionSource,
    noise: GaussianMeasure,
    t_grid: Sequence[float],
    n_samples: int = 256,
    n_sum_modes: Optional[int] = None,
    seed: int = 0,
    statistic: str = "mean",
) -> Dict[float, float]:
    """
    速度場相對參考場的平方 CM 誤差隨 t 的變化

    每個 t 使用 x_t = t x₁ + (1-t) x₀，x₁ 來自 source、x₀ 來自雜訊測度。
    statistic 為 "mean" 或 "median"，對 n_samples 個點取平均或中位數。

    Returns:
        t -> 平方誤差的統計量
    """
    if field.shape != reference.shape:
        raise ShapeMismatchError(f"速度場形狀不一致: {field.shape} != {reference.shape}")
    if statistic not in ERROR_STATISTICS:
        raise ValueError(f"未知的統計量: {statistic}，可用: {sorted(ERROR_STATISTICS)}")
    reduce = ERROR_STATISTICS[statistic]
    n_sum_modes = n_sum_modes or field.n_modes

    profile = {}
    for index, t in enumerate(t_grid):
        t = validate_unit_time(t)
        rng = make_rng(seed, index)
        x1 = source.draw(rng, n_samples)
        x0 = sample_batch(noise, rng, n_samples)
        xt = t * x1 + (1.0 - t) * x0
        times = np.full(n_samples, t)
        error = field.eval_batch(xt, times) - reference.eval_batch(xt, times)
        profile[t] = float(reduce(cm_norm_sq_batch(error, noise.cov.lambdas, n_sum_modes)))

    logger.debug(f"速度場誤差剖面: {profile}")
    return profile
