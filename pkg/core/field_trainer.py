"""
可訓練的頻譜速度場

前饋網路 m_θ(x, t, c) 以邊界參數化 v_θ(x, t) = x + m_θ(x, t) - m_θ(x, 1) 包裝，
兩個資料集以一個條件位元共用權重。損失為 L² 與 Cameron-Martin 範數的線性組合，
權重 w 線性衰減；Adam + 餘弦退火 + EMA。
"""
import copy
from dataclasses import asdict, dataclass, field
from typing import List, Optional, Sequence, Tuple

import numpy as np
import torch
from loguru import logger
from scipy.special import expit
from torch import nn

from config.default_settings import (
    DEFAULT_ACTIVATION, DEFAULT_ADAM_BETAS, DEFAULT_ADAM_EPS, DEFAULT_DEPTH, DEFAULT_EMA_RATE,
    DEFAULT_SEED, DEFAULT_WIDTH, SUPPORTED_ACTIVATIONS, TIME_EMBEDDING_FREQUENCIES,
    get_training_preset,
)
from core.fkl_estimator import sample_times
from core.measures import sample_batch
from core.spectral_transform import one_sided_weights
from core.velocity_fields import VelocityField
from models.covariance import GaussianMeasure
from models.estimate import SamplerKind, TimeSampler
from utils.seeding import make_rng
from utils.validators import (
    ShapeMismatchError, TrainingDivergedError, validate_count, validate_positive,
    validate_unit_times,
)


ACTIVATIONS = {"gelu": nn.GELU, "silu": nn.SiLU, "tanh": nn.Tanh}
TRAINING_SAMPLERS = ["uniform", "logit-normal", "importance", "curriculum"]
N_CONDITIONS = 2


@dataclass
class TrainConfig:
    """網路速度場的訓練設定"""
    iterations: int = 2000
    batch_size: int = 256
    lr: float = 1e-3
    lr_min: float = 0.0
    w_start: float = 1.0
    w_end: float = 0.2
    t_sampler: str = "curriculum"
    curriculum_mean: float = 0.0
    curriculum_std: float = 1.0
    curriculum_fraction: float = 0.4
    width: int = DEFAULT_WIDTH
    depth: int = DEFAULT_DEPTH
    activation: str = DEFAULT_ACTIVATION
    ema_rate: float = DEFAULT_EMA_RATE
    seed: int = DEFAULT_SEED
    log_every: int = 500

    def __post_init__(self):
        """資料驗證"""
        validate_count(self.iterations, "iterations", minimum=0)
        validate_count(self.batch_size, "batch_size")
        validate_positive(self.lr, "lr")
        validate_count(self.width, "width")
        validate_count(self.depth, "depth")
        validate_count(self.seed, "seed", minimum=0)
        validate_count(self.log_every, "log_every")

        for name in ("w_start", "w_end", "curriculum_fraction"):
            value = getattr(self, name)
            if not 0.0 <= value <= 1.0:
                raise ValueError(f"{name} 必須在 [0, 1]: {value}")

        if not 0.0 <= self.lr_min <= self.lr:
            raise ValueError(f"lr_min 必須在 [0, lr]: {self.lr_min}")

        if not 0.0 < self.ema_rate < 1.0:
            raise ValueError(f"ema_rate 必須在 (0, 1): {self.ema_rate}")

        if self.t_sampler not in TRAINING_SAMPLERS:
            raise ValueError(f"不支援的時間採樣方式: {self.t_sampler}，可用: {TRAINING_SAMPLERS}")

        if self.activation not in SUPPORTED_ACTIVATIONS:
            raise ValueError(f"不支援的激活函數: {self.activation}，可用: {SUPPORTED_ACTIVATIONS}")

    @classmethod
    def from_preset(cls, name: str, **overrides) -> "TrainConfig":
        """以實驗預設值建立設定，overrides 覆寫個別欄位"""
        values = get_training_preset(name)
        values.update({k: v for k, v in overrides.items() if v is not None})
        return cls(**values)

    def w_at(self, step: int) -> float:
        """第 step 步的損失混合權重 w"""
        if self.iterations <= 1:
            return self.w_start
        fraction = step / (self.iterations - 1)
        return self.w_start + (self.w_end - self.w_start) * fraction

    def to_dict(self) -> dict:
        return asdict(self)


def pack_features(coeffs: np.ndarray) -> np.ndarray:
    """(B, K, D) 複數係數 -> (B, D(2K-1)) 實數特徵：全部實部，接著 k>=1 的虛部"""
    batch = coeffs.shape[0]
    return np.concatenate(
        [coeffs.real.reshape(batch, -1), coeffs.imag[:, 1:, :].reshape(batch, -1)], axis=1
    )


def unpack_features(features: np.ndarray, n_modes: int, out_dim: int) -> np.ndarray:
    """pack_features 的反運算"""
    batch = features.shape[0]
    n_real = n_modes * out_dim
    coeffs = np.zeros((batch, n_modes, out_dim), dtype=np.complex128)
    coeffs.real = features[:, :n_real].reshape(batch, n_modes, out_dim)
    coeffs.imag[:, 1:, :] = features[:, n_real:].reshape(batch, n_modes - 1, out_dim)
    return coeffs


def feature_weights(lambdas: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
    """
    特徵空間中 L² 與 Cameron-Martin 平方範數的逐特徵權重

    Args:
        lambdas: 雜訊協方差特徵值 (K, D)

    Returns:
        (l2_weights, cm_weights)，長度皆為 D(2K-1)
    """
    n_modes, out_dim = lambdas.shape
    mode_weights = np.repeat(one_sided_weights(n_modes)[:, None], out_dim, axis=1)
    l2 = pack_features(mode_weights[None] * (1.0 + 1.0j))[0]
    cm = pack_features((mode_weights / lambdas)[None] * (1.0 + 1.0j))[0]
    return l2, cm


def time_embedding(t: torch.Tensor) -> torch.Tensor:
    """sin/cos(2π 2^j t)，j = 0..7"""
    frequencies = 2.0 * np.pi * 2.0 ** torch.arange(TIME_EMBEDDING_FREQUENCIES, dtype=t.dtype)
    angles = t[:, None] * frequencies[None, :]
    return torch.cat([torch.sin(angles), torch.cos(angles)], dim=1)


class SpectralMLP(nn.Module):
    """
    頻譜係數上的前饋網路與邊界包裝

    輸入特徵乘上 input_scale 再送入網路，輸出除以 input_scale。
    """

    def __init__(
        self,
        n_modes: int,
        out_dim: int,
        width: int = DEFAULT_WIDTH,
        depth: int = DEFAULT_DEPTH,
        activation: str = DEFAULT_ACTIVATION,
        input_scale: float = 1.0,
    ):
        super().__init__()
        if activation not in ACTIVATIONS:
            raise ValueError(f"不支援的激活函數: {activation}")

        self.n_modes = n_modes
        self.out_dim = out_dim
        self.width = width
        self.depth = depth
        self.activation = activation
        self.input_scale = float(input_scale)
        self.n_features = out_dim * (2 * n_modes - 1)

        dims = self.layer_dims(self.n_features, width, depth)
        layers: List[nn.Module] = []
        for index in range(len(dims) - 1):
            layers.append(nn.Linear(dims[index], dims[index + 1]))
            if index < len(dims) - 2:
                layers.append(ACTIVATIONS[activation]())
        self.net = nn.Sequential(*layers).to(torch.float64)

    @staticmethod
    def layer_dims(n_features: int, width: int, depth: int) -> List[int]:
        """[輸入, width x depth, 輸出]"""
        n_inputs = n_features + 2 * TIME_EMBEDDING_FREQUENCIES + N_CONDITIONS
        return [n_inputs] + [width] * depth + [n_features]

    def linear_layers(self) -> List[nn.Linear]:
        return [layer for layer in self.net if isinstance(layer, nn.Linear)]

    def raw(self, features: torch.Tensor, t: torch.Tensor, condition: torch.Tensor) -> torch.Tensor:
        """m_θ(x, t, c)"""
        one_hot = nn.functional.one_hot(condition, N_CONDITIONS).to(features.dtype)
        inputs = torch.cat([features * self.input_scale, time_embedding(t), one_hot], dim=1)
        return self.net(inputs) / self.input_scale

    def forward(self, features: torch.Tensor, t: torch.Tensor, condition: torch.Tensor) -> torch.Tensor:
        """v_θ(x, t, c) = x + m_θ(x, t, c) - m_θ(x, 1, c)；t = 1 時逐位元等於 x"""
        m_end = self.raw(features, torch.ones_like(t), condition)
        m_t = self.raw(features, t, condition)
        m_t = torch.where((t == 1.0)[:, None], m_end, m_t)
        return features + (m_t - m_end)


class TrainedField(VelocityField):
    """凍結的網路速度場，condition 選擇資料集 A (0) 或 B (1)"""

    exact_boundary = True

    def __init__(self, model: SpectralMLP, condition: int):
        if condition not in (0, 1):
            raise ValueError(f"條件位元必須是 0 或 1: {condition}")
        self.model = model
        self.condition = condition

    @property
    def n_modes(self) -> int:
        return self.model.n_modes

    @property
    def out_dim(self) -> int:
        return self.model.out_dim

    def eval_batch(self, x: np.ndarray, t: np.ndarray) -> np.ndarray:
        t = validate_unit_times(t)
        self.check_input_shape(x.shape)
        features = torch.from_numpy(pack_features(np.asarray(x, dtype=np.complex128)))
        times = torch.from_numpy(np.ascontiguousarray(t, dtype=np.float64))
        condition = torch.full((len(t),), self.condition, dtype=torch.long)

        with torch.no_grad():
            velocity = self.model(features, times, condition).numpy()
        return unpack_features(velocity, self.n_modes, self.out_dim)

    def _state_arrays(self) -> Sequence[np.ndarray]:
        arrays = [p.detach().numpy() for p in self.model.parameters()]
        arrays.append(np.array([self.condition, self.model.input_scale]))
        return arrays


@dataclass
class TrainingResult:
    """訓練結果：共用 EMA 權重的兩個速度場與損失紀錄"""
    field_a: TrainedField
    field_b: TrainedField
    model: SpectralMLP
    ema_model: SpectralMLP
    config: TrainConfig
    loss_history: List[float] = field(default_factory=list)
    initial_eval_loss: Optional[float] = None
    final_eval_loss: Optional[float] = None

    def to_dict(self) -> dict:
        return {
            "config": self.config.to_dict(),
            "iterations": len(self.loss_history),
            "initial_loss": self.loss_history[0] if self.loss_history else None,
            "final_loss": self.loss_history[-1] if self.loss_history else None,
            "initial_eval_loss": self.initial_eval_loss,
            "final_eval_loss": self.final_eval_loss,
            "fingerprints": [self.field_a.fingerprint(), self.field_b.fingerprint()],
        }


def _training_times(cfg: TrainConfig, step: int, rng: np.random.Generator) -> np.ndarray:
    kind = cfg.t_sampler
    if kind == "curriculum":
        in_warmup = step < cfg.curriculum_fraction * cfg.iterations
        kind = "logit-normal" if in_warmup else "uniform"

    if kind == "uniform":
        return rng.random(cfg.batch_size)
    if kind == "importance":
        return sample_times(TimeSampler(SamplerKind.IMPORTANCE), rng, cfg.batch_size)
    return expit(rng.normal(cfg.curriculum_mean, cfg.curriculum_std, cfg.batch_size))


def _draw_batch(
    union: np.ndarray,
    labels: np.ndarray,
    noise: GaussianMeasure,
    cfg: TrainConfig,
    step: int,
    rng: np.random.Generator,
) -> Tuple[torch.Tensor, ...]:
    index = rng.integers(0, len(union), size=cfg.batch_size)
    x1 = union[index]
    x0 = sample_batch(noise, rng, cfg.batch_size)
    t = _training_times(cfg, step, rng)
    xt = t[:, None, None] * x1 + (1.0 - t)[:, None, None] * x0

    return (
        torch.from_numpy(pack_features(xt)),
        torch.from_numpy(t),
        torch.from_numpy(labels[index]),
        torch.from_numpy(pack_features(x1 - x0)),
    )


def _mixed_loss(
    prediction: torch.Tensor,
    target: torch.Tensor,
    w: float,
    l2_weights: torch.Tensor,
    cm_weights: torch.Tensor,
) -> torch.Tensor:
    squared = (prediction - target) ** 2
    l2 = (squared * l2_weights).sum(dim=1).mean()
    cm = (squared * cm_weights).sum(dim=1).mean()
    return w * l2 + (1.0 - w) * cm


def _update_ema(ema_model: nn.Module, model: nn.Module, decay: float) -> None:
    with torch.no_grad():
        for ema_param, param in zip(ema_model.parameters(), model.parameters()):
            ema_param.mul_(decay).add_(param, alpha=1.0 - decay)


def _input_scale(union: np.ndarray) -> float:
    spread = float(np.std(pack_features(union)))
    return 1.0 / spread if spread > 0 else 1.0


def train_field(
    samples_a: np.ndarray,
    samples_b: np.ndarray,
    noise: GaussianMeasure,
    cfg: TrainConfig,
) -> TrainingResult:
    """
    以條件流匹配目標訓練共用權重的速度場

    Args:
        samples_a: 資料集 A 的係數 (n_a, K, D)
        samples_b: 資料集 B 的係數 (n_b, K, D)
        noise: 參考高斯測度
        cfg: 訓練設定

    Returns:
        TrainingResult，field_a / field_b 以 EMA 權重評估

    Raises:
        ShapeMismatchError: 當樣本形狀與雜訊不一致時
        TrainingDivergedError: 當損失出現 NaN 或 Inf 時
    """
    samples_a = np.asarray(samples_a, dtype=np.complex128)
    samples_b = np.asarray(samples_b, dtype=np.complex128)
    if len(samples_a) == 0 or len(samples_b) == 0:
        raise ValueError("兩個樣本池都必須非空")
    if samples_a.shape[1:] != noise.cov.shape or samples_b.shape[1:] != noise.cov.shape:
        raise ShapeMismatchError(
            f"樣本形狀 {samples_a.shape[1:]} / {samples_b.shape[1:]} 與雜訊 {noise.cov.shape} 不一致"
        )

    n_modes, out_dim = noise.cov.shape
    union = np.concatenate([samples_a, samples_b])
    labels = np.concatenate([np.zeros(len(samples_a), dtype=np.int64), np.ones(len(samples_b), dtype=np.int64)])

    torch.manual_seed(cfg.seed)
    model = SpectralMLP(n_modes, out_dim, cfg.width, cfg.depth, cfg.activation, _input_scale(union))
    ema_model = copy.deepcopy(model)
    for param in ema_model.parameters():
        param.requires_grad_(False)

    l2_np, cm_np = feature_weights(noise.cov.lambdas)
    l2_weights, cm_weights = torch.from_numpy(l2_np), torch.from_numpy(cm_np)

    optimizer = torch.optim.Adam(model.parameters(), lr=cfg.lr, betas=DEFAULT_ADAM_BETAS, eps=DEFAULT_ADAM_EPS)
    scheduler = torch.optim.lr_scheduler.CosineAnnealingLR(
        optimizer, T_max=max(cfg.iterations, 1), eta_min=cfg.lr_min
    )

    eval_batch = _draw_batch(union, labels, noise, cfg, cfg.iterations, make_rng(cfg.seed, 2 ** 31))

    def evaluate(network: SpectralMLP) -> float:
        features, t, condition, target = eval_batch
        with torch.no_grad():
            return float(_mixed_loss(network(features, t, condition), target, cfg.w_end, l2_weights, cm_weights))

    initial_eval_loss = evaluate(ema_model)
    logger.info(
        f"開始訓練速度場: {cfg.iterations} 次迭代，批次 {cfg.batch_size}，lr {cfg.lr:g}，"
        f"樣本 {len(samples_a)} + {len(samples_b)}，形狀 {noise.cov.shape}"
    )

    loss_history = []
    for step in range(cfg.iterations):
        rng = make_rng(cfg.seed, step + 1)
        features, t, condition, target = _draw_batch(union, labels, noise, cfg, step, rng)
        w = cfg.w_at(step)

        optimizer.zero_grad()
        loss = _mixed_loss(model(features, t, condition), target, w, l2_weights, cm_weights)
        if not torch.isfinite(loss):
            raise TrainingDivergedError(f"第 {step} 步的損失為 {loss.item()}", batch_seed=step + 1)

        loss.backward()
        optimizer.step()
        scheduler.step()
        _update_ema(ema_model, model, min(cfg.ema_rate, (1.0 + step) / (10.0 + step)))

        loss_history.append(float(loss.item()))
        if (step + 1) % cfg.log_every == 0:
            logger.debug(f"第 {step + 1} 步，損失 {loss_history[-1]:.6g}，w={w:.3f}，lr={scheduler.get_last_lr()[0]:.3g}")

    final_eval_loss = evaluate(ema_model)
    logger.info(f"訓練完成，EMA 損失 {initial_eval_loss:.6g} -> {final_eval_loss:.6g}")

    return TrainingResult(
        field_a=TrainedField(ema_model, 0),
        field_b=TrainedField(ema_model, 1),
        model=model,
        ema_model=ema_model,
        config=cfg,
        loss_history=loss_history,
        initial_eval_loss=initial_eval_loss,
        final_eval_loss=final_eval_loss,
    )
