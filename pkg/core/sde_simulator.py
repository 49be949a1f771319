"""
基準 SDE 系統的 Euler-Maruyama 模擬與快照擷取

y_{j+1} = y_j + drift(t_j, y_j) dt + σ √dt ξ_j，ξ_j ~ N(0, I)。
所有路徑以向量化方式同步推進，亂數來自單一 Philox 串流。
"""
from typing import List, Optional, Sequence

import numpy as np
from loguru import logger

from config.default_settings import DEFAULT_SEED, SIM_DIVERGENCE_BOUND, SUPPORTED_SYSTEMS
from models.sde import (
    LinearSdeSpec, SdeSystem, SimConfig, Snapshot, SnapshotSet, SplitRule, TrajectoryDataset,
)
from models.spectral import TimeGrid
from utils.seeding import make_rng
from utils.validators import SimulationDivergedError, validate_count, validate_positive


def euler_maruyama(system: SdeSystem, cfg: SimConfig) -> TrajectoryDataset:
    """
    以 Euler-Maruyama 法模擬 cfg.n_paths 條路徑

    Args:
        system: SDE 系統
        cfg: 模擬設定

    Returns:
        TrajectoryDataset，網格點數為 T/dt + 1

    Raises:
        SimulationDivergedError: 當 |y| 超過 1e9 或出現 NaN 時，附帶步驟索引
    """
    rng = make_rng(cfg.seed, 0)
    state = np.asarray(system.init_sampler(rng, cfg.n_paths), dtype=np.float64)
    if state.shape != (cfg.n_paths, system.state_dim):
        raise ValueError(f"初始取樣形狀 {state.shape} 應為 {(cfg.n_paths, system.state_dim)}")

    logger.info(
        f"開始模擬 {system.name}: {cfg.n_paths} 條路徑，T={cfg.horizon}，dt={cfg.dt}，步數 {cfg.n_steps}"
    )

    states = np.empty((cfg.n_paths, cfg.m_points, system.state_dim))
    states[:, 0] = state
    noise_scale = system.diffusion * np.sqrt(cfg.dt)
    stochastic = bool(np.any(noise_scale > 0))

    for step in range(cfg.n_steps):
        t = step * cfg.dt
        increment = system.drift(t, state) * cfg.dt
        if stochastic:
            increment = increment + noise_scale * rng.standard_normal(state.shape)
        state = state + increment

        if not np.all(np.isfinite(state)) or np.max(np.abs(state)) > SIM_DIVERGENCE_BOUND:
            raise SimulationDivergedError(f"{system.name} 在第 {step + 1} 步發散", step_index=step + 1)
        states[:, step + 1] = state

    paths = system.observe(states)
    provenance = {
        "system": system.name,
        "params": dict(system.params),
        "config": cfg.to_dict(),
        "seed": cfg.seed,
    }
    dataset = TrajectoryDataset(TimeGrid(cfg.m_points, cfg.horizon), paths, provenance)
    logger.info(f"模擬完成: {dataset}")
    return dataset


def lotka_volterra_system(
    alpha: float = 1.0,
    beta: float = 0.4,
    gamma: float = 0.1,
    delta: float = 0.4,
    sigma: float = 0.1,
) -> SdeSystem:
    """
    隨機 Lotka-Volterra 捕食者-獵物模型

    drift = (αX - βXY, γXY - δY)，X₀ ~ U(5, 5.1)，Y₀ ~ U(4, 4.1)。
    """
    def drift(t: float, y: np.ndarray) -> np.ndarray:
        prey, predator = y[:, 0], y[:, 1]
        return np.stack([
            alpha * prey - beta * prey * predator,
            gamma * prey * predator - delta * predator,
        ], axis=1)

    def init_sampler(rng: np.random.Generator, n: int) -> np.ndarray:
        return np.stack([rng.uniform(5.0, 5.1, n), rng.uniform(4.0, 4.1, n)], axis=1)

    params = {"alpha": alpha, "beta": beta, "gamma": gamma, "delta": delta, "sigma": sigma}
    return SdeSystem("lotka-volterra", 2, drift, sigma, init_sampler, params=params)


def lotka_volterra_invariant(states: np.ndarray, alpha=1.0, beta=0.4, gamma=0.1, delta=0.4) -> np.ndarray:
    """V(X, Y) = γX - δ ln X + βY - α ln Y，確定性流的守恆量"""
    prey, predator = states[..., 0], states[..., 1]
    return gamma * prey - delta * np.log(prey) + beta * predator - alpha * np.log(predator)


def repressilator_system(
    beta: float = 10.0,
    n: float = 3.0,
    k: float = 1.0,
    gamma: float = 1.0,
    sigma: float = 0.1,
) -> SdeSystem:
    """
    三基因循環抑制網路

    drift_i = β / (1 + (X_{i-1}/k)^n) - γ X_i，X₁ 受 X₃ 抑制。
    """
    def drift(t: float, y: np.ndarray) -> np.ndarray:
        repressor = np.roll(y, 1, axis=1)
        ratio = np.maximum(repressor, 0.0) / k
        return beta / (1.0 + ratio ** n) - gamma * y

    def init_sampler(rng: np.random.Generator, count: int) -> np.ndarray:
        return np.stack([
            rng.uniform(1.0, 1.1, count),
            rng.uniform(1.0, 1.1, count),
            rng.uniform(2.0, 2.1, count),
        ], axis=1)

    params = {"beta": beta, "n": n, "k": k, "gamma": gamma, "sigma": sigma}
    return SdeSystem("repressilator", 3, drift, sigma, init_sampler, params=params)


def petal_output(states: np.ndarray, L: float, amp: float, branches: int) -> np.ndarray:
    """
    Ψ_k(u, z) = R(2πk/branches) [s(u) + z n(u)]，s(u) = (u, amp sin(2πu/L))

    states 最後一軸為 (u, z, k)。
    """
    u, z, branch = states[..., 0], states[..., 1], states[..., 2]
    slope = amp * 2.0 * np.pi / L * np.cos(2.0 * np.pi * u / L)
    norm = np.sqrt(1.0 + slope ** 2)
    spine_x, spine_y = u, amp * np.sin(2.0 * np.pi * u / L)
    local_x = spine_x - z * slope / norm
    local_y = spine_y + z / norm

    angle = 2.0 * np.pi * np.round(branch) / branches
    cos, sin = np.cos(angle), np.sin(angle)
    return np.stack([cos * local_x - sin * local_y, sin * local_x + cos * local_y], axis=-1)


def petal_system(
    L: float = 1.0,
    amp: float = 0.25,
    kappa: float = 0.5,
    sigma_z: float = 0.04,
    speed: float = 0.2,
    branches: int = 8,
    sigma_init: float = 0.1,
) -> SdeSystem:
    """
    八瓣花分支系統

    內部狀態 (u, z, k)：du = speed dt，dz = -κz dt + σ_z dW，分支索引 k 固定。
    """
    branches = validate_count(branches, "branches")
    validate_positive(L, "L")

    def drift(t: float, y: np.ndarray) -> np.ndarray:
        velocity = np.zeros_like(y)
        velocity[:, 0] = speed
        velocity[:, 1] = -kappa * y[:, 1]
        return velocity

    def init_sampler(rng: np.random.Generator, n: int) -> np.ndarray:
        return np.stack([
            np.zeros(n),
            sigma_init * rng.standard_normal(n),
            rng.integers(0, branches, n).astype(np.float64),
        ], axis=1)

    params = {
        "L": L, "amp": amp, "kappa": kappa, "sigma_z": sigma_z,
        "speed": speed, "branches": branches, "sigma_init": sigma_init,
    }
    return SdeSystem(
        "petal",
        dim=2,
        drift=drift,
        diffusion=np.array([0.0, sigma_z, 0.0]),
        init_sampler=init_sampler,
        state_dim=3,
        output_map=lambda states: petal_output(states, L, amp, branches),
        params=params,
    )


def petal_transverse_variance(t: float, kappa: float = 0.5, sigma_z: float = 0.04, sigma_init: float = 0.1) -> float:
    """Var(z_t) = σ_z²/(2κ) (1 - e^{-2κt}) + σ_init² e^{-2κt}"""
    decay = np.exp(-2.0 * kappa * t)
    return float(sigma_z ** 2 / (2.0 * kappa) * (1.0 - decay) + sigma_init ** 2 * decay)


def linear_sde_system(
    c: float,
    g: float,
    dim: int = 1,
    m0: float = 2.0,
    var0: float = 0.2,
) -> SdeSystem:
    """dY = c Y dt + g dW，Y₀ ~ N(m₀, Σ₀) 每個維度獨立"""
    spec = LinearSdeSpec(c, g, dim, m0, var0)

    def drift(t: float, y: np.ndarray) -> np.ndarray:
        return c * y

    def init_sampler(rng: np.random.Generator, n: int) -> np.ndarray:
        return m0 + np.sqrt(var0) * rng.standard_normal((n, dim))

    return SdeSystem("linear-sde", dim, drift, g, init_sampler, params=spec.to_dict())


def build_system(name: str, **params) -> SdeSystem:
    """
    依名稱建立系統

    Raises:
        ValueError: 當系統名稱未知時
    """
    params = {k: v for k, v in params.items() if v is not None}
    if name == "lotka-volterra":
        return lotka_volterra_system(**params)
    if name == "repressilator":
        return repressilator_system(**params)
    if name == "petal":
        return petal_system(**params)
    if name == "linear-sde":
        return linear_sde_system(**params)
    raise ValueError(f"未知的系統: {name}，可用: {SUPPORTED_SYSTEMS}")


def equispaced_times(n_snapshots: int) -> List[float]:
    """[0,1] 上 n 個等距的重新縮放時間"""
    n_snapshots = validate_count(n_snapshots, "n_snapshots", minimum=2)
    return [float(t) for t in np.linspace(0.0, 1.0, n_snapshots)]


def extract_snapshots(
    ds: TrajectoryDataset,
    times: Sequence[float],
    split_rule: SplitRule = SplitRule.ODD_TRAIN_EVEN_VAL,
    labels: Optional[Sequence[str]] = None,
    seed: int = DEFAULT_SEED,
) -> SnapshotSet:
    """
    從軌跡擷取快照點雲

    Args:
        ds: 軌跡資料集
        times: [0,1] 中的重新縮放時間，必須落在網格點上
        split_rule: 劃分規則
        labels: EXPLICIT 規則下每個時間的標籤
        seed: ALL_SHARED_RESAMPLE 規則的路徑洗牌種子

    Returns:
        SnapshotSet

    Raises:
        ValueError: 當時間不在網格上或標籤數量不符時
    """
    split_rule = SplitRule(split_rule)
    indices = [ds.grid.index_of(t) for t in times]
    snapshots = []

    if split_rule is SplitRule.ODD_TRAIN_EVEN_VAL:
        for position, (time, index) in enumerate(zip(times, indices)):
            split = "train" if position % 2 == 0 else "validation"
            snapshots.append(Snapshot(float(time), split, ds.paths[:, index, :]))

    elif split_rule is SplitRule.EXPLICIT:
        if labels is None or len(labels) != len(times):
            raise ValueError("EXPLICIT 規則需要與時間數量相同的標籤")
        for time, index, label in zip(times, indices, labels):
            snapshots.append(Snapshot(float(time), label, ds.paths[:, index, :]))

    else:
        if ds.n_paths < 2:
            raise ValueError("ALL_SHARED_RESAMPLE 至少需要 2 條路徑")
        order = make_rng(seed, 0).permutation(ds.n_paths)
        half = ds.n_paths // 2
        for time, index in zip(times, indices):
            snapshots.append(Snapshot(float(time), "train", ds.paths[order[:half], index, :]))
            snapshots.append(Snapshot(float(time), "validation", ds.paths[order[half:], index, :]))

    snapshot_set = SnapshotSet(snapshots, split_rule, dict(ds.provenance))
    logger.debug(f"擷取 {len(times)} 個時間點的快照: {snapshot_set.label_counts()}")
    return snapshot_set
