"""
點雲之間的邊際分佈指標

EMD (W₁)、W₂、切片 Wasserstein (SWD)、最大切片 Wasserstein (MWD) 與 RBF 核 MMD。
最佳傳輸皆為精確解，不使用熵正則化。
"""
from typing import Dict, Iterable, Mapping, Optional

import numpy as np
import ot
from loguru import logger
from scipy.optimize import linear_sum_assignment
from scipy.spatial.distance import cdist

from config.default_settings import (
    DEFAULT_BOOTSTRAP_RUNS, DEFAULT_BOOTSTRAP_SUBSAMPLE, DEFAULT_MMD_BANDWIDTH,
    DEFAULT_MMD_UNBIASED, DEFAULT_MWD_CANDIDATES, DEFAULT_MWD_REFINE_STEPS, DEFAULT_SEED,
    DEFAULT_SWD_PROJECTIONS, MAX_OT_POINTS, METRIC_NAMES,
)
from models.metric_report import MetricReport, PointCloud
from utils.seeding import make_rng
from utils.validators import ShapeMismatchError, validate_count, validate_positive


def _as_points(cloud) -> np.ndarray:
    if isinstance(cloud, PointCloud):
        return cloud.points
    return PointCloud(cloud).points


def _check_pair(p: np.ndarray, q: np.ndarray) -> None:
    if p.shape[1] != q.shape[1]:
        raise ShapeMismatchError(f"點雲維度不一致: {p.shape[1]} != {q.shape[1]}")


def _check_order(order: int) -> int:
    if order not in (1, 2):
        raise ValueError(f"Wasserstein 階數必須是 1 或 2: {order}")
    return order


def wasserstein(p, q, order: int = 2) -> float:
    """
    均勻權重經驗測度之間的精確 W_p

    等大小時以線性指派求解，不等大小時以網路單純形法 (POT emd2) 求解。

    Args:
        p, q: 點雲 (n x D)
        order: 1 或 2

    Returns:
        (最小傳輸成本)^(1/p)

    Raises:
        ShapeMismatchError: 當維度不一致時
        ValueError: 當點數超過 MAX_OT_POINTS 時
    """
    p, q = _as_points(p), _as_points(q)
    _check_pair(p, q)
    order = _check_order(order)
    if max(len(p), len(q)) > MAX_OT_POINTS:
        raise ValueError(f"精確最佳傳輸最多支援 {MAX_OT_POINTS} 個點: {len(p)}, {len(q)}")

    cost = cdist(p, q, metric="euclidean") ** order
    if len(p) == len(q):
        rows, cols = linear_sum_assignment(cost)
        total = float(cost[rows, cols].mean())
    else:
        total = float(ot.emd2(np.full(len(p), 1.0 / len(p)), np.full(len(q), 1.0 / len(q)), cost))

    return max(total, 0.0) ** (1.0 / order)


def _projected_costs(p_proj: np.ndarray, q_proj: np.ndarray, order: int) -> np.ndarray:
    """每個投影方向上的一維 W_p^p"""
    if len(p_proj) == len(q_proj):
        difference = np.sort(p_proj, axis=0) - np.sort(q_proj, axis=0)
        return np.mean(np.abs(difference) ** order, axis=0)
    return np.atleast_1d(ot.wasserstein_1d(p_proj, q_proj, p=order))


def random_directions(dim: int, count: int, seed: int = DEFAULT_SEED) -> np.ndarray:
    """球面上均勻分佈的單位方向 (以高斯向量正規化)，形狀 count x dim"""
    directions = make_rng(seed, 0).standard_normal((count, dim))
    return directions / np.linalg.norm(directions, axis=1, keepdims=True)


def sliced_wasserstein(
    p,
    q,
    order: int = 2,
    n_projections: int = DEFAULT_SWD_PROJECTIONS,
    seed: int = DEFAULT_SEED,
) -> float:
    """
    切片 Wasserstein 距離 (E_θ W_p^p(θ#P, θ#Q))^(1/p)

    Args:
        p, q: 點雲
        order: 1 或 2
        n_projections: 隨機方向數
        seed: 方向的種子

    Returns:
        Monte Carlo 估計值
    """
    p, q = _as_points(p), _as_points(q)
    _check_pair(p, q)
    order = _check_order(order)
    n_projections = validate_count(n_projections, "n_projections")

    directions = random_directions(p.shape[1], n_projections, seed)
    costs = _projected_costs(p @ directions.T, q @ directions.T, order)
    return float(np.mean(costs)) ** (1.0 / order)


def max_sliced_wasserstein(
    p,
    q,
    order: int = 2,
    n_candidates: int = DEFAULT_MWD_CANDIDATES,
    refine_steps: int = DEFAULT_MWD_REFINE_STEPS,
    seed: int = DEFAULT_SEED,
) -> float:
    """
    最大切片 Wasserstein 距離

    先在 n_candidates 個隨機方向 (與 sliced_wasserstein 同一種子串流) 中取最佳者，
    再以有限差分梯度在球面上做 refine_steps 步投影梯度上升，失敗時步長減半。
    回傳值為真實最大值的下界。
    """
    p, q = _as_points(p), _as_points(q)
    _check_pair(p, q)
    order = _check_order(order)
    n_candidates = validate_count(n_candidates, "n_candidates")
    refine_steps = validate_count(refine_steps, "refine_steps", minimum=0)

    def objective(direction: np.ndarray) -> float:
        return float(_projected_costs(p @ direction[:, None], q @ direction[:, None], order)[0])

    candidates = random_directions(p.shape[1], n_candidates, seed)
    costs = _projected_costs(p @ candidates.T, q @ candidates.T, order)
    best = int(np.argmax(costs))
    direction, value = candidates[best], float(costs[best])

    if p.shape[1] > 1:
        step, h = 0.5, 1e-5
        for _ in range(refine_steps):
            gradient = np.array([
                (objective(direction + h * e) - objective(direction - h * e)) / (2.0 * h)
                for e in np.eye(p.shape[1])
            ])
            gradient -= gradient.dot(direction) * direction
            norm = np.linalg.norm(gradient)
            if norm == 0.0 or step < 1e-8:
                break

            candidate = direction + step * gradient / norm
            candidate /= np.linalg.norm(candidate)
            candidate_value = objective(candidate)
            if candidate_value > value:
                direction, value = candidate, candidate_value
            else:
                step *= 0.5

    logger.debug(f"MWD 方向: {np.round(direction, 4)}，W_p^p = {value:.6g}")
    return value ** (1.0 / order)


def mmd_rbf(
    p,
    q,
    bandwidth: float = DEFAULT_MMD_BANDWIDTH,
    unbiased: bool = DEFAULT_MMD_UNBIASED,
) -> float:
    """
    RBF 核 k(x,y) = exp(-‖x-y‖²/(2σ²)) 的 MMD

    unbiased=True 時兩個群內項排除對角線 (U 統計量)，交叉項使用全部配對。

    Returns:
        √max(0, MMD²)
    """
    p, q = _as_points(p), _as_points(q)
    _check_pair(p, q)
    bandwidth = validate_positive(bandwidth, "bandwidth")
    if unbiased and (len(p) < 2 or len(q) < 2):
        raise ValueError("無偏 MMD 每個點雲至少需要 2 個點")

    scale = 2.0 * bandwidth ** 2
    k_pp = np.exp(-cdist(p, p, "sqeuclidean") / scale)
    k_qq = np.exp(-cdist(q, q, "sqeuclidean") / scale)
    k_pq = np.exp(-cdist(p, q, "sqeuclidean") / scale)

    if unbiased:
        np.fill_diagonal(k_pp, 0.0)
        np.fill_diagonal(k_qq, 0.0)
        mmd2 = (
            k_pp.sum() / (len(p) * (len(p) - 1))
            + k_qq.sum() / (len(q) * (len(q) - 1))
            - 2.0 * k_pq.mean()
        )
    else:
        mmd2 = k_pp.mean() + k_qq.mean() - 2.0 * k_pq.mean()

    return float(np.sqrt(max(0.0, mmd2)))


def compute_metrics(
    p,
    q,
    metrics: Iterable[str] = METRIC_NAMES,
    n_projections: int = DEFAULT_SWD_PROJECTIONS,
    n_candidates: int = DEFAULT_MWD_CANDIDATES,
    refine_steps: int = DEFAULT_MWD_REFINE_STEPS,
    bandwidth: float = DEFAULT_MMD_BANDWIDTH,
    unbiased: bool = DEFAULT_MMD_UNBIASED,
    seed: int = DEFAULT_SEED,
) -> Dict[str, float]:
    """計算一對點雲的選定指標"""
    results = {}
    for name in metrics:
        if name == "emd":
            results[name] = wasserstein(p, q, order=1)
        elif name == "w2":
            results[name] = wasserstein(p, q, order=2)
        elif name == "swd":
            results[name] = sliced_wasserstein(p, q, 2, n_projections, seed)
        elif name == "mwd":
            results[name] = max_sliced_wasserstein(p, q, 2, n_candidates, refine_steps, seed)
        elif name == "mmd":
            results[name] = mmd_rbf(p, q, bandwidth, unbiased)
        else:
            raise ValueError(f"未知的指標: {name}，可用: {METRIC_NAMES}")
    return results


def _metric_settings(**settings) -> dict:
    return {
        "n_projections": settings.get("n_projections", DEFAULT_SWD_PROJECTIONS),
        "n_candidates": settings.get("n_candidates", DEFAULT_MWD_CANDIDATES),
        "refine_steps": settings.get("refine_steps", DEFAULT_MWD_REFINE_STEPS),
        "bandwidth": settings.get("bandwidth", DEFAULT_MMD_BANDWIDTH),
        "unbiased": settings.get("unbiased", DEFAULT_MMD_UNBIASED),
        "seed": settings.get("seed", DEFAULT_SEED),
    }


def _matched_times(reference: Mapping[float, np.ndarray], candidate: Mapping[float, np.ndarray]) -> list:
    times = sorted(set(reference) & set(candidate))
    if not times:
        raise ValueError("參考與候選點雲沒有共同的時間點")
    missing = sorted(set(reference) ^ set(candidate))
    if missing:
        logger.warning(f"略過只出現在一側的時間點: {missing}")
    return times


def compute_metric_report(
    reference: Mapping[float, np.ndarray],
    candidate: Mapping[float, np.ndarray],
    metrics: Iterable[str] = METRIC_NAMES,
    **settings,
) -> MetricReport:
    """
    每個共同時間點上的指標報告

    Args:
        reference: 時間 -> 參考點雲
        candidate: 時間 -> 候選點雲
        metrics: 指標名稱
        **settings: compute_metrics 的設定

    Returns:
        MetricReport，metadata 記錄所有指標設定
    """
    metrics = list(metrics)
    settings = _metric_settings(**settings)
    report = MetricReport(metadata=dict(settings, metrics=metrics))

    for time in _matched_times(reference, candidate):
        report.add(time, compute_metrics(reference[time], candidate[time], metrics, **settings))

    logger.info(f"完成 {len(report.times)} 個時間點的邊際指標")
    return report


def bootstrap_metrics(
    reference: Mapping[float, np.ndarray],
    candidate: Mapping[float, np.ndarray],
    metrics: Iterable[str] = METRIC_NAMES,
    n_runs: int = DEFAULT_BOOTSTRAP_RUNS,
    subsample: int = DEFAULT_BOOTSTRAP_SUBSAMPLE,
    seed: Optional[int] = None,
    **settings,
) -> MetricReport:
    """
    以重複子抽樣估計指標的平均值與標準差

    每次執行從兩側各抽 min(subsample, n) 個不重複的點。

    Returns:
        MetricReport，values 為平均值，std 為執行間標準差
    """
    metrics = list(metrics)
    n_runs = validate_count(n_runs, "n_runs")
    subsample = validate_count(subsample, "subsample", minimum=2)
    settings = _metric_settings(**settings)
    rng = make_rng(settings["seed"] if seed is None else seed, 0xB007)
    times = _matched_times(reference, candidate)

    runs = {time: [] for time in times}
    for run in range(n_runs):
        for time in times:
            ref_points, cand_points = _as_points(reference[time]), _as_points(candidate[time])
            ref_index = rng.choice(len(ref_points), min(subsample, len(ref_points)), replace=False)
            cand_index = rng.choice(len(cand_points), min(subsample, len(cand_points)), replace=False)
            runs[time].append(
                compute_metrics(ref_points[ref_index], cand_points[cand_index], metrics, **settings)
            )

    means, stds = {}, {}
    for time, rows in runs.items():
        means[time] = {name: float(np.mean([r[name] for r in rows])) for name in metrics}
        stds[time] = {
            name: float(np.std([r[name] for r in rows], ddof=1)) if n_runs > 1 else 0.0
            for name in metrics
        }

    logger.info(f"完成 {n_runs} 次子抽樣的邊際指標")
    return MetricReport(means, dict(settings, metrics=metrics, n_runs=n_runs, subsample=subsample), stds)
