"""
子命令的執行邏輯

每個函式只依賴 (設定, 種子, 輸入檔)，輸出檔名固定，重複執行會覆寫相同的產出。
"""
from dataclasses import replace
from pathlib import Path
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np
import pandas as pd
from loguru import logger

from config.default_settings import SYSTEM_DEFAULTS, SYSTEM_N_SUM_MODES, get_output_paths
from config.experiment import ExperimentConfig
from core.ablation_sweep import SweepContext, sweep
from core.field_trainer import TrainConfig, TrainingResult
from core.fkl_pipeline import (
    FieldPair, build_field_pair, dataset_coeffs, estimate_both_directions, pooled_noise,
    trained_result_from_models,
)
from core.gaussian_case import gaussian_case_setup
from core.marginal_metrics import bootstrap_metrics, compute_metric_report
from core.oracles import linear_sde_kl_pair
from core.ranking import rank_methods
from core.sde_simulator import build_system, equispaced_times, euler_maruyama, extract_snapshots
from core.spectral_transform import nyquist_free_modes
from core.validation_suite import ValidationRow, ValidationSettings, run_validation
from core.velocity_fields import EmpiricalSoftmaxField, field_error_profile
from models.estimate import FklConfig, TimeSampler
from models.metric_report import MetricReport
from models.sde import LinearSdeSpec, SimConfig, TrajectoryDataset
from utils.file_formats import (
    convert_csv_trajectories, load_weights, read_snapshot_csv, read_trajectories, save_weights,
    write_snapshot_csv, write_trajectories,
)


def fkl_config_from(cfg: ExperimentConfig, n_sum_modes: Optional[int] = None) -> FklConfig:
    """由設定檔的 fkl 區段建立估計設定"""
    section = cfg.fkl
    sampler = TimeSampler(section.sampler, section.t_min, section.t_max, section.logit_mean, section.logit_std)
    return FklConfig(
        section.n_function_samples,
        section.n_time_per_function,
        n_sum_modes or section.n_sum_modes,
        sampler,
        cfg.seed or 0,
    )


def train_config_from(cfg: ExperimentConfig, preset: Optional[str] = None) -> TrainConfig:
    """由設定檔的 training 區段建立訓練設定；preset 預設取系統名稱"""
    section = cfg.training
    preset = section.preset or preset
    overrides = {
        "iterations": section.iterations,
        "batch_size": section.batch_size,
        "lr": section.lr,
        "width": section.width,
        "depth": section.depth,
        "activation": section.activation,
        "ema_rate": section.ema_rate,
        "seed": cfg.seed or 0,
    }
    if preset:
        return TrainConfig.from_preset(preset, **overrides)
    return TrainConfig(**{k: v for k, v in overrides.items() if v is not None})


def run_simulate(cfg: ExperimentConfig, output: Optional[Path] = None, sidecar: bool = True) -> Tuple[TrajectoryDataset, Path]:
    """
    模擬設定檔指定的系統並寫出 FKLT 檔

    Returns:
        (資料集, 檔案路徑)
    """
    name = cfg.system.name
    defaults = SYSTEM_DEFAULTS[name]
    sim = SimConfig(
        cfg.simulation.horizon or defaults["horizon"],
        cfg.simulation.dt or defaults["dt"],
        cfg.simulation.n_paths,
        cfg.seed or 0,
    )
    dataset = euler_maruyama(build_system(name, **cfg.system.params), sim)

    if output is None:
        output = get_output_paths(cfg.output.directory)["trajectories"] / f"{name}_seed{sim.seed}.fklt"
    return dataset, write_trajectories(output, dataset, sidecar=sidecar)


def run_snapshots(
    trajectory_path: Path,
    n_snapshots: Optional[int] = None,
    split: Optional[str] = None,
    labels: Optional[Sequence[str]] = None,
    seed: int = 0,
    output_dir: Optional[Path] = None,
) -> Dict[str, Path]:
    """
    擷取快照點雲並依劃分寫出 CSV

    Returns:
        劃分名稱 -> CSV 路徑
    """
    dataset = read_trajectories(trajectory_path)
    defaults = SYSTEM_DEFAULTS.get(dataset.provenance.get("system"), {})
    n_snapshots = n_snapshots or defaults.get("n_snapshots", 5)
    split = split or defaults.get("split", "odd-train-even-val")

    snapshot_set = extract_snapshots(dataset, equispaced_times(n_snapshots), split, labels, seed)
    output_dir = Path(output_dir or trajectory_path.parent)
    paths = {}
    for name in ("train", "validation"):
        clouds = snapshot_set.clouds(name)
        if clouds:
            paths[name] = write_snapshot_csv(output_dir / f"{trajectory_path.stem}_{name}.csv", clouds)
    return paths


def run_oracle_linear_sde(c_a: float, c_b: float, g: float, dim: int, m0: float, var0: float) -> dict:
    """線性 SDE 的正反向封閉解"""
    spec = LinearSdeSpec(c_a, g, dim, m0, var0)
    result = linear_sde_kl_pair(spec, c_b)
    result["spec_a"] = spec.to_dict()
    result["drift_b"] = c_b
    return result


def run_oracle_gaussian(cfg: ExperimentConfig, mean_scale: float, f0: int, dim: int) -> dict:
    """高斯平均值平移的解析 KL (兩方向相同)"""
    case = gaussian_case_setup(
        mean_scale, f0, dim,
        data_matern=cfg.measure.data_matern,
        noise_matern=cfg.measure.noise_matern,
        n_modes=cfg.measure.n_modes,
        m_points=cfg.measure.m_points,
    )
    return {
        "kl_forward": case.oracle_kl,
        "kl_reverse": case.oracle_kl,
        "case": case.to_dict(),
    }


def _usable_modes(requested: int, m_points: int, mirror: bool) -> int:
    # CM 範數把 k >= 1 的模態都當成複數對，因此不保留實數的 Nyquist 模態
    available = nyquist_free_modes(m_points, mirror)
    if requested > available:
        logger.warning(f"網格 {m_points} 點最多支援 {available} 個模態，將 {requested} 降為 {available}")
        return available
    return requested


def _analytic_pair(ds_a: TrajectoryDataset, ds_b: TrajectoryDataset) -> Optional[dict]:
    """兩個資料集只差漂移係數的線性 SDE 時回傳封閉解"""
    prov_a, prov_b = ds_a.provenance, ds_b.provenance
    if prov_a.get("system") != "linear-sde" or prov_b.get("system") != "linear-sde":
        return None
    params_a, params_b = dict(prov_a["params"]), dict(prov_b["params"])
    c_b = params_b.pop("drift_coeff")
    c_a = params_a.pop("drift_coeff")
    if params_a != params_b:
        return None
    return linear_sde_kl_pair(LinearSdeSpec(c_a, **params_a), c_b)


def _dataset_pair(
    cfg: ExperimentConfig,
    ds_a: TrajectoryDataset,
    ds_b: TrajectoryDataset,
    noise_kind: Optional[str] = None,
    trained: Optional[TrainingResult] = None,
) -> Tuple[FieldPair, int]:
    if ds_a.m_points != ds_b.m_points or ds_a.dim != ds_b.dim:
        raise ValueError(f"兩個資料集的網格或維度不一致: {ds_a.paths.shape} vs {ds_b.paths.shape}")

    mirror = cfg.measure.mirror
    n_modes = _usable_modes(cfg.measure.n_modes, ds_a.m_points, mirror)
    coeffs_a = dataset_coeffs(ds_a, n_modes, mirror)
    coeffs_b = dataset_coeffs(ds_b, n_modes, mirror)
    noise = pooled_noise(
        coeffs_a, coeffs_b, noise_kind or cfg.measure.noise, ds_a.m_points, cfg.measure.noise_matern
    )

    backend = cfg.field.backend
    if backend == "analytic":
        raise ValueError("資料集只能使用 softmax 或 trained 速度場；解析速度場請使用 oracle 或 validate")

    system = ds_a.provenance.get("system")
    pair = build_field_pair(
        coeffs_a, coeffs_b, noise,
        backend=backend,
        split=cfg.field.split_pool,
        t_collapse=cfg.field.t_collapse,
        bandwidth=cfg.field.bandwidth,
        seed=cfg.seed or 0,
        train_cfg=train_config_from(cfg, system if system in SYSTEM_N_SUM_MODES else None) if backend == "trained" else None,
        trained=trained,
    )
    return pair, n_modes


def _load_trained(cfg: ExperimentConfig) -> Optional[TrainingResult]:
    if cfg.field.backend != "trained" or not cfg.field.weights:
        return None
    model, ema_model = load_weights(cfg.field.weights)
    return trained_result_from_models(model, ema_model)


def run_fkl(
    cfg: ExperimentConfig,
    path_a: Path,
    path_b: Path,
    sweep_axis: Optional[str] = None,
    sweep_values: Optional[list] = None,
) -> dict:
    """
    兩個軌跡檔之間的正反向 FKL，可選擇沿一軸掃描

    Returns:
        {"forward", "reverse", "analytic", "sweep", "training"}
    """
    ds_a, ds_b = read_trajectories(path_a), read_trajectories(path_b)
    trained = _load_trained(cfg)
    pair, n_modes = _dataset_pair(cfg, ds_a, ds_b, trained=trained)
    fkl_cfg = fkl_config_from(cfg, min(cfg.fkl.n_sum_modes, n_modes))

    forward, reverse = estimate_both_directions(pair, fkl_cfg, cfg.output.threads)
    analytic = _analytic_pair(ds_a, ds_b)
    result = {
        "forward": forward,
        "reverse": reverse,
        "analytic": analytic,
        "sweep": None,
        "training": pair.training,
    }

    if sweep_axis:
        if sweep_axis == "resolution":
            raise ValueError("資料集的網格解析度固定，無法沿 resolution 掃描")
        reference = analytic["kl_forward"] if analytic else None

        def build(noise_kind: str, resolution: int) -> SweepContext:
            if noise_kind == cfg.measure.noise:
                current = pair
            else:
                current, _ = _dataset_pair(cfg, ds_a, ds_b, noise_kind, trained=trained)
            return SweepContext(current.field_a, current.field_b, current.source_a, current.noise, reference)

        result["sweep"] = sweep(
            sweep_axis, sweep_values, fkl_cfg, build,
            base_noise=cfg.measure.noise, base_resolution=ds_a.m_points, threads=cfg.output.threads,
        )
    return result


def training_error_profile(pair: FieldPair, t_grid: Sequence[float], seed: int = 0) -> Dict[str, Dict[float, float]]:
    """
    訓練後速度場相對同一樣本池的 softmax 速度場 (經驗最佳解) 的 CM 誤差剖面

    Returns:
        {"a": t -> 誤差, "b": t -> 誤差}
    """
    profiles = {}
    for name, field, source in (("a", pair.field_a, pair.source_a), ("b", pair.field_b, pair.source_b)):
        reference = EmpiricalSoftmaxField(source.pool, pair.noise.cov)
        profiles[name] = field_error_profile(field, reference, source, pair.noise, t_grid, seed=seed)
    return profiles


def run_fit_velocity(
    cfg: ExperimentConfig,
    path_a: Path,
    path_b: Path,
    weights_path: Path,
    error_times: Optional[Sequence[float]] = None,
) -> Tuple[TrainingResult, Optional[Dict[str, Dict[float, float]]]]:
    """
    訓練雙條件速度場網路並寫出 FKLW 權重檔

    Returns:
        (訓練結果, error_times 有值時的誤差剖面)
    """
    ds_a, ds_b = read_trajectories(path_a), read_trajectories(path_b)
    trained_cfg = cfg.with_overrides({"field.backend": "trained"})
    pair, _ = _dataset_pair(trained_cfg, ds_a, ds_b)
    save_weights(weights_path, pair.training.model, pair.training.ema_model)
    profiles = training_error_profile(pair, error_times, cfg.seed or 0) if error_times else None
    return pair.training, profiles


def run_metrics(
    cfg: ExperimentConfig,
    reference_path: Path,
    candidates: Dict[str, Path],
    bootstrap: bool = False,
) -> Dict[str, MetricReport]:
    """
    參考快照對每個候選快照的邊際指標

    Returns:
        方法名稱 -> 指標報告
    """
    section = cfg.metrics
    settings = {
        "n_projections": section.n_projections,
        "n_candidates": section.n_candidates,
        "refine_steps": section.refine_steps,
        "bandwidth": section.bandwidth,
        "unbiased": section.unbiased,
        "seed": cfg.seed or 0,
    }
    reference = read_snapshot_csv(reference_path)

    reports = {}
    for name, path in candidates.items():
        candidate = read_snapshot_csv(path)
        if bootstrap and section.bootstrap_runs > 0:
            reports[name] = bootstrap_metrics(
                reference, candidate, section.metrics,
                n_runs=section.bootstrap_runs, subsample=section.bootstrap_subsample, **settings,
            )
        else:
            reports[name] = compute_metric_report(reference, candidate, section.metrics, **settings)
        logger.info(f"方法 {name}: {len(reports[name].times)} 個時間點")
    return reports


def rank_metric_reports(reports: Dict[str, MetricReport]) -> dict:
    """把每個 (τ, 指標) 欄位當作一個任務做排名"""
    table = pd.DataFrame({name: report.flat_row() for name, report in reports.items()}).T
    return rank_methods(table.dropna(axis=1), lower_is_better=True)


def run_rank(scores_path: Path, lower_is_better: bool = True) -> dict:
    """讀取方法 x 任務的分數 CSV (第一欄為方法名稱) 並排名"""
    scores = pd.read_csv(scores_path, index_col=0)
    scores = scores.select_dtypes(include=[np.number])
    return rank_methods(scores, lower_is_better=lower_is_better)


def run_validate(
    blocks: Optional[Sequence[str]] = None,
    quick: bool = False,
    seed: int = 0,
    threads: int = 4,
    sde_cases: Optional[Sequence[int]] = None,
) -> List[ValidationRow]:
    """執行驗證流程"""
    settings = ValidationSettings.quick(seed, threads) if quick else ValidationSettings(seed=seed, threads=threads)
    if sde_cases:
        settings = replace(settings, sde_cases=tuple(sde_cases))
    return run_validation(blocks, settings)


def run_convert(csv_path: Path, output: Optional[Path] = None, horizon: Optional[float] = None) -> Path:
    """長格式 CSV 軌跡 -> FKLT"""
    dataset = convert_csv_trajectories(csv_path, horizon)
    output = output or csv_path.with_suffix(".fklt")
    return write_trajectories(output, dataset)
