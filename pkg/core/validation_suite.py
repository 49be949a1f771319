"""
特例驗證流程

解析值對估計值的比較表：線性 SDE 封閉解、高斯平均值平移、單模態恆等式、
經驗速度場收斂、SDE 端到端與消融特徵。每一列附帶容許誤差與通過與否。
"""
from dataclasses import asdict, dataclass
from typing import Callable, Dict, List, Optional, Sequence

import numpy as np
from loguru import logger

from config.default_settings import (
    DEFAULT_M_POINTS, DEFAULT_SEED, DEFAULT_THREADS, GAUSSIAN_CASES,
    GAUSSIAN_REL_TOL, ORACLE_TABLE_TOL, QUADRATURE_REL_TOL, SDE_CASES, SDE_END_TO_END_BAND,
    SINGLE_MODE_REL_TOL, SOFTMAX_FINAL_REL_TOL, SYSTEM_DEFAULTS, TRACE_CLASS_SPREAD,
)
from core.ablation_sweep import gaussian_builder, nonincreasing, sweep
from core.fkl_estimator import estimate_fkl
from core.fkl_pipeline import build_field_pair, dataset_coeffs, estimate_both_directions, pooled_noise
from core.gaussian_case import gaussian_case_setup, single_mode_case
from core.measures import sample_batch
from core.oracles import (
    linear_sde_kl_closed_form, linear_sde_kl_pair, linear_sde_kl_quadrature,
    single_mode_fkl_quadrature,
)
from core.sde_simulator import euler_maruyama, linear_sde_system
from core.sources import MeasureSource
from core.velocity_fields import EmpiricalSoftmaxField
from models.estimate import FklConfig, SamplerKind, TimeSampler
from models.sde import LinearSdeSpec, SimConfig
from utils.seeding import make_rng

VALIDATION_BLOCKS = ["sde-oracle", "gaussian-oracle", "single-mode", "gaussian", "softmax", "sde", "ablation"]


@dataclass
class ValidationRow:
    """驗證表的一列"""
    block: str
    case: str
    analytic: Optional[float]
    estimated: Optional[float]
    std_error: Optional[float] = None
    tolerance: str = ""
    passed: bool = False
    note: str = ""

    def to_dict(self) -> dict:
        return asdict(self)


@dataclass
class ValidationSettings:
    """各區塊的 Monte Carlo 規模"""
    single_mode_draws: int = 1_000_000
    gaussian_functions: int = 1000
    gaussian_times: int = 100
    softmax_pool_sizes: Sequence[int] = (100, 1000, 5000)
    softmax_functions: int = 200
    softmax_times: int = 50
    sde_cases: Sequence[int] = (1,)
    sde_paths: int = 5000
    sde_functions: int = 500
    sde_times: int = 100
    ablation_functions: int = 200
    ablation_times: int = 50
    seed: int = DEFAULT_SEED
    threads: int = DEFAULT_THREADS

    @classmethod
    def quick(cls, seed: int = DEFAULT_SEED, threads: int = DEFAULT_THREADS) -> "ValidationSettings":
        """縮小規模的設定 (僅供冒煙測試，統計列可能不通過)"""
        return cls(
            single_mode_draws=200_000,
            gaussian_functions=200,
            gaussian_times=50,
            softmax_pool_sizes=(50, 200, 800),
            softmax_functions=50,
            softmax_times=20,
            sde_paths=400,
            sde_functions=100,
            sde_times=20,
            ablation_functions=50,
            ablation_times=20,
            seed=seed,
            threads=threads,
        )


def _relative_row(block, case, analytic, estimate, tolerance, note="") -> ValidationRow:
    error = abs(estimate.value - analytic) / abs(analytic)
    return ValidationRow(
        block, case, analytic, estimate.value, estimate.std_error,
        f"rel ≤ {tolerance:.0%}", bool(error <= tolerance), note or f"rel err {error:.2%}",
    )


def sde_oracle_rows(settings: ValidationSettings) -> List[ValidationRow]:
    """線性 SDE 封閉解對照參考表，並與 Simpson 積分比較"""
    rows = []
    for case in SDE_CASES:
        spec = LinearSdeSpec(case["c_a"], case["g"], case["dim"], case["m0"], case["var0"])
        pair = linear_sde_kl_pair(spec, case["c_b"])
        for direction, key in (("forward", "kl_forward"), ("reverse", "kl_reverse")):
            value = pair[key]
            rows.append(ValidationRow(
                "sde-oracle", f"case {case['case']} {direction}", case[key], value, None,
                f"abs ≤ {ORACLE_TABLE_TOL}", bool(abs(value - case[key]) <= ORACLE_TABLE_TOL),
            ))

        closed = linear_sde_kl_closed_form(spec, case["c_b"])
        quadrature = linear_sde_kl_quadrature(spec, case["c_b"])
        relative = abs(quadrature - closed) / closed
        rows.append(ValidationRow(
            "sde-oracle", f"case {case['case']} quadrature", closed, quadrature, None,
            f"rel ≤ {QUADRATURE_REL_TOL:g}", bool(relative <= QUADRATURE_REL_TOL), f"rel diff {relative:.1e}",
        ))
    return rows


def gaussian_oracle_rows(settings: ValidationSettings) -> List[ValidationRow]:
    """高斯解析值對照參考表，並檢查 s² 縮放與維度可加性"""
    rows = []
    values = {}
    for case in GAUSSIAN_CASES:
        setup = gaussian_case_setup(case["s"], case["f0"], case["dim"])
        values[case["case"]] = setup.oracle_kl
        rows.append(ValidationRow(
            "gaussian-oracle", f"case {case['case']} (s={case['s']}, f0={case['f0']}, D={case['dim']})",
            case["kl"], setup.oracle_kl, None, f"abs ≤ {ORACLE_TABLE_TOL}",
            bool(abs(setup.oracle_kl - case["kl"]) <= ORACLE_TABLE_TOL),
        ))

    ratio = values[2] / values[1]
    rows.append(ValidationRow(
        "gaussian-oracle", "s² scaling (case 2 / case 1)", 9.0, ratio, None, "rel ≤ 1e-12",
        bool(abs(ratio - 9.0) <= 9e-12),
    ))
    for case in GAUSSIAN_CASES:
        if case["f0"] == 1 and case["s"] == 0.5 and case["dim"] > 1:
            expected = case["dim"] * values[1]
            rows.append(ValidationRow(
                "gaussian-oracle", f"D additivity (D={case['dim']})", expected, values[case["case"]], None,
                "rel ≤ 1e-12", bool(abs(values[case["case"]] - expected) <= 1e-12 * expected),
            ))
    return rows


def single_mode_rows(settings: ValidationSettings) -> List[ValidationRow]:
    """單模態 m²/(2c) 恆等式：自適應積分與 Monte Carlo"""
    mean, c = 1.0, 0.05
    target = mean ** 2 / (2.0 * c)
    cfg = FklConfig(settings.single_mode_draws // 100, 100, 1, TimeSampler(SamplerKind.IMPORTANCE), settings.seed)

    rows = []
    for label, kappa in (("κ=c", c), ("κ=4c", 4 * c), ("κ=c/4", c / 4)):
        quadrature = single_mode_fkl_quadrature(mean, c, kappa)
        rows.append(ValidationRow(
            "single-mode", f"quadrature {label}", target, quadrature, None, "rel ≤ 1e-8",
            bool(abs(quadrature - target) <= 1e-8 * target),
        ))

        case = single_mode_case(mean, c, kappa)
        estimate = estimate_fkl(case.field_a, case.field_b, MeasureSource(case.measure_a), case.noise, cfg, settings.threads)
        rows.append(_relative_row("single-mode", f"Monte Carlo {label}", target, estimate, SINGLE_MODE_REL_TOL))
    return rows


def gaussian_estimator_rows(settings: ValidationSettings) -> List[ValidationRow]:
    """解析速度場估計值對照解析 KL，並檢查正反向對稱"""
    cfg = FklConfig(settings.gaussian_functions, settings.gaussian_times, 64, TimeSampler(), settings.seed)
    rows = []
    for case in GAUSSIAN_CASES:
        setup = gaussian_case_setup(case["s"], case["f0"], case["dim"])
        forward = estimate_fkl(setup.field_a, setup.field_b, MeasureSource(setup.measure_a), setup.noise, cfg, settings.threads)
        rows.append(_relative_row("gaussian", f"case {case['case']} forward", setup.oracle_kl, forward, GAUSSIAN_REL_TOL))

        if case["dim"] == 1:
            reverse = estimate_fkl(setup.field_b, setup.field_a, MeasureSource(setup.measure_b), setup.noise, cfg, settings.threads)
            combined = 3.0 * np.hypot(forward.std_error, reverse.std_error)
            rows.append(ValidationRow(
                "gaussian", f"case {case['case']} forward ≈ reverse", forward.value, reverse.value,
                reverse.std_error, "|Δ| ≤ 3σ", bool(abs(forward.value - reverse.value) <= combined),
            ))
    return rows


def softmax_convergence_rows(settings: ValidationSettings) -> List[ValidationRow]:
    """經驗速度場誤差隨樣本池增大而下降"""
    setup = gaussian_case_setup(1.5, 1, 1)
    cfg = FklConfig(settings.softmax_functions, settings.softmax_times, setup.n_modes, TimeSampler(), settings.seed)
    rng = make_rng(settings.seed, 0xC0)
    source = MeasureSource(setup.measure_a)

    rows, errors = [], []
    for size in settings.softmax_pool_sizes:
        field_a = EmpiricalSoftmaxField(sample_batch(setup.measure_a, rng, size), setup.noise.cov)
        field_b = EmpiricalSoftmaxField(sample_batch(setup.measure_b, rng, size), setup.noise.cov)
        estimate = estimate_fkl(field_a, field_b, source, setup.noise, cfg, settings.threads)
        error = abs(estimate.value - setup.oracle_kl)
        decreasing = not errors or error < errors[-1]
        errors.append(error)
        rows.append(ValidationRow(
            "softmax", f"pool n={size}", setup.oracle_kl, estimate.value, estimate.std_error,
            "error decreasing", decreasing, f"abs err {error:.3f}",
        ))

    last = rows[-1]
    relative = errors[-1] / setup.oracle_kl
    rows.append(ValidationRow(
        "softmax", f"final pool n={settings.softmax_pool_sizes[-1]}", setup.oracle_kl, last.estimated,
        last.std_error, f"rel ≤ {SOFTMAX_FINAL_REL_TOL:.0%}", bool(relative <= SOFTMAX_FINAL_REL_TOL),
        f"rel err {relative:.2%}",
    ))
    return rows


def _sde_case_rows(settings: ValidationSettings, case: dict) -> List[ValidationRow]:
    defaults = SYSTEM_DEFAULTS["linear-sde"]
    datasets = []
    for offset, drift in enumerate((case["c_a"], case["c_b"])):
        system = linear_sde_system(drift, case["g"], case["dim"], case["m0"], case["var0"])
        cfg = SimConfig(defaults["horizon"], defaults["dt"], settings.sde_paths, settings.seed + offset)
        datasets.append(euler_maruyama(system, cfg))

    n_modes = DEFAULT_M_POINTS // 2
    coeffs_a, coeffs_b = (dataset_coeffs(ds, n_modes) for ds in datasets)
    noise = pooled_noise(coeffs_a, coeffs_b, m_points=DEFAULT_M_POINTS)
    pair = build_field_pair(coeffs_a, coeffs_b, noise, "softmax", seed=settings.seed)

    cfg = FklConfig(settings.sde_functions, settings.sde_times, n_modes, TimeSampler(), settings.seed)
    forward, reverse = estimate_both_directions(pair, cfg, settings.threads)

    band = SDE_END_TO_END_BAND
    rows = [
        _relative_row("sde", f"case {case['case']} forward", case["kl_forward"], forward, band),
        _relative_row("sde", f"case {case['case']} reverse", case["kl_reverse"], reverse, band),
    ]
    gap = reverse.value - forward.value
    rows.append(ValidationRow(
        "sde", f"case {case['case']} forward < reverse", forward.value, reverse.value, None, "3σ",
        bool(gap > 3.0 * np.hypot(forward.std_error, reverse.std_error)),
    ))
    return rows


def sde_end_to_end_rows(settings: ValidationSettings) -> List[ValidationRow]:
    """模擬 -> 係數 -> softmax 速度場 -> 雙向估計，逐一處理 settings.sde_cases"""
    rows = []
    for case in SDE_CASES:
        if case["case"] in settings.sde_cases:
            logger.info(f"SDE 端到端案例 {case['case']}: {settings.sde_paths} 條路徑")
            rows.extend(_sde_case_rows(settings, case))
    return rows


def ablation_rows(settings: ValidationSettings) -> List[ValidationRow]:
    """消融特徵：模態截斷、Monte Carlo 數量、時間抽樣、雜訊與解析度"""
    base = FklConfig(settings.ablation_functions, settings.ablation_times, 64, TimeSampler(), settings.seed)
    analytic = gaussian_builder(1.5, 1, 1, backend="analytic", seed=settings.seed)
    rows = []

    modes = sweep("n_sum_modes", [8, 16, 32, 64], base, analytic, threads=settings.threads)
    errors = modes["abs_error"].to_numpy()
    rows.append(ValidationRow(
        "ablation", "basis truncation error nonincreasing", None, float(errors[-1]), None, "nonincreasing",
        nonincreasing(errors), ", ".join(f"{v:.4f}" for v in errors),
    ))

    evals = sweep("n_evals", [10, 50, 200, 1000, 2000], base, analytic, threads=settings.threads)
    slope = float(np.polyfit(np.log(evals["n_evals"]), np.log(evals["std_error"]), 1)[0])
    rows.append(ValidationRow(
        "ablation", "std_error ~ n_evals^-1/2", -0.5, slope, None, "slope in [-0.75, -0.25]",
        bool(-0.75 <= slope <= -0.25),
    ))

    temporal = sweep("n_time", [10, 20, 40, 80], base, analytic, threads=settings.threads)
    spread = temporal["std_error"].to_numpy()
    rows.append(ValidationRow(
        "ablation", "temporal draws shrink spread", float(spread[0]), float(spread[-1]), None, "last < first",
        bool(spread[-1] < spread[0]),
    ))

    softmax = gaussian_builder(1.5, 1, 1, backend="softmax", pool_size=500, seed=settings.seed)
    for noise_kind in ("identity", "roughened"):
        table = sweep("resolution", [64, 128, 256], base, softmax, base_noise=noise_kind, threads=settings.threads)
        estimates = table["estimate"].to_numpy()
        if noise_kind == "identity":
            passed = bool(np.all(np.diff(estimates) > 0))
            criterion = "strictly increasing"
        else:
            relative_spread = float((estimates.max() - estimates.min()) / estimates.mean())
            passed = relative_spread < TRACE_CLASS_SPREAD
            criterion = f"spread < {TRACE_CLASS_SPREAD:.0%}"
        rows.append(ValidationRow(
            "ablation", f"{noise_kind} noise across resolution", None, float(estimates[-1]), None, criterion,
            passed, ", ".join(f"{v:.3f}" for v in estimates),
        ))
    return rows


BLOCK_RUNNERS: Dict[str, Callable[[ValidationSettings], List[ValidationRow]]] = {
    "sde-oracle": sde_oracle_rows,
    "gaussian-oracle": gaussian_oracle_rows,
    "single-mode": single_mode_rows,
    "gaussian": gaussian_estimator_rows,
    "softmax": softmax_convergence_rows,
    "sde": sde_end_to_end_rows,
    "ablation": ablation_rows,
}


def run_validation(
    blocks: Optional[Sequence[str]] = None,
    settings: Optional[ValidationSettings] = None,
) -> List[ValidationRow]:
    """
    執行選定的驗證區塊

    Args:
        blocks: 區塊名稱 (預設全部)
        settings: Monte Carlo 規模

    Returns:
        所有驗證列
    """
    blocks = list(blocks or VALIDATION_BLOCKS)
    unknown = sorted(set(blocks) - set(VALIDATION_BLOCKS))
    if unknown:
        raise ValueError(f"未知的驗證區塊: {unknown}，可用: {VALIDATION_BLOCKS}")
    settings = settings or ValidationSettings()

    rows = []
    for block in blocks:
        logger.info(f"執行驗證區塊: {block}")
        block_rows = BLOCK_RUNNERS[block](settings)
        failed = [row.case for row in block_rows if not row.passed]
        if failed:
            logger.warning(f"區塊 {block} 未通過: {failed}")
        rows.extend(block_rows)

    logger.info(f"驗證完成: {sum(r.passed for r in rows)}/{len(rows)} 列通過")
    return rows
