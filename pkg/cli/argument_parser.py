"""
命令列參數解析器
"""
from pathlib import Path
from typing import Dict, List, Optional, Tuple

import click
from loguru import logger

from config.default_settings import (
    DEFAULT_LOGS_DIR, METRIC_NAMES, SUPPORTED_ACTIVATIONS, SUPPORTED_SAMPLERS, SUPPORTED_SYSTEMS,
    get_output_paths,
)
from config.experiment import ExperimentConfig, load_experiment_config
from core.ablation_sweep import SWEEP_AXES
from core.gaussian_case import NOISE_CHOICES
from core.validation_suite import VALIDATION_BLOCKS
from models.sde import SplitRule
from utils.log_setup import configure_logging
from utils.seeding import resolve_seed

SWEEP_ALIASES = {"modes": "n_sum_modes", "evals": "n_evals", "time": "n_time"}
INTEGER_AXES = {"n_sum_modes", "n_evals", "n_time", "resolution", "seed"}


def validate_config_file(ctx, param, value) -> ExperimentConfig:
    """
    載入並驗證實驗設定檔

    Args:
        ctx: Click 上下文
        param: 參數物件
        value: 設定檔路徑

    Returns:
        ExperimentConfig（未指定時為預設設定）
    """
    try:
        return load_experiment_config(value)
    except (ValueError, FileNotFoundError) as e:
        raise click.BadParameter(str(e))


def validate_sweep(ctx, param, value) -> Optional[Tuple[str, list]]:
    """
    驗證掃描參數，格式為 axis=v1,v2,...

    Returns:
        (軸名稱, 取值列表)
    """
    if not value:
        return None

    if "=" not in value:
        raise click.BadParameter(f"掃描格式必須為 axis=v1,v2: {value}")

    axis, raw_values = value.split("=", 1)
    axis = SWEEP_ALIASES.get(axis.strip(), axis.strip())
    if axis not in SWEEP_AXES:
        raise click.BadParameter(f"未知的掃描軸: {axis}，可用: {SWEEP_AXES} 或 {sorted(SWEEP_ALIASES)}")

    parts = [part.strip() for part in raw_values.split(",") if part.strip()]
    if not parts:
        raise click.BadParameter(f"掃描軸 {axis} 沒有取值")

    try:
        if axis in INTEGER_AXES:
            values = [int(part) for part in parts]
        elif axis == "t_max":
            values = [float(part) for part in parts]
        else:
            values = parts
    except ValueError:
        raise click.BadParameter(f"掃描取值格式錯誤: {raw_values}")

    if axis == "noise":
        unknown = sorted(set(values) - set(NOISE_CHOICES))
        if unknown:
            raise click.BadParameter(f"未知的雜訊種類: {unknown}，可用: {NOISE_CHOICES}")

    return axis, values


def validate_params(ctx, param, value) -> Dict[str, float]:
    """驗證 key=value 形式的系統參數"""
    params = {}
    for item in value or ():
        if "=" not in item:
            raise click.BadParameter(f"參數格式必須為 key=value: {item}")
        key, raw = item.split("=", 1)
        try:
            number = float(raw)
        except ValueError:
            raise click.BadParameter(f"參數值必須是數字: {item}")
        params[key.strip()] = int(number) if number.is_integer() and key.strip() in ("dim", "branches") else number
    return params


def validate_comma_list(ctx, param, value) -> Optional[List[str]]:
    """逗號分隔的字串列表"""
    if not value:
        return None
    return [part.strip() for part in value.split(",") if part.strip()]


def validate_blocks(ctx, param, value) -> Optional[List[str]]:
    """驗證要執行的驗證區塊"""
    blocks = validate_comma_list(ctx, param, value)
    if blocks:
        unknown = sorted(set(blocks) - set(VALIDATION_BLOCKS))
        if unknown:
            raise click.BadParameter(f"未知的驗證區塊: {unknown}，可用: {VALIDATION_BLOCKS}")
    return blocks


def validate_case_numbers(ctx, param, value) -> Optional[List[int]]:
    """逗號分隔的案例編號"""
    items = validate_comma_list(ctx, param, value)
    if not items:
        return None
    try:
        return [int(item) for item in items]
    except ValueError:
        raise click.BadParameter(f"案例編號必須是整數: {value}")


def validate_time_list(ctx, param, value) -> Optional[List[float]]:
    """逗號分隔的 [0, 1] 時間點"""
    items = validate_comma_list(ctx, param, value)
    if not items:
        return None
    try:
        times = [float(item) for item in items]
    except ValueError:
        raise click.BadParameter(f"時間點必須是數字: {value}")
    outside = [t for t in times if not 0.0 <= t <= 1.0]
    if outside:
        raise click.BadParameter(f"時間點必須在 [0, 1]: {outside}")
    return times


def validate_named_paths(ctx, param, value) -> Dict[str, Path]:
    """name=path 形式的檔案對應"""
    mapping = {}
    for item in value or ():
        if "=" not in item:
            raise click.BadParameter(f"格式必須為 name=path: {item}")
        name, raw = item.split("=", 1)
        path = Path(raw)
        if not path.is_file():
            raise click.BadParameter(f"檔案不存在: {raw}")
        mapping[name.strip()] = path
    return mapping


def _config(ctx, overrides: dict) -> ExperimentConfig:
    try:
        return ctx.obj["config"].with_overrides(overrides)
    except ValueError as e:
        raise click.UsageError(f"參數與設定檔不相容: {e}")


def _echo(ctx, message: str, color: str = "green") -> None:
    if not ctx.obj["quiet"]:
        click.echo(click.style(message, fg=color))


def _seed_option(func):
    return click.option('--seed', type=click.IntRange(min=0), help='隨機種子 (覆寫全域 --seed)')(func)


def _chart(ctx):
    from output.table_chart import TableChart

    return None if ctx.obj["quiet"] else TableChart()


@click.group()
@click.option(
    '--config', 'config',
    type=click.Path(exists=True, dir_okay=False),
    callback=validate_config_file,
    help='實驗設定檔 (.toml 或 .json)'
)
@click.option('--seed', type=click.IntRange(min=0), help='隨機種子 (預設: FKL_SEED 環境變數或 0)')
@click.option('--threads', type=click.IntRange(1, 256), help='工作執行緒上限')
@click.option('--output-dir', type=click.Path(file_okay=False), help='輸出根目錄')
@click.option('--verbose', is_flag=True, help='詳細輸出模式')
@click.option('--quiet', is_flag=True, help='安靜模式 (只輸出結果)')
@click.option('--log-file', is_flag=True, help=f'另外寫入輪替日誌檔 ({DEFAULT_LOGS_DIR})')
@click.pass_context
def cli_main(ctx, config, seed, threads, output_dir, verbose, quiet, log_file):
    """
    函數空間 KL 散度估計與軌跡推論評測工具

    範例:
        python main.py oracle linear-sde --ca 0.01 --cb 1.5 --g 0.75 --d 1 --m0 2 --var0 0.2
        python main.py simulate --system lotka-volterra --paths 100 --seed 7
        python main.py fkl a.fklt b.fklt --sweep modes=8,16,32,64
        python main.py validate --quick
    """
    log_dir = None
    if log_file:
        log_dir = get_output_paths(output_dir or config.output.directory)["logs"]
    configure_logging(verbose, quiet, log_dir)

    try:
        config = config.with_overrides({
            "seed": resolve_seed(seed if seed is not None else config.seed),
            "output.threads": threads,
            "output.directory": output_dir,
        })
    except ValueError as e:
        raise click.UsageError(str(e))

    ctx.obj = {"config": config, "verbose": verbose, "quiet": quiet}
    logger.debug(f"種子 {config.seed}，執行緒 {config.output.threads}，輸出目錄 {config.output.directory}")


@cli_main.command()
@click.option('--system', type=click.Choice(SUPPORTED_SYSTEMS), help='SDE 系統')
@click.option('--paths', type=click.IntRange(min=1), help='路徑數')
@click.option('--horizon', type=float, help='模擬時間長度 T')
@click.option('--dt', type=float, help='時間步長')
@click.option('--param', 'params', multiple=True, callback=validate_params, help='系統參數 key=value (可重複)')
@click.option('--output', type=click.Path(dir_okay=False), help='FKLT 輸出路徑')
@click.option('--no-sidecar', is_flag=True, help='不寫出 .json manifest')
@_seed_option
@click.pass_context
def simulate(ctx, system, paths, horizon, dt, params, output, no_sidecar, seed):
    """以 Euler-Maruyama 模擬 SDE 並寫出 FKLT 軌跡檔"""
    from cli.handlers import run_simulate

    overrides = {
        "system.name": system,
        "simulation.n_paths": paths,
        "simulation.horizon": horizon,
        "simulation.dt": dt,
        "seed": seed,
    }
    if params:
        overrides["system.params"] = params
    cfg = _config(ctx, overrides)

    dataset, file_path = run_simulate(cfg, Path(output) if output else None, sidecar=not no_sidecar)
    _echo(ctx, f"✓ 軌跡已儲存: {file_path} (shape {dataset.paths.shape[0]}x{dataset.paths.shape[1]}x{dataset.paths.shape[2]})")


@cli_main.command()
@click.argument('trajectory', type=click.Path(exists=True, dir_okay=False))
@click.option('--n-snapshots', type=click.IntRange(min=2), help='快照數 (預設依系統)')
@click.option('--split', type=click.Choice([rule.value for rule in SplitRule]), help='訓練/驗證劃分規則')
@click.option('--labels', callback=validate_comma_list, help='explicit 規則的標籤，逗號分隔')
@click.option('--output-dir', type=click.Path(file_okay=False), help='快照 CSV 輸出目錄')
@_seed_option
@click.pass_context
def snapshots(ctx, trajectory, n_snapshots, split, labels, output_dir, seed):
    """從軌跡檔擷取快照點雲 CSV"""
    from cli.handlers import run_snapshots

    cfg = _config(ctx, {"seed": seed})
    written = run_snapshots(
        Path(trajectory), n_snapshots, split, labels, cfg.seed, Path(output_dir) if output_dir else None
    )
    for name, path in written.items():
        _echo(ctx, f"✓ {name} 快照已儲存: {path}")


@cli_main.group()
def oracle():
    """封閉解 KL"""


def _emit_json(ctx, data: dict, output: Optional[str], default_name: str) -> None:
    from output.json_writer import JSONWriter, dumps

    click.echo(dumps({k: data[k] for k in ("kl_forward", "kl_reverse")}))
    if output:
        path = Path(output)
        JSONWriter(path.parent).write(data, path.name)
    else:
        JSONWriter(get_output_paths(ctx.obj["config"].output.directory)["json"]).write(data, default_name)


@oracle.command('linear-sde')
@click.option('--ca', type=float, default=0.01, show_default=True, help='A 的漂移係數')
@click.option('--cb', type=float, default=1.5, show_default=True, help='B 的漂移係數')
@click.option('--g', type=float, default=0.75, show_default=True, help='擴散係數')
@click.option('--d', 'dim', type=click.IntRange(min=1), default=1, show_default=True, help='維度')
@click.option('--m0', type=float, default=2.0, show_default=True, help='每維初始平均值')
@click.option('--var0', type=float, default=0.2, show_default=True, help='每維初始變異數')
@click.option('--output', type=click.Path(dir_okay=False), help='JSON 輸出路徑')
@click.pass_context
def oracle_linear_sde(ctx, ca, cb, g, dim, m0, var0, output):
    """兩個線性 SDE 路徑測度之間的正反向 KL"""
    from cli.handlers import run_oracle_linear_sde

    try:
        result = run_oracle_linear_sde(ca, cb, g, dim, m0, var0)
    except ValueError as e:
        raise click.BadParameter(str(e))
    _emit_json(ctx, result, output, f"oracle_linear_sde_{ca:g}_{cb:g}_d{dim}.json")


@oracle.command('gaussian')
@click.option('--mean-scale', type=float, default=0.5, show_default=True, help='平均值振幅 s')
@click.option('--f0', type=click.IntRange(min=0), default=1, show_default=True, help='平均值頻率')
@click.option('--d', 'dim', type=click.IntRange(min=1), default=1, show_default=True, help='輸出維度')
@click.option('--n-modes', type=click.IntRange(min=1), help='保留模態數')
@click.option('--output', type=click.Path(dir_okay=False), help='JSON 輸出路徑')
@click.pass_context
def oracle_gaussian(ctx, mean_scale, f0, dim, n_modes, output):
    """高斯平均值平移的解析 KL"""
    from cli.handlers import run_oracle_gaussian

    cfg = _config(ctx, {"measure.n_modes": n_modes})
    try:
        result = run_oracle_gaussian(cfg, mean_scale, f0, dim)
    except ValueError as e:
        raise click.BadParameter(str(e))
    _emit_json(ctx, result, output, f"oracle_gaussian_s{mean_scale:g}_f{f0}_d{dim}.json")


def _training_options(func):
    options = [
        click.option('--preset', type=str, help='訓練預設 (gaussian, linear-sde, lotka-volterra, ...)'),
        click.option('--iterations', type=click.IntRange(min=0), help='訓練迭代次數'),
        click.option('--batch-size', type=click.IntRange(min=1), help='批次大小'),
        click.option('--lr', type=float, help='學習率'),
        click.option('--width', type=click.IntRange(min=1), help='隱藏層寬度'),
        click.option('--depth', type=click.IntRange(min=1), help='隱藏層數'),
        click.option('--activation', type=click.Choice(SUPPORTED_ACTIVATIONS), help='激活函數'),
    ]
    for option in reversed(options):
        func = option(func)
    return func


def _training_overrides(preset, iterations, batch_size, lr, width, depth, activation) -> dict:
    return {
        "training.preset": preset,
        "training.iterations": iterations,
        "training.batch_size": batch_size,
        "training.lr": lr,
        "training.width": width,
        "training.depth": depth,
        "training.activation": activation,
    }


@cli_main.command()
@click.argument('trajectory_a', type=click.Path(exists=True, dir_okay=False))
@click.argument('trajectory_b', type=click.Path(exists=True, dir_okay=False))
@click.option('--backend', type=click.Choice(['softmax', 'trained']), help='速度場後端')
@click.option('--noise', type=click.Choice(NOISE_CHOICES), help='參考雜訊')
@click.option('--n-modes', type=click.IntRange(min=1), help='頻譜模態數')
@click.option('--functions', type=click.IntRange(min=1), help='函數樣本數')
@click.option('--times', type=click.IntRange(min=1), help='每個函數的時間樣本數')
@click.option('--sum-modes', type=click.IntRange(min=1), help='CM 範數加總的模態數')
@click.option('--sampler', type=click.Choice(SUPPORTED_SAMPLERS), help='時間採樣方式')
@click.option('--t-max', type=float, help='時間支撐上限')
@click.option('--bandwidth', type=float, help='softmax 高斯平滑寬度 (預設 0 為精確速度場)')
@click.option('--no-split', is_flag=True, help='softmax 速度場與估計共用同一個樣本池')
@click.option('--weights', type=click.Path(exists=True, dir_okay=False), help='載入 FKLW 權重 (trained 後端)')
@click.option('--save-weights', type=click.Path(dir_okay=False), help='儲存訓練後的 FKLW 權重')
@click.option('--sweep', 'sweep_spec', callback=validate_sweep, help='掃描 axis=v1,v2,... (例如 modes=8,16,32,64)')
@click.option('--output', type=click.Path(dir_okay=False), help='估計 JSON 檔名')
@click.option('--sweep-output', type=click.Path(dir_okay=False), help='掃描 CSV 檔名')
@_training_options
@_seed_option
@click.pass_context
def fkl(ctx, trajectory_a, trajectory_b, backend, noise, n_modes, functions, times, sum_modes, sampler,
        t_max, bandwidth, no_split, weights, save_weights, sweep_spec, output, sweep_output,
        preset, iterations, batch_size, lr, width, depth, activation, seed):
    """兩個軌跡檔之間的正反向函數空間 KL"""
    from cli.handlers import run_fkl
    from output.csv_writer import CSVWriter
    from output.json_writer import JSONWriter
    from utils.file_formats import save_weights as write_weights

    overrides = {
        "field.backend": backend,
        "field.bandwidth": bandwidth,
        "field.weights": weights,
        "measure.noise": noise,
        "measure.n_modes": n_modes,
        "fkl.n_function_samples": functions,
        "fkl.n_time_per_function": times,
        "fkl.n_sum_modes": sum_modes,
        "fkl.sampler": sampler,
        "fkl.t_max": t_max,
        "seed": seed,
        **_training_overrides(preset, iterations, batch_size, lr, width, depth, activation),
    }
    if no_split:
        overrides["field.split_pool"] = False
    if weights and not backend:
        overrides["field.backend"] = "trained"
    cfg = _config(ctx, overrides)

    path_a, path_b = Path(trajectory_a), Path(trajectory_b)
    axis, values = sweep_spec if sweep_spec else (None, None)
    try:
        result = run_fkl(cfg, path_a, path_b, axis, values)
    except ValueError as e:
        raise click.UsageError(str(e))

    paths = get_output_paths(cfg.output.directory)
    label = f"{path_a.stem}_vs_{path_b.stem}"
    extra = {"analytic": result["analytic"]} if result["analytic"] else {}
    if result["training"] is not None:
        extra["training"] = result["training"].to_dict()
    json_path = JSONWriter(paths["json"]).write_estimates(
        result["forward"], result["reverse"], output or f"fkl_{label}.json", extra
    )
    _echo(ctx, f"✓ FKL 估計已儲存: {json_path}")

    chart = _chart(ctx)
    if chart:
        chart.display_estimates(result["forward"], result["reverse"], f"FKL {label}", result["analytic"])

    if result["sweep"] is not None:
        csv_path = CSVWriter(paths["csv"]).write_sweep(result["sweep"], sweep_output or f"sweep_{axis}_{label}.csv")
        _echo(ctx, f"✓ 掃描結果已儲存: {csv_path}")
        if chart:
            chart.display_dataframe(result["sweep"][["value", "estimate", "std_error", "n_evals"]], f"Sweep {axis}")

    if save_weights and result["training"] is not None:
        write_weights(save_weights, result["training"].model, result["training"].ema_model)
        _echo(ctx, f"✓ 權重已儲存: {save_weights}")


@cli_main.command('fit-velocity')
@click.argument('trajectory_a', type=click.Path(exists=True, dir_okay=False))
@click.argument('trajectory_b', type=click.Path(exists=True, dir_okay=False))
@click.option('--noise', type=click.Choice(NOISE_CHOICES), help='參考雜訊')
@click.option('--n-modes', type=click.IntRange(min=1), help='頻譜模態數')
@click.option('--output', type=click.Path(dir_okay=False), help='FKLW 權重輸出路徑')
@click.option('--error-profile', 'error_times', callback=validate_time_list,
              help='在這些時間點 (逗號分隔) 寫出相對 softmax 速度場的誤差剖面 CSV')
@_training_options
@_seed_option
@click.pass_context
def fit_velocity(ctx, trajectory_a, trajectory_b, noise, n_modes, output, error_times,
                 preset, iterations, batch_size, lr, width, depth, activation, seed):
    """訓練雙條件速度場網路並儲存權重"""
    from cli.handlers import run_fit_velocity
    from output.csv_writer import CSVWriter
    from output.json_writer import JSONWriter

    cfg = _config(ctx, {
        "measure.noise": noise,
        "measure.n_modes": n_modes,
        "seed": seed,
        **_training_overrides(preset, iterations, batch_size, lr, width, depth, activation),
    })

    path_a, path_b = Path(trajectory_a), Path(trajectory_b)
    paths = get_output_paths(cfg.output.directory)
    label = f"{path_a.stem}_vs_{path_b.stem}"
    weights_path = Path(output) if output else paths["weights"] / f"{label}.fklw"

    training, profiles = run_fit_velocity(cfg, path_a, path_b, weights_path, error_times)
    summary_path = JSONWriter(paths["json"]).write(training.to_dict(), f"training_{label}.json")
    _echo(ctx, f"✓ 權重已儲存: {weights_path}")
    _echo(ctx, f"✓ 訓練摘要已儲存: {summary_path}")

    if profiles is not None:
        profile_path = CSVWriter(paths["csv"]).write_error_profile(profiles, f"field_error_{label}.csv")
        _echo(ctx, f"✓ 速度場誤差剖面已儲存: {profile_path}")


@cli_main.command()
@click.argument('reference', type=click.Path(exists=True, dir_okay=False))
@click.argument('candidates', nargs=-1, required=True, type=click.Path(exists=True, dir_okay=False))
@click.option('--name', 'names', multiple=True, help='候選方法名稱 (依序對應，預設為檔名)')
@click.option('--metric', 'metrics', multiple=True, type=click.Choice(METRIC_NAMES), help='指標 (可重複，預設全部)')
@click.option('--bootstrap', is_flag=True, help='以子抽樣估計平均值與標準差')
@click.option('--fkl-json', 'fkl_json', multiple=True, callback=validate_named_paths, help='name=path 的 FKL 估計 JSON')
@click.option('--rank', 'with_rank', is_flag=True, help='同時輸出平均名次')
@click.option('--output', type=click.Path(dir_okay=False), help='指標 CSV 檔名')
@_seed_option
@click.pass_context
def metrics(ctx, reference, candidates, names, metrics, bootstrap, fkl_json, with_rank, output, seed):
    """參考快照對候選快照的邊際指標表"""
    from cli.handlers import rank_metric_reports, run_metrics
    from output.csv_writer import CSVWriter, metric_table
    from utils.file_formats import read_fkl_json

    if names and len(names) != len(candidates):
        raise click.BadParameter(f"--name 的數量 ({len(names)}) 必須等於候選檔案數 ({len(candidates)})")

    cfg = _config(ctx, {"metrics.metrics": list(metrics) if metrics else None, "seed": seed})
    labels = list(names) if names else [Path(c).stem for c in candidates]
    if len(set(labels)) != len(labels):
        raise click.BadParameter(f"候選方法名稱重複: {labels}")

    reports = run_metrics(cfg, Path(reference), dict(zip(labels, map(Path, candidates))), bootstrap)
    fkl = {name: read_fkl_json(path) for name, path in fkl_json.items()}

    writer = CSVWriter(get_output_paths(cfg.output.directory)["csv"])
    csv_path = writer.write_metric_report(reports, fkl, output or f"metrics_{Path(reference).stem}.csv")
    _echo(ctx, f"✓ 指標表已儲存: {csv_path}")

    chart = _chart(ctx)
    if chart:
        chart.display_dataframe(metric_table(reports, fkl), "Marginal metrics", index=True)

    if with_rank:
        if len(reports) < 2:
            raise click.UsageError("排名至少需要 2 個候選方法")
        ranking = rank_metric_reports(reports)
        rank_path = writer.write_ranking(ranking, f"ranks_{Path(csv_path).stem}.csv")
        _echo(ctx, f"✓ 名次表已儲存: {rank_path}")
        if chart:
            chart.display_ranking(ranking)


@cli_main.command()
@click.argument('scores', type=click.Path(exists=True, dir_okay=False))
@click.option('--higher-is-better', is_flag=True, help='分數越高越好')
@click.option('--output', type=click.Path(dir_okay=False), help='名次 CSV 檔名')
@click.pass_context
def rank(ctx, scores, higher_is_better, output):
    """方法 x 任務分數表的平均名次與 Friedman 統計量"""
    from cli.handlers import run_rank
    from output.csv_writer import CSVWriter

    try:
        ranking = run_rank(Path(scores), lower_is_better=not higher_is_better)
    except ValueError as e:
        raise click.UsageError(str(e))

    writer = CSVWriter(get_output_paths(ctx.obj["config"].output.directory)["csv"])
    rank_path = writer.write_ranking(ranking, output or f"ranks_{Path(scores).stem}.csv")
    _echo(ctx, f"✓ 名次表已儲存: {rank_path}")
    click.echo(f"friedman_statistic={ranking['friedman_statistic']:.6g} p_value={ranking['p_value']:.6g}")

    chart = _chart(ctx)
    if chart:
        chart.display_ranking(ranking)


@cli_main.command()
@click.option('--blocks', callback=validate_blocks, help=f'驗證區塊，逗號分隔 (預設全部: {",".join(VALIDATION_BLOCKS)})')
@click.option('--quick', is_flag=True, help='縮小 Monte Carlo 規模')
@click.option('--sde-cases', callback=validate_case_numbers, help='SDE 端到端案例編號，逗號分隔 (預設 1)')
@click.option('--output', type=click.Path(dir_okay=False), help='驗證 CSV 檔名')
@click.option('--markdown', type=click.Path(dir_okay=False), help='另外寫出純文字對照表')
@_seed_option
@click.pass_context
def validate(ctx, blocks, quick, sde_cases, output, markdown, seed):
    """解析值對估計值的驗證表；任何一列未通過時結束碼為 1"""
    from cli.handlers import run_validate
    from output.csv_writer import CSVWriter
    from output.table_chart import validation_text

    cfg = _config(ctx, {"seed": seed})
    rows = run_validate(blocks, quick, cfg.seed, cfg.output.threads, sde_cases)

    csv_path = CSVWriter(get_output_paths(cfg.output.directory)["csv"]).write_validation(
        rows, output or "validation.csv"
    )
    _echo(ctx, f"✓ 驗證表已儲存: {csv_path}")

    text = validation_text(rows)
    if markdown:
        Path(markdown).parent.mkdir(parents=True, exist_ok=True)
        Path(markdown).write_text(text + "\n", encoding="utf-8")

    chart = _chart(ctx)
    if chart:
        chart.display_validation(rows)
    else:
        click.echo(text)

    failed = [row for row in rows if not row.passed]
    if failed:
        logger.error(f"{len(failed)} 列驗證未通過")
        ctx.exit(1)


@cli_main.command()
@click.argument('csv_file', type=click.Path(exists=True, dir_okay=False))
@click.option('--horizon', type=float, help='實際時間長度 (預設取 CSV 的時間欄)')
@click.option('--output', type=click.Path(dir_okay=False), help='FKLT 輸出路徑')
@click.pass_context
def convert(ctx, csv_file, horizon, output):
    """長格式 CSV 軌跡 (path, time, dim0, ...) 轉為 FKLT"""
    from cli.handlers import run_convert

    file_path = run_convert(Path(csv_file), Path(output) if output else None, horizon)
    _echo(ctx, f"✓ 軌跡已儲存: {file_path}")


def parse_arguments(args: Optional[List[str]] = None) -> int:
    """
    解析並執行命令列的便利函數

    Args:
        args: 參數列表（預設取 sys.argv）

    Returns:
        結束碼
    """
    try:
        result = cli_main.main(args=args, standalone_mode=False)
        return result if isinstance(result, int) else 0
    except click.ClickException as e:
        e.show()
        return e.exit_code
    except click.Abort:
        click.echo(click.style("已中止", fg='red'), err=True)
        return 1


if __name__ == '__main__':
    # 直接執行時使用標準 Click 行為
    cli_main()
