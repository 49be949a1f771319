"""
預設設定和配置
"""
from pathlib import Path


# 基本設定
DEFAULT_SEED = 0
SEED_ENV_VAR = "FKL_SEED"
SLOW_TESTS_ENV_VAR = "FKL_SLOW_TESTS"
DEFAULT_THREADS = 4

# 函數空間表示
DEFAULT_M_POINTS = 128
DEFAULT_N_MODES = 64
DEFAULT_MIRROR = False

# 高斯測度與協方差
DEFAULT_FLOOR_EPS = 1e-8
DEFAULT_ROUGHEN_EXPONENT = 2
SUPPORTED_ROUGHEN_EXPONENTS = (1, 2)
MIN_EIGENVALUE = 1e-300
CONDITIONING_RATIO = 1e-15
MIN_TRACE_DIAGNOSTIC_MODES = 8

# 速度場
DEFAULT_T_COLLAPSE = 1e-3
DEFAULT_SOFTMAX_BANDWIDTH = 0.0  # 0 為精確的 softmax 速度場，> 0 時才加入高斯平滑
DEFAULT_SPLIT_POOL = True
TIME_EMBEDDING_FREQUENCIES = 8

# FKL 估計
DEFAULT_T_MIN = 1e-6
DEFAULT_T_MAX = 1.0 - 1e-4
DEFAULT_N_FUNCTIONS = 500
DEFAULT_N_TIME = 100
DEFAULT_N_SUM_MODES = 64
DEFAULT_SAMPLER = "importance"
DEFAULT_LOGIT_NORMAL_MEAN = 0.0
DEFAULT_LOGIT_NORMAL_STD = 1.0
DEFAULT_CHUNK_FUNCTIONS = 32
BISECTION_TOL = 1e-12
BISECTION_MAX_ITER = 200
SUPPORTED_SAMPLERS = ["uniform", "logit-normal", "importance"]

# 網路訓練
DEFAULT_WIDTH = 128
DEFAULT_DEPTH = 3
DEFAULT_ACTIVATION = "gelu"
SUPPORTED_ACTIVATIONS = ["gelu", "silu", "tanh"]
DEFAULT_EMA_RATE = 0.999
DEFAULT_ADAM_BETAS = (0.9, 0.999)
DEFAULT_ADAM_EPS = 1e-8

# 各實驗的訓練預設值（來自超參數表；迭代次數在桌面規模下另行縮小）
TRAINING_PRESETS = {
    "gaussian": {
        "iterations": 30_000, "batch_size": 1024, "lr": 1e-3,
        "w_start": 1.0, "w_end": 1.0,
        "t_sampler": "logit-normal", "curriculum_mean": 0.0, "curriculum_std": 1.0,
        "curriculum_fraction": 1.0,
    },
    "linear-sde": {
        "iterations": 30_000, "batch_size": 1024, "lr": 4.06e-3,
        "w_start": 1.0, "w_end": 0.2,
        "t_sampler": "importance", "curriculum_mean": 0.0, "curriculum_std": 1.0,
        "curriculum_fraction": 0.0,
    },
    "lotka-volterra": {
        "iterations": 20_000, "batch_size": 32, "lr": 6.21e-4,
        "w_start": 1.0, "w_end": 0.2,
        "t_sampler": "curriculum", "curriculum_mean": 0.8, "curriculum_std": 1.0,
        "curriculum_fraction": 0.4,
    },
    "repressilator": {
        "iterations": 40_000, "batch_size": 32, "lr": 3.57e-3,
        "w_start": 0.2, "w_end": 0.04,
        "t_sampler": "curriculum", "curriculum_mean": 0.5, "curriculum_std": 1.0,
        "curriculum_fraction": 0.2,
    },
    "petal": {
        "iterations": 50_000, "batch_size": 64, "lr": 1.78e-3,
        "w_start": 1.0, "w_end": 0.2,
        "t_sampler": "curriculum", "curriculum_mean": 0.5, "curriculum_std": 1.5,
        "curriculum_fraction": 0.6,
    },
}

# 各系統的 FKL 模態數與雜訊設定
SYSTEM_N_SUM_MODES = {
    "linear-sde": 64,
    "lotka-volterra": 16,
    "repressilator": 16,
    "petal": 16,
}

# SDE 模擬
SIM_DIVERGENCE_BOUND = 1e9
SUPPORTED_SYSTEMS = ["lotka-volterra", "repressilator", "petal", "linear-sde"]
SYSTEM_DEFAULTS = {
    "lotka-volterra": {"horizon": 8.0, "dt": 0.02, "n_snapshots": 9, "split": "odd-train-even-val"},
    "repressilator": {"horizon": 7.5, "dt": 0.01, "n_snapshots": 11, "split": "odd-train-even-val"},
    "petal": {"horizon": 4.0, "dt": 0.04, "n_snapshots": 5, "split": "all-shared-resample"},
    "linear-sde": {"horizon": 1.0, "dt": 1.0 / 127.0, "n_snapshots": 2, "split": "odd-train-even-val"},
}
DEFAULT_N_PATHS = 100

# 線性 SDE 特例（分析欄位）
SDE_CASES = [
    {"case": 1, "dim": 1, "c_a": 0.01, "c_b": 1.5, "g": 0.75, "m0": 2.0, "var0": 0.2,
     "kl_forward": 8.93, "kl_reverse": 54.71},
    {"case": 2, "dim": 1, "c_a": 0.10, "c_b": 2.0, "g": 0.75, "m0": 2.0, "var0": 0.2,
     "kl_forward": 15.89, "kl_reverse": 186.19},
    {"case": 3, "dim": 2, "c_a": 0.01, "c_b": 1.5, "g": 0.75, "m0": 2.0, "var0": 0.2,
     "kl_forward": 17.86, "kl_reverse": 109.43},
    {"case": 4, "dim": 3, "c_a": 0.01, "c_b": 1.5, "g": 0.75, "m0": 2.0, "var0": 0.2,
     "kl_forward": 26.79, "kl_reverse": 164.14},
    {"case": 5, "dim": 5, "c_a": 0.01, "c_b": 1.5, "g": 1.00, "m0": 2.0, "var0": 0.2,
     "kl_forward": 26.34, "kl_reverse": 158.22},
]

# 高斯測度特例：(nu, length_scale, variance)
GAUSSIAN_DATA_MATERN = (3.5, 0.05, 0.15)
GAUSSIAN_NOISE_MATERN = (0.5, 0.1, 1.0)
GAUSSIAN_CASES = [
    {"case": 1, "dim": 1, "f0": 1, "s": 0.5, "kl": 3.64},
    {"case": 2, "dim": 1, "f0": 1, "s": 1.5, "kl": 32.79},
    {"case": 3, "dim": 1, "f0": 3, "s": 1.5, "kl": 50.00},
    {"case": 4, "dim": 1, "f0": 5, "s": 1.5, "kl": 103.74},
    {"case": 5, "dim": 2, "f0": 1, "s": 0.5, "kl": 7.29},
    {"case": 6, "dim": 3, "f0": 1, "s": 0.5, "kl": 10.93},
    {"case": 7, "dim": 5, "f0": 1, "s": 0.5, "kl": 18.22},
    {"case": 8, "dim": 10, "f0": 1, "s": 0.5, "kl": 36.43},
]

# 邊際指標
DEFAULT_SWD_PROJECTIONS = 128
DEFAULT_MWD_CANDIDATES = 256
DEFAULT_MWD_REFINE_STEPS = 50
DEFAULT_MMD_BANDWIDTH = 1.0
DEFAULT_MMD_UNBIASED = True
DEFAULT_BOOTSTRAP_RUNS = 10
DEFAULT_BOOTSTRAP_SUBSAMPLE = 100
MAX_OT_POINTS = 5000
METRIC_NAMES = ["emd", "w2", "swd", "mwd", "mmd"]

# 驗收容許誤差
ORACLE_TABLE_TOL = 0.01
QUADRATURE_REL_TOL = 1e-10
SINGLE_MODE_REL_TOL = 0.02
GAUSSIAN_REL_TOL = 0.03
SOFTMAX_FINAL_REL_TOL = 0.15
SDE_END_TO_END_BAND = 0.25
TRACE_CLASS_SPREAD = 0.10
# 模態截斷誤差的單調性只容許捨入誤差 (相對)
TRUNCATION_MONOTONE_RTOL = 1e-9

# 輸出設定
DEFAULT_OUTPUT_DIR = "output_data"
DEFAULT_TRAJECTORY_DIR = "output_data/trajectories"
DEFAULT_CSV_DIR = "output_data/csv"
DEFAULT_JSON_DIR = "output_data/json"
DEFAULT_WEIGHTS_DIR = "output_data/weights"
DEFAULT_LOGS_DIR = "output_data/logs"

# 日誌設定
LOG_FORMAT = "<green>{time:YYYY-MM-DD HH:mm:ss}</green> | <level>{level: <8}</level> | <cyan>{name}</cyan>:<cyan>{function}</cyan>:<cyan>{line}</cyan> - <level>{message}</level>"
LOG_ROTATION = "10 MB"
LOG_RETENTION = "7 days"

# CSV 輸出格式
CSV_ENCODING = "utf-8"
CSV_FLOAT_FORMAT = "%.10g"

# 二進位檔案格式
TRAJECTORY_MAGIC = b"FKLT"
WEIGHTS_MAGIC = b"FKLW"
WEIGHTS_VERSION = 1
TRAJECTORY_DTYPE = "f64le"


def get_output_paths(base: str = DEFAULT_OUTPUT_DIR) -> dict:
    """
    取得輸出路徑設定

    Args:
        base: 輸出根目錄

    Returns:
        包含所有輸出路徑的字典
    """
    base_dir = Path(base)

    return {
        "base": base_dir,
        "trajectories": base_dir / "trajectories",
        "csv": base_dir / "csv",
        "json": base_dir / "json",
        "weights": base_dir / "weights",
        "logs": base_dir / "logs",
    }


def ensure_output_directories(base: str = DEFAULT_OUTPUT_DIR) -> dict:
    """確保所有輸出目錄存在，回傳路徑字典"""
    paths = get_output_paths(base)

    for path in paths.values():
        path.mkdir(parents=True, exist_ok=True)

    return paths


def get_training_preset(name: str) -> dict:
    """
    取得實驗的訓練預設值

    Args:
        name: 實驗名稱

    Returns:
        預設值字典的副本

    Raises:
        ValueError: 當實驗名稱未知時
    """
    if name not in TRAINING_PRESETS:
        raise ValueError(f"未知的訓練預設: {name}，可用: {sorted(TRAINING_PRESETS)}")
    return dict(TRAINING_PRESETS[name])
