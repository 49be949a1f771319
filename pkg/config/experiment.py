"""
實驗設定檔結構 (pydantic) 與 TOML / JSON 載入
"""
import json
import tomllib
from pathlib import Path
from typing import List, Literal, Optional, Tuple, Union

from loguru import logger
from pydantic import BaseModel, ConfigDict, Field, ValidationError, field_validator, model_validator

from config.default_settings import (
    DEFAULT_ACTIVATION, DEFAULT_BOOTSTRAP_RUNS, DEFAULT_BOOTSTRAP_SUBSAMPLE, DEFAULT_DEPTH,
    DEFAULT_EMA_RATE, DEFAULT_LOGIT_NORMAL_MEAN, DEFAULT_LOGIT_NORMAL_STD, DEFAULT_M_POINTS,
    DEFAULT_MMD_BANDWIDTH, DEFAULT_MMD_UNBIASED, DEFAULT_MWD_CANDIDATES, DEFAULT_MWD_REFINE_STEPS,
    DEFAULT_N_FUNCTIONS, DEFAULT_N_MODES, DEFAULT_N_PATHS, DEFAULT_N_SUM_MODES, DEFAULT_N_TIME,
    DEFAULT_OUTPUT_DIR, DEFAULT_SAMPLER, DEFAULT_SOFTMAX_BANDWIDTH, DEFAULT_SPLIT_POOL,
    DEFAULT_SWD_PROJECTIONS, DEFAULT_T_COLLAPSE, DEFAULT_T_MAX, DEFAULT_T_MIN, DEFAULT_THREADS,
    DEFAULT_WIDTH, GAUSSIAN_DATA_MATERN, GAUSSIAN_NOISE_MATERN, METRIC_NAMES, SUPPORTED_SYSTEMS,
)


class StrictModel(BaseModel):
    """不接受未知鍵的基底模型"""
    model_config = ConfigDict(extra="forbid")


class SystemSection(StrictModel):
    name: str = "lotka-volterra"
    params: dict = Field(default_factory=dict)

    @field_validator("name")
    @classmethod
    def check_name(cls, value: str) -> str:
        if value not in SUPPORTED_SYSTEMS:
            raise ValueError(f"未知的系統: {value}，可用: {SUPPORTED_SYSTEMS}")
        return value


class SimulationSection(StrictModel):
    horizon: Optional[float] = Field(default=None, gt=0)
    dt: Optional[float] = Field(default=None, gt=0)
    n_paths: int = Field(default=DEFAULT_N_PATHS, ge=1)


class MeasureSection(StrictModel):
    """高斯特例與函數空間表示"""
    n_modes: int = Field(default=DEFAULT_N_MODES, ge=1)
    m_points: int = Field(default=DEFAULT_M_POINTS, ge=2)
    mirror: bool = False
    noise: Literal["matern", "identity", "roughened", "smooth-matern"] = "roughened"
    data_matern: Tuple[float, float, float] = GAUSSIAN_DATA_MATERN
    noise_matern: Tuple[float, float, float] = GAUSSIAN_NOISE_MATERN


class FieldSection(StrictModel):
    backend: Literal["analytic", "softmax", "trained"] = "softmax"
    t_collapse: float = Field(default=DEFAULT_T_COLLAPSE, gt=0, lt=1)
    bandwidth: float = Field(default=DEFAULT_SOFTMAX_BANDWIDTH, ge=0)
    split_pool: bool = DEFAULT_SPLIT_POOL
    weights: Optional[str] = None


class TrainingSection(StrictModel):
    preset: Optional[str] = None
    iterations: Optional[int] = Field(default=None, ge=0)
    batch_size: Optional[int] = Field(default=None, ge=1)
    lr: Optional[float] = Field(default=None, gt=0)
    width: int = Field(default=DEFAULT_WIDTH, ge=1)
    depth: int = Field(default=DEFAULT_DEPTH, ge=1)
    activation: str = DEFAULT_ACTIVATION
    ema_rate: float = Field(default=DEFAULT_EMA_RATE, gt=0, lt=1)


class FklSection(StrictModel):
    n_function_samples: int = Field(default=DEFAULT_N_FUNCTIONS, ge=1)
    n_time_per_function: int = Field(default=DEFAULT_N_TIME, ge=1)
    n_sum_modes: int = Field(default=DEFAULT_N_SUM_MODES, ge=1)
    sampler: Literal["uniform", "logit-normal", "importance"] = DEFAULT_SAMPLER
    t_min: float = Field(default=DEFAULT_T_MIN, ge=0)
    t_max: float = Field(default=DEFAULT_T_MAX, lt=1)
    logit_mean: float = DEFAULT_LOGIT_NORMAL_MEAN
    logit_std: float = Field(default=DEFAULT_LOGIT_NORMAL_STD, gt=0)

    @model_validator(mode="after")
    def check_support(self) -> "FklSection":
        if not self.t_min < self.t_max:
            raise ValueError(f"t_min 必須小於 t_max: [{self.t_min}, {self.t_max}]")
        return self


class MetricsSection(StrictModel):
    metrics: List[str] = Field(default_factory=lambda: list(METRIC_NAMES))
    n_projections: int = Field(default=DEFAULT_SWD_PROJECTIONS, ge=1)
    n_candidates: int = Field(default=DEFAULT_MWD_CANDIDATES, ge=1)
    refine_steps: int = Field(default=DEFAULT_MWD_REFINE_STEPS, ge=0)
    bandwidth: float = Field(default=DEFAULT_MMD_BANDWIDTH, gt=0)
    unbiased: bool = DEFAULT_MMD_UNBIASED
    bootstrap_runs: int = Field(default=DEFAULT_BOOTSTRAP_RUNS, ge=0)
    bootstrap_subsample: int = Field(default=DEFAULT_BOOTSTRAP_SUBSAMPLE, ge=2)

    @field_validator("metrics")
    @classmethod
    def check_metrics(cls, value: List[str]) -> List[str]:
        unknown = sorted(set(value) - set(METRIC_NAMES))
        if unknown:
            raise ValueError(f"未知的指標: {unknown}，可用: {METRIC_NAMES}")
        return value


class OutputSection(StrictModel):
    directory: str = DEFAULT_OUTPUT_DIR
    threads: int = Field(default=DEFAULT_THREADS, ge=1)


class ExperimentConfig(StrictModel):
    """完整的實驗設定文件"""
    system: SystemSection = Field(default_factory=SystemSection)
    simulation: SimulationSection = Field(default_factory=SimulationSection)
    measure: MeasureSection = Field(default_factory=MeasureSection)
    field: FieldSection = Field(default_factory=FieldSection)
    training: TrainingSection = Field(default_factory=TrainingSection)
    fkl: FklSection = Field(default_factory=FklSection)
    metrics: MetricsSection = Field(default_factory=MetricsSection)
    output: OutputSection = Field(default_factory=OutputSection)
    seed: Optional[int] = Field(default=None, ge=0)

    def with_overrides(self, overrides: dict) -> "ExperimentConfig":
        """
        以 "section.key" 形式的覆寫建立新設定（值為 None 的項目略過）

        Raises:
            ValueError: 當覆寫後的設定不合法時
        """
        data = self.model_dump()
        for dotted, value in overrides.items():
            if value is None:
                continue
            target = data
            *parents, leaf = dotted.split(".")
            for parent in parents:
                target = target.setdefault(parent, {})
            target[leaf] = value
        return ExperimentConfig.model_validate(data)


def load_experiment_config(path: Union[str, Path, None]) -> ExperimentConfig:
    """
    載入 TOML 或 JSON 實驗設定；path 為 None 時回傳預設設定

    Raises:
        ValueError: 當副檔名不支援或內容不符合結構時
    """
    if path is None:
        return ExperimentConfig()

    path = Path(path)
    if not path.exists():
        raise FileNotFoundError(f"設定檔不存在: {path}")

    if path.suffix == ".toml":
        with open(path, "rb") as handle:
            data = tomllib.load(handle)
    elif path.suffix == ".json":
        data = json.loads(path.read_text(encoding="utf-8"))
    else:
        raise ValueError(f"設定檔必須是 .toml 或 .json: {path}")

    try:
        config = ExperimentConfig.model_validate(data)
    except ValidationError as e:
        logger.error(f"設定檔驗證失敗: {path}")
        raise ValueError(str(e)) from e

    logger.info(f"載入設定檔: {path}")
    return config
