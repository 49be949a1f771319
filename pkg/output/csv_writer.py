"""
CSV 檔案輸出功能
"""
from datetime import datetime
from pathlib import Path
from typing import Dict, Iterable, Mapping, Optional, Tuple, Union

import pandas as pd
from loguru import logger

from config.default_settings import CSV_ENCODING, CSV_FLOAT_FORMAT, DEFAULT_CSV_DIR
from models.metric_report import MetricReport


def metric_table(
    reports: Mapping[str, MetricReport],
    fkl: Optional[Mapping[str, Tuple[float, float]]] = None,
) -> pd.DataFrame:
    """
    方法 x (τ, 指標) 的表格，可附上正反向 FKL 欄位

    Args:
        reports: 方法名稱 -> 指標報告
        fkl: 方法名稱 -> (forward, reverse) 估計值

    Returns:
        以方法為索引的 DataFrame
    """
    rows = {}
    for method, report in reports.items():
        row = report.flat_row()
        if report.std is not None:
            for time in sorted(report.std):
                for name, value in report.std[time].items():
                    row[f"{time:g}/{name}_std"] = value
        if fkl and method in fkl:
            forward, reverse = fkl[method]
            row["fkl_forward"] = float(forward)
            row["fkl_reverse"] = float(reverse)
        rows[method] = row

    table = pd.DataFrame.from_dict(rows, orient="index")
    table.index.name = "method"
    return table


class CSVWriter:
    """CSV 檔案輸出器"""

    def __init__(self, output_dir: Union[str, Path] = DEFAULT_CSV_DIR):
        """
        初始化 CSV 輸出器

        Args:
            output_dir: 輸出目錄
        """
        self.output_dir = Path(output_dir)
        self.output_dir.mkdir(parents=True, exist_ok=True)
        logger.info(f"CSV 輸出器初始化，輸出目錄: {self.output_dir}")

    def _target(self, filename: Optional[str], prefix: str) -> Path:
        if filename is None:
            timestamp = datetime.now().strftime("%Y%m%d_%H%M%S")
            filename = f"{prefix}_{timestamp}.csv"

        # 確保檔名以 .csv 結尾
        if not filename.endswith(".csv"):
            filename += ".csv"

        return self.output_dir / filename

    def write_dataframe(
        self,
        table: pd.DataFrame,
        filename: str = None,
        prefix: str = "table",
        index: bool = False,
    ) -> Path:
        """
        將 DataFrame 寫入 CSV 檔案

        Args:
            table: 資料表
            filename: 檔案名稱（可選）
            prefix: 自動檔名的前綴
            index: 是否寫出索引欄

        Returns:
            CSV 檔案路徑
        """
        file_path = self._target(filename, prefix)

        try:
            table.to_csv(file_path, index=index, encoding=CSV_ENCODING, float_format=CSV_FLOAT_FORMAT)
            logger.info(f"成功寫入 CSV 檔案: {file_path} ({len(table)} 列)")
            return file_path

        except Exception as e:
            logger.error(f"寫入 CSV 檔案失敗: {str(e)}")
            raise

    def write_sweep(self, table: pd.DataFrame, filename: str = None) -> Path:
        """寫入掃描結果，一個網格點一列"""
        axis = table["axis"].iloc[0] if len(table) else "sweep"
        return self.write_dataframe(table, filename, prefix=f"sweep_{axis}")

    def write_metric_report(
        self,
        reports: Mapping[str, MetricReport],
        fkl: Optional[Mapping[str, Tuple[float, float]]] = None,
        filename: str = None,
    ) -> Path:
        """
        寫入指標報告：列為方法，欄為 (τ, 指標)，可附上 FKL 欄位

        Args:
            reports: 方法名稱 -> 指標報告
            fkl: 方法名稱 -> (forward, reverse) 估計值
            filename: 檔案名稱（可選）

        Returns:
            CSV 檔案路徑
        """
        return self.write_dataframe(metric_table(reports, fkl), filename, prefix="metrics", index=True)

    def write_ranking(self, ranking: dict, filename: str = None) -> Path:
        """寫入各任務名次與平均名次"""
        table = ranking["ranks"].copy()
        table["avg_rank"] = ranking["avg_ranks"]
        table.index.name = "method"
        return self.write_dataframe(table, filename, prefix="ranks", index=True)

    def write_validation(self, rows: Iterable, filename: str = None) -> Path:
        """寫入驗證表"""
        table = pd.DataFrame([row.to_dict() for row in rows])
        return self.write_dataframe(table, filename, prefix="validation")

    def write_error_profile(self, profiles: Mapping[str, Dict[float, float]], filename: str = None) -> Path:
        """寫入速度場誤差隨時間的剖面，每個測度一欄 cm_error_<name>"""
        table = pd.DataFrame({f"cm_error_{name}": pd.Series(profile) for name, profile in profiles.items()})
        table = table.rename_axis("t").reset_index()
        return self.write_dataframe(table, filename, prefix="field_error")
