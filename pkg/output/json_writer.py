"""
JSON 檔案輸出功能
"""
import json
from datetime import datetime
from pathlib import Path
from typing import Optional, Union

import numpy as np
from loguru import logger

from config.default_settings import DEFAULT_JSON_DIR


def _default(value):
    if isinstance(value, np.generic):
        return value.item()
    if isinstance(value, np.ndarray):
        return value.tolist()
    if isinstance(value, Path):
        return str(value)
    raise TypeError(f"無法序列化的型別: {type(value).__name__}")


def dumps(data) -> str:
    """numpy 相容的 JSON 字串"""
    return json.dumps(data, indent=2, ensure_ascii=False, default=_default)


class JSONWriter:
    """JSON 檔案輸出器"""

    def __init__(self, output_dir: Union[str, Path] = DEFAULT_JSON_DIR):
        self.output_dir = Path(output_dir)
        self.output_dir.mkdir(parents=True, exist_ok=True)
        logger.info(f"JSON 輸出器初始化，輸出目錄: {self.output_dir}")

    def write(self, data: dict, filename: Optional[str] = None, prefix: str = "result") -> Path:
        """
        寫入 JSON 檔案

        Args:
            data: 可序列化的字典
            filename: 檔案名稱（可選）
            prefix: 自動檔名的前綴

        Returns:
            JSON 檔案路徑
        """
        if filename is None:
            timestamp = datetime.now().strftime("%Y%m%d_%H%M%S")
            filename = f"{prefix}_{timestamp}.json"
        if not filename.endswith(".json"):
            filename += ".json"

        file_path = self.output_dir / filename
        try:
            file_path.write_text(dumps(data) + "\n", encoding="utf-8")
            logger.info(f"成功寫入 JSON 檔案: {file_path}")
            return file_path
        except Exception as e:
            logger.error(f"寫入 JSON 檔案失敗: {str(e)}")
            raise

    def write_estimates(self, forward, reverse, filename: Optional[str] = None, extra: Optional[dict] = None) -> Path:
        """寫入正反向 FKL 估計"""
        data = {"forward": forward.to_dict(), "reverse": reverse.to_dict()}
        if extra:
            data.update(extra)
        return self.write(data, filename, prefix="fkl")
