"""
loguru 日誌輸出設定
"""
import sys
from datetime import datetime
from pathlib import Path
from typing import Optional, Union

from loguru import logger

from config.default_settings import DEFAULT_LOGS_DIR, LOG_FORMAT, LOG_RETENTION, LOG_ROTATION


def console_level(verbose: bool = False, quiet: bool = False) -> str:
    """--verbose 優先於 --quiet"""
    if verbose:
        return "DEBUG"
    if quiet:
        return "WARNING"
    return "INFO"


def configure_logging(
    verbose: bool = False,
    quiet: bool = False,
    log_dir: Optional[Union[str, Path]] = None,
) -> Optional[Path]:
    """
    重設 loguru 的輸出

    Args:
        verbose: 終端輸出 DEBUG
        quiet: 終端只輸出 WARNING 以上
        log_dir: 指定時另外寫入輪替的日誌檔 (DEBUG)

    Returns:
        日誌檔路徑，未啟用時為 None
    """
    logger.remove()
    logger.add(sys.stderr, format=LOG_FORMAT, level=console_level(verbose, quiet))

    if log_dir is None:
        return None

    try:
        log_dir = Path(log_dir or DEFAULT_LOGS_DIR)
        log_dir.mkdir(parents=True, exist_ok=True)
        log_file = log_dir / f"fklbench_{datetime.now().strftime('%Y%m%d_%H%M%S')}.log"
        logger.add(
            log_file,
            format="{time:YYYY-MM-DD HH:mm:ss} | {level: <8} | {name}:{function}:{line} - {message}",
            level="DEBUG",
            rotation=LOG_ROTATION,
            retention=LOG_RETENTION,
            encoding="utf-8",
        )
        return log_file
    except Exception as e:
        logger.warning(f"設置檔案日誌失敗: {e}")
        return None
