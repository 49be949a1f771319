"""
終端表格輸出 (rich) 與純文字驗證表 (tabulate)
"""
from typing import Optional, Sequence

import pandas as pd
from rich import box
from rich.console import Console
from rich.panel import Panel
from rich.table import Table
from rich.text import Text
from tabulate import tabulate

from models.estimate import FklEstimate


def _fmt(value: Optional[float], digits: int = 2) -> str:
    return "-" if value is None else f"{value:.{digits}f}"


def validation_text(rows: Sequence, tablefmt: str = "github") -> str:
    """
    Analytic / Estimated 對照表的純文字版本

    Args:
        rows: ValidationRow 列表
        tablefmt: tabulate 的表格格式

    Returns:
        表格字串
    """
    body = [
        [
            row.block,
            row.case,
            _fmt(row.analytic),
            _fmt(row.estimated),
            _fmt(row.std_error, 3),
            row.tolerance,
            "PASS" if row.passed else "FAIL",
        ]
        for row in rows
    ]
    headers = ["Block", "Case", "Analytic", "Estimated", "Std. err.", "Tolerance", "Status"]
    return tabulate(body, headers=headers, tablefmt=tablefmt, disable_numparse=True)


class TableChart:
    """終端表格輸出器"""

    def __init__(self, console: Optional[Console] = None):
        self.console = console or Console(width=120)

    def display_estimates(
        self,
        forward: FklEstimate,
        reverse: FklEstimate,
        title: str = "Functional KL",
        analytic: Optional[dict] = None,
    ) -> None:
        """
        顯示正反向 FKL 估計

        Args:
            forward: KL(A‖B) 估計
            reverse: KL(B‖A) 估計
            title: 面板標題
            analytic: 可選的解析值 {"kl_forward", "kl_reverse"}
        """
        self.console.print(Panel(title, style="bold blue"))

        table = Table(box=box.ROUNDED, show_header=True, header_style="bold magenta")
        table.add_column("Direction", style="cyan", width=10)
        table.add_column("Estimate", justify="right", style="green", width=12)
        table.add_column("Std. err.", justify="right", style="yellow", width=12)
        table.add_column("Evals", justify="right", style="blue", width=10)
        if analytic:
            table.add_column("Analytic", justify="right", style="red", width=12)

        for estimate, key in ((forward, "kl_forward"), (reverse, "kl_reverse")):
            cells = [estimate.direction or key, f"{estimate.value:.4f}", f"{estimate.std_error:.4f}", str(estimate.n_evals)]
            if analytic:
                cells.append(f"{analytic[key]:.4f}")
            table.add_row(*cells)

        self.console.print(table)

    def display_validation(self, rows: Sequence) -> None:
        """顯示驗證表與通過統計"""
        self.console.print(Panel(f"Validation campaign ({len(rows)} rows)", style="bold blue"))

        table = Table(box=box.ROUNDED, show_header=True, header_style="bold magenta")
        table.add_column("Block", style="cyan", width=15)
        table.add_column("Case", style="white", width=34)
        table.add_column("Analytic", justify="right", style="green", width=10)
        table.add_column("Estimated", justify="right", style="yellow", width=10)
        table.add_column("Tolerance", style="blue", width=22)
        table.add_column("Status", justify="center", width=8)

        for row in rows:
            status = Text("PASS", style="green") if row.passed else Text("FAIL", style="red")
            table.add_row(row.block, row.case, _fmt(row.analytic), _fmt(row.estimated), row.tolerance, status)

        self.console.print(table)

        passed = sum(row.passed for row in rows)
        stats_table = Table(title="Summary", box=box.SIMPLE, show_header=False, width=40)
        stats_table.add_column("Metric", style="bold cyan", width=20)
        stats_table.add_column("Value", style="white", width=15)
        stats_table.add_row("Rows", str(len(rows)))
        stats_table.add_row("Passed", str(passed))
        stats_table.add_row("Failed", Text(str(len(rows) - passed), style="red" if passed < len(rows) else "green"))
        self.console.print(stats_table)

    def display_dataframe(self, frame: pd.DataFrame, title: str, index: bool = False, digits: int = 4) -> None:
        """以 rich 表格顯示 DataFrame (掃描、指標、排名)"""
        table = Table(title=title, box=box.ROUNDED, show_header=True, header_style="bold magenta")
        if index:
            table.add_column(str(frame.index.name or ""), style="cyan")
        for column in frame.columns:
            table.add_column(str(column), justify="right")

        for label, record in zip(frame.index, frame.itertuples(index=False)):
            cells = [str(label)] if index else []
            for value in record:
                cells.append(f"{value:.{digits}g}" if isinstance(value, float) else str(value))
            table.add_row(*cells)

        self.console.print(table)

    def display_ranking(self, ranking: dict) -> None:
        """顯示平均名次與 Friedman 統計量"""
        frame = ranking["ranks"].copy()
        frame["avg_rank"] = ranking["avg_ranks"]
        frame.index.name = "method"
        self.display_dataframe(frame.sort_values("avg_rank"), "Average ranks", index=True, digits=3)
        self.console.print(
            f"Friedman χ² = {ranking['friedman_statistic']:.4f}, p = {ranking['p_value']:.4g}"
        )
