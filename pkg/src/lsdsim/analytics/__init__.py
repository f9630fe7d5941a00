"""Offline analytics over tick series and event traces."""

from .detector import ArbFinding, ArbKind, detect_arbitrages, findings_csv
from .lp import (
    ComparisonReport,
    ComparisonRow,
    LpPosition,
    PriceHistory,
    compare_lp_vs_hold,
    hold_pnl_apr,
    lp_pnl_apr,
    positions_from_trace,
)
from .metrics import DayMetrics, Tick, TickSeries, daily_metrics, price_discrepancy, realized_volatility
from .trace import Event, EventKind, EventTrace

__all__ = [
    "ArbFinding",
    "ArbKind",
    "ComparisonReport",
    "ComparisonRow",
    "DayMetrics",
    "Event",
    "EventKind",
    "EventTrace",
    "LpPosition",
    "PriceHistory",
    "Tick",
    "TickSeries",
    "compare_lp_vs_hold",
    "daily_metrics",
    "detect_arbitrages",
    "findings_csv",
    "hold_pnl_apr",
    "lp_pnl_apr",
    "positions_from_trace",
    "price_discrepancy",
    "realized_volatility",
]
