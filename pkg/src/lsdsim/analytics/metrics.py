"""Daily realized volatility and primary/secondary price discrepancy."""

from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass
from fractions import Fraction
from pathlib import Path

from ..errors import InsufficientTicks, SchemaError

TICKS_HEADER = ["timestamp", "p1st_wad", "p2nd_wad"]
SECONDS_PER_DAY = 86_400
TICK_SPACING = 600
TICKS_PER_DAY = SECONDS_PER_DAY // TICK_SPACING


@dataclass(frozen=True)
class Tick:
    timestamp: int
    p1st: int
    p2nd: int


class TickSeries:
    """Ticks bucketed by UTC day (``timestamp // 86400``)."""

    def __init__(self, ticks: list[Tick] | None = None):
        self.ticks: list[Tick] = []
        for t in ticks or []:
            self.append(t)

    def append(self, tick: Tick) -> None:
        if self.ticks and tick.timestamp <= self.ticks[-1].timestamp:
            raise SchemaError(f"tick timestamps must increase (at {tick.timestamp})")
        if tick.p1st <= 0 or tick.p2nd <= 0:
            raise SchemaError(f"non-positive price at {tick.timestamp}")
        self.ticks.append(tick)

    def days(self) -> list[int]:
        return sorted({t.timestamp // SECONDS_PER_DAY for t in self.ticks})

    def day(self, day: int) -> list[Tick]:
        return [t for t in self.ticks if t.timestamp // SECONDS_PER_DAY == day]

    def by_day(self) -> dict[int, list[Tick]]:
        out: dict[int, list[Tick]] = {}
        for t in self.ticks:
            out.setdefault(t.timestamp // SECONDS_PER_DAY, []).append(t)
        return out

    def to_csv(self) -> str:
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(TICKS_HEADER)
        for t in self.ticks:
            writer.writerow([t.timestamp, t.p1st, t.p2nd])
        return buf.getvalue()

    def write(self, path: str | Path) -> None:
        Path(path).write_text(self.to_csv())

    @classmethod
    def from_csv(cls, text: str) -> TickSeries:
        reader = csv.reader(io.StringIO(text))
        header = next(reader, None)
        if header is None:
            raise SchemaError("tick file is empty")
        if header != TICKS_HEADER:
            bad = next((h for h, want in zip(header, TICKS_HEADER) if h != want), header[-1:])
            raise SchemaError(f"bad column {bad!r}; expected header {','.join(TICKS_HEADER)}")
        series = cls()
        for lineno, row in enumerate(reader, start=2):
            if not row:
                continue
            try:
                ts, p1, p2 = (int(v) for v in row)
            except ValueError:
                raise SchemaError(f"row {lineno}: expected three integers, got {row}") from None
            series.append(Tick(ts, p1, p2))
        if not series.ticks:
            raise SchemaError("tick file has no rows")
        return series

    @classmethod
    def read(cls, path: str | Path) -> TickSeries:
        return cls.from_csv(Path(path).read_text())


def _ticks(series: TickSeries | list[Tick], day: int | None) -> list[Tick]:
    if isinstance(series, TickSeries):
        return series.day(day) if day is not None else series.ticks
    return list(series)


def realized_volatility(series: TickSeries | list[Tick], day: int | None = None) -> float:
    """Square root of the summed squared log returns of consecutive ticks."""
    ticks = _ticks(series, day)
    if len(ticks) < 2:
        raise InsufficientTicks(f"day {day} has {len(ticks)} ticks; need at least 2")
    total = math.fsum(math.log(b.p2nd / a.p2nd) ** 2 for a, b in zip(ticks, ticks[1:]))
    return math.sqrt(total)


def price_discrepancy(series: TickSeries | list[Tick], day: int | None = None) -> float:
    """Mean relative gap of the secondary price over the primary price."""
    ticks = _ticks(series, day)
    if not ticks:
        raise InsufficientTicks(f"day {day} has no ticks")
    total = sum(Fraction(t.p2nd - t.p1st, t.p1st) for t in ticks)
    return float(total / len(ticks))


@dataclass(frozen=True)
class DayMetrics:
    day: int
    ticks: int
    partial: bool
    rv: float | None
    pd: float


def daily_metrics(series: TickSeries) -> list[DayMetrics]:
    rows = []
    for day, ticks in sorted(series.by_day().items()):
        rv = realized_volatility(ticks) if len(ticks) >= 2 else None
        rows.append(DayMetrics(day, len(ticks), len(ticks) < TICKS_PER_DAY, rv, price_discrepancy(ticks)))
    return rows


def metrics_csv(rows: list[DayMetrics]) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(["day", "ticks", "partial", "rv", "pd"])
    for r in rows:
        writer.writerow(
            [r.day, r.ticks, int(r.partial), "" if r.rv is None else f"{r.rv:.12g}", f"{r.pd:.12g}"]
        )
    return buf.getvalue()
