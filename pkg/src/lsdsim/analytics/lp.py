"""Liquidity-provider and buy-and-hold PNL/APR.

APR uses simple linear annualization, ``r * 31_536_000 / (t1 - t0)``, with
no compounding. Both strategies value the LSD leg at the position's recorded
market prices ``p_x(t0)`` and ``p_x(t1)``; only the quantity held at ``t1``
differs between them.
"""

from __future__ import annotations

import bisect
import csv
import io
from collections import defaultdict, deque
from dataclasses import dataclass, field
from fractions import Fraction
from pathlib import Path

from ..errors import LsdSimError, MissingHistory, SchemaError, ZeroInitialValue
from ..fixedmath import WAD, mul_div
from ..lsd import REBASING, REWARD_BEARING
from .trace import EventKind, EventTrace, split_venue

YEAR_SECONDS = 31_536_000
APR_NOTE = "apr = pnl / v0 * 31536000 / (t1 - t0) (simple linear annualization)"
HISTORY_HEADER = ["venue", "mechanism", "timestamp", "rate_wad", "spot_wad"]


@dataclass
class LpPosition:
    owner: str
    venue: str
    t0: int
    t1: int
    q_x0: int
    q_y0: int
    q_x1: int
    q_y1: int
    p_x0: int
    p_x1: int
    tx_fees: int = 0
    position_id: str = ""

    def __post_init__(self) -> None:
        if self.t1 <= self.t0:
            raise ValueError("a closed position needs t1 > t0")
        if min(self.q_x0, self.q_y0, self.q_x1, self.q_y1, self.p_x0, self.p_x1, self.tx_fees) < 0:
            raise ValueError("position quantities must be non-negative")


@dataclass
class PriceHistory:
    """Step function of protocol rate and market spot price over time.

    ``rate`` is the share price for rebasing tokens and the exchange rate for
    reward-bearing ones.
    """

    mechanism: str
    timestamps: list[int] = field(default_factory=list)
    rates: list[int] = field(default_factory=list)
    spots: list[int] = field(default_factory=list)

    def record(self, timestamp: int, rate: int, spot: int) -> None:
        if self.timestamps and timestamp < self.timestamps[-1]:
            raise ValueError("history must be recorded in time order")
        if self.timestamps and timestamp == self.timestamps[-1]:
            self.rates[-1], self.spots[-1] = rate, spot
            return
        self.timestamps.append(timestamp)
        self.rates.append(rate)
        self.spots.append(spot)

    def _index(self, t: int) -> int:
        i = bisect.bisect_right(self.timestamps, t) - 1
        if i < 0:
            raise MissingHistory(f"no history at or before t={t}")
        return i

    def rate_at(self, t: int) -> int:
        return self.rates[self._index(t)]

    def spot_at(self, t: int) -> int:
        return self.spots[self._index(t)]


def _value(q_eth: int, q_lsd: int, price: int) -> int:
    return q_eth + mul_div(q_lsd, price, WAD)


def annualize(pnl: int, v0: int, t0: int, t1: int) -> float:
    if v0 == 0:
        raise ZeroInitialValue("initial portfolio value is zero")
    return float(Fraction(pnl, v0) * Fraction(YEAR_SECONDS, t1 - t0))


def lp_pnl_apr(pos: LpPosition, include_tx_fees: bool = True) -> tuple[int, float]:
    v0 = _value(pos.q_y0, pos.q_x0, pos.p_x0)
    v1 = _value(pos.q_y1, pos.q_x1, pos.p_x1)
    pnl = v1 - v0 - (pos.tx_fees if include_tx_fees else 0)
    return pnl, annualize(pnl, v0, pos.t0, pos.t1)


def hold_quantity(pos: LpPosition, mechanism: str, history: PriceHistory | None) -> int:
    if mechanism == REWARD_BEARING:
        return pos.q_x0
    if mechanism == REBASING:
        if history is None:
            raise MissingHistory(f"rebasing hold for {pos.position_id or pos.owner} needs share prices")
        return mul_div(pos.q_x0, history.rate_at(pos.t1), history.rate_at(pos.t0))
    raise ValueError(f"unknown mechanism {mechanism!r}")


def hold_pnl_apr(
    pos: LpPosition, mechanism: str, history: PriceHistory | None = None
) -> tuple[int, float]:
    q_hold = hold_quantity(pos, mechanism, history)
    v0 = _value(pos.q_y0, pos.q_x0, pos.p_x0)
    v1 = _value(pos.q_y0, q_hold, pos.p_x1)
    pnl = v1 - v0
    return pnl, annualize(pnl, v0, pos.t0, pos.t1)


@dataclass(frozen=True)
class ComparisonRow:
    position_id: str
    owner: str
    venue: str
    pnl_lp: int | None
    apr_lp: float | None
    pnl_hold: int | None
    apr_hold: float | None
    hold_wins: bool | None
    error: str = ""


@dataclass(frozen=True)
class ComparisonReport:
    rows: list[ComparisonRow]

    @property
    def hold_wins_fraction(self) -> float | None:
        decided = [r for r in self.rows if r.hold_wins is not None]
        if not decided:
            return None
        return sum(r.hold_wins for r in decided) / len(decided)

    def to_csv(self) -> str:
        buf = io.StringIO()
        buf.write(f"# {APR_NOTE}\n")
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(
            ["position_id", "owner", "venue", "pnl_lp_wei", "apr_lp_net", "pnl_hold_wei", "apr_hold", "hold_wins", "error"]
        )
        fmt = lambda v: "" if v is None else f"{v:.12g}"  # noqa: E731
        for r in self.rows:
            writer.writerow(
                [
                    r.position_id,
                    r.owner,
                    r.venue,
                    "" if r.pnl_lp is None else r.pnl_lp,
                    fmt(r.apr_lp),
                    "" if r.pnl_hold is None else r.pnl_hold,
                    fmt(r.apr_hold),
                    "" if r.hold_wins is None else int(r.hold_wins),
                    r.error,
                ]
            )
        frac = self.hold_wins_fraction
        writer.writerow(["aggregate", "", "", "", "", "", "", fmt(frac), ""])
        return buf.getvalue()


def compare_lp_vs_hold(
    positions: list[LpPosition],
    histories: dict[str, PriceHistory],
    tie_threshold: float = 0.0,
) -> ComparisonReport:
    """Net LP APR against hold APR for every position.

    A position's history is looked up by its venue. Failures become
    annotated rows rather than aborting the batch.
    """
    rows = []
    for pos in sorted(positions, key=lambda p: (p.position_id, p.owner, p.venue, p.t0)):
        history = histories.get(pos.venue)
        try:
            if history is None:
                raise MissingHistory(f"no history for venue {pos.venue!r}")
            pnl_lp, apr_lp = lp_pnl_apr(pos, include_tx_fees=True)
            pnl_hold, apr_hold = hold_pnl_apr(pos, history.mechanism, history)
        except LsdSimError as exc:
            rows.append(
                ComparisonRow(pos.position_id, pos.owner, pos.venue, None, None, None, None, None, str(exc))
            )
            continue
        rows.append(
            ComparisonRow(
                pos.position_id,
                pos.owner,
                pos.venue,
                pnl_lp,
                apr_lp,
                pnl_hold,
                apr_hold,
                apr_hold > apr_lp + tie_threshold,
            )
        )
    return ComparisonReport(rows)


def histories_from_csv(text: str) -> dict[str, PriceHistory]:
    lines = [ln for ln in text.splitlines() if ln and not ln.startswith("#")]
    reader = csv.reader(lines)
    header = next(reader, None)
    if header != HISTORY_HEADER:
        raise SchemaError(f"history header must be {','.join(HISTORY_HEADER)}, got {header}")
    out: dict[str, PriceHistory] = {}
    for lineno, row in enumerate(reader, start=2):
        if len(row) != len(HISTORY_HEADER):
            raise SchemaError(f"history row {lineno}: expected {len(HISTORY_HEADER)} columns")
        venue, mechanism = row[0], row[1]
        if mechanism not in (REBASING, REWARD_BEARING):
            raise SchemaError(f"history row {lineno}: unknown mechanism {mechanism!r}")
        try:
            ts, rate, spot = int(row[2]), int(row[3]), int(row[4])
        except ValueError:
            raise SchemaError(f"history row {lineno}: non-integer field") from None
        hist = out.setdefault(venue, PriceHistory(mechanism))
        if hist.mechanism != mechanism:
            raise SchemaError(f"history row {lineno}: mechanism changed for {venue}")
        try:
            hist.record(ts, rate, spot)
        except ValueError as exc:
            raise SchemaError(f"history row {lineno}: {exc}") from None
    return out


def histories_to_csv(histories: dict[str, PriceHistory]) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(HISTORY_HEADER)
    for venue in sorted(histories):
        h = histories[venue]
        for row in zip(h.timestamps, h.rates, h.spots):
            writer.writerow([venue, h.mechanism, *row])
    return buf.getvalue()


def read_histories(path: str | Path) -> dict[str, PriceHistory]:
    return histories_from_csv(Path(path).read_text())


def positions_from_trace(trace: EventTrace, histories: dict[str, PriceHistory]) -> list[LpPosition]:
    """Rebuild closed positions from liquidity events.

    Each add opens a position for (sender, pool); the sender's next remove on
    that pool closes the oldest open one. Gas events in those transactions
    count as the position's transaction fees. Spot prices come from the
    venue's history.
    """
    open_positions: dict[tuple[str, str], deque] = defaultdict(deque)
    closed: list[LpPosition] = []
    counter: dict[tuple[str, str], int] = defaultdict(int)
    for group in trace.transactions():
        kinds = {ev.kind for ev in group}
        gas = sum(ev.amount_in for ev in group if ev.kind is EventKind.GAS)
        for kind in (EventKind.ADD_LIQUIDITY, EventKind.REMOVE_LIQUIDITY):
            if kind not in kinds:
                continue
            per_pool: dict[str, dict[str, int]] = defaultdict(lambda: {"LSD": 0, "ETH": 0})
            for ev in group:
                if ev.kind is kind:
                    pool, token = split_venue(ev.venue)
                    amount = ev.amount_in if kind is EventKind.ADD_LIQUIDITY else ev.amount_out
                    per_pool[pool][token] += amount
            for pool, amounts in per_pool.items():
                key = (group[0].sender, pool)
                if kind is EventKind.ADD_LIQUIDITY:
                    open_positions[key].append((group[0].timestamp, amounts, gas))
                elif open_positions[key]:
                    t0, deposit, gas0 = open_positions[key].popleft()
                    hist = histories.get(pool)
                    if hist is None:
                        raise MissingHistory(f"no history for venue {pool!r}")
                    counter[key] += 1
                    closed.append(
                        LpPosition(
                            owner=key[0],
                            venue=pool,
                            t0=t0,
                            t1=group[0].timestamp,
                            q_x0=deposit["LSD"],
                            q_y0=deposit["ETH"],
                            q_x1=amounts["LSD"],
                            q_y1=amounts["ETH"],
                            p_x0=hist.spot_at(t0),
                            p_x1=hist.spot_at(group[0].timestamp),
                            tx_fees=gas0 + gas,
                            position_id=f"{pool}/{key[0]}/{counter[key]}",
                        )
                    )
    return closed
