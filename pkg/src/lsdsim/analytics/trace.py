"""Ordered event ledger and its CSV encoding.

Venue strings carry the token detail after a colon: swaps are
``"<pool>:LSD>ETH"`` or ``"<pool>:ETH>LSD"`` and liquidity events
``"<pool>:LSD"`` / ``"<pool>:ETH"``. Protocol events use the bare protocol
name.
"""

from __future__ import annotations

import csv
import hashlib
import io
from contextlib import contextmanager
from dataclasses import dataclass, field
from enum import Enum
from pathlib import Path
from typing import Iterator

from ..errors import SchemaError

TRACE_HEADER = [
    "block",
    "tx_index",
    "tx_hash",
    "sender",
    "kind",
    "venue",
    "amount_in_wei",
    "amount_out_wei",
    "timestamp",
]


class EventKind(str, Enum):
    STAKE = "Stake"
    UNSTAKE = "Unstake"
    SWAP = "Swap"
    ADD_LIQUIDITY = "AddLiquidity"
    REMOVE_LIQUIDITY = "RemoveLiquidity"
    FLASH_LOAN = "FlashLoan"
    ASSIGN = "Assign"
    REBASE = "Rebase"
    ACCRUE = "Accrue"
    SLASH = "Slash"
    GAS = "Gas"


SELL_LSD = "LSD>ETH"
BUY_LSD = "ETH>LSD"


def swap_venue(pool: str, token_in: int) -> str:
    return f"{pool}:{SELL_LSD if token_in == 0 else BUY_LSD}"


def split_venue(venue: str) -> tuple[str, str]:
    name, _, detail = venue.partition(":")
    return name, detail


def tx_hash(block: int, tx_index: int) -> str:
    return "0x" + hashlib.sha256(f"{block}:{tx_index}".encode()).hexdigest()


@dataclass(frozen=True)
class Event:
    block: int
    tx_index: int
    tx_hash: str
    sender: str
    kind: EventKind
    venue: str
    amount_in: int
    amount_out: int
    timestamp: int

    def row(self) -> list[str]:
        return [
            str(self.block),
            str(self.tx_index),
            self.tx_hash,
            self.sender,
            self.kind.value,
            self.venue,
            str(self.amount_in),
            str(self.amount_out),
            str(self.timestamp),
        ]


@dataclass
class Transaction:
    """Events buffered for one transaction; committed only if it succeeds."""

    block: int
    tx_index: int
    sender: str
    timestamp: int
    events: list[Event] = field(default_factory=list)

    @property
    def hash(self) -> str:
        return tx_hash(self.block, self.tx_index)

    def emit(self, kind: EventKind, venue: str, amount_in: int = 0, amount_out: int = 0) -> None:
        self.events.append(
            Event(
                self.block,
                self.tx_index,
                self.hash,
                self.sender,
                EventKind(kind),
                venue,
                amount_in,
                amount_out,
                self.timestamp,
            )
        )


@dataclass
class EventTrace:
    events: list[Event] = field(default_factory=list)
    block: int = 0
    timestamp: int = 0
    _next_index: int = 0

    def advance(self, block: int, timestamp: int) -> None:
        if (block, timestamp) < (self.block, self.timestamp):
            raise ValueError("the trace clock cannot move backwards")
        if block != self.block:
            self._next_index = 0
        self.block, self.timestamp = block, timestamp

    @contextmanager
    def tx(self, sender: str) -> Iterator[Transaction]:
        """Open a transaction; its events are appended only on clean exit."""
        txn = Transaction(self.block, self._next_index, sender, self.timestamp)
        yield txn
        if txn.events:
            self.events.extend(txn.events)
            self._next_index += 1

    def checkpoint(self) -> tuple[int, int, int, int]:
        return (len(self.events), self.block, self.timestamp, self._next_index)

    def rollback(self, cp: tuple[int, int, int, int]) -> None:
        n, self.block, self.timestamp, self._next_index = cp
        del self.events[n:]

    def __iter__(self) -> Iterator[Event]:
        return iter(self.events)

    def __len__(self) -> int:
        return len(self.events)

    def transactions(self) -> list[list[Event]]:
        """Events grouped by transaction, in trace order."""
        groups: list[list[Event]] = []
        for ev in self.events:
            if groups and (groups[-1][0].block, groups[-1][0].tx_index) == (ev.block, ev.tx_index):
                groups[-1].append(ev)
            else:
                groups.append([ev])
        return groups

    def validate(self) -> None:
        last = None
        for group in self.transactions():
            key = (group[0].block, group[0].tx_index)
            if last is not None and key <= last:
                raise SchemaError(f"transaction {key} out of order after {last}")
            last = key

    def to_csv(self) -> str:
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(TRACE_HEADER)
        for ev in self.events:
            writer.writerow(ev.row())
        return buf.getvalue()

    def write(self, path: str | Path) -> None:
        Path(path).write_text(self.to_csv())

    @classmethod
    def from_csv(cls, text: str) -> EventTrace:
        reader = csv.reader(io.StringIO(text))
        header = next(reader, None)
        if header != TRACE_HEADER:
            raise SchemaError(f"trace header must be {','.join(TRACE_HEADER)}, got {header}")
        events = []
        for lineno, row in enumerate(reader, start=2):
            if not row:
                continue
            if len(row) != len(TRACE_HEADER):
                raise SchemaError(f"row {lineno}: expected {len(TRACE_HEADER)} columns")
            try:
                events.append(
                    Event(
                        int(row[0]),
                        int(row[1]),
                        row[2],
                        row[3],
                        EventKind(row[4]),
                        row[5],
                        int(row[6]),
                        int(row[7]),
                        int(row[8]),
                    )
                )
            except ValueError as exc:
                raise SchemaError(f"row {lineno}: {exc}") from None
        trace = cls(events)
        trace.validate()
        return trace

    @classmethod
    def read(cls, path: str | Path) -> EventTrace:
        return cls.from_csv(Path(path).read_text())
