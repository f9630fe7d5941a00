"""Heuristic detection of LSD arbitrages in an event trace.

* Staking arbitrage: one transaction holds a Stake followed by a swap of LSD
  into ETH.
* Unstaking arbitrage: an ETH->LSD swap at or after Shapella, matched to the
  same sender's earliest later Unstake whose LSD amount agrees within 0.1%
  and which lands at most 30 days after the swap. Each unstake matches at
  most one swap.

Profit is ETH out minus ETH in from the matched events, less any flash-loan
fee and gas recorded in the same transactions.
"""

from __future__ import annotations

import csv
import io
from dataclasses import dataclass
from enum import Enum
from fractions import Fraction

from .trace import BUY_LSD, SELL_LSD, Event, EventKind, EventTrace, split_venue

MATCH_TOLERANCE = Fraction(1, 1000)
MATCH_WINDOW_SECONDS = 30 * 86_400


class ArbKind(str, Enum):
    STAKING = "StakingArb"
    UNSTAKING = "UnstakingArb"


@dataclass(frozen=True)
class ArbFinding:
    kind: ArbKind
    tx_hashes: tuple[str, ...]
    sender: str
    amount_in: int
    amount_out: int
    profit: int


def _tx_costs(group: list[Event]) -> int:
    cost = 0
    for ev in group:
        if ev.kind is EventKind.GAS:
            cost += ev.amount_in
        elif ev.kind is EventKind.FLASH_LOAN:
            cost += ev.amount_out - ev.amount_in
    return cost


def _is_swap(ev: Event, direction: str) -> bool:
    return ev.kind is EventKind.SWAP and split_venue(ev.venue)[1] == direction


def _staking_arbs(groups: list[list[Event]]) -> list[ArbFinding]:
    findings = []
    for group in groups:
        for i, ev in enumerate(group):
            if ev.kind is not EventKind.STAKE:
                continue
            swap = next((s for s in group[i + 1 :] if _is_swap(s, SELL_LSD)), None)
            if swap is None:
                continue
            findings.append(
                ArbFinding(
                    ArbKind.STAKING,
                    (ev.tx_hash,),
                    ev.sender,
                    ev.amount_in,
                    swap.amount_out,
                    swap.amount_out - ev.amount_in - _tx_costs(group),
                )
            )
            break
    return findings


def _unstaking_arbs(groups: list[list[Event]], shapella_timestamp: int) -> list[ArbFinding]:
    costs = {g[0].tx_hash: _tx_costs(g) for g in groups}
    order = {g[0].tx_hash: n for n, g in enumerate(groups)}
    unstakes_by_sender: dict[str, list[Event]] = {}
    for group in groups:
        for ev in group:
            if ev.kind is EventKind.UNSTAKE:
                unstakes_by_sender.setdefault(ev.sender, []).append(ev)
    used: set[tuple[str, int]] = set()
    findings = []
    for group in groups:
        for swap in group:
            if not _is_swap(swap, BUY_LSD) or swap.timestamp < shapella_timestamp:
                continue
            for k, unstake in enumerate(unstakes_by_sender.get(swap.sender, [])):
                if (swap.sender, k) in used or order[unstake.tx_hash] <= order[swap.tx_hash]:
                    continue
                if unstake.timestamp - swap.timestamp > MATCH_WINDOW_SECONDS:
                    break
                received = swap.amount_out
                if received == 0 or abs(Fraction(unstake.amount_in - received, received)) > MATCH_TOLERANCE:
                    continue
                used.add((swap.sender, k))
                findings.append(
                    ArbFinding(
                        ArbKind.UNSTAKING,
                        (swap.tx_hash, unstake.tx_hash),
                        swap.sender,
                        swap.amount_in,
                        unstake.amount_out,
                        unstake.amount_out
                        - swap.amount_in
                        - costs[swap.tx_hash]
                        - costs[unstake.tx_hash],
                    )
                )
                break
    return findings


def detect_arbitrages(trace: EventTrace, shapella_timestamp: int) -> list[ArbFinding]:
    groups = trace.transactions()
    return _staking_arbs(groups) + _unstaking_arbs(groups, shapella_timestamp)


def findings_csv(findings: list[ArbFinding]) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(["kind", "tx_hashes", "sender", "amount_in_wei", "amount_out_wei", "profit_wei"])
    for f in findings:
        writer.writerow([f.kind.value, ";".join(f.tx_hashes), f.sender, f.amount_in, f.amount_out, f.profit])
    return buf.getvalue()
