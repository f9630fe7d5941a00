"""Worked examples the ``selfcheck`` subcommand verifies end to end."""

from __future__ import annotations

import math
from typing import Callable, Iterator

from .amm import StableswapPool, invariant_d
from .analytics.lp import LpPosition, lp_pnl_apr
from .analytics.metrics import Tick, price_discrepancy, realized_volatility
from .arbitrage import idealized_unstake_revenue
from .fixedmath import WAD
from .lsd import RebasingLsd, RewardBearingLsd

E18 = WAD


def _rebase() -> tuple[bool, str]:
    lsd = RebasingLsd(total_eth=100 * E18, total_shares=100 * E18, shares_of={"a": 100 * E18}, protocol_fee=E18 // 10)
    price = lsd.rebase(E18)
    treasury = lsd.balance_of(lsd.treasury)
    ok = abs(price - 1_009 * 10**15) <= 1 and abs(treasury - E18 // 10) <= 1
    return ok, f"p_share={price} treasury={treasury}"


def _exchange_rate() -> tuple[bool, str]:
    rate = RewardBearingLsd(1000 * E18, 50 * E18, 1000 * E18).exchange_rate()
    return rate == 105 * E18 // 100, f"rate={rate}"


def _balanced_d() -> tuple[bool, str]:
    d = invariant_d([1000 * E18, 1000 * E18], 100)
    return d == 2000 * E18, f"D={d}"


def _swap_bound() -> tuple[bool, str]:
    pool = StableswapPool([10**6 * E18, 10**6 * E18], amp=100, fee_bps=0)
    out = pool.quote(0, E18)
    return 0 < out < E18, f"out={out}"


def _unstake_revenue() -> tuple[bool, str]:
    rev = idealized_unstake_revenue(100 * E18, 98 * E18 // 100)
    return abs(rev - 2_040_816_326_530_612_244) <= 1, f"revenue={rev}"


def _metrics() -> tuple[bool, str]:
    p = 10**18
    ticks = [Tick(0, p, p), Tick(600, p, int(p * math.e)), Tick(1200, p, int(p * math.e))]
    rv = realized_volatility(ticks)
    pd = price_discrepancy([Tick(0, 100 * p, 101 * p), Tick(600, 200 * p, 202 * p)])
    return abs(rv - 1.0) < 1e-12 and abs(pd - 0.01) < 1e-12, f"rv={rv:.15g} pd={pd:.15g}"


def _lp_apr() -> tuple[bool, str]:
    pos = LpPosition("lp", "pool", 0, 73 * 86_400, 10 * E18, 10 * E18, 9 * E18, 112 * E18 // 10, E18, 101 * E18 // 100)
    pnl, apr = lp_pnl_apr(pos, include_tx_fees=False)
    return pnl == 29 * E18 // 100 and abs(apr - 0.0725) < 1e-12, f"pnl={pnl} apr={apr:.12g}"


CHECKS: list[tuple[str, Callable[[], tuple[bool, str]]]] = [
    ("rebase share price and treasury cut", _rebase),
    ("reward-bearing exchange rate", _exchange_rate),
    ("balanced stableswap invariant", _balanced_d),
    ("stableswap output below input at peg", _swap_bound),
    ("idealized swap-then-unstake revenue", _unstake_revenue),
    ("realized volatility and price discrepancy", _metrics),
    ("LP PNL and APR", _lp_apr),
]


def run_checks() -> Iterator[tuple[str, bool, str]]:
    for name, fn in CHECKS:
        try:
            ok, detail = fn()
        except Exception as exc:  # a crash is a failed check, not a crashed command
            ok, detail = False, f"raised {type(exc).__name__}: {exc}"
        yield name, ok, detail
