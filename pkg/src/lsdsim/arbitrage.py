"""Primary/secondary-market arbitrage strategies.

Every strategy runs as an atomic transaction: if any step raises, all touched
state (protocol, pool, trader, lender, gas sink, trace) is restored exactly.
Trades that merely lose money are *not* reverted; the negative profit is
reported.

Profit identity, exact in wei::

    profit = eth_out - eth_in - flash_loan_fee - gas_cost
"""

from __future__ import annotations

import copy
import math
from contextlib import contextmanager
from dataclasses import dataclass, replace
from enum import Enum
from typing import Iterator

from .amm import ETH, LSD, Pool
from .analytics.trace import EventKind, EventTrace, swap_venue
from .errors import (
    DepositPoolFull,
    FlashLoanDefault,
    InsufficientBalance,
    InsufficientLenderLiquidity,
    InvalidBounds,
    LsdSimError,
    WithdrawalsDisabled,
)
from .fixedmath import WAD, Rounding, mul_div, wad_mul
from .lsd import Protocol, RebasingLsd, RewardBearingLsd

GAS_VENUE = "gas"


@dataclass
class Account:
    name: str
    eth: int = 0

    def debit(self, amount: int) -> None:
        if amount > self.eth:
            raise InsufficientBalance(f"{self.name} has {self.eth} wei < {amount}")
        self.eth -= amount


@dataclass
class FlashLender:
    name: str = "lender"
    liquidity: int = 0
    fee: int = 0


@dataclass(frozen=True)
class TxCostModel:
    gas_per_arb: int = 0
    gas_price: int = 0
    bribe: int = 0

    def __post_init__(self) -> None:
        if min(self.gas_per_arb, self.gas_price, self.bribe) < 0:
            raise ValueError("cost parameters must be non-negative")

    def cost(self) -> int:
        return self.gas_per_arb * self.gas_price + self.bribe


NO_COST = TxCostModel()


class Direction(str, Enum):
    STAKE_SWAP = "StakeSwap"
    SWAP_UNSTAKE = "SwapUnstake"


@dataclass(frozen=True)
class ArbOutcome:
    direction: Direction
    size_in: int
    gross_out: int
    profit: int
    used_flash_loan: bool = False
    prerequisite_stake: int = 0
    lsd_amount: int = 0
    flash_fee_paid: int = 0
    cost: int = 0
    expected_revenue: int | None = None
    tx_hashes: tuple[str, ...] = ()


@contextmanager
def atomic(*objects) -> Iterator[None]:
    """Restore every object to its entry state if the block raises."""
    saved = []
    for obj in objects:
        if obj is None:
            continue
        if isinstance(obj, EventTrace):
            saved.append((obj, obj.checkpoint()))
        else:
            saved.append((obj, copy.deepcopy(obj.__dict__)))
    try:
        yield
    except BaseException:
        for obj, state in saved:
            if isinstance(obj, EventTrace):
                obj.rollback(state)
            else:
                obj.__dict__.clear()
                obj.__dict__.update(state)
        raise


def sync_pool(lsd: Protocol, pool: Pool) -> None:
    """Make the pool's LSD book balance follow a rebasing token's ledger."""
    if isinstance(lsd, RebasingLsd):
        pool.balances[LSD] = lsd.balance_of(pool.name)


def swap_lsd_for_eth(lsd: Protocol, pool: Pool, trader: Account, amount: int) -> int:
    lsd.transfer(trader.name, pool.name, amount)
    out = pool.swap(LSD, amount)
    trader.eth += out
    sync_pool(lsd, pool)
    return out


def swap_eth_for_lsd(lsd: Protocol, pool: Pool, trader: Account, amount: int) -> int:
    trader.debit(amount)
    out = pool.swap(ETH, amount)
    lsd.transfer(pool.name, trader.name, out)
    sync_pool(lsd, pool)
    return out


def pay_gas(tx, trader: Account, sink: Account | None, cost: int) -> None:
    if cost <= 0:
        return
    trader.debit(cost)
    if sink is not None:
        sink.eth += cost
    tx.emit(EventKind.GAS, GAS_VENUE, cost, 0)


def idealized_unstake_revenue(m: int, p2nd: int, p1st: int = WAD) -> int:
    """Revenue of buying LSD at ``p2nd`` and redeeming at ``p1st`` with a perfect fill."""
    return mul_div(m, p1st, p2nd) - m


def _stake_swap_body(tx, lsd: Protocol, pool: Pool, trader: Account, x0: int) -> tuple[int, int]:
    trader.debit(x0)
    y = lsd.stake(trader.name, x0)
    tx.emit(EventKind.STAKE, lsd.name, x0, y)
    x1 = swap_lsd_for_eth(lsd, pool, trader, y)
    tx.emit(EventKind.SWAP, swap_venue(pool.name, LSD), y, x1)
    return y, x1


def arb_stake_swap(
    lsd: Protocol,
    pool: Pool,
    x0: int,
    cost: TxCostModel,
    trader: Account,
    trace: EventTrace | None = None,
    sink: Account | None = None,
) -> ArbOutcome:
    """Stake ``x0`` ETH, sell the minted LSD on ``pool``, all in one transaction."""
    trace = trace if trace is not None else EventTrace()
    c = cost.cost()
    with atomic(lsd, pool, trader, sink, trace), trace.tx(trader.name) as tx:
        y, x1 = _stake_swap_body(tx, lsd, pool, trader, x0)
        pay_gas(tx, trader, sink, c)
    return ArbOutcome(
        Direction.STAKE_SWAP, x0, x1, x1 - x0 - c, lsd_amount=y, cost=c, tx_hashes=(tx.hash,)
    )


def arb_flash_loan(
    lender: FlashLender,
    lsd: Protocol,
    pool: Pool,
    x0: int,
    flash_fee: int | None,
    cost: TxCostModel,
    trader: Account,
    trace: EventTrace | None = None,
    sink: Account | None = None,
) -> ArbOutcome:
    """Borrow ``x0``, stake and sell, repay ``x0 * (1 + fee)``; revert on default."""
    if x0 > lender.liquidity:
        raise InsufficientLenderLiquidity(f"lender holds {lender.liquidity} < {x0}")
    fee_rate = lender.fee if flash_fee is None else flash_fee
    fee = wad_mul(x0, fee_rate, Rounding.UP)
    repay = x0 + fee
    trace = trace if trace is not None else EventTrace()
    c = cost.cost()
    with atomic(lender, lsd, pool, trader, sink, trace), trace.tx(trader.name) as tx:
        lender.liquidity -= x0
        trader.eth += x0
        tx.emit(EventKind.FLASH_LOAN, lender.name, x0, repay)
        y, x1 = _stake_swap_body(tx, lsd, pool, trader, x0)
        if x1 < repay:
            raise FlashLoanDefault(f"swap returned {x1} < repayment {repay}")
        trader.debit(repay)
        lender.liquidity += repay
        pay_gas(tx, trader, sink, c)
    return ArbOutcome(
        Direction.STAKE_SWAP,
        x0,
        x1,
        x1 - repay - c,
        used_flash_loan=True,
        lsd_amount=y,
        flash_fee_paid=fee,
        cost=c,
        tx_hashes=(tx.hash,),
    )


def arb_swap_unstake(
    lsd: Protocol,
    pool: Pool,
    m: int,
    cost: TxCostModel,
    shapella_enabled: bool,
    trader: Account,
    trace: EventTrace | None = None,
    sink: Account | None = None,
) -> ArbOutcome:
    """Buy LSD with ``m`` ETH on ``pool``, then redeem it in a second transaction.

    ``expected_revenue`` is the perfect-fill revenue at the pre-trade spot
    price; ``profit`` uses the realized pool output.
    """
    if not shapella_enabled:
        raise WithdrawalsDisabled("unstaking is unavailable before Shapella")
    trace = trace if trace is not None else EventTrace()
    expected = idealized_unstake_revenue(m, pool.spot_price(), lsd.primary_rate())
    c = cost.cost()
    with atomic(lsd, pool, trader, sink, trace):
        with trace.tx(trader.name) as swap_tx:
            y = swap_eth_for_lsd(lsd, pool, trader, m)
            swap_tx.emit(EventKind.SWAP, swap_venue(pool.name, ETH), m, y)
            pay_gas(swap_tx, trader, sink, c)
        with trace.tx(trader.name) as unstake_tx:
            eth_out = lsd.unstake(trader.name, y, shapella_enabled)
            trader.eth += eth_out
            unstake_tx.emit(EventKind.UNSTAKE, lsd.name, y, eth_out)
    return ArbOutcome(
        Direction.SWAP_UNSTAKE,
        m,
        eth_out,
        eth_out - m - c,
        lsd_amount=y,
        cost=c,
        expected_revenue=expected,
        tx_hashes=(swap_tx.hash, unstake_tx.hash),
    )


def arb_with_prerequisite(
    lsd: RewardBearingLsd,
    pool: Pool,
    stake_amount: int,
    x0: int,
    cost: TxCostModel,
    lender: FlashLender,
    trader: Account,
    flash_fee: int | None = None,
    trace: EventTrace | None = None,
    sink: Account | None = None,
) -> tuple[str | None, ArbOutcome]:
    """Prerequisite stake that frees deposit-pool capacity, then a flash-loan arb.

    Both transactions land consecutively in the current block and revert
    together. The staker keeps the LSD minted for the prerequisite stake.
    """
    trace = trace if trace is not None else EventTrace()
    stake_hash = None
    with atomic(lender, lsd, pool, trader, sink, trace):
        if stake_amount > 0:
            with trace.tx(trader.name) as tx:
                minted = lsd.node_deposit(trader.name, stake_amount)
                trader.debit(stake_amount)
                tx.emit(EventKind.STAKE, lsd.name, stake_amount, minted)
                tx.emit(EventKind.ASSIGN, lsd.name, stake_amount, 0)
            stake_hash = tx.hash
        outcome = arb_flash_loan(lender, lsd, pool, x0, flash_fee, cost, trader, trace, sink)
    return stake_hash, replace(outcome, prerequisite_stake=stake_amount)


# -- sizing --------------------------------------------------------------

_INFEASIBLE = None
_GOLDEN = (math.sqrt(5) - 1) / 2


def _flash_fee(x0: int, flash_fee: int) -> int:
    return wad_mul(x0, flash_fee, Rounding.UP) if flash_fee else 0


def simulated_profit(
    lsd: Protocol,
    pool: Pool,
    direction: Direction,
    x0: int,
    cost: TxCostModel = NO_COST,
    flash_fee: int = 0,
) -> int | None:
    """Profit of trading ``x0`` from read-only quotes; None when infeasible."""
    try:
        if direction is Direction.STAKE_SWAP:
            if isinstance(lsd, RewardBearingLsd) and x0 > lsd.deposit_pool.room():
                return _INFEASIBLE
            y = lsd.preview_stake(x0)
            if y == 0:
                return _INFEASIBLE
            out = pool.quote(LSD, y)
        else:
            y = pool.quote(ETH, x0)
            if isinstance(lsd, RewardBearingLsd):
                out = wad_mul(y, lsd.exchange_rate())
                if out > lsd.liquidity():
                    return _INFEASIBLE
            else:
                out = y
    except LsdSimError:
        return _INFEASIBLE
    return out - x0 - _flash_fee(x0, flash_fee) - cost.cost()


def optimal_size(
    lsd: Protocol,
    pool: Pool,
    direction: Direction,
    cost: TxCostModel,
    bounds: tuple[int, int],
    flash_fee: int = 0,
) -> tuple[int, int]:
    """Golden-section search for the most profitable trade size.

    Profit against a fixed primary rate is concave in size, so the search is
    exact up to integer rounding. Returns ``(0, 0)`` when no size in the
    bounds makes money.
    """
    lower, upper = bounds
    if lower < 1 or upper < lower:
        raise InvalidBounds(f"invalid bounds {bounds}")
    direction = Direction(direction)
    if isinstance(lsd, RewardBearingLsd) and direction is Direction.STAKE_SWAP:
        upper = min(upper, lsd.deposit_pool.room())
        if upper < lower:
            return 0, 0

    cache: dict[int, float] = {}

    def f(x: int) -> float:
        if x not in cache:
            p = simulated_profit(lsd, pool, direction, x, cost, flash_fee)
            cache[x] = -math.inf if p is None else p
        return cache[x]

    lo, hi = lower, upper
    while hi - lo > 3:
        span = hi - lo
        step = max(1, int(span * _GOLDEN))
        c, d = hi - step, lo + step
        if c >= d:
            c, d = lo + span // 3, hi - span // 3
        if f(c) >= f(d):
            hi = d
        else:
            lo = c
    best = max(range(lo, hi + 1), key=lambda x: (f(x), -x))
    profit = f(best)
    if profit <= 0 or profit == -math.inf:
        return 0, 0
    return best, int(profit)
