"""Two-token stableswap pool (Curve style) with fee on input."""

from __future__ import annotations

from dataclasses import dataclass, field

from ..errors import InsufficientLiquidity, NoConvergence, ZeroAmount
from ..fixedmath import WAD, bps_fee, check, mul_div
from .base import ETH, LSD, debit_lp, other, require_positive

N_COINS = 2
MAX_ITERATIONS = 255
PROBE_SIZE = 10**6


def invariant_d(balances: list[int] | tuple[int, int], amp: int) -> int:
    """Solve the stableswap invariant for D.

    Newton iteration gets within a few wei; the result is then snapped to the
    floor of the exact root. Truncation can make plain Newton cycle between
    neighbouring values in very lopsided pools, so it is not trusted alone.
    """
    if any(b <= 0 for b in balances):
        raise ZeroAmount("stableswap balances must be positive")
    s = sum(balances)
    ann = amp * N_COINS**N_COINS
    d = s
    for _ in range(MAX_ITERATIONS):
        d_p = d
        for x in balances:
            d_p = d_p * d // (x * N_COINS)
        d_prev = d
        d = (ann * s + d_p * N_COINS) * d // ((ann - 1) * d + (N_COINS + 1) * d_p)
        if abs(d - d_prev) <= 1:
            break
    x, y = balances
    for _ in range(MAX_ITERATIONS):
        if _d_residual(x, y, d, ann) < 0:
            d -= 1
        elif _d_residual(x, y, d + 1, ann) >= 0:
            d += 1
        else:
            return check(d)
    raise NoConvergence(f"D did not converge for balances={list(balances)} amp={amp}")


def _d_residual(x: int, y: int, d: int, ann: int) -> int:
    """Invariant residual in D scaled by 4xy; decreasing in D, zero at the root."""
    return 4 * x * y * (ann * (x + y) - (ann - 1) * d) - d**3


def solve_y(x: int, d: int, amp: int) -> int:
    """Balance of the other token that keeps the invariant at ``d`` given ``x``."""
    if x <= 0:
        raise ZeroAmount("balance must be positive")
    ann = amp * N_COINS**N_COINS
    c = d * d // (x * N_COINS)
    c = c * d // (ann * N_COINS)
    b = x + d // ann
    y = d
    for _ in range(MAX_ITERATIONS):
        y_prev = y
        y = (y * y + c) // (2 * y + b - d)
        if abs(y - y_prev) <= 1:
            break
    else:
        raise NoConvergence(f"y did not converge for x={x} d={d} amp={amp}")
    # Newton's truncations can leave y a few wei below the real root; snap to
    # the smallest integer on or above it so the pool never overpays.
    while _residual(x, y, d, ann) < 0:
        y += 1
    while y > 1 and _residual(x, y - 1, d, ann) >= 0:
        y -= 1
    return y


def _residual(x: int, y: int, d: int, ann: int) -> int:
    """Invariant residual scaled by 4xy; increasing in y, zero at the root."""
    return 4 * x * y * (ann * (x + y) + d - ann * d) - d**3


@dataclass
class StableswapPool:
    balances: list[int] = field(default_factory=lambda: [0, 0])
    amp: int = 100
    fee_bps: int = 4
    lp_total_supply: int = 0
    lp_balances: dict[str, int] = field(default_factory=dict)
    name: str = "curve"

    kind = "stableswap"

    def __post_init__(self) -> None:
        if self.amp < 1:
            raise ValueError("amp must be >= 1")
        self.balances = list(self.balances)

    def invariant(self) -> int:
        return invariant_d(self.balances, self.amp)

    def _out_given_in(self, token_in: int, amount_in: int, fee_bps: int) -> int:
        require_positive(amount_in)
        token_out = other(token_in)
        x, y = self.balances[token_in], self.balances[token_out]
        d = invariant_d(self.balances, self.amp)
        net_in = amount_in - bps_fee(amount_in, fee_bps)
        y_new = solve_y(x + net_in, d, self.amp)
        out = max(y - y_new - 1, 0)
        if out >= y:
            raise InsufficientLiquidity("swap would drain the pool")
        return out

    def quote(self, token_in: int, amount_in: int) -> int:
        return self._out_given_in(token_in, amount_in, self.fee_bps)

    def swap(self, token_in: int, amount_in: int) -> int:
        out = self._out_given_in(token_in, amount_in, self.fee_bps)
        self.balances[token_in] = check(self.balances[token_in] + amount_in)
        self.balances[other(token_in)] -= out
        return out

    def spot_price(self) -> int:
        """ETH per LSD from a fee-free probe trade of 10**6 wei."""
        x, y = self.balances[LSD], self.balances[ETH]
        d = invariant_d(self.balances, self.amp)
        out = y - solve_y(x + PROBE_SIZE, d, self.amp)
        return mul_div(max(out, 0), WAD, PROBE_SIZE)

    def add_liquidity(self, holder: str, amounts: list[int] | tuple[int, int]) -> int:
        if any(a <= 0 for a in amounts):
            raise ZeroAmount("stableswap deposits must be positive in both tokens")
        if self.lp_total_supply == 0:
            minted = invariant_d(list(amounts), self.amp)
        elif amounts[0] * self.balances[1] == amounts[1] * self.balances[0]:
            minted = mul_div(self.lp_total_supply, amounts[0], self.balances[0])
        else:
            d0 = invariant_d(self.balances, self.amp)
            d1 = invariant_d([b + a for b, a in zip(self.balances, amounts)], self.amp)
            minted = mul_div(self.lp_total_supply, d1 - d0, d0)
        if minted == 0:
            raise ZeroAmount("deposit too small to mint LP tokens")
        for i, a in enumerate(amounts):
            self.balances[i] = check(self.balances[i] + a)
        self.lp_total_supply += minted
        self.lp_balances[holder] = self.lp_balances.get(holder, 0) + minted
        return minted

    def remove_liquidity(self, holder: str, lp_amount: int) -> list[int]:
        require_positive(lp_amount)
        debit_lp(self.lp_balances, holder, lp_amount)
        out = [mul_div(b, lp_amount, self.lp_total_supply) for b in self.balances]
        for i, a in enumerate(out):
            self.balances[i] -= a
        self.lp_total_supply -= lp_amount
        return out

    def eth_reserve(self) -> int:
        return self.balances[ETH]
