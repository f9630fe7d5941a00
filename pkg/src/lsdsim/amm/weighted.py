"""Equal-weight (50/50) weighted pool: constant product with fee on input."""

from __future__ import annotations

from dataclasses import dataclass, field
from math import isqrt

from ..errors import InsufficientLiquidity, ZeroAmount
from ..fixedmath import WAD, bps_fee, check, mul_div
from .base import ETH, LSD, debit_lp, other, require_positive


@dataclass
class WeightedPool:
    balances: list[int] = field(default_factory=lambda: [0, 0])
    fee_bps: int = 4
    lp_total_supply: int = 0
    lp_balances: dict[str, int] = field(default_factory=dict)
    name: str = "balancer"

    kind = "weighted"

    def __post_init__(self) -> None:
        self.balances = list(self.balances)

    def quote(self, token_in: int, amount_in: int) -> int:
        require_positive(amount_in)
        b_in, b_out = self.balances[token_in], self.balances[other(token_in)]
        net = amount_in - bps_fee(amount_in, self.fee_bps)
        out = mul_div(b_out, net, b_in + net)
        if out >= b_out:
            raise InsufficientLiquidity("swap would drain the pool")
        return out

    def swap(self, token_in: int, amount_in: int) -> int:
        out = self.quote(token_in, amount_in)
        self.balances[token_in] = check(self.balances[token_in] + amount_in)
        self.balances[other(token_in)] -= out
        return out

    def spot_price(self) -> int:
        return mul_div(self.balances[ETH], WAD, self.balances[LSD])

    def add_liquidity(self, holder: str, amounts: list[int] | tuple[int, int]) -> int:
        if any(a <= 0 for a in amounts):
            raise ZeroAmount("deposits must be positive in both tokens")
        if self.lp_total_supply == 0:
            minted = isqrt(amounts[0] * amounts[1])
        else:
            minted = min(mul_div(self.lp_total_supply, a, b) for a, b in zip(amounts, self.balances))
        if minted == 0:
            raise ZeroAmount("deposit too small to mint LP tokens")
        self.balances = [check(b + a) for b, a in zip(self.balances, amounts)]
        self.lp_total_supply += minted
        self.lp_balances[holder] = self.lp_balances.get(holder, 0) + minted
        return minted

    def remove_liquidity(self, holder: str, lp_amount: int) -> list[int]:
        require_positive(lp_amount)
        debit_lp(self.lp_balances, holder, lp_amount)
        out = [mul_div(b, lp_amount, self.lp_total_supply) for b in self.balances]
        self.balances = [b - a for b, a in zip(self.balances, out)]
        self.lp_total_supply -= lp_amount
        return out

    def eth_reserve(self) -> int:
        return self.balances[ETH]
