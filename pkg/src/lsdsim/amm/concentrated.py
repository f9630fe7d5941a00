"""Single-range concentrated-liquidity pool (Uniswap V3 style, no ticks).

The square-root price is stored with 36 decimal digits so that rounding the
price after a swap moves the output by far less than a wei for any realistic
liquidity. Public constructors and :attr:`sqrt_price` speak wads.
"""

from __future__ import annotations

from dataclasses import dataclass, field

from ..errors import InsufficientLiquidity, NothingToCollect, PriceOutOfRange, ZeroLiquidity
from ..fixedmath import WAD, Rounding, bps_fee, check, full_mul_div
from .base import ETH, LSD, other, require_positive

SQRT_SCALE = 10**36
Q128 = 2**128


@dataclass
class Position:
    liquidity: int
    fee_growth_last: list[int]
    tokens_owed: list[int] = field(default_factory=lambda: [0, 0])


@dataclass
class ConcentratedPool:
    sqrt_price_e36: int
    range_lower_e36: int
    range_upper_e36: int
    fee_bps: int = 30
    liquidity: int = 0
    balances: list[int] = field(default_factory=lambda: [0, 0])
    fee_growth_q128: list[int] = field(default_factory=lambda: [0, 0])
    positions: dict[str, Position] = field(default_factory=dict)
    name: str = "univ3"

    kind = "concentrated"

    def __post_init__(self) -> None:
        if not self.range_lower_e36 < self.sqrt_price_e36 < self.range_upper_e36:
            raise PriceOutOfRange("initial price must lie strictly inside the range")
        self.positions = {
            k: Position(**v) if isinstance(v, dict) else v for k, v in self.positions.items()
        }

    @classmethod
    def create(
        cls,
        sqrt_price: int,
        range_lower: int,
        range_upper: int,
        fee_bps: int = 30,
        liquidity: int = 0,
        name: str = "univ3",
        genesis_owner: str = "genesis",
    ) -> ConcentratedPool:
        """Build a pool from wad square-root prices.

        A non-zero ``liquidity`` is seeded as a position of ``genesis_owner``
        backed by the token amounts it implies.
        """
        scale = SQRT_SCALE // WAD
        pool = cls(
            sqrt_price_e36=sqrt_price * scale,
            range_lower_e36=range_lower * scale,
            range_upper_e36=range_upper * scale,
            fee_bps=fee_bps,
            name=name,
        )
        if liquidity:
            used = pool._amounts_for_liquidity(liquidity, Rounding.UP)
            pool._add_position(genesis_owner, liquidity, used)
        return pool

    # -- views ---------------------------------------------------------

    @property
    def sqrt_price(self) -> int:
        return self.sqrt_price_e36 // (SQRT_SCALE // WAD)

    def spot_price(self) -> int:
        return full_mul_div(self.sqrt_price_e36, self.sqrt_price_e36 * WAD, SQRT_SCALE * SQRT_SCALE)

    def virtual_reserves(self) -> tuple[int, int]:
        return (
            full_mul_div(self.liquidity, SQRT_SCALE, self.sqrt_price_e36),
            full_mul_div(self.liquidity, self.sqrt_price_e36, SQRT_SCALE),
        )

    def _amounts_for_liquidity(self, liquidity: int, rounding: Rounding) -> list[int]:
        s, lo, hi = self.sqrt_price_e36, self.range_lower_e36, self.range_upper_e36
        amount0 = full_mul_div(liquidity * SQRT_SCALE, hi - s, s * hi, rounding)
        amount1 = full_mul_div(liquidity, s - lo, SQRT_SCALE, rounding)
        return [amount0, amount1]

    # -- swaps ---------------------------------------------------------

    def _step(self, token_in: int, amount_in: int) -> tuple[int, int, int]:
        """Return (amount_out, new sqrt price, fee) without mutating."""
        require_positive(amount_in)
        if self.liquidity == 0:
            raise ZeroLiquidity("pool has no active liquidity")
        fee = bps_fee(amount_in, self.fee_bps)
        net = amount_in - fee
        L, s = self.liquidity, self.sqrt_price_e36
        if token_in == LSD:
            # price moves down; round it up so the pool pays out less
            s_new = full_mul_div(L * SQRT_SCALE, s, L * SQRT_SCALE + net * s, Rounding.UP)
            out = full_mul_div(L, s - s_new, SQRT_SCALE)
        else:
            s_new = s + full_mul_div(net, SQRT_SCALE, L)
            out = full_mul_div(L * SQRT_SCALE, s_new - s, s * s_new)
        if not self.range_lower_e36 < s_new < self.range_upper_e36:
            raise PriceOutOfRange("swap would leave the liquidity range")
        if out >= self.balances[other(token_in)]:
            raise InsufficientLiquidity("swap would drain the pool")
        return out, s_new, fee

    def quote(self, token_in: int, amount_in: int) -> int:
        return self._step(token_in, amount_in)[0]

    def swap(self, token_in: int, amount_in: int) -> int:
        out, s_new, fee = self._step(token_in, amount_in)
        self.fee_growth_q128[token_in] += fee * Q128 // self.liquidity
        self.sqrt_price_e36 = s_new
        self.balances[token_in] = check(self.balances[token_in] + amount_in)
        self.balances[other(token_in)] -= out
        return out

    # -- liquidity -----------------------------------------------------

    def _pending_fees(self, pos: Position) -> list[int]:
        return [
            pos.liquidity * (g - last) // Q128
            for g, last in zip(self.fee_growth_q128, pos.fee_growth_last)
        ]

    def _add_position(self, owner: str, liquidity: int, used: list[int]) -> None:
        pos = self.positions.get(owner)
        if pos is None:
            pos = self.positions[owner] = Position(0, list(self.fee_growth_q128))
        else:
            pending = self._pending_fees(pos)
            pos.tokens_owed = [a + b for a, b in zip(pos.tokens_owed, pending)]
            pos.fee_growth_last = list(self.fee_growth_q128)
        pos.liquidity += liquidity
        self.liquidity += liquidity
        self.balances = [check(b + u) for b, u in zip(self.balances, used)]

    def mint(self, owner: str, amount_lsd: int, amount_eth: int) -> tuple[int, list[int]]:
        """Add liquidity from token amounts; returns (L, amounts actually used)."""
        s, lo, hi = self.sqrt_price_e36, self.range_lower_e36, self.range_upper_e36
        l0 = full_mul_div(amount_lsd * s, hi, SQRT_SCALE * (hi - s))
        l1 = full_mul_div(amount_eth, SQRT_SCALE, s - lo)
        liquidity = min(l0, l1)
        if liquidity == 0:
            raise ZeroLiquidity("deposit too small for any liquidity")
        used = self._amounts_for_liquidity(liquidity, Rounding.UP)
        self._add_position(owner, liquidity, used)
        return liquidity, used

    def collect(self, owner: str) -> list[int]:
        """Close ``owner``'s position: principal plus accrued fees."""
        pos = self.positions.get(owner)
        if pos is None or pos.liquidity == 0:
            raise NothingToCollect(f"{owner} has no open position")
        principal = self._amounts_for_liquidity(pos.liquidity, Rounding.DOWN)
        fees = self._pending_fees(pos)
        out = [p + f + o for p, f, o in zip(principal, fees, pos.tokens_owed)]
        # rounding dust can never be paid beyond what the pool holds
        out = [min(a, b) for a, b in zip(out, self.balances)]
        self.liquidity -= pos.liquidity
        del self.positions[owner]
        self.balances = [b - a for b, a in zip(self.balances, out)]
        return out

    def eth_reserve(self) -> int:
        return self.balances[ETH]
