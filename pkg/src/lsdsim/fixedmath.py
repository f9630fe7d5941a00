"""Wide-integer fixed-point helpers.

Token quantities are plain ``int`` wei; ratios (prices, rates, fees) are wads,
i.e. ints scaled by 10**18. Every operation is checked against a 256-bit
ceiling so an overflow raises instead of silently producing a huge number.
"""

from __future__ import annotations

from enum import Enum

from .errors import DivideByZero, Overflow

WAD = 10**18
MAX_UINT256 = 2**256 - 1
BPS = 10_000


class Rounding(str, Enum):
    DOWN = "down"
    UP = "up"


def check(value: int) -> int:
    """Return ``value`` if it fits an unsigned 256-bit word."""
    if value < 0:
        raise Overflow(f"negative amount {value}")
    if value > MAX_UINT256:
        raise Overflow("value exceeds 256-bit headroom")
    return value


def mul_div(a: int, b: int, denominator: int, rounding: Rounding | str = Rounding.DOWN) -> int:
    """floor or ceil of a*b/denominator with a checked intermediate product."""
    if denominator == 0:
        raise DivideByZero("division by zero")
    product = check(check(a) * check(b))
    q, r = divmod(product, denominator)
    if r and Rounding(rounding) is Rounding.UP:
        q += 1
    return q


def full_mul_div(a: int, b: int, denominator: int, rounding: Rounding | str = Rounding.DOWN) -> int:
    """Like :func:`mul_div` but allows a 512-bit intermediate product.

    Only the result must fit in 256 bits (the FullMath convention).
    """
    if denominator == 0:
        raise DivideByZero("division by zero")
    product = a * b
    if product < 0 or product > MAX_UINT256 * MAX_UINT256:
        raise Overflow("intermediate exceeds 512 bits")
    q, r = divmod(product, denominator)
    if r and Rounding(rounding) is Rounding.UP:
        q += 1
    return check(q)


def wad_mul(a: int, b: int, rounding: Rounding | str = Rounding.DOWN) -> int:
    return mul_div(a, b, WAD, rounding)


def wad_div(a: int, b: int, rounding: Rounding | str = Rounding.DOWN) -> int:
    if b == 0:
        raise DivideByZero("wad_div by zero")
    return mul_div(a, WAD, b, rounding)


def ceil_div(a: int, b: int) -> int:
    if b == 0:
        raise DivideByZero("division by zero")
    return -(-a // b)


def bps_fee(amount: int, fee_bps: int) -> int:
    """Fee charged on ``amount``, rounded up so the pool never undercharges."""
    return mul_div(amount, fee_bps, BPS, Rounding.UP)


def to_wad(value: str | int) -> int:
    """Parse a decimal string such as ``"1.05"`` into a wad without floats."""
    from decimal import Decimal

    scaled = Decimal(str(value)) * WAD
    if scaled != scaled.to_integral_value():
        raise ValueError(f"{value!r} has more than 18 fractional digits")
    return check(int(scaled))
