"""Token indices and helpers shared by the pool models.

Every pool orders its two tokens as ``[LSD, ETH]``; prices are quoted as ETH
per LSD.
"""

from __future__ import annotations

from ..errors import InsufficientBalance, ZeroAmount

LSD = 0
ETH = 1
TOKEN_NAMES = ("LSD", "ETH")


def other(token: int) -> int:
    if token not in (LSD, ETH):
        raise ValueError(f"unknown token index {token}")
    return 1 - token


def require_positive(amount: int) -> None:
    if amount <= 0:
        raise ZeroAmount("amount must be positive")


def debit_lp(balances: dict[str, int], holder: str, amount: int) -> None:
    held = balances.get(holder, 0)
    if amount > held:
        raise InsufficientBalance(f"{holder} holds {held} LP tokens < {amount}")
    balances[holder] = held - amount
