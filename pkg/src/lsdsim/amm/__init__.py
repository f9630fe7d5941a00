"""Secondary-market pool models behind one swap/liquidity surface.

Each pool exposes ``quote``, ``swap``, ``spot_price`` and ``eth_reserve``
with tokens ordered ``[LSD, ETH]``.
"""

from __future__ import annotations

from .. import canonical
from .base import ETH, LSD, TOKEN_NAMES, other
from .concentrated import ConcentratedPool, Position
from .stableswap import StableswapPool, invariant_d, solve_y
from .weighted import WeightedPool

Pool = StableswapPool | ConcentratedPool | WeightedPool

_KINDS = {cls.kind: cls for cls in (StableswapPool, ConcentratedPool, WeightedPool)}


def spot_price(pool: Pool) -> int:
    """Marginal price of the LSD in ETH, as a wad."""
    return pool.spot_price()


def pool_to_dict(pool: Pool) -> dict:
    data = canonical.loads(canonical.dumps(pool))
    data["kind"] = pool.kind
    return data


def pool_from_dict(data: dict) -> Pool:
    data = dict(data)
    return _KINDS[data.pop("kind")](**data)


__all__ = [
    "ETH",
    "LSD",
    "TOKEN_NAMES",
    "ConcentratedPool",
    "Pool",
    "Position",
    "StableswapPool",
    "WeightedPool",
    "invariant_d",
    "other",
    "pool_from_dict",
    "pool_to_dict",
    "solve_y",
    "spot_price",
]
