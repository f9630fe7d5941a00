"""Primary-market state machines for the three LSD token designs.

* :class:`RebasingLsd` - share-based token whose balances grow on rebase
  (stETH style). The rebase mints fee shares so that the treasury's cut of
  the rewards is worth exactly ``rewards * protocol_fee``.
* :class:`RewardBearingLsd` - fixed balances, growing ETH exchange rate
  (rETH style), with a capacity-limited :class:`DepositPool` in front.
* :class:`DualTokenLsd` - 1:1 base token plus a reward vault (frxETH style).

All quantities are wei ints, all ratios wads.
"""

from __future__ import annotations

from dataclasses import dataclass, field

from . import canonical
from .errors import (
    AssignExceedsBalance,
    DepositPoolFull,
    InsufficientBalance,
    InsufficientProtocolLiquidity,
    LsdSimError,
    NotBootstrapped,
    Paused,
    WithdrawalsDisabled,
    ZeroAmount,
)
from .fixedmath import WAD, Rounding, check, mul_div, wad_div, wad_mul

TREASURY = "treasury"

REBASING = "rebasing"
REWARD_BEARING = "reward_bearing"


def _require_positive(amount: int) -> None:
    if amount <= 0:
        raise ZeroAmount("amount must be positive")


@dataclass
class RebasingLsd:
    total_eth: int = 0
    total_shares: int = 0
    shares_of: dict[str, int] = field(default_factory=dict)
    protocol_fee: int = 0
    paused: bool = False
    treasury: str = TREASURY
    name: str = "lido"

    mechanism = REBASING

    def __post_init__(self) -> None:
        if not 0 <= self.protocol_fee < WAD:
            raise ValueError("protocol_fee must lie in [0, 1e18)")

    # -- views ---------------------------------------------------------

    @property
    def share_price(self) -> int:
        """ETH per share as a wad; 1 before bootstrap."""
        if self.total_shares == 0:
            return WAD
        return mul_div(self.total_eth, WAD, self.total_shares)

    def primary_rate(self) -> int:
        # stETH is redeemable 1:1, so its primary-market price is fixed at one.
        return WAD

    def shares_for_eth(self, eth: int, rounding: Rounding | str = Rounding.DOWN) -> int:
        if self.total_eth == 0:
            return eth
        return mul_div(eth, self.total_shares, self.total_eth, rounding)

    def eth_for_shares(self, shares: int) -> int:
        if self.total_shares == 0:
            return 0
        return mul_div(shares, self.total_eth, self.total_shares)

    def balance_of(self, holder: str) -> int:
        return self.eth_for_shares(self.shares_of.get(holder, 0))

    def preview_stake(self, m: int) -> int:
        if self.total_shares == 0:
            return m
        shares = self.shares_for_eth(m)
        return mul_div(shares, self.total_eth + m, self.total_shares + shares)

    # -- mutations -----------------------------------------------------

    def stake(self, holder: str, m: int) -> int:
        """Deposit ``m`` wei of ETH; returns the stETH balance credited."""
        _require_positive(m)
        if self.paused:
            raise Paused(self.name)
        shares = self.shares_for_eth(m)
        self.shares_of[holder] = self.shares_of.get(holder, 0) + shares
        self.total_shares = check(self.total_shares + shares)
        self.total_eth = check(self.total_eth + m)
        # the holder's balance grows by at least this much, so it is always transferable
        return self.eth_for_shares(shares)

    def rebase(self, rewards: int) -> int:
        """Distribute ``rewards`` wei and mint the protocol's fee shares.

        Returns the new share price.
        """
        if self.total_shares == 0:
            raise NotBootstrapped(self.name)
        if rewards < 0:
            raise ValueError("use slash() for negative rebases")
        total_with_rewards = self.total_eth + rewards
        fee_numerator = rewards * self.protocol_fee  # wei * wad
        denominator = total_with_rewards * WAD - fee_numerator
        if denominator <= 0:
            raise ValueError("protocol fee consumes the whole pooled ETH")
        shares_to_mint = mul_div(fee_numerator, self.total_eth, denominator)
        if shares_to_mint:
            self.shares_of[self.treasury] = self.shares_of.get(self.treasury, 0) + shares_to_mint
            self.total_shares = check(self.total_shares + shares_to_mint)
        self.total_eth = check(total_with_rewards)
        return self.share_price

    def slash(self, loss: int) -> int:
        """Negative rebase: pooled ETH shrinks, no shares are minted."""
        if self.total_shares == 0:
            raise NotBootstrapped(self.name)
        if not 0 <= loss < self.total_eth:
            raise ValueError("loss must be below pooled ETH")
        self.total_eth -= loss
        return self.share_price

    def transfer(self, src: str, dst: str, amount: int) -> int:
        """Move ``amount`` stETH; returns the shares moved.

        Shares are rounded up so the recipient is credited at least ``amount``.
        """
        if amount == 0:
            return 0
        if self.balance_of(src) < amount:
            raise InsufficientBalance(f"{src} holds {self.balance_of(src)} < {amount}")
        shares = self.shares_for_eth(amount, Rounding.UP)
        self.shares_of[src] -= shares
        self.shares_of[dst] = self.shares_of.get(dst, 0) + shares
        return shares

    def unstake(self, holder: str, amount: int, shapella_enabled: bool) -> int:
        """Redeem ``amount`` stETH for exactly ``amount`` wei of ETH."""
        if not shapella_enabled:
            raise WithdrawalsDisabled("withdrawals require the Shapella upgrade")
        if amount == 0:
            return 0
        if self.balance_of(holder) < amount:
            raise InsufficientBalance(f"{holder} holds {self.balance_of(holder)} < {amount}")
        shares = self.shares_for_eth(amount, Rounding.UP)
        self.shares_of[holder] -= shares
        self.total_shares -= shares
        self.total_eth -= amount
        if self.total_shares == 0:
            # unclaimable rounding dust stays with nobody
            self.total_eth = 0
        return amount

    def sum_balances(self) -> int:
        return sum(self.eth_for_shares(s) for s in self.shares_of.values())

    def held_eth(self) -> int:
        return self.total_eth

    def to_dict(self) -> dict:
        return canonical.loads(canonical.dumps(self))

    @classmethod
    def from_dict(cls, data: dict) -> RebasingLsd:
        return cls(**data)


@dataclass
class DepositPool:
    balance: int = 0
    max_capacity: int = 0

    def room(self) -> int:
        return self.max_capacity - self.balance

    def deposit(self, amount: int) -> None:
        if self.balance + amount > self.max_capacity:
            raise DepositPoolFull(
                f"deposit of {amount} exceeds remaining capacity {self.room()}"
            )
        self.balance += amount

    def assign(self, amount: int) -> None:
        """Hand ``amount`` of pooled ETH to node operators, freeing capacity."""
        if amount < 0 or amount > self.balance:
            raise AssignExceedsBalance(f"assign {amount} > pool balance {self.balance}")
        self.balance -= amount


def deposit_pool_assign(pool: DepositPool, amount: int) -> None:
    pool.assign(amount)


@dataclass
class RewardBearingLsd:
    total_eth_staked: int = 0
    staking_reward_in_eth: int = 0
    total_supply: int = 0
    balances: dict[str, int] = field(default_factory=dict)
    deposit_pool: DepositPool = field(default_factory=DepositPool)
    name: str = "rocket"

    mechanism = REWARD_BEARING

    def __post_init__(self) -> None:
        if isinstance(self.deposit_pool, dict):
            self.deposit_pool = DepositPool(**self.deposit_pool)

    def exchange_rate(self) -> int:
        if self.total_supply == 0:
            return WAD
        return mul_div(self.total_eth_staked + self.staking_reward_in_eth, WAD, self.total_supply)

    primary_rate = exchange_rate

    def balance_of(self, holder: str) -> int:
        return self.balances.get(holder, 0)

    def preview_stake(self, m: int) -> int:
        return wad_div(m, self.exchange_rate())

    def _mint(self, holder: str, amount: int) -> None:
        self.balances[holder] = self.balances.get(holder, 0) + amount
        self.total_supply = check(self.total_supply + amount)

    def stake(self, holder: str, m: int) -> int:
        _require_positive(m)
        minted = wad_div(m, self.exchange_rate())
        self.deposit_pool.deposit(m)
        self.total_eth_staked = check(self.total_eth_staked + m)
        self._mint(holder, minted)
        return minted

    def node_deposit(self, holder: str, m: int) -> int:
        """Stake that bypasses the deposit pool and assigns ``m`` pooled ETH.

        Models an operator-side deposit whose side effect frees deposit-pool
        capacity; the staker still receives LSD at the current rate.
        """
        _require_positive(m)
        self.deposit_pool.assign(m)
        minted = wad_div(m, self.exchange_rate())
        self.total_eth_staked = check(self.total_eth_staked + m)
        self._mint(holder, minted)
        return minted

    def genesis_mint(self, holder: str, m: int) -> int:
        """Initial allocation whose ETH is already with validators."""
        minted = wad_div(m, self.exchange_rate())
        self.total_eth_staked = check(self.total_eth_staked + m)
        self._mint(holder, minted)
        return minted

    def accrue(self, reward: int) -> int:
        if reward < 0:
            raise ValueError("reward must be non-negative")
        self.staking_reward_in_eth = check(self.staking_reward_in_eth + reward)
        return self.exchange_rate()

    def liquidity(self) -> int:
        return self.deposit_pool.balance

    def burn(self, holder: str, amount: int) -> int:
        """Redeem ``amount`` LSD at the current rate; returns ETH paid."""
        if amount == 0:
            return 0
        if self.balance_of(holder) < amount:
            raise InsufficientBalance(f"{holder} holds {self.balance_of(holder)} < {amount}")
        payout = wad_mul(amount, self.exchange_rate())
        if payout > self.liquidity():
            raise InsufficientProtocolLiquidity(f"payout {payout} > liquidity {self.liquidity()}")
        backing = self.total_eth_staked + self.staking_reward_in_eth
        from_rewards = mul_div(payout, self.staking_reward_in_eth, backing) if backing else 0
        self.staking_reward_in_eth -= from_rewards
        self.total_eth_staked -= payout - from_rewards
        self.deposit_pool.balance -= payout
        self.balances[holder] -= amount
        self.total_supply -= amount
        return payout

    def transfer(self, src: str, dst: str, amount: int) -> int:
        if self.balance_of(src) < amount:
            raise InsufficientBalance(f"{src} holds {self.balance_of(src)} < {amount}")
        self.balances[src] -= amount
        self.balances[dst] = self.balances.get(dst, 0) + amount
        return amount

    def unstake(self, holder: str, amount: int, shapella_enabled: bool = True) -> int:
        # rETH burns were never gated on Shapella; the flag is accepted for a uniform interface
        return self.burn(holder, amount)

    def held_eth(self) -> int:
        return self.total_eth_staked + self.staking_reward_in_eth

    def to_dict(self) -> dict:
        return canonical.loads(canonical.dumps(self))

    @classmethod
    def from_dict(cls, data: dict) -> RewardBearingLsd:
        return cls(**data)


@dataclass
class DualTokenLsd:
    base_supply: int = 0
    vault_shares: int = 0
    vault_assets: int = 0
    name: str = "frax"

    def stake(self, m: int) -> int:
        _require_positive(m)
        self.base_supply = check(self.base_supply + m)
        return m

    def enter_vault(self, base: int) -> int:
        _require_positive(base)
        if base > self.base_supply - self.vault_assets:
            raise InsufficientBalance("not enough free base tokens")
        if self.vault_shares == 0:
            shares = base
        else:
            shares = mul_div(base, self.vault_shares, self.vault_assets)
        if shares == 0:
            raise ZeroAmount("deposit too small to mint a vault share")
        self.vault_shares += shares
        self.vault_assets += base
        return shares

    def vault_accrue(self, reward: int) -> None:
        if reward == 0:
            return
        if self.vault_shares == 0:
            raise NotBootstrapped("vault has no shares to accrue to")
        # rewards arrive as freshly minted base tokens held by the vault
        self.base_supply += reward
        self.vault_assets += reward

    @property
    def share_price(self) -> int:
        if self.vault_shares == 0:
            return WAD
        return mul_div(self.vault_assets, WAD, self.vault_shares)


Protocol = RebasingLsd | RewardBearingLsd


def protocol_from_dict(data: dict) -> Protocol:
    data = dict(data)
    kind = data.pop("mechanism")
    if kind == REBASING:
        return RebasingLsd.from_dict(data)
    if kind == REWARD_BEARING:
        return RewardBearingLsd.from_dict(data)
    raise LsdSimError(f"unknown mechanism {kind!r}")


def protocol_to_dict(protocol: Protocol) -> dict:
    data = protocol.to_dict()
    data["mechanism"] = protocol.mechanism
    return data
