"""Deterministic block-by-block market engine.

A scenario binds LSD protocols, DEX pools and agents into one world and
advances it one block at a time. Within a block the order is fixed:

1. daily reward injection (rebase or accrual), when a day boundary is crossed
2. tick sampling (every 600 simulated seconds)
3. LP deposits and withdrawals due this block
4. noise traders, in config order
5. arbitrageurs, in config order

All randomness comes from one PCG64 stream seeded by ``seed``. Draws are
mapped to integers without floating point, so a config and seed fully
determine every output byte.
"""

from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass, field
from math import isqrt
from pathlib import Path
from typing import Any

import numpy as np

from . import __version__, canonical
from .amm import ETH, LSD, ConcentratedPool, Pool, StableswapPool, WeightedPool, pool_from_dict, pool_to_dict
from .analytics.lp import PriceHistory
from .analytics.metrics import SECONDS_PER_DAY, TICK_SPACING, Tick, TickSeries
from .analytics.trace import EventKind, EventTrace, swap_venue
from .arbitrage import (
    Account,
    Direction,
    FlashLender,
    TxCostModel,
    arb_flash_loan,
    arb_stake_swap,
    arb_swap_unstake,
    atomic,
    optimal_size,
    pay_gas,
    simulated_profit,
    swap_eth_for_lsd,
    swap_lsd_for_eth,
    sync_pool,
)
from .errors import ConfigError, CorruptSnapshot, InvariantViolation, LsdSimError
from .fixedmath import WAD, mul_div, to_wad, wad_mul
from .lsd import (
    REBASING,
    REWARD_BEARING,
    DepositPool,
    Protocol,
    RebasingLsd,
    RewardBearingLsd,
    protocol_from_dict,
    protocol_to_dict,
)

GENESIS = "genesis"
GAS_SINK = "gas-sink"
REWARDS_SENDER = "beacon"
RESERVED_NAMES = {GENESIS, GAS_SINK, REWARDS_SENDER, "treasury"}
STRATEGIES = ("stake_swap", "flash_loan", "swap_unstake")
SNAPSHOT_MAGIC = "lsdsim-snapshot/1"


# -- configuration -------------------------------------------------------


@dataclass(frozen=True)
class ProtocolConfig:
    name: str
    mechanism: str
    protocol_fee: int = 0
    daily_reward_rate: int = 0
    initial_stake: int = 0
    deposit_pool_cap: int = 0
    deposit_pool_balance: int = 0


@dataclass(frozen=True)
class PoolConfig:
    name: str
    kind: str
    protocol: str
    balances: tuple[int, int]
    fee_bps: int
    amp: int = 100
    range_lower: int = 0
    range_upper: int = 0


@dataclass(frozen=True)
class NoiseTraderConfig:
    name: str
    pool: str
    eth: int
    lsd: int
    trade_probability: int
    min_size: int
    max_size: int
    sell_bias: int
    cost: TxCostModel = TxCostModel()


@dataclass(frozen=True)
class ArbitrageurConfig:
    name: str
    pool: str
    strategies: tuple[str, ...]
    eth: int
    bounds: tuple[int, int]
    threshold: int = 0
    cost: TxCostModel = TxCostModel()
    flash_liquidity: int = 0
    flash_fee: int = 0


@dataclass(frozen=True)
class LpConfig:
    name: str
    pool: str
    eth: int
    lsd: int
    deposit_eth: int
    deposit_block: int
    withdraw_block: int
    cost: TxCostModel = TxCostModel()


@dataclass(frozen=True)
class ScenarioConfig:
    seed: int
    horizon: int
    block_time: int = 12
    start_timestamp: int = 0
    protocols: tuple[ProtocolConfig, ...] = ()
    pools: tuple[PoolConfig, ...] = ()
    noise_traders: tuple[NoiseTraderConfig, ...] = ()
    arbitrageurs: tuple[ArbitrageurConfig, ...] = ()
    lps: tuple[LpConfig, ...] = ()
    shapella_enabled: bool = True
    shapella_block: int = 0
    tick_pool: str = ""
    raw: dict = field(default_factory=dict, compare=False, repr=False)

    @property
    def config_hash(self) -> str:
        return hashlib.sha256(canonical.dumps(self.raw).encode()).hexdigest()

    @property
    def shapella_timestamp(self) -> int:
        return self.start_timestamp + self.shapella_block * self.block_time


class _Node:
    """A config mapping that remembers its path for error messages."""

    def __init__(self, data: Any, path: str):
        if not isinstance(data, dict):
            raise ConfigError(path or "<root>", "expected a mapping")
        self.data = data
        self.path = path
        self.used: set[str] = set()

    def _p(self, key: str) -> str:
        return f"{self.path}.{key}" if self.path else key

    def has(self, key: str) -> bool:
        return key in self.data

    def raw(self, key: str, default: Any = ...) -> Any:
        self.used.add(key)
        if key not in self.data:
            if default is ...:
                raise ConfigError(self._p(key), "required field is missing")
            return default
        return self.data[key]

    def integer(self, key: str, default: Any = ..., minimum: int | None = 0) -> int:
        value = self.raw(key, default)
        if isinstance(value, bool) or not isinstance(value, int):
            raise ConfigError(self._p(key), f"expected an integer, got {value!r}")
        if minimum is not None and value < minimum:
            raise ConfigError(self._p(key), f"must be >= {minimum}")
        return value

    def decimal(self, key: str, default: Any = ...) -> int:
        """A decimal quantity (ETH amount or ratio) as an 18-decimal integer."""
        value = self.raw(key, default)
        return _wad(value, self._p(key))

    def text(self, key: str, default: Any = ...) -> str:
        value = self.raw(key, default)
        if not isinstance(value, str) or not value:
            raise ConfigError(self._p(key), f"expected a non-empty string, got {value!r}")
        return value

    def flag(self, key: str, default: Any = ...) -> bool:
        value = self.raw(key, default)
        if not isinstance(value, bool):
            raise ConfigError(self._p(key), f"expected true or false, got {value!r}")
        return value

    def child(self, key: str, default: Any = ...) -> _Node:
        return _Node(self.raw(key, default), self._p(key))

    def items(self, key: str) -> list[_Node]:
        value = self.raw(key, [])
        if not isinstance(value, list):
            raise ConfigError(self._p(key), "expected a list")
        return [_Node(v, f"{self._p(key)}[{i}]") for i, v in enumerate(value)]

    def finish(self) -> None:
        extra = sorted(set(self.data) - self.used)
        if extra:
            raise ConfigError(self._p(extra[0]), "unknown field")


def _wad(value: Any, path: str) -> int:
    if isinstance(value, bool):
        raise ConfigError(path, f"expected a number, got {value!r}")
    if isinstance(value, float):
        value = repr(value)
    if isinstance(value, int):
        value = str(value)
    if not isinstance(value, str):
        raise ConfigError(path, f"expected a decimal number, got {value!r}")
    try:
        out = to_wad(value)
    except (ValueError, ArithmeticError, LsdSimError) as exc:
        raise ConfigError(path, f"bad decimal {value!r}: {exc}") from None
    if out < 0:
        raise ConfigError(path, "must be non-negative")
    return out


def _cost(node: _Node) -> TxCostModel:
    if not node.has("cost"):
        node.raw("cost", None)
        return TxCostModel()
    c = node.child("cost")
    out = TxCostModel(
        gas_per_arb=c.integer("gasUnits", 0),
        gas_price=c.integer("gasPriceWei", 0),
        bribe=c.decimal("bribe", 0),
    )
    c.finish()
    return out


def _protocol_config(n: _Node) -> ProtocolConfig:
    mechanism = n.text("mechanism")
    if mechanism not in (REBASING, REWARD_BEARING):
        raise ConfigError(n._p("mechanism"), f"must be {REBASING!r} or {REWARD_BEARING!r}")
    fee = n.decimal("protocolFee", 0)
    if fee >= WAD:
        raise ConfigError(n._p("protocolFee"), "must be below 1")
    cfg = ProtocolConfig(
        name=n.text("name"),
        mechanism=mechanism,
        protocol_fee=fee,
        daily_reward_rate=n.decimal("dailyRewardRate", 0),
        initial_stake=n.decimal("initialStake"),
        deposit_pool_cap=n.decimal("depositPoolCap", 0),
        deposit_pool_balance=n.decimal("depositPoolBalance", 0),
    )
    if mechanism == REBASING and (n.has("depositPoolCap") or n.has("depositPoolBalance")):
        raise ConfigError(n._p("depositPoolCap"), "only reward_bearing protocols have a deposit pool")
    if cfg.deposit_pool_balance > min(cfg.deposit_pool_cap, cfg.initial_stake) and mechanism == REWARD_BEARING:
        raise ConfigError(n._p("depositPoolBalance"), "exceeds the cap or the initial stake")
    if cfg.initial_stake == 0:
        raise ConfigError(n._p("initialStake"), "must be positive")
    n.finish()
    return cfg


def _pool_config(n: _Node) -> PoolConfig:
    kind = n.text("kind")
    if kind not in ("stableswap", "concentrated", "weighted"):
        raise ConfigError(n._p("kind"), f"unknown pool kind {kind!r}")
    b = n.child("balances")
    balances = (b.decimal("lsd"), b.decimal("eth"))
    b.finish()
    if min(balances) == 0:
        raise ConfigError(n._p("balances"), "both balances must be positive")
    default_fee = 30 if kind == "concentrated" else 4
    fee = n.integer("feeBps", default_fee)
    if fee >= 10_000:
        raise ConfigError(n._p("feeBps"), "must be below 10000")
    amp, lower, upper = 100, 0, 0
    if kind == "stableswap":
        amp = n.integer("amp", 100, minimum=1)
    if kind == "concentrated":
        lower, upper = n.decimal("rangeLower"), n.decimal("rangeUpper")
        price = mul_div(balances[1], WAD, balances[0])
        if not 0 < lower < price < upper:
            raise ConfigError(n._p("rangeLower"), "range must strictly contain the price eth/lsd")
    cfg = PoolConfig(n.text("name"), kind, n.text("protocol"), balances, fee, amp, lower, upper)
    n.finish()
    return cfg


def _noise_config(n: _Node) -> NoiseTraderConfig:
    cfg = NoiseTraderConfig(
        name=n.text("name"),
        pool=n.text("pool"),
        eth=n.decimal("eth", 0),
        lsd=n.decimal("lsd", 0),
        trade_probability=n.decimal("tradeProbability"),
        min_size=n.decimal("minSize"),
        max_size=n.decimal("maxSize"),
        sell_bias=n.decimal("sellBias", "0.5"),
        cost=_cost(n),
    )
    if cfg.trade_probability > WAD:
        raise ConfigError(n._p("tradeProbability"), "must lie in [0, 1]")
    if cfg.sell_bias > WAD:
        raise ConfigError(n._p("sellBias"), "must lie in [0, 1]")
    if not 0 < cfg.min_size <= cfg.max_size:
        raise ConfigError(n._p("minSize"), "need 0 < minSize <= maxSize")
    n.finish()
    return cfg


def _arb_config(n: _Node) -> ArbitrageurConfig:
    raw = n.raw("strategies")
    if not isinstance(raw, list) or not raw or any(s not in STRATEGIES for s in raw):
        raise ConfigError(n._p("strategies"), f"expected a non-empty list drawn from {list(STRATEGIES)}")
    if "stake_swap" in raw and "flash_loan" in raw:
        raise ConfigError(n._p("strategies"), "stake_swap and flash_loan are alternatives")
    bounds = n.raw("bounds", ["0.001", "1000"])
    if not isinstance(bounds, list) or len(bounds) != 2:
        raise ConfigError(n._p("bounds"), "expected [min, max]")
    lo, hi = (_wad(v, f"{n._p('bounds')}[{i}]") for i, v in enumerate(bounds))
    if not 0 < lo <= hi:
        raise ConfigError(n._p("bounds"), "need 0 < min <= max")
    cfg = ArbitrageurConfig(
        name=n.text("name"),
        pool=n.text("pool"),
        strategies=tuple(raw),
        eth=n.decimal("eth", 0),
        bounds=(lo, hi),
        threshold=n.decimal("threshold", 0),
        cost=_cost(n),
        flash_liquidity=n.decimal("flashLiquidity", 0),
        flash_fee=n.decimal("flashFee", 0),
    )
    if "flash_loan" in cfg.strategies and cfg.flash_liquidity == 0:
        raise ConfigError(n._p("flashLiquidity"), "flash_loan needs a positive lender liquidity")
    n.finish()
    return cfg


def _lp_config(n: _Node, horizon: int) -> LpConfig:
    cfg = LpConfig(
        name=n.text("name"),
        pool=n.text("pool"),
        eth=n.decimal("eth"),
        lsd=n.decimal("lsd"),
        deposit_eth=n.decimal("depositEth"),
        deposit_block=n.integer("depositBlock"),
        withdraw_block=n.integer("withdrawBlock"),
        cost=_cost(n),
    )
    if not cfg.deposit_block < cfg.withdraw_block < horizon:
        raise ConfigError(n._p("withdrawBlock"), "need depositBlock < withdrawBlock < horizon")
    if not 0 < cfg.deposit_eth <= cfg.eth:
        raise ConfigError(n._p("depositEth"), "must be positive and at most eth")
    n.finish()
    return cfg


def parse_config(data: Any) -> ScenarioConfig:
    """Validate a config tree; errors name the offending field path."""
    root = _Node(data, "")
    horizon = root.integer("horizon", minimum=1)
    block_time = root.integer("blockTime", 12, minimum=1)
    seed = root.integer("seed")
    if seed >= 2**64:
        raise ConfigError("seed", "must fit in 64 bits")
    protocols = tuple(_protocol_config(n) for n in root.items("protocols"))
    pools = tuple(_pool_config(n) for n in root.items("pools"))
    agents = root.child("agents", {})
    noise = tuple(_noise_config(n) for n in agents.items("noiseTraders"))
    arbs = tuple(_arb_config(n) for n in agents.items("arbitrageurs"))
    lps = tuple(_lp_config(n, horizon) for n in agents.items("lps"))
    agents.finish()
    flags = root.child("flags", {})
    shapella_enabled = flags.flag("shapellaEnabled", True)
    shapella_block = flags.integer("shapellaBlock", 0)
    flags.finish()
    tick_pool = root.raw("tickPool", pools[0].name if pools else "")
    start = root.integer("startTimestamp", 0)
    root.finish()

    names: dict[str, str] = {}

    def claim(name: str, path: str) -> None:
        if name in RESERVED_NAMES:
            raise ConfigError(path, f"{name!r} is a reserved name")
        if name in names:
            raise ConfigError(path, f"name {name!r} already used at {names[name]}")
        names[name] = path

    by_protocol = {p.name: p for p in protocols}
    for i, p in enumerate(protocols):
        claim(p.name, f"protocols[{i}].name")
    by_pool = {}
    for i, p in enumerate(pools):
        claim(p.name, f"pools[{i}].name")
        if p.protocol not in by_protocol:
            raise ConfigError(f"pools[{i}].protocol", f"unknown protocol {p.protocol!r}")
        if p.kind == "concentrated" and by_protocol[p.protocol].mechanism == REBASING:
            raise ConfigError(
                f"pools[{i}].kind", "concentrated pools need a reward_bearing LSD; rebasing balances cannot back fixed liquidity"
            )
        by_pool[p.name] = p
    for group, items in (("noiseTraders", noise), ("arbitrageurs", arbs), ("lps", lps)):
        for i, a in enumerate(items):
            claim(a.name, f"agents.{group}[{i}].name")
            if a.pool not in by_pool:
                raise ConfigError(f"agents.{group}[{i}].pool", f"unknown pool {a.pool!r}")
    if pools and tick_pool not in by_pool:
        raise ConfigError("tickPool", f"unknown pool {tick_pool!r}")

    # every wei of LSD handed out at genesis must come from the initial stake
    for i, p in enumerate(protocols):
        need = sum(pl.balances[LSD] for pl in pools if pl.protocol == p.name)
        need += sum(a.lsd for a in (*noise, *lps) if by_pool[a.pool].protocol == p.name)
        if need > p.initial_stake:
            raise ConfigError(f"protocols[{i}].initialStake", f"must cover the {need} wei of LSD allocated at genesis")

    return ScenarioConfig(
        seed=seed,
        horizon=horizon,
        block_time=block_time,
        start_timestamp=start,
        protocols=protocols,
        pools=pools,
        noise_traders=noise,
        arbitrageurs=arbs,
        lps=lps,
        shapella_enabled=shapella_enabled,
        shapella_block=shapella_block,
        tick_pool=tick_pool,
        raw=data,
    )


def load_config(path: str | Path) -> ScenarioConfig:
    """Read a JSON or YAML scenario file."""
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as exc:
        raise ConfigError(str(path), f"cannot read config: {exc.strerror}") from None
    try:
        if path.suffix.lower() in (".yaml", ".yml"):
            import yaml

            data = yaml.safe_load(text)
        else:
            data = json.loads(text)
    except Exception as exc:  # parser errors carry no common base class
        raise ConfigError(str(path), f"cannot parse config: {exc}") from None
    return parse_config(data)


# -- world state ---------------------------------------------------------


@dataclass
class WorldState:
    block: int = 0
    timestamp: int = 0
    protocols: dict[str, Protocol] = field(default_factory=dict)
    pools: dict[str, Pool] = field(default_factory=dict)
    pool_protocol: dict[str, str] = field(default_factory=dict)
    accounts: dict[str, Account] = field(default_factory=dict)
    lenders: dict[str, FlashLender] = field(default_factory=dict)
    pending: list[list] = field(default_factory=list)  # [block, action, agent]
    rng_state: dict = field(default_factory=dict)
    last_day: int = 0
    last_tick: int = -1
    eth_baseline: int = 0
    rewards_injected: int = 0

    def total_eth(self) -> int:
        """ETH held by agents, pools, lenders and protocols."""
        return (
            sum(a.eth for a in self.accounts.values())
            + sum(p.eth_reserve() for p in self.pools.values())
            + sum(p.held_eth() for p in self.protocols.values())
            + sum(lender.liquidity for lender in self.lenders.values())
        )

    def to_dict(self) -> dict:
        return {
            "block": self.block,
            "timestamp": self.timestamp,
            "protocols": {k: protocol_to_dict(v) for k, v in self.protocols.items()},
            "pools": {k: pool_to_dict(v) for k, v in self.pools.items()},
            "pool_protocol": dict(self.pool_protocol),
            "accounts": {k: canonical.loads(canonical.dumps(v)) for k, v in self.accounts.items()},
            "lenders": {k: canonical.loads(canonical.dumps(v)) for k, v in self.lenders.items()},
            "pending": [list(p) for p in self.pending],
            "rng_state": self.rng_state,
            "last_day": self.last_day,
            "last_tick": self.last_tick,
            "eth_baseline": self.eth_baseline,
            "rewards_injected": self.rewards_injected,
        }

    @classmethod
    def from_dict(cls, data: dict) -> WorldState:
        data = dict(data)
        data["protocols"] = {k: protocol_from_dict(v) for k, v in data["protocols"].items()}
        data["pools"] = {k: pool_from_dict(v) for k, v in data["pools"].items()}
        data["accounts"] = {k: Account(**v) for k, v in data["accounts"].items()}
        data["lenders"] = {k: FlashLender(**v) for k, v in data["lenders"].items()}
        return cls(**data)


def snapshot(state: WorldState) -> bytes:
    """Canonical, self-checking encoding of the world state."""
    body = canonical.dumps(state.to_dict()).encode()
    digest = hashlib.sha256(body).hexdigest()
    return f"{SNAPSHOT_MAGIC} {digest} {len(body)}\n".encode() + body


def restore(blob: bytes) -> WorldState:
    header, sep, body = blob.partition(b"\n")
    parts = header.decode("ascii", "replace").split(" ")
    if not sep or len(parts) != 3 or parts[0] != SNAPSHOT_MAGIC:
        raise CorruptSnapshot("missing or malformed snapshot header")
    if not parts[2].isdigit() or int(parts[2]) != len(body):
        raise CorruptSnapshot(f"snapshot body is {len(body)} bytes, header says {parts[2]}")
    if hashlib.sha256(body).hexdigest() != parts[1]:
        raise CorruptSnapshot("snapshot checksum mismatch")
    try:
        return WorldState.from_dict(canonical.loads(body.decode()))
    except (ValueError, KeyError, TypeError) as exc:
        raise CorruptSnapshot(f"cannot decode snapshot: {exc}") from None


# -- random draws --------------------------------------------------------


class Draws:
    """Integer-only sampling on top of numpy's PCG64 bit generator."""

    def __init__(self, seed: int):
        self.bitgen = np.random.PCG64(seed)

    def word(self) -> int:
        return int(self.bitgen.random_raw())

    def below(self, n: int) -> int:
        """Uniform integer in [0, n) by rejection on 128-bit words."""
        if n <= 0:
            raise ValueError("n must be positive")
        space = 1 << 128
        limit = space - space % n
        while True:
            x = (self.word() << 64) | self.word()
            if x < limit:
                return x % n

    def chance(self, p_wad: int) -> bool:
        """True with probability ``p_wad / 1e18``."""
        return self.below(WAD) < p_wad

    def between(self, lo: int, hi: int) -> int:
        return lo + self.below(hi - lo + 1)


# -- engine --------------------------------------------------------------


def _share_rate(protocol: Protocol) -> int:
    return protocol.share_price if isinstance(protocol, RebasingLsd) else protocol.exchange_rate()


class Engine:
    """Owns the world, its trace and samples while a scenario runs."""

    def __init__(self, config: ScenarioConfig):
        self.config = config
        self.trace = EventTrace()
        self.ticks = TickSeries()
        self.histories: dict[str, PriceHistory] = {}
        self.draws = Draws(config.seed)
        self.noise = {a.name: a for a in config.noise_traders}
        self.arbs = {a.name: a for a in config.arbitrageurs}
        self.lps = {a.name: a for a in config.lps}
        self.world = self._genesis()

    @classmethod
    def resume(cls, config: ScenarioConfig, blob: bytes) -> Engine:
        """Continue a run from a snapshot taken between blocks."""
        engine = cls(config)
        engine.world = restore(blob)
        engine.draws.bitgen.state = engine.world.rng_state
        return engine

    # -- setup ----------------------------------------------------------

    def _genesis(self) -> WorldState:
        cfg = self.config
        w = WorldState(block=0, timestamp=cfg.start_timestamp)
        for p in cfg.protocols:
            if p.mechanism == REBASING:
                lsd: Protocol = RebasingLsd(protocol_fee=p.protocol_fee, name=p.name)
                lsd.stake(GENESIS, p.initial_stake)
            else:
                lsd = RewardBearingLsd(
                    deposit_pool=DepositPool(p.deposit_pool_balance, p.deposit_pool_cap), name=p.name
                )
                lsd.genesis_mint(GENESIS, p.initial_stake)
            w.protocols[p.name] = lsd
        for p in cfg.pools:
            lsd = w.protocols[p.protocol]
            w.pools[p.name] = self._make_pool(p, lsd)
            w.pool_protocol[p.name] = p.protocol
            self.histories[p.name] = PriceHistory(lsd.mechanism)
        for a in (*cfg.noise_traders, *cfg.arbitrageurs, *cfg.lps):
            w.accounts[a.name] = Account(a.name, a.eth)
            lsd_amount = getattr(a, "lsd", 0)
            if lsd_amount:
                w.protocols[w.pool_protocol[a.pool]].transfer(GENESIS, a.name, lsd_amount)
        for a in cfg.arbitrageurs:
            if a.flash_liquidity:
                w.lenders[a.name] = FlashLender(f"{a.name}-lender", a.flash_liquidity, a.flash_fee)
        w.accounts[GAS_SINK] = Account(GAS_SINK, 0)
        for lp in cfg.lps:
            w.pending.append([lp.deposit_block, "deposit", lp.name])
            w.pending.append([lp.withdraw_block, "withdraw", lp.name])
        w.pending.sort(key=lambda e: (e[0], e[1] != "withdraw"))
        w.eth_baseline = w.total_eth()
        w.rng_state = self.draws.bitgen.state
        return w

    @staticmethod
    def _make_pool(p: PoolConfig, lsd: Protocol) -> Pool:
        amounts = list(p.balances)
        if p.kind == "stableswap":
            pool: Pool = StableswapPool(amp=p.amp, fee_bps=p.fee_bps, name=p.name)
            pool.add_liquidity(GENESIS, amounts)
        elif p.kind == "weighted":
            pool = WeightedPool(fee_bps=p.fee_bps, name=p.name)
            pool.add_liquidity(GENESIS, amounts)
        else:
            price = mul_div(amounts[ETH], WAD, amounts[LSD])
            pool = ConcentratedPool.create(
                isqrt(price * WAD), isqrt(p.range_lower * WAD), isqrt(p.range_upper * WAD), p.fee_bps, name=p.name
            )
            _, used = pool.mint(GENESIS, *amounts)
            amounts = used
        lsd.transfer(GENESIS, p.name, amounts[LSD])
        sync_pool(lsd, pool)
        return pool

    # -- helpers --------------------------------------------------------

    def _market(self, pool_name: str) -> tuple[Protocol, Pool]:
        w = self.world
        return w.protocols[w.pool_protocol[pool_name]], w.pools[pool_name]

    def shapella_active(self) -> bool:
        return self.config.shapella_enabled and self.world.block >= self.config.shapella_block

    def _record_history(self, pool_name: str) -> None:
        lsd, pool = self._market(pool_name)
        self.histories[pool_name].record(self.world.timestamp, _share_rate(lsd), pool.spot_price())

    # -- per-block phases -----------------------------------------------

    def _inject_rewards(self) -> None:
        w = self.world
        day = (w.timestamp - self.config.start_timestamp) // SECONDS_PER_DAY
        while w.last_day < day:
            w.last_day += 1
            for p in self.config.protocols:
                lsd = w.protocols[p.name]
                reward = wad_mul(lsd.held_eth(), p.daily_reward_rate)
                if reward == 0:
                    continue
                with self.trace.tx(REWARDS_SENDER) as tx:
                    if isinstance(lsd, RebasingLsd):
                        lsd.rebase(reward)
                        tx.emit(EventKind.REBASE, lsd.name, reward, 0)
                    else:
                        lsd.accrue(reward)
                        tx.emit(EventKind.ACCRUE, lsd.name, reward, 0)
                w.rewards_injected += reward
                for pool_name, proto in w.pool_protocol.items():
                    if proto == p.name:
                        sync_pool(lsd, w.pools[pool_name])

    def _sample(self) -> None:
        w = self.world
        tick = (w.timestamp - self.config.start_timestamp) // TICK_SPACING
        if tick <= w.last_tick:
            return
        w.last_tick = tick
        if not self.config.tick_pool:
            return
        lsd, pool = self._market(self.config.tick_pool)
        self.ticks.append(Tick(w.timestamp, lsd.primary_rate(), pool.spot_price()))
        for name in w.pools:
            self._record_history(name)

    def _run_lps(self) -> None:
        w = self.world
        while w.pending and w.pending[0][0] <= w.block:
            _, action, name = w.pending.pop(0)
            lp = self.lps[name]
            try:
                if action == "deposit":
                    self._lp_deposit(lp)
                else:
                    self._lp_withdraw(lp)
            except LsdSimError:
                continue
            self._record_history(lp.pool)

    def _lp_deposit(self, lp: LpConfig) -> None:
        lsd, pool = self._market(lp.pool)
        trader, sink = self.world.accounts[lp.name], self.world.accounts[GAS_SINK]
        with atomic(lsd, pool, trader, sink, self.trace), self.trace.tx(lp.name) as tx:
            eth = lp.deposit_eth
            if isinstance(pool, ConcentratedPool):
                _, used = pool.mint(lp.name, lsd.balance_of(lp.name), eth)
            else:
                amounts = [mul_div(eth, pool.balances[LSD], pool.balances[ETH]), eth]
                pool.add_liquidity(lp.name, amounts)
                used = amounts
            trader.debit(used[ETH])
            lsd.transfer(lp.name, pool.name, used[LSD])
            sync_pool(lsd, pool)
            tx.emit(EventKind.ADD_LIQUIDITY, f"{pool.name}:LSD", used[LSD], 0)
            tx.emit(EventKind.ADD_LIQUIDITY, f"{pool.name}:ETH", used[ETH], 0)
            pay_gas(tx, trader, sink, lp.cost.cost())

    def _lp_withdraw(self, lp: LpConfig) -> None:
        lsd, pool = self._market(lp.pool)
        trader, sink = self.world.accounts[lp.name], self.world.accounts[GAS_SINK]
        with atomic(lsd, pool, trader, sink, self.trace), self.trace.tx(lp.name) as tx:
            if isinstance(pool, ConcentratedPool):
                burned = pool.positions[lp.name].liquidity if lp.name in pool.positions else 0
                out = pool.collect(lp.name)
            else:
                burned = pool.lp_balances.get(lp.name, 0)
                out = pool.remove_liquidity(lp.name, burned)
            trader.eth += out[ETH]
            lsd.transfer(pool.name, lp.name, out[LSD])
            sync_pool(lsd, pool)
            tx.emit(EventKind.REMOVE_LIQUIDITY, f"{pool.name}:LSD", burned, out[LSD])
            tx.emit(EventKind.REMOVE_LIQUIDITY, f"{pool.name}:ETH", burned, out[ETH])
            pay_gas(tx, trader, sink, lp.cost.cost())

    def _run_noise(self) -> None:
        w = self.world
        for a in self.config.noise_traders:
            # draw every variate whether or not the trade can go through
            trade = self.draws.chance(a.trade_probability)
            if not trade:
                continue
            sell = self.draws.chance(a.sell_bias)
            size = self.draws.between(a.min_size, a.max_size)
            lsd, pool = self._market(a.pool)
            trader, sink = w.accounts[a.name], w.accounts[GAS_SINK]
            try:
                with atomic(lsd, pool, trader, sink, self.trace), self.trace.tx(a.name) as tx:
                    if sell:
                        out = swap_lsd_for_eth(lsd, pool, trader, size)
                        tx.emit(EventKind.SWAP, swap_venue(pool.name, LSD), size, out)
                    else:
                        out = swap_eth_for_lsd(lsd, pool, trader, size)
                        tx.emit(EventKind.SWAP, swap_venue(pool.name, ETH), size, out)
                    pay_gas(tx, trader, sink, a.cost.cost())
            except LsdSimError:
                continue

    def _best_trade(self, a: ArbitrageurConfig) -> tuple[str, int, int] | None:
        lsd, pool = self._market(a.pool)
        trader = self.world.accounts[a.name]
        best = None
        for strategy in a.strategies:
            if strategy == "swap_unstake":
                if not self.shapella_active():
                    continue
                direction, flash_fee, budget = Direction.SWAP_UNSTAKE, 0, trader.eth - a.cost.cost()
            elif strategy == "flash_loan":
                lender = self.world.lenders[a.name]
                direction, flash_fee, budget = Direction.STAKE_SWAP, lender.fee, lender.liquidity
            else:
                direction, flash_fee, budget = Direction.STAKE_SWAP, 0, trader.eth - a.cost.cost()
            lo, hi = a.bounds[0], min(a.bounds[1], budget)
            if hi < lo:
                continue
            # gross profit is concave with f(0) = 0, so a losing smallest trade rules out all sizes
            probe = simulated_profit(lsd, pool, direction, lo, flash_fee=flash_fee)
            if probe is None or probe <= 0:
                continue
            size, profit = optimal_size(lsd, pool, direction, a.cost, (lo, hi), flash_fee)
            if size and profit > a.threshold and (best is None or profit > best[2]):
                best = (strategy, size, profit)
        return best

    def _run_arbs(self) -> None:
        w = self.world
        for a in self.config.arbitrageurs:
            choice = self._best_trade(a)
            if choice is None:
                continue
            strategy, size, _ = choice
            lsd, pool = self._market(a.pool)
            trader, sink = w.accounts[a.name], w.accounts[GAS_SINK]
            try:
                if strategy == "stake_swap":
                    arb_stake_swap(lsd, pool, size, a.cost, trader, self.trace, sink)
                elif strategy == "flash_loan":
                    arb_flash_loan(w.lenders[a.name], lsd, pool, size, None, a.cost, trader, self.trace, sink)
                else:
                    arb_swap_unstake(lsd, pool, size, a.cost, True, trader, self.trace, sink)
            except LsdSimError:
                continue

    def check_conservation(self) -> None:
        w = self.world
        expected = w.eth_baseline + w.rewards_injected
        actual = w.total_eth()
        if actual != expected:
            raise InvariantViolation(f"block {w.block}: ETH total {actual} != {expected}")

    def step(self) -> None:
        """Advance the world by one block."""
        w = self.world
        self.trace.advance(w.block, w.timestamp)
        self._inject_rewards()
        self._sample()
        self._run_lps()
        self._run_noise()
        self._run_arbs()
        self.check_conservation()
        w.rng_state = self.draws.bitgen.state
        w.block += 1
        w.timestamp += self.config.block_time

    def run(self) -> tuple[EventTrace, TickSeries, WorldState]:
        while self.world.block < self.config.horizon:
            self.step()
        return self.trace, self.ticks, self.world

    def manifest(self) -> dict:
        return {
            "version": __version__,
            "seed": self.config.seed,
            "config_sha256": self.config.config_hash,
            "horizon_blocks": self.config.horizon,
            "block_time": self.config.block_time,
            "start_timestamp": self.config.start_timestamp,
            "shapella_timestamp": self.config.shapella_timestamp if self.config.shapella_enabled else None,
            "rng": "numpy PCG64, integer rejection sampling on 128-bit words",
            "events": len(self.trace),
            "ticks": len(self.ticks.ticks),
            "rewards_injected_wei": self.world.rewards_injected,
            "gas_burned_wei": self.world.accounts[GAS_SINK].eth,
        }


def run(config: ScenarioConfig) -> tuple[EventTrace, TickSeries, WorldState]:
    """Run a scenario to its horizon."""
    return Engine(config).run()
