"""Small market fixtures shared by the arbitrage and acceptance tests."""

from lsdsim.amm import LSD, StableswapPool, WeightedPool
from lsdsim.arbitrage import Account, FlashLender
from lsdsim.lsd import DepositPool, RebasingLsd, RewardBearingLsd

E18 = 10**18


def rocket_market(reserve_eth, reserve_lsd, rate_reward=0, fee_bps=0, cap=10**9 * E18, pool_balance=0):
    """Reward-bearing protocol with a weighted pool holding its LSD."""
    lsd = RewardBearingLsd(
        total_eth_staked=10**6 * E18,
        staking_reward_in_eth=rate_reward,
        total_supply=10**6 * E18,
        balances={"genesis": 10**6 * E18},
        deposit_pool=DepositPool(pool_balance, cap),
    )
    pool = WeightedPool([reserve_lsd, reserve_eth], fee_bps=fee_bps, name="balancer")
    lsd.transfer("genesis", pool.name, reserve_lsd)
    return lsd, pool


def lido_market(reserve_eth, reserve_lsd, amp=100, fee_bps=0, weighted=False):
    lsd = RebasingLsd(protocol_fee=10**17)
    lsd.stake("genesis", 10**6 * E18)
    if weighted:
        pool = WeightedPool([reserve_lsd, reserve_eth], fee_bps=fee_bps, name="curve")
    else:
        pool = StableswapPool([reserve_lsd, reserve_eth], amp=amp, fee_bps=fee_bps, name="curve")
    lsd.transfer("genesis", pool.name, reserve_lsd)
    pool.balances[LSD] = lsd.balance_of(pool.name)
    return lsd, pool


def trader(eth=10**4 * E18, name="arb"):
    return Account(name, eth)


def lender(liquidity=10**6 * E18, fee=0):
    return FlashLender("aave", liquidity, fee)


# -- synthetic traces ------------------------------------------------------

DAY = 86_400
TRACE_START = 1_680_000_000
SHAPELLA = TRACE_START + 30 * DAY


def planted_trace(seed=0, total_events=10_000, n_staking=50, n_unstaking=50, near_misses=50):
    """Trace with known arbitrages, adversarial near-misses and filler noise.

    Returns ``(trace, expected)`` where ``expected`` is the set of tx-hash
    tuples the detector must report.
    """
    import random

    from lsdsim.analytics.trace import BUY_LSD, SELL_LSD, EventKind, EventTrace

    rng = random.Random(seed)
    span = 120 * DAY
    used_ts = set()

    def ts(lo=TRACE_START, hi=TRACE_START + span):
        while True:
            t = rng.randrange(lo, hi)
            if t not in used_ts:
                used_ts.add(t)
                return t

    def amount():
        return rng.randrange(10**17, 10**21)

    txs = []  # (timestamp, sender, [(kind, venue, in, out)], tag)
    plants = []  # tags whose tx hashes form one expected finding
    for i in range(n_staking):
        m = amount()
        txs.append(
            (ts(), f"staker-{i}", [(EventKind.STAKE, "lido", m, m), (EventKind.SWAP, f"curve:{SELL_LSD}", m, m + m // 200)], ("s", i))
        )
        plants.append((("s", i),))
    for i in range(n_unstaking):
        m = amount()
        t0 = ts(SHAPELLA, TRACE_START + span - 11 * DAY)
        got = m + m // 50
        txs.append((t0, f"unstaker-{i}", [(EventKind.SWAP, f"curve:{BUY_LSD}", m, got)], ("u0", i)))
        txs.append((ts(t0 + 1, t0 + 10 * DAY), f"unstaker-{i}", [(EventKind.UNSTAKE, "lido", got, got)], ("u1", i)))
        plants.append((("u0", i), ("u1", i)))
    for i in range(near_misses):
        m = amount()
        # stake without a swap in the same tx, then the swap in a separate tx
        t0 = ts()
        txs.append((t0, f"lonely-{i}", [(EventKind.STAKE, "lido", m, m)], None))
        txs.append((ts(t0 + 1, t0 + DAY), f"lonely-{i}", [(EventKind.SWAP, f"curve:{SELL_LSD}", m, m)], None))
        # stake followed by a swap in the wrong direction
        txs.append((ts(), f"wrongdir-{i}", [(EventKind.STAKE, "lido", m, m), (EventKind.SWAP, f"curve:{BUY_LSD}", m, m)], None))
        # wrong sender: one buys, another unstakes the same amount
        t0 = ts(SHAPELLA, TRACE_START + span - 11 * DAY)
        txs.append((t0, f"buyer-{i}", [(EventKind.SWAP, f"curve:{BUY_LSD}", m, m)], None))
        txs.append((ts(t0 + 1, t0 + DAY), f"other-{i}", [(EventKind.UNSTAKE, "lido", m, m)], None))
        # pre-Shapella buy, unstaked after Shapella
        t0 = ts(TRACE_START, SHAPELLA - DAY)
        txs.append((t0, f"early-{i}", [(EventKind.SWAP, f"curve:{BUY_LSD}", m, m)], None))
        txs.append((ts(SHAPELLA, SHAPELLA + 10 * DAY), f"early-{i}", [(EventKind.UNSTAKE, "lido", m, m)], None))
        # amount off by 1%, and an unstake outside the 30-day window
        t0 = ts(SHAPELLA, TRACE_START + span - 40 * DAY)
        txs.append((t0, f"mismatch-{i}", [(EventKind.SWAP, f"curve:{BUY_LSD}", m, m)], None))
        txs.append((ts(t0 + 1, t0 + DAY), f"mismatch-{i}", [(EventKind.UNSTAKE, "lido", m + m // 100, m)], None))
        t0 = ts(SHAPELLA, TRACE_START + span - 40 * DAY)
        txs.append((t0, f"late-{i}", [(EventKind.SWAP, f"curve:{BUY_LSD}", m, m)], None))
        txs.append((ts(t0 + 31 * DAY, t0 + 35 * DAY), f"late-{i}", [(EventKind.UNSTAKE, "lido", m, m)], None))
    n = sum(len(t[2]) for t in txs)
    noise_kinds = [
        (EventKind.SWAP, f"curve:{SELL_LSD}"),
        (EventKind.SWAP, f"curve:{BUY_LSD}"),
        (EventKind.STAKE, "lido"),
        (EventKind.REBASE, "lido"),
        (EventKind.ADD_LIQUIDITY, "curve:ETH"),
    ]
    k = 0
    while n < total_events:
        kind, venue = rng.choice(noise_kinds)
        # buyers never unstake, so noise cannot complete an unstaking pattern
        txs.append((ts(), f"noise-{kind.value}-{k % 97}", [(kind, venue, amount(), amount())], None))
        n += 1
        k += 1
    trace = EventTrace()
    hashes = {}
    for t, sender, events, tag in sorted(txs, key=lambda x: x[0]):
        trace.advance((t - TRACE_START) // 12, t)
        with trace.tx(sender) as tx:
            for kind, venue, a_in, a_out in events:
                tx.emit(kind, venue, a_in, a_out)
        if tag is not None:
            hashes[tag] = tx.hash
    expected = {tuple(hashes[tag] for tag in plant) for plant in plants}
    return trace, expected


# -- scenario configs ------------------------------------------------------


def lp_scenario(flow=False, seed=11, days=6, block_time=3600):
    """Two protocols, two pools, several staggered LPs; optional one-sided sell flow."""
    per_day = DAY // block_time
    horizon = days * per_day
    lps = []
    for pool in ("curve", "balancer"):
        for i in range(3):
            lps.append(
                {
                    "name": f"{pool}-lp-{i}",
                    "pool": pool,
                    "eth": "500",
                    "lsd": "500",
                    "depositEth": str(50 * (i + 1)),
                    "depositBlock": 1 + i * per_day // 2,
                    "withdrawBlock": horizon - 1 - i * per_day // 3,
                }
            )
    noise = []
    if flow:
        for pool in ("curve", "balancer"):
            noise.append(
                {
                    "name": f"{pool}-seller",
                    "pool": pool,
                    "eth": "0",
                    "lsd": "4000",
                    "tradeProbability": "1",
                    "minSize": "5",
                    "maxSize": "15",
                    "sellBias": "1",
                }
            )
    fee = 4 if flow else 0
    return {
        "seed": seed,
        "horizon": horizon,
        "blockTime": block_time,
        "startTimestamp": TRACE_START,
        "protocols": [
            {"name": "lido", "mechanism": "rebasing", "protocolFee": "0.1", "dailyRewardRate": "0.0002", "initialStake": "100000"},
            {
                "name": "rocket",
                "mechanism": "reward_bearing",
                "dailyRewardRate": "0.0002",
                "initialStake": "100000",
                "depositPoolCap": "5000",
                "depositPoolBalance": "1000",
            },
        ],
        "pools": [
            {"name": "curve", "kind": "stableswap", "protocol": "lido", "balances": {"lsd": "3000", "eth": "3000"}, "feeBps": fee, "amp": 50},
            {"name": "balancer", "kind": "weighted", "protocol": "rocket", "balances": {"lsd": "3000", "eth": "3000"}, "feeBps": fee},
        ],
        "agents": {"lps": lps, "noiseTraders": noise},
    }


def busy_scenario(seed=7, horizon=10_000):
    """Noise, arbitrage and LP activity on a rebasing/stableswap market."""
    return {
        "seed": seed,
        "horizon": horizon,
        "blockTime": 12,
        "startTimestamp": TRACE_START,
        "protocols": [
            {"name": "lido", "mechanism": "rebasing", "protocolFee": "0.1", "dailyRewardRate": "0.0001", "initialStake": "100000"}
        ],
        "pools": [
            {"name": "curve", "kind": "stableswap", "protocol": "lido", "balances": {"lsd": "5000", "eth": "5000"}, "feeBps": 4, "amp": 50}
        ],
        "agents": {
            "noiseTraders": [
                {
                    "name": "noise-a",
                    "pool": "curve",
                    "eth": "2000",
                    "lsd": "2000",
                    "tradeProbability": "0.2",
                    "minSize": "0.5",
                    "maxSize": "40",
                    "sellBias": "0.55",
                }
            ],
            "arbitrageurs": [
                {
                    "name": "arb-1",
                    "pool": "curve",
                    "strategies": ["stake_swap", "swap_unstake"],
                    "eth": "1000",
                    "bounds": ["0.01", "500"],
                    "threshold": "0.001",
                    "cost": {"gasUnits": 250000, "gasPriceWei": 20000000000},
                }
            ],
            "lps": [
                {
                    "name": "lp-1",
                    "pool": "curve",
                    "eth": "300",
                    "lsd": "300",
                    "depositEth": "200",
                    "depositBlock": horizon // 10,
                    "withdrawBlock": horizon - horizon // 10 - 1,
                    "cost": {"gasUnits": 150000, "gasPriceWei": 20000000000},
                }
            ],
        },
        "flags": {"shapellaEnabled": True, "shapellaBlock": horizon // 2},
    }
