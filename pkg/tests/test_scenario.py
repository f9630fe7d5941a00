import copy
import json

import pytest
import yaml

from helpers import busy_scenario, lp_scenario
from lsdsim.analytics import EventKind
from lsdsim.arbitrage import FlashLender, arb_flash_loan
from lsdsim.errors import ConfigError, CorruptSnapshot, FlashLoanDefault
from lsdsim.scenario import GAS_SINK, Draws, Engine, load_config, parse_config, restore, run, snapshot

E18 = 10**18


def quiet_config(**overrides):
    cfg = {
        "seed": 1,
        "horizon": 100,
        "protocols": [{"name": "lido", "mechanism": "rebasing", "initialStake": "10000"}],
        "pools": [{"name": "curve", "kind": "stableswap", "protocol": "lido", "balances": {"lsd": "1000", "eth": "1000"}}],
    }
    cfg.update(overrides)
    return cfg


def discrepancy_config(cost_gas=200_000):
    # LSD trades cheap on the pool, so buying it and unstaking pays
    cfg = quiet_config(horizon=300)
    cfg["pools"][0]["balances"] = {"lsd": "1200", "eth": "800"}
    cfg["agents"] = {
        "arbitrageurs": [
            {
                "name": "arb",
                "pool": "curve",
                "strategies": ["swap_unstake"],
                "eth": "1000",
                "bounds": ["0.001", "1000"],
                "cost": {"gasUnits": cost_gas, "gasPriceWei": 10_000_000_000},
            }
        ]
    }
    return cfg


# -- config parsing ------------------------------------------------------


@pytest.mark.parametrize(
    "mutate, path",
    [
        (lambda c: c.pop("seed"), "seed"),
        (lambda c: c.update(horizon="ten"), "horizon"),
        (lambda c: c["pools"][0].update(kind="orderbook"), "pools[0].kind"),
        (lambda c: c["pools"][0].update(protocol="rocket"), "pools[0].protocol"),
        (lambda c: c["pools"][0]["balances"].update(eth="-1"), "pools[0].balances.eth"),
        (lambda c: c["protocols"][0].update(protocolFee="1.5"), "protocols[0].protocolFee"),
        (lambda c: c["protocols"][0].update(colour="red"), "protocols[0].colour"),
        (lambda c: c.update(agents={"lps": [{"name": "x", "pool": "nowhere"}]}), "agents.lps[0]"),
        (lambda c: c.update(flags={"shapellaEnabled": "yes"}), "flags.shapellaEnabled"),
        (lambda c: c["protocols"][0].update(initialStake="10"), "protocols[0].initialStake"),
        (lambda c: c["pools"][0].update(name="genesis"), "pools[0].name"),
    ],
)
def test_config_errors_name_the_field(mutate, path):
    cfg = quiet_config()
    mutate(cfg)
    with pytest.raises(ConfigError) as info:
        parse_config(cfg)
    assert info.value.path.startswith(path)


def test_concentrated_pool_rejects_rebasing_lsd():
    cfg = quiet_config()
    cfg["pools"][0].update(kind="concentrated", rangeLower="0.9", rangeUpper="1.1")
    with pytest.raises(ConfigError, match="reward_bearing"):
        parse_config(cfg)


def test_yaml_and_json_render_the_same_config(tmp_path):
    cfg = busy_scenario(horizon=50)
    (tmp_path / "a.json").write_text(json.dumps(cfg))
    (tmp_path / "a.yaml").write_text(yaml.safe_dump(cfg))
    a, b = load_config(tmp_path / "a.json"), load_config(tmp_path / "a.yaml")
    assert a == b and a.config_hash == b.config_hash


def test_missing_config_file(tmp_path):
    with pytest.raises(ConfigError):
        load_config(tmp_path / "nope.json")


# -- runs ----------------------------------------------------------------


def test_quiet_market_only_samples():
    trace, ticks, world = run(parse_config(quiet_config()))
    assert len(trace) == 0
    assert len(ticks.ticks) == 2  # 100 blocks * 12 s, one tick per 600 s
    assert len({(t.p1st, t.p2nd) for t in ticks.ticks}) == 1
    assert world.block == 100


def test_planted_discrepancy_is_arbitraged_once():
    trace, _, _ = run(parse_config(discrepancy_config()))
    swaps = [ev for ev in trace if ev.kind is EventKind.SWAP]
    unstakes = [ev for ev in trace if ev.kind is EventKind.UNSTAKE]
    assert len(swaps) == 1 and len(unstakes) == 1
    assert unstakes[0].amount_out > swaps[0].amount_in


def test_arbitrage_waits_for_shapella():
    cfg = discrepancy_config()
    cfg["flags"] = {"shapellaEnabled": True, "shapellaBlock": 120}
    trace, _, _ = run(parse_config(cfg))
    assert min(ev.block for ev in trace) == 120
    cfg["flags"] = {"shapellaEnabled": False}
    trace, _, _ = run(parse_config(cfg))
    assert len(trace) == 0


def test_same_seed_same_bytes():
    cfg = parse_config(busy_scenario(horizon=1_500))
    a, b = Engine(cfg), Engine(cfg)
    a.run(), b.run()
    assert a.trace.to_csv() == b.trace.to_csv()
    assert a.ticks.to_csv() == b.ticks.to_csv()
    assert snapshot(a.world) == snapshot(b.world)


def test_different_seed_changes_noise():
    a = run(parse_config(busy_scenario(seed=1, horizon=500)))[0]
    b = run(parse_config(busy_scenario(seed=2, horizon=500)))[0]
    assert a.to_csv() != b.to_csv()


def test_eth_conservation_is_checkable_from_trace():
    engine = Engine(parse_config(busy_scenario(horizon=8_000)))
    engine.run()
    w = engine.world
    rewards = sum(ev.amount_in for ev in engine.trace if ev.kind in (EventKind.REBASE, EventKind.ACCRUE))
    gas = sum(ev.amount_in for ev in engine.trace if ev.kind is EventKind.GAS)
    assert rewards == w.rewards_injected > 0
    assert gas == w.accounts[GAS_SINK].eth > 0
    assert w.total_eth() == w.eth_baseline + rewards


def test_trace_is_ordered_by_construction():
    engine = Engine(parse_config(busy_scenario(horizon=3_000)))
    engine.run()
    engine.trace.validate()


def test_lp_positions_close_within_horizon():
    engine = Engine(parse_config(lp_scenario()))
    trace, _, world = engine.run()
    adds = [ev for ev in trace if ev.kind is EventKind.ADD_LIQUIDITY]
    removes = [ev for ev in trace if ev.kind is EventKind.REMOVE_LIQUIDITY]
    assert len(adds) == len(removes) == 12
    for pool in world.pools.values():
        assert all(v == 0 for n, v in pool.lp_balances.items() if n != "genesis")


# -- snapshots -----------------------------------------------------------


def test_snapshot_round_trip():
    engine = Engine(parse_config(busy_scenario(horizon=400)))
    engine.run()
    blob = snapshot(engine.world)
    assert restore(blob) == engine.world
    assert snapshot(restore(blob)) == blob


def test_truncated_snapshot_is_rejected():
    blob = snapshot(Engine(parse_config(quiet_config())).world)
    for cut in (len(blob) - 1, len(blob) // 2, 10, 0):
        with pytest.raises(CorruptSnapshot):
            restore(blob[:cut])
    flipped = bytearray(blob)
    flipped[-5] ^= 1
    with pytest.raises(CorruptSnapshot):
        restore(bytes(flipped))


def test_restore_after_failed_flash_loan_matches_pre_state():
    engine = Engine(parse_config(busy_scenario(horizon=10)))
    engine.run()
    w = engine.world
    lsd, pool = w.protocols["lido"], w.pools["curve"]
    lender = FlashLender("aave", 10**6 * E18, 0)
    w.lenders["aave"] = lender
    before = snapshot(w)
    with pytest.raises(FlashLoanDefault):
        # the pool sits at the peg, so 1000 ETH staked and sold cannot repay
        arb_flash_loan(lender, lsd, pool, 1000 * E18, E18 // 100, engine.config.arbitrageurs[0].cost, w.accounts["arb-1"], engine.trace)
    assert snapshot(w) == before
    assert restore(before) == w


def test_restored_world_continues_identically():
    cfg = parse_config(busy_scenario(horizon=600))
    a = Engine(cfg)
    for _ in range(300):
        a.step()
    blob = snapshot(a.world)
    b = Engine.resume(cfg, blob)
    for _ in range(300):
        a.step()
        b.step()
    assert snapshot(a.world) == snapshot(b.world)


# -- random draws --------------------------------------------------------


def test_draws_are_reproducible_and_in_range():
    a, b = Draws(42), Draws(42)
    xs = [a.between(5, 10**21) for _ in range(200)]
    assert xs == [b.between(5, 10**21) for _ in range(200)]
    assert all(5 <= x <= 10**21 for x in xs)


def test_chance_extremes():
    d = Draws(0)
    assert not any(d.chance(0) for _ in range(100))
    assert all(d.chance(E18) for _ in range(100))


def test_config_object_is_not_mutated_by_run():
    raw = busy_scenario(horizon=50)
    kept = copy.deepcopy(raw)
    run(parse_config(raw))
    assert raw == kept
