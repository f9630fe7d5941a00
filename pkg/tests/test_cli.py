import hashlib
import json

import pytest

from helpers import SHAPELLA, busy_scenario, lp_scenario, planted_trace
from lsdsim.cli import main

E18 = 10**18


def digest(path):
    return hashlib.sha256(path.read_bytes()).hexdigest()


def write_json(path, data):
    path.write_text(json.dumps(data))
    return path


MINIMAL = {
    "seed": 3,
    "horizon": 60,
    "protocols": [{"name": "lido", "mechanism": "rebasing", "initialStake": "1000"}],
    "pools": [{"name": "curve", "kind": "stableswap", "protocol": "lido", "balances": {"lsd": "100", "eth": "100"}}],
}


def test_simulate_minimal_writes_three_files(tmp_path):
    cfg = write_json(tmp_path / "cfg.json", MINIMAL)
    out = tmp_path / "out"
    assert main(["simulate", "--config", str(cfg), "--out", str(out)]) == 0
    assert sorted(p.name for p in out.iterdir()) == ["manifest.json", "ticks.csv", "trace.csv"]
    manifest = json.loads((out / "manifest.json").read_text())
    assert manifest["seed"] == 3 and len(manifest["config_sha256"]) == 64 and manifest["version"]


def test_simulate_is_idempotent(tmp_path):
    cfg = write_json(tmp_path / "cfg.json", busy_scenario(horizon=800))
    for name in ("a", "b"):
        assert main(["simulate", "--config", str(cfg), "--out", str(tmp_path / name)]) == 0
    for f in ("trace.csv", "ticks.csv", "manifest.json", "histories.csv"):
        assert digest(tmp_path / "a" / f) == digest(tmp_path / "b" / f)


def test_simulate_missing_config(tmp_path, capsys):
    assert main(["simulate", "--config", str(tmp_path / "none.json"), "--out", str(tmp_path / "o")]) == 2
    assert "none.json" in capsys.readouterr().err
    assert not (tmp_path / "o").exists()


def test_simulate_config_error_names_field(tmp_path, capsys):
    bad = json.loads(json.dumps(MINIMAL))
    bad["pools"][0]["amp"] = 0
    cfg = write_json(tmp_path / "cfg.json", bad)
    assert main(["simulate", "--config", str(cfg), "--out", str(tmp_path / "o")]) == 2
    assert "pools[0].amp" in capsys.readouterr().err


def test_unknown_flag_is_an_error(tmp_path):
    with pytest.raises(SystemExit) as info:
        main(["metrics", "--ticks", "x", "--out", "y", "--verbose"])
    assert info.value.code == 2


def test_help_documents_exit_codes(capsys):
    with pytest.raises(SystemExit):
        main(["--help"])
    out = capsys.readouterr().out
    assert "exit codes" in out and "invariant violation" in out


def ticks_file(path, offset_pct=0, days=2):
    lines = ["timestamp,p1st_wad,p2nd_wad"]
    for i in range(144 * days):
        p1 = E18 + i * 10**14
        lines.append(f"{i * 600},{p1},{p1 * (100 + offset_pct) // 100}")
    path.write_text("\n".join(lines) + "\n")
    return path


def read_rows(path):
    return [line.split(",") for line in path.read_text().splitlines()[1:]]


def test_metrics_constant_offset(tmp_path):
    out = tmp_path / "m.csv"
    assert main(["metrics", "--ticks", str(ticks_file(tmp_path / "t.csv", 1)), "--out", str(out)]) == 0
    rows = read_rows(out)
    assert len(rows) == 2
    assert all(abs(float(r[4]) - 0.01) < 1e-12 for r in rows)


def test_metrics_constant_prices(tmp_path):
    path = tmp_path / "t.csv"
    path.write_text("timestamp,p1st_wad,p2nd_wad\n" + "".join(f"{i * 600},{E18},{E18}\n" for i in range(144)))
    out = tmp_path / "m.csv"
    assert main(["metrics", "--ticks", str(path), "--out", str(out)]) == 0
    [row] = read_rows(out)
    assert float(row[3]) == 0.0 and float(row[4]) == 0.0


@pytest.mark.parametrize("text", ["", "time,p1st_wad,p2nd_wad\n0,1,1\n", "timestamp,p1st_wad,p2nd_wad\n0,1\n"])
def test_metrics_schema_errors(tmp_path, text, capsys):
    path = tmp_path / "t.csv"
    path.write_text(text)
    assert main(["metrics", "--ticks", str(path), "--out", str(tmp_path / "m.csv")]) == 2
    assert capsys.readouterr().err
    assert not (tmp_path / "m.csv").exists()


def test_detect_planted_fixture(tmp_path):
    trace, expected = planted_trace(seed=4, total_events=300, n_staking=1, n_unstaking=1, near_misses=3)
    path = tmp_path / "trace.csv"
    path.write_text(trace.to_csv())
    out = tmp_path / "f.csv"
    assert main(["detect", "--trace", str(path), "--shapella", str(SHAPELLA), "--out", str(out)]) == 0
    rows = read_rows(out)
    assert len(rows) == 2
    assert {tuple(r[1].split(";")) for r in rows} == expected


def test_detect_wrong_header(tmp_path):
    path = tmp_path / "trace.csv"
    path.write_text("block,tx,hash\n")
    assert main(["detect", "--trace", str(path), "--shapella", "0", "--out", str(tmp_path / "f.csv")]) == 2


def test_lp_report_no_swap_fixture(tmp_path):
    cfg = write_json(tmp_path / "cfg.json", lp_scenario())
    sim = tmp_path / "sim"
    assert main(["simulate", "--config", str(cfg), "--out", str(sim)]) == 0
    out = tmp_path / "lp.csv"
    args = ["lp-report", "--trace", str(sim / "trace.csv"), "--histories", str(sim / "histories.csv"), "--out", str(out)]
    assert main(args) == 0
    lines = out.read_text().splitlines()
    assert lines[0].startswith("#")
    rows = [line.split(",") for line in lines[2:-1]]
    assert len(rows) == 6
    for r in rows:
        lp, hold = float(r[4]), float(r[6])
        assert abs(lp - hold) <= 1e-9 * max(abs(lp), abs(hold), 1e-300)
    assert lines[-1].startswith("aggregate")


def test_lp_report_wrong_history_header(tmp_path):
    trace = tmp_path / "trace.csv"
    trace.write_text(planted_trace(seed=0, total_events=20, n_staking=1, n_unstaking=1, near_misses=0)[0].to_csv())
    hist = tmp_path / "h.csv"
    hist.write_text("pool,mechanism,timestamp\n")
    assert main(["lp-report", "--trace", str(trace), "--histories", str(hist), "--out", str(tmp_path / "o.csv")]) == 2


def test_selfcheck_passes(capsys):
    assert main(["selfcheck"]) == 0
    out = capsys.readouterr().out
    assert "FAIL" not in out and out.count("PASS") >= 7


def test_selfcheck_reports_failures(monkeypatch, capsys):
    import lsdsim.selfcheck as sc

    monkeypatch.setattr(sc, "CHECKS", [("broken", lambda: (False, "forced"))])
    assert main(["selfcheck"]) == 1
    assert "FAIL broken" in capsys.readouterr().out
