import json

import pytest

from edgeq.cli import main
from edgeq.workload import load_trace

TINY = {
    "n_devices": 3,
    "n_edge_nodes": 1,
    "topology": "ring",
    "episodes": 2,
    "horizon": 12,
    "seeds": [0, 1],
    "agent": {"batch_size": 8, "hidden": [8], "target_sync_interval": 10},
}


@pytest.fixture
def tiny_config(tmp_path):
    p = tmp_path / "cfg.json"
    p.write_text(json.dumps(TINY))
    return p


def test_validate_ok(tiny_config, capsys):
    assert main(["validate-config", str(tiny_config)]) == 0
    assert "ok" in capsys.readouterr().out


def test_validate_lists_problems(tmp_path, capsys):
    p = tmp_path / "bad.json"
    p.write_text(json.dumps({"n_devices": -1, "colour": "red"}))
    assert main(["validate-config", str(p)]) == 2
    err = capsys.readouterr().err
    assert "n_devices" in err and "colour" in err


def test_missing_config_is_config_error(tmp_path):
    assert main(["compare", "--config", str(tmp_path / "none.json")]) == 2


def test_usage_error_exit_code():
    assert main(["compare"]) == 2
    assert main(["no-such-command"]) == 2


def test_compare_writes_outputs(tiny_config, tmp_path):
    out = tmp_path / "out"
    assert main(["compare", "--config", str(tiny_config), "--out", str(out), "--seeds", "1", "--quiet"]) == 0
    lines = (out / "comparison.csv").read_text().splitlines()
    assert lines[0] == "strategy,seed,avg_energy_mwh,avg_delay_ms,edge_utilization_pct"
    assert len(lines) == 1 + 5


def test_runtime_error_exit_code(tiny_config, tmp_path):
    blocker = tmp_path / "blocker"
    blocker.write_text("")
    assert main(["compare", "--config", str(tiny_config), "--out", str(blocker / "x"), "--quiet"]) == 1


def test_sweep_load_and_dim(tiny_config, tmp_path):
    out = tmp_path / "o"
    assert main(["sweep-load", "--config", str(tiny_config), "--tiers", "low,high", "--out", str(out),
                 "--quiet"]) == 0
    rows = (out / "load_sweep.csv").read_text().splitlines()
    assert rows[0].startswith("tier,strategy") and {r.split(",")[0] for r in rows[1:]} == {"low", "high"}
    assert main(["sweep-dim", "--config", str(tiny_config), "--dims", "4,8", "--out", str(out)]) == 0
    assert (out / "dim_sweep.csv").read_text().startswith("dim,seed,episode,loss\n4,0,0,")
    assert main(["sweep-load", "--config", str(tiny_config), "--tiers", "warm"]) == 2
    assert main(["sweep-dim", "--config", str(tiny_config), "--dims", "2"]) == 2


def test_gen_trace(tmp_path):
    p = tmp_path / "t.csv"
    assert main(["gen-trace", "--devices", "4", "--tier", "high", "--horizon", "50", "--seed", "3",
                 "--out", str(p)]) == 0
    tr = load_trace(p, horizon=50, n_devices=4)
    assert tr.n_tasks > 0
    assert main(["gen-trace", "--devices", "0", "--tier", "high", "--horizon", "50", "--seed", "3",
                 "--out", str(p)]) == 2
    assert main(["gen-trace", "--devices", "1", "--tier", "lukewarm", "--horizon", "5", "--seed", "3",
                 "--out", str(p)]) == 2
