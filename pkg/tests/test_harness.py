import json

import numpy as np
import pytest

from edgeq.dqn import AgentHyperparams
from edgeq.harness import (
    COMPARISON_HEADER,
    DIM_SWEEP_HEADER,
    LOAD_SWEEP_HEADER,
    ConfigError,
    DimSweepResult,
    ExperimentConfig,
    MetricsReport,
    PaddedEnv,
    Report,
    RunMetrics,
    config_from_dict,
    emit_report,
    episodes_to_threshold,
    load_config,
    moving_average,
    read_comparison_csv,
    run_comparison,
    run_dim_sweep,
    run_load_sweep,
    run_strategy,
)
from edgeq.sim import EdgeEnv, EnvConfig
from edgeq.workload import CSV_HEADER, Task, Trace, generate_trace, write_trace


def tiny(**kw) -> ExperimentConfig:
    base = dict(
        n_devices=3, n_edge_nodes=1, topology="ring", episodes=3, horizon=15, seeds=(0, 1),
        agent=AgentHyperparams(batch_size=8, hidden=(8,), target_sync_interval=10),
    )
    base.update(kw)
    return ExperimentConfig(**base)


# ---------------------------------------------------------------- config


def test_defaults_round_trip_through_dict():
    cfg = ExperimentConfig()
    assert config_from_dict(json.loads(json.dumps(cfg.to_dict()))) == cfg


def test_dim_keys():
    cfg = config_from_dict({"dim_episodes": None, "dim_load_tier": "HIGH"})
    assert cfg.dim_episodes is None and cfg.dim_load_tier == "high"
    with pytest.raises(ConfigError, match="dim_load_tier"):
        config_from_dict({"dim_load_tier": "extreme"})

def test_every_problem_listed():
    doc = {
        "n_devices": 0,
        "seeds": [],
        "strategies": ["dqn", "magic"],
        "agent": {"learning_rate": -1, "momentum": 0.9},
        "env": {"e_cpu": "x", "warp": 1},
        "typo_key": 1,
        "trace_path": "missing.csv",
    }
    with pytest.raises(ConfigError) as exc:
        config_from_dict(doc)
    text = "\n".join(exc.value.problems)
    for needle in ("n_devices", "seeds", "magic", "learning_rate", "momentum", "e_cpu", "warp", "typo_key",
                   "trace_path"):
        assert needle in text, needle
    assert len(exc.value.problems) >= 9


def test_env_constant_violations_surface():
    with pytest.raises(ConfigError) as exc:
        config_from_dict({"env": {"edge_capacity": -1.0}})
    assert "edge_capacity" in str(exc.value)


def test_trace_path_relative_to_config(tmp_path):
    write_trace(generate_trace(3, 0.5, 15, 1), tmp_path / "t.csv")
    (tmp_path / "c.json").write_text(json.dumps({"n_devices": 3, "horizon": 15, "trace_path": "t.csv"}))
    cfg = load_config(tmp_path / "c.json")
    assert cfg.trace_path == str(tmp_path / "t.csv")


def test_trace_path_must_parse(tmp_path):
    (tmp_path / "t.csv").write_text("bogus\n")
    with pytest.raises(ConfigError):
        config_from_dict({"trace_path": str(tmp_path / "t.csv")})


def test_load_config_errors(tmp_path):
    with pytest.raises(ConfigError):
        load_config(tmp_path / "absent.json")
    (tmp_path / "bad.json").write_text("{nope")
    with pytest.raises(ConfigError):
        load_config(tmp_path / "bad.json")


# ---------------------------------------------------------------- running


def test_single_strategy_single_seed_one_row():
    rep = run_comparison(tiny(strategies=("local",), seeds=(0,)))
    assert len(rep.rows) == 1 and rep.rows[0].strategy == "local"


def test_rows_in_fixed_order_and_paired():
    cfg = tiny(strategies=("round_robin", "local", "dqn", "edge", "random"))
    rep = run_comparison(cfg)
    assert [(r.strategy, r.seed) for r in rep.rows] == [
        (s, seed) for s in ("local", "edge", "random", "round_robin", "dqn") for seed in (0, 1)
    ]
    for seed in (0, 1):
        sums = {r.trace_checksum for r in rep.rows if r.seed == seed}
        assert len(sums) == 1
    for r in rep.rows:
        assert 0.0 <= r.edge_utilization_pct <= 100.0


def test_metrics_recomputed_from_step_log():
    res = run_strategy(tiny(), "random", seed=4)
    m = res.metrics
    assert m.avg_energy_mwh == pytest.approx(res.step_energy.sum(axis=0).mean(), rel=1e-12)
    assert m.edge_utilization_pct == pytest.approx(100 * res.step_utilization.mean(), rel=1e-12)


def test_edge_uses_edge_at_least_as_much_as_local():
    rep = run_comparison(tiny(strategies=("local", "edge"), seeds=(0, 1, 2)))
    for seed in (0, 1, 2):
        loc = next(r for r in rep.rows if r.strategy == "local" and r.seed == seed)
        edg = next(r for r in rep.rows if r.strategy == "edge" and r.seed == seed)
        assert loc.edge_utilization_pct == 0.0
        assert edg.edge_utilization_pct >= loc.edge_utilization_pct


def test_offload_cheaper_hand_simulation(tmp_path):
    # One device, one task every other step, contention-free uplink, and a
    # transmit cost far below local compute for any task size.
    horizon = 8
    tasks = [Task(k, 2 * k, float(1 + k), 50.0 + 40 * k) for k in range(4)]
    trace = Trace(horizon, [tasks])
    path = tmp_path / "t.csv"
    write_trace(trace, path)
    env_over = {"e_cpu": 1.0, "e_tx": 0.001, "e_idle": 0.02, "e_hold": 0.05, "uplink_kb_per_step": float("inf")}
    cfg = ExperimentConfig(
        n_devices=1, n_edge_nodes=1, topology="ring", horizon=horizon, seeds=(7,),
        trace_path=str(path), env=env_over, strategies=("local", "edge"),
    )
    rep = run_comparison(cfg)
    local = rep.values("local", "avg_energy_mwh")[0]
    edge = rep.values("edge", "avg_energy_mwh")[0]

    # Oracle: the environment's quality stream is the first uniform block drawn from [seed, 1].
    quality = np.random.default_rng(np.random.SeedSequence([7, 1])).uniform(size=(horizon + 1, 1))[:, 0]
    expect_local = horizon * 0.02 + sum(1.0 * t.compute_demand for t in tasks)
    expect_edge = horizon * 0.02 + sum(0.001 * t.data_size * (2 - quality[t.arrival_step]) for t in tasks)
    assert local == pytest.approx(expect_local, rel=1e-12)
    assert edge == pytest.approx(expect_edge, rel=1e-12)
    assert edge < local


def test_load_sweep_keys_and_trace_rejection(tmp_path):
    sweep = run_load_sweep(tiny(strategies=("local",), seeds=(0,)), ["high", "low"])
    assert list(sweep) == ["low", "high"]
    write_trace(generate_trace(3, 0.5, 15, 1), tmp_path / "t.csv")
    with pytest.raises(ConfigError):
        run_load_sweep(tiny(trace_path=str(tmp_path / "t.csv")), ["low", "high"])


# ---------------------------------------------------------------- dimension sweep


@pytest.mark.parametrize("dim", [4, 5, 6, 8, 16, 64])
def test_padded_env_shapes(dim):
    cfg = EnvConfig(n_devices=3, n_edge_nodes=1, horizon=10)
    env = EdgeEnv(cfg, generate_trace(3, 0.9, 10, 2), 0)
    padded = PaddedEnv(env, dim, np.random.default_rng(0))
    core = env.observe_all()
    obs = padded.observe_all()
    assert obs.shape == (3, dim)
    keep = min(dim, 5)
    assert np.array_equal(obs[:, :keep], core[:, :keep])
    assert np.all(obs >= 0) and np.all(obs <= 1)


def test_padded_env_lags_previous_observation():
    cfg = EnvConfig(n_devices=2, n_edge_nodes=1, horizon=10)
    env = EdgeEnv(cfg, generate_trace(2, 0.9, 10, 2), 0)
    padded = PaddedEnv(env, 7, np.random.default_rng(0))
    first = padded.observe_all()
    assert np.array_equal(first[:, 5], first[:, 0])  # no history yet: lag repeats the present
    assert np.all(first[:, 6] <= 0.05)
    padded.step([0, 0])
    second = padded.observe_all()
    assert np.array_equal(second[:, 5], first[:, 0])


def test_padded_env_rejects_small_dim():
    env = EdgeEnv(EnvConfig(n_devices=1, n_edge_nodes=1, horizon=3), generate_trace(1, 0.5, 3, 0), 0)
    with pytest.raises(ValueError):
        PaddedEnv(env, 3, np.random.default_rng(0))


def test_moving_average_and_threshold():
    assert np.allclose(moving_average([1, 2, 3, 4], 2), [1.5, 2.5, 3.5])
    assert len(moving_average([1, 2], 3)) == 0
    losses = [10.0] * 5 + [1.0] * 10
    # window 5: averages over episodes 1..5 .. 5..9 fall 8.2, 6.4, 4.6, 2.8, 1.0; the 1.0 window ends at episode 10
    assert episodes_to_threshold(losses, 2.0, window=5) == 10
    assert episodes_to_threshold(losses, 0.5, window=5) == 16  # censored
    # a missing loss blocks only the windows that contain it
    assert episodes_to_threshold([np.nan, 0.1, 0.1], 1.0, window=2) == 3
    assert episodes_to_threshold([np.nan] * 3 + [0.1] * 20, 1.0, window=10) == 13


def test_dim_sweep_small():
    cfg = tiny(seeds=(0,), dim_episodes=3)
    res = run_dim_sweep(cfg, [8, 4])
    assert res.dims() == [4, 8]
    assert all(len(c) == 3 for c in res.curves.values())
    assert res.threshold == pytest.approx(0.5 * res.initial_loss(4))


# ---------------------------------------------------------------- output


def sample_report():
    rows = [
        RunMetrics("local", 0, 12.3456789012345, 101.5, 0.0, "aa"),
        RunMetrics("edge", 0, 1 / 3, 2 / 3, 42.125, "aa"),
        RunMetrics("local", 1, 13.0, 99.0, 0.0, "bb"),
        RunMetrics("edge", 1, 2.0, 3.0, 50.0, "bb"),
    ]
    return MetricsReport(rows)


def test_emit_round_trip(tmp_path):
    rep = sample_report()
    emit_report(Report(comparison=rep, trace_checksums={0: "aa", 1: "bb"}), tmp_path)
    back = read_comparison_csv(tmp_path / "comparison.csv")
    for a, b in zip(rep.sorted().rows, back.rows):
        assert (a.strategy, a.seed) == (b.strategy, b.seed)
        for m in COMPARISON_HEADER[2:]:
            assert getattr(b, m) == pytest.approx(getattr(a, m), rel=1e-6)
    doc = json.loads((tmp_path / "comparison.json").read_text())
    assert doc["trace_checksums"] == {"0": "aa", "1": "bb"}
    assert doc["summary"]["edge"]["avg_energy_mwh"]["mean"] == pytest.approx((1 / 3 + 2) / 2)


def test_emit_is_byte_stable(tmp_path):
    rep = sample_report()
    emit_report(Report(comparison=rep), tmp_path / "a")
    emit_report(Report(comparison=MetricsReport(list(reversed(rep.rows)))), tmp_path / "b")
    for name in ("comparison.csv", "comparison.json"):
        assert (tmp_path / "a" / name).read_bytes() == (tmp_path / "b" / name).read_bytes()


def test_empty_report_writes_headers(tmp_path):
    written = emit_report(Report(), tmp_path)
    assert {p.name for p in written} == {"comparison.csv", "comparison.json", "load_sweep.csv", "dim_sweep.csv"}
    assert (tmp_path / "comparison.csv").read_text() == ",".join(COMPARISON_HEADER) + "\n"
    assert (tmp_path / "load_sweep.csv").read_text() == ",".join(LOAD_SWEEP_HEADER) + "\n"
    assert (tmp_path / "dim_sweep.csv").read_text() == ",".join(DIM_SWEEP_HEADER) + "\n"


def test_dim_sweep_csv(tmp_path):
    ds = DimSweepResult({(8, 0): [2.0, 1.0], (4, 0): [float("nan"), 0.5]}, threshold=0.1)
    emit_report(Report(dim_sweep=ds), tmp_path)
    assert (tmp_path / "dim_sweep.csv").read_text().splitlines() == [
        "dim,seed,episode,loss", "4,0,0,nan", "4,0,1,0.5", "8,0,0,2", "8,0,1,1",
    ]
    assert not (tmp_path / "comparison.csv").exists()


def test_unwritable_output_names_path(tmp_path):
    blocker = tmp_path / "file"
    blocker.write_text("x")
    with pytest.raises(OSError, match="file"):
        emit_report(Report(), blocker / "sub")


def test_read_comparison_rejects_bad_header(tmp_path):
    (tmp_path / "c.csv").write_text(CSV_HEADER + "\n")
    with pytest.raises(ValueError):
        read_comparison_csv(tmp_path / "c.csv")
