"""Experiment runner: paired strategy comparison, load sweep, state-dimension sweep.

Seed derivation (per experiment seed ``s``), shared by every strategy so runs
are paired:

* evaluation trace: ``SeedSequence([s, 0])``
* environment draws (network quality, channel access): ``SeedSequence([s, 1])``
* Random baseline, device ``i``: ``SeedSequence([s, 2, i])``
* DQN training traces / environments, episode ``e``: ``[s, 3, e]`` / ``[s, 4, e]``
* DQN agent stream: ``SeedSequence([s, 5])``
* padding noise in the dimension sweep, episode ``e``: ``[s, 6, e]``
"""

from __future__ import annotations

import csv
import io
import json
import math
import statistics
from dataclasses import dataclass, field, fields, replace
from pathlib import Path
from typing import Callable

import numpy as np

from .baselines import STRATEGIES, make_baseline
from .dqn import AgentHyperparams, QNetwork, forward, train
from .graph import TOPOLOGIES, CollabGraph, NeighborConditioner, build_graph
from .sim import EdgeEnv, EnvConfig, RewardWeights
from .workload import LoadTier, Trace, generate_trace, load_trace

COMPARISON_HEADER = ["strategy", "seed", "avg_energy_mwh", "avg_delay_ms", "edge_utilization_pct"]
LOAD_SWEEP_HEADER = ["tier", *COMPARISON_HEADER]
DIM_SWEEP_HEADER = ["dim", "seed", "episode", "loss"]

BASE_FEATURES = 4  # load, battery, queue, network
CORE_FEATURES = 5  # ... plus edge occupancy
NOISE_AMPLITUDE = 0.05


class ConfigError(ValueError):
    """Invalid experiment configuration; ``problems`` lists every violation."""

    def __init__(self, problems: list[str]):
        self.problems = list(problems)
        super().__init__("invalid config:\n  " + "\n  ".join(self.problems))


# ---------------------------------------------------------------- config


_ENV_KEYS = {
    f.name for f in fields(EnvConfig) if f.name not in ("n_devices", "n_edge_nodes", "horizon", "weights")
}
_AGENT_KEYS = {f.name for f in fields(AgentHyperparams)}
_WEIGHT_KEYS = {f.name for f in fields(RewardWeights)}


@dataclass
class ExperimentConfig:
    n_devices: int = 8
    n_edge_nodes: int = 2
    topology: str | list = "edge-cluster"
    strategies: tuple[str, ...] = STRATEGIES
    load_tier: str = "medium"
    trace_path: str | None = None
    reward_weights: RewardWeights = field(default_factory=RewardWeights)
    agent: AgentHyperparams = field(default_factory=AgentHyperparams)
    env: dict = field(default_factory=dict)  # overrides of other EnvConfig constants
    episodes: int = 300
    horizon: int = 200
    seeds: tuple[int, ...] = tuple(range(10))
    output_dir: str = "results"
    aggregation: str = "mean"
    agg_stride: int = 1
    dims: tuple[int, ...] = (4, 8, 16, 32, 64)
    dim_episodes: int | None = 200  # None means ``episodes``
    dim_load_tier: str = "low"  # low load keeps the TD-loss noise floor below the threshold
    threshold_fraction: float = 0.5
    smoothing_window: int = 10

    def env_config(self) -> EnvConfig:
        return EnvConfig(
            n_devices=self.n_devices,
            n_edge_nodes=self.n_edge_nodes,
            horizon=self.horizon,
            weights=self.reward_weights,
            **self.env,
        )

    def graph(self) -> CollabGraph:
        return build_graph(self.n_devices, self.topology, self.n_edge_nodes)

    def tier(self) -> LoadTier:
        return LoadTier.parse(self.load_tier)

    def to_dict(self) -> dict:
        return {
            "n_devices": self.n_devices,
            "n_edge_nodes": self.n_edge_nodes,
            "topology": self.topology,
            "strategies": list(self.strategies),
            "load_tier": self.load_tier,
            "trace_path": self.trace_path,
            "reward_weights": {k: getattr(self.reward_weights, k) for k in sorted(_WEIGHT_KEYS)},
            "agent": {
                k: (list(v) if isinstance(v, tuple) else v)
                for k, v in sorted(vars(self.agent).items())
            },
            "env": dict(sorted(self.env.items())),
            "episodes": self.episodes,
            "horizon": self.horizon,
            "seeds": list(self.seeds),
            "output_dir": self.output_dir,
            "aggregation": self.aggregation,
            "agg_stride": self.agg_stride,
            "dims": list(self.dims),
            "dim_episodes": self.dim_episodes,
            "dim_load_tier": self.dim_load_tier,
            "threshold_fraction": self.threshold_fraction,
            "smoothing_window": self.smoothing_window,
        }


_TOP_KEYS = {f.name for f in fields(ExperimentConfig)}


def _is_int(v) -> bool:
    return isinstance(v, int) and not isinstance(v, bool)


def _is_num(v) -> bool:
    return isinstance(v, (int, float)) and not isinstance(v, bool)


def config_from_dict(doc: dict, base_dir: Path | None = None) -> ExperimentConfig:
    """Validate a parsed JSON document; every problem is collected before raising."""
    if not isinstance(doc, dict):
        raise ConfigError(["top level must be a JSON object"])
    problems: list[str] = []
    for k in sorted(set(doc) - _TOP_KEYS):
        problems.append(f"unknown key {k!r}")
    kw: dict = {}

    for key in ("n_devices", "n_edge_nodes", "episodes", "horizon", "agg_stride", "smoothing_window"):
        if key in doc:
            v = doc[key]
            if not _is_int(v) or v < 1:
                problems.append(f"{key}: must be an integer >= 1, got {v!r}")
            else:
                kw[key] = v
    if "dim_episodes" in doc:
        v = doc["dim_episodes"]
        if v is None:
            kw["dim_episodes"] = None
        elif not _is_int(v) or v < 1:
            problems.append(f"dim_episodes: must be an integer >= 1, got {v!r}")
        else:
            kw["dim_episodes"] = v

    if "topology" in doc:
        v = doc["topology"]
        if isinstance(v, str):
            if v not in TOPOLOGIES:
                problems.append(f"topology: unknown {v!r}; expected one of {list(TOPOLOGIES)} or an edge list")
            else:
                kw["topology"] = v
        elif isinstance(v, list) and all(
            isinstance(e, list) and len(e) == 2 and all(_is_int(x) for x in e) for e in v
        ):
            kw["topology"] = [list(e) for e in v]
        else:
            problems.append("topology: must be a name or a list of [a, b] integer pairs")

    if "strategies" in doc:
        v = doc["strategies"]
        if not isinstance(v, list) or not v:
            problems.append("strategies: must be a nonempty list")
        else:
            bad = [s for s in v if s not in STRATEGIES]
            if bad:
                problems.append(f"strategies: unknown {bad}; expected a subset of {list(STRATEGIES)}")
            elif len(set(v)) != len(v):
                problems.append("strategies: duplicates")
            else:
                kw["strategies"] = tuple(s for s in STRATEGIES if s in v)

    for key in ("load_tier", "dim_load_tier"):
        if key in doc:
            try:
                LoadTier.parse(str(doc[key]))
                kw[key] = str(doc[key]).lower()
            except ValueError as exc:
                problems.append(f"{key}: {exc}")
    if doc.get("trace_path") is not None:
        v = doc["trace_path"]
        if not isinstance(v, str):
            problems.append("trace_path: must be a string")
        else:
            p = Path(v) if base_dir is None or Path(v).is_absolute() else base_dir / v
            if not p.is_file():
                problems.append(f"trace_path: file not found: {p}")
            else:
                kw["trace_path"] = str(p)

    if "reward_weights" in doc:
        v = doc["reward_weights"]
        if not isinstance(v, dict):
            problems.append("reward_weights: must be an object")
        else:
            for k in sorted(set(v) - _WEIGHT_KEYS):
                problems.append(f"reward_weights: unknown key {k!r}")
            for k in sorted(set(v) & _WEIGHT_KEYS):
                if not _is_num(v[k]) or v[k] < 0:
                    problems.append(f"reward_weights.{k}: must be a number >= 0")
            if not any(p.startswith("reward_weights") for p in problems):
                kw["reward_weights"] = RewardWeights(**v)

    if "agent" in doc:
        v = doc["agent"]
        if not isinstance(v, dict):
            problems.append("agent: must be an object")
        else:
            for k in sorted(set(v) - _AGENT_KEYS):
                problems.append(f"agent: unknown key {k!r}")
            known = {k: v[k] for k in v if k in _AGENT_KEYS}
            if "hidden" in known and not (
                isinstance(known["hidden"], list) and all(_is_int(h) for h in known["hidden"])
            ):
                problems.append("agent.hidden: must be a list of integers")
            elif any(not _is_num(x) for k, x in known.items() if k != "hidden"):
                problems.append("agent: hyperparameters must be numbers")
            else:
                try:
                    kw["agent"] = AgentHyperparams(**known)
                except ValueError as exc:
                    problems.extend(f"agent: {m}" for m in str(exc).split("; "))

    if "env" in doc:
        v = doc["env"]
        if not isinstance(v, dict):
            problems.append("env: must be an object")
        else:
            for k in sorted(set(v) - _ENV_KEYS):
                problems.append(f"env: unknown key {k!r}")
            bad = [k for k in v if k in _ENV_KEYS and not _is_num(v[k])]
            problems.extend(f"env.{k}: must be a number" for k in sorted(bad))
            kw["env"] = {k: v[k] for k in v if k in _ENV_KEYS and k not in bad}

    if "seeds" in doc:
        v = doc["seeds"]
        if not isinstance(v, list) or not v:
            problems.append("seeds: must be a nonempty list of integers")
        elif not all(_is_int(s) and s >= 0 for s in v):
            problems.append("seeds: entries must be integers >= 0")
        elif len(set(v)) != len(v):
            problems.append("seeds: duplicates")
        else:
            kw["seeds"] = tuple(v)
    if "dims" in doc:
        v = doc["dims"]
        if not isinstance(v, list) or not v or not all(_is_int(d) for d in v):
            problems.append("dims: must be a nonempty list of integers")
        elif min(v) < BASE_FEATURES:
            problems.append(f"dims: every dim must be >= {BASE_FEATURES}")
        else:
            kw["dims"] = tuple(sorted(set(v)))

    if "output_dir" in doc:
        if not isinstance(doc["output_dir"], str):
            problems.append("output_dir: must be a string")
        else:
            kw["output_dir"] = doc["output_dir"]
    if "aggregation" in doc:
        if doc["aggregation"] not in ("mean", "max"):
            problems.append("aggregation: must be 'mean' or 'max'")
        else:
            kw["aggregation"] = doc["aggregation"]
    if "threshold_fraction" in doc:
        v = doc["threshold_fraction"]
        if not _is_num(v) or not v > 0:
            problems.append("threshold_fraction: must be a number > 0")
        else:
            kw["threshold_fraction"] = float(v)

    if not problems:
        cfg = ExperimentConfig(**kw)
        try:
            cfg.env_config()
        except ValueError as exc:
            problems.append(f"env: {exc}")
        try:
            cfg.graph()
        except ValueError as exc:
            problems.append(f"topology: {exc}")
        if cfg.trace_path is not None:
            try:
                load_trace(cfg.trace_path, cfg.horizon, cfg.n_devices)
            except (ValueError, OSError) as exc:
                problems.append(f"trace_path: {exc}")
    if problems:
        raise ConfigError(problems)
    return cfg


def load_config(path) -> ExperimentConfig:
    path = Path(path)
    try:
        doc = json.loads(path.read_text(encoding="utf-8"))
    except FileNotFoundError:
        raise ConfigError([f"config file not found: {path}"]) from None
    except json.JSONDecodeError as exc:
        raise ConfigError([f"{path}: malformed JSON ({exc})"]) from None
    return config_from_dict(doc, path.parent)


# ---------------------------------------------------------------- running


@dataclass
class RunMetrics:
    strategy: str
    seed: int
    avg_energy_mwh: float
    avg_delay_ms: float
    edge_utilization_pct: float
    trace_checksum: str = ""


@dataclass
class RunResult:
    metrics: RunMetrics
    step_energy: np.ndarray  # (steps, n_devices), raw per-step energies
    step_utilization: np.ndarray  # (steps,)
    completed_delays: list[float]


@dataclass
class MetricsReport:
    rows: list[RunMetrics] = field(default_factory=list)

    def strategies(self) -> list[str]:
        present = {r.strategy for r in self.rows}
        return [s for s in STRATEGIES if s in present]

    def values(self, strategy: str, metric: str) -> list[float]:
        return [getattr(r, metric) for r in self.rows if r.strategy == strategy]

    def mean(self, strategy: str, metric: str) -> float:
        return statistics.fmean(self.values(strategy, metric))

    def summary(self) -> dict:
        out = {}
        for s in self.strategies():
            out[s] = {}
            for m in COMPARISON_HEADER[2:]:
                v = self.values(s, m)
                out[s][m] = {"mean": statistics.fmean(v), "stdev": statistics.stdev(v) if len(v) > 1 else 0.0}
        return out

    def sorted(self) -> "MetricsReport":
        order = {s: k for k, s in enumerate(STRATEGIES)}
        return MetricsReport(sorted(self.rows, key=lambda r: (order[r.strategy], r.seed)))


@dataclass
class DimSweepResult:
    curves: dict[tuple[int, int], list[float]] = field(default_factory=dict)  # (dim, seed) -> losses
    threshold: float = float("nan")
    window: int = 10

    def dims(self) -> list[int]:
        return sorted({d for d, _ in self.curves})

    def seeds(self) -> list[int]:
        return sorted({s for _, s in self.curves})

    def initial_loss(self, dim: int) -> float:
        return statistics.fmean(_first_finite(self.curves[(dim, s)]) for s in self.seeds())

    def episodes_to_threshold(self, dim: int, seed: int) -> int:
        return episodes_to_threshold(self.curves[(dim, seed)], self.threshold, self.window)

    def mean_episodes_to_threshold(self, dim: int) -> float:
        return statistics.fmean(self.episodes_to_threshold(dim, s) for s in self.seeds())


@dataclass
class Report:
    """Everything ``emit_report`` can write; absent parts are left untouched on disk."""

    comparison: MetricsReport | None = None
    trace_checksums: dict[int, str] = field(default_factory=dict)
    load_sweep: dict[str, MetricsReport] | None = None
    dim_sweep: DimSweepResult | None = None


def _first_finite(xs) -> float:
    for x in xs:
        if math.isfinite(x):
            return x
    return float("nan")


def moving_average(xs, window: int) -> np.ndarray:
    """Trailing mean over full windows; element ``k`` covers episodes ``k .. k+window-1``."""
    xs = np.asarray(xs, dtype=float)
    if window < 1:
        raise ValueError("window must be >= 1")
    if len(xs) < window:
        return np.empty(0)
    return np.lib.stride_tricks.sliding_window_view(xs, window).mean(axis=1)


def episodes_to_threshold(losses, threshold: float, window: int = 10) -> int:
    """Episodes trained until the ``window``-episode average first drops below ``threshold``.

    Returns ``len(losses) + 1`` when it never does (censored).
    """
    losses = np.asarray(losses, dtype=float)
    losses = np.where(np.isfinite(losses), losses, np.inf)
    smooth = moving_average(losses, window)
    hits = np.nonzero(smooth < threshold)[0]
    return int(hits[0]) + window if len(hits) else len(losses) + 1


def _eval_trace(cfg: ExperimentConfig, tier: LoadTier, seed: int) -> Trace:
    if cfg.trace_path is not None:
        return load_trace(cfg.trace_path, cfg.horizon, cfg.n_devices)
    return generate_trace(cfg.n_devices, tier, cfg.horizon, np.random.SeedSequence([seed, 0]))


def _rollout(env: EdgeEnv, decide_all: Callable[[np.ndarray], list]) -> RunResult:
    energies, utils, delays = [], [], []
    while not env.done:
        before = env.stats.completed_delay_ms
        out = env.step(decide_all(env.observe_all()))
        energies.append(out.energy_mwh.copy())
        utils.append(out.edge_utilization)
        delays.append(env.stats.completed_delay_ms - before)
    st = env.stats
    metrics = RunMetrics("", 0, st.avg_energy_per_device, st.avg_delay_ms, st.utilization_pct)
    return RunResult(metrics, np.array(energies), np.array(utils), delays)


def train_agent(cfg: ExperimentConfig, tier: LoadTier, seed: int, env_cfg: EnvConfig | None = None):
    env_cfg = env_cfg or cfg.env_config()
    fixed = load_trace(cfg.trace_path, cfg.horizon, cfg.n_devices) if cfg.trace_path else None

    def factory(ep: int) -> EdgeEnv:
        tr = fixed or generate_trace(cfg.n_devices, tier, cfg.horizon, np.random.SeedSequence([seed, 3, ep]))
        return EdgeEnv(env_cfg, tr, np.random.SeedSequence([seed, 4, ep]))

    return train(
        factory, cfg.graph(), cfg.agent, cfg.episodes, np.random.SeedSequence([seed, 5]),
        aggregation=cfg.aggregation, agg_stride=cfg.agg_stride,
    )


def run_strategy(
    cfg: ExperimentConfig,
    strategy: str,
    seed: int,
    tier: LoadTier | None = None,
    net: QNetwork | None = None,
) -> RunResult:
    """One paired evaluation run. For ``dqn`` an agent is trained unless ``net`` is given."""
    tier = tier or cfg.tier()
    env_cfg = cfg.env_config()
    trace = _eval_trace(cfg, tier, seed)
    env = EdgeEnv(env_cfg, trace, np.random.SeedSequence([seed, 1]))
    if strategy == "dqn":
        if net is None:
            net = train_agent(cfg, tier, seed, env_cfg).net
        cond = NeighborConditioner(cfg.graph(), cfg.aggregation, cfg.agg_stride)

        def decide_all(feats):
            return np.argmax(forward(net, cond(feats)), axis=1)
    else:
        policies = [
            make_baseline(strategy, np.random.SeedSequence([seed, 2, i])) for i in range(cfg.n_devices)
        ]

        def decide_all(feats):
            return [p.decide(row) for p, row in zip(policies, feats)]

    res = _rollout(env, decide_all)
    res.metrics.strategy = strategy
    res.metrics.seed = seed
    res.metrics.trace_checksum = trace.checksum()
    return res


def run_comparison(cfg: ExperimentConfig, tier: LoadTier | None = None, on_run=None) -> MetricsReport:
    """All configured strategies on identical traces per seed, rows in fixed order."""
    rows = []
    for seed in cfg.seeds:
        for strategy in cfg.strategies:
            res = run_strategy(cfg, strategy, seed, tier)
            rows.append(res.metrics)
            if on_run is not None:
                on_run(res)
    return MetricsReport(rows).sorted()


def run_load_sweep(cfg: ExperimentConfig, tiers, on_run=None) -> dict[str, MetricsReport]:
    tiers = [t if isinstance(t, LoadTier) else LoadTier.parse(t) for t in tiers]
    if not tiers:
        raise ValueError("need at least one tier")
    if cfg.trace_path is not None:
        raise ConfigError(["trace_path: a load sweep generates its own traces; remove trace_path"])
    tiers = sorted(set(tiers), key=lambda t: t.rate)
    return {t.name.lower(): run_comparison(cfg, t, on_run) for t in tiers}


class PaddedEnv:
    """Presents ``dim`` features per device instead of the core five.

    ``dim == 4`` drops edge occupancy. Larger dims keep all five core features
    and append channels alternating between lagged copies of the four base
    features (lag 1, 2, ...) and uniform noise in [0, NOISE_AMPLITUDE].
    """

    def __init__(self, env: EdgeEnv, dim: int, rng: np.random.Generator):
        if dim < BASE_FEATURES:
            raise ValueError(f"dim must be >= {BASE_FEATURES}")
        self.env = env
        self.dim = dim
        self.rng = rng
        extra = max(dim - CORE_FEATURES, 0)
        self._lagged = [(k // 2 % BASE_FEATURES, 1 + k // 2 // BASE_FEATURES) for k in range(0, extra, 2)]
        self._n_noise = extra // 2
        self._max_lag = max((lag for _, lag in self._lagged), default=0)
        self._history: list[np.ndarray] = []

    @property
    def n_devices(self) -> int:
        return self.env.n_devices

    @property
    def stats(self):
        return self.env.stats

    def step(self, actions):
        return self.env.step(actions)

    def observe_all(self) -> np.ndarray:
        core = self.env.observe_all()
        if self.dim <= CORE_FEATURES:
            return core[:, : self.dim].copy()
        if not self._history:
            self._history = [core] * (self._max_lag + 1)
        self._history = [core, *self._history[:-1]]
        cols = [core]
        noise = self.rng.uniform(0.0, NOISE_AMPLITUDE, size=(core.shape[0], self._n_noise))
        k_noise = 0
        for k in range(self.dim - CORE_FEATURES):
            if k % 2 == 0:
                feat, lag = self._lagged[k // 2]
                cols.append(self._history[lag][:, feat : feat + 1])
            else:
                cols.append(noise[:, k_noise : k_noise + 1])
                k_noise += 1
        return np.concatenate(cols, axis=1)


def dim_loss_curve(cfg: ExperimentConfig, dim: int, seed: int, tier: LoadTier | None = None) -> list[float]:
    tier = tier or LoadTier.parse(cfg.dim_load_tier)
    env_cfg = cfg.env_config()
    fixed = load_trace(cfg.trace_path, cfg.horizon, cfg.n_devices) if cfg.trace_path else None

    def factory(ep: int) -> PaddedEnv:
        tr = fixed or generate_trace(cfg.n_devices, tier, cfg.horizon, np.random.SeedSequence([seed, 3, ep]))
        env = EdgeEnv(env_cfg, tr, np.random.SeedSequence([seed, 4, ep]))
        return PaddedEnv(env, dim, np.random.default_rng(np.random.SeedSequence([seed, 6, ep])))

    episodes = cfg.dim_episodes or cfg.episodes
    res = train(
        factory, cfg.graph(), cfg.agent, episodes, np.random.SeedSequence([seed, 5]),
        aggregation=cfg.aggregation, agg_stride=cfg.agg_stride,
    )
    return [row.loss for row in res.log]


def run_dim_sweep(cfg: ExperimentConfig, dims=None) -> DimSweepResult:
    """Per-dim, per-seed loss curves. The threshold is ``threshold_fraction`` of the
    smallest dim's mean initial-episode loss."""
    dims = sorted(set(dims or cfg.dims))
    if not dims:
        raise ValueError("need at least one dim")
    if dims[0] < BASE_FEATURES:
        raise ConfigError([f"dims: every dim must be >= {BASE_FEATURES}"])
    out = DimSweepResult(window=cfg.smoothing_window)
    for dim in dims:
        for seed in cfg.seeds:
            out.curves[(dim, seed)] = dim_loss_curve(cfg, dim, seed)
    out.threshold = cfg.threshold_fraction * out.initial_loss(dims[0])
    return out


# ---------------------------------------------------------------- output


def _num(x: float) -> str:
    return format(float(x), ".10g")


def _csv_text(header, rows) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    w.writerows(rows)
    return buf.getvalue()


def _metric_row(r: RunMetrics) -> list:
    return [r.strategy, r.seed, _num(r.avg_energy_mwh), _num(r.avg_delay_ms), _num(r.edge_utilization_pct)]


def _write(path: Path, text: str) -> None:
    try:
        path.write_text(text, encoding="utf-8", newline="\n")
    except OSError as exc:
        raise OSError(f"cannot write {path}: {exc.strerror or exc}") from exc


def emit_report(report: Report, out_dir) -> list[Path]:
    """Write the report's parts; an entirely empty report yields header-only CSVs."""
    out = Path(out_dir)
    try:
        out.mkdir(parents=True, exist_ok=True)
    except OSError as exc:
        raise OSError(f"cannot create output directory {out}: {exc.strerror or exc}") from exc
    empty = report.comparison is None and report.load_sweep is None and report.dim_sweep is None
    written = []

    if report.comparison is not None or empty:
        comp = (report.comparison or MetricsReport()).sorted()
        _write(out / "comparison.csv", _csv_text(COMPARISON_HEADER, [_metric_row(r) for r in comp.rows]))
        doc = {
            "rows": [
                {
                    "strategy": r.strategy,
                    "seed": r.seed,
                    "avg_energy_mwh": r.avg_energy_mwh,
                    "avg_delay_ms": r.avg_delay_ms,
                    "edge_utilization_pct": r.edge_utilization_pct,
                    "trace_checksum": r.trace_checksum,
                }
                for r in comp.rows
            ],
            "summary": comp.summary(),
            "trace_checksums": {str(k): v for k, v in sorted(report.trace_checksums.items())},
        }
        _write(out / "comparison.json", json.dumps(doc, indent=2, sort_keys=True) + "\n")
        written += [out / "comparison.csv", out / "comparison.json"]

    if report.load_sweep is not None or empty:
        sweep = report.load_sweep or {}
        order = sorted(sweep, key=lambda t: LoadTier.parse(t).rate)
        rows = [[t, *_metric_row(r)] for t in order for r in sweep[t].sorted().rows]
        _write(out / "load_sweep.csv", _csv_text(LOAD_SWEEP_HEADER, rows))
        written.append(out / "load_sweep.csv")

    if report.dim_sweep is not None or empty:
        ds = report.dim_sweep or DimSweepResult()
        rows = [
            [dim, seed, ep, _num(loss)]
            for (dim, seed) in sorted(ds.curves)
            for ep, loss in enumerate(ds.curves[(dim, seed)])
        ]
        _write(out / "dim_sweep.csv", _csv_text(DIM_SWEEP_HEADER, rows))
        written.append(out / "dim_sweep.csv")
    return written


def read_comparison_csv(path) -> MetricsReport:
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.DictReader(fh)
        if reader.fieldnames != COMPARISON_HEADER:
            raise ValueError(f"{path}: unexpected header {reader.fieldnames}")
        return MetricsReport(
            [
                RunMetrics(
                    row["strategy"], int(row["seed"]), float(row["avg_energy_mwh"]),
                    float(row["avg_delay_ms"]), float(row["edge_utilization_pct"]),
                )
                for row in reader
            ]
        )


def with_seeds(cfg: ExperimentConfig, n: int) -> ExperimentConfig:
    return replace(cfg, seeds=tuple(range(n)))
