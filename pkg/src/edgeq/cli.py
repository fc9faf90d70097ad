"""Command-line entry point: ``edgeq <command> ...``.

Exit codes: 0 success, 2 configuration error, 1 runtime error.
"""

from __future__ import annotations

import argparse
import sys
from dataclasses import replace
from pathlib import Path

from .harness import (
    ConfigError,
    Report,
    emit_report,
    load_config,
    run_comparison,
    run_dim_sweep,
    run_load_sweep,
)
from .workload import LoadTier, generate_trace, write_trace

EXIT_OK, EXIT_RUNTIME, EXIT_CONFIG = 0, 1, 2


def _csv_list(text: str, conv):
    try:
        return [conv(x.strip()) for x in text.split(",") if x.strip()]
    except ValueError as exc:
        raise ConfigError([str(exc)]) from None


def _out_dir(args, cfg) -> Path:
    return Path(args.out) if getattr(args, "out", None) else Path(cfg.output_dir)


def _progress(quiet: bool):
    if quiet:
        return None

    def show(res):
        m = res.metrics
        print(
            f"  seed {m.seed} {m.strategy:12s} energy {m.avg_energy_mwh:8.2f} mWh  "
            f"delay {m.avg_delay_ms:8.1f} ms  util {m.edge_utilization_pct:5.1f} %",
            file=sys.stderr,
        )

    return show


def cmd_compare(args) -> int:
    cfg = load_config(args.config)
    if args.seeds is not None:
        if args.seeds < 1:
            raise ConfigError(["--seeds must be >= 1"])
        cfg = replace(cfg, seeds=tuple(range(args.seeds)))
    checksums: dict[int, str] = {}

    def on_run(res):
        checksums[res.metrics.seed] = res.metrics.trace_checksum
        if show:
            show(res)

    show = _progress(args.quiet)
    report = run_comparison(cfg, on_run=on_run)
    for path in emit_report(Report(comparison=report, trace_checksums=checksums), _out_dir(args, cfg)):
        print(path)
    return EXIT_OK


def cmd_sweep_load(args) -> int:
    cfg = load_config(args.config)
    tiers = _csv_list(args.tiers, LoadTier.parse)
    if not tiers:
        raise ConfigError(["--tiers: need at least one tier"])
    sweep = run_load_sweep(cfg, tiers, on_run=_progress(args.quiet))
    for path in emit_report(Report(load_sweep=sweep), _out_dir(args, cfg)):
        print(path)
    return EXIT_OK


def cmd_sweep_dim(args) -> int:
    cfg = load_config(args.config)
    dims = _csv_list(args.dims, int) if args.dims else list(cfg.dims)
    if not dims:
        raise ConfigError(["--dims: need at least one dim"])
    result = run_dim_sweep(cfg, dims)
    for dim in result.dims():
        print(
            f"dim {dim:3d}: initial loss {result.initial_loss(dim):.4g}, "
            f"episodes to threshold {result.mean_episodes_to_threshold(dim):.1f}",
            file=sys.stderr,
        )
    for path in emit_report(Report(dim_sweep=result), _out_dir(args, cfg)):
        print(path)
    return EXIT_OK


def cmd_gen_trace(args) -> int:
    try:
        tier = LoadTier.parse(args.tier)
    except ValueError:
        try:
            tier = float(args.tier)
        except ValueError:
            raise ConfigError([f"--tier: expected low, medium, high or a rate, got {args.tier!r}"]) from None
    if args.devices < 1 or args.horizon < 1 or args.seed < 0:
        raise ConfigError(["--devices and --horizon must be >= 1, --seed >= 0"])
    trace = generate_trace(args.devices, tier, args.horizon, args.seed)
    write_trace(trace, args.out)
    print(f"{args.out}: {trace.n_tasks} tasks, sha256 {trace.checksum()}")
    return EXIT_OK


def cmd_validate(args) -> int:
    cfg = load_config(args.config)
    print(f"{args.config}: ok ({len(cfg.seeds)} seeds, strategies {', '.join(cfg.strategies)})")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="edgeq", description=__doc__.splitlines()[0])
    sub = p.add_subparsers(dest="command", required=True)

    c = sub.add_parser("compare", help="paired comparison of all strategies")
    c.add_argument("--config", required=True)
    c.add_argument("--seeds", type=int, help="use seeds 0..N-1 instead of the config's list")
    c.add_argument("--out", help="output directory (default: config output_dir)")
    c.add_argument("--quiet", action="store_true")
    c.set_defaults(func=cmd_compare)

    s = sub.add_parser("sweep-load", help="energy across load tiers")
    s.add_argument("--config", required=True)
    s.add_argument("--tiers", default="low,medium,high")
    s.add_argument("--out")
    s.add_argument("--quiet", action="store_true")
    s.set_defaults(func=cmd_sweep_load)

    d = sub.add_parser("sweep-dim", help="training loss versus state dimension")
    d.add_argument("--config", required=True)
    d.add_argument("--dims", help="comma-separated, e.g. 4,8,16,32,64")
    d.add_argument("--out")
    d.set_defaults(func=cmd_sweep_dim)

    g = sub.add_parser("gen-trace", help="write a synthetic Poisson trace CSV")
    g.add_argument("--devices", type=int, required=True)
    g.add_argument("--tier", required=True, help="low, medium, high or a bare rate")
    g.add_argument("--horizon", type=int, required=True)
    g.add_argument("--seed", type=int, required=True)
    g.add_argument("--out", required=True)
    g.set_defaults(func=cmd_gen_trace)

    v = sub.add_parser("validate-config", help="check a config file and list every problem")
    v.add_argument("config")
    v.set_defaults(func=cmd_validate)
    return p


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:  # argparse usage errors are config errors
        return EXIT_CONFIG if exc.code else EXIT_OK
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"edgeq: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except Exception as exc:  # noqa: BLE001 - top-level boundary
        print(f"edgeq: error: {exc}", file=sys.stderr)
        return EXIT_RUNTIME


if __name__ == "__main__":
    sys.exit(main())
