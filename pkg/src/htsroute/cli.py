"""Command-line entry point.

Subcommands:
  run       roll one method over the Monte-Carlo runs
  compare   roll all (or selected) methods on paired realizations
  sweep     mean cost of the lookahead controller per window size
  validate  check a config file and exit

Exit codes: 0 success, 1 config/validation failure, 2 solver failure.
"""

from __future__ import annotations

import argparse
import sys

import yaml

from . import controllers
from .controllers import PolicyKind, SolverFailure, parse_policy
from .domain import ConfigError, ScenarioConfig, validate_config
from .harness import run_monte_carlo, sweep_window
from .report import emit_outputs, emit_sweep

CONFIG_KEYS = {f.name for f in ScenarioConfig.__dataclass_fields__.values()}

DEFAULT_COMPARE = ["batch_hindsight", "static_batch", "proportional", "mpc_w10", "mpc_w1"]


class ParseError(ValueError):
    pass


def parse_config(text: str) -> ScenarioConfig:
    """Flat key: value YAML document; missing keys take the scenario defaults."""
    try:
        data = yaml.safe_load(text)
    except yaml.YAMLError as exc:
        raise ParseError(f"config parse error: {exc}") from exc
    if data is None:
        data = {}
    if not isinstance(data, dict):
        raise ParseError("config must be a flat key: value mapping")
    unknown = set(data) - CONFIG_KEYS
    if unknown:
        raise ParseError(f"unknown config keys: {', '.join(sorted(unknown))}")
    if "loss_costs" in data:
        data["loss_costs"] = tuple(float(k) for k in data["loss_costs"])
    return validate_config(ScenarioConfig(**data))


def load_config(path: str | None) -> ScenarioConfig:
    if path is None:
        return validate_config(ScenarioConfig())
    with open(path) as fh:
        return parse_config(fh.read())


def _apply_overrides(config: ScenarioConfig, args) -> ScenarioConfig:
    over = {}
    if args.seed is not None:
        over["base_seed"] = args.seed
    if getattr(args, "runs", None) is not None:
        over["num_runs"] = args.runs
    if over:
        config = validate_config(config.with_overrides(**over))
    return config


def _methods_from(args, default: list[str]) -> list[PolicyKind]:
    labels = args.methods.split(",") if getattr(args, "methods", None) else default
    return [parse_policy(label.strip()) for label in labels]


def _progress(stream):
    def report(i, n):
        print(f"  run {i + 1}/{n}", file=stream, flush=True)

    return report


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="htsroute", description=__doc__,
                                     formatter_class=argparse.RawDescriptionHelpFormatter)
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p, out=True):
        p.add_argument("--config", help="YAML config file (defaults used when omitted)")
        p.add_argument("--seed", type=int, help="override base_seed")
        p.add_argument("--runs", type=int, help="override num_runs")
        p.add_argument("--quiet", action="store_true", help="suppress progress output")
        if out:
            p.add_argument("--out", default="out", help="output directory")

    p_run = sub.add_parser("run", help="run one method")
    common(p_run)
    p_run.add_argument("--methods", default="mpc_w10",
                       help="single method label (e.g. mpc_w10, batch_hindsight)")

    p_cmp = sub.add_parser("compare", help="run all five methods on paired realizations")
    common(p_cmp)
    p_cmp.add_argument("--methods", help="comma-separated subset, default all five")

    p_swp = sub.add_parser("sweep", help="window-size sweep of the lookahead controller")
    common(p_swp)
    p_swp.add_argument("--windows", default="1,2,5,10,20", help="comma-separated window sizes")

    p_val = sub.add_parser("validate", help="validate a config file")
    common(p_val, out=False)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        config = _apply_overrides(load_config(args.config), args)
    except (ParseError, ConfigError, OSError, TypeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1

    progress = None if args.quiet else _progress(sys.stderr)
    try:
        if args.command == "validate":
            print("config ok")
            return 0
        if args.command == "run":
            methods = _methods_from(args, ["mpc_w10"])
            if len(methods) != 1:
                print("error: run takes exactly one method", file=sys.stderr)
                return 1
            metrics = run_monte_carlo(config, methods, progress=progress)
            bundle = emit_outputs(metrics, args.out)
        elif args.command == "compare":
            methods = _methods_from(args, DEFAULT_COMPARE)
            metrics = run_monte_carlo(config, methods, progress=progress)
            bundle = emit_outputs(metrics, args.out)
        elif args.command == "sweep":
            windows = [int(w) for w in args.windows.split(",")]
            swp_progress = (
                None if args.quiet else
                (lambda w, i, n: print(f"  W={w} run {i + 1}/{n}", file=sys.stderr, flush=True))
            )
            sweep = sweep_window(config, windows, progress=swp_progress)
            path = emit_sweep(sweep, args.out)
            print(f"wrote {path}")
            for w in sorted(sweep.windows):
                print(f"  W={w:>3}  mean cost {sweep.mean_costs[w]:.4f}")
            return 0
        else:  # pragma: no cover
            return 1
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except (SolverFailure, RuntimeError) as exc:
        print(f"solver failure: {exc}", file=sys.stderr)
        return 2

    print(f"wrote {bundle.summary_path}")
    for m, entry in bundle.summary["methods"].items():
        gap = entry["gap_pct"]
        gap_s = f"{gap:+.2f}%" if gap is not None else "n/a"
        print(f"  {m:<16} mean cost {entry['mean_cost']:.4f}  gap {gap_s}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
