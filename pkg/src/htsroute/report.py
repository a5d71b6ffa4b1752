"""Result emission: summary JSON, long-format CSV, and vector figures.

The CSV is the canonical record: one row per (run, method, step, priority,
metric), metrics loss/outflow/queue/cost, where cost = loss * loss_cost so
summing cost rows per (run, method) reproduces the cumulative plant cost.
End-of-horizon flush losses are folded into the final step's rows.
"""

from __future__ import annotations

import csv
import dataclasses
import json
import os
from dataclasses import dataclass

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt
import numpy as np

from .domain import ScenarioConfig
from .harness import AggregateMetrics, SweepResult

METRICS = ("loss", "outflow", "queue", "cost")


@dataclass
class OutputBundle:
    summary: dict
    summary_path: str
    timeseries_path: str
    chart_paths: list[str]


def build_summary(metrics: AggregateMetrics) -> dict:
    mean_costs = metrics.mean_costs()
    base = mean_costs.get("batch_hindsight")
    per_method = {}
    for m in metrics.methods:
        mm = metrics.per_method[m]
        entry = {
            "mean_cost": mm.mean_cost,
            "std_cost": mm.std_cost,
            "per_run_costs": [float(c) for c in mm.per_run_cost],
        }
        if base is not None and base > 1e-9:
            entry["gap_pct"] = 100.0 * (mm.mean_cost - base) / base
        else:
            entry["gap_pct"] = None
        per_method[m] = entry
    return {
        "config": dataclasses.asdict(metrics.config),
        "num_runs": metrics.config.num_runs,
        "base_seed": metrics.config.base_seed,
        "gap_mode": "percent" if (base is not None and base > 1e-9) else "zero_baseline",
        "methods": per_method,
        "invariant_violations": metrics.invariant_violations,
    }


def write_summary(metrics: AggregateMetrics, path: str) -> dict:
    summary = build_summary(metrics)
    with open(path, "w") as fh:
        json.dump(summary, fh, indent=2, sort_keys=True)
        fh.write("\n")
    return summary


def write_timeseries(metrics: AggregateMetrics, path: str) -> None:
    k = np.asarray(metrics.config.loss_costs)
    R = metrics.config.num_runs
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["run", "method", "t", "p", "metric", "value"])
        for m in metrics.methods:
            mm = metrics.per_method[m]
            series = {
                "loss": mm.losses,
                "outflow": mm.outflows,
                "queue": mm.queues,
                "cost": mm.losses * k[None, None, :],
            }
            for run in range(R):
                for t in range(metrics.config.horizon):
                    for p in range(metrics.config.num_priorities):
                        for name in METRICS:
                            writer.writerow(
                                [run, m, t + 1, p + 1, name, repr(float(series[name][run, t, p]))]
                            )


def read_timeseries_costs(path: str) -> dict[str, dict[int, float]]:
    """Recompute per-run cumulative cost per method from the CSV (round-trip check)."""
    totals: dict[str, dict[int, float]] = {}
    with open(path, newline="") as fh:
        for row in csv.DictReader(fh):
            if row["metric"] != "cost":
                continue
            per = totals.setdefault(row["method"], {})
            run = int(row["run"])
            per[run] = per.get(run, 0.0) + float(row["value"])
    return totals


_PRIORITY_COLORS = ("tab:blue", "tab:orange", "tab:green", "tab:red", "tab:purple")


def _steps(config: ScenarioConfig) -> np.ndarray:
    return np.arange(1, config.horizon + 1)


def plot_incoming_flows(metrics: AggregateMetrics, path: str) -> None:
    cfg = metrics.config
    fig, axes = plt.subplots(2, 1, figsize=(7, 6), sharex=True)
    for p in range(cfg.num_priorities):
        c = _PRIORITY_COLORS[p % len(_PRIORITY_COLORS)]
        axes[0].plot(_steps(cfg), metrics.first_run_demand[:, p], color=c, lw=0.8,
                     label=f"priority {p + 1}")
        axes[1].plot(_steps(cfg), metrics.mean_realized_demand[:, p], color=c,
                     label=f"priority {p + 1}")
    axes[0].set_ylabel("packets/step (single run)")
    axes[1].set_ylabel("packets/step (mean)")
    axes[1].set_xlabel("time step")
    axes[0].legend()
    fig.suptitle("Incoming flows")
    fig.savefig(path)
    plt.close(fig)


def _reference_method(metrics: AggregateMetrics) -> str:
    for m in metrics.methods:
        if m.startswith("mpc"):
            return m
    return metrics.methods[0]


def plot_outflows(metrics: AggregateMetrics, path: str) -> None:
    cfg = metrics.config
    ref = _reference_method(metrics)
    mean_out = metrics.per_method[ref].outflows.mean(axis=0)
    fig, ax = plt.subplots(figsize=(7, 4))
    for p in range(cfg.num_priorities):
        ax.plot(_steps(cfg), mean_out[:, p],
                color=_PRIORITY_COLORS[p % len(_PRIORITY_COLORS)],
                label=f"priority {p + 1}")
    ax.set_xlabel("time step")
    ax.set_ylabel("aggregate outflow (packets/step)")
    ax.set_title(f"Outgoing flows ({ref}, mean over runs)")
    ax.legend()
    fig.savefig(path)
    plt.close(fig)


def plot_losses(metrics: AggregateMetrics, path: str) -> None:
    cfg = metrics.config
    P = cfg.num_priorities
    fig, axes = plt.subplots(P, 1, figsize=(7, 2.5 * P), sharex=True)
    axes = np.atleast_1d(axes)
    for p in range(P):
        for m in metrics.methods:
            axes[p].plot(_steps(cfg), metrics.per_method[m].losses.mean(axis=0)[:, p],
                         label=m, lw=1)
        axes[p].set_ylabel(f"p={p + 1} loss")
    axes[-1].set_xlabel("time step")
    axes[0].legend(fontsize=8)
    fig.suptitle("Lost packets per step (mean over runs)")
    fig.savefig(path)
    plt.close(fig)


def plot_cumulative_cost(metrics: AggregateMetrics, path: str) -> None:
    cfg = metrics.config
    k = np.asarray(cfg.loss_costs)
    fig, ax = plt.subplots(figsize=(7, 4))
    for m in metrics.methods:
        step_cost = (metrics.per_method[m].losses * k[None, None, :]).sum(axis=2)
        ax.plot(_steps(cfg), step_cost.mean(axis=0).cumsum(), label=m)
    ax.set_xlabel("time step")
    ax.set_ylabel("cumulative packet loss cost")
    ax.set_title("Packet loss cost across time (mean over runs)")
    ax.legend()
    fig.savefig(path)
    plt.close(fig)


def plot_window_sweep(sweep: SweepResult, path: str) -> None:
    ws = sorted(sweep.windows)
    fig, ax = plt.subplots(figsize=(6, 4))
    ax.plot(ws, [sweep.mean_costs[w] for w in ws], marker="o")
    ax.set_xlabel("lookahead window W")
    ax.set_ylabel("mean cumulative cost")
    ax.set_title("Cost vs. MPC window size")
    fig.savefig(path)
    plt.close(fig)


def emit_outputs(metrics: AggregateMetrics, output_dir: str) -> OutputBundle:
    """Write summary.json, timeseries.csv and all applicable figures."""
    os.makedirs(output_dir, exist_ok=True)
    summary_path = os.path.join(output_dir, "summary.json")
    ts_path = os.path.join(output_dir, "timeseries.csv")
    summary = write_summary(metrics, summary_path)
    write_timeseries(metrics, ts_path)
    charts = []
    for name, fn in (
        ("incoming_flows.pdf", plot_incoming_flows),
        ("outflows.pdf", plot_outflows),
        ("losses.pdf", plot_losses),
        ("cumulative_cost.pdf", plot_cumulative_cost),
    ):
        p = os.path.join(output_dir, name)
        fn(metrics, p)
        charts.append(p)
    return OutputBundle(summary, summary_path, ts_path, charts)


def emit_sweep(sweep: SweepResult, output_dir: str) -> str:
    """Write sweep.json plus the window-sweep figure; returns the JSON path."""
    os.makedirs(output_dir, exist_ok=True)
    ws = sorted(sweep.windows)
    payload = {
        "windows": ws,
        "mean_costs": {str(w): sweep.mean_costs[w] for w in ws},
        "per_run_costs": {str(w): [float(c) for c in sweep.per_run_costs[w]] for w in ws},
        "adjacent_pct_changes": sweep.adjacent_pct_changes(),
    }
    path = os.path.join(output_dir, "sweep.json")
    with open(path, "w") as fh:
        json.dump(payload, fh, indent=2, sort_keys=True)
        fh.write("\n")
    plot_window_sweep(sweep, os.path.join(output_dir, "window_sweep.pdf"))
    return path
