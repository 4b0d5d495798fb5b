"""Figure rendering for campaign CSV output.

Reads the record CSV produced by the bench harness and writes summary
figures next to it: solving time against trajectory-pool size, solving time
against aircraft count (with success rates annotated), and success-rate
bars.  Only the figures applicable to the data present are produced.
"""

from __future__ import annotations

import csv
from collections import defaultdict
from pathlib import Path
from statistics import mean, median
from typing import Dict, List, Tuple

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt  # noqa: E402

_SUCCESS = {"OPTIMAL", "SOLUTION"}

_METHOD_STYLE = {
    "sbf": {"marker": "s", "color": "tab:blue"},
    "greedy": {"marker": "^", "color": "tab:green"},
    "external": {"marker": "o", "color": "tab:orange"},
    "oracle": {"marker": "d", "color": "tab:red"},
}


def load_records(csv_path: Path | str) -> List[dict]:
    with Path(csv_path).open(newline="") as fh:
        rows = list(csv.DictReader(fh))
    for row in rows:
        row["n_aircraft"] = int(row["n_aircraft"])
        row["p"] = int(row["p"])
        row["m"] = int(row["m"])
        row["granularity"] = int(row["granularity"])
        row["traj_per_ac"] = float(row["traj_per_ac"])
        row["gen_s"] = float(row["gen_s"])
        row["solve_s"] = float(row["solve_s"])
        row["cost_kg"] = float(row["cost_kg"]) if row["cost_kg"] else None
    return rows


def _style(method: str) -> dict:
    return _METHOD_STYLE.get(method, {"marker": "x", "color": "tab:gray"})


def _group(rows, key) -> Dict[tuple, List[dict]]:
    out = defaultdict(list)
    for row in rows:
        out[key(row)].append(row)
    return out


def plot_time_vs_trajectories(rows: List[dict], out_path: Path) -> bool:
    """Mean solving time per method against the mean trajectory pool size,
    with the mean solution cost on a secondary axis."""
    by_setting = _group(rows, lambda r: (r["method"], r["p"], r["m"], r["granularity"]))
    series: Dict[str, List[Tuple[float, float]]] = defaultdict(list)
    costs: List[Tuple[float, float]] = []
    for (method, *_), group in sorted(by_setting.items(), key=lambda kv: mean(
        g["traj_per_ac"] for g in kv[1]
    )):
        ok = [g for g in group if g["outcome"] in _SUCCESS]
        x = mean(g["traj_per_ac"] for g in group)
        if ok:
            series[method].append((x, mean(g["solve_s"] for g in ok)))
            got = [g["cost_kg"] for g in ok if g["cost_kg"] is not None]
            if method in ("sbf", "external", "oracle") and got:
                costs.append((x, mean(got)))
    if sum(len(v) for v in series.values()) < 2:
        return False

    fig, ax = plt.subplots(figsize=(7, 4.5))
    for method, pts in series.items():
        pts.sort()
        ax.plot(*zip(*pts), label=method, **_style(method))
    ax.set_xlabel("mean legal trajectories per aircraft")
    ax.set_ylabel("mean solving time (s)")
    ax.set_xscale("log")
    ax.set_yscale("log")
    ax.grid(True, which="both", alpha=0.3)
    if costs:
        costs.sort()
        ax2 = ax.twinx()
        ax2.plot(*zip(*costs), linestyle="none", marker="+", color="tab:purple")
        ax2.set_ylabel("mean optimal cost (kg)", color="tab:purple")
    ax.legend()
    fig.tight_layout()
    fig.savefig(out_path, dpi=150)
    plt.close(fig)
    return True


def plot_time_vs_aircraft(rows: List[dict], out_path: Path) -> bool:
    """Median solving time per method against the aircraft count; success
    rates are annotated where below 100%."""
    counts = sorted({r["n_aircraft"] for r in rows})
    if len(counts) < 2:
        return False
    fig, ax = plt.subplots(figsize=(7, 4.5))
    for method in sorted({r["method"] for r in rows}):
        xs, ys, notes = [], [], []
        for n in counts:
            group = [r for r in rows if r["method"] == method and r["n_aircraft"] == n]
            if not group:
                continue
            ok = [g for g in group if g["outcome"] in _SUCCESS]
            rate = len(ok) / len(group)
            xs.append(n)
            ys.append(median([g["solve_s"] for g in group]))
            notes.append(rate)
        ax.plot(xs, ys, label=method, **_style(method))
        for x, y, rate in zip(xs, ys, notes):
            if rate < 1.0:
                ax.annotate(f"{rate:.0%}", (x, y), textcoords="offset points",
                            xytext=(4, 4), fontsize=8)
    ax.set_xlabel("aircraft")
    ax.set_ylabel("median solving time (s)")
    ax.set_yscale("log")
    ax.grid(True, which="both", alpha=0.3)
    ax.legend()
    fig.tight_layout()
    fig.savefig(out_path, dpi=150)
    plt.close(fig)
    return True


def plot_success_rate(rows: List[dict], out_path: Path) -> bool:
    methods = sorted({r["method"] for r in rows})
    counts = sorted({r["n_aircraft"] for r in rows})
    if not methods:
        return False
    fig, ax = plt.subplots(figsize=(7, 4.5))
    width = 0.8 / len(methods)
    for k, method in enumerate(methods):
        xs, ys = [], []
        for idx, n in enumerate(counts):
            group = [r for r in rows if r["method"] == method and r["n_aircraft"] == n]
            if not group:
                continue
            xs.append(idx + k * width)
            ys.append(sum(r["outcome"] in _SUCCESS for r in group) / len(group))
        ax.bar(xs, ys, width=width, label=method, color=_style(method)["color"])
    ax.set_xticks([i + 0.4 - width / 2 for i in range(len(counts))])
    ax.set_xticklabels([str(n) for n in counts])
    ax.set_xlabel("aircraft")
    ax.set_ylabel("success rate within timeout")
    ax.set_ylim(0, 1.05)
    ax.legend()
    fig.tight_layout()
    fig.savefig(out_path, dpi=150)
    plt.close(fig)
    return True


def render_report(csv_path: Path | str, out_dir: Path | str) -> List[Path]:
    """Render every applicable figure for a campaign CSV; returns the paths
    of the files written."""
    rows = load_records(csv_path)
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    written = []
    targets = [
        (plot_time_vs_trajectories, out_dir / "solve_time_vs_trajectories.png"),
        (plot_time_vs_aircraft, out_dir / "solve_time_vs_aircraft.png"),
        (plot_success_rate, out_dir / "success_rate.png"),
    ]
    for fn, path in targets:
        if rows and fn(rows, path):
            written.append(path)
    return written
