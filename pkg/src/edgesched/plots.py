"""Figures built from result rows.  Returns Figure objects; saving is the caller's job."""

from __future__ import annotations

from typing import Mapping, Sequence

import numpy as np
from matplotlib.figure import Figure


def _new(width: float = 6.0, height: float = 3.4) -> Figure:
    fig = Figure(figsize=(width, height), layout="constrained")
    return fig


def _grouped(rows: Sequence[Mapping[str, str]], metric: str):
    schedulers = list(dict.fromkeys(r["scheduler"] for r in rows))
    modes = list(dict.fromkeys(r["bandwidth_mode"] for r in rows))
    mean = np.zeros((len(modes), len(schedulers)))
    std = np.zeros_like(mean)
    for i, m in enumerate(modes):
        for j, s in enumerate(schedulers):
            xs = [float(r[metric]) for r in rows if r["scheduler"] == s and r["bandwidth_mode"] == m]
            if xs:
                mean[i, j] = np.mean(xs)
                std[i, j] = np.std(xs, ddof=1) if len(xs) > 1 else 0.0
    return schedulers, modes, mean, std


def bar_figure(rows: Sequence[Mapping[str, str]], metric: str, ylabel: str) -> Figure:
    schedulers, modes, mean, std = _grouped(rows, metric)
    fig = _new()
    ax = fig.add_subplot()
    w = 0.8 / len(modes)
    x = np.arange(len(schedulers))
    for i, m in enumerate(modes):
        ax.bar(x + (i - (len(modes) - 1) / 2) * w, mean[i], w, yerr=std[i], label=m, capsize=2)
    ax.set_xticks(x, schedulers, rotation=20)
    ax.set_ylabel(ylabel)
    ax.legend(frameon=False)
    return fig


def energy_figure(rows: Sequence[Mapping[str, str]]) -> Figure:
    """Stacked transmit / inference / idle energy, first bandwidth mode."""
    mode = rows[0]["bandwidth_mode"]
    sub = [r for r in rows if r["bandwidth_mode"] == mode]
    fig = _new()
    ax = fig.add_subplot()
    bottom = None
    for key, label in (("energy_tran_j", "transmit"), ("energy_infer_j", "inference"),
                       ("energy_idle_j", "idle")):
        schedulers, _, mean, _ = _grouped(sub, key)
        vals = mean[0] / 1e6
        ax.bar(schedulers, vals, bottom=bottom, label=label)
        bottom = vals if bottom is None else bottom + vals
    ax.set_ylabel(f"energy, MJ ({mode})")
    ax.tick_params(axis="x", rotation=20)
    ax.legend(frameon=False)
    return fig


def run_figures(rows: Sequence[Mapping[str, str]]) -> dict[str, Figure]:
    if not rows:
        return {}
    return {
        "success_rate": bar_figure(rows, "success_rate", "deadline success rate"),
        "throughput": bar_figure(rows, "throughput_tok_s", "goodput, tokens/s"),
        "energy": energy_figure(rows),
    }


def calibration_figure(rows: Sequence[Mapping[str, str]]) -> Figure:
    b = np.array([int(r["batch_size"]) for r in rows])
    fig = _new(7.0, 3.0)
    ax1, ax2 = fig.subplots(1, 2)
    ax1.plot(b, [float(r["cloud_time_s"]) for r in rows], label="cloud")
    ax1.plot(b, [float(r["edge_time_s"]) for r in rows], label="edges")
    ax1.set_xlabel("simultaneous services")
    ax1.set_ylabel("time per service, s")
    ax1.legend(frameon=False)
    ax2.plot(b, [float(r["cloud_energy_j"]) for r in rows], label="cloud")
    ax2.plot(b, [float(r["edge_energy_j"]) for r in rows], label="edges")
    ax2.set_xlabel("simultaneous services")
    ax2.set_ylabel("energy per service, J")
    return fig
