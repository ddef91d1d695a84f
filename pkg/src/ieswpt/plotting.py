"""Figures written next to the CSV outputs."""

from __future__ import annotations

import os
from typing import Sequence

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402

from .sim import EventKind, EventRecord  # noqa: E402
from .sweep import COLUMN, Axis, SweepCurve  # noqa: E402

STYLE = {
    "font.size": 9,
    "axes.labelsize": 9,
    "legend.fontsize": 8,
    "xtick.labelsize": 8,
    "ytick.labelsize": 8,
    "axes.grid": True,
    "grid.alpha": 0.3,
    "lines.linewidth": 1.2,
    "savefig.dpi": 150,
}

AXIS_LABEL = {
    Axis.Q_IES: "IES capacity $Q_{IES}$ [J]",
    Axis.N: "number of receivers $N$",
    Axis.P_R: "received power $P_R$ [W]",
    Axis.INITIAL_SOC: "initial SOC",
}


def new(width: float = 4.5, ratio: float = 0.68):
    with plt.rc_context(STYLE):
        fig, ax = plt.subplots(figsize=(width, width * ratio))
    return fig, ax


def save(fig, path: str | os.PathLike) -> None:
    with plt.rc_context(STYLE):
        fig.tight_layout()
        fig.savefig(path)
    plt.close(fig)


def plot_sweep(curve: SweepCurve, path: str | os.PathLike) -> None:
    req = curve.request
    with plt.rc_context(STYLE):
        fig, ax = new()
        if req.axis is Axis.Q_IES and req.ratio:
            x = [r.scenario.receiver.q_ies / r.scenario.receiver.q_c for r in curve.rows]
            ax.set_xlabel("capacity ratio $Q_{IES}/Q_C$")
        else:
            x = curve.x
            ax.set_xlabel(AXIS_LABEL[req.axis])
        marker = "o" if len(x) <= 20 else None
        for ev in req.evaluators:
            ax.plot(x, curve.column(ev), marker=marker, ms=3, label=COLUMN[ev])
        if req.axis is Axis.Q_IES:
            ax.set_xscale("log")
        ax.set_ylabel("overall charge time [s]")
        ax.legend()
    save(fig, path)


def plot_qies_curve(points, q_c: float, path: str | os.PathLike, q_star: float | None = None) -> None:
    with plt.rc_context(STYLE):
        fig, ax = new()
        ax.plot([p.q_ies / q_c for p in points], [p.t_oc for p in points], label="grid scan")
        if q_star is not None:
            ax.axvline(q_star / q_c, ls="--", c="k", lw=0.8, label="bound minimiser")
        ax.set_xscale("log")
        ax.set_xlabel("capacity ratio $Q_{IES}/Q_C$")
        ax.set_ylabel("overall charge time [s]")
        ax.legend()
    save(fig, path)


def plot_trace(trace: Sequence[EventRecord], n: int, path: str | os.PathLike, t_max: float | None = None) -> None:
    """IES energy of every receiver against time, one panel per receiver."""
    skip = (EventKind.SWITCH_DONE, EventKind.TX_IDLE_START, EventKind.TX_IDLE_END)
    with plt.rc_context(STYLE):
        fig, axes = plt.subplots(n, 1, sharex=True, figsize=(5.0, 0.9 + 0.8 * n), squeeze=False)
        for i in range(n):
            pts = [(e.time, e.ies_energy) for e in trace if e.receiver == i and e.kind not in skip]
            if t_max is not None:
                pts = [p for p in pts if p[0] <= t_max]
            ax = axes[i][0]
            ax.plot([p[0] for p in pts], [p[1] for p in pts], lw=0.9)
            ax.set_ylabel(f"rx {i + 1}")
        axes[-1][0].set_xlabel("time [s]")
        fig.suptitle("IES energy [J]")
    save(fig, path)
