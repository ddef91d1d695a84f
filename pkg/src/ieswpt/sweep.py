"""Parameter sweeps and their CSV form."""

from __future__ import annotations

import io
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from enum import Enum
from typing import IO, Iterable, Sequence

import numpy as np

from .analytic import (
    classify_regime,
    conventional_t_oc,
    phase_durations,
    t_oc_analytic,
    t_oc_upper_bound,
)
from .model import Piecewise3, ValidatedScenario
from .sim import DecoupleRule, EventRecord, run_event_sim


class Axis(str, Enum):
    Q_IES = "q_ies"
    N = "n"
    P_R = "p_r"
    INITIAL_SOC = "initial_soc"


class SweepEvaluator(str, Enum):
    ANALYTIC = "Analytic"
    BOUND = "Bound"
    EVENT_SIM = "EventSim"
    CONVENTIONAL = "Conventional"


COLUMN = {
    SweepEvaluator.ANALYTIC: "t_oc_analytic_s",
    SweepEvaluator.BOUND: "t_oc_bound_s",
    SweepEvaluator.EVENT_SIM: "t_oc_sim_s",
    SweepEvaluator.CONVENTIONAL: "t_oc_conventional_s",
}


@dataclass(frozen=True)
class SweepRequest:
    axis: Axis
    values: tuple[float, ...]
    evaluators: tuple[SweepEvaluator, ...]
    base: ValidatedScenario
    ratio: bool = False  # q_ies values given as a fraction of q_c
    rule: DecoupleRule = DecoupleRule.FILL

    def __post_init__(self):
        if not self.values:
            raise ValueError("sweep needs at least one value")
        if any(b <= a for a, b in zip(self.values, self.values[1:])):
            raise ValueError("sweep values must be strictly increasing")
        if not self.evaluators:
            raise ValueError("sweep needs at least one evaluator")
        analytic = {SweepEvaluator.ANALYTIC, SweepEvaluator.BOUND}
        if analytic & set(self.evaluators) and not self.base.is_constant:
            raise ValueError("Analytic and Bound evaluators need the constant profile")

    def scenario_at(self, value: float) -> ValidatedScenario:
        if self.axis is Axis.Q_IES:
            q = value * self.base.receiver.q_c if self.ratio else value
            return self.base.with_(q_ies=q)
        if self.axis is Axis.N:
            if value != int(value):
                raise ValueError(f"n must be an integer, got {value}")
            return self.base.with_(n=int(value))
        if self.axis is Axis.P_R:
            return self.base.with_(p_r=value)
        return self.base.with_(initial_soc=value)


def axis_values(
    lo: float,
    hi: float,
    count: int | None = None,
    log: bool = False,
    integer: bool = False,
) -> tuple[float, ...]:
    """Evenly (or log-) spaced values from ``lo`` to ``hi`` inclusive."""
    if integer and count is None:
        return tuple(float(v) for v in range(int(lo), int(hi) + 1))
    count = 2 if count is None else count
    if count == 1:
        return (float(lo),)
    vals = np.geomspace(lo, hi, count) if log else np.linspace(lo, hi, count)
    if integer:
        vals = np.unique(np.round(vals))
    return tuple(float(v) for v in vals)


@dataclass(frozen=True)
class SweepRow:
    axis_value: float
    scenario: ValidatedScenario
    values: dict[SweepEvaluator, float]
    regime: str | None = None
    k_l: int | None = None
    standby_total: float | None = None


@dataclass(frozen=True)
class SweepCurve:
    request: SweepRequest
    rows: tuple[SweepRow, ...] = field(default_factory=tuple)

    def column(self, evaluator: SweepEvaluator) -> np.ndarray:
        return np.array([r.values[evaluator] for r in self.rows])

    @property
    def x(self) -> np.ndarray:
        return np.array([r.axis_value for r in self.rows])


def regime_label(s: ValidatedScenario) -> str:
    rep = classify_regime(s.receiver, s.n)
    if not rep.standby:
        return "no-standby"
    return f"standby-{rep.final_case.value}"


def _evaluate_point(args: tuple[SweepRequest, float]) -> SweepRow:
    req, value = args
    s = req.scenario_at(value)
    out: dict[SweepEvaluator, float] = {}
    standby = None
    for ev in req.evaluators:
        if ev is SweepEvaluator.ANALYTIC:
            out[ev] = t_oc_analytic(s.receiver, s.n).t_oc
        elif ev is SweepEvaluator.BOUND:
            out[ev] = t_oc_upper_bound(s.receiver, s.n)
        elif ev is SweepEvaluator.EVENT_SIM:
            r = run_event_sim(s, rule=req.rule)
            out[ev] = r.t_oc
            standby = r.total_standby
        else:
            out[ev] = conventional_t_oc(s.receiver, s.n, s.profile, s.initial_soc)
    if s.is_constant:
        regime, k_l = regime_label(s), phase_durations(s.receiver).k_l
    else:
        regime, k_l = None, None
    return SweepRow(value, s, out, regime, k_l, standby)


def run_sweep(req: SweepRequest, workers: int | None = None) -> SweepCurve:
    """Evaluate every axis value; rows come back in axis order."""
    jobs = [(req, v) for v in req.values]
    # fail fast on invalid points before spawning anything
    for v in req.values:
        req.scenario_at(v)
    if workers and workers > 1 and len(jobs) > 1:
        with ProcessPoolExecutor(max_workers=workers) as ex:
            rows = tuple(ex.map(_evaluate_point, jobs))
    else:
        rows = tuple(map(_evaluate_point, jobs))
    return SweepCurve(req, rows)


# ---------------------------------------------------------------------------
# CSV
# ---------------------------------------------------------------------------


def fmt(x: float | int | None) -> str:
    if x is None:
        return ""
    if isinstance(x, (int, np.integer)) and not isinstance(x, bool):
        return str(int(x))
    return f"{x:.9g}"


def _write(path_or_stream: str | os.PathLike | IO[str], lines: Iterable[str]) -> None:
    text = "".join(line + "\n" for line in lines)
    if hasattr(path_or_stream, "write"):
        path_or_stream.write(text)
    else:
        with open(path_or_stream, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)


def sweep_header(req: SweepRequest) -> list[str]:
    cols = ["axis_value"]
    if req.axis is Axis.Q_IES:
        cols.append("q_ies_ratio")
    cols += [COLUMN[e] for e in req.evaluators]
    cols += ["regime", "k_l", "standby_total_s"]
    return cols


def emit_csv(curve: SweepCurve, path: str | os.PathLike | IO[str]) -> None:
    """Write ``curve`` as comma-separated text, one row per axis value.

    ``axis_value`` is always in natural units (joules for ``q_ies`` even
    when the request used ratios); the ratio gets its own column.
    """
    req = curve.request
    lines = [",".join(sweep_header(req))]
    for row in sorted(curve.rows, key=lambda r: r.axis_value):
        s = row.scenario
        if req.axis is Axis.Q_IES:
            cells = [fmt(s.receiver.q_ies), fmt(s.receiver.q_ies / s.receiver.q_c)]
        elif req.axis is Axis.N:
            cells = [fmt(s.n)]
        else:
            cells = [fmt(row.axis_value)]
        cells += [fmt(row.values[e]) for e in req.evaluators]
        cells += [row.regime or "", fmt(row.k_l), fmt(row.standby_total)]
        lines.append(",".join(cells))
    _write(path, lines)


TRACE_HEADER = "time_s,receiver,event,ies_energy_j,battery_energy_j"


def emit_trace_csv(trace: Sequence[EventRecord], path: str | os.PathLike | IO[str]) -> None:
    lines = [TRACE_HEADER]
    for ev in trace:
        rid = "" if ev.receiver is None else str(ev.receiver)
        lines.append(f"{ev.time:.9f},{rid},{ev.kind.value},{fmt(ev.ies_energy)},{fmt(ev.battery_energy)}")
    _write(path, lines)


def curve_csv(points, q_c: float, path: str | os.PathLike | IO[str]) -> None:
    """CSV for an optimiser grid scan."""
    lines = ["q_ies_j,q_ies_ratio,t_oc_s,formula_id,k_l"]
    for p in points:
        lines.append(",".join([fmt(p.q_ies), fmt(p.q_ies / q_c), fmt(p.t_oc), p.formula_id or "", fmt(p.k_l)]))
    _write(path, lines)


# ---------------------------------------------------------------------------
# Presets for the published figures
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class Preset:
    axis: Axis
    evaluators: tuple[SweepEvaluator, ...]
    values: tuple[float, ...]
    ratio: bool = False
    n: int | None = None
    practical: bool = False
    description: str = ""


def _qies_preset(n: int) -> Preset:
    return Preset(
        Axis.Q_IES,
        (SweepEvaluator.ANALYTIC, SweepEvaluator.BOUND),
        axis_values(1e-7, 0.5, 400, log=True),
        ratio=True,
        n=n,
        description=f"charge time over the IES/battery capacity ratio, n={n}",
    )


PRESETS: dict[str, Preset] = {
    # figure captions read n = 3, 5, 7; the running text says 2, 4, 6
    **{f"qies-n{n}": _qies_preset(n) for n in (2, 3, 4, 5, 6, 7)},
    "receivers": Preset(
        Axis.N,
        (SweepEvaluator.BOUND, SweepEvaluator.ANALYTIC, SweepEvaluator.CONVENTIONAL),
        axis_values(1, 8, integer=True),
        description="charge time over the number of receivers",
    ),
    "practical-pr": Preset(
        Axis.P_R,
        (SweepEvaluator.EVENT_SIM, SweepEvaluator.CONVENTIONAL),
        (4.2, 6.0, 8.0),
        practical=True,
        description="practical charger, received power sweep",
    ),
    "practical-soc": Preset(
        Axis.INITIAL_SOC,
        (SweepEvaluator.EVENT_SIM, SweepEvaluator.CONVENTIONAL),
        tuple(round(0.1 * k, 1) for k in range(7)),
        practical=True,
        description="practical charger, initial SOC sweep",
    ),
}


def preset_request(name: str, base: ValidatedScenario) -> SweepRequest:
    p = PRESETS[name]
    if p.practical and base.is_constant:
        base = base.with_(profile=Piecewise3(1.0))
    if p.n is not None:
        base = base.with_(n=p.n)
    return SweepRequest(p.axis, p.values, p.evaluators, base, ratio=p.ratio)


def csv_text(curve: SweepCurve) -> str:
    buf = io.StringIO()
    emit_csv(curve, buf)
    return buf.getvalue()
