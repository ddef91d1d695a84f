"""IES capacity sizing.

Two objectives are offered. The standby-regime upper bound
``n(a + t_d)(q_c/q_ies + 1)`` is convex in ``q_ies`` and has the closed-form
minimiser ``sqrt(t_d * q_c * (p_r - p_b))``; it is also minimised by
golden-section search as a cross-check. The exact charge time has a zig-zag
shape in ``q_ies`` and is minimised by scanning a grid.
"""

from __future__ import annotations

import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, replace
from enum import Enum
from typing import Callable, Sequence

import numpy as np

from .analytic import bound_standby, phase_durations, t_oc_analytic
from .model import ReceiverSpec, ValidatedScenario
from .sim import run_event_sim

INV_PHI = (math.sqrt(5.0) - 1.0) / 2.0
AGREEMENT = 0.005  # closed form vs search, relative


class DegenerateObjective(ValueError):
    """The bound has no interior minimum (zero switching delay)."""


class Method(str, Enum):
    CLOSED_FORM = "ClosedForm"
    GOLDEN_SECTION = "GoldenSection"
    GRID_SCAN = "GridScan"


class Evaluator(str, Enum):
    ANALYTIC = "Analytic"
    EVENT_SIM = "EventSim"


@dataclass(frozen=True)
class CurvePoint:
    q_ies: float
    t_oc: float
    formula_id: str | None = None
    k_l: int | None = None


@dataclass(frozen=True)
class OptimizationResult:
    q_star: float
    t_star: float
    method: Method
    curve: tuple[CurvePoint, ...] | None = None
    boundary: bool = False


@dataclass(frozen=True)
class BoundMinimum:
    closed_form: OptimizationResult
    golden_section: OptimizationResult

    @property
    def relative_gap(self) -> float:
        return abs(self.golden_section.q_star - self.closed_form.q_star) / self.closed_form.q_star


def golden_section(f: Callable[[float], float], lo: float, hi: float, tol: float) -> float:
    """Minimise a unimodal ``f`` on ``[lo, hi]`` until the bracket is narrower than ``tol``."""
    a, b = min(lo, hi), max(lo, hi)
    c = b - INV_PHI * (b - a)
    d = a + INV_PHI * (b - a)
    fc, fd = f(c), f(d)
    while b - a > tol:
        if fc < fd:
            b, d, fd = d, c, fc
            c = b - INV_PHI * (b - a)
            fc = f(c)
        else:
            a, c, fc = c, d, fd
            d = a + INV_PHI * (b - a)
            fd = f(d)
    return 0.5 * (a + b)


def default_grid(q_c: float, count: int = 400, lo: float = 1e-7, hi: float = 0.5) -> np.ndarray:
    """Log-spaced ``q_ies`` grid from ``lo*q_c`` to ``hi*q_c``."""
    return np.geomspace(lo * q_c, hi * q_c, count)


def minimize_bound(spec: ReceiverSpec, n: int, rel_tol: float = 1e-6) -> BoundMinimum:
    """Minimise the standby-regime bound over ``q_ies`` in ``(0, q_c)``.

    The search runs on ``log(q_ies)`` so that ``rel_tol`` is a relative
    bracket width. If the unconstrained minimiser is not below ``q_c`` both
    results are pinned to ``q_c/2`` (the default grid top) and flagged.

    Raises:
        DegenerateObjective: ``spec.t_d == 0``; the bound then decreases all
            the way to ``q_ies -> 0``.
    """
    if spec.t_d <= 0:
        raise DegenerateObjective(
            "with zero switching delay the bound is increasing in q_ies; "
            "its infimum is at q_ies -> 0"
        )

    def bound(q: float) -> float:
        return bound_standby(replace(spec, q_ies=q), n)

    q_closed = math.sqrt(spec.t_d * spec.q_c * (spec.p_r - spec.p_b))
    top = 0.5 * spec.q_c
    boundary = q_closed >= spec.q_c
    if boundary:
        q_closed = top

    x = golden_section(
        lambda lq: bound(math.exp(lq)),
        math.log(spec.q_c * 1e-12),
        math.log(spec.q_c * (1.0 - 1e-12)),
        rel_tol,
    )
    q_golden = top if boundary else math.exp(x)
    res = BoundMinimum(
        closed_form=OptimizationResult(q_closed, bound(q_closed), Method.CLOSED_FORM, boundary=boundary),
        golden_section=OptimizationResult(q_golden, bound(q_golden), Method.GOLDEN_SECTION, boundary=boundary),
    )
    if res.relative_gap > AGREEMENT:
        raise ArithmeticError(
            f"golden-section minimiser {q_golden:.6g} J disagrees with closed form {q_closed:.6g} J"
        )
    return res


def _evaluate(args: tuple[ValidatedScenario, float, Evaluator]) -> CurvePoint:
    s, q, evaluator = args
    sq = s.with_(q_ies=float(q))
    k_l = phase_durations(sq.receiver).k_l
    if evaluator is Evaluator.ANALYTIC:
        b = t_oc_analytic(sq.receiver, sq.n)
        return CurvePoint(float(q), b.t_oc, b.formula_id.value, k_l)
    return CurvePoint(float(q), run_event_sim(sq).t_oc, None, k_l)


def grid_search_qies(
    s: ValidatedScenario,
    q_grid: Sequence[float],
    evaluator: Evaluator | str = Evaluator.ANALYTIC,
    workers: int | None = None,
) -> OptimizationResult:
    """Evaluate the charge time at every grid point and return the argmin.

    ``workers > 1`` evaluates points in separate processes; the curve keeps
    grid order either way. Ties go to the smallest ``q_ies``.
    """
    evaluator = Evaluator(evaluator)
    q = [float(v) for v in q_grid]
    if not q:
        raise ValueError("empty grid")
    if any(b <= a for a, b in zip(q, q[1:])):
        raise ValueError("grid must be strictly increasing")
    if q[0] <= 0 or q[-1] >= s.receiver.q_c:
        raise ValueError("grid values must lie in (0, q_c)")
    if evaluator is Evaluator.ANALYTIC and not s.is_constant:
        raise ValueError("the analytic evaluator needs the constant profile")
    jobs = [(s, v, evaluator) for v in q]
    if workers and workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as ex:
            curve = tuple(ex.map(_evaluate, jobs))
    else:
        curve = tuple(map(_evaluate, jobs))
    best = min(range(len(curve)), key=lambda i: (curve[i].t_oc, i))
    return OptimizationResult(curve[best].q_ies, curve[best].t_oc, Method.GRID_SCAN, curve=curve)
