"""Closed-form phase durations, regime classification and overall charge time.

Everything here assumes the constant battery demand ``p_b``; the practical
three-segment profile is handled only by the simulator.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from enum import Enum

from .model import (
    ChargeProfile,
    Constant,
    FinalCase,
    PhaseDurations,
    ReceiverSpec,
    RegimeReport,
    profile_end,
    soc_to_time_offset,
)

# relative slack used when snapping floor() results near an integer
_FLOOR_EPS = 1e-12


class FormulaId(str, Enum):
    EQ2 = "Eq2"
    EQ3A = "Eq3a"
    EQ3B = "Eq3b"
    EQ3C = "Eq3c"
    EQ4 = "Eq4"
    EQ5A = "Eq5a"
    EQ5B = "Eq5b"
    EQ5C = "Eq5c"


@dataclass(frozen=True)
class TocBreakdown:
    t_oc: float
    regime: RegimeReport
    formula_id: FormulaId
    components: dict[str, float] = field(default_factory=dict)


def _floor(x: float) -> int:
    k = math.floor(x)
    # q_c/(p_b*c) that should be an exact integer can land just below it
    if x - k > 1.0 - _FLOOR_EPS * max(1.0, abs(x)):
        k += 1
    return int(k)


def phase_durations(spec: ReceiverSpec) -> PhaseDurations:
    a = spec.q_ies / (spec.p_r - spec.p_b)
    b = spec.q_ies / spec.p_b
    c = a + b
    k_l = _floor(spec.q_c / (spec.p_b * c))
    c_prime = (spec.q_c - k_l * spec.p_b * c) / spec.p_b
    if c_prime < 0.0:
        c_prime = 0.0
    return PhaseDurations(a=a, b=b, c=c, k_l=k_l, c_prime=c_prime)


def n_max(spec: ReceiverSpec) -> int:
    """Largest receiver count without standby time when switching is instantaneous."""
    d = phase_durations(spec)
    return _floor(d.c / d.a)


def _final_case(d: PhaseDurations, n: int, t_d: float) -> FinalCase:
    threshold = (d.b - n * t_d) / (n - 1)
    if d.c_prime <= threshold:
        return FinalCase.A
    if d.c_prime <= d.a:
        return FinalCase.B
    return FinalCase.C


def classify_regime(spec: ReceiverSpec, n: int) -> RegimeReport:
    """Decide between the no-standby and standby regimes for ``n`` receivers.

    The no-standby regime holds iff ``(n-1)*a + n*t_d <= b``. ``final_case``
    is reported for every ``n >= 2`` but only drives the standby formulas.
    """
    if n < 1:
        raise ValueError("n must be >= 1")
    d = phase_durations(spec)
    nm = n_max(spec)
    if n == 1:
        return RegimeReport(standby=False, final_case=None, n_max=nm)
    standby = (n - 1) * d.a + n * spec.t_d > d.b
    return RegimeReport(standby=standby, final_case=_final_case(d, n, spec.t_d), n_max=nm)


def t_oc_analytic(spec: ReceiverSpec, n: int) -> TocBreakdown:
    """Overall charge time of ``n`` identical receivers starting empty."""
    d = phase_durations(spec)
    regime = classify_regime(spec, n)
    td = spec.t_d
    if not regime.standby:
        stagger = (n - 1) * (d.a + td)
        battery = spec.q_c / spec.p_b
        fid = FormulaId.EQ2 if td == 0 else FormulaId.EQ4
        return TocBreakdown(
            t_oc=battery + stagger,
            regime=regime,
            formula_id=fid,
            components={"battery_time": battery, "stagger_time": stagger},
        )

    full = d.k_l * n * (d.a + td)
    case = regime.final_case
    if case is FinalCase.A:
        final = {"first_discharge_time": d.b - td, "final_cycle_time": d.c_prime}
    elif case is FinalCase.B:
        final = {"stagger_time": (n - 1) * td, "final_cycle_time": n * d.c_prime}
    else:
        final = {"stagger_time": (n - 1) * (d.a + td), "final_cycle_time": d.c_prime}
    names = {FinalCase.A: "a", FinalCase.B: "b", FinalCase.C: "c"}
    fid = FormulaId(("Eq3" if td == 0 else "Eq5") + names[case])
    components = {"full_cycle_time": full, **final}
    return TocBreakdown(
        t_oc=sum(components.values()),
        regime=regime,
        formula_id=fid,
        components=components,
    )


def bound_standby(spec: ReceiverSpec, n: int) -> float:
    """Standby-regime upper bound ``n(a + t_d)(q_c/q_ies + 1)``, valid for any q_ies."""
    a = spec.q_ies / (spec.p_r - spec.p_b)
    return n * (a + spec.t_d) * (spec.q_c / spec.q_ies + 1.0)


def t_oc_upper_bound(spec: ReceiverSpec, n: int) -> float:
    """Regime-dependent upper bound on the overall charge time."""
    if classify_regime(spec, n).standby:
        return bound_standby(spec, n)
    d = phase_durations(spec)
    return spec.q_c / spec.p_b + d.c


def conventional_t_oc(
    spec: ReceiverSpec,
    n: int,
    profile: ChargeProfile | None = None,
    s0: float = 0.0,
) -> float:
    """Sequential TDM charging without IES: each receiver charged in turn."""
    if profile is None:
        profile = Constant(spec.p_b)
    if isinstance(profile, Constant):
        return n * (1.0 - s0) * spec.q_c / profile.power
    return n * (profile_end(profile) - soc_to_time_offset(profile, s0))
