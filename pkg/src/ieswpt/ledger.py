"""Energy-conservation audit of a traced simulation run."""

from __future__ import annotations

from dataclasses import dataclass

from .model import ValidatedScenario
from .sim import EventKind, SimResult


class LedgerViolation(RuntimeError):
    """Energy drawn from the transmitter does not match energy stored."""


@dataclass(frozen=True)
class LedgerReport:
    max_residual: float  # J
    events_checked: int
    min_ies: float
    max_ies: float


_ENDS_COUPLING = (EventKind.IES_FULL, EventKind.NEED_MET)


def energy_ledger_check(
    r: SimResult, s: ValidatedScenario, tolerance: float = 1e-6
) -> LedgerReport:
    """Check ``p_r * coupled_time == battery_energy + ies_energy`` at every event.

    The model is lossless, so everything a receiver drew while coupled is
    either in its battery or still in its IES.

    Raises:
        ValueError: ``r`` was produced without a trace.
        LedgerViolation: the largest residual exceeds ``tolerance`` joules.
    """
    if r.trace is None:
        raise ValueError("energy_ledger_check needs a run with trace=True")
    p_r = s.receiver.p_r
    since: list[float | None] = [None] * s.n
    drawn_before = [0.0] * s.n
    worst = 0.0
    worst_at = None
    checked = 0
    lo, hi = float("inf"), float("-inf")
    for ev in r.trace:
        i = ev.receiver
        if i is None:
            continue
        if ev.kind is EventKind.COUPLE_START:
            since[i] = ev.time
        drawn = drawn_before[i]
        if since[i] is not None:
            drawn += p_r * (ev.time - since[i])
        res = abs(drawn - ev.battery_energy - ev.ies_energy)
        if res > worst:
            worst, worst_at = res, ev
        checked += 1
        lo = min(lo, ev.ies_energy)
        hi = max(hi, ev.ies_energy)
        if since[i] is not None and (
            ev.kind in _ENDS_COUPLING or ev.kind is EventKind.BATTERY_FULL
        ):
            drawn_before[i] = drawn
            since[i] = None
    if worst > tolerance:
        raise LedgerViolation(f"energy residual {worst:.3e} J exceeds {tolerance:g} J at {worst_at}")
    return LedgerReport(max_residual=worst, events_checked=checked, min_ies=lo, max_ies=hi)
