"""Event-driven simulation of IES-assisted time-division charging.

The transmitter serves receivers round-robin in index order. A selected
receiver is coupled once the switching delay has elapsed *and* its IES is
empty; it stays coupled until its IES is full (or its battery is full, or,
under the ``early`` rule, until the energy drawn covers the remaining need).
All crossing times are solved in closed form on each linear piece of the
demand curve, so no time discretisation enters the result.
"""

from __future__ import annotations

import heapq
import math
from dataclasses import dataclass
from enum import Enum
from typing import NamedTuple

from .analytic import conventional_t_oc
from .model import LinearPieces, ValidatedScenario, solve_energy_offset


class NonTermination(RuntimeError):
    """The simulation overran its time or event budget (a protocol bug)."""


class EventKind(str, Enum):
    COUPLE_START = "CoupleStart"
    IES_FULL = "IesFull"
    IES_EMPTY = "IesEmpty"
    BATTERY_FULL = "BatteryFull"
    SWITCH_DONE = "SwitchDone"
    TX_IDLE_START = "TxIdleStart"
    TX_IDLE_END = "TxIdleEnd"
    NEED_MET = "NeedMet"


class DecoupleRule(str, Enum):
    """When a receiver lets go of the transmitter on its last cycle.

    ``fill``: decouple on IES full or battery full.
    ``early``: additionally decouple once the IES holds the remaining need.
    """

    FILL = "fill"
    EARLY = "early"


class EventRecord(NamedTuple):
    time: float
    receiver: int | None
    kind: EventKind
    ies_energy: float
    battery_energy: float


@dataclass(frozen=True)
class SimResult:
    t_oc: float
    per_receiver_finish: tuple[float, ...]
    per_receiver_standby: tuple[float, ...]
    total_standby: float
    switch_count: int
    tx_busy_fraction: float
    event_count: int
    trace: tuple[EventRecord, ...] | None = None


# tie-break priority for simultaneous events
_BREAK = "_break"
_DEFICIT_END = "_deficit_end"
_PRIORITY = {
    EventKind.BATTERY_FULL: 0,
    EventKind.NEED_MET: 1,
    EventKind.IES_FULL: 2,
    EventKind.IES_EMPTY: 3,
    _BREAK: 4,
    _DEFICIT_END: 4,
    EventKind.SWITCH_DONE: 5,
}

_IDLE, _COUPLED, _DISCHARGE, _DONE = range(4)
_COINCIDENT = 1e-14


def _first_root(qa: float, qb: float, qc: float) -> float:
    """Smallest ``s >= 0`` solving ``qa*s^2 + qb*s + qc = 0`` (``inf`` if none)."""
    scale = max(abs(qb), math.sqrt(abs(qa * qc)), 1e-300)
    if abs(qa) <= 1e-14 * scale:
        if qb == 0.0:
            return math.inf
        s = -qc / qb
        return s if s >= 0.0 else math.inf
    disc = qb * qb - 4.0 * qa * qc
    if disc < 0.0:
        return math.inf
    q = -0.5 * (qb + math.copysign(math.sqrt(disc), qb))
    roots = [q / qa]
    if q != 0.0:
        roots.append(qc / q)
    good = [r for r in roots if r >= 0.0]
    return min(good) if good else math.inf


class _Receiver:
    __slots__ = (
        "id", "mode", "t0", "tau0", "e0", "d0", "piece", "deficit", "satisfied",
        "ever_coupled", "standby", "standby_since", "coupled_since", "finish", "version",
    )

    def __init__(self, rid: int, tau: float, piece: int):
        self.id = rid
        self.mode = _IDLE
        self.t0 = 0.0
        self.tau0 = tau
        self.e0 = 0.0
        self.d0 = 0.0
        self.piece = piece
        self.deficit = False
        self.satisfied = False
        self.ever_coupled = False
        self.standby = 0.0
        self.standby_since = 0.0
        self.coupled_since = 0.0
        self.finish = math.nan
        self.version = 0


class EventEngine:
    """One simulation run. Single-threaded; create a new engine per run."""

    def __init__(
        self,
        scenario: ValidatedScenario,
        rule: DecoupleRule = DecoupleRule.FILL,
        record_trace: bool = False,
        max_events: int = 20_000_000,
    ):
        self.sc = scenario
        self.rule = DecoupleRule(rule)
        self.demand: LinearPieces = scenario.demand
        rx = scenario.receiver
        self.p_r = rx.p_r
        self.q_ies = rx.q_ies
        self.t_d = rx.t_d
        tau_init = self.demand.inverse_cumulative(scenario.initial_soc * self.demand.total_energy)
        self.need = self.demand.total_energy - self.demand.cumulative(tau_init)
        self._sat_tol = 1e-12 * self.need
        piece = self.demand.piece_index(tau_init)
        self.rxs = [_Receiver(i, tau_init, piece) for i in range(scenario.n)]
        self.guard_time = 10.0 * conventional_t_oc(rx, scenario.n, scenario.profile, scenario.initial_soc)
        self.max_events = max_events
        self.record_trace = record_trace
        self.trace: list[EventRecord] = []
        self.event_count = 0
        self._internal = 0
        self._heap: list = []
        self._seq = 0
        # transmitter
        self.target: int | None = 0
        self.waiting = False
        self.coupled: int | None = None
        self.switch_count = 0
        self.busy = 0.0
        self.busy_since = 0.0
        self.tx_off_time = 0.0

    # -- bookkeeping -------------------------------------------------------

    def _emit(self, t: float, r: _Receiver | None, kind: EventKind) -> None:
        self.event_count += 1
        if self.record_trace:
            if r is None:
                self.trace.append(EventRecord(t, None, kind, 0.0, 0.0))
            else:
                self.trace.append(EventRecord(t, r.id, kind, r.e0, r.d0))

    def _push(self, t: float, kind, rid: int, version: int) -> None:
        self._seq += 1
        heapq.heappush(self._heap, (t, _PRIORITY[kind], rid, self._seq, kind, version))

    def _piece_params(self, r: _Receiver) -> tuple[float, float, float]:
        d = self.demand
        i = r.piece
        p0 = d.start_power[i] + d.slope[i] * (r.tau0 - d.breaks[i])
        return p0, d.slope[i], d.breaks[i + 1] - r.tau0

    # -- continuous state --------------------------------------------------

    def _advance(self, r: _Receiver, t: float) -> None:
        s = t - r.t0
        r.t0 = t
        if s <= 0.0 or r.mode in (_IDLE, _DONE):
            return
        p0, m, h = self._piece_params(r)
        if r.mode == _COUPLED and r.deficit:
            dd = self.p_r * s
            r.d0 += dd
            r.tau0 += min(solve_energy_offset(p0, m, dd), h)
            return
        ds = min(s, h)
        dc = p0 * ds + 0.5 * m * ds * ds
        r.tau0 += ds
        r.d0 += dc
        if r.mode == _COUPLED:
            r.e0 += self.p_r * s - dc
        else:
            r.e0 -= dc

    def _refresh_piece(self, r: _Receiver) -> None:
        r.piece = self.demand.piece_index(r.tau0)
        if r.mode == _COUPLED:
            p0, m, _ = self._piece_params(r)
            if r.e0 <= 1e-12 * self.q_ies:
                r.e0 = 0.0
                r.deficit = p0 > self.p_r or (p0 == self.p_r and m > 0.0)
            else:
                r.deficit = False
        else:
            r.deficit = False

    def _schedule(self, r: _Receiver) -> None:
        r.version += 1
        if r.mode in (_IDLE, _DONE):
            return
        p0, m, h = self._piece_params(r)
        remaining = self.need - r.d0
        last_piece = r.piece == len(self.demand.slope) - 1
        if last_piece and h <= 1e-12 * max(1.0, self.demand.end):
            self._push(r.t0, EventKind.BATTERY_FULL, r.id, r.version)
            return
        cands: list[tuple[float, object]] = []
        if r.mode == _COUPLED and r.deficit:
            p_r = self.p_r
            cands.append((remaining / p_r, EventKind.BATTERY_FULL))
            if m < 0.0:
                tau_star = r.tau0 + (p_r - p0) / m  # where demand falls back to p_r
                if tau_star < r.tau0 + h:
                    s_star = tau_star - r.tau0
                    cands.append(((p0 * s_star + 0.5 * m * s_star * s_star) / p_r, _DEFICIT_END))
            cands.append(((p0 * h + 0.5 * m * h * h) / p_r, _BREAK))
        else:
            s_bf = solve_energy_offset(p0, m, remaining)
            if s_bf <= h * (1.0 + 1e-12):
                cands.append((s_bf, EventKind.BATTERY_FULL))
            cands.append((h, _BREAK))
            if r.mode == _COUPLED:
                beta = self.p_r - p0
                cands.append((_first_root(-0.5 * m, beta, r.e0 - self.q_ies), EventKind.IES_FULL))
                if r.e0 > 0.0:
                    cands.append((_first_root(-0.5 * m, beta, r.e0), EventKind.IES_EMPTY))
                if self.rule is DecoupleRule.EARLY:
                    cands.append((max(0.0, (remaining - r.e0) / self.p_r), EventKind.NEED_MET))
            elif not r.satisfied:
                cands.append((solve_energy_offset(p0, m, r.e0), EventKind.IES_EMPTY))
            else:
                # the IES holds the whole remaining need: the battery completes as it drains
                s_e = solve_energy_offset(p0, m, r.e0)
                if s_e <= h:
                    cands.append((s_e, EventKind.BATTERY_FULL))
        s, kind = min(cands, key=lambda c: (c[0], _PRIORITY[c[1]]))
        self._push(r.t0 + s, kind, r.id, r.version)

    # -- transmitter -------------------------------------------------------

    def _couple(self, r: _Receiver, t: float) -> None:
        self._advance(r, t)
        if r.ever_coupled:
            gap = t - r.standby_since
            # gaps of a few ulps are coincident events computed along different paths
            if gap > _COINCIDENT * t:
                r.standby += gap
        r.ever_coupled = True
        r.mode = _COUPLED
        r.coupled_since = t
        r.e0 = 0.0
        self.coupled = r.id
        self.waiting = False
        self.busy_since = t
        self._refresh_piece(r)
        self._emit(t, r, EventKind.COUPLE_START)
        self._schedule(r)

    def _decouple(self, r: _Receiver, t: float) -> None:
        self.coupled = None
        self.busy += t - self.busy_since
        n = len(self.rxs)
        nxt = None
        for k in range(1, n + 1):
            cand = self.rxs[(r.id + k) % n]
            if cand.mode != _DONE and not cand.satisfied:
                nxt = cand
                break
        if nxt is None:
            self.target = None
            self.tx_off_time = t
            return
        self.target = nxt.id
        delay = self.t_d if nxt.id != r.id else 0.0
        self.busy_since = t
        self._push(t + delay, EventKind.SWITCH_DONE, nxt.id, -1)

    def _switch_done(self, t: float, rid: int) -> None:
        self.switch_count += 1
        self.busy += t - self.busy_since
        r = self.rxs[rid]
        self._emit(t, r, EventKind.SWITCH_DONE)
        if r.mode == _IDLE:
            self._couple(r, t)
        else:
            self.waiting = True
            self._emit(t, r, EventKind.TX_IDLE_START)

    # -- main loop ---------------------------------------------------------

    def run(self) -> SimResult:
        self._push(0.0, EventKind.SWITCH_DONE, 0, -1)
        heap = self._heap
        while heap:
            t, _, rid, _, kind, version = heapq.heappop(heap)
            if t > self.guard_time:
                raise NonTermination(
                    f"simulated time {t:.6g} s exceeds 10x the conventional charge time "
                    f"({self.guard_time / 10:.6g} s)"
                )
            if self.event_count + self._internal > self.max_events:
                raise NonTermination(f"more than {self.max_events} events")
            if kind is EventKind.SWITCH_DONE:
                self._switch_done(t, rid)
                continue
            r = self.rxs[rid]
            if version != r.version:
                continue
            self._advance(r, t)
            self._handle(r, t, kind)

        if any(r.mode != _DONE for r in self.rxs):
            raise RuntimeError("event queue drained before every battery was full")
        finish = tuple(r.finish for r in self.rxs)
        t_oc = max(finish)
        span = self.tx_off_time if self.tx_off_time > 0 else t_oc
        return SimResult(
            t_oc=t_oc,
            per_receiver_finish=finish,
            per_receiver_standby=tuple(r.standby for r in self.rxs),
            total_standby=sum(r.standby for r in self.rxs),
            switch_count=self.switch_count,
            tx_busy_fraction=self.busy / span if span > 0 else 1.0,
            event_count=self.event_count,
            trace=tuple(self.trace) if self.record_trace else None,
        )

    def _handle(self, r: _Receiver, t: float, kind) -> None:
        if kind == _DEFICIT_END:
            # demand has fallen to p_r on a decreasing piece: the IES starts refilling
            r.deficit = False
            r.e0 = 0.0
            self._internal += 1
            self._schedule(r)
            return
        if kind == _BREAK:
            self._internal += 1
            d = self.demand
            nxt = d.breaks[r.piece + 1]
            if abs(r.tau0 - nxt) <= 1e-9 * max(1.0, nxt):
                r.tau0 = nxt
            self._refresh_piece(r)
            self._schedule(r)
            return

        was_coupled = r.mode == _COUPLED
        if kind is EventKind.BATTERY_FULL:
            r.d0 = self.need
            r.tau0 = self.demand.end
            r.e0 = max(r.e0, 0.0)
            r.mode = _DONE
            r.finish = t
            self._emit(t, r, kind)
            r.version += 1
            if was_coupled:
                self._decouple(r, t)
            return

        if kind is EventKind.IES_FULL or kind is EventKind.NEED_MET:
            if kind is EventKind.IES_FULL:
                r.e0 = self.q_ies
            r.mode = _DISCHARGE
            r.satisfied = r.e0 >= self.need - r.d0 - self._sat_tol
            self._emit(t, r, kind)
            self._refresh_piece(r)
            self._schedule(r)
            self._decouple(r, t)
            return

        if kind is EventKind.IES_EMPTY:
            r.e0 = 0.0
            self._emit(t, r, kind)
            if was_coupled:
                self._refresh_piece(r)
                self._schedule(r)
                return
            r.mode = _IDLE
            r.standby_since = t
            r.version += 1
            if self.waiting and self.target == r.id:
                self._emit(t, r, EventKind.TX_IDLE_END)
                self._couple(r, t)
            return

        raise AssertionError(f"unhandled event {kind!r}")


def run_event_sim(
    s: ValidatedScenario,
    trace: bool = False,
    rule: DecoupleRule | str = DecoupleRule.FILL,
) -> SimResult:
    """Simulate the protocol for scenario ``s`` and report the overall charge time."""
    return EventEngine(s, rule=DecoupleRule(rule), record_trace=trace).run()
