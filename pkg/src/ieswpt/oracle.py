"""Fixed-step brute-force oracle for the charging protocol.

Time advances on a uniform grid of width ``dt`` and energy is integrated with
forward Euler, each receiver's demand power being frozen at the start of the
interval. Inside a step the transmitter may act at the crossing point: a
coupling starts when the switch finishes or the target's IES runs dry, and a
coupling ends when the IES (or battery) fills, both located by linear
extrapolation of the frozen rates. Taking protocol decisions only at grid
points instead would make every coupling up to ``dt`` too long, and in the
lockstep no-standby schedule that shows up as spurious standby. Used only to
cross-check :mod:`ieswpt.sim`; it shares no code with the event engine.
"""

from __future__ import annotations

import math

from .analytic import conventional_t_oc
from .model import ValidatedScenario
from .sim import DecoupleRule, NonTermination, SimResult


def run_fixed_step(
    s: ValidatedScenario,
    dt: float,
    rule: DecoupleRule | str = DecoupleRule.FILL,
) -> SimResult:
    if not dt > 0:
        raise ValueError("dt must be positive")
    rule = DecoupleRule(rule)
    rx = s.receiver
    n, p_r, q_ies, t_d = s.n, rx.p_r, rx.q_ies, rx.t_d
    demand = s.demand
    power = demand.power
    tau_init = demand.inverse_cumulative(s.initial_soc * demand.total_energy)
    need = demand.total_energy - demand.cumulative(tau_init)
    full_tol = 1e-9 * need
    shortfall_tol = 1e-12 * need
    guard = 10.0 * conventional_t_oc(rx, n, s.profile, s.initial_soc)

    ies = [0.0] * n
    got_total = [0.0] * n
    tau = [tau_init] * n
    ever = [False] * n
    done = [False] * n
    sat = [False] * n
    finish = [math.nan] * n
    standby = [0.0] * n

    coupled: int | None = None
    target: int | None = 0
    ready = 0.0
    switches = 1
    events = 1
    busy = 0.0
    tx_off = 0.0

    def complete(i: int, at: float) -> None:
        nonlocal events
        done[i] = True
        finish[i] = at
        events += 1

    def discharge(i: int, t0: float, length: float) -> None:
        p = power(tau[i])
        want = min(p * length, need - got_total[i])
        got = min(ies[i], want)
        ies[i] -= got
        got_total[i] += got
        tau[i] += got / p
        if ever[i] and not sat[i] and want - got > shortfall_tol:
            standby[i] += (want - got) / p
        if got_total[i] >= need - full_tol:
            complete(i, t0 + got / p)

    def charge(i: int, t0: float, length: float) -> None:
        p = power(tau[i])
        to_battery = min(p * length, need - got_total[i])
        spare = p_r * length - to_battery
        if ies[i] + spare < 0.0:
            # demand above p_r with the IES drained: battery gets what arrives
            to_battery = p_r * length + ies[i]
            spare = -ies[i]
        ies[i] = min(ies[i] + spare, q_ies)
        got_total[i] += to_battery
        tau[i] += to_battery / p
        if got_total[i] >= need - full_tol:
            complete(i, t0 + length)

    def decouple_after(c: int) -> float:
        """Time until the coupled receiver ``c`` lets go, at the frozen rates."""
        p = power(tau[c])
        rem = need - got_total[c]
        fill = p_r - p
        rate = p if (fill >= 0.0 or ies[c] > 0.0) else p_r
        xs = [rem / rate]
        if fill > 0.0:
            xs.append((q_ies - ies[c]) / fill)
        if rule is DecoupleRule.EARLY:
            xs.append((rem - ies[c]) / p_r)
        return max(min(xs), 0.0)

    step = 0
    while not all(done):
        t = step * dt
        t1 = t + dt
        if t > guard:
            raise NonTermination(f"oracle time {t:.6g} s exceeds guard {guard:.6g} s")
        cur = t
        while cur < t1 and not all(done):
            end, action = t1, None
            if coupled is not None:
                x = decouple_after(coupled)
                if cur + x < t1:
                    end, action = cur + x, "decouple"
            elif target is not None:
                j = target
                empty_at = cur + ies[j] / power(tau[j]) if ies[j] > 0.0 else cur
                start = max(ready, empty_at, cur)
                if start < t1:
                    end, action = start, "couple"

            length = end - cur
            if length > 0.0:
                for i in range(n):
                    if done[i]:
                        continue
                    if i == coupled:
                        charge(i, cur, length)
                        busy += length
                    else:
                        discharge(i, cur, length)
            cur = end

            if action == "couple":
                coupled = target
                ever[coupled] = True
                events += 1
            elif action == "decouple":
                c = coupled
                coupled = None
                events += 1
                sat[c] = done[c] or ies[c] >= need - got_total[c] - full_tol
                nxt = None
                for k in range(1, n + 1):
                    j = (c + k) % n
                    if not done[j] and not sat[j]:
                        nxt = j
                        break
                target = nxt
                if nxt is None:
                    tx_off = cur
                else:
                    ready = cur + (t_d if nxt != c else 0.0)
                    busy += ready - cur
                    switches += 1
                    events += 1
        step += 1

    t_oc = max(finish)
    span = tx_off if tx_off > 0 else t_oc
    return SimResult(
        t_oc=t_oc,
        per_receiver_finish=tuple(finish),
        per_receiver_standby=tuple(standby),
        total_standby=sum(standby),
        switch_count=switches,
        tx_busy_fraction=min(1.0, busy / span) if span > 0 else 1.0,
        event_count=events,
        trace=None,
    )
