"""Domain types, charge profiles and parameter validation.

All quantities are SI: watts, joules, seconds. Conversion from watt-hours
happens only at the configuration boundary (see :mod:`ieswpt.config`).
"""

from __future__ import annotations

import bisect
import math
from dataclasses import dataclass, field
from enum import Enum
from typing import Union

WH = 3600.0  # joules per watt-hour


class ConstraintViolation(ValueError):
    """A scenario parameter breaks one of the model's validity conditions."""


# ---------------------------------------------------------------------------
# Charge profiles
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class LinearPieces:
    """Continuous piecewise-linear power curve on ``[breaks[0], breaks[-1]]``.

    Piece ``i`` covers ``[breaks[i], breaks[i+1]]`` and has power
    ``start_power[i] + slope[i] * (t - breaks[i])``.
    """

    breaks: tuple[float, ...]
    start_power: tuple[float, ...]
    slope: tuple[float, ...]
    _energy: tuple[float, ...] = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        if not (len(self.breaks) == len(self.start_power) + 1 == len(self.slope) + 1):
            raise ValueError("need one more break than pieces")
        if any(b <= a for a, b in zip(self.breaks, self.breaks[1:])):
            raise ValueError("breaks must be strictly increasing")
        acc = [0.0]
        for i in range(len(self.slope)):
            w = self.breaks[i + 1] - self.breaks[i]
            acc.append(acc[-1] + self.start_power[i] * w + 0.5 * self.slope[i] * w * w)
        object.__setattr__(self, "_energy", tuple(acc))

    @property
    def end(self) -> float:
        return self.breaks[-1]

    @property
    def total_energy(self) -> float:
        return self._energy[-1]

    def piece_index(self, t: float) -> int:
        """Index of the piece whose half-open interval ``[lo, hi)`` holds ``t``."""
        i = bisect.bisect_right(self.breaks, t) - 1
        return min(max(i, 0), len(self.slope) - 1)

    def power(self, t: float) -> float:
        if t < self.breaks[0] or t > self.end:
            return 0.0
        i = self.piece_index(t)
        return self.start_power[i] + self.slope[i] * (t - self.breaks[i])

    def cumulative(self, t: float) -> float:
        if t <= self.breaks[0]:
            return 0.0
        if t >= self.end:
            return self.total_energy
        i = self.piece_index(t)
        s = t - self.breaks[i]
        return self._energy[i] + self.start_power[i] * s + 0.5 * self.slope[i] * s * s

    def inverse_cumulative(self, energy: float) -> float:
        """Smallest ``t`` with ``cumulative(t) == energy`` (clamped to the domain)."""
        if energy <= 0.0:
            return self.breaks[0]
        if energy >= self.total_energy:
            return self.end
        i = bisect.bisect_right(self._energy, energy) - 1
        i = min(i, len(self.slope) - 1)
        s = solve_energy_offset(self.start_power[i], self.slope[i], energy - self._energy[i])
        return min(self.breaks[i] + s, self.breaks[i + 1])


def solve_energy_offset(p0: float, m: float, e: float) -> float:
    """Solve ``p0*s + m*s**2/2 = e`` for the smallest ``s >= 0``.

    Uses the cancellation-free form ``2e / (p0 + sqrt(p0^2 + 2me))``.
    """
    if e <= 0.0:
        return 0.0
    disc = p0 * p0 + 2.0 * m * e
    if disc < 0.0:
        disc = 0.0
    den = p0 + math.sqrt(disc)
    if den <= 0.0:
        return math.inf
    return 2.0 * e / den


@dataclass(frozen=True)
class Constant:
    """Constant battery demand ``power`` watts."""

    power: float

    def pieces(self, capacity: float) -> LinearPieces:
        return LinearPieces((0.0, capacity / self.power), (self.power,), (0.0,))


# Breakpoints and coefficients of the three-segment practical charger curve,
# written as (lo, hi, intercept, slope) with power = scale*(intercept + slope*t).
PIECEWISE3_SEGMENTS = (
    (0.0, 2400.0, 3.0, 1.0 / 2000.0),
    (2400.0, 3600.0, 231.0 / 20.0, -49.0 / 16000.0),
    (3600.0, 7200.0, 3.0 / 4.0, -1.0 / 16000.0),
)
PIECEWISE3_END = 7200.0
PIECEWISE3_ENERGY = 12960.0  # J per unit scale


@dataclass(frozen=True)
class Piecewise3:
    """Practical charger demand: three linear segments over 0..7200 s.

    ``scale`` multiplies the whole curve; at ``scale=1`` the peak is 4.2 W at
    t = 2400 s and the total energy is 12960 J.
    """

    scale: float = 1.0

    def segment_power(self, index: int, t: float) -> float:
        _, _, c0, c1 = PIECEWISE3_SEGMENTS[index]
        return self.scale * (c0 + c1 * t)

    def pieces(self, capacity: float | None = None) -> LinearPieces:
        # capacity is ignored: the curve defines its own completion energy
        breaks = (PIECEWISE3_SEGMENTS[0][0],) + tuple(s[1] for s in PIECEWISE3_SEGMENTS)
        start = tuple(self.segment_power(i, s[0]) for i, s in enumerate(PIECEWISE3_SEGMENTS))
        slope = tuple(self.scale * s[3] for s in PIECEWISE3_SEGMENTS)
        return LinearPieces(breaks, start, slope)


ChargeProfile = Union[Constant, Piecewise3]


def profile_power(p: ChargeProfile, t: float) -> float:
    """Battery power demand at time ``t`` since charging from empty began."""
    if t < 0:
        raise ValueError("t must be >= 0")
    if isinstance(p, Constant):
        return p.power
    if t > PIECEWISE3_END:
        return 0.0
    for i, (_, hi, _, _) in enumerate(PIECEWISE3_SEGMENTS):
        if t <= hi:
            return p.segment_power(i, t)
    raise AssertionError("unreachable")


def profile_cumulative(p: ChargeProfile, t: float) -> float:
    """Energy delivered by ``p`` over ``[0, t]`` (exact piecewise-quadratic)."""
    if t < 0:
        raise ValueError("t must be >= 0")
    if isinstance(p, Constant):
        return p.power * t
    return p.pieces().cumulative(t)


def profile_end(p: ChargeProfile, capacity: float | None = None) -> float:
    """Time at which a battery charged from empty along ``p`` is full."""
    if isinstance(p, Constant):
        if capacity is None:
            raise ValueError("constant profile needs a battery capacity")
        return capacity / p.power
    return PIECEWISE3_END


def soc_to_time_offset(p: ChargeProfile, s0: float, capacity: float | None = None) -> float:
    """Position on the profile's time axis that corresponds to initial SOC ``s0``.

    ``capacity`` (J) is required for :class:`Constant`, whose end point depends
    on the battery size; :class:`Piecewise3` carries its own energy budget.
    """
    if not 0.0 <= s0 < 1.0:
        raise ValueError("s0 must lie in [0, 1)")
    if isinstance(p, Constant):
        return s0 * profile_end(p, capacity)
    pieces = p.pieces()
    return pieces.inverse_cumulative(s0 * pieces.total_energy)


# ---------------------------------------------------------------------------
# Receiver and scenario
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class ReceiverSpec:
    """Parameters shared by every receiver in a scenario.

    Attributes:
        p_b: battery power demand for the constant profile [W].
        p_r: power received while coupled to the transmitter [W].
        q_c: battery capacity [J].
        q_ies: capacity of the intermediate energy storage [J].
        t_d: switching delay between receivers [s].
    """

    p_b: float
    p_r: float
    q_c: float
    q_ies: float
    t_d: float = 0.0

    def check(self) -> "ReceiverSpec":
        for name in ("p_b", "p_r", "q_c", "q_ies"):
            v = getattr(self, name)
            if not (isinstance(v, (int, float)) and math.isfinite(v) and v > 0):
                raise ConstraintViolation(f"{name} must be a positive finite number, got {v!r}")
        if not (math.isfinite(self.t_d) and self.t_d >= 0):
            raise ConstraintViolation(f"t_d must be >= 0, got {self.t_d!r}")
        if self.p_b >= self.p_r:
            raise ConstraintViolation(
                f"p_b ({self.p_b}) must be below p_r ({self.p_r}); the IES could never fill"
            )
        if self.q_ies >= self.q_c:
            raise ConstraintViolation(f"q_ies ({self.q_ies}) must be below q_c ({self.q_c})")
        return self


@dataclass(frozen=True)
class ScenarioSpec:
    receiver: ReceiverSpec
    n: int = 3
    profile: ChargeProfile | None = None
    initial_soc: float = 0.0


@dataclass(frozen=True)
class ValidatedScenario:
    """A scenario that passed :func:`validate_spec`. Construct only through it."""

    receiver: ReceiverSpec
    n: int
    profile: ChargeProfile
    initial_soc: float

    @property
    def demand(self) -> LinearPieces:
        return self.profile.pieces(self.receiver.q_c)

    @property
    def is_constant(self) -> bool:
        return isinstance(self.profile, Constant)

    def with_(self, **changes) -> "ValidatedScenario":
        """Return a re-validated copy with receiver or scenario fields replaced."""
        rx_fields = {k: changes.pop(k) for k in list(changes) if k in ReceiverSpec.__dataclass_fields__}
        receiver = ReceiverSpec(**{**self.receiver.__dict__, **rx_fields})
        profile = changes.pop("profile", self.profile)
        if isinstance(profile, Constant) and "p_b" in rx_fields:
            profile = Constant(receiver.p_b)
        spec = ScenarioSpec(
            receiver=receiver,
            n=changes.pop("n", self.n),
            profile=profile,
            initial_soc=changes.pop("initial_soc", self.initial_soc),
        )
        if changes:
            raise TypeError(f"unknown fields: {sorted(changes)}")
        return validate_spec(spec)


def validate_spec(s: ScenarioSpec) -> ValidatedScenario:
    """Check every constraint and return an immutable validated scenario.

    Raises:
        ConstraintViolation: on the first violated condition.
    """
    rx = s.receiver.check()
    if isinstance(s.n, bool) or not isinstance(s.n, int) or s.n < 1:
        raise ConstraintViolation(f"n must be an integer >= 1, got {s.n!r}")
    if not (0.0 <= s.initial_soc < 1.0):
        raise ConstraintViolation(f"initial_soc must lie in [0, 1), got {s.initial_soc!r}")
    profile = s.profile if s.profile is not None else Constant(rx.p_b)
    if isinstance(profile, Constant):
        if profile.power != rx.p_b:
            raise ConstraintViolation(
                f"constant profile power ({profile.power}) must equal p_b ({rx.p_b})"
            )
    elif isinstance(profile, Piecewise3):
        if not (math.isfinite(profile.scale) and profile.scale > 0):
            raise ConstraintViolation(f"profile scale must be positive, got {profile.scale!r}")
    else:
        raise ConstraintViolation(f"unknown profile {profile!r}")
    return ValidatedScenario(rx, s.n, profile, float(s.initial_soc))


# ---------------------------------------------------------------------------
# Derived quantities
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class PhaseDurations:
    a: float  # IES charge phase
    b: float  # IES discharge phase
    c: float  # full cycle
    k_l: int  # full cycles before the final one
    c_prime: float  # battery time of the final cycle


class FinalCase(str, Enum):
    A = "a"
    B = "b"
    C = "c"


@dataclass(frozen=True)
class RegimeReport:
    standby: bool
    final_case: FinalCase | None
    n_max: int


# the §IV parameter set, used as configuration defaults
PAPER_RECEIVER = ReceiverSpec(p_b=1.0, p_r=4.2, q_c=1.0 * WH, q_ies=3.4, t_d=1e-3)
PAPER_N = 3
