"""Flat ``key=value`` scenario files.

Example::

    # paper defaults
    p_b_w = 1
    p_r_w = 4.2
    q_c = 1Wh
    q_ies = 3.4J
    t_d_s = 0.001
    n = 3
    profile = constant      # or piecewise3
    profile_scale = 1
    initial_soc = 0

Energies need a ``J`` or ``Wh`` suffix. Missing keys take the values above.
"""

from __future__ import annotations

import os
import re

from .model import (
    PAPER_N,
    PAPER_RECEIVER,
    WH,
    Constant,
    Piecewise3,
    ReceiverSpec,
    ScenarioSpec,
    ValidatedScenario,
    validate_spec,
)


class ParseError(ValueError):
    def __init__(self, message: str, line: int | None = None, path: str | None = None):
        self.line = line
        self.path = path
        where = f"{path or '<config>'}:{line}: " if line is not None else ""
        super().__init__(where + message)


DEFAULTS = {
    "p_b_w": str(PAPER_RECEIVER.p_b),
    "p_r_w": str(PAPER_RECEIVER.p_r),
    "q_c": "1Wh",
    "q_ies": f"{PAPER_RECEIVER.q_ies!r}J",
    "t_d_s": str(PAPER_RECEIVER.t_d),
    "n": str(PAPER_N),
    "profile": "constant",
    "profile_scale": "1",
    "initial_soc": "0",
}
KEYS = tuple(DEFAULTS)

_ENERGY = re.compile(r"^\s*([-+]?(?:\d+\.?\d*|\.\d+)(?:[eE][-+]?\d+)?)\s*(J|Wh)\s*$")


def parse_energy(text: str) -> float:
    """``'1Wh'`` -> 3600.0, ``'3.4J'`` -> 3.4."""
    m = _ENERGY.match(text)
    if not m:
        raise ValueError(f"expected a number with a J or Wh suffix, got {text!r}")
    value = float(m.group(1))
    return value * WH if m.group(2) == "Wh" else value


def parse_config_text(text: str, path: str | None = None) -> ScenarioSpec:
    values: dict[str, tuple[str, int | None]] = {k: (v, None) for k, v in DEFAULTS.items()}
    seen: set[str] = set()
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ParseError(f"expected key=value, got {raw.strip()!r}", lineno, path)
        key, value = (part.strip() for part in line.split("=", 1))
        if key not in DEFAULTS:
            raise ParseError(f"unknown key {key!r}", lineno, path)
        if key in seen:
            raise ParseError(f"duplicate key {key!r}", lineno, path)
        seen.add(key)
        values[key] = (value, lineno)

    def get(key, conv):
        value, lineno = values[key]
        try:
            return conv(value)
        except ValueError as exc:
            raise ParseError(f"{key}: {exc}", lineno, path) from None

    receiver = ReceiverSpec(
        p_b=get("p_b_w", float),
        p_r=get("p_r_w", float),
        q_c=get("q_c", parse_energy),
        q_ies=get("q_ies", parse_energy),
        t_d=get("t_d_s", float),
    )
    kind = get("profile", str.lower)
    if kind == "constant":
        profile = Constant(receiver.p_b)
    elif kind == "piecewise3":
        profile = Piecewise3(get("profile_scale", float))
    else:
        raise ParseError(f"profile must be 'constant' or 'piecewise3', got {kind!r}", values["profile"][1], path)
    return ScenarioSpec(
        receiver=receiver,
        n=get("n", int),
        profile=profile,
        initial_soc=get("initial_soc", float),
    )


def load_config(path: str | os.PathLike | None) -> ValidatedScenario:
    """Read and validate a scenario file; ``None`` gives the all-defaults scenario.

    Raises:
        ParseError: malformed line, unknown key or bad value (with line number).
        ConstraintViolation: the values parse but break a model condition.
    """
    if path is None:
        return validate_spec(parse_config_text(""))
    with open(path, encoding="utf-8") as fh:
        text = fh.read()
    return validate_spec(parse_config_text(text, str(path)))


def dump_config(s: ValidatedScenario) -> str:
    """Canonical text form of ``s``; :func:`parse_config_text` reads it back exactly."""
    rx = s.receiver
    if isinstance(s.profile, Piecewise3):
        kind, scale = "piecewise3", s.profile.scale
    else:
        kind, scale = "constant", 1.0
    lines = [
        f"p_b_w = {rx.p_b!r}",
        f"p_r_w = {rx.p_r!r}",
        f"q_c = {rx.q_c!r}J",
        f"q_ies = {rx.q_ies!r}J",
        f"t_d_s = {rx.t_d!r}",
        f"n = {s.n}",
        f"profile = {kind}",
        f"profile_scale = {scale!r}",
        f"initial_soc = {s.initial_soc!r}",
    ]
    return "\n".join(lines) + "\n"
