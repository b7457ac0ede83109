"""Pedestrian-crossing wait delays and the ETA error caused by ignoring them."""
from __future__ import annotations

from dataclasses import dataclass, field
from pathlib import Path
from typing import Literal

from .errors import ConfigError, InvalidInputError
from .eta import WalkConfig, display_minutes
from .geo import Crossing, CrossingKind, Route, route_length_m

__all__ = [
    "AuditReport",
    "Crossing",
    "CrossingKind",
    "WaitModel",
    "crossing_audit",
    "crossing_delay_s",
    "route_delay_s",
]

Bound = Literal["expected", "worst_case"]

# Zebra (no signal) and Puffin (up to two minutes of signal wait) are the only
# anchored values; the rest are placeholder configuration.
DEFAULT_WAITS: dict[CrossingKind, tuple[float, float]] = {
    CrossingKind.ZEBRA: (0.0, 0.0),
    CrossingKind.PUFFIN: (60.0, 120.0),
    CrossingKind.PELICAN: (30.0, 90.0),
    CrossingKind.TOUCAN: (30.0, 90.0),
    CrossingKind.PEGASUS: (30.0, 90.0),
    CrossingKind.SIGNALLED_JUNCTION: (30.0, 90.0),
    CrossingKind.SCHOOL_PATROL: (30.0, 90.0),
}


@dataclass(frozen=True)
class WaitModel:
    """Per-kind (expected, worst-case) signal waits in seconds."""

    waits: dict = field(default_factory=lambda: dict(DEFAULT_WAITS))

    def __post_init__(self):
        for kind, (expected, worst) in self.waits.items():
            if not 0 <= expected <= worst:
                raise ConfigError(f"{kind.value}: need 0 <= expected ({expected}) <= worst ({worst})")

    @classmethod
    def parse(cls, text: str, base: "WaitModel | None" = None) -> "WaitModel":
        """Parse ``<Kind>.expected_s = 12`` / ``<Kind>.worst_s = 30`` lines over ``base``."""
        waits = dict((base or cls()).waits)
        for lineno, raw in enumerate(text.splitlines(), start=1):
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            if "=" not in line:
                raise ConfigError(f"wait model line {lineno}: expected 'key = value'")
            key, value = (s.strip() for s in line.split("=", 1))
            kind_name, _, slot = key.partition(".")
            try:
                kind = CrossingKind.parse(kind_name)
            except ValueError as exc:
                raise ConfigError(f"wait model line {lineno}: {exc}") from None
            try:
                seconds = float(value)
            except ValueError:
                raise ConfigError(f"wait model line {lineno}: {key} is not a number") from None
            expected, worst = waits.get(kind, (0.0, 0.0))
            if slot == "expected_s":
                expected = seconds
            elif slot == "worst_s":
                worst = seconds
            else:
                raise ConfigError(f"wait model line {lineno}: unknown key {key!r}")
            waits[kind] = (expected, worst)
        return cls(waits)

    @classmethod
    def load(cls, path) -> "WaitModel":
        return cls.parse(Path(path).read_text())

    def dumps(self) -> str:
        lines = []
        for kind in CrossingKind:
            if kind in self.waits:
                expected, worst = self.waits[kind]
                lines.append(f"{kind.value}.expected_s = {expected!r}")
                lines.append(f"{kind.value}.worst_s = {worst!r}")
        return "\n".join(lines) + "\n"


@dataclass(frozen=True)
class AuditReport:
    suggested_length_m: float
    actual_length_m: float
    naive_s: float
    naive_minutes: int
    corrected_s: float
    corrected_minutes: int
    discrepancy_s: float
    relative_discrepancy: float


def crossing_delay_s(c: Crossing, w: WaitModel = WaitModel(), bound: Bound = "expected") -> float:
    try:
        expected, worst = w.waits[c.kind]
    except KeyError:
        raise ConfigError(f"wait model has no entry for crossing kind {c.kind.value}") from None
    if bound == "expected":
        return float(expected)
    if bound == "worst_case":
        return float(worst)
    raise InvalidInputError(f"unknown bound {bound!r}; use 'expected' or 'worst_case'")


def route_delay_s(r: Route, w: WaitModel = WaitModel(), bound: Bound = "expected") -> float:
    return float(sum(crossing_delay_s(c, w, bound) for c in r.crossings))


def crossing_audit(
    r_suggested: Route,
    r_actual: Route,
    w: WaitModel = WaitModel(),
    speed: float = WalkConfig().speed,
    bound: Bound = "expected",
) -> AuditReport:
    """Compare the naive time of a suggested route with the crossing-aware time of the walked one."""
    if not speed > 0:
        raise InvalidInputError(f"speed must be > 0, got {speed}")
    suggested = route_length_m(r_suggested)
    actual = route_length_m(r_actual)
    naive = suggested / speed
    corrected = actual / speed + route_delay_s(r_actual, w, bound)
    discrepancy = corrected - naive
    return AuditReport(
        suggested_length_m=suggested,
        actual_length_m=actual,
        naive_s=naive,
        naive_minutes=display_minutes(naive),
        corrected_s=corrected,
        corrected_minutes=display_minutes(corrected),
        discrepancy_s=discrepancy,
        relative_discrepancy=abs(discrepancy) / corrected if corrected > 0 else 0.0,
    )
