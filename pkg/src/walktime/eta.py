"""The naive distance-over-speed ETA, its periodic replay, and the relative error metric."""
from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass
from pathlib import Path
from typing import Sequence

from .errors import InvalidInputError, SchemaError
from .geo import Route, route_length_m

# 482 m in 6 minutes: the only speed consistent with the Zebra-crossing route
DEFAULT_SPEED_MPS = 1.339
DEFAULT_TICK_S = 5.0


@dataclass(frozen=True)
class EtaEstimate:
    seconds: float
    display_minutes: int

    @classmethod
    def from_seconds(cls, seconds: float) -> "EtaEstimate":
        if not math.isfinite(seconds) or seconds < 0:
            raise InvalidInputError(f"ETA seconds must be finite and >= 0, got {seconds}")
        return cls(float(seconds), display_minutes(seconds))


@dataclass(frozen=True)
class WalkConfig:
    speed: float = DEFAULT_SPEED_MPS
    tick: float = DEFAULT_TICK_S

    def __post_init__(self):
        if not 0.3 < self.speed < 3.0:
            raise InvalidInputError(f"walking speed {self.speed} m/s outside sanity band (0.3, 3.0)")
        if not self.tick >= 1:
            raise InvalidInputError(f"tick must be >= 1 s, got {self.tick}")


def display_minutes(seconds: float) -> int:
    """Whole minutes shown to the user: seconds rounded up to the next minute."""
    return int(math.ceil(seconds / 60.0))


def naive_eta(remaining_m: float, cfg: WalkConfig = WalkConfig()) -> EtaEstimate:
    if not remaining_m >= 0:
        raise InvalidInputError(f"remaining distance must be >= 0, got {remaining_m}")
    return EtaEstimate.from_seconds(remaining_m / cfg.speed)


def replay_naive(
    route: "Route | float",
    fixes: Sequence[tuple[float, float]],
    cfg: WalkConfig = WalkConfig(),
) -> list[EtaEstimate]:
    """Re-estimate the ETA at every tick boundary from the latest position fix.

    ``route`` is a Route or its horizontal length in meters; ``fixes`` are
    ``(time_s, chainage_m)`` pairs. Ticks run from the first fix time to the
    last one inclusive, each using the most recent fix at or before it.
    """
    length_m = route_length_m(route) if isinstance(route, Route) else float(route)
    if not fixes:
        return []
    times = [float(t) for t, _ in fixes]
    for i in range(1, len(times)):
        if times[i] < times[i - 1]:
            raise InvalidInputError(f"fix times are not monotone at index {i}")
    for _, c in fixes:
        if not 0 <= c <= length_m:
            raise InvalidInputError(f"fix chainage {c} outside [0, {length_m}]")

    out = []
    j = 0
    k = 0
    while True:
        t = times[0] + k * cfg.tick
        if t > times[-1]:
            break
        while j + 1 < len(fixes) and times[j + 1] <= t:
            j += 1
        out.append(naive_eta(max(length_m - fixes[j][1], 0.0), cfg))
        k += 1
    return out


def relative_error(t_actual: float, t_predicted: float) -> float:
    """|actual - predicted| / actual."""
    if not t_actual > 0:
        raise InvalidInputError(f"actual travel time must be > 0, got {t_actual}")
    if t_predicted < 0:
        raise InvalidInputError(f"predicted travel time must be >= 0, got {t_predicted}")
    return abs(t_actual - t_predicted) / t_actual


def read_fixes_csv(path) -> list[tuple[float, float]]:
    reader = csv.reader(io.StringIO(Path(path).read_text()))
    header = next(reader, None)
    if header is None or [h.strip() for h in header] != ["time_s", "chainage_m"]:
        raise SchemaError(f"{path}: expected header 'time_s,chainage_m'")
    return [(float(t), float(c)) for t, c in (row for row in reader if row)]
