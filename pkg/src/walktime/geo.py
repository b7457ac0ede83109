"""Polyline geometry and elevation analytics for walking routes.

Distances are great-circle (spherical haversine) with the mean Earth radius.
Elevations are carried per point; there is no live elevation lookup. A
provider would plug in by filling ``GeoPoint.elev`` before a ``Route`` is
built.
"""
from __future__ import annotations

import csv
import enum
import io
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Sequence

import numpy as np

from .errors import InvalidInputError, SchemaError

EARTH_RADIUS_M = 6_371_008.8

ROUTE_HEADER = ["lat", "lon", "elev_m"]
CROSSING_HEADER = ["chainage_m", "kind"]


class CrossingKind(str, enum.Enum):
    """UK Highway Code pedestrian crossing types."""

    ZEBRA = "Zebra"
    PUFFIN = "Puffin"
    PELICAN = "Pelican"
    TOUCAN = "Toucan"
    PEGASUS = "Pegasus"
    SIGNALLED_JUNCTION = "SignalledJunction"
    SCHOOL_PATROL = "SchoolPatrol"

    @classmethod
    def parse(cls, text: str) -> "CrossingKind":
        try:
            return cls(text)
        except ValueError:
            allowed = ", ".join(k.value for k in cls)
            raise SchemaError(f"unknown crossing kind {text!r}; expected one of {allowed}") from None


@dataclass(frozen=True)
class Crossing:
    chainage: float
    kind: CrossingKind


@dataclass(frozen=True)
class GeoPoint:
    lat: float
    lon: float
    elev: float = 0.0

    def __post_init__(self):
        for name in ("lat", "lon", "elev"):
            if not math.isfinite(getattr(self, name)):
                raise InvalidInputError(f"GeoPoint.{name} must be finite, got {getattr(self, name)!r}")
        if not -90.0 <= self.lat <= 90.0:
            raise InvalidInputError(f"latitude {self.lat} outside [-90, 90]")
        if not -180.0 <= self.lon <= 180.0:
            raise InvalidInputError(f"longitude {self.lon} outside [-180, 180]")


@dataclass(frozen=True)
class ElevationStats:
    total_change: float
    gain: float
    loss: float


@dataclass(frozen=True)
class SlopeStats:
    max_slope_pct: float
    mean_slope_pct: float
    slope_length: float
    horizontal_length: float


@dataclass(frozen=True, eq=False)
class Route:
    """An ordered polyline with per-point elevation and a crossing inventory.

    Consecutive duplicate positions are rejected so that every segment has a
    positive run and slope is always defined.
    """

    id: str
    points: tuple[GeoPoint, ...]
    crossings: tuple[Crossing, ...] = field(default=())

    def __post_init__(self):
        object.__setattr__(self, "points", tuple(self.points))
        object.__setattr__(self, "crossings", tuple(self.crossings))
        if len(self.points) < 2:
            raise InvalidInputError(f"route {self.id!r} needs at least 2 points, got {len(self.points)}")
        for i, (a, b) in enumerate(zip(self.points[:-1], self.points[1:])):
            if a.lat == b.lat and a.lon == b.lon:
                raise InvalidInputError(f"route {self.id!r}: duplicate consecutive points at index {i}")
        if self.crossings:
            length = math.fsum(segment_runs(self))
            for c in self.crossings:
                if not (0.0 <= c.chainage <= length):
                    raise InvalidInputError(
                        f"route {self.id!r}: crossing chainage {c.chainage} outside [0, {length}]"
                    )

    def __eq__(self, other):
        if not isinstance(other, Route):
            return NotImplemented
        return (self.id, self.points, self.crossings) == (other.id, other.points, other.crossings)

    def __hash__(self):
        return hash((self.id, self.points, self.crossings))

    @property
    def elevations(self) -> np.ndarray:
        return np.array([p.elev for p in self.points], dtype=float)


def haversine_m(a: GeoPoint, b: GeoPoint) -> float:
    """Great-circle distance in meters between two points."""
    for p in (a, b):
        if not (math.isfinite(p.lat) and math.isfinite(p.lon)):
            raise InvalidInputError("non-finite coordinate")
    phi1, phi2 = math.radians(a.lat), math.radians(b.lat)
    dphi = phi2 - phi1
    dlam = math.radians(b.lon - a.lon)
    h = math.sin(dphi / 2) ** 2 + math.cos(phi1) * math.cos(phi2) * math.sin(dlam / 2) ** 2
    return 2 * EARTH_RADIUS_M * math.asin(min(1.0, math.sqrt(h)))


def haversine_array(lat1, lon1, lat2, lon2) -> np.ndarray:
    """Vectorized haversine over coordinate arrays (degrees in, meters out)."""
    phi1 = np.radians(lat1)
    phi2 = np.radians(lat2)
    dphi = phi2 - phi1
    dlam = np.radians(np.asarray(lon2) - np.asarray(lon1))
    h = np.sin(dphi / 2) ** 2 + np.cos(phi1) * np.cos(phi2) * np.sin(dlam / 2) ** 2
    return 2 * EARTH_RADIUS_M * np.arcsin(np.minimum(1.0, np.sqrt(h)))


def segment_runs(r: Route) -> np.ndarray:
    lat = np.array([p.lat for p in r.points])
    lon = np.array([p.lon for p in r.points])
    return haversine_array(lat[:-1], lon[:-1], lat[1:], lon[1:])


def segment_rises(r: Route) -> np.ndarray:
    return np.diff(r.elevations)


def route_length_m(r: Route, mode: str = "horizontal") -> float:
    """Route length, either planimetric (``horizontal``) or along the ground (``slope``)."""
    if len(r.points) < 2:
        raise InvalidInputError("route needs at least 2 points")
    runs = segment_runs(r)
    # fsum: exactly rounded, so a route and its reversal agree bit-for-bit
    if mode == "horizontal":
        return math.fsum(runs)
    if mode == "slope":
        return math.fsum(np.hypot(runs, segment_rises(r)))
    raise InvalidInputError(f"unknown length mode {mode!r}; use 'horizontal' or 'slope'")


def elevation_stats(r: Route) -> ElevationStats:
    return elevation_stats_from_profile(r.elevations)


def elevation_stats_from_profile(elevations: Sequence[float]) -> ElevationStats:
    d = np.diff(np.asarray(elevations, dtype=float))
    # fsum is order-independent, so reversal swaps gain and loss exactly
    gain = math.fsum(d[d > 0])
    loss = math.fsum(-d[d < 0])
    # total is defined as gain + loss so the identity holds bit-for-bit
    return ElevationStats(total_change=gain + loss, gain=gain, loss=loss)


def slope_stats(r: Route) -> SlopeStats:
    runs = segment_runs(r)
    if np.any(runs <= 0):
        i = int(np.argmin(runs))
        raise InvalidInputError(f"route {r.id!r}: zero-length segment at index {i}")
    rises = segment_rises(r)
    slopes = 100.0 * np.abs(rises) / runs
    horizontal = math.fsum(runs)
    return SlopeStats(
        max_slope_pct=float(np.max(slopes)),
        mean_slope_pct=math.fsum(slopes * runs) / horizontal,
        slope_length=math.fsum(np.hypot(runs, rises)),
        horizontal_length=horizontal,
    )


def reverse_route(r: Route) -> Route:
    length = route_length_m(r)
    crossings = sorted(
        (Crossing(length - c.chainage, c.kind) for c in r.crossings),
        key=lambda c: c.chainage,
    )
    return Route(r.id, tuple(reversed(r.points)), tuple(crossings))


def _parse_rows(text, header, what):
    reader = csv.reader(io.StringIO(text))
    try:
        first = next(reader)
    except StopIteration:
        raise SchemaError(f"{what}: empty file") from None
    if [h.strip() for h in first] != header:
        raise SchemaError(f"{what}: expected header {','.join(header)!r}, got {','.join(first)!r}")
    return [row for row in reader if row]


def parse_crossings_csv(text: str) -> tuple[Crossing, ...]:
    out = []
    for lineno, row in enumerate(_parse_rows(text, CROSSING_HEADER, "crossing inventory"), start=2):
        if len(row) != 2:
            raise SchemaError(f"crossing inventory line {lineno}: expected 2 fields")
        try:
            chainage = float(row[0])
        except ValueError:
            raise SchemaError(f"crossing inventory line {lineno}: bad chainage {row[0]!r}") from None
        out.append(Crossing(chainage, CrossingKind.parse(row[1].strip())))
    return tuple(out)


def read_crossings_csv(path) -> tuple[Crossing, ...]:
    return parse_crossings_csv(Path(path).read_text())


def format_crossings_csv(crossings: Sequence[Crossing]) -> str:
    lines = [",".join(CROSSING_HEADER)]
    lines += [f"{c.chainage:.3f},{c.kind.value}" for c in crossings]
    return "\n".join(lines) + "\n"


def read_route_csv(path, crossings=None, route_id: str | None = None) -> Route:
    """Load a route CSV (``lat,lon,elev_m``) and an optional crossing sidecar."""
    points = []
    for lineno, row in enumerate(_parse_rows(Path(path).read_text(), ROUTE_HEADER, f"route {path}"), start=2):
        if len(row) != 3:
            raise SchemaError(f"route {path} line {lineno}: expected 3 fields")
        try:
            lat, lon, elev = (float(v) for v in row)
        except ValueError:
            raise SchemaError(f"route {path} line {lineno}: non-numeric field") from None
        points.append(GeoPoint(lat, lon, elev))
    inventory = read_crossings_csv(crossings) if crossings is not None else ()
    return Route(route_id or Path(path).stem, tuple(points), inventory)


def format_route_csv(r: Route) -> str:
    lines = [",".join(ROUTE_HEADER)]
    lines += [f"{p.lat!r},{p.lon!r},{p.elev!r}" for p in r.points]
    return "\n".join(lines) + "\n"


def write_route_csv(r: Route, path, crossings_path=None) -> None:
    Path(path).write_text(format_route_csv(r))
    if crossings_path is not None:
        Path(crossings_path).write_text(format_crossings_csv(r.crossings))
