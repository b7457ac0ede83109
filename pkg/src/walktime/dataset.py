"""Travel records, correction targets, feature encoding and dataset CSV persistence.

Column layout of an encoded matrix (FULL mode)::

    route_length_m, elev_total_m, elev_gain_m, elev_loss_m, total_steps,
    time_of_day_sin, time_of_day_cos, weekday_<Tue..Sun>, weather_<level...>,
    direction_reverse, age_years, gender_male, gender_unspecified

Time of day is encoded on the unit circle so 23:59 and 00:01 are neighbours.
Weekday, weather and gender are one-hot against a reference level (Monday,
``clear``, ``female``). NO_DEMOGRAPHICS drops age and gender; NO_ELEVATION
additionally drops the three elevation columns.
"""
from __future__ import annotations

import csv
import datetime as dt
import enum
import io
import json
import math
from dataclasses import asdict, dataclass, fields, replace
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

from .errors import InvalidInputError, SchemaError, UndefinedStatisticError

CSV_HEADER = [
    "user_id", "route_id", "direction", "date", "time_of_day_min", "weekday", "weather",
    "age_years", "gender", "total_steps", "route_length_m", "elev_total_m", "elev_gain_m",
    "elev_loss_m", "t_estimated_s", "t_actual_s",
]

WEEKDAYS = ("Monday", "Tuesday", "Wednesday", "Thursday", "Friday", "Saturday", "Sunday")
GENDERS = ("female", "male", "unspecified")
DIRECTIONS = ("forward", "reverse")
DEFAULT_WEATHER_LEVELS = ("clear", "cloudy", "rain", "snow", "windy", "unknown")
MINUTES_PER_DAY = 1440

ELEVATION_COLUMNS = ("elev_total_m", "elev_gain_m", "elev_loss_m")
DEMOGRAPHIC_COLUMNS = ("age_years", "gender_male", "gender_unspecified")


class FeatureMode(str, enum.Enum):
    FULL = "full"
    NO_DEMOGRAPHICS = "no-demographics"
    NO_ELEVATION = "no-elevation"

    @classmethod
    def parse(cls, text: "str | FeatureMode") -> "FeatureMode":
        if isinstance(text, cls):
            return text
        norm = str(text).strip().lower().replace("_", "-")
        try:
            return cls(norm)
        except ValueError:
            raise SchemaError(f"unknown feature mode {text!r}; use full, no-demographics or no-elevation") from None


@dataclass(frozen=True)
class TravelRecord:
    user_id: str
    route_id: str
    direction: str
    date: dt.date
    time_of_day_min: float
    weekday: str
    weather: str
    age_years: float
    gender: str
    total_steps: int
    route_length_m: float
    elev_total_m: float
    elev_gain_m: float
    elev_loss_m: float
    t_estimated_s: float
    t_actual_s: float

    def __post_init__(self):
        if self.direction not in DIRECTIONS:
            raise SchemaError(f"direction must be forward or reverse, got {self.direction!r}")
        if self.weekday not in WEEKDAYS:
            raise SchemaError(f"unknown weekday {self.weekday!r}")
        if not 0 <= self.time_of_day_min < MINUTES_PER_DAY:
            raise InvalidInputError(f"time_of_day_min {self.time_of_day_min} outside [0, 1440)")
        if not self.age_years > 0:
            raise InvalidInputError(f"age must be > 0, got {self.age_years}")
        if self.total_steps < 0:
            raise InvalidInputError(f"total_steps must be >= 0, got {self.total_steps}")
        for name in ("route_length_m", "elev_total_m", "elev_gain_m", "elev_loss_m"):
            v = getattr(self, name)
            if not (math.isfinite(v) and v >= 0):
                raise InvalidInputError(f"{name} must be finite and >= 0, got {v}")
        for name in ("t_estimated_s", "t_actual_s"):
            v = getattr(self, name)
            if not (math.isfinite(v) and v > 0):
                raise InvalidInputError(f"{name} must be finite and > 0, got {v}")
        if not math.isclose(self.elev_total_m, self.elev_gain_m + self.elev_loss_m, rel_tol=1e-9, abs_tol=1e-9):
            raise InvalidInputError(
                f"elevation total {self.elev_total_m} != gain {self.elev_gain_m} + loss {self.elev_loss_m}"
            )


def correction_target(rec: TravelRecord) -> float:
    """Seconds to add to the estimate to obtain the actual travel time."""
    return rec.t_actual_s - rec.t_estimated_s


# -- encoding ---------------------------------------------------------------


def column_names(mode: FeatureMode, weather_levels: Sequence[str] = DEFAULT_WEATHER_LEVELS) -> list[str]:
    mode = FeatureMode.parse(mode)
    cols = ["route_length_m"]
    if mode is not FeatureMode.NO_ELEVATION:
        cols += list(ELEVATION_COLUMNS)
    cols += ["total_steps", "time_of_day_sin", "time_of_day_cos"]
    cols += [f"weekday_{d}" for d in WEEKDAYS[1:]]
    cols += [f"weather_{w}" for w in weather_levels if w != "clear"]
    cols += ["direction_reverse"]
    if mode is FeatureMode.FULL:
        cols += list(DEMOGRAPHIC_COLUMNS)
    return cols


def feature_group(column: str) -> str:
    """Reporting group of an encoded column (one-hot blocks and the sin/cos pair collapse)."""
    for prefix in ("time_of_day", "weekday", "weather", "gender"):
        if column.startswith(prefix + "_"):
            return prefix
    if column == "direction_reverse":
        return "direction"
    return column


def is_binary_column(column: str) -> bool:
    return column.startswith(("weekday_", "weather_", "gender_", "direction_"))


@dataclass(frozen=True)
class Standardization:
    mean: np.ndarray
    std: np.ndarray
    scaled: np.ndarray  # bool mask of columns that were shifted/scaled

    def apply(self, X: np.ndarray) -> np.ndarray:
        X = np.array(X, dtype=float, copy=True)
        idx = np.flatnonzero(self.scaled)
        X[:, idx] -= self.mean[idx]
        nz = idx[self.std[idx] > 0]
        X[:, nz] /= self.std[nz]
        return X

    def to_json(self) -> dict:
        return {"mean": self.mean.tolist(), "std": self.std.tolist(), "scaled": self.scaled.tolist()}

    @classmethod
    def from_json(cls, d: dict) -> "Standardization":
        return cls(np.array(d["mean"], float), np.array(d["std"], float), np.array(d["scaled"], bool))


@dataclass(frozen=True)
class FeatureMatrix:
    X: np.ndarray
    y: np.ndarray
    column_names: tuple[str, ...]
    mode: FeatureMode
    groups: np.ndarray  # user id per row, for grouped cross-validation
    standardization: Standardization | None = None
    weather_levels: tuple[str, ...] = DEFAULT_WEATHER_LEVELS

    def __post_init__(self):
        if self.X.ndim != 2 or self.X.shape[0] != self.y.shape[0]:
            raise SchemaError(f"X shape {self.X.shape} does not match y length {self.y.shape[0]}")
        if self.X.shape[1] != len(self.column_names):
            raise SchemaError(f"X has {self.X.shape[1]} columns, names list {len(self.column_names)}")
        if not (np.all(np.isfinite(self.X)) and np.all(np.isfinite(self.y))):
            raise SchemaError("feature matrix contains non-finite entries")

    @property
    def n(self) -> int:
        return self.X.shape[0]

    @property
    def p(self) -> int:
        return self.X.shape[1]

    def subset(self, rows) -> "FeatureMatrix":
        rows = np.asarray(rows)
        return replace(self, X=self.X[rows], y=self.y[rows], groups=self.groups[rows])

    @classmethod
    def from_arrays(cls, X, y, column_names=None, groups=None, mode=FeatureMode.FULL) -> "FeatureMatrix":
        """Wrap raw arrays (tests, toy problems); every row is its own group unless given."""
        X = np.atleast_2d(np.asarray(X, dtype=float))
        if X.shape[0] == 1 and np.ndim(y) == 1 and len(y) > 1:
            X = X.T
        y = np.asarray(y, dtype=float)
        names = tuple(column_names) if column_names is not None else tuple(f"x{j}" for j in range(X.shape[1]))
        g = np.asarray(groups) if groups is not None else np.arange(X.shape[0]).astype(str)
        return cls(X, y, names, FeatureMode.parse(mode), g)


def _cyclical_time(minutes: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    angle = 2.0 * np.pi * minutes / MINUTES_PER_DAY
    return np.sin(angle), np.cos(angle)


def encode(
    records: Sequence[TravelRecord],
    mode: "FeatureMode | str" = FeatureMode.FULL,
    weather_levels: Sequence[str] = DEFAULT_WEATHER_LEVELS,
) -> FeatureMatrix:
    mode = FeatureMode.parse(mode)
    if not records:
        raise InvalidInputError("cannot encode an empty record list")
    if "clear" not in weather_levels:
        raise SchemaError("weather levels must include the reference level 'clear'")
    for i, r in enumerate(records):
        if r.weather not in weather_levels:
            raise SchemaError(f"row {i}: weather {r.weather!r} not in declared levels {list(weather_levels)}")
        if r.gender not in GENDERS:
            raise SchemaError(f"row {i}: gender {r.gender!r} not in {list(GENDERS)}")

    def col(name):
        return np.array([getattr(r, name) for r in records], dtype=float)

    sin_t, cos_t = _cyclical_time(col("time_of_day_min"))
    weekday = np.array([WEEKDAYS.index(r.weekday) for r in records])
    weather = np.array([r.weather for r in records])
    gender = np.array([r.gender for r in records])
    values = {
        "route_length_m": col("route_length_m"),
        "elev_total_m": col("elev_total_m"),
        "elev_gain_m": col("elev_gain_m"),
        "elev_loss_m": col("elev_loss_m"),
        "total_steps": col("total_steps"),
        "time_of_day_sin": sin_t,
        "time_of_day_cos": cos_t,
        "direction_reverse": np.array([r.direction == "reverse" for r in records], dtype=float),
        "age_years": col("age_years"),
    }
    for k, day in enumerate(WEEKDAYS[1:], start=1):
        values[f"weekday_{day}"] = (weekday == k).astype(float)
    for w in weather_levels:
        values[f"weather_{w}"] = (weather == w).astype(float)
    for g in GENDERS[1:]:
        values[f"gender_{g}"] = (gender == g).astype(float)

    names = column_names(mode, weather_levels)
    X = np.column_stack([values[c] for c in names])
    y = np.array([correction_target(r) for r in records], dtype=float)
    groups = np.array([r.user_id for r in records])
    return FeatureMatrix(X, y, tuple(names), mode, groups, weather_levels=tuple(weather_levels))


CONTEXT_FIELDS = {
    FeatureMode.FULL: ("route_length_m", "elev_gain_m", "elev_loss_m", "total_steps", "time_of_day_min",
                       "weekday", "weather", "direction", "age_years", "gender"),
    FeatureMode.NO_DEMOGRAPHICS: ("route_length_m", "elev_gain_m", "elev_loss_m", "total_steps",
                                  "time_of_day_min", "weekday", "weather", "direction"),
    FeatureMode.NO_ELEVATION: ("route_length_m", "total_steps", "time_of_day_min", "weekday", "weather",
                               "direction"),
}


def encode_context(context, mode, weather_levels: Sequence[str] = DEFAULT_WEATHER_LEVELS) -> np.ndarray:
    """Encode one travel context (a mapping of record fields) as a raw feature row.

    ``elev_total_m`` may be given; otherwise it is gain + loss. Fields not
    used by ``mode`` are ignored; missing ones raise SchemaError.
    """
    mode = FeatureMode.parse(mode)
    missing = [k for k in CONTEXT_FIELDS[mode] if k not in context]
    if missing:
        raise SchemaError(f"context lacks {missing} required by feature mode {mode.value}")
    c = dict(context)
    if c["weekday"] not in WEEKDAYS:
        raise SchemaError(f"unknown weekday {c['weekday']!r}")
    if c["weather"] not in weather_levels:
        raise SchemaError(f"weather {c['weather']!r} not in declared levels {list(weather_levels)}")
    if c["direction"] not in DIRECTIONS:
        raise SchemaError(f"direction must be forward or reverse, got {c['direction']!r}")
    if mode is FeatureMode.FULL and c["gender"] not in GENDERS:
        raise SchemaError(f"gender {c['gender']!r} not in {list(GENDERS)}")
    tod = float(c["time_of_day_min"])
    sin_t, cos_t = _cyclical_time(np.array([tod]))
    values = {
        "route_length_m": float(c["route_length_m"]),
        "total_steps": float(c["total_steps"]),
        "time_of_day_sin": float(sin_t[0]),
        "time_of_day_cos": float(cos_t[0]),
        "direction_reverse": float(c["direction"] == "reverse"),
    }
    if mode is not FeatureMode.NO_ELEVATION:
        gain, loss = float(c["elev_gain_m"]), float(c["elev_loss_m"])
        values.update(elev_total_m=float(c.get("elev_total_m", gain + loss)), elev_gain_m=gain, elev_loss_m=loss)
    if mode is FeatureMode.FULL:
        values["age_years"] = float(c["age_years"])
        for g in GENDERS[1:]:
            values[f"gender_{g}"] = float(c["gender"] == g)
    for day in WEEKDAYS[1:]:
        values[f"weekday_{day}"] = float(c["weekday"] == day)
    for w in weather_levels:
        values[f"weather_{w}"] = float(c["weather"] == w)
    row = np.array([values[name] for name in column_names(mode, weather_levels)], dtype=float)
    if not np.all(np.isfinite(row)):
        raise SchemaError("context contains non-finite values")
    return row


def fit_standardization(m: FeatureMatrix, train_rows) -> Standardization:
    rows = np.asarray(train_rows)
    if rows.size == 0:
        raise InvalidInputError("standardization needs at least one training row")
    Xt = m.X[rows]
    scaled = np.array([not is_binary_column(c) for c in m.column_names], dtype=bool)
    mean = np.where(scaled, Xt.mean(axis=0), 0.0)
    std = np.where(scaled, Xt.std(axis=0), 1.0)  # population std
    std = np.where(scaled & (std <= 1e-12 * np.maximum(1.0, np.abs(mean))), 0.0, std)
    return Standardization(mean, std, scaled)


def standardize(m: FeatureMatrix, train_rows) -> FeatureMatrix:
    """Scale non-binary columns by train-row mean and population std.

    Constant columns are centered only (std recorded as 0); one-hot and
    direction columns pass through untouched.
    """
    stats = fit_standardization(m, train_rows)
    return replace(m, X=stats.apply(m.X), standardization=stats)


def pearson_corr(a, b) -> float:
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    if a.shape != b.shape or a.ndim != 1 or a.size < 2:
        raise InvalidInputError("pearson_corr needs two equal-length vectors of length >= 2")
    da = a - a.mean()
    db = b - b.mean()
    saa = float(da @ da)
    sbb = float(db @ db)
    if saa == 0 or sbb == 0:
        raise UndefinedStatisticError("correlation undefined for a zero-variance input")
    r = float(da @ db) / math.sqrt(saa * sbb)
    return max(-1.0, min(1.0, r))


# -- CSV persistence --------------------------------------------------------

_FLOAT_FIELDS = {
    "time_of_day_min", "age_years", "route_length_m", "elev_total_m", "elev_gain_m",
    "elev_loss_m", "t_estimated_s", "t_actual_s",
}


def _format(value) -> str:
    if isinstance(value, dt.date):
        return value.isoformat()
    if isinstance(value, float):
        return repr(value)
    return str(value)


def format_dataset_csv(records: Iterable[TravelRecord]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(CSV_HEADER)
    for r in records:
        w.writerow([_format(getattr(r, k)) for k in CSV_HEADER])
    return buf.getvalue()


def parse_dataset_csv(text: str) -> list[TravelRecord]:
    reader = csv.reader(io.StringIO(text))
    header = next(reader, None)
    if header is None:
        raise SchemaError("dataset: empty file")
    header = [h.strip() for h in header]
    if header != CSV_HEADER:
        missing = [c for c in CSV_HEADER if c not in header]
        extra = [c for c in header if c not in CSV_HEADER]
        detail = f"missing {missing}" if missing else f"unexpected {extra}" if extra else "wrong column order"
        raise SchemaError(f"dataset header mismatch: {detail}")
    out = []
    for lineno, row in enumerate(reader, start=2):
        if not row:
            continue
        if len(row) != len(CSV_HEADER):
            raise SchemaError(f"dataset line {lineno}: expected {len(CSV_HEADER)} fields, got {len(row)}")
        kw = dict(zip(CSV_HEADER, row))
        try:
            for k in _FLOAT_FIELDS:
                kw[k] = float(kw[k])
            kw["total_steps"] = int(kw["total_steps"])
            kw["date"] = dt.date.fromisoformat(kw["date"])
            out.append(TravelRecord(**kw))
        except (ValueError, SchemaError) as exc:
            raise SchemaError(f"dataset line {lineno}: {exc}") from None
    return out


def schema_path(dataset_path) -> Path:
    p = Path(dataset_path)
    return p.with_name(p.stem + ".schema.json")


def write_dataset(records: Sequence[TravelRecord], path, weather_levels=DEFAULT_WEATHER_LEVELS) -> None:
    Path(path).write_text(format_dataset_csv(records))
    schema = {
        "format_version": 1,
        "weather_levels": list(weather_levels),
        "columns": {m.value: column_names(m, weather_levels) for m in FeatureMode},
    }
    schema_path(path).write_text(json.dumps(schema, indent=2) + "\n")


def read_dataset(path) -> tuple[list[TravelRecord], tuple[str, ...]]:
    """Read records plus declared weather levels (sidecar schema, else defaults)."""
    records = parse_dataset_csv(Path(path).read_text())
    sp = schema_path(path)
    levels = DEFAULT_WEATHER_LEVELS
    if sp.exists():
        levels = tuple(json.loads(sp.read_text())["weather_levels"])
    return records, levels


def record_as_dict(r: TravelRecord) -> dict:
    d = asdict(r)
    d["date"] = r.date.isoformat()
    return d


RECORD_FIELDS = tuple(f.name for f in fields(TravelRecord))
