"""Synthetic pedestrian movement profiles with known effect sizes.

The generator builds walking routes (polylines with elevation and crossing
inventories), a population of walkers, and one travel record per
(user, route, repeat). Actual walking time is

    t = sum(run_i * pace_i) / v_eff * exp(noise) + crossing waits

where ``pace_i`` slows uphill/downhill segments, ``v_eff`` combines the
walker's base speed with weather and fatigue multipliers, and waits are drawn
uniformly up to each crossing kind's worst case. The estimate is the naive
route-length over app-speed ETA, so every effect shows up in the correction
value. With all effects neutral and the walker at the app speed, corrections
are exactly zero.

Elevation-length collinearity is induced by giving each route an
independently drawn mean slope. The dispersion of those slopes is solved by
bisection so corr(length, total elevation change) hits a target.

Default effect sizes are calibration constants, not measurements.
"""
from __future__ import annotations

import dataclasses
import datetime as dt
import json
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
from joblib import Parallel, delayed

from .crossings import WaitModel
from .dataset import (
    DEFAULT_WEATHER_LEVELS,
    WEEKDAYS,
    TravelRecord,
    correction_target,
    pearson_corr,
)
from .errors import ConfigError
from .geo import (
    Crossing,
    CrossingKind,
    GeoPoint,
    Route,
    elevation_stats,
    route_length_m,
    segment_runs,
    slope_stats,
)

# route, user and travel streams are separate spawn-key branches of the master seed
_ROUTES, _USERS, _TRAVELS = 0, 1, 2


def _default_weather_probs():
    return {"clear": 0.45, "cloudy": 0.27, "rain": 0.18, "snow": 0.02, "windy": 0.08, "unknown": 0.0}


def _default_weather_multipliers():
    return {"clear": 1.0, "cloudy": 0.99, "rain": 0.95, "snow": 0.90, "windy": 0.97, "unknown": 1.0}


def _default_crossing_mix():
    return {
        "Zebra": 0.35, "Puffin": 0.25, "Pelican": 0.12, "Toucan": 0.10,
        "Pegasus": 0.02, "SignalledJunction": 0.13, "SchoolPatrol": 0.03,
    }


@dataclass(frozen=True)
class GeneratorConfig:
    seed: int = 42
    n_users: int = 39
    n_male: int = 21
    n_routes: int = 48
    repeats_per_route: int = 5

    route_min_m: float = 800.0
    route_max_m: float = 4500.0
    route_mean_m: float = 2800.0
    segment_m: float = 25.0
    origin_lat: float = 51.752
    origin_lon: float = -1.2577

    mean_slope_pct: float = 3.1
    slope_corr_target: float = 0.7832
    max_segment_slope_pct: float = 9.0

    # walker speed model (m/s)
    speed_male: float = 1.63
    speed_female: float = 1.59
    speed_spread: float = 0.025
    age_mean: float = 33.2
    age_sd: float = 2.6
    age_min: float = 28.0
    age_max: float = 38.0
    age_effect: float = -0.02  # m/s per decade above 33
    fatigue: float = 0.95  # speed multiplier per 10 000 prior steps
    steps_per_hour: float = 650.0
    steps_noise: float = 1200.0
    day_start_min: int = 420
    day_end_min: int = 1260

    weather_probs: dict = field(default_factory=_default_weather_probs)
    weather_multiplier: dict = field(default_factory=_default_weather_multipliers)

    slope_penalty: float = 0.006  # pace increase per % uphill slope
    downhill_penalty: float = 0.002  # pace increase per % downhill slope

    crossings_per_km: float = 0.6
    crossing_mix: dict = field(default_factory=_default_crossing_mix)

    noise_sigma: float = 0.02
    app_speed: float = 1.339
    start_date: str = "2016-04-04"
    n_days: int = 70

    def __post_init__(self):
        for name in ("n_users", "n_routes", "repeats_per_route", "n_days"):
            if getattr(self, name) < 1:
                raise ConfigError(f"{name} must be >= 1")
        if not 0 <= self.n_male <= self.n_users:
            raise ConfigError("n_male must be within [0, n_users]")
        if not 0 < self.route_min_m <= self.route_mean_m <= self.route_max_m:
            raise ConfigError("route_mean_m must lie within [route_min_m, route_max_m]")
        if self.route_min_m < 2 * self.segment_m or self.segment_m <= 0:
            raise ConfigError("segment_m must be positive and at most half of route_min_m")
        for name in ("speed_male", "speed_female", "app_speed", "fatigue"):
            if not getattr(self, name) > 0:
                raise ConfigError(f"{name} must be > 0")
        for name in ("speed_spread", "noise_sigma", "slope_penalty", "downhill_penalty",
                     "crossings_per_km", "mean_slope_pct", "steps_per_hour", "steps_noise", "age_sd"):
            if getattr(self, name) < 0:
                raise ConfigError(f"{name} must be >= 0")
        if not 0 < self.slope_corr_target <= 1:
            raise ConfigError("slope_corr_target must be in (0, 1]")
        if self.age_min > self.age_max or self.age_min <= 0:
            raise ConfigError("age range must satisfy 0 < age_min <= age_max")
        if not 0 <= self.day_start_min < self.day_end_min <= 1440:
            raise ConfigError("day window must satisfy 0 <= day_start_min < day_end_min <= 1440")
        if set(self.weather_probs) - set(self.weather_multiplier):
            raise ConfigError("weather_probs lists levels without a weather_multiplier")
        if "clear" not in self.weather_probs:
            raise ConfigError("weather_probs must include the reference level 'clear'")
        if any(p < 0 for p in self.weather_probs.values()) or sum(self.weather_probs.values()) <= 0:
            raise ConfigError("weather_probs must be non-negative with a positive sum")
        for level, mult in self.weather_multiplier.items():
            if not mult > 0:
                raise ConfigError(f"weather_multiplier.{level} must be > 0")
        for kind, wgt in self.crossing_mix.items():
            try:
                CrossingKind.parse(kind)
            except ValueError:
                raise ConfigError(f"crossing_mix.{kind}: unknown crossing kind") from None
            if wgt < 0:
                raise ConfigError(f"crossing_mix.{kind} must be >= 0")
        if self.crossings_per_km > 0 and sum(self.crossing_mix.values()) <= 0:
            raise ConfigError("crossing_mix needs a positive total weight")
        # slowest plausible walker: 4 sd below the slower mean, oldest age, worst multipliers
        age_term = self.age_effect * (max(abs(self.age_max - 33), abs(self.age_min - 33)) / 10)
        slowest = min(self.speed_male, self.speed_female) - 4 * self.speed_spread - abs(age_term)
        if slowest <= 0:
            name = "speed_spread" if self.speed_spread > 0 else "age_effect"
            raise ConfigError(f"{name}: resulting walking speeds can be non-positive")

    @property
    def weather_levels(self) -> tuple[str, ...]:
        extra = [w for w in self.weather_probs if w not in DEFAULT_WEATHER_LEVELS]
        return tuple(DEFAULT_WEATHER_LEVELS) + tuple(extra)

    # -- flat key = value config files --

    @classmethod
    def parse(cls, text: str) -> "GeneratorConfig":
        kwargs: dict = {}
        defaults = cls()
        types = {f.name: type(getattr(defaults, f.name)) for f in dataclasses.fields(cls)}
        for lineno, raw in enumerate(text.splitlines(), start=1):
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            if "=" not in line:
                raise ConfigError(f"config line {lineno}: expected 'key = value'")
            key, value = (s.strip() for s in line.split("=", 1))
            name, _, sub = key.partition(".")
            if name not in types:
                raise ConfigError(f"config line {lineno}: unknown parameter {name!r}")
            if types[name] is dict and not sub:
                raise ConfigError(f"config line {lineno}: {name} needs a '.<level>' suffix")
            try:
                if types[name] is dict:
                    d = kwargs.setdefault(name, dict(getattr(defaults, name)))
                    d[sub] = float(value)
                elif types[name] is int:
                    kwargs[name] = int(value)
                elif types[name] is float:
                    kwargs[name] = float(value)
                else:
                    kwargs[name] = value
            except ValueError:
                raise ConfigError(f"config line {lineno}: bad value for {key}: {value!r}") from None
        return cls(**kwargs)

    @classmethod
    def load(cls, path) -> "GeneratorConfig":
        return cls.parse(Path(path).read_text())

    def dumps(self) -> str:
        lines = []
        for f in dataclasses.fields(self):
            v = getattr(self, f.name)
            if isinstance(v, dict):
                lines += [f"{f.name}.{k} = {v[k]!r}" for k in v]
            else:
                lines.append(f"{f.name} = {v}")
        return "\n".join(lines) + "\n"

    def to_json(self) -> dict:
        return dataclasses.asdict(self)


@dataclass(frozen=True)
class EffectLedger:
    """True effect sizes used by the generator (all calibration choices)."""

    effects: dict
    route_mean_slope_pct: dict
    user_speed: dict
    length_elevation_corr: float
    slope_dispersion: float

    def to_json(self) -> dict:
        return dataclasses.asdict(self)

    def dumps(self) -> str:
        return json.dumps(self.to_json(), indent=2, sort_keys=True) + "\n"


@dataclass(frozen=True)
class SynthResult:
    routes: tuple[Route, ...]
    records: tuple[TravelRecord, ...]
    truth: EffectLedger


def _rng(cfg: GeneratorConfig, *key: int) -> np.random.Generator:
    return np.random.default_rng(np.random.SeedSequence(cfg.seed, spawn_key=key))


# -- routes -----------------------------------------------------------------


def route_lengths(cfg: GeneratorConfig) -> np.ndarray:
    """Route lengths in [min, max] whose sample mean equals the target mean.

    Uniform draws are bent by a power transform whose exponent is found by
    bisection; bounds are preserved because the transform maps [0,1] to itself.
    """
    u = _rng(cfg, _ROUTES, 0).random(cfg.n_routes)
    lo, hi = cfg.route_min_m, cfg.route_max_m
    target = (cfg.route_mean_m - lo) / (hi - lo) if hi > lo else 0.0
    if hi == lo or cfg.n_routes == 1:
        return np.full(cfg.n_routes, cfg.route_mean_m)
    a, b = -8.0, 8.0  # log-exponent bracket
    for _ in range(200):
        mid = 0.5 * (a + b)
        if np.mean(u ** math.exp(mid)) > target:
            a = mid
        else:
            b = mid
    return lo + (hi - lo) * u ** math.exp(0.5 * (a + b))


def _unit_profile(rng, n_seg: int, max_ratio: float) -> np.ndarray:
    """Signed per-segment slope shape with length-weighted mean |shape| = 1."""
    z = np.empty(n_seg)
    state = rng.normal()
    for i in range(n_seg):
        state = 0.85 * state + math.sqrt(1 - 0.85**2) * rng.normal()
        z[i] = state
    z = np.clip(z, -max_ratio, max_ratio)
    scale = np.mean(np.abs(z))
    return z / scale if scale > 0 else z


def _polyline(rng, cfg: GeneratorConfig, length: float):
    n_seg = max(2, int(round(length / cfg.segment_m)))
    runs = np.full(n_seg, length / n_seg)
    heading = rng.uniform(0, 2 * math.pi)
    headings = heading + np.cumsum(rng.normal(0, 0.25, n_seg))
    lat0 = cfg.origin_lat + rng.normal(0, 0.01)
    lon0 = cfg.origin_lon + rng.normal(0, 0.015)
    m_per_deg_lat = 111_195.0
    m_per_deg_lon = m_per_deg_lat * math.cos(math.radians(lat0))
    dlat = np.cumsum(runs * np.cos(headings)) / m_per_deg_lat
    dlon = np.cumsum(runs * np.sin(headings)) / m_per_deg_lon
    lat = np.concatenate([[lat0], lat0 + dlat])
    lon = np.concatenate([[lon0], lon0 + dlon])
    return lat, lon


def _solve_dispersion(lengths, unit_totals, z, target):
    """Exponent alpha such that corr(length, unit_total * z**alpha) ~= target."""
    def corr(alpha):
        s = z**alpha
        return pearson_corr(lengths, unit_totals * s / s.mean())

    if corr(0.0) <= target:
        return 0.0
    a, b = 0.0, 1.0
    while corr(b) > target and b < 64:
        b *= 2
    for _ in range(100):
        mid = 0.5 * (a + b)
        if corr(mid) > target:
            a = mid
        else:
            b = mid
    return 0.5 * (a + b)


def generate_routes(cfg: GeneratorConfig, waits: WaitModel = WaitModel()):
    lengths = route_lengths(cfg)
    geoms, shapes, unit_totals, inventories = [], [], [], []
    for r, length in enumerate(lengths):
        rng = _rng(cfg, _ROUTES, 1, r)
        lat, lon = _polyline(rng, cfg, float(length))
        runs = np.asarray([length / (lat.size - 1)] * (lat.size - 1))
        shape = _unit_profile(rng, lat.size - 1, cfg.max_segment_slope_pct / max(cfg.mean_slope_pct, 1e-9))
        geoms.append((lat, lon))
        shapes.append(shape)
        unit_totals.append(float(np.sum(np.abs(shape) * runs)) / 100.0)
        n_cross = rng.poisson(cfg.crossings_per_km * length / 1000.0) if cfg.crossings_per_km > 0 else 0
        kinds = list(cfg.crossing_mix)
        probs = np.array([cfg.crossing_mix[k] for k in kinds], float)
        inv = []
        if n_cross:
            probs = probs / probs.sum()
            picks = rng.choice(len(kinds), size=n_cross, p=probs)
            chain = np.sort(rng.uniform(0.02, 0.98, n_cross)) * length
            inv = [(float(c), CrossingKind.parse(kinds[k])) for c, k in zip(chain, picks)]
        inventories.append(inv)

    z = np.exp(_rng(cfg, _ROUTES, 2).normal(0, 1, cfg.n_routes))
    unit_totals = np.array(unit_totals)
    alpha = _solve_dispersion(lengths, unit_totals, z, cfg.slope_corr_target) if cfg.n_routes > 2 else 0.0
    slopes = cfg.mean_slope_pct * z**alpha / np.mean(z**alpha)

    routes = []
    for r in range(cfg.n_routes):
        lat, lon = geoms[r]
        runs_nominal = lengths[r] / (lat.size - 1)
        rises = shapes[r] * slopes[r] / 100.0 * runs_nominal
        elev = np.concatenate([[60.0], 60.0 + np.cumsum(rises)])
        points = tuple(GeoPoint(float(a), float(b), float(round(h, 3))) for a, b, h in zip(lat, lon, elev))
        proto = Route(f"R{r:02d}", points)
        horizontal = route_length_m(proto)
        crossings = tuple(Crossing(min(c, horizontal), k) for c, k in inventories[r])
        routes.append(Route(proto.id, points, crossings))
    return tuple(routes), float(alpha)


# -- walkers and travels ----------------------------------------------------


def _users(cfg: GeneratorConfig):
    rng = _rng(cfg, _USERS, 0)
    genders = np.array(["male"] * cfg.n_male + ["female"] * (cfg.n_users - cfg.n_male))
    rng.shuffle(genders)
    users = []
    for u in range(cfg.n_users):
        urng = _rng(cfg, _USERS, 1, u)
        age = float(np.clip(round(urng.normal(cfg.age_mean, cfg.age_sd)), cfg.age_min, cfg.age_max))
        base = cfg.speed_male if genders[u] == "male" else cfg.speed_female
        personal = urng.normal(0.0, cfg.speed_spread) if cfg.speed_spread > 0 else 0.0
        speed = base + personal + cfg.age_effect * (age - 33.0) / 10.0
        if speed <= 0:
            raise ConfigError("speed_spread: drew a non-positive walking speed")
        users.append({"user_id": f"U{u:02d}", "gender": str(genders[u]), "age": age, "speed": float(speed)})
    return users


def _route_cache(route: Route, cfg: GeneratorConfig):
    runs = segment_runs(route)
    rises = np.diff(route.elevations)
    cache = {}
    for direction in ("forward", "reverse"):
        r_runs = runs if direction == "forward" else runs[::-1]
        r_rises = rises if direction == "forward" else -rises[::-1]
        slope = 100.0 * r_rises / r_runs
        pace = 1.0 + cfg.slope_penalty * np.maximum(slope, 0.0) + cfg.downhill_penalty * np.maximum(-slope, 0.0)
        es = elevation_stats(route)
        gain, loss = (es.gain, es.loss) if direction == "forward" else (es.loss, es.gain)
        cache[direction] = {
            "length": math.fsum(r_runs),
            "walk": math.fsum(r_runs * pace),
            "gain": gain,
            "loss": loss,
        }
    return cache


def _travels_for_user(cfg, user, u_index, routes, caches, waits):
    rng = _rng(cfg, _TRAVELS, u_index)
    levels = list(cfg.weather_probs)
    wprobs = np.array([cfg.weather_probs[w] for w in levels], float)
    wprobs = wprobs / wprobs.sum()
    start = dt.date.fromisoformat(cfg.start_date)
    out = []
    for r_index, route in enumerate(routes):
        signal_worst = [waits.waits[c.kind][1] for c in route.crossings]
        for _ in range(cfg.repeats_per_route):
            direction = "forward" if rng.random() < 0.5 else "reverse"
            day = start + dt.timedelta(days=int(rng.integers(0, cfg.n_days)))
            tod = int(rng.integers(cfg.day_start_min, cfg.day_end_min))
            weather = levels[int(rng.choice(len(levels), p=wprobs))]
            hours_awake = max(0.0, (tod - cfg.day_start_min) / 60.0)
            steps = int(max(0.0, round(cfg.steps_per_hour * hours_awake + rng.normal(0, 1) * cfg.steps_noise)))
            wait = math.fsum(rng.uniform(0.0, 1.0) * w for w in signal_worst)
            noise = math.exp(cfg.noise_sigma * rng.normal()) if cfg.noise_sigma > 0 else 1.0

            c = caches[r_index][direction]
            v_eff = user["speed"] * cfg.weather_multiplier[weather] * cfg.fatigue ** (steps / 10_000.0)
            t_actual = c["walk"] / v_eff * noise + wait
            t_est = c["length"] / cfg.app_speed
            out.append(TravelRecord(
                user_id=user["user_id"], route_id=route.id, direction=direction, date=day,
                time_of_day_min=float(tod), weekday=WEEKDAYS[day.weekday()], weather=weather,
                age_years=user["age"], gender=user["gender"], total_steps=steps,
                route_length_m=c["length"], elev_total_m=c["gain"] + c["loss"],
                elev_gain_m=c["gain"], elev_loss_m=c["loss"],
                t_estimated_s=t_est, t_actual_s=t_actual,
            ))
    return out


def generate(cfg: GeneratorConfig = GeneratorConfig(), waits: WaitModel = WaitModel(), n_jobs: int = 1) -> SynthResult:
    """Generate routes, travel records (ordered by user, route, repeat) and the effect ledger."""
    routes, alpha = generate_routes(cfg, waits)
    users = _users(cfg)
    caches = [_route_cache(r, cfg) for r in routes]
    if n_jobs == 1:
        per_user = [_travels_for_user(cfg, u, i, routes, caches, waits) for i, u in enumerate(users)]
    else:
        per_user = Parallel(n_jobs=n_jobs, prefer="threads")(
            delayed(_travels_for_user)(cfg, u, i, routes, caches, waits) for i, u in enumerate(users)
        )
    records = tuple(rec for chunk in per_user for rec in chunk)

    lengths = np.array([route_length_m(r) for r in routes])
    totals = np.array([elevation_stats(r).total_change for r in routes])
    ledger = EffectLedger(
        effects={
            "speed_male": cfg.speed_male,
            "speed_female": cfg.speed_female,
            "speed_spread": cfg.speed_spread,
            "age_effect_per_decade": cfg.age_effect,
            "fatigue_per_10k_steps": cfg.fatigue,
            "weather_multiplier": dict(cfg.weather_multiplier),
            "slope_penalty_per_pct": cfg.slope_penalty,
            "downhill_penalty_per_pct": cfg.downhill_penalty,
            "crossings_per_km": cfg.crossings_per_km,
            "noise_sigma": cfg.noise_sigma,
            "app_speed": cfg.app_speed,
            "note": "calibration constants chosen for the generator, not measured values",
        },
        route_mean_slope_pct={r.id: slope_stats(r).mean_slope_pct for r in routes},
        user_speed={u["user_id"]: u["speed"] for u in users},
        length_elevation_corr=pearson_corr(lengths, totals) if len(routes) > 2 else float("nan"),
        slope_dispersion=alpha,
    )
    return SynthResult(routes, records, ledger)


# -- certification ----------------------------------------------------------


@dataclass(frozen=True)
class EffectCheck:
    driver: str
    expected_sign: int  # +1, -1, or 0 for a null effect
    statistic: float  # correlation, or mean difference for weather levels
    z: float  # approximate z-score of the statistic at the driver's sampling unit
    n_units: int
    status: str  # "agree", "inconclusive" or "contradict"

    @property
    def ok(self) -> bool:
        return self.status != "contradict"


@dataclass(frozen=True)
class EffectReport:
    checks: tuple[EffectCheck, ...]

    @property
    def certified(self) -> bool:
        return all(c.ok for c in self.checks)

    @property
    def failures(self) -> list[str]:
        return [c.driver for c in self.checks if not c.ok]

    @property
    def inconclusive(self) -> list[str]:
        return [c.driver for c in self.checks if c.status == "inconclusive"]


NULL_BAND = 0.05
Z_CRIT = 2.0


def _sign(x: float, tol: float = 1e-12) -> int:
    return 0 if abs(x) <= tol else (1 if x > 0 else -1)


def _status(expected: int, stat: float, z: float) -> str:
    if expected == 0:
        return "agree" if abs(stat) <= NULL_BAND or abs(z) < Z_CRIT else "contradict"
    if _sign(stat) == expected:
        return "agree"
    return "inconclusive" if abs(z) < Z_CRIT else "contradict"


def _unit_means(keys, values):
    keys = np.asarray(keys)
    uniq, inv = np.unique(keys, return_inverse=True)
    sums = np.bincount(inv, weights=values)
    return uniq, sums / np.bincount(inv)


def effect_check(records, truth: EffectLedger, strict: bool = False) -> EffectReport:
    """Confirm each true driver moves the correction value in its ledger direction.

    The response is the correction per metre of route, so the length scaling
    does not mask drivers that act on pace. User-level drivers (gender, age)
    are tested on per-user means and route-level ones (mean slope) on
    per-route means, with z-scores at that sample size. A wrong-signed driver
    is a failure only when |z| >= 2; otherwise it is reported inconclusive.
    A zero true effect must stay within |r| <= 0.05 or be insignificant.
    With ``strict`` a failing report raises ``ConfigError``.
    """
    e = truth.effects
    y = np.array([correction_target(r) / r.route_length_m for r in records])
    checks = []

    def corr_check(name, x, yy, expected):
        x = np.asarray(x, float)
        n = x.size
        stat = 0.0 if np.ptp(x) == 0 or np.ptp(yy) == 0 else pearson_corr(x, yy)
        z = math.atanh(max(-0.999999, min(0.999999, stat))) * math.sqrt(max(n - 3, 1))
        checks.append(EffectCheck(name, expected, float(stat), z, n, _status(expected, stat, z)))

    routes, y_route = _unit_means([r.route_id for r in records], y)
    corr_check("mean_slope", [truth.route_mean_slope_pct[k] for k in routes], y_route,
               _sign(e["slope_penalty_per_pct"] + e["downhill_penalty_per_pct"]))

    users, y_user = _unit_means([r.user_id for r in records], y)
    first = {}
    for r in records:
        first.setdefault(r.user_id, r)
    corr_check("gender_male", [first[u].gender == "male" for u in users], y_user,
               _sign(e["speed_female"] - e["speed_male"]))
    corr_check("age", [first[u].age_years for u in users], y_user, -_sign(e["age_effect_per_decade"]))

    corr_check("total_steps", [r.total_steps for r in records], y, _sign(1.0 - e["fatigue_per_10k_steps"]))

    wm = e["weather_multiplier"]
    clear = np.array([r.weather == "clear" for r in records])
    for level in sorted(wm):
        if level == "clear" or wm[level] == wm.get("clear", 1.0):
            continue
        mask = np.array([r.weather == level for r in records])
        if mask.sum() < 2 or clear.sum() < 2:
            continue
        # slower weather (multiplier < clear) means larger corrections
        diff = float(y[mask].mean() - y[clear].mean())
        se = math.sqrt(y[mask].var(ddof=1) / mask.sum() + y[clear].var(ddof=1) / clear.sum())
        z = diff / se if se > 0 else math.copysign(math.inf, diff) if diff else 0.0
        expected = _sign(wm["clear"] - wm[level])
        checks.append(EffectCheck(f"weather_{level}", expected, diff, z, int(mask.sum()),
                                  _status(expected, diff, z)))

    report = EffectReport(tuple(checks))
    if strict and not report.certified:
        raise ConfigError(f"generator certification failed for drivers: {report.failures}")
    return report
