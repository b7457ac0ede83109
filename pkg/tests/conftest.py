import math
import os
import sys

import numpy as np
import pytest
from hypothesis import HealthCheck, settings

from walktime.geo import GeoPoint, Route
from walktime.synth import GeneratorConfig, generate

settings.register_profile("default", deadline=None, max_examples=60,
                          suppress_health_check=[HealthCheck.too_slow])
settings.register_profile("ci", deadline=None, max_examples=200)
settings.load_profile(os.environ.get("HYPOTHESIS_PROFILE", "default"))

R = 6_371_008.8


def straight_route(length_m, elev=(60.0, 60.0), crossings=(), route_id="T", lat0=51.75, lon0=-1.25):
    """Due-north route of exactly ``length_m`` horizontal metres."""
    n = len(elev)
    dlat = math.degrees(length_m / R) / (n - 1)
    pts = tuple(GeoPoint(lat0 + i * dlat, lon0, float(h)) for i, h in enumerate(elev))
    return Route(route_id, pts, tuple(crossings))


@pytest.fixture
def route_factory():
    return straight_route


SMALL_CFG = dict(n_users=8, n_male=4, n_routes=6, repeats_per_route=3)


@pytest.fixture(scope="session")
def small_synth():
    return generate(GeneratorConfig(**SMALL_CFG))


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


@pytest.fixture(scope="session")
def default_synth():
    return generate(GeneratorConfig())


def pytest_terminal_summary(terminalreporter):
    mod = sys.modules.get("test_acceptance")
    results = getattr(mod, "RESULTS", None)
    if results:
        terminalreporter.section("acceptance criteria")
        for n in sorted(results):
            terminalreporter.write_line(results[n])
