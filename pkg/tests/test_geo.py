import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from walktime.errors import InvalidInputError, SchemaError
from walktime.geo import (
    Crossing, CrossingKind, GeoPoint, Route, elevation_stats, elevation_stats_from_profile, haversine_m,
    parse_crossings_csv, read_route_csv, reverse_route, route_length_m, slope_stats, write_route_csv,
)

from conftest import straight_route

lat = st.floats(-89.0, 89.0)
lon = st.floats(-179.0, 179.0)


def test_haversine_identity_and_degree():
    a = GeoPoint(0, 0, 0)
    assert haversine_m(a, a) == 0
    # R * pi / 180
    assert haversine_m(a, GeoPoint(0, 1, 0)) == pytest.approx(111_195.08, abs=1.0)


def test_haversine_collinear_additivity():
    a, m, b = GeoPoint(0, 0, 0), GeoPoint(0, 0.5, 0), GeoPoint(0, 1, 0)
    assert haversine_m(a, m) + haversine_m(m, b) == pytest.approx(haversine_m(a, b), rel=1e-6)


def test_haversine_rejects_non_finite():
    with pytest.raises(InvalidInputError):
        GeoPoint(float("nan"), 0, 0)


@given(lat, lon, lat, lon, lat, lon)
def test_haversine_symmetric_and_triangle(a1, o1, a2, o2, a3, o3):
    a, b, c = GeoPoint(a1, o1, 0), GeoPoint(a2, o2, 0), GeoPoint(a3, o3, 0)
    assert haversine_m(a, b) == pytest.approx(haversine_m(b, a), rel=1e-12, abs=1e-9)
    assert haversine_m(a, c) <= haversine_m(a, b) + haversine_m(b, c) + 1e-6


def test_route_lengths_flat_and_sloped():
    r = straight_route(200.0, elev=(5, 5, 5))
    assert route_length_m(r) == pytest.approx(200.0, abs=1e-6)
    assert route_length_m(r, "slope") == route_length_m(r)
    one = straight_route(100.0, elev=(0, 9))
    assert route_length_m(one, "slope") == pytest.approx(math.hypot(100, 9), abs=1e-3)


def test_route_needs_two_points():
    with pytest.raises(InvalidInputError):
        Route("x", (GeoPoint(0, 0, 0),))


def test_duplicate_points_rejected():
    p = GeoPoint(1, 1, 0)
    with pytest.raises(InvalidInputError):
        Route("x", (p, p, GeoPoint(1, 2, 0)))


def test_elevation_stats_examples():
    assert elevation_stats_from_profile([100, 100, 100]) == elevation_stats_from_profile([0, 0])
    s = elevation_stats_from_profile([10, 12, 11, 14])
    assert (s.total_change, s.gain, s.loss) == (6, 5, 1)


@given(st.lists(st.floats(-500, 500, allow_nan=False), min_size=2, max_size=60))
def test_elevation_identity(profile):
    s = elevation_stats_from_profile(profile)
    assert s.total_change == s.gain + s.loss
    assert min(s.gain, s.loss) >= 0


def test_slope_stats_examples():
    r = straight_route(16.0, elev=(0, 1.44))
    assert slope_stats(r).max_slope_pct == pytest.approx(9.0, abs=0.01)
    two = straight_route(200.0, elev=(0, 2, 6))
    s = slope_stats(two)
    assert s.mean_slope_pct == pytest.approx(3.0, abs=1e-6)
    assert s.slope_length >= s.horizontal_length
    flat = slope_stats(straight_route(50.0))
    assert flat.max_slope_pct == flat.mean_slope_pct == 0


def test_reverse_route_involution_and_swap():
    r = straight_route(500.0, elev=(0, 17, -1), crossings=(Crossing(100.0, CrossingKind.ZEBRA),))
    rev = reverse_route(r)
    assert rev.crossings[0].chainage == pytest.approx(400.0, abs=1e-9)
    es, er = elevation_stats(r), elevation_stats(rev)
    assert (er.gain, er.loss) == (es.loss, es.gain)
    assert route_length_m(rev) == route_length_m(r)
    assert reverse_route(rev) == r


@given(st.lists(st.floats(0, 300, allow_nan=False), min_size=2, max_size=30), st.floats(10, 5000))
def test_reverse_preserves_lengths(elev, length):
    r = straight_route(length, elev=tuple(elev))
    rev = reverse_route(r)
    for mode in ("horizontal", "slope"):
        assert route_length_m(rev, mode) == pytest.approx(route_length_m(r, mode), rel=1e-9)
    assert route_length_m(r, "slope") >= route_length_m(r)


def test_crossing_chainage_validated():
    with pytest.raises(InvalidInputError):
        straight_route(100.0, crossings=(Crossing(150.0, CrossingKind.PUFFIN),))


def test_crossing_csv_schema():
    assert parse_crossings_csv("chainage_m,kind\n12.5,Puffin\n")[0].kind is CrossingKind.PUFFIN
    with pytest.raises(SchemaError):
        parse_crossings_csv("chainage_m,kind\n12.5,Rainbow\n")
    with pytest.raises(SchemaError):
        parse_crossings_csv("at,kind\n12.5,Zebra\n")


def test_route_csv_roundtrip(tmp_path):
    r = straight_route(300.0, elev=(1.5, 2.25, 0.125), crossings=(Crossing(42.0, CrossingKind.TOUCAN),))
    write_route_csv(r, tmp_path / "T.csv", tmp_path / "T.crossings.csv")
    back = read_route_csv(tmp_path / "T.csv", tmp_path / "T.crossings.csv")
    assert back == r
    assert np.array_equal(back.elevations, r.elevations)
