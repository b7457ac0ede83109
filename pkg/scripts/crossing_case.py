#!/usr/bin/env python3
"""Naive versus crossing-aware ETAs on straight test routes.

Builds a 146 m route with no crossing and 482 m routes with one Zebra or
Puffin crossing, then prints the estimate under each wait bound.
"""
import math

from walktime.crossings import WaitModel, crossing_delay_s
from walktime.eta import EtaEstimate, WalkConfig, naive_eta
from walktime.geo import Crossing, CrossingKind, GeoPoint, Route, route_length_m

R = 6_371_008.8


def straight(length_m, crossings=()):
    dlat = math.degrees(length_m / R)
    pts = (GeoPoint(51.75, -1.25, 60.0), GeoPoint(51.75 + dlat, -1.25, 60.0))
    return Route(f"straight_{int(length_m)}", pts, tuple(crossings))


def main():
    cfg, waits = WalkConfig(), WaitModel()
    cases = [("146 m, no crossing", straight(146.0))]
    for kind in ("Zebra", "Puffin"):
        cases.append((f"482 m, one {kind}", straight(482.0, [Crossing(200.0, CrossingKind.parse(kind))])))
    print(f"{'route':>20} {'estimator':>24} {'seconds':>9} {'minutes':>8}")
    for name, route in cases:
        base = naive_eta(route_length_m(route), cfg)
        print(f"{name:>20} {'naive':>24} {base.seconds:9.1f} {base.display_minutes:8d}")
        for bound in ("expected", "worst_case"):
            if not route.crossings:
                continue
            extra = math.fsum(crossing_delay_s(c, waits, bound) for c in route.crossings)
            est = EtaEstimate.from_seconds(base.seconds + extra)
            print(f"{'':>20} {'crossing-aware ' + bound:>24} {est.seconds:9.1f} {est.display_minutes:8d}")


if __name__ == "__main__":
    main()
