#!/usr/bin/env python3
"""Summary statistics of a generated dataset and its driver certification."""
import argparse

import numpy as np

from walktime.dataset import correction_target, pearson_corr
from walktime.geo import route_length_m
from walktime.synth import GeneratorConfig, effect_check, generate


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--config", help="flat key = value generator config (defaults if omitted)")
    ap.add_argument("--seed", type=int)
    args = ap.parse_args()
    cfg = GeneratorConfig.load(args.config) if args.config else GeneratorConfig()
    if args.seed is not None:
        cfg = GeneratorConfig(**{**cfg.to_json(), "seed": args.seed})
    res = generate(cfg)
    recs = res.records
    lengths = np.array([route_length_m(r) for r in res.routes])
    corr = np.array([correction_target(r) for r in recs])
    users = {r.user_id: r for r in recs}
    print(f"records {len(recs)}, routes {len(res.routes)}, users {len(users)} "
          f"({sum(u.gender == 'male' for u in users.values())} male)")
    print(f"route length mean {lengths.mean():.1f} m, range [{lengths.min():.0f}, {lengths.max():.0f}]")
    print(f"corr(route length, elevation change) {pearson_corr([r.route_length_m for r in recs], [r.elev_total_m for r in recs]):.4f}")
    print(f"correction mean {corr.mean():.1f} s, sd {corr.std():.1f} s")
    rep = effect_check(recs, res.truth)
    print(f"\n{'driver':>16} {'expected':>8} {'statistic':>10} {'z':>7} {'n':>6}  status")
    for c in rep.checks:
        print(f"{c.driver:>16} {c.expected_sign:>8d} {c.statistic:>10.4f} {c.z:>7.2f} {c.n_units:>6d}  {c.status}")
    print(f"\ncertified: {rep.certified}")


if __name__ == "__main__":
    main()
