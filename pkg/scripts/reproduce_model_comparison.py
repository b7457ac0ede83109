#!/usr/bin/env python3
"""Grouped 5-fold CV of every model family in every feature mode.

Writes a CSV (family, mode, mean/std/pooled R^2, chosen hyperparameters,
seconds) and prints the matrix. The default run takes a few minutes.
"""
import argparse
import csv
import time

import numpy as np

from walktime.dataset import FeatureMode, encode
from walktime.learn.cv import cross_validate, hyperparams_json
from walktime.learn.families import FAMILIES, get_family
from walktime.synth import GeneratorConfig, generate


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--seed", type=int, default=42)
    ap.add_argument("--families", default=",".join(FAMILIES))
    ap.add_argument("--folds", type=int, default=5)
    ap.add_argument("--n-jobs", type=int, default=1)
    ap.add_argument("--out", default="model_comparison.csv")
    args = ap.parse_args()

    records = generate(GeneratorConfig(seed=args.seed)).records
    families = [get_family(k).key for k in args.families.split(",")]
    modes = list(FeatureMode)
    rows, table = [], {}
    for mode in modes:
        m = encode(records, mode)
        for key in families:
            t0 = time.perf_counter()
            rep = cross_validate(m, key, k=args.folds, seed=args.seed, n_jobs=args.n_jobs)
            dt = time.perf_counter() - t0
            table[key, mode] = rep.mean_r2
            rows.append([rep.family, mode.value, rep.mean_r2, rep.std_r2, rep.pooled_r2,
                         hyperparams_json(rep.hyperparams), round(dt, 1)])
            print(f"{rep.family:>16} {mode.value:>16}  R2 {rep.mean_r2:.4f}  ({dt:.0f}s)", flush=True)

    with open(args.out, "w", newline="") as f:
        w = csv.writer(f, lineterminator="\n")
        w.writerow(["family", "mode", "mean_r2", "std_r2", "pooled_r2", "hyperparams_json", "seconds"])
        w.writerows(rows)

    print("\nmean CV R^2".ljust(18) + "".join(f"{m.value:>17}" for m in modes))
    for key in families:
        print(f"{get_family(key).name:>17}" + "".join(f"{table[key, m]:>17.4f}" for m in modes))
    avg = [np.mean([table[k, m] for k in families]) for m in modes]
    print(f"{'average':>17}" + "".join(f"{a:>17.4f}" for a in avg))


if __name__ == "__main__":
    main()
