#!/usr/bin/env python3
"""Random Forest feature importance (grouped MDI) in each feature mode."""
import argparse

from walktime.dataset import FeatureMode, encode
from walktime.learn.importance import feature_importance
from walktime.learn.pipeline import fit_pipeline
from walktime.synth import GeneratorConfig, generate


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--seed", type=int, default=42)
    ap.add_argument("--n-trees", type=int, default=500)
    ap.add_argument("--max-features", default="third")
    ap.add_argument("--top", type=int, default=8)
    args = ap.parse_args()

    records = generate(GeneratorConfig(seed=args.seed)).records
    hp = {"n_trees": args.n_trees, "max_features": args.max_features, "min_leaf": 5}
    for mode in FeatureMode:
        fitted = fit_pipeline(encode(records, mode), "rf", hp, seed=args.seed)
        imp = feature_importance(fitted.model, fitted.column_names)
        print(f"\n{mode.value}")
        for label, share in imp.items[: args.top]:
            print(f"  {label:>20} {share:.4f} {'#' * int(round(share * 60))}")


if __name__ == "__main__":
    main()
