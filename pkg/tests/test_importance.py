import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from walktime.dataset import FeatureMatrix, column_names, encode, feature_group
from walktime.errors import UndefinedStatisticError, UnsupportedModelError
from walktime.learn.ensemble import fit_random_forest
from walktime.learn.importance import feature_importance
from walktime.learn.linear import fit_ols
from walktime.learn.tree import fit_cart, grow_tree
from walktime.synth import GeneratorConfig, generate


def test_single_split_tree():
    X = np.column_stack([np.arange(6.0), np.zeros(6)])
    t = fit_cart(FeatureMatrix.from_arrays(X, [0, 0, 0, 1, 1, 1]))
    imp = feature_importance(t, ["a", "b"])
    assert imp.as_dict() == {"a": 1.0, "b": 0.0}


@settings(max_examples=20)
@given(st.integers(0, 10_000))
def test_sums_to_one_and_nonnegative(seed):
    rng = np.random.default_rng(seed)
    m = FeatureMatrix.from_arrays(rng.normal(size=(60, 4)), rng.normal(size=60))
    imp = feature_importance(fit_random_forest(m, n_trees=10, max_features=2, seed=seed))
    vals = [v for _, v in imp.items]
    assert abs(math.fsum(vals) - 1) <= 1e-9 and min(vals) >= 0
    assert vals == sorted(vals, reverse=True)


@settings(max_examples=20)
@given(st.integers(0, 10_000), st.permutations(range(4)))
def test_permutation_equivariance(seed, perm):
    rng = np.random.default_rng(seed)
    X = rng.normal(size=(40, 4))
    y = X[:, 0] - 2 * X[:, 2] + 0.1 * rng.normal(size=40)
    names = ["a", "b", "c", "d"]
    perm = list(perm)
    tree = grow_tree(X, y, max_depth=4)
    base = feature_importance(tree, names).as_dict()
    relabeled = feature_importance(tree, [names[j] for j in perm]).as_dict()
    for j, k in enumerate(names):
        assert relabeled[names[perm[j]]] == base[k]
    # Reordering columns regrows the same tree unless two columns induce the same
    # partition at some node (then the lowest index wins); large nodes avoid that.
    X = rng.normal(size=(400, 4))
    y = X[:, 0] - 2 * X[:, 2] + 0.1 * rng.normal(size=400)
    base = feature_importance(grow_tree(X, y, max_depth=3, min_leaf=20), names).as_dict()
    moved = feature_importance(grow_tree(X[:, perm], y, max_depth=3, min_leaf=20),
                               [names[j] for j in perm]).as_dict()
    for k in names:
        assert moved[k] == pytest.approx(base[k], abs=1e-12)


def test_linear_requires_flag():
    rng = np.random.default_rng(0)
    m = FeatureMatrix.from_arrays(rng.normal(size=(30, 2)), rng.normal(size=30))
    mod = fit_ols(m)
    with pytest.raises(UnsupportedModelError):
        feature_importance(mod)
    imp = feature_importance(mod, coefficient_share=True)
    assert imp.method == "coefficient_share"
    b = np.abs(mod.coefficients)
    assert imp.as_dict()["x0"] == pytest.approx(b[0] / b.sum())
    assert imp.to_csv().endswith(",coefficient_share\n")


def test_leafless_model_undefined():
    t = fit_cart(FeatureMatrix.from_arrays(np.arange(4.0)[:, None], np.ones(4)))
    with pytest.raises(UndefinedStatisticError):
        feature_importance(t, ["x"])


def test_groups_aggregate_encoded_columns():
    names = column_names("full")
    groups = {feature_group(c) for c in names}
    assert {"time_of_day", "weekday", "weather", "gender", "direction"} <= groups
    assert "time_of_day_sin" not in groups and "weekday_Sunday" not in groups


def test_single_informative_driver_ranks_first():
    # walkers slower than the app speed and nothing else: correction grows with length only
    cfg = GeneratorConfig(n_users=10, n_male=5, n_routes=12, repeats_per_route=2,
                          speed_male=1.2, speed_female=1.2, speed_spread=0.0, age_effect=0.0, fatigue=1.0,
                          slope_penalty=0.0, downhill_penalty=0.0, crossings_per_km=0.0, noise_sigma=0.0)
    cfg = GeneratorConfig(**{**cfg.to_json(), "weather_multiplier": {k: 1.0 for k in cfg.weather_multiplier}})
    m = encode(generate(cfg).records, "full")
    imp = feature_importance(fit_random_forest(m, n_trees=50, max_features="all", seed=0))
    assert imp.labels[0] == "route_length_m" and imp.items[0][1] > 0.5
