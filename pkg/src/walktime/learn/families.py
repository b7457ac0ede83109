"""Registry of model families with their default hyperparameter grids.

Each family maps a FeatureMatrix plus one grid point to a fitted model.
Linear families other than LARS fit on the linearly independent columns only
(the elevation total equals gain plus loss exactly, so the full design is
singular); dropped columns carry coefficient 0. A
family may also declare a *nested* hyperparameter (boosting rounds, LARS
steps): models for every value of it come out of a single fit, because a
shorter boosting run or path is an exact prefix of the longest one.
"""
from __future__ import annotations

import itertools
from dataclasses import dataclass
from typing import Callable

from ..errors import InvalidInputError
from . import ensemble, linear

LAMBDAS = (0.001, 0.01, 0.1, 1.0, 10.0)
L1_RATIOS = (0.1, 0.5, 0.9)


@dataclass(frozen=True)
class Family:
    key: str
    name: str
    fit: Callable
    default_grid: Callable  # p -> list of hyperparameter dicts
    nested: str | None = None
    expand: Callable | None = None  # (model, values) -> list of models, one per value
    tree_based: bool = False
    randomized: bool = False


def _grid(**axes):
    keys = list(axes)
    return [dict(zip(keys, vals)) for vals in itertools.product(*(axes[k] for k in keys))]


def _fit_lars(m, n_steps=None, seed=0):
    path = linear.fit_lars(m)
    k = len(path) - 1 if n_steps is None else min(int(n_steps), len(path) - 1)
    return path[k]


def _lars_steps(p):
    steps = sorted({max(1, p // 4), max(1, p // 2), max(1, (3 * p) // 4)})
    return [{"n_steps": s} for s in steps] + [{"n_steps": None}]


def _expand_lars(m, values):
    path = linear.fit_lars(m)
    last = len(path) - 1
    return [path[last if v is None else min(int(v), last)] for v in values]


def _expand_gbm(model, values):
    return [model.truncate(int(v)) for v in values]


FAMILIES: dict[str, Family] = {}


def _register(f: Family):
    FAMILIES[f.key] = f


_register(Family(
    "ols", "OLS",
    lambda m, seed=0, pinv=True: linear.fit_full_rank(linear.fit_ols, m, pinv=pinv),
    lambda p: [{}],
))
_register(Family(
    "ridge", "Ridge",
    lambda m, lam, seed=0: linear.fit_full_rank(linear.fit_ridge, m, lam=lam),
    lambda p: _grid(lam=LAMBDAS),
))
_register(Family(
    "lasso", "LASSO",
    lambda m, lam, seed=0: linear.fit_full_rank(linear.fit_lasso, m, lam=lam),
    lambda p: _grid(lam=LAMBDAS),
))
_register(Family(
    "elastic-net", "ElasticNet",
    lambda m, lam, l1_ratio, seed=0: linear.fit_full_rank(linear.fit_elastic_net, m, lam=lam, l1_ratio=l1_ratio),
    lambda p: _grid(lam=LAMBDAS, l1_ratio=L1_RATIOS),
))
_register(Family(
    "lars", "LARS",
    _fit_lars,
    _lars_steps,
    nested="n_steps",
))
_register(Family(
    "cart", "CART",
    lambda m, max_depth=None, min_leaf=5, seed=0: ensemble.fit_cart_model(m, max_depth, min_leaf, seed),
    lambda p: _grid(max_depth=(4, 6, 8, 12), min_leaf=(5,)),
    tree_based=True,
))
_register(Family(
    "rf", "RandomForest",
    lambda m, n_trees=500, max_features=None, min_leaf=1, seed=0, n_jobs=1: ensemble.fit_random_forest(
        m, n_trees=n_trees, max_features=max_features, min_leaf=min_leaf, seed=seed, n_jobs=n_jobs),
    lambda p: _grid(n_trees=(500,), max_features=("third", "sqrt", "all"), min_leaf=(5,)),
    tree_based=True,
    randomized=True,
))
_register(Family(
    "gbm", "GradientBoosting",
    lambda m, n_rounds=100, learning_rate=0.1, max_depth=3, seed=0: ensemble.fit_gradient_boosting(
        m, n_rounds=n_rounds, learning_rate=learning_rate, max_depth=max_depth, seed=seed),
    lambda p: _grid(learning_rate=(0.1,), max_depth=(3,), n_rounds=(100, 200, 400)),
    nested="n_rounds",
    expand=_expand_gbm,
    tree_based=True,
))
_register(Family(
    "adaboost", "AdaBoostR2",
    lambda m, n_rounds=100, base_depth=4, seed=0: ensemble.fit_adaboost_r2(
        m, n_rounds=n_rounds, base_depth=base_depth, seed=seed),
    lambda p: _grid(n_rounds=(100,), base_depth=(4,)),
    tree_based=True,
    randomized=True,
))

ALIASES = {
    "randomforest": "rf", "random-forest": "rf", "gradientboosting": "gbm", "gradient-boosting": "gbm",
    "adaboostr2": "adaboost", "adaboost-r2": "adaboost", "elasticnet": "elastic-net", "en": "elastic-net",
}


def get_family(key: str) -> Family:
    k = key.strip().lower().replace("_", "-")
    k = ALIASES.get(k, k)
    if k not in FAMILIES:
        for f in FAMILIES.values():
            if f.name.lower() == k:
                return f
        raise InvalidInputError(f"unknown model family {key!r}; choose from {sorted(FAMILIES)}")
    return FAMILIES[k]


def fit_family(family: Family, m, hyperparams: dict, seed: int = 0):
    return family.fit(m, seed=seed, **hyperparams)


def fit_nested(family: Family, m, hyperparams_list: list[dict], seed: int = 0) -> list:
    """Fit a group of grid points that differ only in the nested parameter."""
    values = [hp.get(family.nested) for hp in hyperparams_list]
    if family.key == "lars":
        return _expand_lars(m, values)
    base = dict(hyperparams_list[0])
    finite = [v for v in values if v is not None]
    base[family.nested] = max(finite) if finite else None
    model = family.fit(m, seed=seed, **base)
    return family.expand(model, values)
