"""Grouped k-fold cross-validation with grid search.

Folds partition users, never rows. For every grid point and fold the
standardization is fitted on the training rows only, the model is fitted on
the standardized training rows and scored on the held-out rows.
"""
from __future__ import annotations

import csv
import hashlib
import inspect
import io
import json
import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np
from joblib import Parallel, delayed

from ..dataset import FeatureMatrix, standardize
from ..errors import ConfigError, InvalidInputError, UndefinedStatisticError
from .families import Family, fit_family, fit_nested, get_family

DEFAULT_FOLDS = 5
REPORT_HEADER = ["family", "fold", "r2", "mean_r2", "std_r2", "pooled_r2", "hyperparams_json", "seed"]


def r_squared(y_true, y_pred) -> float:
    y = np.asarray(y_true, dtype=float)
    f = np.asarray(y_pred, dtype=float)
    if y.shape != f.shape or y.ndim != 1 or y.size < 2:
        raise InvalidInputError("r_squared needs two equal-length vectors of length >= 2")
    d = y - y.mean()
    ss_tot = float(d @ d)
    if ss_tot == 0:
        raise UndefinedStatisticError("R^2 is undefined when y_true is constant")
    r = y - f
    return 1.0 - float(r @ r) / ss_tot


def assign_folds(groups, k: int, seed: int) -> np.ndarray:
    """Fold index per row. Users are shuffled with ``seed`` and dealt round-robin."""
    if k < 2:
        raise InvalidInputError(f"k must be >= 2, got {k}")
    groups = np.asarray(groups).astype(str)
    users = np.unique(groups)
    if users.size < k:
        raise InvalidInputError(
            f"only {users.size} distinct users for {k} folds; use k <= {users.size}"
        )
    order = np.random.default_rng(seed).permutation(users.size)
    fold_of_user = np.empty(users.size, dtype=np.int64)
    fold_of_user[order] = np.arange(users.size) % k
    return fold_of_user[np.searchsorted(users, groups)]


def fold_digest(groups, folds) -> str:
    pairs = sorted(set(zip(np.asarray(groups).astype(str).tolist(), np.asarray(folds).tolist())))
    return hashlib.sha256(json.dumps(pairs, separators=(",", ":")).encode()).hexdigest()


def _jsonable(v):
    if isinstance(v, (np.integer,)):
        return int(v)
    if isinstance(v, (np.floating,)):
        return float(v)
    return v


def hyperparams_json(hp: dict) -> str:
    return json.dumps({k: _jsonable(v) for k, v in sorted(hp.items())}, sort_keys=True, separators=(",", ":"))


@dataclass(frozen=True)
class GridResult:
    hyperparams: dict
    fold_r2: tuple[float, ...]
    mean_r2: float


@dataclass(frozen=True)
class CVReport:
    family: str
    fold_r2: tuple[float, ...]
    mean_r2: float
    std_r2: float
    pooled_r2: float
    hyperparams: dict
    seed: int
    fold_digest: str
    feature_mode: str = "full"
    grid: tuple[GridResult, ...] = field(default=(), compare=False)

    @property
    def k(self) -> int:
        return len(self.fold_r2)

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(REPORT_HEADER)
        hp = hyperparams_json(self.hyperparams)
        for i, r in enumerate(self.fold_r2):
            w.writerow([self.family, i, repr(r), repr(self.mean_r2), repr(self.std_r2),
                        repr(self.pooled_r2), hp, self.seed])
        return buf.getvalue()


def _group_grid(family: Family, grid: Sequence[dict]) -> list[list[int]]:
    """Indices of grid points fitted together (same params apart from the nested one)."""
    if family.nested is None:
        return [[i] for i in range(len(grid))]
    buckets: dict[str, list[int]] = {}
    for i, hp in enumerate(grid):
        key = hyperparams_json({k: v for k, v in hp.items() if k != family.nested})
        buckets.setdefault(key, []).append(i)
    return list(buckets.values())


def _run_task(family, m, folds, fold, idx, grid, seed):
    train = np.flatnonzero(folds != fold)
    test = np.flatnonzero(folds == fold)
    ms = standardize(m, train)
    mt = ms.subset(train)
    Xte = ms.X[test]
    if len(idx) == 1 and family.nested is None:
        models = [fit_family(family, mt, grid[idx[0]], seed)]
    else:
        models = fit_nested(family, mt, [grid[i] for i in idx], seed)
    return [mod.predict(Xte) for mod in models]


def cross_validate(
    m: FeatureMatrix,
    family: "Family | str",
    grid: Sequence[dict] | None = None,
    k: int = DEFAULT_FOLDS,
    seed: int = 0,
    n_jobs: int = 1,
) -> CVReport:
    """Grouped k-fold grid search. The best grid point maximizes mean fold R^2;
    ties go to the earliest point in ``grid``."""
    fam = get_family(family) if isinstance(family, str) else family
    grid = list(grid) if grid is not None else fam.default_grid(m.p)
    if not grid:
        raise InvalidInputError("hyperparameter grid is empty")
    sig = inspect.signature(fam.fit)
    for hp in grid:
        try:
            sig.bind(m, seed=seed, **hp)
        except TypeError as e:
            raise ConfigError(f"grid point {hp} does not fit family {fam.name}: {e}") from None
    if m.n < k:
        raise InvalidInputError(f"n={m.n} rows is fewer than k={k} folds")
    folds = assign_folds(m.groups, k, seed)
    groups = _group_grid(fam, grid)
    tasks = [(f, idx) for f in range(k) for idx in groups]

    def run(task):
        f, idx = task
        return _run_task(fam, m, folds, f, idx, grid, seed)

    if n_jobs == 1:
        outs = [run(t) for t in tasks]
    else:
        outs = Parallel(n_jobs=n_jobs, prefer="threads")(delayed(run)(t) for t in tasks)

    oof = np.zeros((len(grid), m.n))
    for (f, idx), preds in zip(tasks, outs):
        test = folds == f
        for i, p in zip(idx, preds):
            oof[i, test] = p

    results = []
    for i, hp in enumerate(grid):
        rs = tuple(r_squared(m.y[folds == f], oof[i, folds == f]) for f in range(k))
        results.append(GridResult(dict(hp), rs, math.fsum(rs) / k))
    best = 0
    for i, g in enumerate(results):
        if g.mean_r2 > results[best].mean_r2:
            best = i
    g = results[best]
    return CVReport(
        family=fam.name,
        fold_r2=g.fold_r2,
        mean_r2=g.mean_r2,
        std_r2=float(np.std(np.array(g.fold_r2))),
        pooled_r2=r_squared(m.y, oof[best]),
        hyperparams=dict(grid[best]),
        seed=int(seed),
        fold_digest=fold_digest(m.groups, folds),
        feature_mode=m.mode.value,
        grid=tuple(results),
    )
