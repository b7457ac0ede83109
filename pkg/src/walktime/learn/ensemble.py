"""Tree ensembles: CART wrapper, Random Forest, gradient boosting and AdaBoost.R2.

Randomness comes from one master seed. Tree ``i`` of a forest (or round ``i``
of AdaBoost) draws from ``SeedSequence(seed, spawn_key=(i,))``, so results do
not depend on how many workers grow the trees.
"""
from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field, replace

import numpy as np
from joblib import Parallel, delayed

from ..dataset import FeatureMatrix
from ..errors import InvalidInputError
from .tree import CodedFeatures, Tree, fit_cart, grow_tree

EPS_FLOOR = 1e-10


@dataclass(frozen=True)
class EnsembleModel:
    family: str
    trees: tuple[Tree, ...]
    column_names: tuple[str, ...]
    weights: np.ndarray | None = None  # AdaBoost learner weights ln(1/beta)
    learning_rate: float = 1.0  # boosting shrinkage
    init: float = 0.0  # boosting start value
    hyperparams: dict = field(default_factory=dict)
    seed: int = 0
    warning: str | None = None
    oob_mse: float | None = None

    def __post_init__(self):
        if not self.trees:
            raise InvalidInputError("an ensemble needs at least one tree")
        if self.weights is not None and np.any(np.asarray(self.weights) <= 0):
            raise InvalidInputError("learner weights must be > 0")
        if not 0 < self.learning_rate <= 1:
            raise InvalidInputError(f"learning rate must be in (0, 1], got {self.learning_rate}")

    def tree_predictions(self, X) -> np.ndarray:
        X = np.ascontiguousarray(X, dtype=np.float64)
        return np.stack([t.predict(X) for t in self.trees])

    def predict(self, X) -> np.ndarray:
        P = self.tree_predictions(X)
        if self.family == "GradientBoosting":
            return self.init + self.learning_rate * P.sum(axis=0)
        if self.family == "AdaBoostR2":
            return weighted_median(P, self.weights)
        return P.mean(axis=0)

    def staged_predict(self, X):
        """Boosting predictions after 0, 1, ..., len(trees) rounds."""
        if self.family != "GradientBoosting":
            raise InvalidInputError("staged prediction is defined for gradient boosting only")
        X = np.ascontiguousarray(X, dtype=np.float64)
        pred = np.full(X.shape[0], self.init)
        yield pred.copy()
        for t in self.trees:
            pred = pred + self.learning_rate * t.predict(X)
            yield pred.copy()

    def truncate(self, n_rounds: int) -> "EnsembleModel":
        """The boosting model after its first ``n_rounds`` rounds."""
        hp = dict(self.hyperparams, n_rounds=n_rounds)
        return replace(self, trees=self.trees[:n_rounds], hyperparams=hp)


def weighted_median(P: np.ndarray, weights) -> np.ndarray:
    """Column-wise weighted median of learner predictions ``P`` (learners x samples).

    Picks the smallest prediction whose cumulative weight reaches half of the
    total weight.
    """
    P = np.atleast_2d(P)
    w = np.asarray(weights, dtype=float)
    order = np.argsort(P, axis=0, kind="stable")
    cum = np.cumsum(w[order], axis=0)
    half = 0.5 * cum[-1]
    pick = np.argmax(cum >= half[None, :], axis=0)
    rows = order[pick, np.arange(P.shape[1])]
    return P[rows, np.arange(P.shape[1])]


def _child_seed(seed: int, i: int) -> int:
    ss = np.random.SeedSequence(seed, spawn_key=(i,))
    return int(ss.generate_state(1, dtype=np.uint64)[0])


def _child_rng(seed: int, i: int) -> np.random.Generator:
    return np.random.default_rng(np.random.SeedSequence(seed, spawn_key=(i,)))


def _resolve_max_features(max_features, p: int) -> int:
    if max_features is None:
        return p
    if isinstance(max_features, str):
        if max_features == "sqrt":
            k = int(round(math.sqrt(p)))
        elif max_features == "third":
            k = int(round(p / 3))
        elif max_features == "all":
            k = p
        else:
            raise InvalidInputError(f"unknown max_features {max_features!r}")
    elif isinstance(max_features, float) and 0 < max_features <= 1 and not float(max_features).is_integer():
        k = int(round(max_features * p))
    else:
        k = int(max_features)
    k = max(1, min(p, k))
    return k


def fit_cart_model(m: FeatureMatrix, max_depth: int | None = None, min_leaf: int = 1, seed: int = 0):
    tree = fit_cart(m, max_depth, min_leaf)
    return EnsembleModel("CART", (tree,), tuple(m.column_names),
                         hyperparams={"max_depth": max_depth, "min_leaf": min_leaf}, seed=seed)


def fit_random_forest(
    m: FeatureMatrix,
    n_trees: int = 500,
    max_features=None,
    seed: int = 0,
    min_leaf: int = 1,
    max_depth: int | None = None,
    bootstrap: bool = True,
    oob: bool = False,
    n_jobs: int = 1,
) -> EnsembleModel:
    """Bagged CART with a random feature subset at every split."""
    if n_trees < 1:
        raise InvalidInputError(f"n_trees must be >= 1, got {n_trees}")
    k = _resolve_max_features(max_features, m.p)
    if isinstance(max_features, (int, np.integer)) and not 1 <= max_features <= m.p:
        raise InvalidInputError(f"max_features must be in [1, {m.p}], got {max_features}")
    data = CodedFeatures.from_matrix(m.X)
    y = np.ascontiguousarray(m.y, dtype=float)
    n = m.n

    def grow(i):
        if bootstrap:
            idx = _child_rng(seed, i).integers(0, n, size=n)
        else:
            idx = np.arange(n)
        tree = grow_tree(data, y, max_depth=max_depth, min_leaf=min_leaf, max_features=k,
                          sample_indices=idx, seed=_child_seed(seed, i))
        return tree, idx

    if n_jobs == 1:
        grown = [grow(i) for i in range(n_trees)]
    else:
        grown = Parallel(n_jobs=n_jobs, prefer="threads")(delayed(grow)(i) for i in range(n_trees))
    trees = tuple(t for t, _ in grown)

    oob_mse = None
    if oob and bootstrap:
        total = np.zeros(n)
        count = np.zeros(n)
        for t, idx in grown:
            out = np.ones(n, dtype=bool)
            out[idx] = False
            total[out] += t.predict(m.X[out])
            count[out] += 1
        seen = count > 0
        oob_mse = float(np.mean((m.y[seen] - total[seen] / count[seen]) ** 2)) if seen.any() else float("nan")

    hp = {"n_trees": n_trees, "max_features": k, "min_leaf": min_leaf, "max_depth": max_depth,
          "bootstrap": bootstrap}
    return EnsembleModel("RandomForest", trees, tuple(m.column_names), hyperparams=hp, seed=seed,
                         oob_mse=oob_mse)


def fit_gradient_boosting(
    m: FeatureMatrix,
    n_rounds: int = 100,
    learning_rate: float = 0.1,
    max_depth: int | None = 3,
    seed: int = 0,
    min_leaf: int = 1,
) -> EnsembleModel:
    """Squared-loss boosting: start at the mean, add shrunken trees fit to residuals.

    ``n_rounds = 0`` is allowed and yields the constant mean predictor; it is
    represented by a single all-zero stump so the tree list stays nonempty.
    """
    if n_rounds < 0:
        raise InvalidInputError(f"n_rounds must be >= 0, got {n_rounds}")
    if not 0 < learning_rate <= 1:
        raise InvalidInputError(f"learning_rate must be in (0, 1], got {learning_rate}")
    data = CodedFeatures.from_matrix(m.X)
    init = float(np.mean(m.y))
    pred = np.full(m.n, init)
    trees = []
    for _ in range(n_rounds):
        resid = m.y - pred
        t = grow_tree(data, resid, max_depth=max_depth, min_leaf=min_leaf)
        pred = pred + learning_rate * t.predict(m.X)
        trees.append(t)
    hp = {"n_rounds": n_rounds, "learning_rate": learning_rate, "max_depth": max_depth,
          "min_leaf": min_leaf}
    if not trees:
        zero = grow_tree(data, np.zeros(m.n), max_depth=0)
        return EnsembleModel("GradientBoosting", (zero,), tuple(m.column_names), learning_rate=learning_rate,
                             init=init, hyperparams=dict(hp, n_rounds=0), seed=seed)
    return EnsembleModel("GradientBoosting", tuple(trees), tuple(m.column_names), learning_rate=learning_rate,
                         init=init, hyperparams=hp, seed=seed)


def fit_adaboost_r2(
    m: FeatureMatrix,
    n_rounds: int = 100,
    base_depth: int | None = 4,
    seed: int = 0,
    min_leaf: int = 1,
) -> EnsembleModel:
    """AdaBoost.R2 with the linear loss and weighted resampling."""
    if n_rounds < 1:
        raise InvalidInputError(f"n_rounds must be >= 1, got {n_rounds}")
    data = CodedFeatures.from_matrix(m.X)
    n = m.n
    w = np.full(n, 1.0 / n)
    trees, alphas = [], []
    flag = None
    for i in range(n_rounds):
        rng = _child_rng(seed, i)
        cdf = np.cumsum(w)
        cdf /= cdf[-1]
        idx = np.searchsorted(cdf, rng.random(n), side="right")
        idx = np.minimum(idx, n - 1)
        t = grow_tree(data, m.y, max_depth=base_depth, min_leaf=min_leaf, sample_indices=idx)
        err = np.abs(m.y - t.predict(m.X))
        emax = err.max()
        loss = err / emax if emax > 0 else np.zeros(n)
        eps = float(np.sum(w * loss))
        if eps >= 0.5:
            if not trees:
                trees.append(t)
                alphas.append(1.0)
                flag = f"first learner has weighted loss {eps:.4f} >= 0.5; kept as a single-learner model"
                warnings.warn(flag, RuntimeWarning, stacklevel=2)
            break
        eps = max(eps, EPS_FLOOR)
        beta = eps / (1.0 - eps)
        trees.append(t)
        alphas.append(math.log(1.0 / beta))
        if emax == 0:
            break
        w = w * beta ** (1.0 - loss)
        w /= w.sum()
    hp = {"n_rounds": n_rounds, "base_depth": base_depth, "min_leaf": min_leaf, "rounds_used": len(trees)}
    return EnsembleModel("AdaBoostR2", tuple(trees), tuple(m.column_names), weights=np.array(alphas),
                         hyperparams=hp, seed=seed, warning=flag)
