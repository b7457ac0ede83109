import numpy as np
import pytest
from hypothesis import given, strategies as st

from walktime.dataset import FeatureMatrix
from walktime.errors import InvalidInputError
from walktime.learn.tree import Tree, fit_cart, grow_tree


def brute_force_tree(X, y, min_leaf=1, max_depth=None):
    """Exhaustive best-split recursion; nodes in preorder as (feature, threshold, value, n)."""
    out = []

    def sse(v):
        return float(np.sum((v - v.mean()) ** 2))

    def rec(rows, depth):
        yy = y[rows]
        node = [-1, 0.0, yy.mean(), len(rows)]
        out.append(node)
        if (max_depth is not None and depth >= max_depth) or len(rows) < 2 * min_leaf or np.all(yy == yy[0]):
            return
        parent = sse(yy)
        best = None
        for j in range(X.shape[1]):
            vals = np.unique(X[rows, j])
            for a, b in zip(vals[:-1], vals[1:]):
                thr = a + (b - a) / 2
                mask = X[rows, j] <= thr
                if mask.sum() < min_leaf or (~mask).sum() < min_leaf:
                    continue
                dec = parent - sse(yy[mask]) - sse(yy[~mask])
                if dec > 1e-12 * max(parent, 1) and (best is None or dec > best[0] * (1 + 1e-9)):
                    best = (dec, j, thr, mask)
        if best is None:
            return
        _, j, thr, mask = best
        node[0], node[1] = j, thr
        rec(rows[mask], depth + 1)
        rec(rows[~mask], depth + 1)

    rec(np.arange(len(y)), 0)
    return out


@pytest.mark.parametrize("seed", range(25))
def test_cart_matches_exhaustive_search(seed):
    rng = np.random.default_rng(seed)
    n = int(rng.integers(8, 17))
    X = rng.integers(0, 6, size=(n, 3)).astype(float) + rng.normal(size=3)
    y = rng.normal(size=n)
    min_leaf = int(rng.integers(1, 3))
    tree = fit_cart(FeatureMatrix.from_arrays(X, y), min_leaf=min_leaf)
    oracle = brute_force_tree(X, y, min_leaf=min_leaf)
    assert tree.n_nodes == len(oracle)
    for i, (f, thr, val, cnt) in enumerate(oracle):
        assert tree.feature[i] == f
        assert tree.n_samples[i] == cnt
        assert tree.value[i] == pytest.approx(val, abs=1e-12)
        if f >= 0:
            assert tree.threshold[i] == thr


def test_step_function():
    x = np.array([-1.0, 1.0, -1.0, 1.0, 1.0, -1.0])
    y = (x > 0).astype(float)
    t = fit_cart(FeatureMatrix.from_arrays(x[:, None], y))
    assert t.depth() == 1 and t.threshold[0] == 0.0
    assert t.value[t.left[0]] == 0.0 and t.value[t.right[0]] == 1.0


def test_constant_target_single_leaf():
    X = np.random.default_rng(0).normal(size=(10, 2))
    t = fit_cart(FeatureMatrix.from_arrays(X, np.full(10, 3.5)))
    assert t.n_nodes == 1 and t.value[0] == 3.5


def test_tie_breaks_lowest_feature():
    x = np.array([0.0, 1.0, 2.0, 3.0])
    X = np.column_stack([x, x, x])
    t = fit_cart(FeatureMatrix.from_arrays(X, [0.0, 0.0, 1.0, 1.0]))
    assert t.feature[0] == 0 and t.threshold[0] == 1.5


def test_depth_and_leaf_limits():
    rng = np.random.default_rng(1)
    m = FeatureMatrix.from_arrays(rng.normal(size=(200, 4)), rng.normal(size=200))
    t = fit_cart(m, max_depth=3, min_leaf=7)
    assert t.depth() <= 3
    assert t.n_samples[t.is_leaf].min() >= 7
    with pytest.raises(InvalidInputError):
        fit_cart(FeatureMatrix.from_arrays(rng.normal(size=(5, 1)), rng.normal(size=5)), min_leaf=3)


@given(st.integers(0, 10_000))
def test_thresholds_are_midpoints(seed):
    rng = np.random.default_rng(seed)
    X = rng.integers(0, 10, size=(30, 2)).astype(float)
    t = grow_tree(X, rng.normal(size=30), max_depth=4)
    stack = [(0, np.ones(len(X), dtype=bool))]
    while stack:
        i, rows = stack.pop()
        if t.is_leaf[i]:
            continue
        x = X[rows, t.feature[i]]
        lo, hi = x[x <= t.threshold[i]].max(), x[x > t.threshold[i]].min()
        assert t.threshold[i] == lo + (hi - lo) / 2
        go_left = X[:, t.feature[i]] <= t.threshold[i]
        stack += [(t.left[i], rows & go_left), (t.right[i], rows & ~go_left)]


def test_leaves_predict_training_mean():
    rng = np.random.default_rng(2)
    X, y = rng.normal(size=(50, 3)), rng.normal(size=50)
    t = grow_tree(X, y, max_depth=3)
    leaf = t.apply(X)
    for lf in np.unique(leaf):
        assert t.value[lf] == pytest.approx(y[leaf == lf].mean(), abs=1e-12)
    assert np.array_equal(t.predict(X), t.value[leaf])


def test_json_roundtrip():
    rng = np.random.default_rng(3)
    X = rng.normal(size=(40, 3))
    t = grow_tree(X, rng.normal(size=40))
    back = Tree.from_json(t.to_json())
    assert back == t and np.array_equal(back.predict(X), t.predict(X))


def test_json_rejects_bad_children():
    d = grow_tree(np.arange(4.0)[:, None], [0.0, 0.0, 1.0, 1.0]).to_json()
    d["left"][0] = 0
    with pytest.raises(InvalidInputError):
        Tree.from_json(d)
