"""CART regression trees grown by greedy variance reduction.

Trees are stored as flat arrays in preorder. A node with ``feature == -1`` is
a leaf. Split thresholds sit at the midpoint between the two adjacent observed
values that separate left from right, and ``x <= threshold`` goes left.

Ties between candidate splits (decreases equal to within a relative 1e-12)
go to the lowest feature index, then the lowest threshold. Per-split feature
subsets for random forests are drawn with a splitmix64 stream, so a tree is a
pure function of its inputs and its integer seed.
"""
from __future__ import annotations

from dataclasses import dataclass

import numba
import numpy as np

from ..errors import InvalidInputError

TIE_RTOL = 1e-12
LEAF = -1


@dataclass(frozen=True)
class Tree:
    feature: np.ndarray  # int64, -1 at leaves
    threshold: np.ndarray
    left: np.ndarray
    right: np.ndarray
    value: np.ndarray
    n_samples: np.ndarray
    impurity_decrease: np.ndarray  # SSE decrease at the split divided by node size

    @property
    def n_nodes(self) -> int:
        return int(self.feature.shape[0])

    @property
    def is_leaf(self) -> np.ndarray:
        return self.feature == LEAF

    def depth(self) -> int:
        d = np.zeros(self.n_nodes, dtype=np.int64)
        for i in range(self.n_nodes):
            if self.feature[i] != LEAF:
                d[self.left[i]] = d[i] + 1
                d[self.right[i]] = d[i] + 1
        return int(d.max())

    def predict(self, X) -> np.ndarray:
        X = np.ascontiguousarray(X, dtype=np.float64)
        return _predict(self.feature, self.threshold, self.left, self.right, self.value, X)

    def apply(self, X) -> np.ndarray:
        """Leaf index reached by each row."""
        X = np.ascontiguousarray(X, dtype=np.float64)
        return _apply(self.feature, self.threshold, self.left, self.right, X)

    def raw_importance(self, n_features: int) -> np.ndarray:
        """Per-feature sum of (n_node / n_root) * impurity decrease."""
        out = np.zeros(n_features)
        root_n = float(self.n_samples[0])
        for i in np.flatnonzero(self.feature != LEAF):
            out[self.feature[i]] += self.n_samples[i] / root_n * self.impurity_decrease[i]
        return out

    _FIELDS = ("feature", "threshold", "left", "right", "value", "n_samples", "impurity_decrease")

    def to_json(self) -> dict:
        """Preorder node arrays; node i is a leaf when feature[i] == -1."""
        out = {}
        for k in self._FIELDS:
            a = getattr(self, k)
            out[k] = a.tolist()
        return out

    @classmethod
    def from_json(cls, d: dict) -> "Tree":
        try:
            arrays = [np.asarray(d[k], dtype=np.int64 if k in ("feature", "left", "right", "n_samples") else float)
                      for k in cls._FIELDS]
        except KeyError as e:
            raise InvalidInputError(f"tree record lacks {e.args[0]!r}") from None
        n = arrays[0].shape[0]
        if n == 0 or any(a.shape != (n,) for a in arrays):
            raise InvalidInputError("tree arrays must be nonempty and of equal length")
        feature, _, left, right = arrays[:4]
        split = feature != LEAF
        if np.any((left[split] <= np.flatnonzero(split)) | (right[split] >= n) | (right[split] <= left[split])):
            raise InvalidInputError("tree child indices are not in preorder")
        return cls(*arrays)

    def __eq__(self, other):
        if not isinstance(other, Tree):
            return NotImplemented
        return all(
            np.array_equal(getattr(self, k), getattr(other, k))
            for k in ("feature", "threshold", "left", "right", "value", "n_samples", "impurity_decrease")
        )

    __hash__ = None


@dataclass(frozen=True)
class CodedFeatures:
    """Design matrix recoded as per-column ranks among unique values.

    Building this once lets an ensemble grow many trees without re-sorting.
    """

    codes: np.ndarray  # (n, p) int64
    uniq: np.ndarray  # concatenated sorted unique values per column
    offsets: np.ndarray  # column j's values live in uniq[offsets[j]:offsets[j+1]]

    @property
    def shape(self) -> tuple[int, int]:
        return self.codes.shape

    @classmethod
    def from_matrix(cls, X) -> "CodedFeatures":
        X = np.asarray(X, dtype=np.float64)
        if X.ndim != 2:
            raise ValueError(f"X must be 2-D, got shape {X.shape}")
        n, p = X.shape
        codes = np.empty((n, p), dtype=np.int64)
        uniq, offsets = [], [0]
        for j in range(p):
            u, inv = np.unique(X[:, j], return_inverse=True)
            codes[:, j] = inv.ravel()
            uniq.append(u)
            offsets.append(offsets[-1] + u.size)
        return cls(codes, np.concatenate(uniq) if uniq else np.zeros(0), np.array(offsets, dtype=np.int64))


def grow_tree(
    X,
    y,
    max_depth: int | None = None,
    min_leaf: int = 1,
    max_features: int | None = None,
    sample_indices=None,
    seed: int = 0,
) -> Tree:
    """Grow a regression tree.

    ``sample_indices`` selects (possibly repeated) training rows, which is how
    bootstrap and weighted-resampling ensembles feed their base learners.
    ``max_features`` < p draws a random feature subset at every split.
    """
    data = X if isinstance(X, CodedFeatures) else CodedFeatures.from_matrix(X)
    y = np.ascontiguousarray(y, dtype=np.float64)
    n, p = data.shape
    if y.shape != (n,):
        raise ValueError(f"y has shape {y.shape}, expected ({n},)")
    if min_leaf < 1:
        raise ValueError("min_leaf must be >= 1")
    idx = np.arange(n, dtype=np.int64) if sample_indices is None else np.asarray(sample_indices, dtype=np.int64)
    if idx.size == 0:
        raise ValueError("cannot grow a tree on zero samples")
    depth_cap = -1 if max_depth is None else int(max_depth)
    mf = p if max_features is None else int(max_features)
    if not 1 <= mf <= p:
        raise ValueError(f"max_features must be in [1, {p}], got {mf}")
    arrays = _grow(data.codes, data.uniq, data.offsets, y, idx.copy(), depth_cap, int(min_leaf), mf,
                   np.uint64(seed & 0xFFFFFFFFFFFFFFFF))
    return Tree(*arrays)


def fit_cart(m, max_depth: int | None = None, min_leaf: int = 1) -> Tree:
    """Fit a single regression tree to a FeatureMatrix."""
    if m.n < 2 * min_leaf:
        raise InvalidInputError(f"need n >= 2 * min_leaf ({2 * min_leaf}), got {m.n}")
    return grow_tree(m.X, m.y, max_depth=max_depth, min_leaf=min_leaf)


# -- numba kernels ----------------------------------------------------------


@numba.njit(cache=True)
def _splitmix64(state):
    state = state + np.uint64(0x9E3779B97F4A7C15)
    z = state
    z = (z ^ (z >> np.uint64(30))) * np.uint64(0xBF58476D1CE4E5B9)
    z = (z ^ (z >> np.uint64(27))) * np.uint64(0x94D049BB133111EB)
    z = z ^ (z >> np.uint64(31))
    return state, z


@numba.njit(cache=True)
def _best_split(codes, uniq, offsets, y, idx, start, end, features, n_feat, min_leaf,
                cnt, csum, ys, ks):
    """Scan candidate features for the largest SSE decrease.

    Each feature is pre-coded by rank among its unique values. Large nodes
    accumulate per-code counts and sums; small nodes sort their codes.
    Returns (feature, threshold, decrease); feature -1 when no valid split.
    ``features[:n_feat]`` must be sorted ascending so that ties favour the
    lowest index.
    """
    m = end - start
    total = 0.0
    for i in range(start, end):
        total += y[idx[i]]
    parent_term = total * total / m

    best_f = -1
    best_thr = 0.0
    best_dec = 0.0
    for fi in range(n_feat):
        f = features[fi]
        base = offsets[f]
        n_codes = offsets[f + 1] - base
        if n_codes < 2:
            continue
        if n_codes <= 4 * m:
            for c in range(n_codes):
                cnt[c] = 0
                csum[c] = 0.0
            for i in range(start, end):
                r = idx[i]
                c = codes[r, f]
                cnt[c] += 1
                csum[c] += y[r]
            n_left = 0
            s_left = 0.0
            prev = -1
            for c in range(n_codes):
                if cnt[c] == 0:
                    continue
                if prev >= 0:
                    n_right = m - n_left
                    if n_right < min_leaf:
                        break
                    if n_left >= min_leaf:
                        s_right = total - s_left
                        dec = s_left * s_left / n_left + s_right * s_right / n_right - parent_term
                        if dec > 0.0 and (best_f == -1 or dec > best_dec + TIE_RTOL * abs(best_dec)):
                            best_f = f
                            best_dec = dec
                            best_thr = _midpoint(uniq[base + prev], uniq[base + c])
                n_left += cnt[c]
                s_left += csum[c]
                prev = c
        else:
            for k in range(m):
                ks[k] = codes[idx[start + k], f]
            o = np.argsort(ks[:m], kind="mergesort")
            if ks[o[0]] == ks[o[m - 1]]:
                continue
            for k in range(m):
                ys[k] = y[idx[start + o[k]]]
            s_left = 0.0
            for k in range(m - 1):
                s_left += ys[k]
                n_left = k + 1
                n_right = m - n_left
                if n_right < min_leaf:
                    break
                ca = ks[o[k]]
                cb = ks[o[k + 1]]
                if n_left < min_leaf or ca == cb:
                    continue
                s_right = total - s_left
                dec = s_left * s_left / n_left + s_right * s_right / n_right - parent_term
                if dec > 0.0 and (best_f == -1 or dec > best_dec + TIE_RTOL * abs(best_dec)):
                    best_f = f
                    best_dec = dec
                    best_thr = _midpoint(uniq[base + ca], uniq[base + cb])
    return best_f, best_thr, best_dec


@numba.njit(cache=True)
def _midpoint(a, b):
    thr = a + (b - a) / 2.0
    if thr >= b:
        thr = a
    return thr


@numba.njit(cache=True, nogil=True)
def _grow(codes, uniq, offsets, y, idx, max_depth, min_leaf, max_features, seed):
    n_total = idx.shape[0]
    p = codes.shape[1]
    cap = 2 * n_total + 1
    feature = np.full(cap, -1, dtype=np.int64)
    threshold = np.zeros(cap)
    left = np.full(cap, -1, dtype=np.int64)
    right = np.full(cap, -1, dtype=np.int64)
    value = np.zeros(cap)
    n_samples = np.zeros(cap, dtype=np.int64)
    dec_out = np.zeros(cap)

    max_codes = 0
    for j in range(p):
        if offsets[j + 1] - offsets[j] > max_codes:
            max_codes = offsets[j + 1] - offsets[j]
    cnt = np.zeros(max_codes, dtype=np.int64)
    csum = np.zeros(max_codes)
    ys = np.empty(n_total)
    ks = np.empty(n_total, dtype=np.int64)
    tmp = np.empty(n_total, dtype=np.int64)
    perm = np.arange(p)
    features = np.empty(p, dtype=np.int64)
    rng = seed

    # stack entries: start, end, depth, parent, side (0 left / 1 right / -1 root)
    stack = np.empty((cap, 5), dtype=np.int64)
    top = 0
    stack[0, 0] = 0
    stack[0, 1] = n_total
    stack[0, 2] = 0
    stack[0, 3] = -1
    stack[0, 4] = -1
    top = 1
    next_id = 0

    while top > 0:
        top -= 1
        start = stack[top, 0]
        end = stack[top, 1]
        depth = stack[top, 2]
        parent = stack[top, 3]
        side = stack[top, 4]

        node = next_id
        next_id += 1
        if side == 0:
            left[parent] = node
        elif side == 1:
            right[parent] = node

        m = end - start
        s = 0.0
        lo = y[idx[start]]
        hi = lo
        for i in range(start, end):
            v = y[idx[i]]
            s += v
            if v < lo:
                lo = v
            if v > hi:
                hi = v
        value[node] = s / m
        n_samples[node] = m

        if (max_depth >= 0 and depth >= max_depth) or m < 2 * min_leaf or lo == hi:
            continue

        if max_features < p:
            for j in range(p):
                perm[j] = j
            for j in range(max_features):
                rng, r = _splitmix64(rng)
                k = j + np.int64(r % np.uint64(p - j))
                t = perm[j]
                perm[j] = perm[k]
                perm[k] = t
            for j in range(max_features):
                features[j] = perm[j]
            features[:max_features].sort()
            n_feat = max_features
        else:
            for j in range(p):
                features[j] = j
            n_feat = p

        f, thr, dec = _best_split(codes, uniq, offsets, y, idx, start, end, features, n_feat,
                                  min_leaf, cnt, csum, ys, ks)
        if f < 0:
            continue

        # stable partition: rows with x <= thr first
        nl = 0
        nr = 0
        for i in range(start, end):
            if uniq[offsets[f] + codes[idx[i], f]] <= thr:
                idx[start + nl] = idx[i]
                nl += 1
            else:
                tmp[nr] = idx[i]
                nr += 1
        for i in range(nr):
            idx[start + nl + i] = tmp[i]

        feature[node] = f
        threshold[node] = thr
        dec_out[node] = dec / m

        # push right first so the left subtree is numbered next (preorder)
        stack[top, 0] = start + nl
        stack[top, 1] = end
        stack[top, 2] = depth + 1
        stack[top, 3] = node
        stack[top, 4] = 1
        top += 1
        stack[top, 0] = start
        stack[top, 1] = start + nl
        stack[top, 2] = depth + 1
        stack[top, 3] = node
        stack[top, 4] = 0
        top += 1

    k = next_id
    return (feature[:k].copy(), threshold[:k].copy(), left[:k].copy(), right[:k].copy(),
            value[:k].copy(), n_samples[:k].copy(), dec_out[:k].copy())


@numba.njit(cache=True, nogil=True)
def _apply(feature, threshold, left, right, X):
    n = X.shape[0]
    out = np.empty(n, dtype=np.int64)
    for i in range(n):
        node = 0
        while feature[node] != -1:
            if X[i, feature[node]] <= threshold[node]:
                node = left[node]
            else:
                node = right[node]
        out[i] = node
    return out


@numba.njit(cache=True, nogil=True)
def _predict(feature, threshold, left, right, value, X):
    n = X.shape[0]
    out = np.empty(n)
    for i in range(n):
        node = 0
        while feature[node] != -1:
            if X[i, feature[node]] <= threshold[node]:
                node = left[node]
            else:
                node = right[node]
        out[i] = value[node]
    return out
