"""CART regression trees with weakest-link cost-complexity pruning.

Growth is greedy on squared-error reduction.  Split candidates are midpoints
between consecutive distinct sorted values; ties go to the lower feature
index and then the lower threshold.  Pruning follows Breiman et al.: the
cost of a node is its SSE divided by the root sample size (the same scale as
scikit-learn's ``ccp_alpha``), and internal nodes are collapsed in order of
effective alpha ``(R(t) - R(T_t)) / (|T_t| - 1)`` while that value is
``<= cc_alpha``.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..errors import InvalidConfig, TooFewRows
from .base import FittedMachine, _guard

LEAF = -1

DEFAULTS = {"max_depth": 10, "cc_alpha": 0.0, "min_leaf": 5}


@dataclass(frozen=True, eq=False)
class TreeMachine(FittedMachine):
    n_features: int
    feature: np.ndarray  # LEAF for leaves
    threshold: np.ndarray
    left: np.ndarray
    right: np.ndarray
    value: np.ndarray

    kind = "tree"

    @property
    def width(self):
        return self.n_features

    @property
    def n_leaves(self) -> int:
        return int(np.sum(self.feature == LEAF))

    @property
    def depth(self) -> int:
        depth = np.zeros(len(self.feature), dtype=int)
        for t in range(len(self.feature)):
            if self.feature[t] != LEAF:
                depth[self.left[t]] = depth[self.right[t]] = depth[t] + 1
        return int(depth.max())

    def apply(self, X) -> np.ndarray:
        """Leaf index reached by each row."""
        node = np.zeros(X.shape[0], dtype=int)
        rows = np.arange(X.shape[0])
        while True:
            feat = self.feature[node]
            internal = feat != LEAF
            if not internal.any():
                return node
            go_left = X[rows, np.where(internal, feat, 0)] <= self.threshold[node]
            node = np.where(internal, np.where(go_left, self.left[node], self.right[node]), node)

    def _predict(self, X):
        return self.value[self.apply(X)]

    def _state(self):
        return {
            "n_features": int(self.n_features),
            "feature": self.feature.tolist(),
            "threshold": self.threshold.tolist(),
            "left": self.left.tolist(),
            "right": self.right.tolist(),
            "value": self.value.tolist(),
        }

    @classmethod
    def _from_state(cls, hyperparams, state):
        return cls(
            hyperparams,
            int(state["n_features"]),
            np.asarray(state["feature"], dtype=int),
            np.asarray(state["threshold"], dtype=float),
            np.asarray(state["left"], dtype=int),
            np.asarray(state["right"], dtype=int),
            np.asarray(state["value"], dtype=float),
        )


class _GrownTree:
    """Unpruned tree plus per-node statistics needed for pruning."""

    def __init__(self, n_features, n_root):
        self.n_features = n_features
        self.n_root = n_root
        self.feature = []
        self.threshold = []
        self.left = []
        self.right = []
        self.value = []
        self.sse = []
        self.count = []

    def add(self, value, sse, count):
        self.feature.append(LEAF)
        self.threshold.append(0.0)
        self.left.append(LEAF)
        self.right.append(LEAF)
        self.value.append(value)
        self.sse.append(sse)
        self.count.append(count)
        return len(self.feature) - 1

    def pruning_path(self):
        """Weakest-link sequence ``[(alpha, node), ...]`` in pruning order."""
        n = len(self.feature)
        feature = np.array(self.feature)
        parent = np.full(n, LEAF)
        for t in range(n):
            if feature[t] != LEAF:
                parent[self.left[t]] = parent[self.right[t]] = t
        cost = np.array(self.sse) / self.n_root
        # subtree leaf cost and leaf counts, children always have larger ids
        sub_cost = cost.copy()
        sub_leaves = np.ones(n)
        for t in range(n - 1, -1, -1):
            if feature[t] != LEAF:
                sub_cost[t] = sub_cost[self.left[t]] + sub_cost[self.right[t]]
                sub_leaves[t] = sub_leaves[self.left[t]] + sub_leaves[self.right[t]]
        internal = feature != LEAF
        path = []
        while internal.any():
            g = np.full(n, np.inf)
            g[internal] = (cost[internal] - sub_cost[internal]) / (sub_leaves[internal] - 1)
            t = int(np.argmin(g))
            path.append((max(float(g[t]), 0.0), t))
            # collapse t: descendants become unreachable, fix ancestors
            stack = [t]
            while stack:
                u = stack.pop()
                if internal[u]:
                    internal[u] = False
                    stack.extend((self.left[u], self.right[u]))
            d_cost = cost[t] - sub_cost[t]
            d_leaves = sub_leaves[t] - 1
            sub_cost[t] = cost[t]
            sub_leaves[t] = 1
            u = parent[t]
            while u != LEAF:
                sub_cost[u] += d_cost
                sub_leaves[u] -= d_leaves
                u = parent[u]
        return path

    def pruned(self, hyperparams, alpha, path) -> TreeMachine:
        collapsed = set()
        for a, t in path:
            if a > alpha:
                break
            collapsed.add(t)
        feature, threshold, left, right, value = [], [], [], [], []
        # breadth-first re-indexing of the surviving nodes; children get larger ids
        order = [0]
        remap = {0: 0}
        i = 0
        while i < len(order):
            t = order[i]
            i += 1
            is_leaf = self.feature[t] == LEAF or t in collapsed
            value.append(self.value[t])
            if is_leaf:
                feature.append(LEAF)
                threshold.append(0.0)
                left.append(LEAF)
                right.append(LEAF)
            else:
                feature.append(self.feature[t])
                threshold.append(self.threshold[t])
                for child in (self.left[t], self.right[t]):
                    remap[child] = len(order)
                    order.append(child)
                left.append(remap[self.left[t]])
                right.append(remap[self.right[t]])
        return TreeMachine(
            dict(hyperparams),
            self.n_features,
            np.array(feature, dtype=int),
            np.array(threshold, dtype=float),
            np.array(left, dtype=int),
            np.array(right, dtype=int),
            np.array(value, dtype=float),
        )


def _best_split(Xn, yn, min_leaf):
    """Return (gain, feature, threshold) of the best split of a node, or None."""
    m, p = Xn.shape
    order = np.argsort(Xn, axis=0, kind="stable")
    xs = np.take_along_axis(Xn, order, axis=0)
    yc = yn - yn.mean()
    ys = yc[order]
    cs = np.cumsum(ys, axis=0)
    cs2 = np.cumsum(ys * ys, axis=0)
    total, total2 = cs[-1], cs2[-1]
    # left part = first i rows, i in [min_leaf, m - min_leaf]
    i = np.arange(min_leaf, m - min_leaf + 1)
    if i.size == 0:
        return None
    nl = i[:, None].astype(float)
    nr = m - nl
    sl, sl2 = cs[i - 1], cs2[i - 1]
    sse_l = sl2 - sl * sl / nl
    sse_r = (total2 - sl2) - (total - sl) ** 2 / nr
    sse_node = total2[0] - total[0] ** 2 / m
    gain = sse_node - sse_l - sse_r
    valid = xs[i - 1] < xs[i]
    gain = np.where(valid, gain, -np.inf)
    # feature-major flattening: argmax keeps the lowest feature, then lowest threshold
    flat = gain.T.ravel()
    k = int(np.argmax(flat))
    best = flat[k]
    if not np.isfinite(best) or best <= 1e-12 * max(sse_node, 1e-300):
        return None
    f, pos = divmod(k, i.size)
    lo, hi = xs[i[pos] - 1, f], xs[i[pos], f]
    thr = 0.5 * (lo + hi)
    if not lo <= thr < hi:
        thr = lo
    return float(best), int(f), float(thr)


def grow_tree(X, y, max_depth: int = 10, min_leaf: int = 5) -> _GrownTree:
    X = np.asarray(X, dtype=float)
    y = np.asarray(y, dtype=float)
    n, p = X.shape
    if max_depth < 1 or min_leaf < 1:
        raise InvalidConfig(f"max_depth and min_leaf must be >= 1, got {max_depth}, {min_leaf}")
    if n < 2 * min_leaf:
        raise TooFewRows(f"tree needs n >= 2*min_leaf = {2 * min_leaf}, got {n}")
    tree = _GrownTree(p, n)

    def node_stats(idx):
        yy = y[idx]
        mu = yy.mean()
        return mu, float(((yy - mu) ** 2).sum())

    mu, sse = node_stats(np.arange(n))
    root = tree.add(mu, sse, n)
    stack = [(root, np.arange(n), 0)]
    while stack:
        t, idx, depth = stack.pop()
        if depth >= max_depth or idx.size < 2 * min_leaf or tree.sse[t] <= 0.0:
            continue
        found = _best_split(X[idx], y[idx], min_leaf)
        if found is None:
            continue
        _, f, thr = found
        mask = X[idx, f] <= thr
        tree.feature[t] = f
        tree.threshold[t] = thr
        children = []
        for part in (idx[mask], idx[~mask]):
            mu, sse = node_stats(part)
            children.append((tree.add(mu, sse, part.size), part))
        tree.left[t], tree.right[t] = children[0][0], children[1][0]
        # right first so the left subtree is expanded first
        for c, part in reversed(children):
            stack.append((c, part, depth + 1))
    return tree


def _tree_hp(hp):
    out = {**DEFAULTS, **hp}
    out["max_depth"] = int(out["max_depth"])
    out["min_leaf"] = int(out["min_leaf"])
    out["cc_alpha"] = float(out["cc_alpha"])
    if out["cc_alpha"] < 0:
        raise InvalidConfig(f"cc_alpha must be >= 0, got {out['cc_alpha']}")
    return out


def fit_tree(X, y, max_depth: int = 10, cc_alpha: float = 0.0, min_leaf: int = 5) -> TreeMachine:
    hp = _tree_hp({"max_depth": max_depth, "cc_alpha": cc_alpha, "min_leaf": min_leaf})
    grown = grow_tree(X, y, hp["max_depth"], hp["min_leaf"])
    return grown.pruned(hp, hp["cc_alpha"], grown.pruning_path())


def fit_tree_grid(X, y, grid) -> list:
    """Fit every grid point, growing each distinct (max_depth, min_leaf) tree once."""
    grown = {}
    out = []
    for hp in grid:
        try:
            hp = _tree_hp(hp)
        except InvalidConfig as err:
            out.append(err)
            continue
        key = (hp["max_depth"], hp["min_leaf"])
        if key not in grown:
            g = _guard(grow_tree, X, y, *key)
            grown[key] = g if isinstance(g, Exception) else (g, g.pruning_path())
        entry = grown[key]
        if isinstance(entry, Exception):
            out.append(entry)
        else:
            g, path = entry
            out.append(g.pruned(hp, hp["cc_alpha"], path))
    return out
