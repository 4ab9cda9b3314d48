"""Regressors: mean baseline, random forest, gradient-boosted trees.

All trees use the same exact greedy splitter: every midpoint between
consecutive distinct sorted values is a candidate, scored by squared-error
reduction, ties broken by lowest feature index then lowest threshold. No
histogram binning; data here is desk-scale.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field, replace

import numpy as np

from .errors import CorruptArtifact, EmptyMatrix, InvalidConfig, MissingFeature, WrongKind

ARTIFACT_VERSION = 1


@dataclass
class Matrix:
    feature_names: list[str]
    X: np.ndarray  # n x d
    y: np.ndarray  # n

    def __post_init__(self):
        self.X = np.asarray(self.X, dtype=float)
        self.y = np.asarray(self.y, dtype=float)
        n, d = self.X.shape
        if n < 1 or d < 1:
            raise EmptyMatrix()
        if len(self.feature_names) != d or len(self.y) != n:
            raise InvalidConfig("matrix shape mismatch")
        if np.isnan(self.X).any() or np.isnan(self.y).any():
            raise InvalidConfig("matrix must not contain missing values")

    @classmethod
    def from_table(cls, table, feature_names=None) -> "Matrix":
        names = list(feature_names) if feature_names is not None else table.feature_columns
        X = np.array([[r.values[c] for c in names] for r in table.rows], dtype=float)
        y = np.array([r.values[table.target_column] for r in table.rows], dtype=float)
        return cls(names, X, y)


@dataclass
class HyperParams:
    n_trees: int = 200
    max_depth: int = 4
    learning_rate: float = 0.1  # gbdt only
    min_samples_leaf: int = 5
    subsample: float = 1.0  # gbdt row fraction; forest uses bootstrap instead
    l2_leaf_reg: float = 1.0  # gbdt leaf shrink
    bootstrap: bool = True  # forest only
    max_features: str | None = "sqrt"  # forest per-split feature sampling; None = all

    def __post_init__(self):
        if self.n_trees < 0 or self.max_depth < 1 or self.min_samples_leaf < 1:
            raise InvalidConfig("tree counts and depth must be positive")
        if not 0 < self.learning_rate <= 1:
            raise InvalidConfig("learning_rate must lie in (0, 1]")
        if not 0 < self.subsample <= 1:
            raise InvalidConfig("subsample must lie in (0, 1]")
        if self.l2_leaf_reg < 0:
            raise InvalidConfig("l2_leaf_reg must be >= 0")


@dataclass
class RegressionTree:
    # parallel arrays; feature == -1 marks a leaf
    feature: np.ndarray
    threshold: np.ndarray
    left: np.ndarray
    right: np.ndarray
    value: np.ndarray

    def predict(self, X: np.ndarray) -> np.ndarray:
        X = np.asarray(X, dtype=float)
        pos = np.zeros(len(X), dtype=np.int64)
        while True:
            feats = self.feature[pos]
            internal = feats >= 0
            if not internal.any():
                break
            idx = np.nonzero(internal)[0]
            f = feats[idx]
            go_left = X[idx, f] <= self.threshold[pos[idx]]
            pos[idx] = np.where(go_left, self.left[pos[idx]], self.right[pos[idx]])
        return self.value[pos]

    def to_dict(self) -> dict:
        return {
            "feature": self.feature.tolist(),
            "threshold": self.threshold.tolist(),
            "left": self.left.tolist(),
            "right": self.right.tolist(),
            "value": self.value.tolist(),
        }

    @classmethod
    def from_dict(cls, d) -> "RegressionTree":
        return cls(
            np.asarray(d["feature"], dtype=np.int64),
            np.asarray(d["threshold"], dtype=float),
            np.asarray(d["left"], dtype=np.int64),
            np.asarray(d["right"], dtype=np.int64),
            np.asarray(d["value"], dtype=float),
        )


def best_split(X, residuals, feature_indices, min_samples_leaf):
    """Exact greedy split over the given features.

    Returns (feature_index, threshold, gain) or None. Gain is the reduction
    in residual SSE when each side predicts its mean. Tie-break: lowest
    feature index, then lowest threshold (feature_indices must be ascending).
    """
    r = np.asarray(residuals, dtype=float)
    n = len(r)
    if n < 2 * min_samples_leaf:
        return None
    cols = X[:, feature_indices]
    order = np.argsort(cols, axis=0, kind="stable")
    xs = np.take_along_axis(cols, order, axis=0)
    rs = r[order]
    csum = np.cumsum(rs, axis=0)
    total = csum[-1, :]
    n_left = np.arange(1, n, dtype=float)[:, None]
    s_left = csum[:-1, :]
    with np.errstate(invalid="ignore"):
        gain = (
            s_left**2 / n_left
            + (total[None, :] - s_left) ** 2 / (n - n_left)
            - (total[None, :] ** 2) / n
        )
    valid = (xs[1:] != xs[:-1]) & (n_left >= min_samples_leaf) & ((n - n_left) >= min_samples_leaf)
    gain[~valid] = -np.inf
    if not valid.any():
        return None
    g_max = float(gain.max())
    if g_max <= 0:
        return None
    # mathematically tied candidates can differ in the last float bit; treat
    # near-equal gains as ties and resolve lowest feature, lowest threshold
    tol = 1e-12 * max(1.0, abs(g_max))
    tied = gain >= g_max - tol
    j = int(np.argmax(tied.any(axis=0)))  # first column with a tied candidate
    i = int(np.argmax(tied[:, j]))  # first position -> lowest threshold
    g = float(gain[i, j])
    threshold = float((xs[i, j] + xs[i + 1, j]) / 2)
    return int(feature_indices[j]), threshold, g


def fit_tree(
    m: Matrix,
    residuals,
    hp: HyperParams,
    rng: np.random.Generator | None = None,
    l2_leaf_reg: float = 0.0,
    feature_fraction_sqrt: bool = False,
    gain_accumulator: dict | None = None,
) -> RegressionTree:
    """CART-style variance-reduction tree on the given residuals.

    Leaf value is the residual mean, shrunk to sum/(count + l2_leaf_reg)
    when l2_leaf_reg > 0. With feature_fraction_sqrt, ceil(sqrt(d)) features
    are sampled (via rng) at each node, as in a random forest.
    """
    r = np.asarray(residuals, dtype=float)
    X = m.X
    d = X.shape[1]
    n_sub = max(1, int(np.ceil(np.sqrt(d)))) if feature_fraction_sqrt else d

    feature, threshold, left, right, value = [], [], [], [], []

    def leaf_value(idx):
        # summing in sorted order keeps leaves bit-identical under row permutation
        return float(np.sort(r[idx]).sum() / (len(idx) + l2_leaf_reg))

    def build(idx, depth):
        node = len(feature)
        feature.append(-1)
        threshold.append(0.0)
        left.append(-1)
        right.append(-1)
        value.append(0.0)
        split = None
        if depth < hp.max_depth and len(idx) >= 2 * hp.min_samples_leaf:
            if n_sub < d:
                feats = np.sort(rng.choice(d, size=n_sub, replace=False))
            else:
                feats = np.arange(d)
            split = best_split(X[idx], r[idx], feats, hp.min_samples_leaf)
        if split is None:
            value[node] = leaf_value(idx)
            return node
        f, thr, gain = split
        if gain_accumulator is not None:
            gain_accumulator[f] = gain_accumulator.get(f, 0.0) + gain
        feature[node] = f
        threshold[node] = thr
        mask = X[idx, f] <= thr
        left[node] = build(idx[mask], depth + 1)
        right[node] = build(idx[~mask], depth + 1)
        return node

    build(np.arange(len(r)), 0)
    return RegressionTree(
        np.asarray(feature, dtype=np.int64),
        np.asarray(threshold, dtype=float),
        np.asarray(left, dtype=np.int64),
        np.asarray(right, dtype=np.int64),
        np.asarray(value, dtype=float),
    )


@dataclass
class ModelArtifact:
    kind: str  # mean | forest | gbdt
    trees: list[RegressionTree]
    base_prediction: float
    feature_names: list[str]
    importances: dict[str, float]
    hyperparams: HyperParams
    train_seed: int
    learning_rate_applied: bool = field(default=False)  # gbdt trees carry lr at predict time

    def predict_matrix(self, X: np.ndarray) -> np.ndarray:
        X = np.asarray(X, dtype=float)
        if self.kind == "mean" or not self.trees:
            return np.full(len(X), self.base_prediction)
        parts = np.stack([t.predict(X) for t in self.trees])
        if self.kind == "forest":
            return parts.mean(axis=0)
        return self.base_prediction + self.hyperparams.learning_rate * parts.sum(axis=0)

    def to_json(self) -> str:
        doc = {
            "version": ARTIFACT_VERSION,
            "kind": self.kind,
            "base_prediction": self.base_prediction,
            "feature_names": self.feature_names,
            "importances": self.importances,
            "hyperparams": vars(self.hyperparams),
            "train_seed": self.train_seed,
            "trees": [t.to_dict() for t in self.trees],
        }
        return json.dumps(doc, sort_keys=True, separators=(",", ":"))

    @classmethod
    def from_json(cls, text: str) -> "ModelArtifact":
        try:
            doc = json.loads(text)
            if doc.get("version") != ARTIFACT_VERSION:
                raise CorruptArtifact(f"unsupported artifact version: {doc.get('version')!r}")
            return cls(
                kind=doc["kind"],
                trees=[RegressionTree.from_dict(t) for t in doc["trees"]],
                base_prediction=float(doc["base_prediction"]),
                feature_names=list(doc["feature_names"]),
                importances={k: float(v) for k, v in doc["importances"].items()},
                hyperparams=HyperParams(**doc["hyperparams"]),
                train_seed=int(doc["train_seed"]),
            )
        except CorruptArtifact:
            raise
        except (KeyError, TypeError, ValueError, json.JSONDecodeError) as exc:
            raise CorruptArtifact(str(exc)) from exc


def _stable_mean(v: np.ndarray) -> float:
    # row-permutation-invariant mean (fixed summation order)
    return float(np.sort(v).sum() / len(v))


def _normalized(gains: dict[int, float], names) -> dict[str, float]:
    total = sum(gains.values())
    if total <= 0:
        return {name: 0.0 for name in names}
    return {name: gains.get(i, 0.0) / total for i, name in enumerate(names)}


def fit_mean(m: Matrix) -> ModelArtifact:
    return ModelArtifact(
        kind="mean",
        trees=[],
        base_prediction=_stable_mean(m.y),
        feature_names=list(m.feature_names),
        importances={name: 0.0 for name in m.feature_names},
        hyperparams=HyperParams(n_trees=0),
        train_seed=0,
    )


def fit_forest(m: Matrix, hp: HyperParams | None = None, seed: int = 0) -> ModelArtifact:
    hp = hp or HyperParams()
    n = len(m.y)
    gains: dict[int, float] = {}
    trees = []
    streams = np.random.SeedSequence(seed).spawn(hp.n_trees)
    for t in range(hp.n_trees):
        rng = np.random.default_rng(streams[t])
        if hp.bootstrap:
            idx = np.sort(rng.integers(0, n, size=n))
        else:
            idx = np.arange(n)
        sub = Matrix(m.feature_names, m.X[idx], m.y[idx])
        trees.append(
            fit_tree(
                sub,
                sub.y,
                hp,
                rng=rng,
                feature_fraction_sqrt=hp.max_features == "sqrt",
                gain_accumulator=gains,
            )
        )
    return ModelArtifact(
        kind="forest",
        trees=trees,
        base_prediction=_stable_mean(m.y),
        feature_names=list(m.feature_names),
        importances=_normalized(gains, m.feature_names),
        hyperparams=hp,
        train_seed=seed,
    )


def fit_gbdt(m: Matrix, hp: HyperParams | None = None, seed: int = 0) -> ModelArtifact:
    hp = hp or HyperParams()
    n = len(m.y)
    base = _stable_mean(m.y)
    current = np.full(n, base)
    gains: dict[int, float] = {}
    trees = []
    streams = np.random.SeedSequence(seed).spawn(max(hp.n_trees, 1))
    for t in range(hp.n_trees):
        residuals = m.y - current
        if hp.subsample < 1.0:
            rng = np.random.default_rng(streams[t])
            k = max(1, int(round(hp.subsample * n)))
            idx = np.sort(rng.choice(n, size=k, replace=False))
        else:
            idx = np.arange(n)
        sub = Matrix(m.feature_names, m.X[idx], m.y[idx])
        tree = fit_tree(
            sub,
            residuals[idx],
            hp,
            l2_leaf_reg=hp.l2_leaf_reg,
            gain_accumulator=gains,
        )
        trees.append(tree)
        current = current + hp.learning_rate * tree.predict(m.X)
    return ModelArtifact(
        kind="gbdt",
        trees=trees,
        base_prediction=base,
        feature_names=list(m.feature_names),
        importances=_normalized(gains, m.feature_names),
        hyperparams=hp,
        train_seed=seed,
    )


def importance(artifact: ModelArtifact) -> dict[str, float]:
    if artifact.kind not in ("forest", "gbdt"):
        raise WrongKind(f"no split-gain importances for kind {artifact.kind!r}")
    return dict(artifact.importances)


def select_top_k(importances: dict[str, float], k: int) -> list[str]:
    """K highest-importance names, descending; ties and zero-padding lexicographic."""
    if k < 1:
        raise InvalidConfig("k must be >= 1")
    ranked = sorted(importances.items(), key=lambda kv: (-kv[1], kv[0]))
    return [name for name, _ in ranked[:k]]


def predict(artifact: ModelArtifact, feature_vector: dict[str, float]) -> float:
    for name in artifact.feature_names:
        if name not in feature_vector:
            raise MissingFeature(name)
    x = np.array([[feature_vector[name] for name in artifact.feature_names]])
    return float(artifact.predict_matrix(x)[0])


def gbdt_hyperparams_pair(hp: HyperParams | None = None) -> tuple[HyperParams, HyperParams]:
    """The two boosted configurations used in the evaluation grid."""
    hp = hp or HyperParams()
    return replace(hp, l2_leaf_reg=1.0), replace(hp, l2_leaf_reg=3.0)
