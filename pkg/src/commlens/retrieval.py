"""Relevance feedback: a from-scratch random forest over level feature vectors.

Trees use axis-aligned thresholds with class-weighted Gini impurity and
per-split feature subsampling of ceil(sqrt(d)). Training is deterministic
for a fixed (examples, seed): examples are order-normalized by target id
before any randomness is drawn. Every split is exportable, which keeps the
decision path of a score explainable in reports.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

MODEL_FORMAT_VERSION = 1
FADE_FLOOR = 0.15

RELEVANT = "relevant"
IRRELEVANT = "irrelevant"


class TrainingError(Exception):
    pass


@dataclass(frozen=True)
class LabeledExample:
    target_id: str
    label: str  # RELEVANT | IRRELEVANT
    features: tuple[float, ...]


@dataclass(frozen=True)
class ForestConfig:
    tree_count: int = 100
    max_depth: int = 8
    min_leaf: int = 1
    seed: int = 0


@dataclass
class _TreeNode:
    feature: int = -1
    threshold: float = 0.0
    left: Optional["_TreeNode"] = None
    right: Optional["_TreeNode"] = None
    leaf_vote: int = -1  # 1 = relevant, 0 = irrelevant; -1 for internal nodes

    def predict(self, x: np.ndarray) -> int:
        node = self
        while node.leaf_vote < 0:
            node = node.left if x[node.feature] <= node.threshold else node.right
        return node.leaf_vote

    def to_dict(self) -> dict:
        if self.leaf_vote >= 0:
            return {"vote": self.leaf_vote}
        return {"feature": self.feature, "threshold": self.threshold,
                "left": self.left.to_dict(), "right": self.right.to_dict()}

    @classmethod
    def from_dict(cls, d: dict) -> "_TreeNode":
        if "vote" in d:
            return cls(leaf_vote=int(d["vote"]))
        return cls(feature=int(d["feature"]), threshold=float(d["threshold"]),
                   left=cls.from_dict(d["left"]), right=cls.from_dict(d["right"]))


def _weighted_gini(y: np.ndarray, w: np.ndarray) -> float:
    total = w.sum()
    if total <= 0:
        return 0.0
    p1 = w[y == 1].sum() / total
    return 1.0 - p1 * p1 - (1.0 - p1) * (1.0 - p1)


def _best_split(X: np.ndarray, y: np.ndarray, w: np.ndarray,
                feature_ids: np.ndarray, min_leaf: int):
    best = None  # (impurity, feature, threshold)
    for f in feature_ids:
        values = np.unique(X[:, f])
        if len(values) < 2:
            continue
        thresholds = (values[:-1] + values[1:]) / 2.0
        for thr in thresholds:
            mask = X[:, f] <= thr
            nl, nr = int(mask.sum()), int((~mask).sum())
            if nl < min_leaf or nr < min_leaf:
                continue
            total = w.sum()
            imp = (w[mask].sum() * _weighted_gini(y[mask], w[mask])
                   + w[~mask].sum() * _weighted_gini(y[~mask], w[~mask])) / total
            cand = (imp, int(f), float(thr))
            if best is None or cand < best:
                best = cand
    return best


def _grow_tree(X: np.ndarray, y: np.ndarray, w: np.ndarray, depth: int,
               config: ForestConfig, rng: np.random.RandomState) -> _TreeNode:
    def leaf() -> _TreeNode:
        vote = 1 if w[y == 1].sum() >= w[y == 0].sum() else 0
        return _TreeNode(leaf_vote=vote)

    if depth >= config.max_depth or len(np.unique(y)) == 1 or len(y) < 2 * config.min_leaf:
        return leaf()
    d = X.shape[1]
    k = max(1, math.ceil(math.sqrt(d)))
    feature_ids = np.sort(rng.choice(d, size=min(k, d), replace=False))
    split = _best_split(X, y, w, feature_ids, config.min_leaf)
    if split is None:
        return leaf()
    _, f, thr = split
    mask = X[:, f] <= thr
    return _TreeNode(feature=f, threshold=thr,
                     left=_grow_tree(X[mask], y[mask], w[mask], depth + 1, config, rng),
                     right=_grow_tree(X[~mask], y[~mask], w[~mask], depth + 1, config, rng))


@dataclass
class RelevanceModel:
    trees: list[_TreeNode]
    config: ForestConfig
    feature_dim: int
    feature_labels: tuple[str, ...] = ()

    def score(self, features: Sequence[float]) -> dict:
        """p = fraction of trees voting relevant; uncertainty = 1 - |2p - 1|."""
        x = np.asarray(features, dtype=float)
        if x.shape != (self.feature_dim,):
            raise TrainingError(
                f"feature vector has dimension {x.shape}, expected ({self.feature_dim},)")
        votes = sum(t.predict(x) for t in self.trees)
        p = votes / len(self.trees)
        return {"p": p, "uncertainty": 1.0 - abs(2.0 * p - 1.0)}

    def to_text(self) -> str:
        doc = {
            "format": "commlens-relevance-model",
            "version": MODEL_FORMAT_VERSION,
            "config": {"treeCount": self.config.tree_count, "maxDepth": self.config.max_depth,
                       "minLeaf": self.config.min_leaf, "seed": self.config.seed},
            "featureDim": self.feature_dim,
            "featureLabels": list(self.feature_labels),
            "trees": [t.to_dict() for t in self.trees],
        }
        return json.dumps(doc, sort_keys=True, indent=1)

    @classmethod
    def from_text(cls, text: str) -> "RelevanceModel":
        doc = json.loads(text)
        if doc.get("format") != "commlens-relevance-model":
            raise TrainingError("not a relevance model document")
        cfg = doc["config"]
        return cls(trees=[_TreeNode.from_dict(t) for t in doc["trees"]],
                   config=ForestConfig(tree_count=cfg["treeCount"], max_depth=cfg["maxDepth"],
                                       min_leaf=cfg["minLeaf"], seed=cfg["seed"]),
                   feature_dim=int(doc["featureDim"]),
                   feature_labels=tuple(doc.get("featureLabels", [])))


def train(examples: Sequence[LabeledExample], config: ForestConfig = ForestConfig(),
          feature_labels: tuple[str, ...] = ()) -> RelevanceModel:
    if not examples:
        raise TrainingError("no training examples; label at least one relevant "
                            "and one irrelevant target")
    ordered = sorted(examples, key=lambda e: e.target_id)
    labels = {e.label for e in ordered}
    if labels - {RELEVANT, IRRELEVANT}:
        raise TrainingError(f"unknown labels: {sorted(labels - {RELEVANT, IRRELEVANT})}")
    if len(labels) < 2:
        raise TrainingError("training set has a single class; label both a relevant "
                            "and an irrelevant target before training")
    dims = {len(e.features) for e in ordered}
    if len(dims) != 1:
        raise TrainingError(f"inconsistent feature dimensions: {sorted(dims)}")
    dim = dims.pop()

    X = np.array([e.features for e in ordered], dtype=float)
    y = np.array([1 if e.label == RELEVANT else 0 for e in ordered], dtype=int)
    # balanced class weights: analysts usually label few positives first
    n = len(y)
    n1 = int(y.sum())
    weight_of = {1: n / (2.0 * n1), 0: n / (2.0 * (n - n1))}
    w_all = np.array([weight_of[int(v)] for v in y], dtype=float)

    rng = np.random.RandomState(config.seed)
    pos_idx = np.flatnonzero(y == 1)
    neg_idx = np.flatnonzero(y == 0)
    trees = []
    for _ in range(config.tree_count):
        # stratified bootstrap: every tree sees both classes, so a pair of
        # separable examples always yields a splitting tree
        idx = np.concatenate([pos_idx[rng.randint(0, len(pos_idx), size=len(pos_idx))],
                              neg_idx[rng.randint(0, len(neg_idx), size=len(neg_idx))]])
        trees.append(_grow_tree(X[idx], y[idx], w_all[idx], 0, config, rng))
    return RelevanceModel(trees=trees, config=config, feature_dim=dim,
                          feature_labels=feature_labels)


def rank_ambiguous(model: RelevanceModel, targets: dict[str, Sequence[float]],
                   k: int, labeled_ids: Sequence[str] = ()) -> list[str]:
    """Top-k unlabeled target ids by uncertainty descending, ties by id."""
    labeled = set(labeled_ids)
    scored = [(tid, model.score(vec)["uncertainty"])
              for tid, vec in targets.items() if tid not in labeled]
    scored.sort(key=lambda item: (-item[1], item[0]))
    return [tid for tid, _ in scored[:max(k, 0)]]


def fade_factor(p: float, threshold: float) -> float:
    """Opacity multiplier: 1.0 at/above threshold, else linear down to the
    0.15 floor at p=0. Never returns 0 - nothing is fully hidden."""
    if not (0.0 <= threshold <= 1.0):
        raise ValueError("threshold must be in [0, 1]")
    if p >= threshold:
        return 1.0
    return FADE_FLOOR + (1.0 - FADE_FLOOR) * (p / threshold)
