"""Beta-entropy of sparse context trees and the induced tree distance.

A complete tree partitions histories into blocks of probability
``s(w) * |A|**-l(w)`` under the uniform measure.  The beta-entropy of that
partition is::

    H_b = (sum_w p_w**b - 1) / (2**(1 - b) - 1)      b != 1
    H_1 = -sum_w p_w * log2(p_w)

and the distance between two trees is ``2 H(t v s) - H(t) - H(s)`` where
``t v s`` is the common refinement computed by :func:`~phylospst.core.tree_join`.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np

from .core import SparseContextTree, complete_tree, tree_join, validate_tree

__all__ = [
    "DistanceMatrix",
    "beta_distance",
    "beta_entropy",
    "distance_matrix",
    "partition_entropy",
]

NEGATIVE_TOLERANCE = 1e-12


def _check_beta(beta: float) -> float:
    beta = float(beta)
    if not beta > 0 or math.isinf(beta):
        raise ValueError(f"beta must be a positive finite number, got {beta}")
    return beta


def partition_entropy(probabilities: Iterable[float], beta: float = 1.0) -> float:
    """Beta-entropy of a probability vector (block probabilities of a partition)."""
    beta = _check_beta(beta)
    p = [float(x) for x in probabilities]
    if beta == 1.0:
        h = -math.fsum(x * math.log2(x) for x in p if x > 0)
    else:
        h = (math.fsum(x ** beta for x in p) - 1.0) / (2.0 ** (1.0 - beta) - 1.0)
    # exact value is >= 0; only rounding can push it below
    return max(h, 0.0)


def _ready(tree: SparseContextTree, auto_complete: bool) -> SparseContextTree:
    report = validate_tree(tree)
    if report.is_complete:
        return tree
    if not report.is_consistent:
        raise ValueError("beta-entropy is only defined for consistent trees")
    if not auto_complete:
        raise ValueError(f"tree is incomplete (coverage {report.coverage})")
    return complete_tree(tree)


def beta_entropy(tree: SparseContextTree, beta: float = 1.0, auto_complete: bool = True) -> float:
    """Beta-entropy of the history partition induced by ``tree`` (bits for beta=1).

    Incomplete trees are completed first unless ``auto_complete`` is false, in
    which case they raise ``ValueError``.
    """
    beta = _check_beta(beta)
    tree = _ready(tree, auto_complete)
    return partition_entropy(tree.weights, beta)


def _distance(h_join: float, h_a: float, h_b: float) -> float:
    # (h_a + h_b) is commutative in IEEE arithmetic, which keeps d symmetric
    d = 2.0 * h_join - (h_a + h_b)
    if d < 0:
        if d < -NEGATIVE_TOLERANCE:
            raise ArithmeticError(f"negative tree distance {d!r}")
        d = 0.0
    return d


def beta_distance(tau: SparseContextTree, sigma: SparseContextTree, beta: float = 1.0) -> float:
    """``2 H(tau v sigma) - H(tau) - H(sigma)``; incomplete inputs are completed."""
    beta = _check_beta(beta)
    tau = _ready(tau, True)
    sigma = _ready(sigma, True)
    joined = tree_join(tau, sigma)
    return _distance(
        partition_entropy(joined.weights, beta),
        partition_entropy(tau.weights, beta),
        partition_entropy(sigma.weights, beta),
    )


@dataclass(frozen=True)
class DistanceMatrix:
    """Labelled symmetric distance matrix with zero diagonal."""

    labels: tuple
    values: np.ndarray

    def __post_init__(self):
        labels = tuple(str(x) for x in self.labels)
        values = np.array(self.values, dtype=float)
        n = len(labels)
        if n == 0:
            raise ValueError("distance matrix is empty")
        if len(set(labels)) != n:
            dupes = sorted({x for x in labels if labels.count(x) > 1})
            raise ValueError(f"duplicate taxon labels: {', '.join(dupes)}")
        if values.shape != (n, n):
            raise ValueError(f"expected a {n}x{n} matrix, got shape {values.shape}")
        if not np.isfinite(values).all():
            raise ValueError("distance matrix has non-finite entries")
        if np.abs(values - values.T).max() > 1e-9:
            raise ValueError("distance matrix is not symmetric")
        if values.min() < -1e-9:
            raise ValueError("distance matrix has negative entries")
        if np.abs(np.diag(values)).max() > 1e-9:
            raise ValueError("distance matrix has a nonzero diagonal")
        values.setflags(write=False)
        object.__setattr__(self, "labels", labels)
        object.__setattr__(self, "values", values)

    def __len__(self):
        return len(self.labels)

    def index(self, label: str) -> int:
        try:
            return self.labels.index(label)
        except ValueError:
            raise KeyError(label) from None

    def __getitem__(self, pair) -> float:
        a, b = pair
        return float(self.values[self.index(a), self.index(b)])

    def reorder(self, labels: Sequence[str]) -> "DistanceMatrix":
        idx = [self.index(x) for x in labels]
        return DistanceMatrix(tuple(labels), self.values[np.ix_(idx, idx)])


def distance_matrix(trees, beta: float = 1.0) -> DistanceMatrix:
    """All-pairs beta-distances for a list of ``(label, tree)`` pairs."""
    beta = _check_beta(beta)
    trees = list(trees)
    if not trees:
        raise ValueError("no trees given")
    labels = [label for label, _ in trees]
    if len(set(labels)) != len(labels):
        raise ValueError("duplicate tree labels")
    alphabet = trees[0][1].alphabet
    ready = []
    for label, tree in trees:
        if tree.alphabet != alphabet:
            raise ValueError(f"tree {label!r} uses alphabet {tree.alphabet}, expected {alphabet}")
        ready.append(_ready(tree, True))
    entropies = [partition_entropy(t.weights, beta) for t in ready]
    n = len(ready)
    values = np.zeros((n, n))
    for i in range(n):
        for j in range(i + 1, n):
            if ready[i] == ready[j]:
                d = 0.0
            else:
                joined = tree_join(ready[i], ready[j])
                d = _distance(partition_entropy(joined.weights, beta), entropies[i], entropies[j])
            values[i, j] = values[j, i] = d
    return DistanceMatrix(tuple(labels), values)
