"""Estimate a sparse context tree and its transition probabilities from one sequence.

The procedure grows, merges and prunes:

1. Starting from the empty context, histories are split on the next older
   symbol.  Symbols seen at least ``min_count`` times become candidate groups.
2. Candidate groups are merged agglomeratively (closest pair first, by
   symmetrized Kullback-Leibler divergence in bits) while the divergence stays
   at or below ``merge_threshold``.  Each surviving group is grown the same
   way until ``max_depth``.
3. Bottom-up, a group is kept if ``N(group) * KL(P(.|group) || P(.|parent))``
   reaches ``keep_threshold`` bits, or if any of its descendants is kept.
   Everything else is folded back into one remainder set per node.
4. The result is completed so that its contexts partition all histories.

Counts only use positions whose full history lies inside the sequence; the
sequence is never wrapped around.
"""

from __future__ import annotations

import warnings
from dataclasses import asdict, dataclass, field
from typing import Optional, Sequence

import numpy as np

from .core import (
    Alphabet,
    SparseContext,
    SparseContextTree,
    complete_tree,
    validate_tree,
)

__all__ = [
    "ContextCounts",
    "EstimatedModel",
    "EstimatorConfig",
    "UniformFallbackWarning",
    "estimate_tree",
    "generate_sequence",
    "predictive_distribution",
    "scan_counts",
]


class UniformFallbackWarning(RuntimeWarning):
    """A context had no compatible observations and no smoothing mass."""


@dataclass(frozen=True)
class EstimatorConfig:
    max_depth: int = 5
    min_count: int = 2
    merge_threshold: float = 0.10
    keep_threshold: float = 20.0
    pseudocount: float = 0.5

    def __post_init__(self):
        if int(self.max_depth) != self.max_depth or self.max_depth < 1:
            raise ValueError("max_depth must be a positive integer")
        if int(self.min_count) != self.min_count or self.min_count < 1:
            raise ValueError("min_count must be a positive integer")
        for name in ("merge_threshold", "keep_threshold", "pseudocount"):
            if not getattr(self, name) >= 0:
                raise ValueError(f"{name} must be nonnegative")

    def as_dict(self) -> dict:
        return asdict(self)

    def describe(self) -> str:
        return " ".join(f"{k}={v}" for k, v in self.as_dict().items())


@dataclass(frozen=True)
class ContextCounts:
    """Transition counts for every observed plain suffix up to ``max_depth``.

    ``histories[j - 1]`` is an ``(m, j)`` array of observed length-``j``
    histories (oldest symbol first) and ``transitions[j - 1]`` the matching
    ``(m, |A|)`` next-symbol counts.  ``N(u)`` is the row sum, so it counts
    only occurrences of ``u`` that are followed by a symbol.
    """

    alphabet: Alphabet
    max_depth: int
    histories: tuple
    transitions: tuple

    def _row(self, u: str):
        j = len(u)
        if not 1 <= j <= self.max_depth:
            raise ValueError(f"history length must be in 1..{self.max_depth}")
        target = np.array([self.alphabet.index(s) for s in u])
        hits = np.flatnonzero((self.histories[j - 1] == target).all(axis=1))
        return int(hits[0]) if len(hits) else None

    def count(self, u: str, a: Optional[str] = None) -> int:
        """``N(u, a)``, or ``N(u)`` when ``a`` is omitted."""
        row = self._row(u)
        if row is None:
            return 0
        counts = self.transitions[len(u) - 1][row]
        if a is None:
            return int(counts.sum())
        return int(counts[self.alphabet.index(a)])


def _encode(sequence: str, alphabet: Alphabet) -> np.ndarray:
    return alphabet.encode(sequence)


def scan_counts(sequence: str, alphabet: Alphabet, max_depth: int) -> ContextCounts:
    """Count next-symbol transitions after every suffix of length 1..max_depth."""
    if max_depth < 1:
        raise ValueError("max_depth must be at least 1")
    x = _encode(sequence, alphabet)
    if len(x) < 2:
        raise ValueError("sequence must have at least two symbols")
    k = alphabet.size
    histories, transitions = [], []
    for j in range(1, max_depth + 1):
        if len(x) <= j:
            histories.append(np.zeros((0, j), dtype=np.int64))
            transitions.append(np.zeros((0, k), dtype=np.int64))
            continue
        t = np.arange(j, len(x))
        code = np.zeros(len(t), dtype=np.int64)
        for lag in range(j, 0, -1):
            code = code * k + x[t - lag]
        combined = code * k + x[t]
        keys, counts = np.unique(combined, return_counts=True)
        codes, nxt = np.divmod(keys, k)
        uniq, inverse = np.unique(codes, return_inverse=True)
        table = np.zeros((len(uniq), k), dtype=np.int64)
        np.add.at(table, (inverse, nxt), counts)
        hist = np.empty((len(uniq), j), dtype=np.int64)
        rem = uniq.copy()
        for col in range(j - 1, -1, -1):
            rem, hist[:, col] = np.divmod(rem, k)
        histories.append(hist)
        transitions.append(table)
    return ContextCounts(alphabet, max_depth, tuple(histories), tuple(transitions))


def _smooth(counts: np.ndarray, pseudocount: float) -> np.ndarray:
    total = counts.sum() + len(counts) * pseudocount
    if total <= 0:
        return np.full(len(counts), 1.0 / len(counts))
    return (counts + pseudocount) / total


def predictive_distribution(
    counts: ContextCounts, w: SparseContext, pseudocount: float = 0.5
) -> np.ndarray:
    """Smoothed next-symbol distribution given that the history falls in ``w``.

    Aggregates counts over every plain history ``u`` of length ``l(w)`` whose
    symbols belong to the corresponding sets of ``w``.  With no compatible
    mass and no pseudocount the uniform distribution is returned and a
    :class:`UniformFallbackWarning` is issued.
    """
    if w.alphabet != counts.alphabet:
        raise ValueError("context and counts use different alphabets")
    j = len(w)
    if j > counts.max_depth:
        raise ValueError(f"context length {j} exceeds counted depth {counts.max_depth}")
    hist = counts.histories[j - 1]
    ok = np.ones(len(hist), dtype=bool)
    for col, m in enumerate(w.masks):
        ok &= ((m >> hist[:, col]) & 1).astype(bool)
    total = counts.transitions[j - 1][ok].sum(axis=0)
    if total.sum() == 0 and pseudocount <= 0:
        warnings.warn(f"no observations for context {w}; using uniform", UniformFallbackWarning)
    return _smooth(total.astype(float), pseudocount)


def _kl_bits(p: np.ndarray, q: np.ndarray) -> float:
    nz = p > 0
    with np.errstate(divide="ignore"):
        return float(np.sum(p[nz] * np.log2(p[nz] / q[nz])))


def _symmetric_kl(p: np.ndarray, q: np.ndarray) -> float:
    return _kl_bits(p, q) + _kl_bits(q, p)


@dataclass
class _Group:
    mask: int
    counts: np.ndarray
    positions: np.ndarray
    children: list = field(default_factory=list)
    kept: bool = False


class _Grower:
    def __init__(self, x: np.ndarray, k: int, config: EstimatorConfig):
        self.x = x
        self.k = k
        self.config = config

    def dist(self, counts):
        return _smooth(counts.astype(float), self.config.pseudocount)

    def split(self, positions: np.ndarray, depth: int) -> list:
        """Candidate groups one position deeper than a node at ``depth``."""
        cfg, x, k = self.config, self.x, self.k
        pos = positions[positions >= depth + 1]
        if len(pos) == 0:
            return []
        older = x[pos - (depth + 1)]
        table = np.bincount(older * k + x[pos], minlength=k * k).reshape(k, k)
        groups = []
        for a in range(k):
            if table[a].sum() >= cfg.min_count:
                groups.append(_Group(1 << a, table[a].copy(), pos[older == a]))
        self._merge(groups)
        return groups

    def _merge(self, groups: list):
        threshold = self.config.merge_threshold
        while len(groups) > 1:
            dists = [self.dist(g.counts) for g in groups]
            best = None
            for i in range(len(groups)):
                for j in range(i + 1, len(groups)):
                    d = _symmetric_kl(dists[i], dists[j])
                    # strict '<' keeps the first pair in alphabet order on ties
                    if best is None or d < best[0]:
                        best = (d, i, j)
            d, i, j = best
            if d > threshold:
                break
            gi, gj = groups[i], groups[j]
            groups[i] = _Group(
                gi.mask | gj.mask, gi.counts + gj.counts, np.sort(np.concatenate([gi.positions, gj.positions]))
            )
            del groups[j]
            groups.sort(key=lambda g: _lowest_bit(g.mask))

    def grow(self, group: _Group, depth: int):
        if depth < self.config.max_depth:
            group.children = self.split(group.positions, depth)
            for child in group.children:
                self.grow(child, depth + 1)

    def prune(self, group: _Group):
        """Mark kept descendants of ``group``; return whether any child is kept."""
        parent = self.dist(group.counts)
        any_kept = False
        for child in group.children:
            below = self.prune(child)
            n = child.counts.sum()
            gain = n * _kl_bits(self.dist(child.counts), parent)
            child.kept = below or gain >= self.config.keep_threshold
            any_kept |= child.kept
        return any_kept


def _lowest_bit(mask: int) -> int:
    return (mask & -mask).bit_length()


def _emit(group: _Group, suffix: tuple, full: int, out: list):
    kept = [c for c in group.children if c.kept]
    if not kept:
        out.append(suffix if suffix else (full,))
        return
    covered = 0
    for child in kept:
        covered |= child.mask
        _emit(child, (child.mask,) + suffix, full, out)
    rest = full & ~covered
    if rest:
        out.append((rest,) + suffix)


@dataclass(frozen=True)
class EstimatedModel:
    """A complete sparse context tree with a next-symbol distribution per context."""

    tree: SparseContextTree
    probabilities: dict
    config: Optional[EstimatorConfig] = None

    def __post_init__(self):
        k = self.tree.alphabet.size
        probs = {}
        for w in self.tree.contexts:
            if w not in self.probabilities:
                raise ValueError(f"no distribution for context {w}")
            p = np.asarray(self.probabilities[w], dtype=float)
            if p.shape != (k,) or (p < 0).any() or abs(p.sum() - 1.0) > 1e-12:
                raise ValueError(f"invalid distribution for context {w}")
            probs[w] = p
        object.__setattr__(self, "probabilities", probs)

    @property
    def alphabet(self) -> Alphabet:
        return self.tree.alphabet

    @property
    def memory(self) -> int:
        """Deepest lag at which some context is not the full set."""
        full = self.alphabet.full_mask
        return max(
            (lag for w in self.tree.contexts for lag in range(1, len(w) + 1) if w.at(lag) != full),
            default=0,
        )

    def distribution(self, context) -> np.ndarray:
        if isinstance(context, str):
            context = SparseContext.parse(self.alphabet, context)
        return self.probabilities[context.trimmed()]

    @classmethod
    def from_spec(cls, alphabet, spec: dict) -> "EstimatedModel":
        """Build a model from ``{"ab": [p_a, p_b, ...], ...}`` context strings."""
        if not isinstance(alphabet, Alphabet):
            alphabet = Alphabet(alphabet)
        contexts = {SparseContext.parse(alphabet, c).trimmed(): p for c, p in spec.items()}
        return cls(SparseContextTree(alphabet, tuple(contexts)), contexts)

    def to_text(self) -> str:
        """Canonical tree text followed by one ``context -> p(a)=...`` line per context."""
        lines = []
        if self.config is not None:
            lines.append(f"# estimator {self.config.describe()}")
        lines.append(self.tree.to_text().rstrip("\n"))
        for w in self.tree.contexts:
            p = self.probabilities[w]
            terms = " ".join(f"p({s})={v:.6f}" for s, v in zip(self.alphabet.symbols, p))
            lines.append(f"{w} -> {terms}")
        return "\n".join(lines) + "\n"

    @classmethod
    def from_text(cls, text: str) -> "EstimatedModel":
        tree = SparseContextTree.from_text(text)
        probs = {}
        for line in text.splitlines():
            if "->" not in line or line.lstrip().startswith("#"):
                continue
            left, right = line.split("->", 1)
            w = SparseContext.parse(tree.alphabet, left).trimmed()
            values = {}
            for term in right.split():
                sym, val = term[2:].split(")=")
                values[sym] = float(val)
            p = np.array([values.get(s, 0.0) for s in tree.alphabet.symbols])
            probs[w] = p / p.sum()
        return cls(tree, probs)


def estimate_tree(
    sequence: str, alphabet: Alphabet, config: Optional[EstimatorConfig] = None
) -> EstimatedModel:
    """Estimate a complete sparse context tree and its transition probabilities."""
    config = config or EstimatorConfig()
    if len(sequence) < max(2, config.min_count):
        raise ValueError(f"sequence too short ({len(sequence)} symbols)")
    x = _encode(sequence, alphabet)
    grower = _Grower(x, alphabet.size, config)
    root = _Group(alphabet.full_mask, np.bincount(x, minlength=alphabet.size), np.arange(len(x)))
    grower.grow(root, 0)
    grower.prune(root)
    masks = []
    _emit(root, (), alphabet.full_mask, masks)
    tree = SparseContextTree(alphabet, tuple(SparseContext(alphabet, m) for m in masks))
    tree = complete_tree(tree)
    assert validate_tree(tree).is_complete
    counts = scan_counts(sequence, alphabet, max(tree.max_depth, 1))
    probs = {w: predictive_distribution(counts, w, config.pseudocount) for w in tree.contexts}
    return EstimatedModel(tree, probs, config)


def _matching(model: EstimatedModel, history: Sequence[int]) -> SparseContext:
    hits = model.tree.find(history)
    if len(hits) != 1:
        raise RuntimeError(f"{len(hits)} contexts match history {list(history)}")
    return hits[0]


def generate_sequence(
    model: EstimatedModel, length: int, seed: int, warmup: Optional[str] = None
) -> str:
    """Sample a sequence from a sparse context model.

    The first ``model.memory`` symbols are drawn uniformly (or taken from
    ``warmup``); every later symbol is drawn from the distribution of the
    unique context matching the preceding history.
    """
    alphabet = model.alphabet
    memory = model.memory
    if length < memory:
        raise ValueError(f"length must be at least the model memory {memory}")
    rng = np.random.default_rng(seed)
    if warmup is None:
        out = list(rng.integers(alphabet.size, size=memory))
    else:
        if len(warmup) != memory:
            raise ValueError(f"warm-up must have exactly {memory} symbols")
        out = [alphabet.index(s) for s in warmup]
    cdfs = {w: np.cumsum(p) for w, p in model.probabilities.items()}
    cache = {}
    draws = rng.random(length - memory)
    for u in draws:
        key = tuple(out[-memory:]) if memory else ()
        w = cache.get(key)
        if w is None:
            w = cache[key] = _matching(model, key)
        cdf = cdfs[w]
        out.append(min(int(np.searchsorted(cdf, u, side="right")), alphabet.size - 1))
    return "".join(alphabet.symbols[i] for i in out)
