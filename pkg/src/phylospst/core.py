"""Sparse contexts and sparse context trees.

A sparse context is a short sequence of symbol subsets ``(w_-k, ..., w_-1)``
read from the past towards the present.  A sparse context tree is a set of
such contexts that do not overlap; when the context weights sum to one the
contexts partition every possible history.

Symbol subsets are stored as integer bitmasks over the alphabet, so set
intersection is ``&`` and canonical member order comes for free.  All weights
are exact :class:`fractions.Fraction` values.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from typing import Iterable, Optional, Sequence, Union

import numpy as np

__all__ = [
    "Alphabet",
    "AlphabetMismatchError",
    "SparseContext",
    "SparseContextTree",
    "ValidationReport",
    "canonicalize",
    "complete_tree",
    "context_intersect",
    "context_weight",
    "root_tree",
    "tree_join",
    "validate_tree",
]

_RESERVED = set("|#=\n\r\t ")


class AlphabetMismatchError(ValueError):
    """Raised when two objects built over different alphabets are combined."""


@dataclass(frozen=True)
class Alphabet:
    """Ordered set of distinct single-character symbols.

    The order fixes the canonical ordering of symbol sets and is part of the
    alphabet's identity.
    """

    symbols: tuple
    _index: dict = field(init=False, repr=False, compare=False, hash=False)

    def __post_init__(self):
        symbols = tuple(self.symbols)
        if len(symbols) < 2:
            raise ValueError("an alphabet needs at least two symbols")
        if len(symbols) > 62:
            raise ValueError("alphabets larger than 62 symbols are not supported")
        for s in symbols:
            if not isinstance(s, str) or len(s) != 1 or s in _RESERVED:
                raise ValueError(f"invalid alphabet symbol {s!r}")
        if len(set(symbols)) != len(symbols):
            raise ValueError("alphabet symbols must be distinct")
        object.__setattr__(self, "symbols", symbols)
        object.__setattr__(self, "_index", {s: i for i, s in enumerate(symbols)})

    def __len__(self):
        return len(self.symbols)

    def __str__(self):
        return "".join(self.symbols)

    @property
    def size(self) -> int:
        return len(self.symbols)

    @property
    def full_mask(self) -> int:
        return (1 << len(self.symbols)) - 1

    def index(self, symbol: str) -> int:
        try:
            return self._index[symbol]
        except KeyError:
            raise ValueError(f"symbol {symbol!r} is not in alphabet {str(self)!r}") from None

    def mask(self, members: Iterable[str]) -> int:
        """Bitmask of a collection of symbols."""
        m = 0
        for s in members:
            m |= 1 << self.index(s)
        if m == 0:
            raise ValueError("symbol sets must be nonempty")
        return m

    def members(self, mask: int) -> str:
        """Symbols of ``mask`` in alphabet order."""
        return "".join(s for i, s in enumerate(self.symbols) if mask >> i & 1)

    def encode(self, sequence: str) -> np.ndarray:
        """Map a symbol string to an integer array, naming the first bad symbol."""
        out = np.empty(len(sequence), dtype=np.int64)
        index = self._index
        for pos, s in enumerate(sequence):
            try:
                out[pos] = index[s]
            except KeyError:
                raise ValueError(
                    f"symbol {s!r} at position {pos} is not in alphabet {str(self)!r}"
                ) from None
        return out


def _popcount(mask: int) -> int:
    return bin(mask).count("1")


@dataclass(frozen=True)
class SparseContext:
    """A sequence of nonempty symbol sets, oldest position first.

    ``masks[-1]`` is the set constraining the most recent symbol ``w_-1``.
    """

    alphabet: Alphabet
    masks: tuple

    def __post_init__(self):
        masks = tuple(int(m) for m in self.masks)
        if not masks:
            raise ValueError("a sparse context has length at least 1")
        full = self.alphabet.full_mask
        for m in masks:
            if m <= 0 or m & ~full:
                raise ValueError(f"invalid symbol-set mask {m} for alphabet {self.alphabet}")
        object.__setattr__(self, "masks", masks)

    @classmethod
    def from_sets(cls, alphabet: Alphabet, sets: Sequence[Iterable[str]]) -> "SparseContext":
        return cls(alphabet, tuple(alphabet.mask(s) for s in sets))

    @classmethod
    def parse(cls, alphabet: Alphabet, text: str) -> "SparseContext":
        """Parse the ``abc|ac`` notation (oldest position first)."""
        parts = text.strip().split("|")
        if any(not p for p in parts):
            raise ValueError(f"empty symbol set in context {text!r}")
        return cls.from_sets(alphabet, parts)

    def __len__(self):
        return len(self.masks)

    def __str__(self):
        return "|".join(self.alphabet.members(m) for m in self.masks)

    @property
    def length(self) -> int:
        return len(self.masks)

    @property
    def sets(self) -> tuple:
        return tuple(self.alphabet.members(m) for m in self.masks)

    @property
    def size(self) -> int:
        """Product of the set cardinalities."""
        s = 1
        for m in self.masks:
            s *= _popcount(m)
        return s

    @property
    def weight(self) -> Fraction:
        return Fraction(self.size, self.alphabet.size ** self.length)

    def at(self, lag: int) -> int:
        """Mask constraining the symbol ``lag`` steps back (``lag >= 1``)."""
        return self.masks[-lag]

    def trimmed(self) -> "SparseContext":
        """Drop leading full sets, which constrain nothing."""
        full = self.alphabet.full_mask
        masks = self.masks
        start = 0
        while start < len(masks) - 1 and masks[start] == full:
            start += 1
        return self if start == 0 else SparseContext(self.alphabet, masks[start:])

    def matches(self, history: Sequence[int]) -> bool:
        """Whether a history of symbol indices (oldest first) falls in this context.

        Positions older than the history itself only match full sets.
        """
        full = self.alphabet.full_mask
        n = len(history)
        for lag in range(1, len(self.masks) + 1):
            m = self.masks[-lag]
            if lag > n:
                if m != full:
                    return False
            elif not m >> history[n - lag] & 1:
                return False
        return True

    def padded(self, depth: int) -> list:
        """Masks for lags 1..depth (most recent first), padded with full sets."""
        full = self.alphabet.full_mask
        out = [full] * depth
        for lag in range(1, min(depth, len(self.masks)) + 1):
            out[lag - 1] = self.masks[-lag]
        return out


def _context_from_padded(alphabet: Alphabet, row: Iterable[int]) -> SparseContext:
    return SparseContext(alphabet, tuple(int(m) for m in reversed(list(row)))).trimmed()


def _check_same(a: Alphabet, b: Alphabet):
    if a != b:
        raise AlphabetMismatchError(f"alphabet mismatch: {a} vs {b}")


def context_weight(w: SparseContext, alphabet: Optional[Alphabet] = None) -> Fraction:
    """``s(w) * |A|**-l(w)`` as an exact fraction."""
    if alphabet is not None:
        _check_same(w.alphabet, alphabet)
    return w.weight


def context_intersect(w: SparseContext, v: SparseContext) -> Optional[SparseContext]:
    """Positionwise intersection aligned at the most recent symbol.

    Deeper positions of the longer context are copied.  Returns ``None`` when
    some aligned position has an empty intersection.
    """
    _check_same(w.alphabet, v.alphabet)
    if len(w) < len(v):
        w, v = v, w
    masks = list(w.masks)
    for lag in range(1, len(v) + 1):
        m = masks[-lag] & v.masks[-lag]
        if not m:
            return None
        masks[-lag] = m
    return SparseContext(w.alphabet, tuple(masks))


def _sort_key(w: SparseContext) -> str:
    return str(w)


@dataclass(frozen=True)
class SparseContextTree:
    """A set of sparse contexts over one alphabet, kept in canonical form.

    Construction canonicalizes: leading full sets are trimmed, duplicates are
    dropped and contexts are sorted by their text form.  Two trees are equal
    exactly when they describe the same set of history blocks.
    """

    alphabet: Alphabet
    contexts: tuple

    def __post_init__(self):
        unique = {}
        for w in self.contexts:
            if not isinstance(w, SparseContext):
                w = SparseContext.parse(self.alphabet, w)
            _check_same(w.alphabet, self.alphabet)
            w = w.trimmed()
            unique.setdefault(str(w), w)
        if not unique:
            raise ValueError("a sparse context tree needs at least one context")
        object.__setattr__(self, "contexts", tuple(unique[k] for k in sorted(unique)))

    @classmethod
    def from_strings(cls, alphabet: Union[Alphabet, str], contexts: Iterable[str]):
        if not isinstance(alphabet, Alphabet):
            alphabet = Alphabet(alphabet)
        return cls(alphabet, tuple(SparseContext.parse(alphabet, c) for c in contexts))

    def __len__(self):
        return len(self.contexts)

    def __iter__(self):
        return iter(self.contexts)

    @property
    def max_depth(self) -> int:
        return max(len(w) for w in self.contexts)

    @property
    def coverage(self) -> Fraction:
        return sum((w.weight for w in self.contexts), Fraction(0))

    @property
    def weights(self) -> list:
        return [w.weight for w in self.contexts]

    def padded_masks(self, depth: Optional[int] = None) -> np.ndarray:
        """``(n_contexts, depth)`` array of masks, column 0 is lag 1."""
        depth = self.max_depth if depth is None else depth
        return np.array([w.padded(depth) for w in self.contexts], dtype=np.int64)

    def find(self, history: Sequence[int]) -> list:
        """All contexts matching a history of symbol indices (oldest first)."""
        return [w for w in self.contexts if w.matches(history)]

    def to_text(self) -> str:
        """Canonical serialization: ``alphabet=...`` header, one context per line."""
        lines = [f"alphabet={self.alphabet}"]
        lines.extend(str(w) for w in self.contexts)
        return "\n".join(lines) + "\n"

    @classmethod
    def from_text(cls, text: str) -> "SparseContextTree":
        alphabet = None
        contexts = []
        for lineno, raw in enumerate(text.splitlines(), 1):
            line = raw.strip()
            if not line or line.startswith("#"):
                continue
            if alphabet is None:
                if not line.startswith("alphabet="):
                    raise ValueError(f"line {lineno}: expected 'alphabet=' header")
                alphabet = Alphabet(line[len("alphabet="):])
                continue
            if "->" in line:
                continue
            try:
                contexts.append(SparseContext.parse(alphabet, line))
            except ValueError as exc:
                raise ValueError(f"line {lineno}: {exc}") from None
        if alphabet is None:
            raise ValueError("missing 'alphabet=' header")
        return cls(alphabet, tuple(contexts))


def root_tree(alphabet: Alphabet) -> SparseContextTree:
    """The single-context tree ``{(A)}``."""
    return SparseContextTree(alphabet, (SparseContext(alphabet, (alphabet.full_mask,)),))


def canonicalize(tree, alphabet: Optional[Alphabet] = None) -> SparseContextTree:
    """Canonical form of a tree, or of a bare collection of contexts."""
    if isinstance(tree, SparseContextTree):
        return SparseContextTree(tree.alphabet, tree.contexts)
    if alphabet is None:
        raise ValueError("an alphabet is required to canonicalize bare contexts")
    return SparseContextTree(alphabet, tuple(tree))


@dataclass(frozen=True)
class ValidationReport:
    is_consistent: bool
    coverage: Fraction
    violations: list

    @property
    def is_complete(self) -> bool:
        return self.is_consistent and self.coverage == 1


def _overlapping_pairs(masks: np.ndarray) -> list:
    pairs = []
    for i in range(len(masks) - 1):
        # a pair is separated if some aligned position intersects emptily;
        # padding with full sets keeps positions beyond the shorter context neutral
        separated = ((masks[i] & masks[i + 1:]) == 0).any(axis=1)
        for j in np.flatnonzero(~separated):
            pairs.append((i, i + 1 + int(j)))
    return pairs


def validate_tree(tree: SparseContextTree) -> ValidationReport:
    """Check that no two contexts overlap and compute the exact coverage.

    Minimality of the tree is not checked.
    """
    masks = tree.padded_masks()
    violations = []
    for i, j in _overlapping_pairs(masks):
        violations.append(((tree.contexts[i], tree.contexts[j]), "overlap"))
    coverage = tree.coverage
    if coverage > 1 and not violations:
        violations.append((None, "coverage exceeds 1"))
    return ValidationReport(not violations, coverage, violations)


def _require_consistent(tree: SparseContextTree):
    report = validate_tree(tree)
    if not report.is_consistent:
        first = report.violations[0][0]
        raise ValueError(f"tree is not consistent: overlapping contexts {tuple(map(str, first))}")
    return report


def tree_join(tau: SparseContextTree, sigma: SparseContextTree) -> SparseContextTree:
    """All nonempty pairwise intersections: the common refinement of two trees."""
    _check_same(tau.alphabet, sigma.alphabet)
    depth = max(tau.max_depth, sigma.max_depth)
    a = tau.padded_masks(depth)
    b = sigma.padded_masks(depth)
    both = a[:, None, :] & b[None, :, :]
    rows = both[(both != 0).all(axis=-1)]
    alphabet = tau.alphabet
    return SparseContextTree(alphabet, tuple(_context_from_padded(alphabet, r) for r in rows))


def _subtract(piece: tuple, cut: Sequence[int], full: int) -> list:
    """Disjoint product-set pieces of ``piece`` outside ``cut``."""
    if any(p & c == 0 for p, c in zip(piece, cut)):
        return [piece]
    out = []
    head = list(piece)
    for i, c in enumerate(cut):
        rest = head[i] & ~c & full
        if rest:
            out.append(tuple(head[:i]) + (rest,) + tuple(head[i + 1:]))
        head[i] &= c
    return out


def _merge_pieces(pieces: list) -> list:
    """Fuse pieces that differ in exactly one position, until none do."""
    pieces = sorted(set(pieces))
    changed = True
    while changed:
        changed = False
        for i in range(len(pieces)):
            for j in range(i + 1, len(pieces)):
                p, q = pieces[i], pieces[j]
                diff = [k for k in range(len(p)) if p[k] != q[k]]
                if len(diff) == 1:
                    k = diff[0]
                    merged = p[:k] + (p[k] | q[k],) + p[k + 1:]
                    pieces = sorted(set(pieces[:i] + pieces[i + 1:j] + pieces[j + 1:] + [merged]))
                    changed = True
                    break
            if changed:
                break
    return pieces


def complete_tree(tree: SparseContextTree) -> SparseContextTree:
    """Add contexts covering every history the tree leaves uncovered.

    The uncovered region is split from the most recent position outwards and
    adjacent pieces are re-merged, so the added contexts are as shallow as the
    existing ones allow.  Complete trees are returned unchanged.
    """
    report = _require_consistent(tree)
    if report.coverage == 1:
        return tree
    alphabet = tree.alphabet
    full = alphabet.full_mask
    depth = tree.max_depth
    pieces = [tuple([full] * depth)]
    for row in tree.padded_masks(depth):
        cut = [int(m) for m in row]
        pieces = [q for p in pieces for q in _subtract(p, cut, full)]
    added = tuple(_context_from_padded(alphabet, p) for p in _merge_pieces(pieces))
    return SparseContextTree(alphabet, tree.contexts + added)
