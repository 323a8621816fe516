"""Neighbor-Joining reconstruction, rooting and Newick output."""

from __future__ import annotations

import re
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .entropy import DistanceMatrix

__all__ = [
    "PhyloTree",
    "clades",
    "edge_list",
    "midpoint_root",
    "neighbor_join",
    "newick_emit",
    "root_at_outgroup",
    "unroot",
]


@dataclass
class PhyloTree:
    """Tree as an adjacency map ``node -> {neighbour: branch length}``.

    Leaves carry labels.  ``root`` is ``None`` for an unrooted tree; a rooted
    tree has a degree-2 root node.
    """

    adjacency: dict = field(default_factory=dict)
    labels: dict = field(default_factory=dict)
    root: Optional[int] = None

    def add_node(self, label: Optional[str] = None) -> int:
        node = len(self.adjacency)
        while node in self.adjacency:
            node += 1
        self.adjacency[node] = {}
        if label is not None:
            self.labels[node] = label
        return node

    def connect(self, a: int, b: int, length: float):
        self.adjacency[a][b] = float(length)
        self.adjacency[b][a] = float(length)

    def disconnect(self, a: int, b: int) -> float:
        length = self.adjacency[a].pop(b)
        del self.adjacency[b][a]
        return length

    @property
    def leaves(self) -> list:
        return sorted(self.labels.values())

    def leaf(self, label: str) -> int:
        for node, name in self.labels.items():
            if name == label:
                return node
        raise KeyError(f"unknown taxon {label!r}")

    def edges(self):
        for a, nbrs in self.adjacency.items():
            for b, length in nbrs.items():
                if a < b:
                    yield a, b, length

    def copy(self) -> "PhyloTree":
        return PhyloTree(
            {n: dict(nb) for n, nb in self.adjacency.items()}, dict(self.labels), self.root
        )

    def path_lengths(self) -> dict:
        """Leaf-to-leaf path lengths keyed by label pairs."""
        out = {}
        for src, name in self.labels.items():
            dist = {src: 0.0}
            stack = [src]
            while stack:
                u = stack.pop()
                for v, length in self.adjacency[u].items():
                    if v not in dist:
                        dist[v] = dist[u] + length
                        stack.append(v)
            for node, other in self.labels.items():
                out[name, other] = dist[node]
        return out

    def splits(self) -> dict:
        """Nontrivial and pendant bipartitions with their branch lengths.

        Each edge is keyed by the frozenset of leaf labels on the side not
        containing the smallest label, so the key ignores rooting.
        """
        t = unroot(self) if self.root is not None else self
        all_leaves = frozenset(t.labels.values())
        anchor = min(all_leaves)
        out = {}
        for a, b, length in t.edges():
            side = frozenset(_leaves_beyond(t, b, a))
            if anchor in side:
                side = all_leaves - side
            out[side] = out.get(side, 0.0) + length
        return out


def _leaves_beyond(tree: PhyloTree, node: int, came_from: int) -> list:
    out = []
    stack = [(node, came_from)]
    while stack:
        u, prev = stack.pop()
        if u in tree.labels:
            out.append(tree.labels[u])
        for v in tree.adjacency[u]:
            if v != prev:
                stack.append((v, u))
    return out


def neighbor_join(matrix: DistanceMatrix) -> PhyloTree:
    """Saitou-Nei Neighbor-Joining.

    The pair minimizing ``(n - 2) d_ij - r_i - r_j`` is joined at each step,
    ties going to the smallest ``(i, j)``.  A negative branch length is set to
    zero and its sister branch set to ``d_ij``.
    """
    d = np.array(matrix.values, dtype=float)
    n = len(matrix)
    if n < 2:
        raise ValueError("neighbor joining needs at least two taxa")
    if np.abs(d - d.T).max() > 1e-9 or d.min() < -1e-9:
        raise ValueError("distance matrix must be symmetric and nonnegative")
    d = (d + d.T) / 2.0
    np.fill_diagonal(d, 0.0)
    tree = PhyloTree()
    active = [tree.add_node(label) for label in matrix.labels]
    while len(active) > 2:
        m = len(active)
        r = d.sum(axis=1)
        q = (m - 2) * d - r[:, None] - r[None, :]
        iu = np.triu_indices(m, 1)
        # argmin returns the first minimum in row-major order
        k = int(np.argmin(q[iu]))
        i, j = int(iu[0][k]), int(iu[1][k])
        li = 0.5 * d[i, j] + (r[i] - r[j]) / (2.0 * (m - 2))
        lj = d[i, j] - li
        if li < 0:
            li, lj = 0.0, d[i, j]
        elif lj < 0:
            li, lj = d[i, j], 0.0
        u = tree.add_node()
        tree.connect(u, active[i], li)
        tree.connect(u, active[j], lj)
        new = 0.5 * (d[i] + d[j] - d[i, j])
        d[i, :] = new
        d[:, i] = new
        d[i, i] = 0.0
        d = np.delete(np.delete(d, j, axis=0), j, axis=1)
        active[i] = u
        del active[j]
    tree.connect(active[0], active[1], max(d[0, 1], 0.0))
    return _suppress_degree_two(tree)


def _suppress_degree_two(tree: PhyloTree) -> PhyloTree:
    """Remove unlabeled pass-through nodes other than the root."""
    for node in list(tree.adjacency):
        if node in tree.labels or node == tree.root:
            continue
        nbrs = tree.adjacency[node]
        if len(nbrs) == 2:
            (a, la), (b, lb) = nbrs.items()
            tree.disconnect(node, a)
            tree.disconnect(node, b)
            del tree.adjacency[node]
            tree.connect(a, b, la + lb)
    return tree


def unroot(tree: PhyloTree) -> PhyloTree:
    """Drop the root node, fusing its two edges."""
    t = tree.copy()
    if t.root is None:
        return t
    root, t.root = t.root, None
    return _suppress_degree_two(t) if root not in t.labels else t


def root_at_outgroup(tree: PhyloTree, taxon: str) -> PhyloTree:
    """Root on the midpoint of the edge leading to ``taxon``."""
    t = unroot(tree)
    leaf = t.leaf(taxon)
    (other, length), = t.adjacency[leaf].items()
    return _root_on_edge(t, leaf, other, length / 2.0)


def _root_on_edge(tree: PhyloTree, a: int, b: int, from_a: float) -> PhyloTree:
    length = tree.disconnect(a, b)
    root = tree.add_node()
    tree.connect(root, a, from_a)
    tree.connect(root, b, length - from_a)
    tree.root = root
    return tree


def midpoint_root(tree: PhyloTree) -> PhyloTree:
    """Root at the midpoint of the longest leaf-to-leaf path.

    Among equally long paths the lexicographically smallest label pair wins.
    """
    t = unroot(tree)
    paths = t.path_lengths()
    best = max(paths.values())
    tol = 1e-12 * max(1.0, best)
    a, b = min(pair for pair, v in paths.items() if v >= best - tol and pair[0] < pair[1])
    # walk from a towards b until passing the half-way point
    start, goal = t.leaf(a), t.leaf(b)
    parent = {start: None}
    stack = [start]
    while stack:
        u = stack.pop()
        for v in t.adjacency[u]:
            if v not in parent:
                parent[v] = u
                stack.append(v)
    route = [goal]
    while route[-1] != start:
        route.append(parent[route[-1]])
    route.reverse()
    half = best / 2.0
    walked = 0.0
    for u, v in zip(route, route[1:]):
        length = t.adjacency[u][v]
        if walked + length >= half:
            return _root_on_edge(t, u, v, half - walked)
        walked += length
    raise AssertionError("midpoint not found")


def clades(tree: PhyloTree) -> list:
    """Leaf sets below every non-root node of a rooted tree."""
    if tree.root is None:
        raise ValueError("tree is unrooted")
    out = []

    def visit(u, prev):
        leaves = [tree.labels[u]] if u in tree.labels else []
        for v in sorted(tree.adjacency[u]):
            if v != prev:
                leaves.extend(visit(v, u))
        if u != tree.root:
            out.append(frozenset(leaves))
        return leaves

    visit(tree.root, None)
    return out


_PLAIN = re.compile(r"^[^\s()\[\]':;,]+$")


def _quote(label: str) -> str:
    if _PLAIN.match(label):
        return label
    return "'" + label.replace("'", "''") + "'"


def newick_emit(tree: PhyloTree) -> str:
    """Newick text with 6-decimal branch lengths and canonical child order.

    Children are ordered by the smallest leaf label below them.  Unrooted
    trees are written from the internal node next to the smallest leaf label;
    an unrooted two-leaf tree is written rooted at the midpoint of its edge.
    """
    if not tree.labels:
        raise ValueError("empty tree")
    if tree.root is not None:
        start = tree.root
    else:
        first = tree.leaf(min(tree.labels.values()))
        nbrs = list(tree.adjacency[first])
        if not nbrs:
            return _quote(tree.labels[first]) + ";"
        if nbrs[0] in tree.labels:
            return newick_emit(midpoint_root(tree))
        start = nbrs[0]

    def smallest(u, prev):
        return min(_leaves_beyond(tree, u, prev))

    def render(u, prev):
        kids = [v for v in tree.adjacency[u] if v != prev]
        label = _quote(tree.labels[u]) if u in tree.labels else ""
        if not kids:
            return label
        kids.sort(key=lambda v: smallest(v, u))
        parts = [f"{render(v, u)}:{tree.adjacency[u][v]:.6f}" for v in kids]
        return "(" + ",".join(parts) + ")" + label

    return render(start, None) + ";"


def edge_list(tree: PhyloTree) -> str:
    """Tab-separated ``parent child length`` lines, parents oriented from the Newick start node."""
    t = tree
    if t.root is None:
        first = t.leaf(min(t.labels.values()))
        nbrs = list(t.adjacency[first])
        start = nbrs[0] if nbrs and nbrs[0] not in t.labels else first
    else:
        start = t.root

    def name(u):
        return t.labels.get(u, f"node{u}")

    lines = []
    stack = [(start, None)]
    while stack:
        u, prev = stack.pop()
        for v in sorted(t.adjacency[u], reverse=True):
            if v != prev:
                lines.append(f"{name(u)}\t{name(v)}\t{t.adjacency[u][v]:.6f}")
                stack.append((v, u))
    return "\n".join(lines) + "\n"
