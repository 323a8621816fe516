"""Exit criteria.  Each test records one line for the acceptance summary."""

import time
from fractions import Fraction
from itertools import combinations

import numpy as np
import pytest

from oracles import (
    brute_entropy,
    common_refinement,
    partition_of,
    phylogeny_distances,
    phylogeny_splits,
    random_phylogeny,
    random_tree,
)
from phylospst import (
    Alphabet,
    DistanceMatrix,
    EstimatedModel,
    SparseContextTree,
    beta_distance,
    beta_entropy,
    distance_matrix,
    estimate_tree,
    generate_sequence,
    neighbor_join,
    newick_emit,
    root_tree,
    tree_join,
    validate_tree,
)
from phylospst.cli import main
from phylospst.io import format_phylip, parse_phylip
from phylospst.phylo import clades, midpoint_root

ABCD = Alphabet("abcd")


def random_triples(seed, count):
    rng = np.random.default_rng(seed)
    out = []
    for _ in range(count):
        k = int(rng.integers(2, 6))
        depth = int(rng.integers(1, 4))
        out.append(tuple(random_tree(rng, k, depth) for _ in range(3)))
    return out


def tv(p, q):
    return 0.5 * float(np.abs(np.asarray(p) - np.asarray(q)).sum())


def test_ac1_worked_example(record_property, three_leaf):
    record_property("acceptance", "AC1 worked example: coverage and entropies")
    start = time.perf_counter()
    report = validate_tree(three_leaf)
    assert report.is_consistent
    assert report.coverage == Fraction(1)
    part = partition_of(three_leaf, 2)
    h1, h2 = beta_entropy(three_leaf, 1), beta_entropy(three_leaf, 2)
    assert abs(h1 - 1.405639) <= 1e-6
    assert abs(h2 - 1.1875) <= 1e-12
    assert abs(h1 - brute_entropy(part, 1)) <= 1e-6
    assert abs(h2 - brute_entropy(part, 2)) <= 1e-12
    assert time.perf_counter() - start < 1.0


def test_ac2_join_oracle(record_property):
    record_property("acceptance", "AC2 join equals brute-force common refinement (100 pairs)")
    start = time.perf_counter()
    for t, s, _ in random_triples(2, 100):
        depth = max(t.max_depth, s.max_depth)
        joined = tree_join(t, s)
        assert partition_of(joined, depth) == common_refinement(partition_of(t, depth), partition_of(s, depth))
    assert time.perf_counter() - start < 30.0


@pytest.mark.parametrize("beta", [0.5, 1.0, 2.0])
def test_ac3_metric_axioms(record_property, beta):
    record_property("acceptance", f"AC3 metric axioms over 200 triples, beta={beta}")
    start = time.perf_counter()
    failures = []
    for i, (t, s, r) in enumerate(random_triples(3, 200)):
        d_ts, d_st = beta_distance(t, s, beta), beta_distance(s, t, beta)
        d_sr, d_tr = beta_distance(s, r, beta), beta_distance(t, r, beta)
        if min(d_ts, d_sr, d_tr) < 0:
            failures.append((i, "negative"))
        if d_ts != d_st:
            failures.append((i, "asymmetric"))
        if (d_ts == 0) != (t == s):
            failures.append((i, "indiscernibles"))
        if d_tr > d_ts + d_sr + 1e-9:
            failures.append((i, "triangle", d_tr - d_ts - d_sr))
    assert time.perf_counter() - start < 60.0
    assert not failures, f"{len(failures)} violations, first: {failures[:3]}"


def test_ac4_entropy_limits(record_property):
    record_property("acceptance", "AC4 beta-continuity, root entropy, refinement monotonicity")
    triples = random_triples(4, 200)
    for beta in (0.1, 0.5, 0.999999, 1.0, 1.000001, 2.0, 5.0):
        assert beta_entropy(root_tree(ABCD), beta) == 0.0
    for t, s, _ in triples:
        for eps in (1e-6, -1e-6):
            assert abs(beta_entropy(t, 1 + eps) - beta_entropy(t, 1)) <= 1e-4
        joined = tree_join(t, s)
        for beta in (0.5, 1.0, 2.0):
            assert beta_entropy(joined, beta) >= max(beta_entropy(t, beta), beta_entropy(s, beta)) - 1e-12


def test_ac5_estimator_recovery(record_property):
    record_property("acceptance", "AC5 estimator recovers 2-context source; iid control is root-only")
    source = EstimatedModel.from_spec(ABCD, {"ab": [0.7, 0.1, 0.1, 0.1], "cd": [0.1, 0.1, 0.1, 0.7]})
    dists = list(source.probabilities.values())
    assert tv(*dists) >= 0.5
    seq = generate_sequence(source, 100_000, seed=2024)
    control = "".join(np.random.default_rng(2024).choice(list("abcd"), 100_000))
    start = time.perf_counter()
    est = estimate_tree(seq, ABCD)
    iid = estimate_tree(control, ABCD)
    elapsed = time.perf_counter() - start
    depth = max(est.tree.max_depth, source.tree.max_depth)
    assert partition_of(est.tree, depth) == partition_of(source.tree, depth)
    assert iid.tree == root_tree(ABCD)
    assert elapsed < 10.0


def test_ac6_nj_correctness(record_property):
    record_property("acceptance", "AC6 NJ recovers 50 additive trees; three-point example")
    rng = np.random.default_rng(6)
    for _ in range(50):
        n = int(rng.integers(2, 9))
        edges, labels = random_phylogeny(rng, n, 0.1, 2.0)
        names, d = phylogeny_distances(edges, labels)
        got = neighbor_join(DistanceMatrix(tuple(names), d)).splits()
        expected = phylogeny_splits(edges, labels)
        assert set(got) == set(expected)
        assert max(abs(got[k] - v) for k, v in expected.items()) <= 1e-9
    star = neighbor_join(DistanceMatrix(("A", "B", "C"), [[0, 2, 4], [2, 0, 4], [4, 4, 0]]))
    assert newick_emit(star) == "(A:1.000000,B:1.000000,C:3.000000);"
    # pendant edges keyed by the side without A: {B}, {C} and {B, C} for A itself
    assert star.splits() == {frozenset("B"): 1.0, frozenset("C"): 3.0, frozenset("BC"): 1.0}


def test_ac7_end_to_end_clustering(record_property):
    record_property("acceptance", "AC7 two synthetic families form two clades")
    family_a = EstimatedModel.from_spec(ABCD, {"ab": [0.7, 0.1, 0.1, 0.1], "cd": [0.1, 0.1, 0.1, 0.7]})
    family_b = EstimatedModel.from_spec(ABCD, {"ac": [0.1, 0.7, 0.1, 0.1], "bd": [0.1, 0.1, 0.7, 0.1]})
    for model in (family_a, family_b):
        assert all(tv(p, q) >= 0.5 for p, q in combinations(model.probabilities.values(), 2))
    assert all(
        tv(p, q) >= 0.5 for p in family_a.probabilities.values() for q in family_b.probabilities.values()
    )
    start = time.perf_counter()
    trees = []
    for name, model, base in (("A", family_a, 100), ("B", family_b, 200)):
        for i in range(5):
            seq = generate_sequence(model, 20_000, seed=base + i)
            trees.append((f"{name}{i}", estimate_tree(seq, ABCD).tree))
    matrix = distance_matrix(trees, beta=1.0)
    rooted = midpoint_root(neighbor_join(matrix))
    found = set(clades(rooted))
    assert frozenset(f"A{i}" for i in range(5)) in found
    assert frozenset(f"B{i}" for i in range(5)) in found
    assert time.perf_counter() - start < 60.0


def test_ac8_determinism_and_round_trips(record_property, tmp_path):
    record_property("acceptance", "AC8 byte-identical pipeline re-runs; PHYLIP and tree round-trips")
    model = EstimatedModel.from_spec(ABCD, {"ab": [0.7, 0.1, 0.1, 0.1], "cd": [0.1, 0.1, 0.1, 0.7]})
    fasta = tmp_path / "in.fa"
    fasta.write_text("".join(f">s{i}\n{generate_sequence(model, 4000, seed=i).upper()}\n" for i in range(4)))
    outputs = []
    for run in ("one", "two"):
        out = tmp_path / run
        assert main(["pipeline", str(fasta), "--alphabet", "ABCD", "--outgroup", "s0", "-o", str(out)]) == 0
        outputs.append({str(p.relative_to(out)): p.read_bytes() for p in sorted(out.rglob("*")) if p.is_file()})
    assert outputs[0] == outputs[1]
    assert "distances.phy" in outputs[0] and "tree.nwk" in outputs[0]

    rng = np.random.default_rng(8)
    x = rng.uniform(0, 5, (7, 7))
    x = x + x.T
    np.fill_diagonal(x, 0)
    m = DistanceMatrix(tuple(f"taxon_{i}" for i in range(7)), x)
    back = parse_phylip(format_phylip(m))
    assert back.labels == m.labels and np.abs(back.values - m.values).max() <= 1e-6

    for t, s, r in random_triples(8, 50):
        for tree in (t, s, r):
            text = tree.to_text()
            again = SparseContextTree.from_text(text)
            assert again == tree and again.to_text() == text
