"""
From sequences to a phylogeny
=============================

Two families of sequences are drawn from two different sparse models.  Their
estimated trees give a distance matrix, Neighbor-Joining turns that into a
tree, and midpoint rooting shows whether the families come out as clades.
The same steps are available on the command line as ``phylospst pipeline``.
"""

import tempfile
from pathlib import Path

from phylospst import (
    Alphabet,
    EstimatedModel,
    distance_matrix,
    estimate_tree,
    generate_sequence,
    neighbor_join,
    newick_emit,
)
from phylospst.cli import main
from phylospst.io import compare_matrices, format_phylip
from phylospst.phylo import clades, midpoint_root

abcd = Alphabet("abcd")
families = {
    "x": EstimatedModel.from_spec(abcd, {"ab": [0.7, 0.1, 0.1, 0.1], "cd": [0.1, 0.1, 0.1, 0.7]}),
    "y": EstimatedModel.from_spec(abcd, {"ac": [0.1, 0.7, 0.1, 0.1], "bd": [0.1, 0.1, 0.7, 0.1]}),
}

sequences = {}
for name, model in families.items():
    for i in range(4):
        sequences[f"{name}{i}"] = generate_sequence(model, 20_000, seed=10 * i + len(name))

trees = [(label, estimate_tree(seq, abcd).tree) for label, seq in sequences.items()]
matrix = distance_matrix(trees, beta=1.0)
print(format_phylip(matrix))

tree = midpoint_root(neighbor_join(matrix))
print(newick_emit(tree))
for family in families:
    members = frozenset(label for label in sequences if label.startswith(family))
    print(f"family {family} is a clade:", members in set(clades(tree)))

# The beta-distance is not the only yardstick: here it is paired against a
# second matrix (the beta=2 distances) the way one would pair it with an
# externally computed alignment distance.
other = distance_matrix(trees, beta=2.0)
print(compare_matrices(matrix, other).to_csv()[:200], "...")

# Command-line equivalent, run in a scratch directory.
with tempfile.TemporaryDirectory() as tmp:
    fasta = Path(tmp) / "families.fa"
    fasta.write_text("".join(f">{k}\n{v.upper()}\n" for k, v in sequences.items()))
    status = main(["pipeline", str(fasta), "--alphabet", "ABCD", "--outgroup", "x0", "-o", f"{tmp}/run"])
    print("pipeline exit status:", status)
    print((Path(tmp) / "run" / "tree.nwk").read_text())
