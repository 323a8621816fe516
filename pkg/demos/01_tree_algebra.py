"""
Sparse context trees as partitions
==================================

A sparse context such as ``abc|ac`` says: "the last symbol was a or c, and the
one before it was a, b or c".  A set of non-overlapping contexts whose weights
sum to one splits every possible history into blocks.  This script builds a
small tree, checks it, refines it against a second tree and measures both with
the beta-entropy.
"""

from phylospst import (
    Alphabet,
    SparseContextTree,
    beta_distance,
    beta_entropy,
    complete_tree,
    tree_join,
    validate_tree,
)

abcd = Alphabet("abcd")

# Contexts are written oldest position first, members in alphabet order.
tau = SparseContextTree.from_strings(abcd, ["abc|ac", "d|ac", "bd"])
print(tau.to_text())

# Each context covers s(w) / |A|^l(w) of all histories; here 6/16 + 2/16 + 8/16.
report = validate_tree(tau)
print("consistent:", report.is_consistent, " coverage:", report.coverage)
for w in tau:
    print(f"  {str(w):8s} weight {w.weight}")

# A second tree splitting only on the last symbol: {a,b} versus {c,d}.
# The leading full set in "abcd|cd" constrains nothing and is trimmed away.
sigma = SparseContextTree.from_strings(abcd, ["ab", "abcd|cd"])
print("sigma:", [str(w) for w in sigma])

# The join keeps every nonempty pairwise intersection.
joined = tree_join(tau, sigma)
print("join:", [str(w) for w in joined])

# Entropies and the induced distance for a few beta values.  beta = 1 is the
# Shannon entropy in bits.
for beta in (0.5, 1.0, 2.0):
    print(
        f"beta={beta}: H(tau)={beta_entropy(tau, beta):.6f} "
        f"H(join)={beta_entropy(joined, beta):.6f} d={beta_distance(tau, sigma, beta):.6f}"
    )

# Incomplete trees are filled in with the shallowest contexts that cover the
# remaining histories.
partial = SparseContextTree.from_strings(abcd, ["a|b", "c"])
print("completed:", [str(w) for w in complete_tree(partial)])
