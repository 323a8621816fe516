"""
Estimating a context tree from a sequence
=========================================

We sample from a known sparse model, estimate a tree back from the sample and
compare the two.  An i.i.d. sequence serves as a control: nothing beyond the
root should survive pruning.
"""

import numpy as np

from phylospst import (
    Alphabet,
    EstimatedModel,
    EstimatorConfig,
    beta_distance,
    estimate_tree,
    generate_sequence,
)

abcd = Alphabet("abcd")

# After a or b the next symbol is usually a; after d preceded by c or d it is
# usually c, and so on.
source = EstimatedModel.from_spec(
    abcd,
    {
        "ab": [0.7, 0.1, 0.1, 0.1],
        "c": [0.1, 0.1, 0.1, 0.7],
        "ab|d": [0.1, 0.7, 0.1, 0.1],
        "cd|d": [0.1, 0.1, 0.7, 0.1],
    },
)
sample = generate_sequence(source, 50_000, seed=1)
print(sample[:60], "...")

model = estimate_tree(sample, abcd)
print(model.to_text())
print("distance to source tree:", beta_distance(model.tree, source.tree))

control = "".join(np.random.default_rng(1).choice(list("abcd"), 50_000))
print("iid control:", [str(w) for w in estimate_tree(control, abcd).tree])

# The keep threshold trades sensitivity for robustness.  Lower values keep
# more of the deep, thinly observed contexts.
short = sample[:3000]
for r in (1.0, 5.0, 20.0, 100.0):
    tree = estimate_tree(short, abcd, EstimatorConfig(keep_threshold=r)).tree
    print(f"keep_threshold={r:6.1f}: {len(tree)} contexts")
