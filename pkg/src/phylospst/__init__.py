"""Sparse context trees, beta-entropy tree distances and Neighbor-Joining phylogenies."""

__version__ = "0.1.0"

from .core import (
    Alphabet,
    AlphabetMismatchError,
    SparseContext,
    SparseContextTree,
    ValidationReport,
    canonicalize,
    complete_tree,
    context_intersect,
    context_weight,
    root_tree,
    tree_join,
    validate_tree,
)
from .entropy import DistanceMatrix, beta_distance, beta_entropy, distance_matrix, partition_entropy
from .estimator import (
    ContextCounts,
    EstimatedModel,
    EstimatorConfig,
    estimate_tree,
    generate_sequence,
    predictive_distribution,
    scan_counts,
)
from .phylo import PhyloTree, midpoint_root, neighbor_join, newick_emit, root_at_outgroup, unroot
