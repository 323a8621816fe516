"""Command-line pipeline: FASTA -> context trees -> distance matrix -> Newick.

Exit status is 0 on success, 1 on usage errors and 2 on data errors.
"""

from __future__ import annotations

import argparse
import json
import logging
import sys
from pathlib import Path

from . import __version__
from .entropy import distance_matrix
from .estimator import EstimatorConfig, estimate_tree
from .io import (
    atomic_write,
    compare_matrices,
    parse_fasta,
    read_phylip_matrix,
    read_tree,
    resolve_alphabet,
    write_phylip_matrix,
    write_tree,
)
from .phylo import edge_list, neighbor_join, newick_emit, root_at_outgroup

log = logging.getLogger("phylospst")

RUN_METADATA = "run.json"


class UsageError(Exception):
    pass


class DataError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(1, f"{self.prog}: error: {message}\n")


def _add_estimator_args(p):
    defaults = EstimatorConfig()
    p.add_argument("--alphabet", default="auto",
                   help="symbol string, 'observed', 'protein' or 'auto' (default)")
    p.add_argument("--max-depth", type=int, default=defaults.max_depth)
    p.add_argument("--min-count", type=int, default=defaults.min_count)
    p.add_argument("--merge-threshold", type=float, default=defaults.merge_threshold)
    p.add_argument("--keep-threshold", type=float, default=defaults.keep_threshold)
    p.add_argument("--pseudocount", type=float, default=defaults.pseudocount)


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="phylospst", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=__version__)
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", parser_class=_Parser)
    sub.required = True

    p = sub.add_parser("train", help="estimate one context tree per FASTA record")
    p.add_argument("fasta")
    p.add_argument("-o", "--output", required=True, help="output directory")
    _add_estimator_args(p)

    p = sub.add_parser("dist", help="beta-distance matrix over a directory of trees")
    p.add_argument("directory")
    p.add_argument("--beta", type=float, default=1.0)
    p.add_argument("-o", "--output", required=True, help="PHYLIP output file")

    p = sub.add_parser("nj", help="Neighbor-Joining tree from a PHYLIP matrix")
    p.add_argument("phylip")
    p.add_argument("--outgroup")
    p.add_argument("--edges", help="also write a tab-separated edge list here")
    p.add_argument("-o", "--output", required=True, help="Newick output file")

    p = sub.add_parser("compare", help="pair up entries of two PHYLIP matrices as CSV")
    p.add_argument("first")
    p.add_argument("second")
    p.add_argument("-o", "--output", required=True, help="CSV output file")

    p = sub.add_parser("pipeline", help="train, dist and nj in one go")
    p.add_argument("fasta")
    p.add_argument("--beta", type=float, default=1.0)
    p.add_argument("--outgroup")
    p.add_argument("--compare", metavar="PHYLIP",
                   help="external matrix (e.g. PAM distances) to pair against")
    p.add_argument("-o", "--output", required=True, help="output directory")
    _add_estimator_args(p)
    return parser


def _config(args) -> EstimatorConfig:
    try:
        return EstimatorConfig(
            max_depth=args.max_depth,
            min_count=args.min_count,
            merge_threshold=args.merge_threshold,
            keep_threshold=args.keep_threshold,
            pseudocount=args.pseudocount,
        )
    except ValueError as exc:
        raise UsageError(str(exc)) from None


def _check_beta(beta):
    if not beta > 0:
        raise UsageError(f"--beta must be positive, got {beta}")


def cmd_train(args):
    config = _config(args)
    records = parse_fasta(args.fasta)
    alphabet = resolve_alphabet(records, args.alphabet)
    out = Path(args.output)
    out.mkdir(parents=True, exist_ok=True)
    for rec in records:
        if "/" in rec.id or "\\" in rec.id or rec.id.startswith("."):
            raise DataError(f"record id {rec.id!r} cannot be used as a file name")
        log.info("estimating %s (%d symbols)", rec.id, len(rec.residues))
        model = estimate_tree(rec.residues, alphabet, config)
        write_tree(model.tree, out / f"{rec.id}.tree")
        atomic_write(out / f"{rec.id}.model", model.to_text())
    meta = {"alphabet": str(alphabet), "config": config.as_dict(), "taxa": [r.id for r in records]}
    atomic_write(out / RUN_METADATA, json.dumps(meta, indent=2, sort_keys=True) + "\n")


def _load_trees(directory: Path):
    if not directory.is_dir():
        raise DataError(f"{directory} is not a directory")
    files = {p.stem: p for p in directory.glob("*.tree")}
    if not files:
        raise DataError(f"no .tree files in {directory}")
    order = sorted(files)
    meta = directory / RUN_METADATA
    if meta.exists():
        taxa = json.loads(meta.read_text())["taxa"]
        order = [t for t in taxa if t in files] + [t for t in order if t not in taxa]
    return [(name, read_tree(files[name])) for name in order]


def cmd_dist(args):
    _check_beta(args.beta)
    trees = _load_trees(Path(args.directory))
    write_phylip_matrix(distance_matrix(trees, args.beta), args.output)


def cmd_nj(args):
    matrix = read_phylip_matrix(args.phylip)
    tree = neighbor_join(matrix)
    if args.outgroup:
        if args.outgroup not in matrix.labels:
            raise DataError(f"unknown outgroup taxon {args.outgroup!r}")
        tree = root_at_outgroup(tree, args.outgroup)
    atomic_write(args.output, newick_emit(tree) + "\n")
    if args.edges:
        atomic_write(args.edges, edge_list(tree))


def cmd_compare(args):
    pairs = compare_matrices(read_phylip_matrix(args.first), read_phylip_matrix(args.second))
    atomic_write(args.output, pairs.to_csv())


def cmd_pipeline(args):
    _check_beta(args.beta)
    out = Path(args.output)
    trees_dir = out / "trees"
    cmd_train(argparse.Namespace(**{**vars(args), "output": str(trees_dir)}))
    matrix_path = out / "distances.phy"
    cmd_dist(argparse.Namespace(directory=str(trees_dir), beta=args.beta, output=str(matrix_path)))
    cmd_nj(argparse.Namespace(phylip=str(matrix_path), outgroup=args.outgroup,
                              edges=str(out / "edges.tsv"), output=str(out / "tree.nwk")))
    if args.compare:
        cmd_compare(argparse.Namespace(first=str(matrix_path), second=args.compare,
                                       output=str(out / "comparison.csv")))


COMMANDS = {
    "train": cmd_train,
    "dist": cmd_dist,
    "nj": cmd_nj,
    "compare": cmd_compare,
    "pipeline": cmd_pipeline,
}


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s: %(message)s")
    try:
        COMMANDS[args.command](args)
    except UsageError as exc:
        print(f"phylospst: error: {exc}", file=sys.stderr)
        return 1
    except (DataError, ValueError, KeyError, OSError) as exc:
        msg = exc.args[0] if isinstance(exc, KeyError) and exc.args else exc
        print(f"phylospst: error: {msg}", file=sys.stderr)
        return 2
    return 0


if __name__ == "__main__":
    sys.exit(main())
