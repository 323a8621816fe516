"""File formats: FASTA input, PHYLIP square matrices, tree files and CSV comparisons."""

from __future__ import annotations

import csv
import io
import os
import tempfile
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, List, NamedTuple, Optional, Union

import numpy as np

from .core import Alphabet, SparseContextTree
from .entropy import DistanceMatrix

__all__ = [
    "AMINO_ACIDS",
    "PairedDistances",
    "SequenceRecord",
    "atomic_write",
    "compare_matrices",
    "format_phylip",
    "infer_alphabet",
    "parse_fasta",
    "parse_fasta_text",
    "parse_phylip",
    "read_phylip_matrix",
    "read_tree",
    "resolve_alphabet",
    "write_phylip_matrix",
    "write_tree",
]

AMINO_ACIDS = "ACDEFGHIKLMNPQRSTVWY"
NUCLEOTIDE_ALPHABETS = ("ACGT", "ACGU")
GAP_CHARS = "-."

PathLike = Union[str, os.PathLike]


class SequenceRecord(NamedTuple):
    id: str
    residues: str


def atomic_write(path: PathLike, text: str):
    """Write ``text`` to a sibling temp file, then rename it over ``path``."""
    path = Path(path)
    fd, tmp = tempfile.mkstemp(dir=path.parent or ".", prefix=f".{path.name}.", suffix=".tmp")
    try:
        with os.fdopen(fd, "w", encoding="utf-8", newline="\n") as handle:
            handle.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def parse_fasta_text(text: str) -> List[SequenceRecord]:
    """Parse FASTA text; ids are the first header token, residues uppercased without gaps."""
    records = []
    seen = set()
    name = None
    chunks: list = []

    def flush():
        residues = "".join(chunks).upper()
        for gap in GAP_CHARS:
            residues = residues.replace(gap, "")
        residues = "".join(residues.split())
        if not residues:
            raise ValueError(f"record {name!r} has an empty sequence")
        records.append(SequenceRecord(name, residues))

    for lineno, line in enumerate(text.splitlines(), 1):
        line = line.strip()
        if not line or line.startswith(";"):
            continue
        if line.startswith(">"):
            if name is not None:
                flush()
            tokens = line[1:].split()
            if not tokens:
                raise ValueError(f"line {lineno}: header without an id")
            name = tokens[0]
            if name in seen:
                raise ValueError(f"duplicate record id {name!r}")
            seen.add(name)
            chunks = []
        elif name is None:
            raise ValueError(f"line {lineno}: sequence data before the first header")
        else:
            chunks.append(line)
    if name is None:
        raise ValueError("no FASTA records found")
    flush()
    return records


def parse_fasta(path: PathLike) -> List[SequenceRecord]:
    with open(path, encoding="utf-8") as handle:
        return parse_fasta_text(handle.read())


def infer_alphabet(records: Iterable[SequenceRecord]) -> Alphabet:
    """Sorted set of the symbols observed across all records."""
    observed = set()
    for rec in records:
        observed.update(rec.residues)
    return Alphabet(sorted(observed))


def resolve_alphabet(records: List[SequenceRecord], choice: Optional[str] = None) -> Alphabet:
    """Pick the alphabet for a set of records.

    ``choice`` may be an explicit symbol string, ``"observed"`` for the sorted
    observed symbols, ``"protein"`` for the 20 standard amino acids, or
    ``None``/``"auto"``: nucleotide alphabets when the data fit one, else the
    20 amino acids.  Residues outside the chosen alphabet are an error.
    """
    observed = set()
    for rec in records:
        observed.update(rec.residues)
    if choice in (None, "auto"):
        for candidate in NUCLEOTIDE_ALPHABETS:
            if observed <= set(candidate):
                alphabet = Alphabet(candidate)
                break
        else:
            alphabet = Alphabet(AMINO_ACIDS)
    elif choice == "observed":
        alphabet = Alphabet(sorted(observed))
    elif choice == "protein":
        alphabet = Alphabet(AMINO_ACIDS)
    else:
        alphabet = Alphabet(choice.upper())
    for rec in records:
        bad = sorted(set(rec.residues) - set(alphabet.symbols))
        if bad:
            pos = min(rec.residues.index(s) for s in bad)
            raise ValueError(
                f"record {rec.id!r}: symbol {rec.residues[pos]!r} at position {pos} "
                f"is not in alphabet {alphabet} (use --alphabet to extend it)"
            )
    return alphabet


def format_phylip(matrix: DistanceMatrix) -> str:
    """PHYLIP square format: count line, then 10-character names and 6-decimal values."""
    names = [label[:10].ljust(10) for label in matrix.labels]
    if len({n.strip() for n in names}) != len(names):
        raise ValueError("taxon labels collide when truncated to 10 characters")
    lines = [str(len(matrix))]
    for name, row in zip(names, matrix.values):
        lines.append(name + " ".join(f"{v:.6f}" for v in row))
    return "\n".join(lines) + "\n"


def write_phylip_matrix(matrix: DistanceMatrix, path: PathLike):
    atomic_write(path, format_phylip(matrix))


def parse_phylip(text: str) -> DistanceMatrix:
    """Parse a square PHYLIP matrix.

    Rows with exactly ``n + 1`` whitespace tokens use the first token as the
    name (relaxed PHYLIP); otherwise the name is the first 10 characters.
    Asymmetry up to 1e-6 is averaged away.
    """
    lines = [ln for ln in text.splitlines() if ln.strip()]
    if not lines:
        raise ValueError("empty PHYLIP file")
    try:
        n = int(lines[0].split()[0])
    except (ValueError, IndexError):
        raise ValueError("line 1: expected the taxon count") from None
    if n < 1:
        raise ValueError("line 1: taxon count must be positive")
    rows = lines[1:]
    if len(rows) != n:
        raise ValueError(f"header declares {n} taxa but {len(rows)} rows follow")
    labels, values = [], np.zeros((n, n))
    for i, line in enumerate(rows):
        lineno = i + 2
        tokens = line.split()
        if len(tokens) == n + 1:
            name, fields = tokens[0], tokens[1:]
        else:
            name, fields = line[:10].strip(), line[10:].split()
        if not name:
            raise ValueError(f"line {lineno}: missing taxon name")
        if len(fields) != n:
            raise ValueError(f"line {lineno}: expected {n} values, found {len(fields)}")
        for j, field in enumerate(fields):
            try:
                values[i, j] = float(field)
            except ValueError:
                raise ValueError(f"line {lineno}, column {j + 1}: non-numeric entry {field!r}") from None
        labels.append(name)
    asym = np.abs(values - values.T).max()
    if asym > 1e-6:
        raise ValueError(f"matrix is asymmetric (max difference {asym:g})")
    values = (values + values.T) / 2.0
    return DistanceMatrix(tuple(labels), values)


def read_phylip_matrix(path: PathLike) -> DistanceMatrix:
    with open(path, encoding="utf-8") as handle:
        return parse_phylip(handle.read())


@dataclass(frozen=True)
class PairedDistances:
    """One row ``(taxon_i, taxon_j, d1, d2)`` per unordered taxon pair."""

    rows: tuple

    def __len__(self):
        return len(self.rows)

    def to_csv(self) -> str:
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(["taxon_i", "taxon_j", "d1", "d2"])
        for a, b, d1, d2 in self.rows:
            writer.writerow([a, b, f"{d1:.6f}", f"{d2:.6f}"])
        return buf.getvalue()


def compare_matrices(first: DistanceMatrix, second: DistanceMatrix) -> PairedDistances:
    """Pair up entries of two matrices over the same taxa, in the first matrix's order."""
    a, b = set(first.labels), set(second.labels)
    if a != b:
        diff = sorted(a ^ b)
        raise ValueError(f"taxon sets differ: {', '.join(diff)}")
    other = second.reorder(first.labels)
    labels = first.labels
    rows = []
    for i in range(len(labels)):
        for j in range(i + 1, len(labels)):
            rows.append((labels[i], labels[j], float(first.values[i, j]), float(other.values[i, j])))
    return PairedDistances(tuple(rows))


def write_tree(tree: SparseContextTree, path: PathLike):
    atomic_write(path, tree.to_text())


def read_tree(path: PathLike) -> SparseContextTree:
    with open(path, encoding="utf-8") as handle:
        return SparseContextTree.from_text(handle.read())
