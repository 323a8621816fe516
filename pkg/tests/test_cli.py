import pytest

from phylospst import Alphabet, EstimatedModel, generate_sequence
from phylospst.cli import main

ACGT = Alphabet("ACGT")
MODEL = {"AC": [0.7, 0.1, 0.1, 0.1], "GT": [0.1, 0.1, 0.1, 0.7]}


@pytest.fixture
def fasta(tmp_path):
    model = EstimatedModel.from_spec(ACGT, MODEL)
    lines = []
    for i in range(3):
        seq = generate_sequence(model, 3000, seed=i)
        lines.append(f">seq{i} synthetic\n" + "\n".join(seq[j:j + 60] for j in range(0, len(seq), 60)))
    path = tmp_path / "in.fa"
    path.write_text("\n".join(lines) + "\n")
    return path


def test_pipeline_smoke(fasta, tmp_path):
    out = tmp_path / "run"
    assert main(["pipeline", str(fasta), "-o", str(out)]) == 0
    assert sorted(p.name for p in (out / "trees").glob("*.tree")) == ["seq0.tree", "seq1.tree", "seq2.tree"]
    phy = (out / "distances.phy").read_text().splitlines()
    assert phy[0] == "3" and len(phy) == 4
    assert (out / "tree.nwk").read_text().strip().endswith(";")


def test_pipeline_is_byte_identical(fasta, tmp_path):
    runs = []
    for name in ("a", "b"):
        out = tmp_path / name
        assert main(["pipeline", str(fasta), "--outgroup", "seq0", "-o", str(out)]) == 0
        runs.append({p.relative_to(out): p.read_bytes() for p in out.rglob("*") if p.is_file()})
    assert runs[0] == runs[1]


def test_individual_commands(fasta, tmp_path, capsys):
    trees = tmp_path / "trees"
    assert main(["train", str(fasta), "-o", str(trees), "--keep-threshold", "30"]) == 0
    assert main(["dist", str(trees), "--beta", "2", "-o", str(tmp_path / "d.phy")]) == 0
    assert main(["nj", str(tmp_path / "d.phy"), "--edges", str(tmp_path / "e.tsv"), "-o", str(tmp_path / "t.nwk")]) == 0
    assert main(["compare", str(tmp_path / "d.phy"), str(tmp_path / "d.phy"), "-o", str(tmp_path / "c.csv")]) == 0
    csv = (tmp_path / "c.csv").read_text().splitlines()
    assert csv[0] == "taxon_i,taxon_j,d1,d2" and len(csv) == 4
    assert '"keep_threshold": 30.0' in (trees / "run.json").read_text()


def test_dist_empty_dir(tmp_path, capsys):
    (tmp_path / "empty").mkdir()
    assert main(["dist", str(tmp_path / "empty"), "-o", str(tmp_path / "d.phy")]) == 2
    assert "no .tree files" in capsys.readouterr().err


def test_nj_unknown_outgroup(tmp_path, capsys):
    phy = tmp_path / "d.phy"
    phy.write_text("2\nA         0.0 1.0\nB         1.0 0.0\n")
    assert main(["nj", str(phy), "--outgroup", "lamprey", "-o", str(tmp_path / "t.nwk")]) == 2
    assert "lamprey" in capsys.readouterr().err


def test_usage_errors(tmp_path):
    with pytest.raises(SystemExit) as exc:
        main(["dist"])
    assert exc.value.code == 1
    assert main(["dist", str(tmp_path), "--beta", "0", "-o", str(tmp_path / "x")]) == 1


def test_bad_fasta_is_data_error(tmp_path):
    path = tmp_path / "bad.fa"
    path.write_text(">x\nACGT\n>x\nACGT\n")
    assert main(["train", str(path), "-o", str(tmp_path / "o")]) == 2
