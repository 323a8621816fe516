import pytest

from phylospst import Alphabet, SparseContextTree

# three contexts over abcd: ({a,b,c},{a,c}), ({d},{a,c}), ({b,d})
THREE_LEAF = ["abc|ac", "d|ac", "bd"]
TREE_B = ["ab", "abcd|cd"]


@pytest.fixture
def abcd():
    return Alphabet("abcd")


@pytest.fixture
def three_leaf(abcd):
    return SparseContextTree.from_strings(abcd, THREE_LEAF)


@pytest.fixture
def tree_b(abcd):
    return SparseContextTree.from_strings(abcd, TREE_B)


def pytest_terminal_summary(terminalreporter):
    lines = []
    for outcome in ("passed", "failed"):
        for report in terminalreporter.stats.get(outcome, []):
            props = dict(getattr(report, "user_properties", []))
            if "acceptance" in props and report.when == "call":
                lines.append((props["acceptance"], outcome.upper()))
    if lines:
        terminalreporter.section("acceptance criteria")
        for label, verdict in sorted(lines):
            terminalreporter.write_line(f"{'PASS' if verdict == 'PASSED' else 'FAIL'}  {label}")
