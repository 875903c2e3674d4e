from __future__ import annotations

from pathlib import Path

import pytest

from salp.loopir import LoopProgram, PerfectNest, parse_program

FIXTURE_DIR = Path(__file__).resolve().parent.parent / "fixtures"

# every loop-nest fixture shipped with the repository, in corpus order
FIXTURE_NAMES = [
    "shift",
    "parity",
    "square_index",
    "triangular",
    "interchange",
    "skew",
    "scalar",
    "nodep",
    "quadratic_bound",
    "multiread",
]


def fixture_text(name: str) -> str:
    return (FIXTURE_DIR / f"{name}.loop").read_text()


def load_program(name: str) -> LoopProgram:
    return parse_program(fixture_text(name))


def load_nest(name: str) -> PerfectNest:
    prog = load_program(name)
    assert len(prog.nests) == 1
    return prog.nests[0]


@pytest.fixture(scope="session")
def corpus() -> dict[str, LoopProgram]:
    return {name: load_program(name) for name in FIXTURE_NAMES}
