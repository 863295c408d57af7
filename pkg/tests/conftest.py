from __future__ import annotations

import sys
from pathlib import Path

import pytest

sys.path.insert(0, str(Path(__file__).parent))

ROOT = Path(__file__).resolve().parent.parent
MODELS = ROOT / "models"

# criterion number -> (passed, title, detail); filled by test_acceptance
ACCEPTANCE: dict[int, tuple[bool, str, str]] = {}


def model_text(name: str) -> str:
    return (MODELS / name).read_text()


@pytest.fixture(scope="session")
def si_source() -> str:
    return model_text("si.piff")


@pytest.fixture(scope="session")
def si_full(si_source):
    from piff.pipeline import compile_source
    return compile_source(si_source)[2]


@pytest.fixture(scope="session")
def si_translation(si_source):
    from piff.pipeline import compile_source
    return compile_source(si_source)[1]


@pytest.fixture(scope="session")
def si8(si_full):
    from piff.pipeline import reduce_with
    return reduce_with(si_full, model_text("si_state_loc.lbl"), prefix="")


@pytest.fixture(scope="session")
def si4(si8):
    from piff.pipeline import reduce_with
    return reduce_with(si8.matrix, model_text("si_hl.lbl"))


@pytest.fixture(scope="session")
def si2(si8):
    from piff.pipeline import reduce_with
    return reduce_with(si8.matrix, model_text("si_loc.lbl"))


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for n in sorted(ACCEPTANCE):
        ok, title, detail = ACCEPTANCE[n]
        line = f"criterion {n:2d}: {'PASS' if ok else 'FAIL'}  {title}"
        if detail:
            line += f"  [{detail}]"
        terminalreporter.write_line(line)
