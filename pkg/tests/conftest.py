import os
from pathlib import Path

import hypothesis
import pytest

from datar.engines import ChainBuilder, builtin_registry

hypothesis.settings.register_profile("ci", max_examples=100, deadline=None, derandomize=True)
hypothesis.settings.register_profile("dev", max_examples=25, deadline=None)
hypothesis.settings.load_profile(os.environ.get("HYPOTHESIS_PROFILE", "ci"))

REPO = Path(__file__).resolve().parents[1]

# criterion id -> (description, passed); filled by test_acceptance
ACCEPTANCE: dict[str, tuple[str, bool]] = {}


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for cid in sorted(ACCEPTANCE, key=lambda c: int(c[2:])):
        desc, ok = ACCEPTANCE[cid]
        terminalreporter.write_line(f"{cid:<5} {'PASS' if ok else 'FAIL'}  {desc}")


@pytest.fixture
def registry():
    return builtin_registry()


@pytest.fixture
def in_repo(monkeypatch):
    """Run with the repository root as cwd (configs use repo-relative paths)."""
    monkeypatch.chdir(REPO)
    return REPO


@pytest.fixture
def make_chain(registry, tmp_path):
    def make(input="generator", storage="memstore", output="json", storage_params=None, input_params=None):
        sp = dict(storage_params or {})
        if storage == "logstore":
            sp.setdefault("dir", str(tmp_path / "bigdb"))
        return (
            ChainBuilder(registry)
            .input(input, **(input_params or {}))
            .storage(storage, **sp)
            .computation("builtin")
            .control("standalone")
            .output(output)
            .build()
        )

    return make
