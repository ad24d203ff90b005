import numpy as np
import pytest

from ppcorf.bank import DEFAULT_ORIENTATIONS, DEFAULT_SIGMAS, apply_bank_many, build_bank
from ppcorf.corf import configure
from ppcorf.synthetic import oriented_bars_dataset


@pytest.fixture(scope="session")
def cell2():
    return configure(2.0)


@pytest.fixture(scope="session")
def default_bank():
    return build_bank(DEFAULT_SIGMAS, DEFAULT_ORIENTATIONS, k=1.8)


@pytest.fixture(scope="session")
def bars_dataset():
    return oriented_bars_dataset(300, seed=7)


@pytest.fixture(scope="session")
def bars_corf_features(bars_dataset, default_bank):
    images, _ = bars_dataset
    return np.stack([t.data for t in apply_bank_many(images, default_bank)])


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


_ACCEPTANCE: dict = {}


@pytest.fixture
def acceptance():
    """Record ``(criterion, ok, detail)``; lines are printed in the terminal summary."""

    def record(number: int, ok: bool, detail: str):
        line = f"{'PASS' if ok else 'FAIL'}  criterion {number}: {detail}"
        _ACCEPTANCE.setdefault(number, []).append((ok, line))
        print(line)
        return ok

    return record


def pytest_terminal_summary(terminalreporter):
    if not _ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(_ACCEPTANCE):
        parts = _ACCEPTANCE[number]
        ok = all(p for p, _ in parts)
        details = "; ".join(line.split(": ", 1)[1] for _, line in parts)
        terminalreporter.write_line(f"{'PASS' if ok else 'FAIL'}  criterion {number}: {details}")
