import json
from pathlib import Path

import numpy as np
import pytest

DATA = Path(__file__).parent / "data"


@pytest.fixture(scope="session")
def oracle_values() -> dict:
    return json.loads((DATA / "oracle_values.json").read_text())


@pytest.fixture
def rng() -> np.random.Generator:
    return np.random.default_rng(20240611)


def random_symmetric(rng: np.random.Generator, p: int) -> np.ndarray:
    a = rng.standard_normal((p, p))
    return (a + a.T) / 2


def random_spd(rng: np.random.Generator, p: int, floor: float = 0.5) -> np.ndarray:
    a = rng.standard_normal((p, p)) / np.sqrt(p)
    return a @ a.T + floor * np.eye(p)


def exp_decay(p: int, rho: float = 0.6) -> np.ndarray:
    i = np.arange(p)
    return rho ** np.abs(i[:, None] - i[None, :])


ACCEPTANCE = pytest.StashKey[list]()


def pytest_configure(config) -> None:
    config.stash[ACCEPTANCE] = []


@pytest.fixture
def verdict(request):
    """Record one PASS/FAIL line; the lines are repeated in the terminal summary."""
    lines = request.config.stash[ACCEPTANCE]

    def record(criterion: int, ok: bool, detail: str) -> None:
        line = f"{'PASS' if ok else 'FAIL'} criterion {criterion}: {detail}"
        print(line)
        lines.append(line)

    return record


def pytest_terminal_summary(terminalreporter, exitstatus, config) -> None:
    lines = config.stash.get(ACCEPTANCE, [])
    if lines:
        terminalreporter.section("acceptance criteria")
        for line in lines:
            terminalreporter.write_line(line)
