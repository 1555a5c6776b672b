import numpy as np
import pytest

from fleetprint.sim import generate_corpus, train_validation_corpora
from fleetprint.telemetry import apply_scaler, featurize_corpus, fit_scaler


@pytest.fixture(scope="session")
def small_corpus():
    # 2 runs per app, 120 s -> 24 buckets per run
    return generate_corpus(2, 11, prefix="small", duration=120.0)


@pytest.fixture(scope="session")
def default_corpora():
    """10 training + 10 validation runs per app, 600 s, noise 0.05, disjoint seeds."""
    return train_validation_corpora(10, seed=2016)


@pytest.fixture(scope="session")
def default_datasets(default_corpora):
    train, val = default_corpora
    return featurize_corpus(train), featurize_corpus(val)


@pytest.fixture(scope="session")
def standardized(default_datasets):
    train, val = default_datasets
    scaler = fit_scaler(train)
    return apply_scaler(scaler, train), apply_scaler(scaler, val)


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


# acceptance criteria report one line each; they are echoed again in the terminal summary
ACCEPTANCE_LINES: list[str] = []


@pytest.fixture
def criterion():
    def record(number: int, ok: bool, detail: str) -> bool:
        line = f"{'PASS' if ok else 'FAIL'} criterion {number}: {detail}"
        print(line)
        ACCEPTANCE_LINES.append(line)
        return ok

    return record


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES, key=lambda s: int(s.split()[2].rstrip(":"))):
            terminalreporter.write_line(line)
