import numpy as np
import pytest

from iwproj.datagen import ExperimentDesign, MCBudget
from iwproj.spectrum import ClusterSelection, SpectrumSpec

ACCEPTANCE_LINES: list[str] = []


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


@pytest.fixture
def record_acceptance():
    def record(label: str, ok: bool | None, detail: str) -> None:
        status = "SKIP" if ok is None else ("PASS" if ok else "FAIL")
        line = f"{status} {label}: {detail}"
        ACCEPTANCE_LINES.append(line)
        print(line)

    return record


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)


def small_gaussian_design(p: int = 20, seed: int = 3, **kwargs) -> ExperimentDesign:
    """Well-gapped Gaussian design: one spike at 10 over a bulk spread on [1, 2]."""
    bulk = tuple(np.linspace(2.0, 1.0, p - 1))
    return ExperimentDesign(
        spectrum=SpectrumSpec((10.0,) + bulk, (1,) * p),
        laws=("gaussian",) * p,
        selection=ClusterSelection(0, 0),
        seed=seed,
        **kwargs,
    )


@pytest.fixture
def tiny_design():
    return small_gaussian_design(p=6, seed=11, mc=MCBudget(200, 6, 50))
