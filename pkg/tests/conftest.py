import sys
from pathlib import Path

import numpy as np
import pytest

sys.path.insert(0, str(Path(__file__).parent))

from gapsol import (
    CmeParameters,
    build_envelope,
    build_symmetric_example,
    effective_coefficients,
    find_gap,
    locate_edge,
    sample_bands,
)
from gapsol.convergence import prepare, run_convergence_study

ACCEPTANCE_LINES = []


def two_mode(kappa=1.0 + 0j, c=1.0):
    """d=1, N=2 system with v = (+c, -c) and off-diagonal coupling kappa."""
    kap = np.array([[0, kappa], [np.conj(kappa), 0]], dtype=complex)
    return CmeParameters(1, 2, [[c], [-c]], kap, ((0, 0, 0, 0, 1.0), (1, 1, 1, 1, 1.0)))


@pytest.fixture(scope="session")
def reference():
    return build_symmetric_example((0, 1), (1, 0), 2, 1, 1)


@pytest.fixture(scope="session")
def reference_bands(reference):
    return sample_bands(reference, 8.0, 129)


@pytest.fixture(scope="session")
def reference_edge(reference, reference_bands):
    return locate_edge(reference, find_gap(reference_bands), "lower", reference_bands)


@pytest.fixture(scope="session")
def flipped_nls(reference, reference_edge):
    return effective_coefficients(reference_edge, reference, 1.0, flip_nonlinearity=True)


@pytest.fixture(scope="session")
def flipped_envelope(flipped_nls):
    return build_envelope(flipped_nls)


@pytest.fixture(scope="session")
def pipeline(reference):
    return prepare(reference, 1.0, flip_nonlinearity=True)


@pytest.fixture(scope="session")
def sweep(reference, pipeline):
    return run_convergence_study(reference, (0.2, 0.1, 0.05, 0.025), 1.0, True,
                                 pipeline=pipeline, keep_fields=(0.05,))


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
