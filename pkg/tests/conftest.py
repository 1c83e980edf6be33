import sys
from pathlib import Path

import numpy as np
import pytest
from hypothesis import settings

sys.path.insert(0, str(Path(__file__).parent))

from datri.catalog import STANDARD_SPACES, catalog  # noqa: E402
from datri.liealg import random_algebra  # noqa: E402
from datri.sampling import sample_unit_vectors  # noqa: E402

settings.register_profile("default", deadline=None, max_examples=60)
settings.load_profile("default")

ACCEPTANCE_LINES: list[str] = []


@pytest.fixture(params=STANDARD_SPACES)
def space(request):
    alg, decomp = catalog(request.param)
    return alg, decomp


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


def random_algebras(count, seed=7, dims=(3, 4, 5, 6)):
    rng = np.random.default_rng(seed)
    return [random_algebra(dims[i % len(dims)], rng, f"random{i}") for i in range(count)]


def unit_samples(alg, count=4, seed=1):
    return sample_unit_vectors(alg, count, seed)


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
