import sys
from pathlib import Path

import numpy as np
import pytest

sys.path.insert(0, str(Path(__file__).parent))

from micro import micro_model  # noqa: E402

from ricconflict.genc import simulate, synthesize_entities  # noqa: E402

DATA = Path(__file__).parent / "data"


@pytest.fixture
def micro():
    return micro_model()


@pytest.fixture(scope="session")
def small_ds():
    """A short High-intensity run that contains every label."""
    return simulate(synthesize_entities(5, seed=0), "high", 6000, seed=0)


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


@pytest.fixture
def fixture_csv():
    return DATA / "opencellid_dublin.csv"
