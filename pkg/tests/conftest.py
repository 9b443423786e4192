from pathlib import Path

import numpy as np
import pytest

from catalog.synthetic import count_for_density, synthesize_catalog

FIXTURES = Path(__file__).parent / "fixtures"


@pytest.fixture
def fixtures_dir() -> Path:
    return FIXTURES


@pytest.fixture(scope="session")
def lunar_catalog():
    """Full-density synthetic catalog shared by the simulation tests"""
    return synthesize_catalog(count_for_density(0.0053), np.random.default_rng(2024))
