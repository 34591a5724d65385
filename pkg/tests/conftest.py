"""Shared fixtures: the example games and the two-house case-study instance."""
from pathlib import Path

import numpy as np
import pytest

from mcrgames import configure_logging
from mcrgames.cli_io.formats import parse_game
from mcrgames.config import TestConfig
from mcrgames.microgrid import example_instance

FIXTURES = Path(__file__).parent / "fixtures"

configure_logging(TestConfig)


@pytest.fixture
def fixtures_dir() -> Path:
    return FIXTURES


@pytest.fixture
def pennies():
    """Matching-pennies game without pure equilibrium."""
    return parse_game((FIXTURES / "pennies.json").read_bytes())


@pytest.fixture
def ping_pong():
    """Turn-based A/B/C game without equilibrium from A."""
    return parse_game((FIXTURES / "ping_pong.json").read_bytes())


@pytest.fixture
def negative_loop():
    """One-player loop with reward -1 per step."""
    return parse_game((FIXTURES / "negative_loop.json").read_bytes())


@pytest.fixture
def grid_instance():
    return example_instance()


@pytest.fixture
def rng():
    return np.random.default_rng(20240601)
