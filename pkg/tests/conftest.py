from pathlib import Path

import pytest

FIXTURES = Path(__file__).parent / "fixtures"
GOLDENS = Path(__file__).parent / "goldens"


@pytest.fixture
def fixtures() -> Path:
    return FIXTURES


@pytest.fixture
def goldens() -> Path:
    return GOLDENS
