"""Golden-file suite: every fixture parses to frozen JSON bytes, exactly.

The golden files live in tests/goldens/ and were produced by this same
parser after its per-fixture content assertions (test_musicxml.py) passed;
they freeze the full output so any behavioral drift shows up as a byte
diff. Regenerate deliberately with REGEN_GOLDENS=1 pytest tests/test_golden.py.
"""

import os
import time

import pytest

from scorekit.json_io import save_json
from scorekit.musicxml import parse

from conftest import FIXTURES

GOLDEN_FIXTURES = sorted(p.name for p in FIXTURES.glob("*.musicxml")
                         if p.name != "malformed.xml") + ["container.mxl"]


@pytest.mark.parametrize("name", GOLDEN_FIXTURES)
def test_fixture_matches_golden(name, fixtures, goldens):
    golden_path = goldens / (name + ".json")
    data = save_json(parse(fixtures / name))
    if os.environ.get("REGEN_GOLDENS"):
        golden_path.write_bytes(data)
    assert golden_path.exists(), f"golden missing; run with REGEN_GOLDENS=1"
    assert data == golden_path.read_bytes(), f"{name} drifted from golden"


def test_golden_suite_has_at_least_20_fixtures():
    assert len(GOLDEN_FIXTURES) >= 20


def test_golden_suite_runs_under_five_seconds(fixtures, goldens):
    start = time.perf_counter()
    for name in GOLDEN_FIXTURES:
        data = save_json(parse(fixtures / name))
        assert data == (goldens / (name + ".json")).read_bytes()
    assert time.perf_counter() - start < 5.0
