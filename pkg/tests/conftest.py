from __future__ import annotations

import sys
from fractions import Fraction
from pathlib import Path

import pytest

sys.path.insert(0, str(Path(__file__).parent))

from bellsched.domain import Schedule, canonical_school_data
from bellsched.utility import UtilitySpec

# Published reference schedules (slot indices in school-id order).
DEFAULT_SLOTS = (3, 3, 3, 1, 2, 1, 1, 2, 2, 3)
ORTEGA_750_SLOTS = (3, 1, 3, 1, 1, 2, 1, 2, 2, 3)
ORTEGA_840_SLOTS = (3, 2, 3, 1, 2, 1, 1, 2, 2, 3)
FINAL_ORTEGA_SLOTS = (3, 3, 3, 1, 1, 2, 1, 2, 2, 3)
CAPPED_16_SLOTS = (3, 2, 3, 2, 2, 1, 1, 2, 2, 3)


@pytest.fixture(scope="session")
def data():
    return canonical_school_data()


@pytest.fixture(scope="session")
def default_schedule():
    return Schedule(DEFAULT_SLOTS)


@pytest.fixture(scope="session")
def ortega_750():
    return Schedule(ORTEGA_750_SLOTS)


@pytest.fixture(scope="session")
def ortega_840():
    return Schedule(ORTEGA_840_SLOTS)


@pytest.fixture(scope="session")
def final_ortega():
    return Schedule(FINAL_ORTEGA_SLOTS)


@pytest.fixture(scope="session")
def ortega_parent_spec():
    return UtilitySpec(
        id="ortega-parent",
        school_id=2,
        direction="earlier",
        w_time=Fraction(252, 1000),
        w_load=Fraction(332, 1000),
        w_dev=Fraction(416, 1000),
        load_threshold=Fraction(25),
        dev_threshold=Fraction(23, 2),
    )
