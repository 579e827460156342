from __future__ import annotations

import sys
from pathlib import Path

import pytest

sys.path.insert(0, str(Path(__file__).parent))

from helpers import System, build_system  # noqa: E402


@pytest.fixture
def system() -> System:
    return build_system()


@pytest.fixture
def big_system() -> System:
    return build_system(pool=16)
