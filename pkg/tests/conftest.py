import sys
from pathlib import Path

import pytest
from hypothesis import settings

# Derandomized hypothesis runs keep the suite reproducible end to end.
settings.register_profile("repeatable", derandomize=True, max_examples=100)
settings.load_profile("repeatable")

# Make tests/reference.py importable regardless of invocation directory.
sys.path.insert(0, str(Path(__file__).parent))

CONFIGS = Path(__file__).parent.parent / "configs"


@pytest.fixture
def configs_dir() -> Path:
    return CONFIGS
