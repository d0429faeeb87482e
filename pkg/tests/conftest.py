import sys
from pathlib import Path

import pytest
from hypothesis import HealthCheck, settings

from chrl.syntax import parse_program

ROOT = Path(__file__).resolve().parent.parent
PROGRAMS = ROOT / "programs"

sys.path.insert(0, str(Path(__file__).resolve().parent))

settings.register_profile(
    "repo", max_examples=60, deadline=None, suppress_health_check=[HealthCheck.too_slow]
)
settings.load_profile("repo")


def load_program(name: str):
    return parse_program((PROGRAMS / f"{name}.chr").read_text())


@pytest.fixture
def load():
    return load_program
