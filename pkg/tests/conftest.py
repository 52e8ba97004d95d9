import importlib.resources
from pathlib import Path

import pytest


@pytest.fixture(scope="session")
def bundled_wav() -> Path:
    return Path(str(importlib.resources.files("bcsm_nlms") / "data" / "speech_like.wav"))
