from __future__ import annotations

import numpy as np
import pytest
from hypothesis import HealthCheck, settings

from pathint.paths import SampledPath, uniform_grid

settings.register_profile(
    "pathint", deadline=None, max_examples=60, suppress_health_check=[HealthCheck.too_slow]
)
settings.load_profile("pathint")


@pytest.fixture
def grid_path():
    def make(fn, n: int = 1025, T: float = 1.0, label: str = "") -> SampledPath:
        t = uniform_grid(T, n)
        return SampledPath(t, np.broadcast_to(np.asarray(fn(t), dtype=float), t.shape).copy(), label)

    return make


# one line per acceptance criterion, filled in by tests/test_acceptance.py
ACCEPTANCE: dict[int, str] = {}


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE:
        terminalreporter.section("acceptance criteria")
        for k in sorted(ACCEPTANCE):
            terminalreporter.write_line(ACCEPTANCE[k])
