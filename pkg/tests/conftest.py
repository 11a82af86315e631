import numpy as np
import pytest
from hypothesis import HealthCheck, settings

settings.register_profile("repo", max_examples=60, deadline=None, derandomize=True,
                          suppress_health_check=[HealthCheck.too_slow])
settings.load_profile("repo")


@pytest.fixture
def rng():
    return np.random.default_rng(0)


_CRITERIA = pytest.StashKey[dict]()


@pytest.fixture
def criterion(request):
    """criterion(n, ok, detail) prints and records one acceptance verdict line."""
    lines = request.config.stash.setdefault(_CRITERIA, {})

    def record(n: int, ok: bool, detail: str = "") -> bool:
        line = f"criterion {n}: {'PASS' if ok else 'FAIL'}" + (f" ({detail})" if detail else "")
        lines[n] = line
        print(line)
        return ok
    return record


def pytest_terminal_summary(terminalreporter, config):
    lines = config.stash.get(_CRITERIA, {})
    if lines:
        terminalreporter.section("acceptance criteria")
        for n in sorted(lines):
            terminalreporter.write_line(lines[n])
