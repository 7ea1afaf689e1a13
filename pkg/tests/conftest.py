import numpy as np
import pytest
from hypothesis import HealthCheck, settings

from ccsketch.oracle import profile_vector
from ccsketch.sketch import SparseVector

settings.register_profile("default", deadline=None, max_examples=60,
                          suppress_health_check=[HealthCheck.too_slow])
settings.load_profile("default")

# criterion number -> list of (label, passed, detail); filled by test_acceptance
ACCEPTANCE = {}


def record(criterion: int, label: str, passed: bool, detail: str = "") -> None:
    ACCEPTANCE.setdefault(criterion, []).append((label, bool(passed), detail))


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    tr = terminalreporter
    tr.section("acceptance criteria")
    for n in sorted(ACCEPTANCE):
        parts = ACCEPTANCE[n]
        ok = all(p for _, p, _ in parts)
        failed = [f"{lab} ({det})" if det else lab for lab, p, det in parts if not p]
        line = f"criterion {n:2d}: {'PASS' if ok else 'FAIL'}"
        if failed:
            line += " - failing: " + "; ".join(failed)
        tr.write_line(line)
        for lab, p, det in parts:
            tr.write_line(f"    [{'ok' if p else 'x '}] {lab}" + (f": {det}" if det else ""))


@pytest.fixture(scope="session")
def twist():
    return profile_vector("TWIST", d=20000, seed=1)


@pytest.fixture(scope="session")
def vec_a():
    return profile_vector("A", d=16384, seed=0)


@pytest.fixture
def small_vector():
    rng = np.random.default_rng(5)
    idx = np.sort(rng.choice(1000, size=100, replace=False))
    return SparseVector(idx, rng.integers(1, 50, size=100).astype(float), d=1000)
