import pytest
from oracles import cantor_endpoints

from semijulia.sphere import PointCloud

# criterion number -> list of (label, passed, detail), filled by test_acceptance
ACCEPTANCE: dict[int, list] = {}


@pytest.fixture(scope="session")
def cantor8() -> PointCloud:
    return PointCloud.from_complex(cantor_endpoints(8))


@pytest.fixture
def check():
    def _check(criterion: int, label: str, ok: bool, detail: str = "") -> bool:
        ACCEPTANCE.setdefault(criterion, []).append((label, bool(ok), detail))
        return bool(ok)

    return _check


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for crit in sorted(ACCEPTANCE):
        parts = ACCEPTANCE[crit]
        status = "PASS" if all(ok for _, ok, _ in parts) else "FAIL"
        terminalreporter.write_line(f"criterion {crit:2d}: {status}")
        for label, ok, detail in parts:
            terminalreporter.write_line(f"    [{'pass' if ok else 'FAIL'}] {label}: {detail}")
