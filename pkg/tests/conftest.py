import pytest

from fdsmc_robot.dde_sim import ScenarioConfig, simulate

CRITERIA: dict[int, tuple[bool, str]] = {}


def record(n: int, passed: bool, detail: str) -> None:
    CRITERIA[n] = (bool(passed), detail)


def pytest_terminal_summary(terminalreporter):
    if not CRITERIA:
        return
    tr = terminalreporter
    tr.section("acceptance criteria")
    for n in sorted(CRITERIA):
        passed, detail = CRITERIA[n]
        tr.write_line(f"criterion {n:2d}: {'PASS' if passed else 'FAIL'}  {detail}")


@pytest.fixture(scope="session")
def record_criterion():
    return record


@pytest.fixture(scope="session")
def chaotic_run():
    """PD robot, L = 15 ms, 400 s."""
    return simulate(ScenarioConfig(mode="single_pd", t_end=400.0))


@pytest.fixture(scope="session")
def short_pd_run():
    return simulate(ScenarioConfig(mode="single_pd", t_end=20.0))
