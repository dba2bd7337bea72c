import sys
from pathlib import Path

import pytest
from hypothesis import HealthCheck, settings

from tvpf.case import load_case
from tvpf.powerflow import InjectionTarget, Network, solve_powerflow
from tvpf.scenarios import day_ahead_118, five_bus_ramp
from tvpf.trajectory import run_time_varying

sys.path.insert(0, str(Path(__file__).parent))

settings.register_profile("default", max_examples=40, deadline=None,
                          suppress_health_check=[HealthCheck.function_scoped_fixture])
settings.load_profile("default")

FIXTURES = Path(__file__).parent / "fixtures"


@pytest.fixture(scope="session")
def net5():
    return Network(load_case("case5"))


@pytest.fixture(scope="session")
def net118():
    return Network(load_case("case118"))


@pytest.fixture(scope="session")
def base5(net5):
    return solve_powerflow(net5, InjectionTarget.from_case(net5))


@pytest.fixture(scope="session")
def base118(net118):
    return solve_powerflow(net118, InjectionTarget.from_case(net118))


@pytest.fixture(scope="session")
def ramp5(net5):
    return five_bus_ramp(net5)[1]


@pytest.fixture(scope="session")
def day118(net118):
    return day_ahead_118(net118)[1]


@pytest.fixture(scope="session")
def traj5(net5, ramp5):
    return run_time_varying(net5, ramp5, 11)


@pytest.fixture(scope="session")
def traj118(net118, day118):
    return run_time_varying(net118, day118, 11)


def pytest_terminal_summary(terminalreporter):
    try:
        from test_acceptance import RESULTS
    except ImportError:
        return
    if not RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(RESULTS):
        terminalreporter.write_line(RESULTS[number])
