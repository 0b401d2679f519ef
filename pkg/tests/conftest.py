import numpy as np
import pytest
from hypothesis import HealthCheck, settings

from melscat.flow import flow_perturbed, homoclinic_point, separatrix
from melscat.geometry import stable_graph_y
from melscat.melnikov import master_plus, splitting_integral
from melscat.model import ExtendedState, SystemSpec, hamiltonian_to_field

import helpers

settings.register_profile(
    "suite", deadline=None, max_examples=50, derandomize=True,
    suppress_health_check=[HealthCheck.too_slow])
settings.load_profile("suite")


@pytest.fixture(scope="session")
def spec() -> SystemSpec:
    return SystemSpec.standard()


@pytest.fixture(scope="session")
def single_field(spec):
    return hamiltonian_to_field(spec, helpers.SINGLE_H1)


@pytest.fixture(scope="session")
def multi_field(spec):
    return hamiltonian_to_field(spec, helpers.MULTI_H1)


@pytest.fixture(scope="session", autouse=True)
def _warm_kernels():
    """Touch every jitted entry point once so compilation (or loading the
    on-disk cache) happens before any timed test runs."""
    spec = SystemSpec.standard()
    field = hamiltonian_to_field(spec, helpers.SINGLE_H1)
    z = ExtendedState([0.1], [0.2], [0.5], [0.1], 0.0)
    flow_perturbed(spec, field, z, 0.5, 1e-3)
    separatrix(spec)
    splitting_integral(spec, field, 0.0, 0.5, 0.2, 0.0)
    zh = homoclinic_point(spec, 0.0, 0.5, 0.2, 0.0)
    master_plus(spec, field, "I1", zh, 0.0)
    master_plus(spec, field, "I1", zh, 1e-3)
    stable_graph_y(spec, field, 0.0, 0.5, 0.2, 0.0, 1e-3)
    from melscat.verify import integrator_order_experiment
    integrator_order_experiment(spec, T=1.0, steps=(4, 5, 6, 8))


@pytest.fixture
def rng():
    return np.random.default_rng(20240817)


_ACCEPTANCE_LINES: list[str] = []


@pytest.fixture(scope="session")
def acceptance_log() -> list[str]:
    """Shared sink for the one-line acceptance verdicts."""
    return _ACCEPTANCE_LINES


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    if _ACCEPTANCE_LINES:
        terminalreporter.write_sep("-", "acceptance gate")
        for line in _ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
