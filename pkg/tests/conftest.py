import numpy as np
import pytest
from hypothesis import HealthCheck, settings

from gdm_pme.hmm import build_hmm
from gdm_pme.mesh import generate_polygonal, generate_triangular
from gdm_pme.mlp1 import build_mlp1

settings.register_profile("default", deadline=None, max_examples=60,
                          suppress_health_check=[HealthCheck.function_scoped_fixture])
settings.load_profile("default")


@pytest.fixture
def rng():
    return np.random.default_rng(20190611)


@pytest.fixture(scope="session")
def tri4():
    return generate_triangular(4)


@pytest.fixture(scope="session")
def hex4():
    return generate_polygonal(4)


@pytest.fixture(scope="session", params=["mlp1-tri", "hmm-hex", "hmm-tri"])
def small_gd(request):
    """A small discretisation of each backend/mesh pairing."""
    if request.param == "mlp1-tri":
        return build_mlp1(generate_triangular(5))
    if request.param == "hmm-hex":
        return build_hmm(generate_polygonal(4))
    return build_hmm(generate_triangular(4))


_ACCEPTANCE = pytest.StashKey[dict]()


def pytest_configure(config):
    config.stash[_ACCEPTANCE] = {}


@pytest.fixture
def acceptance_line(request):
    """Record the one-line verdict of an acceptance criterion, printed in the terminal summary."""
    def record(number, passed, detail):
        request.config.stash[_ACCEPTANCE][number] = f"criterion {number}: {'PASS' if passed else 'FAIL'}  {detail}"
        print(request.config.stash[_ACCEPTANCE][number])
    return record


def pytest_terminal_summary(terminalreporter, config):
    lines = config.stash.get(_ACCEPTANCE, {})
    if lines:
        terminalreporter.section("acceptance criteria")
        for number in sorted(lines):
            terminalreporter.write_line(lines[number])
