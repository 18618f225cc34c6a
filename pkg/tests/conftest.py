import numpy as np
import pytest

from horolab import HyperbolicMetric, PerturbedMetric, build_genus2_group


@pytest.fixture(scope="session")
def group():
    return build_genus2_group()


@pytest.fixture(scope="session")
def hyp():
    return HyperbolicMetric()


@pytest.fixture(scope="session")
def pert(group):
    return PerturbedMetric(group, eps=0.01)


@pytest.fixture(scope="session")
def pert0(group):
    return PerturbedMetric(group, eps=0.0)


class FlatMetric:
    """Euclidean unit disk chart: lambda = 1, K = 0, frames never move."""

    kind = "flat"

    def local(self, z, curvature=True):
        z = np.asarray(z)
        K = np.zeros(z.shape) if curvature else None
        return np.ones(z.shape), np.zeros(z.shape, dtype=complex), K

    def factor(self, z):
        return np.ones(np.shape(z))

    def recenter(self, w, theta):
        return w, theta, None, None, None


class SphereMetric(FlatMetric):
    """Round sphere in stereographic coordinates, K = +1 (conjugate points at pi)."""

    kind = "sphere"

    def local(self, z, curvature=True):
        z = np.asarray(z)
        s = 1 + np.abs(z) ** 2
        K = np.ones(z.shape) if curvature else None
        return 2 / s, -2 * z / s, K


@pytest.fixture
def flat():
    return FlatMetric()


@pytest.fixture
def sphere():
    return SphereMetric()


def pytest_terminal_summary(terminalreporter):
    import sys

    mod = sys.modules.get("test_acceptance") or sys.modules.get("tests.test_acceptance")
    results = getattr(mod, "RESULTS", None)
    if not results:
        return
    terminalreporter.section("acceptance criteria")
    for n in sorted(results):
        terminalreporter.write_line(results[n])
