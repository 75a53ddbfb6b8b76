import sys

import numpy as np
import pytest

from hnlslab.lattice import DomainSpec, SpectralField


@pytest.fixture(scope="session")
def small_domain():
    return DomainSpec(8.0, 64, 8, 2)


@pytest.fixture(scope="session")
def random_field(small_domain):
    rng = np.random.default_rng(7)
    shape = (small_domain.n_x, small_domain.n_y)
    return SpectralField(small_domain, rng.standard_normal(shape) + 1j * rng.standard_normal(shape))


def pytest_terminal_summary(terminalreporter):
    mod = next((m for name, m in list(sys.modules.items()) if name.endswith("test_acceptance")), None)
    lines = getattr(mod, "LINES", None)
    if lines:
        terminalreporter.section("acceptance criteria")
        for line in lines:
            terminalreporter.write_line(line)
