import numpy as np
import pytest

from pdmplab.rotcontract import make_box, make_fields


@pytest.fixture(scope="session")
def rc_fields():
    return make_fields()


@pytest.fixture(scope="session")
def rc_box():
    return make_box()


@pytest.fixture()
def rng():
    return np.random.default_rng(20240817)


def random_smooth_field(rng, dim=2, label=1):
    """A random trigonometric-polynomial field, bounded and smooth."""
    from pdmplab.vecfield import expression_field

    comps = []
    for _ in range(dim):
        a = rng.uniform(-1, 1, size=4)
        terms = [
            f"{a[0]:.6f}",
            f"{a[1]:.6f}*sin(x1)",
            f"{a[2]:.6f}*cos(x{dim})",
            f"{a[3]:.6f}*tanh(x1*x{dim})",
        ]
        comps.append(" + ".join(terms))
    return expression_field(comps, dim, label=label)


def pytest_configure(config):
    config.addinivalue_line("markers", "acceptance: full-budget acceptance checks")
