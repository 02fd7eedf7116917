import numpy as np
import pytest
from scipy import integrate


def inc_beta_quad(c, a, b):
    """Quadrature route to the lower incomplete beta, independent of the package."""
    val, _ = integrate.quad(
        lambda t: t ** (a - 1.0) * (1.0 - t) ** (b - 1.0),
        0.0,
        c,
        epsabs=1e-15,
        epsrel=1e-13,
        limit=400,
    )
    return val


def trunc_mean_quad(a, b, c):
    return inc_beta_quad(c, a + 1.0, b) / inc_beta_quad(c, a, b)


@pytest.fixture
def rng():
    return np.random.default_rng(20240817)
