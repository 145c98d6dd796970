import numpy as np
import pytest

from fringearray.wavepacket import InterferometerSpec, spec_from_pattern_scales


@pytest.fixture
def small_spec():
    """Modest cat (t_k = 2, k*x0 = 2) used by the grid-evolution tests."""
    return InterferometerSpec(m=1.0, omega=1.0, alpha_r=-2.0, alpha_i=1.0)


@pytest.fixture
def fringe_spec():
    """Display regime: k*x0 = 1e-3 and sigma/x0 = 1e4 (k sigma = 10), x0 = 1."""
    return spec_from_pattern_scales(1e-3, 1e4, m=0.5)


@pytest.fixture
def rng():
    return np.random.default_rng(1234)
