import math

import numpy as np
import pytest

from barronwave.spectral import RadialSpectralFunction, build_radial_grid, hydrogen_function


@pytest.fixture(scope="session")
def graded():
    return build_radial_grid(60.0, 256, "graded")


@pytest.fixture(scope="session")
def psi(graded):
    return hydrogen_function(graded)


@pytest.fixture(scope="session")
def gaussian(graded):
    return RadialSpectralFunction.from_callable(graded, lambda r: np.exp(-0.5 * r * r), math.inf)
