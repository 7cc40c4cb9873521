import numpy as np
import pytest

from clotkit.matrices import DeVoreParams, devore_matrix, fixture_matrix


@pytest.fixture(scope="session")
def devore_5_2():
    return devore_matrix(DeVoreParams(5, 2), normalize=True)


@pytest.fixture(scope="session")
def gaussian_30_36():
    return fixture_matrix("gaussian", 30, 36, seed=1)


@pytest.fixture()
def rng():
    return np.random.default_rng(12345)
