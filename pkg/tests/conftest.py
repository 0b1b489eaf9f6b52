import numpy as np
import pytest

from blockworld.objects import REFERENCE_SEED, generate_l1, generate_l2


@pytest.fixture(scope="session")
def l1_specs():
    return generate_l1(REFERENCE_SEED)


@pytest.fixture(scope="session")
def l2_specs():
    return generate_l2(REFERENCE_SEED)


@pytest.fixture(scope="session")
def rng():
    return np.random.default_rng(20260810)
