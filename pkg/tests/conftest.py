import numpy as np
import pytest

from proxpnp.experiments import gen_cs_instance


@pytest.fixture(scope="session")
def toy_cs():
    """The seeded toy compressive-sensing instance used across tests."""
    inst, gamma_op, dict_op = gen_cs_instance(50, 20, 100, seed=0)
    return inst, gamma_op, dict_op


@pytest.fixture()
def rng():
    return np.random.default_rng(1234)
