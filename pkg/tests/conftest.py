import numpy as np
import pytest

from heatdens import laws
from heatdens.density import Model
from heatdens.models import (make_brownian_bridge_process, make_brownian_motion_process,
                             make_general_sine_process, uniform_diffusion)
from heatdens.series import EvalPoint


@pytest.fixture(scope="session")
def diffusion():
    return uniform_diffusion(1.0, 2.0)


@pytest.fixture(scope="session")
def bb_model(diffusion):
    return Model(make_brownian_bridge_process(), diffusion)


@pytest.fixture(scope="session")
def bm_model(diffusion):
    return Model(make_brownian_motion_process(), diffusion)


@pytest.fixture(scope="session")
def quartic_model(diffusion):
    return Model(make_general_sine_process("inverse_cube_log", laws.quartic()), diffusion)


@pytest.fixture(scope="session")
def uniform_xi_model(diffusion):
    return Model(make_general_sine_process("inverse_cube_log", laws.uniform_unit_variance()), diffusion)


@pytest.fixture
def p05():
    return EvalPoint(0.5, 0.1)
