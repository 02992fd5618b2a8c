import math

import numpy as np
import pytest

from symcool.configio import load_config


@pytest.fixture(scope="session")
def baseline():
    return load_config("paper-baseline.cfg")


@pytest.fixture(scope="session")
def improved():
    return load_config("improved.cfg")


@pytest.fixture(scope="session")
def cavity_endpoints(baseline):
    """(F, kappa) pairs at the two maximal-slope points; expensive, shared."""
    from symcool.scenarios import cavity_model
    model = cavity_model(baseline)
    return model.finesse_endpoints()


@pytest.fixture(scope="session")
def cool_result(baseline):
    """The 20-seed figure-2a replay; shared between dynamics and acceptance."""
    from symcool.scenarios import run_cool
    return run_cool(baseline, seeds=range(1, 21))


@pytest.fixture(scope="session")
def no_atoms_equilibrium_result(baseline):
    from symcool.scenarios import no_atoms_equilibrium
    return no_atoms_equilibrium(baseline, seeds=range(1, 21), duration=6.0)
