import numpy as np
import pytest

from loadid import scenarios, space


@pytest.fixture(scope="session")
def s1_spec():
    return scenarios.builtin_scenario("S1")


@pytest.fixture(scope="session")
def s1_series(s1_spec):
    return scenarios.synthesize_measurements(s1_spec)


@pytest.fixture(scope="session")
def grid100():
    return space.build_grid(100)


@pytest.fixture(scope="session")
def all_scenarios():
    return scenarios.builtin_catalog()


def random_feasible_params(rng, series=None):
    """Uniform draw from the default ranges, retried until the steady-state
    initialization succeeds at the nominal operating point."""
    from loadid.loadmodel import init_steady_state
    from loadid.errors import InfeasibleOperatingPointError

    lo = np.array([r[1] for r in space.DEFAULT_RANGES])
    hi = np.array([r[2] for r in space.DEFAULT_RANGES])
    while True:
        params = space.params_from_vector(lo + rng.random(13) * (hi - lo))
        try:
            init_steady_state(params, 1.0, 1.0, 0.5)
            return params
        except InfeasibleOperatingPointError:
            continue
