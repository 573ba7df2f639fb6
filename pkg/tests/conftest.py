import numpy as np
import pytest

from amlediff.heston import HestonParams, heston_model
from amlediff.model import ModelSpec, ParameterDomain
from amlediff.numerics import NoiseSource
from amlediff.simulate import TimeGrid, euler_simulate


def scalar_model(drift, jac, diffusion=1.0, hess=None, affine=True, grad_g=None, box=(-10.0, 10.0), name="scalar"):
    """k = d = 1 model with constant diffusion; callbacks take x[..., 1], theta[1]."""

    def nu(x):
        return np.full(np.shape(x)[:-1] + (1, 1), float(diffusion))

    return ModelSpec(
        name=name,
        k=1,
        d=1,
        drift=drift,
        diffusion=nu,
        drift_jac_theta=jac,
        drift_hess_theta=hess,
        grad_g_analytic=grad_g,
        theta_domain=ParameterDomain(np.array([box[0]]), np.array([box[1]])),
        drift_affine=affine,
    )


@pytest.fixture(scope="session")
def constant_drift():
    """mu(x, theta) = theta, nu = 1."""
    return scalar_model(
        lambda x, th: np.broadcast_to(th[0], np.shape(x)).astype(float),
        lambda x, th: np.ones(np.shape(x) + (1,)),
    )


@pytest.fixture(scope="session")
def heston_params():
    return HestonParams()


@pytest.fixture(scope="session")
def heston(heston_params):
    return heston_model(heston_params)


@pytest.fixture(scope="session")
def heston_paths(heston, heston_params):
    """Eight seeded Heston paths on 2^10 steps."""
    grid = TimeGrid(1.0, 1 << 10)
    return [
        euler_simulate(heston, heston_params.theta, heston_params.initial_state, grid, NoiseSource(2024, s))
        for s in range(8)
    ]


def rel_err(a, b):
    a, b = np.asarray(a, dtype=float), np.asarray(b, dtype=float)
    return float(np.max(np.abs(a - b)) / max(np.max(np.abs(b)), 1e-300))
