"""Named models for CLI/config selection."""
from __future__ import annotations

import numpy as np

from .errors import InputError
from .heston import HestonParams, heston_model
from .model import ModelSpec, ParameterDomain


def ou_model(sigma1: float = 0.5, sigma2: float = 0.5, box_halfwidth: float = 100.0) -> ModelSpec:
    """Two independent mean-reverting coordinates, drift (t1 - t2 x1, t3 - t4 x2).

    Constant diagonal diffusion, so S^{-1} is constant and g_2, g_4 are
    linear in the state.
    """
    if sigma1 <= 0 or sigma2 <= 0:
        raise InputError("OU volatilities must be positive")
    s_inv = np.array([1.0 / sigma1 ** 2, 1.0 / sigma2 ** 2])

    def drift(x, theta):
        return np.stack([theta[0] - theta[1] * x[..., 0], theta[2] - theta[3] * x[..., 1]], axis=-1)

    def jac(x, theta):
        one, zero = np.ones(np.shape(x)[:-1]), np.zeros(np.shape(x)[:-1])
        return np.stack(
            [
                np.stack([one, -x[..., 0], zero, zero], axis=-1),
                np.stack([zero, zero, one, -x[..., 1]], axis=-1),
            ],
            axis=-2,
        )

    def diffusion(x):
        nu = np.zeros(np.shape(x)[:-1] + (2, 2))
        nu[..., 0, 0] = sigma1
        nu[..., 1, 1] = sigma2
        return nu

    def grad_g(x, theta, j):
        out = np.zeros(np.shape(x)[:-1] + (2, 2))
        if j == 1:
            out[..., 0, 0] = -s_inv[0]
        elif j == 3:
            out[..., 1, 1] = -s_inv[1]
        return out

    return ModelSpec(
        name="ou",
        k=2,
        d=4,
        drift=drift,
        diffusion=diffusion,
        drift_jac_theta=jac,
        drift_hess_theta=lambda x, theta: np.zeros(np.shape(x)[:-1] + (2, 4, 4)),
        grad_g_analytic=grad_g,
        theta_domain=ParameterDomain(np.full(4, -box_halfwidth), np.full(4, box_halfwidth)),
        param_names=("m1", "k1", "m2", "k2"),
        drift_affine=True,
        params={"sigma1": sigma1, "sigma2": sigma2},
    )


def _heston(params: dict):
    fields = HestonParams.__dataclass_fields__
    return heston_model(HestonParams(**{k: float(v) for k, v in params.items() if k in fields}))


def _ou(params: dict):
    return ou_model(**{k: float(v) for k, v in params.items() if k in ("sigma1", "sigma2")})


REGISTRY = {"heston": _heston, "ou": _ou}

# defaults used by the CLI when a config does not set them
DEFAULTS = {
    "heston": {
        "theta": HestonParams().theta,
        "x0": HestonParams().initial_state,
    },
    "ou": {
        "theta": np.array([0.0, 1.0, 0.0, 1.0]),
        "x0": np.array([0.0, 0.0]),
    },
}


def build_model(name: str, params: dict | None = None) -> ModelSpec:
    try:
        builder = REGISTRY[name]
    except KeyError:
        raise InputError(f"unknown model {name!r}; choose one of {sorted(REGISTRY)}") from None
    return builder(params or {})


def register(name: str, builder) -> None:
    """Add a code-level model; ``builder`` maps a parameter dict to a ModelSpec."""
    REGISTRY[name] = builder
