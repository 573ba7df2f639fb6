"""Heston stochastic-volatility model and its closed forms.

State order is (Y, X) with Y the variance factor:

    dY = (a - b Y) dt + sigma1 sqrt(Y) dW1
    dX = (alpha - beta Y) dt + sigma2 sqrt(Y) (rho dW1 + sqrt(1 - rho^2) dW2)

Parameter order is (a, b, alpha, beta). Because the drift is affine in the
parameters and S(Y) = Y * C for a constant correlation matrix C, the AMLE,
the discretised covariance and the Hessian of the approximate
log-likelihood all have closed forms. They are used as independent oracles
for the generic code paths.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import DomainError, InputError, NonIdentifiedError
from .model import ModelSpec, ParameterDomain
from .numerics import kron
from .simulate import Path

Y_FLOOR = 1e-12
PARAM_NAMES = ("a", "b", "alpha", "beta")


@dataclass(frozen=True)
class HestonParams:
    a: float = 2.0
    b: float = -0.8
    alpha: float = 0.02
    beta: float = 2.0
    sigma1: float = 0.7
    sigma2: float = 0.6
    rho: float = -0.8
    y0: float = 0.5
    x0: float = math.log(100.0)
    T: float = 1.0

    def __post_init__(self):
        vals = [getattr(self, f) for f in self.__dataclass_fields__]
        if not all(math.isfinite(float(v)) for v in vals):
            raise InputError("Heston parameters must be finite")
        if self.sigma1 <= 0 or self.sigma2 <= 0:
            raise InputError("sigma1 and sigma2 must be positive")
        if not -1.0 < self.rho < 1.0:
            raise InputError("rho must lie in (-1, 1)")
        if self.y0 <= 0:
            raise InputError("y0 must be positive")
        if self.T <= 0:
            raise InputError("T must be positive")

    @property
    def feller_ok(self) -> bool:
        return self.a >= 0.5 * self.sigma1 ** 2

    @property
    def theta(self) -> np.ndarray:
        return np.array([self.a, self.b, self.alpha, self.beta])

    @property
    def initial_state(self) -> np.ndarray:
        return np.array([self.y0, self.x0])

    def correlation_matrix(self) -> np.ndarray:
        """C with S(Y) = Y * C."""
        s1, s2, r = self.sigma1, self.sigma2, self.rho
        return np.array([[s1 * s1, s1 * s2 * r], [s1 * s2 * r, s2 * s2]])

    def correlation_inverse(self) -> np.ndarray:
        s1, s2, r = self.sigma1, self.sigma2, self.rho
        G = 1.0 / (s1 * s1 * s2 * s2 * (1.0 - r * r))
        return G * np.array([[s2 * s2, -s1 * s2 * r], [-s1 * s2 * r, s1 * s1]])


def heston_model(params: HestonParams | None = None, box_halfwidth: float = 100.0) -> ModelSpec:
    p = params or HestonParams()
    s1, s2, rho = p.sigma1, p.sigma2, p.rho
    c_inv = p.correlation_inverse()
    root = math.sqrt(1.0 - rho * rho)

    def drift(x, theta):
        y = x[..., 0]
        return np.stack([theta[0] - theta[1] * y, theta[2] - theta[3] * y], axis=-1)

    def drift_jac_theta(x, theta):
        y = x[..., 0]
        one, zero = np.ones_like(y), np.zeros_like(y)
        return np.stack(
            [np.stack([one, -y, zero, zero], axis=-1), np.stack([zero, zero, one, -y], axis=-1)],
            axis=-2,
        )

    def drift_hess_theta(x, theta):
        return np.zeros(np.shape(x)[:-1] + (2, 4, 4))

    def diffusion(x):
        sy = np.sqrt(np.maximum(x[..., 0], 0.0))
        nu = np.zeros(np.shape(x)[:-1] + (2, 2))
        nu[..., 0, 0] = s1 * sy
        nu[..., 1, 0] = s2 * rho * sy
        nu[..., 1, 1] = s2 * root * sy
        return nu

    def grad_g(x, theta, j):
        # g_a = C^{-1} e1 / Y and g_alpha = C^{-1} e2 / Y depend on Y only;
        # g_b and g_beta are constant in the state.
        y = x[..., 0]
        out = np.zeros(np.shape(x)[:-1] + (2, 2))
        if j in (0, 2):
            col = c_inv[:, j // 2]
            out[..., :, 0] = -col / (y * y)[..., None]
        return out

    def guard(x):
        x = np.array(x, dtype=float, copy=True)
        x[..., 0] = np.maximum(x[..., 0], Y_FLOOR)
        return x

    def member(x):
        ok = np.isfinite(x)
        ok[..., 0] &= x[..., 0] > 0.0
        return ok

    return ModelSpec(
        name="heston",
        k=2,
        d=4,
        drift=drift,
        diffusion=diffusion,
        drift_jac_theta=drift_jac_theta,
        drift_hess_theta=drift_hess_theta,
        grad_g_analytic=grad_g,
        domain_guard=guard,
        domain_member=member,
        theta_domain=ParameterDomain(np.full(4, -box_halfwidth), np.full(4, box_halfwidth)),
        param_names=PARAM_NAMES,
        state_names=("Y", "X"),
        drift_affine=True,
        params={"sigma1": s1, "sigma2": s2, "rho": rho},
    )


def _grid_sums(path: Path):
    Y = path.states[:, 0]
    if np.any(Y[:-1] <= 0.0):
        i = int(np.argmax(Y[:-1] <= 0.0))
        raise DomainError(f"variance factor Y={Y[i]!r} is not positive at index {i}")
    return Y[:-1], path.grid.dt, path.grid.horizon


def heston_amle(path: Path) -> np.ndarray:
    """Closed-form maximiser of the approximate log-likelihood, order (a, b, alpha, beta)."""
    Ym, dt, T = _grid_sums(path)
    Y, X = path.states[:, 0], path.states[:, 1]
    sum_y = Ym.sum()
    sum_inv = (1.0 / Ym).sum()
    den = dt * dt * sum_y * sum_inv - T * T
    if not den > 1e-12 * T * T:
        raise NonIdentifiedError(
            "Heston AMLE not identified: dt^2 * sum(Y) * sum(1/Y) - T^2 is zero (Y constant on the grid)"
        )
    F = 1.0 / den
    dy_over_y = (np.diff(Y) / Ym).sum()
    dx_over_y = (np.diff(X) / Ym).sum()
    dY = Y[-1] - Y[0]
    dX = X[-1] - X[0]
    return F * np.array([
        dt * sum_y * dy_over_y - T * dY,
        T * dy_over_y - dt * dY * sum_inv,
        dt * sum_y * dx_over_y - T * dX,
        T * dx_over_y - dt * dX * sum_inv,
    ])


def heston_mle_fine(fine_path: Path) -> np.ndarray:
    """MLE proxy: the closed-form AMLE evaluated on the finest simulation grid."""
    return heston_amle(fine_path)


def heston_sigma_n(path: Path, params: HestonParams) -> np.ndarray:
    Ym, dt, _ = _grid_sums(path)
    s1, s2, r = params.sigma1, params.sigma2, params.rho
    q = 1.0 - r * r
    pattern = np.zeros((4, 4))
    pattern[0, 0] = 1.0 / q
    pattern[0, 2] = pattern[2, 0] = -s1 * r / (s2 * q)
    pattern[2, 2] = s1 * s1 / (s2 * s2 * q)
    return 0.5 * dt * (1.0 / (Ym * Ym)).sum() * pattern


def heston_hessian(path: Path, params: HestonParams) -> np.ndarray:
    Ym, dt, T = _grid_sums(path)
    s1, s2, r = params.sigma1, params.sigma2, params.rho
    G = 1.0 / (s1 * s1 * s2 * s2 * (1.0 - r * r))
    corr = np.array([[s2 * s2, -s1 * s2 * r], [-s1 * s2 * r, s1 * s1]])
    grid = np.array([[-dt * (1.0 / Ym).sum(), T], [T, -dt * Ym.sum()]])
    return G * kron(corr, grid)
