"""Diffusion models dX = mu(X, theta) dt + nu(X) dW and their diagnostics.

All model callbacks are vectorised over leading axes: a state argument has
shape ``(..., k)`` and outputs carry the same leading axes. ``theta`` is
always a single vector of length ``d``.

=================  ==========================  ===================
callback           signature                   output shape
=================  ==========================  ===================
drift              (x, theta)                  (..., k)
drift_jac_theta    (x, theta)                  (..., k, d)
drift_hess_theta   (x, theta)                  (..., k, d, d)
diffusion          (x)                         (..., k, k)
grad_g_analytic    (x, theta, j)               (..., k, k)
domain_guard       (x)                         (..., k)
domain_member      (x)                         bool, (..., k)
=================  ==========================  ===================

``domain_member`` answers per component so that errors can name the
offending coordinate; a state is in the domain when all components are.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .errors import DomainError, InputError, SingularDiffusionError
from .numerics import DEFAULT_RANK_TOL, sym_eigen

FD_THETA_STEP = 1e-6


def _identity(x):
    return x


def _finite(x):
    return np.isfinite(x)


@dataclass(frozen=True)
class ParameterDomain:
    """Axis-aligned box standing in for the open parameter set."""

    lower: np.ndarray
    upper: np.ndarray

    def __post_init__(self):
        lo = np.asarray(self.lower, dtype=float)
        hi = np.asarray(self.upper, dtype=float)
        if lo.shape != hi.shape or lo.ndim != 1:
            raise InputError("box bounds must be vectors of equal length")
        if not (np.all(np.isfinite(lo)) and np.all(np.isfinite(hi))):
            raise InputError("box must be bounded")
        if np.any(lo >= hi):
            raise InputError("box requires lower < upper componentwise")
        object.__setattr__(self, "lower", lo)
        object.__setattr__(self, "upper", hi)

    @property
    def center(self) -> np.ndarray:
        return 0.5 * (self.lower + self.upper)

    def contains(self, theta) -> bool:
        theta = np.asarray(theta, dtype=float)
        return bool(np.all(theta > self.lower) and np.all(theta < self.upper))

    def project(self, theta) -> np.ndarray:
        return np.clip(theta, self.lower, self.upper)

    def on_boundary(self, theta) -> bool:
        theta = np.asarray(theta, dtype=float)
        return bool(np.any(theta <= self.lower) or np.any(theta >= self.upper))


@dataclass(frozen=True)
class ModelSpec:
    name: str
    k: int
    d: int
    drift: Callable
    diffusion: Callable
    drift_jac_theta: Callable | None = None
    drift_hess_theta: Callable | None = None
    grad_g_analytic: Callable | None = None
    domain_guard: Callable = _identity
    domain_member: Callable = _finite
    theta_domain: ParameterDomain | None = None
    param_names: tuple = ()
    state_names: tuple = ()
    drift_affine: bool = False
    params: dict = field(default_factory=dict)

    def __post_init__(self):
        if not self.param_names:
            object.__setattr__(self, "param_names", tuple(f"theta{j + 1}" for j in range(self.d)))
        if not self.state_names:
            object.__setattr__(self, "state_names", tuple(f"x{i + 1}" for i in range(self.k)))
        if len(self.param_names) != self.d or len(self.state_names) != self.k:
            raise InputError("name tuples must match the declared dimensions")
        if self.theta_domain is not None and self.theta_domain.lower.size != self.d:
            raise InputError("parameter box has the wrong dimension")


@dataclass(frozen=True)
class EllipticityReport:
    min_eigenvalue: float
    arg_min: np.ndarray
    uniform: bool


def check_theta(model: ModelSpec, theta) -> np.ndarray:
    theta = np.asarray(theta, dtype=float).reshape(-1)
    if theta.size != model.d:
        raise InputError(f"{model.name}: expected {model.d} parameters, got {theta.size}")
    if not np.all(np.isfinite(theta)):
        raise InputError("parameter vector has non-finite entries")
    return theta


def check_states(model: ModelSpec, x) -> np.ndarray:
    x = np.asarray(x, dtype=float)
    if x.shape[-1:] != (model.k,):
        raise InputError(f"{model.name}: expected states with {model.k} components, got shape {x.shape}")
    member = np.broadcast_to(np.asarray(model.domain_member(x), dtype=bool), x.shape)
    if not np.all(member):
        bad = np.argwhere(~member)[0]
        comp = int(bad[-1])
        where = f" at point {tuple(int(i) for i in bad[:-1])}" if x.ndim > 1 else ""
        raise DomainError(
            f"{model.name}: state component {model.state_names[comp]}={x[tuple(bad)]!r} "
            f"outside the state space{where}"
        )
    return x


def eval_drift(model: ModelSpec, x, theta) -> np.ndarray:
    x = check_states(model, x)
    return np.asarray(model.drift(x, check_theta(model, theta)), dtype=float)


def eval_diffusion_matrix(model: ModelSpec, x) -> np.ndarray:
    """S(x) = nu(x) nu(x)^T, exactly symmetric."""
    x = check_states(model, x)
    nu = np.asarray(model.diffusion(x), dtype=float)
    S = nu @ np.swapaxes(nu, -1, -2)
    return 0.5 * (S + np.swapaxes(S, -1, -2))


def drift_jacobian(model: ModelSpec, x, theta) -> np.ndarray:
    """Columns are the theta-derivatives of the drift; FD fallback if not supplied."""
    theta = check_theta(model, theta)
    x = np.asarray(x, dtype=float)
    if model.drift_jac_theta is not None:
        return np.asarray(model.drift_jac_theta(x, theta), dtype=float)
    cols = []
    for j in range(model.d):
        h = FD_THETA_STEP * (1.0 + abs(theta[j]))
        tp, tm = theta.copy(), theta.copy()
        tp[j] += h
        tm[j] -= h
        cols.append((model.drift(x, tp) - model.drift(x, tm)) / (tp[j] - tm[j]))
    return np.stack(cols, axis=-1)


def drift_hessian(model: ModelSpec, x, theta) -> np.ndarray:
    theta = check_theta(model, theta)
    if model.drift_hess_theta is not None:
        return np.asarray(model.drift_hess_theta(x, theta), dtype=float)
    if model.drift_affine:
        x = np.asarray(x, dtype=float)
        return np.zeros(x.shape + (model.d, model.d))
    slabs = []
    for j in range(model.d):
        h = 1e-4 * (1.0 + abs(theta[j]))
        tp, tm = theta.copy(), theta.copy()
        tp[j] += h
        tm[j] -= h
        slabs.append((drift_jacobian(model, x, tp) - drift_jacobian(model, x, tm)) / (tp[j] - tm[j]))
    H = np.stack(slabs, axis=-1)
    return 0.5 * (H + np.swapaxes(H, -1, -2))


def invert_diffusion_matrix(S, rank_tol=DEFAULT_RANK_TOL) -> np.ndarray:
    """Inverse of a symmetric positive definite S (or stack) via eigendecomposition.

    Raises SingularDiffusionError when the smallest eigenvalue is not above
    ``rank_tol`` times the largest; for a stack the error carries the index
    of the first offending matrix.
    """
    eig = sym_eigen(S)
    lam, U = eig.eigenvalues, eig.eigenvectors
    top = lam[..., 0]
    bottom = lam[..., -1]
    bad = ~((top > 0.0) & (bottom > rank_tol * top))
    if np.any(bad):
        idx = np.argwhere(np.atleast_1d(bad))[0]
        index = int(idx[0]) if np.ndim(bad) else None
        worst = float(np.atleast_1d(bottom)[tuple(idx)])
        raise SingularDiffusionError(
            f"diffusion matrix is singular (smallest eigenvalue {worst:.3e})"
            + (f" at index {index}" if index is not None else ""),
            index=index,
        )
    inv = (U / lam[..., None, :]) @ np.swapaxes(U, -1, -2)
    return 0.5 * (inv + np.swapaxes(inv, -1, -2))


def sensitivity_g(model: ModelSpec, x, theta, j: int, S_inv=None) -> np.ndarray:
    """g_j(x, theta) = S(x)^{-1} d_j mu(x, theta), with j zero-based."""
    if not 0 <= j < model.d:
        raise InputError(f"parameter index {j} out of range for d={model.d}")
    x = np.asarray(x, dtype=float)
    if S_inv is None:
        S_inv = invert_diffusion_matrix(eval_diffusion_matrix(model, x))
    dmu = drift_jacobian(model, x, theta)[..., j]
    return np.einsum("...pq,...q->...p", S_inv, dmu)


def check_uniform_ellipticity(model: ModelSpec, sample, threshold: float) -> EllipticityReport:
    """Smallest eigenvalue of S over a sample of states (e.g. a path)."""
    sample = np.asarray(sample, dtype=float).reshape(-1, model.k)
    if sample.shape[0] == 0:
        raise InputError("sample must be nonempty")
    lam = sym_eigen(eval_diffusion_matrix(model, sample)).eigenvalues[:, -1]
    i = int(np.argmin(lam))
    return EllipticityReport(float(lam[i]), sample[i].copy(), bool(lam[i] >= threshold))


def check_drift_jacobian(model: ModelSpec, x, theta, rel_tol=1e-5) -> float:
    """Largest relative mismatch between drift_jac_theta and central differences."""
    theta = check_theta(model, theta)
    analytic = drift_jacobian(model, x, theta)
    worst = 0.0
    for j in range(model.d):
        h = FD_THETA_STEP * (1.0 + abs(theta[j]))
        tp, tm = theta.copy(), theta.copy()
        tp[j] += h
        tm[j] -= h
        fd = (model.drift(x, tp) - model.drift(x, tm)) / (tp[j] - tm[j])
        col = analytic[..., j]
        scale = max(1.0, float(np.abs(col).max(initial=0.0)))
        worst = max(worst, float(np.abs(col - fd).max(initial=0.0)) / scale)
    return worst
