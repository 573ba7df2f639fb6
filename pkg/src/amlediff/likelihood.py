"""Approximate log-likelihood of a discretely observed diffusion.

    l_n(theta) = sum_i <S^{-1}(X_{i-1}) mu(X_{i-1}, theta) | X_i - X_{i-1}>
                 - dt/2 sum_i <S^{-1}(X_{i-1}) mu(X_{i-1}, theta) | mu(X_{i-1}, theta)>

The theta-free Gaussian normalising constant is dropped, so values are only
comparable along one path and grid.
"""
from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property

import numpy as np

from .errors import SingularDiffusionError
from .model import (
    ModelSpec,
    check_states,
    check_theta,
    drift_hessian,
    drift_jacobian,
    eval_diffusion_matrix,
    invert_diffusion_matrix,
)
from .simulate import Path


@dataclass(frozen=True)
class LikelihoodEvaluation:
    value: float
    gradient: np.ndarray
    hessian: np.ndarray


class PathContext:
    """Per-path cache of left-point states, increments and S^{-1}.

    Build one per (model, path) and pass it to the evaluators to avoid
    re-inverting the diffusion matrices.
    """

    def __init__(self, model: ModelSpec, path: Path):
        self.model = model
        self.path = path
        self.dt = path.grid.dt
        self.left = check_states(model, path.states[:-1])
        self.increments = np.diff(path.states, axis=0)

    @cached_property
    def S(self) -> np.ndarray:
        return eval_diffusion_matrix(self.model, self.left)

    @cached_property
    def S_inv(self) -> np.ndarray:
        try:
            return invert_diffusion_matrix(self.S)
        except SingularDiffusionError as exc:
            raise SingularDiffusionError(
                f"{exc} (grid point X_{exc.index})", index=exc.index
            ) from None

    @cached_property
    def nu(self) -> np.ndarray:
        return np.asarray(self.model.diffusion(self.left), dtype=float)


def apply_rows(M, v):
    """Row-wise matrix-vector product: (n, p, q) x (n, q) -> (n, p)."""
    return (M @ v[..., None])[..., 0]


def gram(A, B):
    """sum_n A[n]^T B[n] for stacks (n, k, d) and (n, k, e)."""
    return A.reshape(-1, A.shape[-1]).T @ B.reshape(-1, B.shape[-1])


def _ctx(model, path, ctx):
    if ctx is None:
        return PathContext(model, path)
    return ctx


def loglik_n(model: ModelSpec, path: Path, theta, ctx: PathContext | None = None) -> float:
    c = _ctx(model, path, ctx)
    theta = check_theta(model, theta)
    mu = model.drift(c.left, theta)
    smu = apply_rows(c.S_inv, mu)
    return float(np.sum(smu * c.increments) - 0.5 * c.dt * np.sum(smu * mu))


def grad_loglik_n(model: ModelSpec, path: Path, theta, ctx: PathContext | None = None) -> np.ndarray:
    c = _ctx(model, path, ctx)
    theta = check_theta(model, theta)
    resid = c.increments - c.dt * model.drift(c.left, theta)
    jac = drift_jacobian(model, c.left, theta)
    return gram(jac, apply_rows(c.S_inv, resid)[..., None])[:, 0]


def hess_loglik_n(model: ModelSpec, path: Path, theta, ctx: PathContext | None = None) -> np.ndarray:
    c = _ctx(model, path, ctx)
    theta = check_theta(model, theta)
    resid = c.increments - c.dt * model.drift(c.left, theta)
    jac = drift_jacobian(model, c.left, theta)
    H = -c.dt * gram(jac, c.S_inv @ jac)
    if not model.drift_affine:
        sr = apply_rows(c.S_inv, resid)
        H = H + np.einsum("npij,np->ij", drift_hessian(model, c.left, theta), sr)
    return 0.5 * (H + H.T)


def evaluate(model: ModelSpec, path: Path, theta, ctx: PathContext | None = None) -> LikelihoodEvaluation:
    c = _ctx(model, path, ctx)
    return LikelihoodEvaluation(
        loglik_n(model, path, theta, c),
        grad_loglik_n(model, path, theta, c),
        hess_loglik_n(model, path, theta, c),
    )
