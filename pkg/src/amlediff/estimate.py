"""Approximate maximum likelihood estimation of drift parameters."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import NonIdentifiedError, SingularSystemError
from .likelihood import PathContext, apply_rows, grad_loglik_n, gram, hess_loglik_n, loglik_n
from .model import ModelSpec, check_theta, drift_jacobian
from .numerics import solve_linear, sym_eigen
from .simulate import Path

DEFAULT_TOL = 1e-10
DEFAULT_MAX_ITER = 100


@dataclass(frozen=True)
class EstimateResult:
    theta_hat: np.ndarray
    grad_norm: float
    hessian_max_eigenvalue: float
    converged: bool
    iterations: int
    method: str
    at_boundary: bool = False
    in_domain: bool = True

    @property
    def negative_definite(self) -> bool:
        return self.hessian_max_eigenvalue < 0.0


def _diagnose(model, path, ctx, theta, tol, iterations, method, at_boundary=False):
    value = loglik_n(model, path, theta, ctx)
    g = grad_loglik_n(model, path, theta, ctx)
    H = hess_loglik_n(model, path, theta, ctx)
    grad_norm = float(np.max(np.abs(g), initial=0.0))
    top = float(sym_eigen(H).eigenvalues[0])
    box = model.theta_domain
    in_domain = True if box is None else box.contains(theta)
    ok = grad_norm <= tol * (1.0 + abs(value)) and top < 0.0 and not at_boundary
    return EstimateResult(np.array(theta), grad_norm, top, bool(ok), iterations, method, at_boundary, in_domain)


def amle_linear(model: ModelSpec, path: Path, ctx: PathContext | None = None, tol: float = DEFAULT_TOL) -> EstimateResult:
    """Exact maximiser for drift affine in theta, mu(x, theta) = B(x) theta + c(x).

    Solves H theta = -r with H = -dt sum B^T S^{-1} B and
    r = sum B^T S^{-1} (dX - dt c).
    """
    if not model.drift_affine:
        raise ValueError(f"model {model.name!r} does not declare an affine drift")
    ctx = ctx or PathContext(model, path)
    zero = np.zeros(model.d)
    B = drift_jacobian(model, ctx.left, zero)
    c = model.drift(ctx.left, zero)
    H = -ctx.dt * gram(B, ctx.S_inv @ B)
    H = 0.5 * (H + H.T)
    r = gram(B, apply_rows(ctx.S_inv, ctx.increments - ctx.dt * c)[..., None])[:, 0]
    top = sym_eigen(H).eigenvalues[0]
    scale = np.abs(H).max(initial=0.0)
    if not (scale > 0.0 and top < -1e-12 * scale):
        raise NonIdentifiedError("normal equations are singular: drift parameters not identified on this path")
    try:
        theta = solve_linear(H, -r)
    except SingularSystemError as exc:
        raise NonIdentifiedError(f"normal equations are singular: {exc}") from None
    return _diagnose(model, path, ctx, theta, tol, 0, "closed-form-linear")


def amle_newton(
    model: ModelSpec,
    path: Path,
    init=None,
    tol: float = DEFAULT_TOL,
    max_iter: int = DEFAULT_MAX_ITER,
    ctx: PathContext | None = None,
) -> EstimateResult:
    """Projected damped Newton ascent on the approximate log-likelihood.

    The Newton direction solves ``-H step = g``; if H is not negative
    definite the step falls back to the gradient. Step lengths are halved
    until the objective increases. Iterates are clipped to the parameter
    box; a terminus on the box boundary is reported as not converged.
    """
    ctx = ctx or PathContext(model, path)
    box = model.theta_domain
    if init is None:
        init = box.center if box is not None else np.zeros(model.d)
    theta = check_theta(model, init).copy()
    if box is not None:
        theta = box.project(theta)

    value = loglik_n(model, path, theta, ctx)
    it = 0
    while True:
        g = grad_loglik_n(model, path, theta, ctx)
        if np.max(np.abs(g), initial=0.0) <= tol * (1.0 + abs(value)):
            break
        if it >= max_iter:
            break
        H = hess_loglik_n(model, path, theta, ctx)
        step = None
        if sym_eigen(H).eigenvalues[0] < 0.0:
            try:
                step = solve_linear(-H, g)
            except SingularSystemError:
                step = None
        if step is None:
            step = g / max(1.0, float(np.abs(H).max(initial=0.0)))

        alpha = 1.0
        moved = False
        for _ in range(60):
            trial = theta + alpha * step
            if box is not None:
                trial = box.project(trial)
            trial_value = loglik_n(model, path, trial, ctx)
            if trial_value > value:
                theta, value, moved = trial, trial_value, True
                break
            alpha *= 0.5
        it += 1
        if not moved:
            break

    at_boundary = box is not None and box.on_boundary(theta)
    return _diagnose(model, path, ctx, theta, tol, it, "newton", at_boundary)


def mle_proxy(model: ModelSpec, fine_path: Path, ctx: PathContext | None = None) -> EstimateResult:
    """Reference estimate: the AMLE on the finest available grid."""
    if model.drift_affine:
        return amle_linear(model, fine_path, ctx)
    return amle_newton(model, fine_path, ctx=ctx)
