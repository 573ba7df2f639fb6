"""Discretised mixed-normal covariance, the whitened difference statistic, coverage."""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import DomainError, InputError
from .likelihood import PathContext
from .model import ModelSpec, check_theta, sensitivity_g
from .numerics import (
    DEFAULT_RANK_TOL,
    NoiseSource,
    chi2_quantile,
    numerical_rank,
    pinv_sqrt,
    psd_sqrt,
    standard_normals,
    sym_eigen,
)
from .simulate import Path

FD_STATE_STEP = 1e-5


@dataclass(frozen=True)
class AsymptoticReport:
    sigma_n: np.ndarray
    hessian: np.ndarray
    rank: int
    pinv_sqrt_sigma: np.ndarray
    statistic: float
    dt: float
    whitened: np.ndarray


@dataclass(frozen=True)
class MixedNormalSample:
    draw: np.ndarray


def _fd_grad_g(model, x, theta, j, h_rel):
    x = np.asarray(x, dtype=float)
    cols = []
    for i in range(model.k):
        h = h_rel * np.maximum(1.0, np.abs(x[..., i]))
        xp, xm = x.copy(), x.copy()
        xp[..., i] += h
        xm[..., i] -= h
        for stencil in (xp, xm):
            if not np.all(model.domain_member(stencil)):
                raise DomainError("finite-difference stencil leaves the state space")
        diff = sensitivity_g(model, xp, theta, j) - sensitivity_g(model, xm, theta, j)
        cols.append(diff / (xp[..., i] - xm[..., i])[..., None])
    return np.stack(cols, axis=-1)


def grad_g(model: ModelSpec, x, theta, j: int, use_analytic: bool = True) -> np.ndarray:
    """State Jacobian of g_j: entry (p, q) is d g_j[p] / d x_q. j is zero-based."""
    theta = check_theta(model, theta)
    if not 0 <= j < model.d:
        raise InputError(f"parameter index {j} out of range for d={model.d}")
    if use_analytic and model.grad_g_analytic is not None:
        return np.asarray(model.grad_g_analytic(np.asarray(x, dtype=float), theta, j), dtype=float)
    try:
        return _fd_grad_g(model, x, theta, j, FD_STATE_STEP)
    except DomainError:
        return _fd_grad_g(model, x, theta, j, FD_STATE_STEP / 10.0)


def sigma_n(model: ModelSpec, path: Path, theta, ctx: PathContext | None = None, use_analytic: bool = True) -> np.ndarray:
    """(dt/2) sum_i sum_{p,r} S_pr <row_r(grad g_j nu) | row_p(grad g_l nu)> at X_{i-1}."""
    ctx = ctx or PathContext(model, path)
    theta = check_theta(model, theta)
    ctx.S_inv  # fail early on a singular diffusion
    A = [grad_g(model, ctx.left, theta, j, use_analytic) @ ctx.nu for j in range(model.d)]
    out = np.empty((model.d, model.d))
    for j in range(model.d):
        for l in range(j, model.d):
            out[j, l] = out[l, j] = 0.5 * ctx.dt * float(np.sum((ctx.S @ A[j]) * A[l]))
    return out


def mixed_normal_statistic(
    sigma, hessian, theta_bar, theta_hat, dt: float, rank_tol: float = DEFAULT_RANK_TOL
) -> AsymptoticReport:
    """|| dt^{-1/2} sqrt(sigma)^+ H (theta_bar - theta_hat) ||_2^2 with its ingredients."""
    sigma = np.asarray(sigma, dtype=float)
    hessian = np.asarray(hessian, dtype=float)
    diff = np.asarray(theta_bar, dtype=float) - np.asarray(theta_hat, dtype=float)
    d = diff.size
    if sigma.shape != (d, d) or hessian.shape != (d, d):
        raise InputError("sigma, hessian and parameter vectors have inconsistent dimensions")
    if not (dt > 0 and math.isfinite(dt)):
        raise InputError("dt must be positive")
    sigma = 0.5 * (sigma + sigma.T)
    B = pinv_sqrt(sigma, rank_tol)
    rank = numerical_rank(sym_eigen(sigma).eigenvalues, rank_tol)
    w = B @ (hessian @ diff) / math.sqrt(dt)
    return AsymptoticReport(sigma, hessian, rank, B, float(w @ w), float(dt), w)


def coverage(statistics, p_tail: float, df: int) -> float:
    """Fraction of statistics inside [0, chi2 quantile at level 1 - p_tail]."""
    stats = np.asarray(statistics, dtype=float).reshape(-1)
    if stats.size == 0:
        raise InputError("coverage of an empty list is undefined")
    if np.any(stats < 0) or not np.all(np.isfinite(stats)):
        raise InputError("statistics must be finite and non-negative")
    return float(np.mean(stats <= chi2_quantile(p_tail, df)))


def sample_mixed_normal(C, noise: NoiseSource, rank_tol: float = DEFAULT_RANK_TOL) -> MixedNormalSample:
    C = np.asarray(C, dtype=float)
    root = psd_sqrt(C, rank_tol)
    return MixedNormalSample(root @ standard_normals(noise, C.shape[0]))
