"""Small dense linear algebra.

Everything here works on matrices of size at most a few dozen. The
symmetric eigensolver is a cyclic Jacobi iteration that also accepts a
stack of matrices ``(..., n, n)`` so that a whole path of 2x2 diffusion
matrices can be diagonalised in one call.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from ..errors import InputError, NotPSDError, SingularSystemError

DEFAULT_RANK_TOL = 1e-10

_MAX_SWEEPS = 60


@dataclass(frozen=True)
class SymmetricEigen:
    """Eigenvalues in descending order with matching eigenvector columns."""

    eigenvalues: np.ndarray
    eigenvectors: np.ndarray

    def reconstruct(self) -> np.ndarray:
        U, lam = self.eigenvectors, self.eigenvalues
        return (U * lam[..., None, :]) @ np.swapaxes(U, -1, -2)


def _check_symmetric(A, tol=1e-12):
    A = np.asarray(A, dtype=float)
    if A.ndim < 2 or A.shape[-1] != A.shape[-2]:
        raise InputError(f"expected square matrix, got shape {A.shape}")
    if not np.all(np.isfinite(A)):
        raise InputError("matrix has non-finite entries")
    skew = np.abs(A - np.swapaxes(A, -1, -2))
    scale = np.maximum(1.0, np.abs(A).max(axis=(-1, -2), initial=0.0))
    if np.any(skew.max(axis=(-1, -2), initial=0.0) > tol * scale):
        raise InputError("matrix is not symmetric")
    return 0.5 * (A + np.swapaxes(A, -1, -2))


def sym_eigen(A) -> SymmetricEigen:
    """Cyclic Jacobi eigendecomposition of a symmetric matrix (or a stack).

    Rotations follow the classical (p, q) sweep order; each rotation zeroes
    ``A[p, q]`` using the smaller root of ``t**2 + 2*theta*t - 1 = 0``.
    Sweeps continue until the off-diagonal mass is below machine precision
    relative to the matrix norm.
    """
    A = _check_symmetric(A).copy()
    n = A.shape[-1]
    batch = A.shape[:-2]
    if not batch:
        lam, V = _jacobi_single(A)
        order = np.argsort(-lam, kind="stable")
        return SymmetricEigen(lam[order], V[:, order])
    A = A.reshape((-1, n, n))
    V = np.broadcast_to(np.eye(n), A.shape).copy()
    norm = np.sqrt((A * A).sum(axis=(1, 2)))
    offmask = 1.0 - np.eye(n)
    tiny = np.finfo(float).tiny

    with np.errstate(over="ignore", invalid="ignore", divide="ignore"):
        for _ in range(_MAX_SWEEPS):
            off = np.sqrt(((A * offmask) ** 2).sum(axis=(1, 2)))
            if np.all(off <= 1e-15 * norm + tiny):
                break
            for p in range(n - 1):
                for q in range(p + 1, n):
                    apq = A[:, p, q]
                    active = np.abs(apq) > tiny
                    if not np.any(active):
                        continue
                    theta = (A[:, q, q] - A[:, p, p]) / (2.0 * np.where(active, apq, 1.0))
                    t = np.sign(theta) / (np.abs(theta) + np.sqrt(theta * theta + 1.0))
                    t = np.where(np.abs(theta) > 1e150, 0.5 / theta, t)
                    t = np.where(theta == 0.0, 1.0, t)
                    t = np.where(np.isfinite(t) & active, t, 0.0)
                    c = 1.0 / np.sqrt(t * t + 1.0)
                    s = t * c

                    cp, cq = A[:, :, p].copy(), A[:, :, q].copy()
                    A[:, :, p] = c[:, None] * cp - s[:, None] * cq
                    A[:, :, q] = s[:, None] * cp + c[:, None] * cq
                    rp, rq = A[:, p, :].copy(), A[:, q, :].copy()
                    A[:, p, :] = c[:, None] * rp - s[:, None] * rq
                    A[:, q, :] = s[:, None] * rp + c[:, None] * rq
                    A[:, p, q] = 0.0
                    A[:, q, p] = 0.0

                    vp, vq = V[:, :, p].copy(), V[:, :, q].copy()
                    V[:, :, p] = c[:, None] * vp - s[:, None] * vq
                    V[:, :, q] = s[:, None] * vp + c[:, None] * vq

    lam = np.diagonal(A, axis1=1, axis2=2).copy()
    order = np.argsort(-lam, axis=1, kind="stable")
    lam = np.take_along_axis(lam, order, axis=1)
    V = np.take_along_axis(V, order[:, None, :], axis=2)
    return SymmetricEigen(lam.reshape(batch + (n,)), V.reshape(batch + (n, n)))


def _jacobi_single(A):
    # same rotations as the batched loop, with scalar bookkeeping
    n = A.shape[0]
    V = np.eye(n)
    norm = math.sqrt(float((A * A).sum()))
    for _ in range(_MAX_SWEEPS):
        off = math.sqrt(float(((A - np.diag(np.diag(A))) ** 2).sum()))
        if off <= 1e-15 * norm + np.finfo(float).tiny:
            break
        for p in range(n - 1):
            for q in range(p + 1, n):
                apq = A[p, q]
                if abs(apq) <= np.finfo(float).tiny:
                    continue
                theta = (A[q, q] - A[p, p]) / (2.0 * apq)
                if theta == 0.0:
                    t = 1.0
                elif abs(theta) > 1e150:
                    t = 0.5 / theta
                else:
                    t = math.copysign(1.0, theta) / (abs(theta) + math.sqrt(theta * theta + 1.0))
                c = 1.0 / math.sqrt(t * t + 1.0)
                s = t * c
                cp, cq = A[:, p].copy(), A[:, q].copy()
                A[:, p] = c * cp - s * cq
                A[:, q] = s * cp + c * cq
                rp, rq = A[p, :].copy(), A[q, :].copy()
                A[p, :] = c * rp - s * rq
                A[q, :] = s * rp + c * rq
                A[p, q] = A[q, p] = 0.0
                vp, vq = V[:, p].copy(), V[:, q].copy()
                V[:, p] = c * vp - s * vq
                V[:, q] = s * vp + c * vq
    return np.diag(A).copy(), V


def numerical_rank(eigenvalues, rank_tol=DEFAULT_RANK_TOL) -> int:
    lam = np.asarray(eigenvalues, dtype=float)
    top = lam.max(initial=0.0)
    if top <= 0.0:
        return 0
    return int(np.count_nonzero(lam > rank_tol * top))


def _psd_spectrum(A, rank_tol):
    eig = sym_eigen(A)
    lam = eig.eigenvalues
    top = max(float(lam.max(initial=0.0)), 0.0)
    if lam.size and lam.min() < -rank_tol * top:
        raise NotPSDError(f"matrix is not positive semidefinite (eigenvalue {lam.min():.3e})")
    keep = lam > rank_tol * top if top > 0.0 else np.zeros_like(lam, dtype=bool)
    return eig, np.where(keep, lam, 0.0), keep


def pinv_sqrt(A, rank_tol=DEFAULT_RANK_TOL) -> np.ndarray:
    """Generalised inverse of the symmetric square root of a PSD matrix.

    Returns ``U diag(d) U^T`` with ``d_i = 1/sqrt(lambda_i)`` on the retained
    eigenvalues (those above ``rank_tol * lambda_max``) and 0 elsewhere.
    """
    eig, lam, keep = _psd_spectrum(A, rank_tol)
    d = np.zeros_like(lam)
    d[keep] = 1.0 / np.sqrt(lam[keep])
    U = eig.eigenvectors
    B = (U * d) @ U.T
    return 0.5 * (B + B.T)


def psd_sqrt(A, rank_tol=DEFAULT_RANK_TOL) -> np.ndarray:
    """Symmetric PSD square root; eigenvalues under the tolerance are set to 0."""
    eig, lam, _ = _psd_spectrum(A, rank_tol)
    U = eig.eigenvectors
    R = (U * np.sqrt(lam)) @ U.T
    return 0.5 * (R + R.T)


def kron(A, B) -> np.ndarray:
    """Kronecker product: block (i, j) of the result is ``A[i, j] * B``."""
    A = np.atleast_2d(np.asarray(A, dtype=float))
    B = np.atleast_2d(np.asarray(B, dtype=float))
    m, n = A.shape
    p, q = B.shape
    return (A[:, None, :, None] * B[None, :, None, :]).reshape(m * p, n * q)


def solve_linear(A, b) -> np.ndarray:
    """Gaussian elimination with partial pivoting."""
    A = np.array(A, dtype=float)
    b = np.array(b, dtype=float).reshape(-1)
    n = A.shape[0]
    if A.ndim != 2 or A.shape[1] != n:
        raise InputError(f"expected square matrix, got shape {A.shape}")
    if b.shape[0] != n:
        raise InputError(f"right-hand side has length {b.shape[0]}, expected {n}")
    if not (np.all(np.isfinite(A)) and np.all(np.isfinite(b))):
        raise InputError("linear system has non-finite entries")
    scale = np.abs(A).sum(axis=1).max(initial=0.0)
    threshold = 1e-14 * scale
    for col in range(n):
        piv = col + int(np.argmax(np.abs(A[col:, col])))
        if abs(A[piv, col]) <= threshold or scale == 0.0:
            raise SingularSystemError(f"pivot {col} below tolerance; matrix is numerically singular")
        if piv != col:
            A[[col, piv]] = A[[piv, col]]
            b[[col, piv]] = b[[piv, col]]
        f = A[col + 1:, col] / A[col, col]
        A[col + 1:, col:] -= np.outer(f, A[col, col:])
        b[col + 1:] -= f * b[col]
    x = np.empty(n)
    for i in range(n - 1, -1, -1):
        x[i] = (b[i] - A[i, i + 1:] @ x[i + 1:]) / A[i, i]
    return x


def fd_jacobian(f, x, h_rel=1e-5) -> np.ndarray:
    """Central-difference Jacobian, step ``h_rel * max(1, |x_i|)`` per coordinate."""
    x = np.asarray(x, dtype=float)
    cols = []
    for i in range(x.size):
        h = h_rel * max(1.0, abs(x[i]))
        xp, xm = x.copy(), x.copy()
        xp[i] += h
        xm[i] -= h
        cols.append((np.asarray(f(xp), dtype=float) - np.asarray(f(xm), dtype=float)) / (xp[i] - xm[i]))
    return np.stack(cols, axis=-1)
