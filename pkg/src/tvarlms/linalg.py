"""Symmetric eigendecomposition by cyclic Jacobi rotations, and matrix powers."""
from __future__ import annotations

import numpy as np

from .errors import DomainError, NumericalError, ValidationError


def _off_norm(A: np.ndarray) -> float:
    off = A - np.diag(np.diag(A))
    return float(np.sqrt(np.sum(off * off)))


def jacobi_eigh(A, tol: float = 1e-12, max_sweeps: int = 100):
    """Eigenvalues (ascending) and orthonormal eigenvectors of symmetric ``A``.

    Sweeps over all (p, q) pairs until the off-diagonal Frobenius norm is at
    most ``tol`` times the Frobenius norm of ``A``.
    """
    A = np.array(A, dtype=float)
    if A.ndim != 2 or A.shape[0] != A.shape[1]:
        raise ValidationError("matrix must be square")
    n = A.shape[0]
    A = 0.5 * (A + A.T)
    V = np.eye(n)
    scale = max(np.linalg.norm(A), np.finfo(float).tiny)
    for _ in range(max_sweeps):
        if _off_norm(A) <= tol * scale:
            break
        for p in range(n - 1):
            for q in range(p + 1, n):
                apq = A[p, q]
                if apq == 0.0:
                    continue
                tau = (A[q, q] - A[p, p]) / (2.0 * apq)
                t = np.sign(tau) / (abs(tau) + np.hypot(1.0, tau)) if tau != 0 else 1.0
                c = 1.0 / np.hypot(1.0, t)
                s = t * c
                # A <- J^T A J with J the (p, q) rotation
                ap, aq = A[:, p].copy(), A[:, q].copy()
                A[:, p] = c * ap - s * aq
                A[:, q] = s * ap + c * aq
                ap, aq = A[p, :].copy(), A[q, :].copy()
                A[p, :] = c * ap - s * aq
                A[q, :] = s * ap + c * aq
                A[p, q] = A[q, p] = 0.0
                vp, vq = V[:, p].copy(), V[:, q].copy()
                V[:, p] = c * vp - s * vq
                V[:, q] = s * vp + c * vq
    else:
        if _off_norm(A) > tol * scale:
            raise NumericalError(f"Jacobi did not converge in {max_sweeps} sweeps")
    w = np.diag(A).copy()
    order = np.argsort(w)
    return w[order], V[:, order]


def check_symmetric(A, tol: float = 1e-10) -> np.ndarray:
    A = np.asarray(A, dtype=float)
    if A.ndim != 2 or A.shape[0] != A.shape[1]:
        raise ValidationError("matrix must be square")
    if np.max(np.abs(A - A.T), initial=0.0) > tol * max(1.0, np.max(np.abs(A), initial=0.0)):
        raise ValidationError("matrix is not symmetric")
    return A


def fractional_power(A, alpha: float) -> np.ndarray:
    """``A**alpha = U diag(w**alpha) U^T`` for symmetric positive-definite ``A``."""
    A = check_symmetric(A)
    w, U = jacobi_eigh(A)
    if np.any(w <= 0):
        raise DomainError(f"matrix is not positive definite (min eigenvalue {w.min():.3e})")
    P = (U * w ** alpha) @ U.T
    return 0.5 * (P + P.T)


def operator_norm(A) -> float:
    """Spectral norm (largest singular value)."""
    A = np.atleast_2d(np.asarray(A, dtype=float))
    if A.shape[0] == A.shape[1] and np.array_equal(A, A.T):
        w, _ = jacobi_eigh(A)
        return float(np.max(np.abs(w)))
    return float(np.linalg.norm(A, 2))
