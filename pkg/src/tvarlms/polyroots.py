"""Companion matrices and spectral radius of autoregressive polynomials.

The eigenvalues of the companion matrix of ``theta`` are the reciprocals of
the zeros of ``1 - theta_1 z - ... - theta_d z^d``, i.e. the roots of the
monic polynomial ``lam^d - theta_1 lam^(d-1) - ... - theta_d``.  They are
found with the Aberth-Ehrlich simultaneous iteration, with a companion
eigenvalue solve as fallback.
"""
from __future__ import annotations

import numpy as np

from .errors import NumericalError

MAX_ITER = 200
RESIDUAL_TOL = 1e-12


def companion(theta) -> np.ndarray:
    """Companion matrix: first row ``theta``, ones on the subdiagonal."""
    theta = np.atleast_1d(np.asarray(theta, dtype=float))
    d = theta.size
    A = np.zeros((d, d))
    A[0, :] = theta
    if d > 1:
        A[np.arange(1, d), np.arange(d - 1)] = 1.0
    return A


def _monic(theta: np.ndarray) -> np.ndarray:
    # highest degree first: lam^d - theta_1 lam^(d-1) - ... - theta_d
    return np.concatenate(([1.0], -theta))


def _scaled_residual(coeffs: np.ndarray, roots: np.ndarray) -> float:
    if roots.size == 0:
        return 0.0
    absz = np.abs(roots)
    powers = np.vander(absz, coeffs.size)
    scale = powers @ np.abs(coeffs)
    return float(np.max(np.abs(np.polyval(coeffs, roots)) / scale))


def aberth(coeffs, max_iter: int = MAX_ITER, tol: float = RESIDUAL_TOL):
    """Roots of a monic polynomial by Aberth-Ehrlich iteration.

    Returns ``(roots, iterations, residual, converged)``; ``residual`` is the
    componentwise backward error max |p(z)| / sum |c_j||z|^j.
    """
    c = np.asarray(coeffs, dtype=complex)
    deg = c.size - 1
    if deg == 0:
        return np.zeros(0, dtype=complex), 0, 0.0, True
    dc = np.polyder(c)
    # Fujiwara bound for the initial circle; offset angle breaks symmetry
    radius = 2.0 * np.max(np.abs(c[1:]) ** (1.0 / np.arange(1, deg + 1)))
    angles = 2 * np.pi * np.arange(deg) / deg + 0.4
    z = radius * np.exp(1j * angles)
    it = 0
    for it in range(1, max_iter + 1):
        p = np.polyval(c, z)
        dp = np.polyval(dc, z)
        ratio = np.where(dp != 0, p / np.where(dp != 0, dp, 1.0), 0.0)
        diff = z[:, None] - z[None, :]
        np.fill_diagonal(diff, 1.0)
        inv = 1.0 / diff
        np.fill_diagonal(inv, 0.0)
        s = inv.sum(axis=1)
        denom = 1.0 - ratio * s
        step = np.where(denom != 0, ratio / np.where(denom != 0, denom, 1.0), ratio)
        z = z - step
        if np.all(np.abs(step) <= 4e-16 * np.abs(z)):
            break
    res = _scaled_residual(c, z)
    return z, it, res, res <= tol


def _taylor_small(coeffs: np.ndarray, c: complex, m: int, k: float = 64.0) -> bool:
    """True when p(c), p'(c), ..., p^(m-1)(c)/(m-1)! all vanish to rounding level."""
    deg = coeffs.size - 1
    eps = np.finfo(float).eps
    p = coeffs.astype(complex)
    absp = np.abs(coeffs).astype(float)
    for _ in range(m):
        val = np.polyval(p, c)
        scale = np.polyval(absp, abs(c))
        if abs(val) > k * deg * eps * max(scale, np.finfo(float).tiny):
            return False
        p = np.polyder(p)
        absp = np.polyder(absp)
    return True


def _merge_multiple(coeffs: np.ndarray, roots: np.ndarray, spread: float = 1e-3) -> np.ndarray:
    """Replace clusters that approximate one multiple root by that root.

    Iterates for an m-fold root only reach accuracy ~eps^(1/m).  The root is
    recovered as the simple root of p^(m-1) near the cluster centroid, and
    the cluster is merged only if the Taylor coefficients of p at that point
    vanish up to order m-1, i.e. it really is an m-fold root.
    """
    out = roots.copy()
    left = list(range(roots.size))
    while left:
        i = left.pop(0)
        group = [i]
        changed = True
        while changed:
            changed = False
            for j in list(left):
                if any(abs(roots[j] - roots[g]) <= spread * max(abs(roots[g]), 1e-300)
                       for g in group):
                    group.append(j)
                    left.remove(j)
                    changed = True
        if len(group) > 1:
            m = len(group)
            # an m-fold root of p is a simple root of p^(m-1): polish it by Newton
            q = coeffs.astype(complex)
            for _ in range(m - 1):
                q = np.polyder(q)
            dq = np.polyder(q)
            c = roots[group].mean()
            for _ in range(8):
                den = np.polyval(dq, c)
                if den == 0:
                    break
                c = c - np.polyval(q, c) / den
            if _taylor_small(coeffs, c, m):
                out[group] = c
    return out


def ar_reciprocal_roots(theta) -> np.ndarray:
    """Reciprocals of the zeros of ``1 - sum theta_j z^j`` (companion eigenvalues)."""
    theta = np.atleast_1d(np.asarray(theta, dtype=float))
    # exact zeros for trailing zero coefficients
    nz = np.flatnonzero(theta)
    if nz.size == 0:
        return np.zeros(theta.size, dtype=complex)
    last = nz[-1]
    zeros = np.zeros(theta.size - last - 1, dtype=complex)
    coeffs = _monic(theta[: last + 1])
    roots, it, res, ok = aberth(coeffs)
    if not ok:
        roots = np.linalg.eigvals(companion(theta[: last + 1])).astype(complex)
        res = _scaled_residual(coeffs.astype(complex), roots)
        if res > 1e-9:
            raise NumericalError(
                f"root finder did not converge after {MAX_ITER} iterations "
                f"(residual {res:.3e}); eigenvalue fallback residual {res:.3e}")
    roots = _merge_multiple(coeffs, roots)
    return np.concatenate((roots, zeros))


def spectral_radius(theta) -> float:
    """Largest companion eigenvalue modulus of ``theta``."""
    return float(np.max(np.abs(ar_reciprocal_roots(theta))))
