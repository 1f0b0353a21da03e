"""Local stationary approximation: spectral density and covariance of the
frozen AR(d) model, and the empirical covariance-approximation check.

``Sigma(t)`` is computed two independent ways: from the extended Yule-Walker
equations (primary) and by trapezoidal quadrature of the spectral density
(oracle).  Both use the normalization
``Sigma[k, l] = int_{-pi}^{pi} exp(i lam (k-l)) f(lam) d lam`` with
``f = sigma^2 / (2 pi) |theta(e^{i lam})|^{-2}``, so ``Sigma[0, 0]`` is the
stationary variance.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.linalg import toeplitz

from .errors import NumericalError, StabilityError, ValidationError
from .linalg import jacobi_eigh, operator_norm
from .polyroots import spectral_radius

DEFAULT_NODES = 2 ** 14


@dataclass(frozen=True)
class LocalCovariance:
    t: float | None
    matrix: np.ndarray
    method: str

    def __post_init__(self):
        M = self.matrix
        if np.max(np.abs(M - M.T), initial=0.0) > 1e-12 * max(1.0, abs(M[0, 0])):
            raise NumericalError("local covariance is not symmetric")
        w, _ = jacobi_eigh(M)
        if not w[0] > 0:
            raise NumericalError("local covariance is not positive definite")

    @property
    def autocovariances(self) -> np.ndarray:
        return self.matrix[0].copy()


def _require_stable(theta):
    r = spectral_radius(theta)
    if not r < 1:
        raise StabilityError(f"spectral radius {r:.6g} >= 1: no stationary solution")
    return r


def ar_polynomial_on_circle(theta, lam) -> np.ndarray:
    """``theta(e^{i lam}) = 1 - sum_j theta_j e^{i lam j}``."""
    theta = np.atleast_1d(np.asarray(theta, dtype=float))
    lam = np.asarray(lam, dtype=float)
    j = np.arange(1, theta.size + 1)
    return 1.0 - np.exp(1j * lam[..., None] * j) @ theta


def local_spectral_density(theta, sigma: float, lam):
    """``sigma^2 / (2 pi) |theta(e^{i lam})|^{-2}``; vectorized over ``lam``."""
    _require_stable(theta)
    val = sigma ** 2 / (2 * math.pi) / np.abs(ar_polynomial_on_circle(theta, lam)) ** 2
    return float(val) if np.ndim(val) == 0 else val


def yule_walker_autocovariances(theta, sigma: float) -> np.ndarray:
    """Autocovariances ``gamma_0..gamma_d`` of the stationary AR(d)."""
    theta = np.atleast_1d(np.asarray(theta, dtype=float))
    d = theta.size
    _require_stable(theta)
    # row k: gamma_k - sum_j theta_j gamma_{|k-j|} = sigma^2 [k == 0]
    M = np.eye(d + 1)
    for k in range(d + 1):
        for j in range(1, d + 1):
            M[k, abs(k - j)] -= theta[j - 1]
    rhs = np.zeros(d + 1)
    rhs[0] = sigma ** 2
    if np.linalg.cond(M) > 1e12:
        raise NumericalError("Yule-Walker system is numerically singular")
    return np.linalg.solve(M, rhs)


def local_covariance_yw(theta, sigma: float, t: float | None = None) -> LocalCovariance:
    """Local covariance from the extended Yule-Walker system."""
    theta = np.atleast_1d(np.asarray(theta, dtype=float))
    gam = yule_walker_autocovariances(theta, sigma)
    return LocalCovariance(t=t, matrix=toeplitz(gam[: theta.size]), method="yule_walker")


def local_covariance_quadrature(theta, sigma: float, node_count: int = DEFAULT_NODES,
                                t: float | None = None) -> LocalCovariance:
    """Local covariance by the periodic trapezoid rule on [-pi, pi)."""
    if node_count < 256 or node_count & (node_count - 1):
        raise ValidationError("node_count must be a power of two >= 256")
    theta = np.atleast_1d(np.asarray(theta, dtype=float))
    d = theta.size
    lam = -math.pi + 2 * math.pi * np.arange(node_count) / node_count
    f = local_spectral_density(theta, sigma, lam)
    lags = np.arange(d)
    c = (2 * math.pi / node_count) * (np.exp(1j * lam[:, None] * lags) * f[:, None]).sum(axis=0)
    resid = float(np.max(np.abs(c.imag)))
    if resid > 1e-10:
        raise NumericalError(f"imaginary residue {resid:.3e} exceeds 1e-10")
    return LocalCovariance(t=t, matrix=toeplitz(c.real), method="quadrature")


def local_covariance(curve, t: float, method: str = "yule_walker",
                     node_count: int = DEFAULT_NODES) -> LocalCovariance:
    theta, sigma = curve.theta(t), curve.sigma(t)
    if method == "yule_walker":
        return local_covariance_yw(theta, sigma, t=t)
    if method == "quadrature":
        return local_covariance_quadrature(theta, sigma, node_count, t=t)
    raise ValidationError(f"unknown covariance method {method!r}")


def spectral_bounds(theta, sigma: float, node_count: int = 4096):
    """Min and max of ``2 pi f`` over the frequency grid (eigenvalue sandwich of Sigma)."""
    lam = -math.pi + 2 * math.pi * np.arange(node_count) / node_count
    g = 2 * math.pi * local_spectral_density(theta, sigma, lam)
    return float(g.min()), float(g.max())


def spectrum_table(theta, sigma: float, count: int = 513):
    """``(lambda, value)`` rows on a uniform grid of [-pi, pi]."""
    lam = np.linspace(-math.pi, math.pi, count)
    return np.column_stack([lam, local_spectral_density(theta, sigma, lam)])


# -- empirical check of the covariance approximation ---------------------------

@dataclass
class CovarianceApproxReport:
    """Deviation ``|E[X_k X_k^T] - Sigma(k/n)|`` per requested k.

    ``deviation`` is the Monte Carlo estimate, ``stderr`` its standard error
    (largest entrywise standard error), ``exact`` the value from the exact
    second-moment recursion and ``bound_shape`` the shape
    ``tau^k |E[X_0 X_0^T] - Sigma(0)| + n^(-beta)`` with unit constant.
    """

    n: int
    k: np.ndarray
    deviation: np.ndarray
    stderr: np.ndarray
    exact: np.ndarray
    bound_shape: np.ndarray
    replicates: int
    method: str
    init: str


def exact_second_moments(curve, n: int, k_list, init: str = "stationary") -> list[np.ndarray]:
    """``E[X_k X_k^T]`` by propagating ``P <- Theta P Theta^T + sigma^2 e1 e1^T``."""
    from .polyroots import companion

    ks = sorted(set(int(k) for k in k_list))
    d = curve.d
    if init == "stationary":
        P = local_covariance(curve, 0.0).matrix.copy()
    elif init == "zero":
        P = np.zeros((d, d))
    else:
        raise ValidationError("exact moments support init 'zero' or 'stationary'")
    grid = np.arange(n + 1) / n
    thetas = curve.theta_grid(grid)
    sig2 = curve.sigma_grid(grid) ** 2
    out = {}
    want = set(ks)
    for k in range(1, max(ks) + 1):
        A = companion(thetas[k - 1])
        P = A @ P @ A.T
        P[0, 0] += sig2[k]
        if k in want:
            out[k] = P.copy()
    return [out[k] for k in ks]


def covariance_approx_error(curve, spec, n: int, k_list, replicates: int, seed: int,
                            init: str = "stationary", method: str = "coupled",
                            tau: float | None = None) -> CovarianceApproxReport:
    """Monte Carlo estimate of ``|E[X_k X_k^T] - Sigma(k/n)|`` (operator norm).

    ``method="plain"`` averages ``X_k X_k^T`` directly.  ``method="coupled"``
    averages ``X_k X_k^T - Z_k Z_k^T`` where ``Z`` is the AR model frozen at
    ``k/n``, started from its own stationary law and driven by the same
    innovations and the same Gaussian initial draw as ``X``.  Since
    ``E[Z_k Z_k^T] = Sigma(k/n)`` exactly, both estimators are unbiased; the
    coupled one has far smaller variance because ``X_k - Z_k`` is small.
    """
    from .tvar import simulate_states

    ks = np.array(sorted(set(int(k) for k in k_list)))
    if ks.size == 0 or ks[0] < 1 or ks[-1] > n:
        raise ValidationError("every k must satisfy 1 <= k <= n")
    if replicates < 2:
        raise ValidationError("need at least 2 replicates")
    if method not in ("plain", "coupled"):
        raise ValidationError(f"unknown method {method!r}")
    beta = min(curve.declared_beta, 1.0)
    tau = (1.0 + curve.declared_rho) / 2 if tau is None else tau
    sig0 = local_covariance(curve, 0.0).matrix
    init_err = 0.0 if init == "stationary" else operator_norm(sig0)

    devs, ses = [], []
    for k in ks:
        target = local_covariance(curve, k / n).matrix
        X, Z = simulate_states(curve, n, spec, seed, replicates, k, init,
                               frozen_at=(k / n) if method == "coupled" else None)
        prods = X[:, :, None] * X[:, None, :]
        if method == "coupled":
            prods = prods - Z[:, :, None] * Z[:, None, :]
            est = prods.mean(axis=0)
        else:
            est = prods.mean(axis=0) - target
        se = prods.std(axis=0, ddof=1) / math.sqrt(replicates)
        devs.append(operator_norm(0.5 * (est + est.T)))
        ses.append(float(se.max()))
    exact = [operator_norm(P - local_covariance(curve, k / n).matrix)
             for k, P in zip(ks, exact_second_moments(curve, n, ks, init))] \
        if init in ("zero", "stationary") else [float("nan")] * ks.size
    shape = tau ** ks * init_err + n ** (-beta)
    return CovarianceApproxReport(n=n, k=ks, deviation=np.array(devs), stderr=np.array(ses),
                                  exact=np.array(exact), bound_shape=shape,
                                  replicates=replicates, method=method, init=init)
