"""Normalized LMS tracking of the coefficient curve.

The recursion starts from zero and, at step k, corrects the estimate along
the regressor ``X_k`` by the one-step prediction residual, with the gain
normalized by ``1 + mu |X_k|^2``.
"""
from __future__ import annotations

import csv
import math
import warnings
from dataclasses import dataclass

import numpy as np

from . import engine
from .curves import ParamCurve
from .errors import DomainError, ValidationError
from .tvar import TVARPath, check_replay, curve_grids, fmt


def normalized_gain(x, nu: float):
    """Return ``L = x / (1 + nu |x|^2)`` and ``F = L x^T``."""
    x = np.atleast_1d(np.asarray(x, dtype=float))
    if nu < 0:
        raise ValidationError("nu must be non-negative")
    L = x / (1.0 + nu * float(x @ x))
    return L, np.outer(L, x)


def _check_mu(mu):
    if not mu > 0:
        raise ValidationError("step size mu must be positive")
    if mu > 1:
        warnings.warn(f"step size mu={mu} > 1 is outside the usual small-gain regime",
                      stacklevel=3)


def nlms_step(theta_hat, x_state, x_next: float, mu: float) -> np.ndarray:
    """One NLMS update of ``theta_hat`` given regressor ``x_state`` and next sample."""
    _check_mu(mu)
    th = [float(v) for v in np.atleast_1d(theta_hat)]
    st = [float(v) for v in np.atleast_1d(x_state)]
    if len(th) != len(st):
        raise ValidationError("theta_hat and x_state must have the same length")
    return np.array(engine.nlms_update(th, st, float(x_next), mu))


@dataclass(frozen=True, eq=False)
class NLMSTrajectory:
    """Estimates ``theta_hat_0..theta_hat_n`` (shape (n+1, d)) for one step size."""

    mu: float
    estimates: np.ndarray
    path_id: str

    @property
    def n(self) -> int:
        return self.estimates.shape[0] - 1

    def to_csv(self, fh):
        w = csv.writer(fh, lineterminator="\n")
        d = self.estimates.shape[1]
        w.writerow(["k"] + [f"theta_hat_{i + 1}" for i in range(d)])
        for k, row in enumerate(self.estimates):
            w.writerow([k] + [fmt(v) for v in row])


def _path_id(path: TVARPath) -> str:
    return f"{path.curve_id}:seed={path.seed}:n={path.n}"


def nlms_run(path: TVARPath, mu: float) -> NLMSTrajectory:
    """Run the recursion over every observed sample of ``path``."""
    _check_mu(mu)
    d = path.d
    m = path.samples.size
    out = np.zeros((m + 1, d))
    state = [float(v) for v in path.x0]
    th = [0.0] * d
    for k in range(m):
        x_next = float(path.samples[k])
        th = engine.nlms_update(th, state, x_next, mu)
        out[k + 1] = th
        state = [x_next] + state[:-1]
    return NLMSTrajectory(mu=mu, estimates=out, path_id=_path_id(path))


def time_index(t: float, n: int) -> int:
    """Integer part of ``t n``, robust to representation error (t=1 gives n)."""
    if not 0 < t <= 1:
        raise DomainError(f"t={t} must lie in (0,1]")
    x = t * n
    r = round(x)
    k = r if abs(x - r) <= 1e-9 * max(1.0, x) else math.floor(x)
    return int(k)


def pointwise_estimate(traj: NLMSTrajectory, t: float, n: int | None = None) -> np.ndarray:
    n = traj.n if n is None else n
    k = time_index(t, n)
    if k >= traj.estimates.shape[0]:
        raise ValidationError(f"trajectory has no estimate at index {k}")
    return traj.estimates[k].copy()


def romberg_combine(est_mu, est_gamma_mu, gamma: float):
    """``(theta_hat(mu) - gamma theta_hat(gamma mu)) / (1 - gamma)``."""
    if not 0 < gamma < 1:
        raise ValidationError(f"gamma={gamma} must lie in (0,1)")
    return (est_mu - gamma * est_gamma_mu) / (1.0 - gamma)


def bias_corrected_estimate(path: TVARPath, mu: float, gamma: float, t: float) -> np.ndarray:
    """Two-step-size combination removing the first-order tracking bias."""
    if not 0 < gamma < 1:
        raise ValidationError(f"gamma={gamma} must lie in (0,1)")
    a = pointwise_estimate(nlms_run(path, mu), t, path.n)
    b = pointwise_estimate(nlms_run(path, gamma * mu), t, path.n)
    return romberg_combine(a, b, gamma)


@dataclass(frozen=True, eq=False)
class ErrorDecomposition:
    """Transient, noise and drift parts of the tracking error, each (n+1, d)."""

    mu: float
    delta_u: np.ndarray
    delta_v: np.ndarray
    delta_w: np.ndarray
    error: np.ndarray

    def identity_residual(self) -> float:
        return float(np.max(np.abs(self.delta_u + self.delta_v + self.delta_w - self.error)))

    def to_csv(self, fh):
        w = csv.writer(fh, lineterminator="\n")
        d = self.error.shape[1]
        head = ["k"]
        for i in range(d):
            head += [f"u_{i + 1}", f"v_{i + 1}", f"w_{i + 1}"]
        w.writerow(head)
        for k in range(self.error.shape[0]):
            row = [k]
            for i in range(d):
                row += [fmt(self.delta_u[k, i]), fmt(self.delta_v[k, i]),
                        fmt(self.delta_w[k, i])]
            w.writerow(row)


def error_decomposition(path: TVARPath, mu: float, curve: ParamCurve) -> ErrorDecomposition:
    """Split ``theta_hat_k - theta(k/n)`` into its three linear recursions.

    All three share the random contraction ``I - mu F_mu(X_k)``; the transient
    starts from ``-theta(0)``, the noise part is driven by
    ``mu L_mu(X_k) sigma((k+1)/n) eps_{k+1}`` and the drift part by
    ``theta(k/n) - theta((k+1)/n)``.
    """
    _check_mu(mu)
    if not check_replay(path, curve):
        raise ValidationError("path was not generated by this curve (replay mismatch)")
    n, d = path.n, path.d
    rows, sig = curve_grids(curve, n)
    theta = np.array(rows)
    traj = nlms_run(path, mu)
    du, dv, dw = np.zeros((n + 1, d)), np.zeros((n + 1, d)), np.zeros((n + 1, d))
    du[0] = -theta[0]
    for k in range(n):
        x = path.state(k)
        L, F = normalized_gain(x, mu)
        A = np.eye(d) - mu * F
        du[k + 1] = A @ du[k]
        dv[k + 1] = A @ dv[k] + mu * L * sig[k + 1] * path.innovations[k]
        dw[k + 1] = A @ dw[k] + (theta[k] - theta[k + 1])
    return ErrorDecomposition(mu=mu, delta_u=du, delta_v=dv, delta_w=dw,
                              error=traj.estimates - theta)
