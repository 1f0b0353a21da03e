"""Parameter curves ``t -> (theta(t), sigma(t))`` on [0, 1].

Three kinds are supported:

* ``closed_form``: a named family from :data:`FAMILIES` (vectorized numpy
  expressions, optionally with a registered derivative);
* ``piecewise_linear``: a knot table interpolated linearly;
* ``roots``: trajectories of the reciprocal roots of the autoregressive
  polynomial, expanded into coefficients (the canonical way to build curves
  with a prescribed stability radius).
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from .errors import DomainError, ValidationError

ArrayFn = Callable[[np.ndarray], np.ndarray]

KINDS = ("closed_form", "piecewise_linear", "roots")


@dataclass(frozen=True, eq=False)
class ParamCurve:
    """Coefficient curve ``theta`` (values in R^d) and noise level ``sigma``.

    ``theta_fn`` maps an array of times of shape (m,) to an (m, d) array and
    ``sigma_fn`` maps it to an (m,) array.  ``derivative_fn`` (same shape as
    ``theta_fn``) is optional and only needed by the bias-centering checks.
    """

    d: int
    theta_fn: ArrayFn
    sigma_fn: ArrayFn
    kind: str
    declared_beta: float
    declared_rho: float
    name: str = "curve"
    derivative_fn: ArrayFn | None = None
    source: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.d < 1:
            raise ValidationError("model order d must be >= 1")
        if self.kind not in KINDS:
            raise ValidationError(f"unknown curve kind {self.kind!r}")
        if not self.declared_beta > 0:
            raise ValidationError("declared_beta must be positive")
        if not 0 < self.declared_rho < 1:
            raise ValidationError("declared_rho must lie in (0,1)")

    def theta_grid(self, ts) -> np.ndarray:
        ts = np.asarray(ts, dtype=float)
        out = np.asarray(self.theta_fn(ts), dtype=float).reshape(ts.size, self.d)
        return out

    def sigma_grid(self, ts) -> np.ndarray:
        ts = np.asarray(ts, dtype=float)
        out = np.broadcast_to(np.asarray(self.sigma_fn(ts), dtype=float), ts.shape).copy()
        if np.any(~(out >= 0)):
            raise ValidationError(f"sigma must be non-negative on [0,1] ({self.name})")
        return out

    def theta(self, t: float) -> np.ndarray:
        _check_time(t)
        return self.theta_grid(np.array([t]))[0]

    def sigma(self, t: float) -> float:
        _check_time(t)
        return float(self.sigma_grid(np.array([t]))[0])

    def derivative(self, t: float) -> np.ndarray:
        if self.derivative_fn is None:
            raise ValidationError(f"curve {self.name!r} has no registered derivative")
        _check_time(t)
        ts = np.array([t])
        return np.asarray(self.derivative_fn(ts), dtype=float).reshape(1, self.d)[0]

    @property
    def has_derivative(self) -> bool:
        return self.derivative_fn is not None


def _check_time(t):
    if not 0.0 <= t <= 1.0:
        raise DomainError(f"t={t} outside [0,1]")


def curve_eval(curve: ParamCurve, t: float):
    """Return ``(theta(t), sigma(t))``."""
    _check_time(t)
    return curve.theta(t), curve.sigma(t)


# -- sigma curves -------------------------------------------------------------

def constant_sigma(value: float) -> ArrayFn:
    if not value >= 0:
        raise ValidationError("sigma must be non-negative")
    return lambda ts: np.full(np.shape(ts), float(value))


def linear_sigma(start: float, end: float) -> ArrayFn:
    if not (start >= 0 and end >= 0):
        raise ValidationError("sigma must be non-negative")
    return lambda ts: start + (end - start) * np.asarray(ts, dtype=float)


def sigma_from_spec(spec) -> ArrayFn:
    """``1.0`` -> constant; ``{"start": a, "end": b}`` -> linear in t."""
    if isinstance(spec, (int, float)) and not isinstance(spec, bool):
        return constant_sigma(float(spec))
    if isinstance(spec, dict) and set(spec) == {"start", "end"}:
        return linear_sigma(float(spec["start"]), float(spec["end"]))
    raise ValidationError(f"bad sigma specification {spec!r}")


# -- closed-form families -----------------------------------------------------

def _vec(x, name):
    arr = np.atleast_1d(np.asarray(x, dtype=float))
    if arr.ndim != 1:
        raise ValidationError(f"{name} must be a vector")
    return arr


def _polynomial(coeffs):
    """theta(t) = sum_j coeffs[j] t^j, coeffs given per power as d-vectors."""
    C = np.asarray(coeffs, dtype=float)
    if C.ndim == 1:
        C = C[:, None]
    powers = np.arange(C.shape[0])

    def theta(ts):
        ts = np.asarray(ts, dtype=float)[:, None]
        return np.einsum("mp,pd->md", ts ** powers[None, :], C)

    def dtheta(ts):
        ts = np.asarray(ts, dtype=float)[:, None]
        if C.shape[0] == 1:
            return np.zeros((ts.shape[0], C.shape[1]))
        p = powers[1:]
        return np.einsum("mp,pd->md", p[None, :] * ts ** (p[None, :] - 1), C[1:])

    return C.shape[1], theta, dtheta


def _fam_constant(theta):
    th = _vec(theta, "theta")
    return _polynomial(th[None, :])


def _fam_linear(intercept, slope):
    a, b = _vec(intercept, "intercept"), _vec(slope, "slope")
    if a.shape != b.shape:
        raise ValidationError("intercept and slope must have the same length")
    return _polynomial(np.stack([a, b]))


def _fam_polynomial(coeffs):
    C = np.asarray(coeffs, dtype=float)
    if C.ndim not in (1, 2) or C.shape[0] == 0:
        raise ValidationError("coeffs must be a list of per-power vectors")
    return _polynomial(C)


def _fam_cosine(amplitude, offset=0.0, frequency=1.0, phase=0.0):
    """theta(t) = offset + amplitude cos(pi frequency t + phase)."""
    amp = _vec(amplitude, "amplitude")
    off = np.broadcast_to(_vec(offset, "offset"), amp.shape)
    w = math.pi * float(frequency)

    def theta(ts):
        ts = np.asarray(ts, dtype=float)[:, None]
        return off[None, :] + amp[None, :] * np.cos(w * ts + phase)

    def dtheta(ts):
        ts = np.asarray(ts, dtype=float)[:, None]
        return -w * amp[None, :] * np.sin(w * ts + phase)

    return amp.size, theta, dtheta


def _fam_sqrt_cusp(base, coef, t0):
    """theta(u) = base + coef * sqrt(max(t0 - u, 0)); power law of order 1/2 left of t0."""
    a, c = _vec(base, "base"), _vec(coef, "coef")
    if a.shape != c.shape:
        raise ValidationError("base and coef must have the same length")

    def theta(ts):
        ts = np.asarray(ts, dtype=float)[:, None]
        return a[None, :] + c[None, :] * np.sqrt(np.maximum(t0 - ts, 0.0))

    return a.size, theta, None


FAMILIES: dict[str, Callable] = {
    "constant": _fam_constant,
    "linear": _fam_linear,
    "polynomial": _fam_polynomial,
    "cosine": _fam_cosine,
    "sqrt_cusp": _fam_sqrt_cusp,
}

DEFAULT_BETA = {"constant": 2.0, "linear": 2.0, "polynomial": 2.0, "cosine": 2.0,
                "sqrt_cusp": 0.5}


def closed_form(family: str, params: dict, sigma=1.0, declared_beta=None,
                declared_rho=None, name=None) -> ParamCurve:
    """Build a curve from a registered closed-form family.

    When ``declared_rho`` is omitted it is set to the worst spectral radius
    found on the default 1024-point grid.
    """
    if family not in FAMILIES:
        raise ValidationError(f"unknown family {family!r}; known: {sorted(FAMILIES)}")
    try:
        d, theta_fn, dtheta_fn = FAMILIES[family](**params)
    except TypeError as exc:
        raise ValidationError(f"bad parameters for family {family!r}: {exc}") from None
    sig = sigma_from_spec(sigma) if not callable(sigma) else sigma
    beta = DEFAULT_BETA[family] if declared_beta is None else float(declared_beta)
    src = {"kind": "closed_form", "family": family, "params": params, "sigma": sigma}
    curve = ParamCurve(d=d, theta_fn=theta_fn, sigma_fn=sig, kind="closed_form",
                       declared_beta=beta, declared_rho=0.5 if declared_rho is None
                       else float(declared_rho), name=name or family,
                       derivative_fn=dtheta_fn, source=src)
    if declared_rho is None:
        curve = _with_measured_rho(curve)
    return curve


def piecewise_linear(knots: Sequence[float], values, sigma=1.0, declared_beta=1.0,
                     declared_rho=None, name="piecewise") -> ParamCurve:
    """Linear interpolation through ``(knots[i], values[i])``; knots span [0, 1]."""
    ks = np.asarray(knots, dtype=float)
    V = np.asarray(values, dtype=float)
    if V.ndim == 1:
        V = V[:, None]
    if ks.ndim != 1 or ks.size < 2 or V.shape[0] != ks.size:
        raise ValidationError("need at least two knots with one value row per knot")
    if np.any(np.diff(ks) <= 0) or ks[0] != 0.0 or ks[-1] != 1.0:
        raise ValidationError("knots must increase strictly from 0 to 1")

    def theta(ts):
        ts = np.asarray(ts, dtype=float)
        return np.stack([np.interp(ts, ks, V[:, j]) for j in range(V.shape[1])], axis=-1)

    sig = sigma_from_spec(sigma) if not callable(sigma) else sigma
    src = {"kind": "piecewise_linear", "knots": ks.tolist(), "values": V.tolist(),
           "sigma": sigma}
    curve = ParamCurve(d=V.shape[1], theta_fn=theta, sigma_fn=sig, kind="piecewise_linear",
                       declared_beta=float(declared_beta),
                       declared_rho=0.5 if declared_rho is None else float(declared_rho),
                       name=name, source=src)
    if declared_rho is None:
        curve = _with_measured_rho(curve)
    return curve


def _with_measured_rho(curve: ParamCurve, grid_size: int = 1024) -> ParamCurve:
    from .polyroots import spectral_radius

    ts = np.linspace(0.0, 1.0, grid_size)
    worst = max(spectral_radius(th) for th in curve.theta_grid(ts))
    if not worst < 1:
        raise ValidationError(
            f"curve {curve.name!r} is not stable on [0,1] (spectral radius {worst:.6g})")
    return ParamCurve(d=curve.d, theta_fn=curve.theta_fn, sigma_fn=curve.sigma_fn,
                      kind=curve.kind, declared_beta=curve.declared_beta,
                      declared_rho=max(worst, 1e-12), name=curve.name,
                      derivative_fn=curve.derivative_fn, source=curve.source)


# -- root trajectories --------------------------------------------------------

def coefficients_from_roots(roots) -> np.ndarray:
    """Coefficients of ``prod_k (1 - lam_k z) = 1 - sum_j theta_j z^j``.

    ``roots`` has shape (d,) or (m, d); returns real theta of the same shape.
    The result is ``theta_k = (-1)^(k+1) e_k(lam)`` with ``e_k`` the k-th
    elementary symmetric function.
    """
    lam = np.asarray(roots, dtype=complex)
    single = lam.ndim == 1
    lam = np.atleast_2d(lam)
    m, d = lam.shape
    # poly[:, j] is the coefficient of z^j
    poly = np.zeros((m, d + 1), dtype=complex)
    poly[:, 0] = 1.0
    for k in range(d):
        poly[:, 1:k + 2] = poly[:, 1:k + 2] - lam[:, k:k + 1] * poly[:, 0:k + 1]
    theta = -poly[:, 1:]
    scale = np.maximum(1.0, np.abs(theta))
    if np.any(np.abs(theta.imag) > 1e-10 * scale):
        raise ValidationError("root set is not closed under complex conjugation")
    theta = theta.real
    return theta[0] if single else theta


def _check_conjugate_closed(lam: np.ndarray, tol: float = 1e-10):
    for row in np.atleast_2d(lam):
        remaining = list(np.conj(row))
        for z in row:
            dist = [abs(z - w) for w in remaining]
            j = int(np.argmin(dist))
            if dist[j] > tol * max(1.0, abs(z)):
                raise ValidationError("root set is not closed under complex conjugation")
            remaining.pop(j)


def curve_from_roots(roots: Sequence[ArrayFn], sigma=1.0, declared_beta=1.0,
                     grid_size: int = 1024, name="roots", source=None) -> ParamCurve:
    """Curve whose local AR polynomial is ``prod_k (1 - lam_k(t) z)``.

    Each element of ``roots`` maps an array of times to complex root values.
    The root multiset must be closed under conjugation at every evaluated t.
    ``declared_rho`` is the largest root modulus seen on a ``grid_size`` grid.
    """
    roots = list(roots)
    if not roots:
        raise ValidationError("need at least one root trajectory")
    d = len(roots)

    def lam_grid(ts):
        ts = np.asarray(ts, dtype=float)
        return np.stack([np.broadcast_to(np.asarray(r(ts), dtype=complex), ts.shape)
                         for r in roots], axis=-1)

    def theta(ts):
        lam = lam_grid(ts)
        _check_conjugate_closed(lam)
        return coefficients_from_roots(lam)

    grid = np.linspace(0.0, 1.0, grid_size)
    lam = lam_grid(grid)
    _check_conjugate_closed(lam)
    rho = float(np.max(np.abs(lam)))
    if not rho < 1:
        raise ValidationError(f"root moduli reach {rho:.6g} >= 1")
    sig = sigma_from_spec(sigma) if not callable(sigma) else sigma
    return ParamCurve(d=d, theta_fn=theta, sigma_fn=sig, kind="roots",
                      declared_beta=float(declared_beta), declared_rho=max(rho, 1e-12),
                      name=name, source=source or {"kind": "roots"})


def root_trajectory(modulus, angle=0.0) -> list[ArrayFn]:
    """Root trajectories from modulus/angle specs (numbers or ``{start, end}``).

    A zero angle gives a single real root (``modulus`` may then be negative);
    a non-zero angle gives a conjugate pair.
    """
    def lin(spec):
        if isinstance(spec, dict):
            a, b = float(spec["start"]), float(spec["end"])
            return lambda ts: a + (b - a) * np.asarray(ts, dtype=float)
        v = float(spec)
        return lambda ts: np.full(np.shape(ts), v)

    r, a = lin(modulus), lin(angle)
    if not isinstance(angle, dict) and float(angle) == 0.0:
        return [lambda ts: r(ts).astype(complex)]
    return [lambda ts: r(ts) * np.exp(1j * a(ts)),
            lambda ts: r(ts) * np.exp(-1j * a(ts))]


def curve_from_config(cfg: dict) -> ParamCurve:
    """Build a curve from its config mapping (see README for the schema)."""
    kind = cfg.get("kind")
    sigma = cfg.get("sigma", 1.0)
    beta = cfg.get("declared_beta")
    rho = cfg.get("declared_rho")
    name = cfg.get("name")
    if kind == "closed_form":
        return closed_form(cfg["family"], dict(cfg.get("params", {})), sigma=sigma,
                           declared_beta=beta, declared_rho=rho, name=name)
    if kind == "piecewise_linear":
        return piecewise_linear(cfg["knots"], cfg["values"], sigma=sigma,
                                declared_beta=1.0 if beta is None else beta,
                                declared_rho=rho, name=name or "piecewise")
    if kind == "roots":
        trajs = []
        for spec in cfg["roots"]:
            trajs.extend(root_trajectory(spec["modulus"], spec.get("angle", 0.0)))
        curve = curve_from_roots(trajs, sigma=sigma,
                                 declared_beta=1.0 if beta is None else beta,
                                 name=name or "roots", source=dict(cfg))
        if rho is not None:
            if float(rho) < curve.declared_rho - 1e-12:
                raise ValidationError(
                    f"declared_rho={rho} is below the root moduli ({curve.declared_rho:.6g})")
            curve = ParamCurve(d=curve.d, theta_fn=curve.theta_fn, sigma_fn=curve.sigma_fn,
                               kind="roots", declared_beta=curve.declared_beta,
                               declared_rho=float(rho), name=curve.name, source=curve.source)
        return curve
    raise ValidationError(f"unknown curve kind {kind!r}; expected one of {KINDS}")
