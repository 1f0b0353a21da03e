"""TVAR sample paths and membership checks for the stability/smoothness classes."""
from __future__ import annotations

import csv
import math
from dataclasses import dataclass

import numpy as np

from . import engine
from .curves import ParamCurve
from .errors import ValidationError
from .polyroots import spectral_radius
from .rng import InnovationSpec, stream_seed

INIT_KINDS = ("zero", "stationary")
DEFAULT_GRID = 1024
RADIUS_RTOL = 1e-10


# -- class membership ----------------------------------------------------------

@dataclass(frozen=True)
class StabilityReport:
    """Grid certificate: ``member`` holds on the ``grid_size`` uniform grid only."""

    member: bool
    worst_radius: float
    worst_t: float
    rho: float
    grid_size: int


def check_stability_class(curve: ParamCurve, rho: float, grid_size: int = DEFAULT_GRID,
                          rtol: float = RADIUS_RTOL) -> StabilityReport:
    """Largest companion spectral radius of ``theta(t_i)``, ``t_i = i/(grid_size-1)``.

    Membership allows a relative slack ``rtol`` (the root finder's accuracy),
    so curves built from roots of modulus exactly ``rho`` are accepted.
    """
    if grid_size < 2:
        raise ValidationError("grid_size must be >= 2")
    ts = np.linspace(0.0, 1.0, grid_size)
    radii = np.array([spectral_radius(th) for th in curve.theta_grid(ts)])
    i = int(np.argmax(radii))
    return StabilityReport(member=bool(radii[i] <= rho * (1.0 + rtol)),
                           worst_radius=float(radii[i]),
                           worst_t=float(ts[i]), rho=rho, grid_size=grid_size)


def lipschitz_seminorm(curve: ParamCurve, beta: float, grid_size: int = DEFAULT_GRID) -> float:
    """``max |theta(t) - theta(s)| / |t - s|^beta`` over grid pairs.

    This is a lower bound on the true semi-norm (the sup is only taken over
    the grid).
    """
    if grid_size < 2:
        raise ValidationError("grid_size must be >= 2")
    if not 0 < beta <= 1:
        raise ValidationError("beta must lie in (0,1]")
    ts = np.linspace(0.0, 1.0, grid_size)
    th = curve.theta_grid(ts)
    best = 0.0
    for i in range(grid_size - 1):
        num = np.linalg.norm(th[i + 1:] - th[i], axis=1)
        den = (ts[i + 1:] - ts[i]) ** beta
        best = max(best, float(np.max(num / den)))
    return best


def radius_bounds(rho: float, d: int) -> tuple[float, float]:
    """Radii ``(a, b)`` with ``B(a) in S(rho) in B(b)`` for Euclidean balls B."""
    if not 0 < rho < 1:
        raise ValidationError("rho must lie in (0,1)")
    if d < 1:
        raise ValidationError("d must be >= 1")
    inner = 1.0 / math.sqrt(sum(rho ** (-2 * j) for j in range(1, d + 1)))
    outer = (1.0 + rho) ** d - 1.0
    return inner, outer


lemma1_bounds = radius_bounds  # name used by the published interface


# -- sample paths ----------------------------------------------------------------

@dataclass(frozen=True, eq=False)
class TVARPath:
    """One realization ``X_1..X_n`` with its initial regressor and innovations.

    ``x0`` is ``[X_0, X_{-1}, ..., X_{-d+1}]``.
    """

    n: int
    x0: np.ndarray
    samples: np.ndarray
    innovations: np.ndarray
    seed: int
    curve_id: str
    init: str = "zero"

    @property
    def d(self) -> int:
        return self.x0.size

    def extended(self) -> np.ndarray:
        """``X_{-d+1}, ..., X_0, X_1, ..., X_n`` as one array."""
        return np.concatenate((self.x0[::-1], self.samples))

    def state(self, k: int) -> np.ndarray:
        """Regressor ``[X_k, X_{k-1}, ..., X_{k-d+1}]`` for ``0 <= k <= n``."""
        ext = self.extended()
        j = k + self.d - 1
        return ext[j - self.d + 1: j + 1][::-1].copy()

    def truncated(self, m: int) -> "TVARPath":
        """The same path observed up to index ``m`` only (``n`` unchanged)."""
        return TVARPath(n=self.n, x0=self.x0, samples=self.samples[:m],
                        innovations=self.innovations[:m], seed=self.seed,
                        curve_id=self.curve_id, init=self.init)

    def to_csv(self, fh):
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["k", "x", "eps"])
        for k in range(self.samples.size):
            w.writerow([k + 1, fmt(self.samples[k]), fmt(self.innovations[k])])


def fmt(x: float) -> str:
    return format(float(x), ".17g")


def curve_grids(curve: ParamCurve, n: int):
    """``theta(k/n)`` rows (as float lists) and ``sigma(k/n)`` for ``k = 0..n``."""
    ts = np.arange(n + 1) / n
    rows = [[float(v) for v in r] for r in curve.theta_grid(ts)]
    sig = [float(v) for v in curve.sigma_grid(ts)]
    return rows, sig


def _stationary_chol(curve: ParamCurve, t: float) -> np.ndarray:
    from .local_stationary import local_covariance_yw

    return np.linalg.cholesky(local_covariance_yw(curve.theta(t), curve.sigma(t)).matrix)


def resolve_init(curve: ParamCurve, init):
    """Validate ``init`` and return ``(init, chol0)`` for the engine."""
    if isinstance(init, str):
        if init not in INIT_KINDS:
            raise ValidationError(f"init must be one of {INIT_KINDS} or a vector")
        if init == "stationary":
            r = spectral_radius(curve.theta(0.0))
            if not r < 1:
                raise ValidationError(
                    f"stationary init needs spectral radius < 1 at t=0 (got {r:.6g})")
            return init, _stationary_chol(curve, 0.0)
        return init, None
    vec = np.atleast_1d(np.asarray(init, dtype=float))
    if vec.shape != (curve.d,):
        raise ValidationError(f"explicit init must have length d={curve.d}")
    return vec, None


def simulate(curve: ParamCurve, n: int, spec: InnovationSpec | None = None, seed: int = 0,
             init="zero") -> TVARPath:
    """Simulate ``X_k = theta((k-1)/n)^T X_{k-1} + sigma(k/n) eps_k``, k = 1..n."""
    if not isinstance(n, (int, np.integer)) or n < 1:
        raise ValidationError("n must be a positive integer")
    spec = spec or InnovationSpec()
    init_v, chol0 = resolve_init(curve, init)
    rows, sig = curve_grids(curve, n)
    res = engine.run_block(rows, sig, n, spec, [seed], init=init_v, chol0=chol0,
                           keep_path=True)
    label = init if isinstance(init, str) else "explicit"
    return TVARPath(n=n, x0=res.x0[0], samples=res.samples[0],
                    innovations=res.innovations[0], seed=seed, curve_id=curve.name,
                    init=label)


def replay(path: TVARPath, curve: ParamCurve) -> np.ndarray:
    """Recompute the samples from ``x0``, the stored innovations and the curve."""
    rows, sig = curve_grids(curve, path.n)
    state = [float(v) for v in path.x0]
    out = np.empty(path.samples.size)
    for k in range(path.samples.size):
        x = engine.ar_step(rows[k], state, sig[k + 1], float(path.innovations[k]))
        out[k] = x
        state = [x] + state[:-1]
    return out


def check_replay(path: TVARPath, curve: ParamCurve) -> bool:
    if curve.d != path.d:
        return False
    return bool(np.array_equal(replay(path, curve), path.samples))


def simulate_states(curve: ParamCurve, n: int, spec: InnovationSpec, seed: int,
                    replicates: int, k: int, init="stationary", frozen_at=None,
                    block: int = 1024):
    """Regressors ``X_k`` of ``replicates`` independent paths, shape (R, d).

    With ``frozen_at=t`` also returns the coupled frozen-parameter process
    ``Z_k`` (stationary at t, same innovations); otherwise ``None``.
    """
    init_v, chol0 = resolve_init(curve, init)
    rows, sig = curve_grids(curve, n)
    frozen = None
    if frozen_at is not None:
        frozen = engine.Frozen(theta=[float(v) for v in curve.theta(frozen_at)],
                               sigma=curve.sigma(frozen_at),
                               chol=_stationary_chol(curve, frozen_at))
    seeds = [stream_seed(seed, "replicate", r) for r in range(replicates)]
    X, Z = [], []
    for b in range(0, replicates, block):
        res = engine.run_block(rows, sig, n, spec, seeds[b:b + block], init=init_v,
                               chol0=chol0, stop=k, frozen=frozen)
        X.append(res.state)
        if frozen is not None:
            Z.append(res.frozen_state)
    return np.concatenate(X), (np.concatenate(Z) if frozen is not None else None)
