"""Seeded Monte Carlo risk estimation and checks of the risk expansions.

Replicate ``r`` of sample size ``n`` always uses the path seed
``replicate_seed(master_seed, n, r)``, and replicates are processed in fixed
blocks whose composition does not depend on the number of workers.  All
replicate averages are exactly rounded sums (:func:`math.fsum`), so reports
are bit-identical whatever the worker count or completion order.
"""
from __future__ import annotations

import csv
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

import numpy as np
from scipy.signal import lfilter

from . import engine
from .curves import ParamCurve
from .errors import NumericalError, TVARError, ValidationError
from .linalg import fractional_power, jacobi_eigh, operator_norm
from .local_stationary import local_covariance
from .nlms import romberg_combine, time_index
from .rng import InnovationSpec
from .tvar import curve_grids, fmt, resolve_init

BLOCK = 512
ESTIMATORS = ("nlms", "romberg")


def step_size_rule(n: int, beta: float, alpha: float) -> float:
    """Minimax step size ``alpha n^(-2 beta / (1 + 2 beta))``."""
    if n < 1:
        raise ValidationError("n must be >= 1")
    if not alpha > 0 or not beta > 0:
        raise ValidationError("alpha and beta must be positive")
    return alpha * n ** (-2.0 * beta / (1.0 + 2.0 * beta))


@dataclass(frozen=True)
class StepRule:
    """Either a fixed step size or the minimax power rule."""

    kind: str = "fixed"
    value: float = 0.05
    alpha: float = 1.0
    beta: float = 1.0

    def __post_init__(self):
        if self.kind not in ("fixed", "minimax"):
            raise ValidationError(f"unknown step rule {self.kind!r}")
        if self.kind == "fixed" and not self.value > 0:
            raise ValidationError("fixed step size must be positive")

    def __call__(self, n: int) -> float:
        if self.kind == "fixed":
            return self.value
        return step_size_rule(n, self.beta, self.alpha)


@dataclass
class Scenario:
    curve: ParamCurve
    spec: InnovationSpec
    n_list: list
    t_points: list
    mu_rule: StepRule
    replicates: int = 200
    master_seed: int = 0
    estimator: str = "nlms"
    gamma: float | None = None
    eta: float | None = None
    init: str = "zero"

    def __post_init__(self):
        self.n_list = [int(n) for n in self.n_list]
        self.t_points = [float(t) for t in self.t_points]
        if self.replicates < 2:
            raise ValidationError("replicates must be >= 2")
        if not self.n_list or min(self.n_list) < 10:
            raise ValidationError("every n must be >= 10")
        if not self.t_points or any(not 0 < t <= 1 for t in self.t_points):
            raise ValidationError("t_points must lie in (0,1]")
        if self.eta is not None and min(self.t_points) < self.eta:
            raise ValidationError(f"t_points must be >= eta={self.eta}")
        if self.estimator not in ESTIMATORS:
            raise ValidationError(f"estimator must be one of {ESTIMATORS}")
        if self.gamma is not None and not 0 < self.gamma < 1:
            raise ValidationError(f"gamma={self.gamma} must lie in (0,1)")
        if self.estimator == "romberg" and self.gamma is None:
            raise ValidationError("the romberg estimator needs gamma in (0,1)")


# -- replicate execution -------------------------------------------------------

def _block_task(args):
    rows, sig, n, spec, seeds, init, chol0, mus, record, first = args
    try:
        res = engine.run_block(rows, sig, n, spec, seeds, init=init, chol0=chol0,
                               mus=mus, record=record)
    except TVARError as exc:
        raise type(exc)(f"replicates {first}..{first + len(seeds) - 1}: {exc}") from exc
    for mu, arr in res.records.items():
        bad = ~np.isfinite(arr).all(axis=(0, 2))
        if bad.any():
            raise NumericalError(f"replicate {first + int(np.argmax(bad))}: "
                                 f"non-finite estimate for mu={mu}")
    return res.records


def run_replicates(curve: ParamCurve, spec: InnovationSpec, n: int, mus, record,
                   replicates: int, master_seed: int, init="zero", workers: int = 1):
    """Estimates at the ``record`` indices for every replicate.

    Returns ``{mu: array (len(record), replicates, d)}``.
    """
    init_v, chol0 = resolve_init(curve, init)
    rows, sig = curve_grids(curve, n)
    seeds = [engine.replicate_seed(master_seed, n, r) for r in range(replicates)]
    tasks = [(rows, sig, n, spec, seeds[b:b + BLOCK], init_v, chol0, tuple(mus),
              tuple(record), b) for b in range(0, replicates, BLOCK)]
    if workers > 1 and len(tasks) > 1:
        with ProcessPoolExecutor(max_workers=min(workers, len(tasks))) as pool:
            parts = list(pool.map(_block_task, tasks))
    else:
        parts = [_block_task(t) for t in tasks]
    rec = sorted(set(record))
    out = {}
    for mu in mus:
        out[mu] = np.concatenate([p[mu] for p in parts], axis=1) if parts else \
            np.zeros((len(rec), 0, curve.d))
    return out


# -- summaries -------------------------------------------------------------------

def fsum_mean(a: np.ndarray) -> np.ndarray:
    """Exactly rounded mean over axis 0 (independent of summation order)."""
    a = np.asarray(a, dtype=float)
    flat = a.reshape(a.shape[0], -1)
    m = np.array([math.fsum(flat[:, j]) for j in range(flat.shape[1])]) / a.shape[0]
    return m.reshape(a.shape[1:])


@dataclass
class RiskCell:
    """Monte Carlo risk summary at one (n, t).

    ``cov`` is the 1/R sample covariance so that ``msem = cov + bias bias^T``
    holds exactly; ``cov_unbiased`` rescales it by R/(R-1).
    """

    n: int
    t: float
    mu: float
    estimator: str
    msem: np.ndarray
    bias: np.ndarray
    cov: np.ndarray
    cov_unbiased: np.ndarray
    lp_risk: dict
    lp_stderr: dict
    bias_stderr: np.ndarray
    replicates: int
    errors: np.ndarray = field(repr=False)


def summarize(errors: np.ndarray, n: int, t: float, mu: float, estimator: str) -> RiskCell:
    e = np.asarray(errors, dtype=float)
    R = e.shape[0]
    bias = fsum_mean(e)
    msem = fsum_mean(e[:, :, None] * e[:, None, :])
    msem = 0.5 * (msem + msem.T)
    c = e - bias
    cov = fsum_mean(c[:, :, None] * c[:, None, :])
    cov = 0.5 * (cov + cov.T)
    norms = np.linalg.norm(e, axis=1)
    lp, lp_se = {}, {}
    for p in (1, 2):
        vals = norms ** p
        m = float(fsum_mean(vals))
        lp[p] = m ** (1.0 / p)
        se_m = float(np.std(vals, ddof=1)) / math.sqrt(R)
        lp_se[p] = se_m * m ** (1.0 / p - 1.0) / p if m > 0 else 0.0
    cov_unb = cov * R / (R - 1)
    return RiskCell(n=n, t=t, mu=mu, estimator=estimator, msem=msem, bias=bias, cov=cov,
                    cov_unbiased=cov_unb, lp_risk=lp, lp_stderr=lp_se,
                    bias_stderr=np.sqrt(np.diag(cov_unb) / R), replicates=R, errors=e)


@dataclass
class RiskReport:
    scenario: Scenario
    cells: list

    def cell(self, n: int, t: float, estimator: str | None = None) -> RiskCell:
        for c in self.cells:
            if c.n == n and abs(c.t - t) < 1e-12 and (estimator is None or
                                                      c.estimator == estimator):
                return c
        raise KeyError((n, t, estimator))

    def to_csv(self, fh):
        d = self.scenario.curve.d
        w = csv.writer(fh, lineterminator="\n")
        head = ["n", "t", "mu", "estimator", "replicates", "l1_risk", "l2_risk",
                "l1_stderr", "l2_stderr"]
        head += [f"bias_{i + 1}" for i in range(d)]
        head += [f"bias_stderr_{i + 1}" for i in range(d)]
        head += [f"msem_{i + 1}{j + 1}" for i in range(d) for j in range(d)]
        head += [f"cov_{i + 1}{j + 1}" for i in range(d) for j in range(d)]
        w.writerow(head)
        for c in self.cells:
            row = [c.n, fmt(c.t), fmt(c.mu), c.estimator, c.replicates, fmt(c.lp_risk[1]),
                   fmt(c.lp_risk[2]), fmt(c.lp_stderr[1]), fmt(c.lp_stderr[2])]
            row += [fmt(v) for v in c.bias] + [fmt(v) for v in c.bias_stderr]
            row += [fmt(v) for v in c.msem.ravel()] + [fmt(v) for v in c.cov.ravel()]
            w.writerow(row)


def _estimates(scenario: Scenario, n: int, workers: int, both: bool = False):
    """Per t: dict estimator -> (R, d) estimates, plus mu."""
    mu = scenario.mu_rule(n)
    need_pair = both or scenario.estimator == "romberg"
    mus = [mu, scenario.gamma * mu] if need_pair else [mu]
    idx = [time_index(t, n) for t in scenario.t_points]
    rec = run_replicates(scenario.curve, scenario.spec, n, mus, idx, scenario.replicates,
                         scenario.master_seed, scenario.init, workers)
    order = sorted(set(idx))
    out = []
    for t, k in zip(scenario.t_points, idx):
        j = order.index(k)
        est = {"nlms": rec[mus[0]][j]}
        if need_pair:
            est["romberg"] = romberg_combine(rec[mus[0]][j], rec[mus[1]][j], scenario.gamma)
            est["nlms_gamma"] = rec[mus[1]][j]
        out.append((t, est))
    return mu, out


def monte_carlo_msem(scenario: Scenario, workers: int = 1) -> RiskReport:
    """Bias, covariance, MSEM and L^1/L^2 risks of the scenario's estimator."""
    cells = []
    for n in scenario.n_list:
        mu, per_t = _estimates(scenario, n, workers)
        for t, est in per_t:
            err = est[scenario.estimator] - scenario.curve.theta(t)
            cells.append(summarize(err, n, t, mu, scenario.estimator))
    return RiskReport(scenario=scenario, cells=cells)


# -- rate fitting ----------------------------------------------------------------

@dataclass(frozen=True)
class RateFit:
    slope: float
    intercept: float
    r_squared: float
    points: tuple

    def summary(self) -> dict:
        return {"slope": self.slope, "intercept": self.intercept, "r_squared": self.r_squared,
                "points": len(self.points)}


def rate_fit(ns, risks) -> RateFit:
    """Least-squares line through ``(log n, log risk)``."""
    ns = np.asarray(ns, dtype=float)
    risks = np.asarray(risks, dtype=float)
    if ns.size != risks.size:
        raise ValidationError("ns and risks must have the same length")
    if ns.size < 4:
        raise ValidationError("rate fit needs at least 4 points")
    if ns.max() / ns.min() < 4:
        raise ValidationError("sample sizes must span at least two octaves")
    if np.any(risks <= 0):
        raise ValidationError("risks must be positive")
    x, y = np.log(ns), np.log(risks)
    A = np.column_stack([np.ones_like(x), x])
    (b0, b1), *_ = np.linalg.lstsq(A, y, rcond=None)
    resid = y - (b0 + b1 * x)
    ss_tot = float(np.sum((y - y.mean()) ** 2))
    r2 = 1.0 - float(resid @ resid) / ss_tot if ss_tot > 0 else 1.0
    return RateFit(slope=float(b1), intercept=float(b0), r_squared=r2,
                   points=tuple(zip(x.tolist(), y.tolist())))


def rate_fit_report(report: RiskReport, t: float, estimator: str | None = None,
                    p: int = 2) -> RateFit:
    cells = [c for c in report.cells if abs(c.t - t) < 1e-12 and
             (estimator is None or c.estimator == estimator)]
    cells.sort(key=lambda c: c.n)
    return rate_fit([c.n for c in cells], [c.lp_risk[p] for c in cells])


# -- deterministic bias ----------------------------------------------------------

def deterministic_bias_oracle(curve: ParamCurve, mu: float, n: int, t: float) -> np.ndarray:
    """Noise-free leading bias at ``m = [tn]``.

    ``J_{k+1} = (I - mu Sigma(m/n)) J_k + (theta(k/n) - theta((k+1)/n))``,
    ``J_0 = 0``, run to ``k + 1 = m``.  The recursion is carried out in the
    eigenbasis of ``Sigma(m/n)``, where it splits into d scalar first-order
    recursions.
    """
    if not mu > 0:
        raise ValidationError("mu must be positive")
    m = time_index(t, n)
    S = local_covariance(curve, m / n).matrix
    w, U = jacobi_eigh(S)
    theta = curve.theta_grid(np.arange(m + 1) / n)
    xi = theta[:-1] - theta[1:]
    y = xi @ U
    out = np.empty(curve.d)
    for i in range(curve.d):
        out[i] = lfilter([1.0], [1.0, -(1.0 - mu * w[i])], y[:, i])[-1] if m else 0.0
    return U @ out


def predicted_bias(curve: ParamCurve, t: float, mu: float, n: int, theta_t_beta,
                   beta: float) -> np.ndarray:
    """``Gamma(beta+1) (mu n)^(-beta) Sigma(t)^(-beta) theta_{t,beta}``."""
    S = local_covariance(curve, t).matrix
    return math.gamma(beta + 1.0) * (mu * n) ** (-beta) * \
        (fractional_power(S, -beta) @ np.asarray(theta_t_beta, dtype=float))


def taylor_coefficient(curve: ParamCurve, t: float) -> np.ndarray:
    """Power-law coefficient of order 1 left of t for a differentiable curve: ``-theta'(t)``."""
    return -curve.derivative(t)


@dataclass
class ExpansionResidual:
    n: int
    t: float
    mu: float
    empirical_bias: np.ndarray
    predicted_bias: np.ndarray
    bias_stderr: np.ndarray
    bias_residual: float
    empirical_cov: np.ndarray
    predicted_cov: np.ndarray
    cov_residual: float
    remainder_scales: dict


def msem_expansion_check(scenario: Scenario, theta_t_beta=None, beta: float = 1.0,
                         beta_prime: float | None = None, workers: int = 1):
    """Compare empirical bias and covariance with the first-order expansion.

    ``theta_t_beta`` defaults to ``-theta'(t)`` (order-1 Taylor coefficient).
    The reported remainder scales are the individual terms of the error
    bound, without constants; ``beta_prime`` defaults to ``beta + 1``.
    """
    if scenario.estimator != "nlms":
        raise ValidationError("expansion check applies to the plain nlms estimator")
    bp = beta + 1.0 if beta_prime is None else beta_prime
    report = monte_carlo_msem(scenario, workers)
    out = []
    for c in report.cells:
        tb = taylor_coefficient(scenario.curve, c.t) if theta_t_beta is None else theta_t_beta
        pb = predicted_bias(scenario.curve, c.t, c.mu, c.n, tb, beta)
        pc = c.mu * scenario.curve.sigma(c.t) ** 2 / 2 * np.eye(scenario.curve.d)
        mn = c.mu * c.n
        scales = {"mu": c.mu, "sqrt_mu_x_mun^-beta/2": math.sqrt(c.mu) * mn ** (-beta / 2),
                  "mun^-2beta": mn ** (-2 * beta), "mun^-beta'": mn ** (-bp),
                  "sqrt_mu_x_mun^-beta": math.sqrt(c.mu) * mn ** (-beta)}
        out.append(ExpansionResidual(
            n=c.n, t=c.t, mu=c.mu, empirical_bias=c.bias, predicted_bias=pb,
            bias_stderr=c.bias_stderr, bias_residual=float(np.linalg.norm(c.bias - pb)),
            empirical_cov=c.cov_unbiased, predicted_cov=pc,
            cov_residual=operator_norm(c.cov_unbiased - pc), remainder_scales=scales))
    return out


@dataclass
class CenteredRisk:
    n: int
    t: float
    mu: float
    centered: float
    centered_stderr: float
    uncentered: float
    uncentered_stderr: float
    centering: np.ndarray
    bound_shape: float


def centered_residual(scenario: Scenario, p: int = 2, workers: int = 1):
    """L^p norm of ``theta_hat - theta(t) + (mu n)^-1 Sigma(t)^-1 theta'(t)`` per (n, t)."""
    if not scenario.curve.has_derivative:
        raise ValidationError(f"curve {scenario.curve.name!r} has no registered derivative")
    out = []
    for n in scenario.n_list:
        mu, per_t = _estimates(scenario, n, workers)
        for t, est in per_t:
            S = local_covariance(scenario.curve, t).matrix
            shift = np.linalg.solve(S, scenario.curve.derivative(t)) / (mu * n)
            err = est["nlms"] - scenario.curve.theta(t)
            cen = summarize(err + shift, n, t, mu, "nlms-centered")
            unc = summarize(err, n, t, mu, "nlms")
            beta = min(max(scenario.curve.declared_beta, 1.0), 2.0)
            shape = math.sqrt(mu) + (mu * n) ** (-beta) + (mu * n) ** (-2)
            out.append(CenteredRisk(n=n, t=t, mu=mu, centered=cen.lp_risk[p],
                                    centered_stderr=cen.lp_stderr[p],
                                    uncentered=unc.lp_risk[p],
                                    uncentered_stderr=unc.lp_stderr[p], centering=-shift,
                                    bound_shape=shape))
    return out


theorem7_residual = centered_residual  # name used by the published interface


# -- paired comparison ----------------------------------------------------------

@dataclass
class PairedCell:
    n: int
    t: float
    mu: float
    gamma: float
    nlms: RiskCell
    romberg: RiskCell
    ratio: float
    ratio_stderr: float


@dataclass
class ComparisonReport:
    scenario: Scenario
    cells: list

    def to_csv(self, fh):
        d = self.scenario.curve.d
        w = csv.writer(fh, lineterminator="\n")
        head = ["n", "t", "mu", "gamma", "nlms_l2", "nlms_l2_stderr", "romberg_l2",
                "romberg_l2_stderr", "ratio", "ratio_stderr"]
        head += [f"nlms_bias_{i + 1}" for i in range(d)]
        head += [f"romberg_bias_{i + 1}" for i in range(d)]
        w.writerow(head)
        for c in self.cells:
            row = [c.n, fmt(c.t), fmt(c.mu), fmt(c.gamma), fmt(c.nlms.lp_risk[2]),
                   fmt(c.nlms.lp_stderr[2]), fmt(c.romberg.lp_risk[2]),
                   fmt(c.romberg.lp_stderr[2]), fmt(c.ratio), fmt(c.ratio_stderr)]
            row += [fmt(v) for v in c.nlms.bias] + [fmt(v) for v in c.romberg.bias]
            w.writerow(row)


def paired_ratio(a_err: np.ndarray, b_err: np.ndarray):
    """L^2-risk ratio of a over b on paired replicates, with delta-method stderr."""
    a = np.sum(a_err ** 2, axis=1)
    b = np.sum(b_err ** 2, axis=1)
    R = a.size
    ma, mb = float(fsum_mean(a)), float(fsum_mean(b))
    r = ma / mb
    C = np.cov(np.vstack([a, b]), ddof=1)
    var_r = (C[0, 0] / mb ** 2 - 2 * ma * C[0, 1] / mb ** 3 + ma ** 2 * C[1, 1] / mb ** 4) / R
    ratio = math.sqrt(r)
    return ratio, math.sqrt(max(var_r, 0.0)) / (2 * ratio)


def compare_estimators(scenario: Scenario, workers: int = 1) -> ComparisonReport:
    """NLMS against the two-step-size combination on the same simulated paths."""
    if scenario.gamma is None:
        raise ValidationError("compare_estimators needs gamma in (0,1)")
    cells = []
    for n in scenario.n_list:
        mu, per_t = _estimates(scenario, n, workers, both=True)
        for t, est in per_t:
            th = scenario.curve.theta(t)
            a = summarize(est["nlms"] - th, n, t, mu, "nlms")
            b = summarize(est["romberg"] - th, n, t, mu, "romberg")
            ratio, se = paired_ratio(b.errors, a.errors)
            cells.append(PairedCell(n=n, t=t, mu=mu, gamma=scenario.gamma, nlms=a, romberg=b,
                                    ratio=ratio, ratio_stderr=se))
    return ComparisonReport(scenario=scenario, cells=cells)
