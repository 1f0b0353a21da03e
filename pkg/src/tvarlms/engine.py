"""Replicate-vectorized TVAR simulation with NLMS filters run alongside.

All arithmetic is elementwise over the replicate axis and accumulates the
d-term sums in a fixed order, so a replicate's numbers do not depend on
which other replicates share its block.  The same two step functions are
used by the single-path API (on plain floats), which makes single runs and
batched runs agree bit for bit.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .rng import InnovationSpec, InnovationStream, generator, stream_seed

CHUNK = 4096


def ar_step(theta_row, state, sigma, eps):
    """``theta_row . state + sigma * eps`` with the sum taken left to right."""
    acc = theta_row[0] * state[0]
    for i in range(1, len(theta_row)):
        acc = acc + theta_row[i] * state[i]
    return acc + sigma * eps


def nlms_update(theta_hat, state, x_next, mu):
    """One normalized LMS correction; returns the new coefficient list."""
    pred = theta_hat[0] * state[0]
    nrm = state[0] * state[0]
    for i in range(1, len(state)):
        pred = pred + theta_hat[i] * state[i]
        nrm = nrm + state[i] * state[i]
    coef = mu * (x_next - pred) / (1.0 + mu * nrm)
    return [theta_hat[i] + coef * state[i] for i in range(len(state))]


def path_seeds(path_seed: int) -> tuple[int, int]:
    """Seeds of the innovation stream and of the initial-state draw of one path."""
    return stream_seed(path_seed, "innovations"), stream_seed(path_seed, "init")


def replicate_seed(master: int, n: int, r: int) -> int:
    return stream_seed(stream_seed(master, "sample-size", n), "replicate", r)


def initial_state(init, d: int, init_seed: int, chol0: np.ndarray | None):
    """Initial regressor ``[X_0, X_{-1}, ..., X_{-d+1}]`` and the Gaussian draw used.

    ``chol0`` is the Cholesky factor of ``Sigma(0)`` (stationary init only).
    The standard normal vector is always drawn so the coupled frozen process
    can reuse it.
    """
    g = generator(init_seed).standard_normal(d)
    if isinstance(init, str):
        if init == "zero":
            return [0.0] * d, g
        # stationary: x0 = chol0 @ g, row sums left to right
        return [_ordered_row(chol0[i], g) for i in range(d)], g
    return [float(v) for v in init], g


def _ordered_row(row, vec):
    acc = row[0] * vec[0]
    for j in range(1, len(vec)):
        acc = acc + row[j] * vec[j]
    return float(acc)


@dataclass
class Frozen:
    """AR model frozen at one time point, used as a coupled control variate."""

    theta: list
    sigma: float
    chol: np.ndarray


@dataclass
class BlockResult:
    records: dict = field(default_factory=dict)   # mu -> (len(record), B, d)
    samples: np.ndarray | None = None             # (B, n)
    innovations: np.ndarray | None = None         # (B, n)
    x0: np.ndarray | None = None                  # (B, d)
    state: np.ndarray | None = None               # (B, d) regressor at stop
    frozen_state: np.ndarray | None = None        # (B, d)


def run_block(theta_rows, sigmas, n: int, spec: InnovationSpec, path_seed_list,
              init="zero", chol0=None, mus=(), record=(), keep_path=False,
              stop=None, frozen: Frozen | None = None) -> BlockResult:
    """Simulate one block of paths and run one NLMS filter per step size.

    ``theta_rows[k]`` is ``theta(k/n)`` as a list, ``sigmas[k]`` is
    ``sigma(k/n)``.  ``record`` lists the indices k (0..n) at which estimates
    are stored.  ``stop`` truncates the simulation at index ``stop``.
    """
    B = len(path_seed_list)
    d = len(theta_rows[0])
    stop = n if stop is None else stop
    streams, inits = [], []
    for ps in path_seed_list:
        s_innov, s_init = path_seeds(ps)
        streams.append(InnovationStream(spec, s_innov))
        inits.append(initial_state(init, d, s_init, chol0))
    x0 = np.array([v for v, _ in inits], dtype=float).reshape(B, d)
    state = [x0[:, i].copy() for i in range(d)]
    if frozen is not None:
        G = np.array([g for _, g in inits], dtype=float).reshape(B, d)
        zstate = [np.array([_ordered_row(frozen.chol[i], G[b]) for b in range(B)])
                  for i in range(d)]
    record = sorted(set(record))
    want = {k: j for j, k in enumerate(record)}
    recs = {mu: np.zeros((len(record), B, d)) for mu in mus}
    theta_hat = {mu: [np.zeros(B) for _ in range(d)] for mu in mus}
    if 0 in want:
        for mu in mus:
            recs[mu][want[0]] = 0.0
    samples = np.empty((B, stop)) if keep_path else None
    innovs = np.empty((B, stop)) if keep_path else None

    chunk = None
    for k in range(stop):
        c = k % CHUNK
        if c == 0:
            size = min(CHUNK, stop - k)
            chunk = np.stack([s.take(size) for s in streams], axis=1)  # (size, B)
        eps = chunk[c]
        x_new = ar_step(theta_rows[k], state, sigmas[k + 1], eps)
        for mu in mus:
            theta_hat[mu] = nlms_update(theta_hat[mu], state, x_new, mu)
        if frozen is not None:
            z_new = ar_step(frozen.theta, zstate, frozen.sigma, eps)
            zstate = [z_new] + zstate[:-1]
        state = [x_new] + state[:-1]
        if keep_path:
            samples[:, k] = x_new
            innovs[:, k] = eps
        j = want.get(k + 1)
        if j is not None:
            for mu in mus:
                recs[mu][j] = np.stack(theta_hat[mu], axis=1)
    out = BlockResult(records=recs, samples=samples, innovations=innovs, x0=x0,
                      state=np.stack(state, axis=1))
    if frozen is not None:
        out.frozen_state = np.stack(zstate, axis=1)
    return out
