"""Mean-field trajectories and fast simulation of one tracked individual."""

from __future__ import annotations

from typing import Sequence

import numpy as np

from piff import kernels
from piff.errors import DomainError
from piff.idtmc import PolyMatrix

SIMPLEX_TOL = 1e-12


def as_distribution(v: Sequence, S: int, what: str = "occupancy vector") -> np.ndarray:
    x = np.asarray([float(a) for a in v], dtype=np.float64)
    if x.shape != (S,):
        raise DomainError(f"{what} has length {x.size}, expected {S}")
    if (x < -SIMPLEX_TOL).any() or abs(x.sum() - 1.0) > 1e-9:
        raise DomainError(f"{what} is not a probability distribution (sum {x.sum()!r})")
    return x


def meanfield_trajectory(M: PolyMatrix, mu0: Sequence, T: int) -> np.ndarray:
    """Rows ``mu(0) .. mu(T)`` of ``mu(t+1) = mu(t) K(mu(t))``."""
    if T < 0:
        raise ValueError("number of steps must be nonnegative")
    mu = as_distribution(mu0, M.S)
    return kernels.meanfield_run(*M.compiled(), mu, int(T))


def fast_simulation(M: PolyMatrix, mu0: Sequence, h0: Sequence, T: int) -> np.ndarray:
    """Distribution of one individual started in *h0*, moving against the mean field."""
    traj = meanfield_trajectory(M, mu0, T)
    h = as_distribution(h0, M.S, "initial individual distribution")
    return kernels.fastsim_run(*M.compiled(), traj, h)


def point_mass(M: PolyMatrix, state: str) -> np.ndarray:
    idx = M.index()
    if state not in idx:
        raise DomainError(f"unknown state {state!r}")
    h = np.zeros(M.S)
    h[idx[state]] = 1.0
    return h


def aggregate_trajectory(traj: np.ndarray, blocks: Sequence[Sequence[int]]) -> np.ndarray:
    return np.stack([traj[:, list(b)].sum(axis=1) for b in blocks], axis=1)
