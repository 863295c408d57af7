"""Clock-synchronous Monte Carlo simulation of N interacting components.

At each step every component in state z moves independently according to
row z of K(m), where m is the current empirical occupancy. Components that
share a state share a row, so one multinomial draw per state suffices.
"""

from __future__ import annotations

import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from pathlib import Path
from typing import Optional, Sequence

import numpy as np

from piff.errors import DomainError
from piff.idtmc import PolyMatrix, eval_matrix

THREADS_ENV = "PIFF_THREADS"


@dataclass(frozen=True)
class PopulationConfig:
    counts: tuple[int, ...]

    def __post_init__(self):
        if any(c < 0 for c in self.counts):
            raise DomainError("occupancy counts must be nonnegative")
        if sum(self.counts) == 0:
            raise DomainError("population is empty")

    @property
    def N(self) -> int:
        return sum(self.counts)

    def occupancy(self) -> np.ndarray:
        return np.asarray(self.counts, dtype=np.float64) / self.N


def _step_counts(M: PolyMatrix, counts: np.ndarray, N: int, rng: np.random.Generator) -> np.ndarray:
    K = eval_matrix(M, counts / N)
    nxt = np.zeros(M.S, dtype=np.int64)
    for z in np.flatnonzero(counts):
        row = np.clip(K[z], 0.0, None)
        nxt += rng.multinomial(int(counts[z]), row / row.sum())
    return nxt


def exact_step(M: PolyMatrix, cfg: PopulationConfig, rng: np.random.Generator) -> PopulationConfig:
    if len(cfg.counts) != M.S:
        raise DomainError(f"configuration has {len(cfg.counts)} states, matrix has {M.S}")
    out = _step_counts(M, np.asarray(cfg.counts, dtype=np.int64), cfg.N, rng)
    return PopulationConfig(tuple(int(x) for x in out))


def run_replica(M: PolyMatrix, cfg0: PopulationConfig, T: int, rng: np.random.Generator) -> np.ndarray:
    traj = np.empty((T + 1, M.S), dtype=np.int64)
    traj[0] = cfg0.counts
    for t in range(T):
        traj[t + 1] = _step_counts(M, traj[t], cfg0.N, rng)
    return traj


@dataclass
class SimResult:
    states: list[str]
    N: int
    seed: int
    counts: np.ndarray  # (replicas, T+1, S)

    @property
    def replicas(self) -> int:
        return self.counts.shape[0]

    @property
    def occupancy(self) -> np.ndarray:
        return self.counts / self.N

    @property
    def mean(self) -> np.ndarray:
        return self.occupancy.mean(axis=0)

    @property
    def sd(self) -> np.ndarray:
        return self.occupancy.std(axis=0, ddof=1 if self.replicas > 1 else 0)

    def replica_seed(self, r: int) -> str:
        return f"SeedSequence(entropy={self.seed}, spawn_key=({r},))"


def thread_count(threads: Optional[int] = None) -> int:
    if threads is None:
        env = os.environ.get(THREADS_ENV)
        threads = int(env) if env else (os.cpu_count() or 1)
    return max(1, int(threads))


def monte_carlo(M: PolyMatrix, cfg0: PopulationConfig, T: int, replicas: int, seed: int,
                threads: Optional[int] = None) -> SimResult:
    """Independent replicas; replica r draws from ``SeedSequence(seed).spawn(replicas)[r]``."""
    if replicas < 1:
        raise ValueError("at least one replica is required")
    if len(cfg0.counts) != M.S:
        raise DomainError(f"configuration has {len(cfg0.counts)} states, matrix has {M.S}")
    M.compiled()  # build once before threads share the matrix
    children = np.random.SeedSequence(seed).spawn(replicas)

    def one(r: int) -> np.ndarray:
        return run_replica(M, cfg0, T, np.random.default_rng(children[r]))

    n = min(thread_count(threads), replicas)
    if n == 1:
        out = [one(r) for r in range(replicas)]
    else:
        with ThreadPoolExecutor(max_workers=n) as pool:
            out = list(pool.map(one, range(replicas)))
    return SimResult(list(M.states), cfg0.N, seed, np.stack(out))


def _fmt(x: float) -> str:
    return repr(float(x))


def write_result(res: SimResult, outdir: str | Path, header: Sequence[str] = ()) -> list[Path]:
    """One CSV per replica plus ``summary.csv`` (``t,state,mean,sd``)."""
    outdir = Path(outdir)
    outdir.mkdir(parents=True, exist_ok=True)
    written = []
    width = max(4, len(str(res.replicas - 1)))
    occ = res.occupancy
    for r in range(res.replicas):
        p = outdir / f"replica_{r:0{width}d}.csv"
        lines = [*(f"# {h}" for h in header),
                 f"# seed={res.seed} replica={r} rng={res.replica_seed(r)} N={res.N}",
                 ",".join(["t", *res.states])]
        lines += [",".join([str(t), *(_fmt(x) for x in occ[r, t])]) for t in range(occ.shape[1])]
        p.write_text("\n".join(lines) + "\n")
        written.append(p)
    mean, sd = res.mean, res.sd
    lines = [*(f"# {h}" for h in header),
             f"# seed={res.seed} replicas={res.replicas} N={res.N}", "t,state,mean,sd"]
    for t in range(mean.shape[0]):
        for j, z in enumerate(res.states):
            lines.append(f"{t},{z},{_fmt(mean[t, j])},{_fmt(sd[t, j])}")
    p = outdir / "summary.csv"
    p.write_text("\n".join(lines) + "\n")
    written.append(p)
    return written
