"""Time the compiled kernels against the numpy fallback.

    python3 benchmarks/bench_kernels.py [--steps 2000] [--repeat 5]
"""

from __future__ import annotations

import argparse
import timeit
from pathlib import Path

import numpy as np

from piff import _pykernels
from piff.pipeline import compile_source

try:
    from piff import _kernels
except ImportError:
    _kernels = None

MODELS = Path(__file__).resolve().parent.parent / "models"


def bench(name: str, steps: int, repeat: int) -> None:
    M = compile_source((MODELS / f"{name}.piff").read_text())[2]
    terms = M.compiled()
    mu0 = np.random.default_rng(0).dirichlet(np.ones(M.S))
    backends = [("python", _pykernels)] + ([("cython", _kernels)] if _kernels else [])
    print(f"{name}: {M.S} states, {len(terms[0])} terms, {steps} steps")
    base = None
    for label, mod in backends:
        t = min(timeit.repeat(lambda: mod.meanfield_run(*terms, mu0, steps), number=1, repeat=repeat))
        base = base or t
        print(f"  meanfield {label:7s} {t * 1e3:9.2f} ms  x{base / t:5.1f}")
    traj = _pykernels.meanfield_run(*terms, mu0, steps)
    h0 = np.eye(M.S)[0]
    base = None
    for label, mod in backends:
        t = min(timeit.repeat(lambda: mod.fastsim_run(*terms, traj, h0), number=1, repeat=repeat))
        base = base or t
        print(f"  fastsim   {label:7s} {t * 1e3:9.2f} ms  x{base / t:5.1f}")


def main() -> None:
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--steps", type=int, default=2000)
    ap.add_argument("--repeat", type=int, default=5)
    args = ap.parse_args()
    if _kernels is None:
        print("compiled kernels not built; timing the fallback only")
    for name in ("si", "rumor", "sir"):
        bench(name, args.steps, args.repeat)


if __name__ == "__main__":
    main()
