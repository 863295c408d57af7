"""Reading and writing the interchange files.

* matrix JSON: states, labels, entries (canonical polynomials), origins,
  blocks and the initial population;
* partition JSON, trajectory CSV, verdict JSON;
* initial-distribution strings such as ``"QSh:0.5,QIh:0.5"``.
"""

from __future__ import annotations

import csv
import io
import json
from fractions import Fraction
from typing import Optional, Sequence

import numpy as np

from piff.errors import FormatError
from piff.idtmc import PolyMatrix
from piff.poly import QuadForm, RawPoly

MATRIX_FORMAT = "piff-matrix/1"


def matrix_to_json(M: PolyMatrix) -> dict:
    entries = []
    for (i, j) in sorted(M.entries):
        e = {"row": i, "col": j, "poly": M.entries[(i, j)].to_json()}
        if M.raw is not None and (i, j) in M.raw:
            e["raw"] = M.raw[(i, j)].to_json()
        entries.append(e)
    return {
        "format": MATRIX_FORMAT,
        "states": list(M.states),
        "labels": {z: list(M.labels.get(z, ())) for z in M.states} if M.labels else {},
        "entries": entries,
        "origin": M.origin,
        "blocks": M.blocks,
        "init": M.init,
    }


def matrix_from_json(obj: dict) -> PolyMatrix:
    try:
        states = [str(z) for z in obj["states"]]
        S = len(states)
        if len(set(states)) != S:
            raise FormatError("duplicate state names")
        entries: dict[tuple[int, int], QuadForm] = {}
        raw: dict[tuple[int, int], RawPoly] = {}
        for e in obj.get("entries", []):
            i, j = int(e["row"]), int(e["col"])
            if not (0 <= i < S and 0 <= j < S):
                raise FormatError(f"entry ({i}, {j}) outside the state list")
            if (i, j) in entries:
                raise FormatError(f"entry ({i}, {j}) repeated")
            f = QuadForm.from_json(e["poly"])
            if f.S != S:
                raise FormatError(f"entry ({i}, {j}) has dimension {f.S}, expected {S}")
            entries[(i, j)] = f
            if "raw" in e:
                r = RawPoly.from_json(e["raw"], S)
                if r.homogenize() != f:
                    raise FormatError(f"entry ({i}, {j}): raw and canonical forms disagree")
                raw[(i, j)] = r
        labels = {str(z): tuple(v) for z, v in obj.get("labels", {}).items()}
        init = {str(z): int(n) for z, n in obj.get("init", {}).items()}
        for z in list(labels) + list(init):
            if z not in states:
                raise FormatError(f"unknown state {z}")
    except (KeyError, TypeError, ValueError) as exc:
        raise FormatError(f"malformed matrix JSON: {exc}") from None
    return PolyMatrix(states, entries, raw if len(raw) == len(entries) else None, labels,
                      dict(obj.get("origin", {})), dict(obj.get("blocks", {})), init)


def write_matrix(M: PolyMatrix, path: str):
    with open(path, "w") as fh:
        json.dump(matrix_to_json(M), fh, separators=(",", ":"))
        fh.write("\n")


def read_matrix(path: str) -> PolyMatrix:
    with open(path) as fh:
        try:
            obj = json.load(fh)
        except json.JSONDecodeError as exc:
            raise FormatError(f"{path}: not valid JSON ({exc})") from None
    return matrix_from_json(obj)


# -- distributions -------------------------------------------------------------


def parse_distribution(text: str, states: Sequence[str]) -> list[Fraction]:
    """``"QSh:0.5,QIh:1/2"`` to an exact vector over *states* (missing = 0)."""
    vec = {z: Fraction(0) for z in states}
    for part in filter(None, (p.strip() for p in text.split(","))):
        if ":" not in part:
            raise FormatError(f"expected state:value, got {part!r}")
        z, v = (x.strip() for x in part.rsplit(":", 1))
        if z not in vec:
            raise FormatError(f"unknown state {z!r}")
        try:
            val = Fraction(v)
        except (ValueError, ZeroDivisionError):
            raise FormatError(f"bad value {v!r} for state {z}") from None
        if val < 0:
            raise FormatError(f"negative value for state {z}")
        vec[z] += val
    total = sum(vec.values())
    if total != 1:
        raise FormatError(f"values sum to {total}, not 1")
    return [vec[z] for z in states]


def init_distribution(M: PolyMatrix) -> list[Fraction]:
    total = sum(M.init.values())
    if not total:
        raise FormatError("the matrix carries no initial population; pass --init")
    return [Fraction(M.init.get(z, 0), total) for z in M.states]


def counts_from_distribution(dist: Sequence[Fraction], N: int) -> list[int]:
    """Largest-remainder rounding of ``N * dist`` to integers summing to N."""
    exact = [Fraction(d) * N for d in dist]
    base = [int(x) for x in exact]
    rest = N - sum(base)
    order = sorted(range(len(dist)), key=lambda k: (-(exact[k] - base[k]), k))
    for k in order[:rest]:
        base[k] += 1
    return base


# -- trajectories and verdicts -------------------------------------------------


def trajectory_csv(states: Sequence[str], traj: np.ndarray, t0: int = 0) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["t", *states])
    for t, row in enumerate(traj):
        w.writerow([t + t0, *(repr(float(x)) for x in row)])
    return buf.getvalue()


def read_trajectory_csv(text: str) -> tuple[list[str], np.ndarray]:
    rows = list(csv.reader(io.StringIO(text)))
    rows = [r for r in rows if r and not r[0].startswith("#")]
    if not rows or rows[0][0] != "t":
        raise FormatError("trajectory CSV must start with a 't,...' header")
    states = rows[0][1:]
    data = np.array([[float(x) for x in r[1:]] for r in rows[1:]])
    return states, data.reshape(len(rows) - 1, len(states))


def verdict_json(state: str, time: int, formula: str, verdict: bool,
                 probability: Optional[float]) -> dict:
    return {"state": state, "time": time, "formula": formula, "verdict": bool(verdict),
            "probability": probability}
