"""Command-line entry point: ``piff <subcommand> ...``.

Exit status is 0 on success, 1 when diagnostics were reported and 2 on
usage errors. Diagnostics go to standard error as
``file:line:col: severity: message``.
"""

from __future__ import annotations

import argparse
import json
import sys
from fractions import Fraction
from pathlib import Path
from typing import Optional, Sequence

import numpy as np

from piff import __version__
from piff.analysis import (Checker, aggregate_trajectory, fast_simulation, meanfield_trajectory,
                           parse_pctl, point_mass)
from piff.bisim import Partition, quotient_model, reduce
from piff.errors import (BuildError, DegreeError, DomainError, EvaluationError, FormatError,
                         LabelError, LexError, ModelError, NotLumpableError, NumericError,
                         ParseError, PiffError, TranslationError)
from piff.exactsim import PopulationConfig, monte_carlo, write_result
from piff.formats import (counts_from_distribution, init_distribution,
                          parse_distribution, read_matrix, trajectory_csv, write_matrix)
from piff.frontend import load_model
from piff.idtmc import PolyMatrix, check_stochasticity, matrix_to_flatspec
from piff.labels import assign_labels, parse_label_file
from piff.pipeline import matrix_of
from piff.translator import translate


class Failure(Exception):
    """Diagnostics were printed; exit with status 1."""


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(2, f"{self.prog}: error: {message}\n")


def _report(filename: str, message: str, line: int = 0, col: int = 0, severity: str = "error"):
    where = f"{filename}:{line}:{col}" if line else filename
    print(f"{where}: {severity}: {message}", file=sys.stderr)


def _read(path: str) -> str:
    try:
        return Path(path).read_text()
    except OSError as exc:
        _report(path, exc.strerror or str(exc))
        raise Failure from None


def _write(path: Optional[str], text: str):
    if path is None or path == "-":
        sys.stdout.write(text)
    else:
        Path(path).write_text(text)


def _load_matrix(path: str) -> PolyMatrix:
    try:
        return read_matrix(path)
    except FileNotFoundError:
        _report(path, "no such file")
        raise Failure from None
    except FormatError as exc:
        _report(path, str(exc))
        raise Failure from None


def _labels(M: PolyMatrix, path: str):
    text = _read(path)
    try:
        return assign_labels(M, parse_label_file(text))
    except (ParseError, LexError) as exc:
        d = exc.diagnostic
        _report(path, d.message, d.line, d.col)
    except LabelError as exc:
        _report(path, str(exc))
    raise Failure


def _mu0(M: PolyMatrix, spec: Optional[str], what: str = "--init") -> list[Fraction]:
    try:
        return parse_distribution(spec, M.states) if spec else init_distribution(M)
    except FormatError as exc:
        _report(what, str(exc))
        raise Failure from None


def _parse_const(text: str) -> tuple[str, str]:
    if "=" not in text:
        raise argparse.ArgumentTypeError(f"expected NAME=VALUE, got {text!r}")
    k, v = text.split("=", 1)
    return k.strip(), v.strip()


# -- subcommands -------------------------------------------------------------------


def cmd_compile(args) -> int:
    src = _read(args.model)
    try:
        model = load_model(src, dict(args.const) if args.const else None)
        tr = translate(model, prune=not args.no_prune)
        M = matrix_of(tr)
    except (LexError, ParseError) as exc:
        d = exc.diagnostic
        _report(args.model, d.message, d.line, d.col)
        return 1
    except ModelError as exc:
        for d in exc.diagnostics:
            _report(args.model, d.message, d.line, d.col, d.severity)
        return 1
    except KeyError as exc:
        _report(args.model, exc.args[0])
        return 1
    except (TranslationError, BuildError, DegreeError, EvaluationError) as exc:
        _report(args.model, str(exc))
        return 1
    problems = check_stochasticity(M)
    for p in problems:
        _report(args.model, str(p))
    if problems:
        return 1
    header = f"generated from {Path(args.model).name}: {M.S} states, {len(tr.spec.actions)} actions"
    if args.output:
        _write(args.output, tr.spec.format(header))
    if args.matrix:
        write_matrix(M, args.matrix)
    if not args.quiet:
        print(f"{M.S} states, {len(tr.spec.actions)} actions, {len(M.entries)} matrix entries")
    return 0


def cmd_reduce(args) -> int:
    M = _load_matrix(args.matrix)
    labels = _labels(M, args.labels)
    try:
        q = reduce(M, labels, prefix=args.prefix)
    except NotLumpableError as exc:
        _report(args.matrix, f"not lumpable: {exc}")
        return 1
    if check_stochasticity(q.matrix):
        _report(args.matrix, "quotient rows do not sum to 1", severity="error")
        return 1
    if args.output:
        write_matrix(q.matrix, args.output)
    if args.emit_ff:
        spec = matrix_to_flatspec(q.matrix)
        _write(args.emit_ff, spec.format(f"reduced from {Path(args.matrix).name}: {q.matrix.S} states"))
    part = q.partition_json(M.states)
    if args.partition:
        Path(args.partition).write_text(json.dumps(part, indent=2) + "\n")
    if not args.quiet:
        for b in part["blocks"]:
            print(f"{b['name']}: {' '.join(b['members'])}")
    return 0


def cmd_mf(args) -> int:
    M = _load_matrix(args.matrix)
    mu0 = _mu0(M, args.init)
    traj = meanfield_trajectory(M, mu0, args.steps)
    _write(args.output, trajectory_csv(M.states, traj))
    return 0


def cmd_fastsim(args) -> int:
    M = _load_matrix(args.matrix)
    mu0 = _mu0(M, args.init)
    if args.start:
        if args.start not in M.states:
            _report("--start", f"unknown state {args.start!r}")
            return 1
        h0 = point_mass(M, args.start)
    else:
        h0 = _mu0(M, args.h0, "--h0")
    traj = fast_simulation(M, mu0, h0, args.steps)
    _write(args.output, trajectory_csv(M.states, traj))
    return 0


def _formulas(texts: Sequence[str]):
    out = []
    for text in texts:
        try:
            out.append(parse_pctl(text))
        except ParseError as exc:
            d = exc.diagnostic
            _report("--formula", f"{d.message} in {text!r}", d.line, d.col)
            raise Failure from None
    return out


def cmd_check(args) -> int:
    M = _load_matrix(args.matrix)
    labels = _labels(M, args.labels) if args.labels else M.labels
    mu0 = _mu0(M, args.init)
    formulas = _formulas(args.formula)
    states = args.state or list(M.states)
    for z in states:
        if z not in M.states:
            _report("--state", f"unknown state {z!r}")
            return 1
    checker = Checker(M, labels, mu0)
    out = [checker.check(z, args.time, f).to_json() for f in formulas for z in states]
    payload = out[0] if len(out) == 1 else out
    _write(args.output, json.dumps(payload, indent=2) + "\n")
    return 0


def cmd_simulate(args) -> int:
    M = _load_matrix(args.matrix)
    mu0 = _mu0(M, args.init)
    cfg = PopulationConfig(tuple(counts_from_distribution(mu0, args.N)))
    res = monte_carlo(M, cfg, args.steps, args.replicas, args.seed, threads=args.threads)
    write_result(res, args.output, header=[f"matrix={Path(args.matrix).name} steps={args.steps}"])
    if not args.quiet:
        print(f"wrote {res.replicas} replicas and summary.csv to {args.output}")
    return 0


def cmd_verify(args) -> int:
    full = _load_matrix(args.full)
    red = _load_matrix(args.reduced)
    if not red.blocks:
        _report(args.reduced, "matrix carries no block membership; was it produced by 'reduce'?")
        return 1
    idx = full.index()
    try:
        blocks = [[idx[z] for z in red.blocks[n]] for n in red.states]
        P = Partition.from_blocks(blocks)
        P.validate(full.S)
    except (KeyError, ValueError) as exc:
        _report(args.reduced, f"blocks do not partition the states of {args.full} ({exc})")
        return 1
    ordered = [tuple(sorted(b)) for b in blocks]
    if ordered != list(P.blocks):
        _report(args.reduced, "block order differs from the canonical partition order")
        return 1
    lf = _labels(full, args.labels)
    lr = _labels(red, args.labels)
    ok = True
    for n, b in zip(red.states, P.blocks):
        for i in b:
            if lf[full.states[i]] != lr[n]:
                _report(args.reduced, f"labels of {full.states[i]} differ from block {n}")
                ok = False
    try:
        q = quotient_model(full, P, lf, names=red.states)
    except NotLumpableError as exc:
        _report(args.full, f"not lumpable: {exc}")
        return 1
    if q.matrix.entries != red.entries:
        _report(args.reduced, "entries differ from the quotient of the full matrix")
        ok = False
    mu_full = _mu0(full, args.init)
    mu_red = [sum((mu_full[i] for i in b), Fraction(0)) for b in P.blocks]
    tf = meanfield_trajectory(full, mu_full, args.steps)
    tr = meanfield_trajectory(red, mu_red, args.steps)
    gap = float(np.abs(aggregate_trajectory(tf, P.blocks) - tr).max())
    print(f"mean-field gap over {args.steps} steps: {gap:.3e}")
    if gap > args.tol:
        _report(args.reduced, f"aggregated trajectory differs by {gap:.3e} > {args.tol}")
        ok = False
    formulas = _formulas(args.formula)
    cf, cr = Checker(full, lf, mu_full), Checker(red, lr, mu_red)
    worst = 0.0
    for f in formulas:
        for n, b in zip(red.states, P.blocks):
            vr = cr.check(n, args.time, f)
            for i in b:
                vf = cf.check(full.states[i], args.time, f)
                if vf.verdict != vr.verdict:
                    _report(args.reduced, f"{vf.formula}: verdict at {full.states[i]} differs from {n}")
                    ok = False
                if vf.probability is not None:
                    worst = max(worst, abs(vf.probability - vr.probability))
    if formulas:
        print(f"{len(formulas)} formulas, largest probability gap {worst:.3e}")
        if worst > args.tol:
            _report(args.reduced, f"probabilities differ by {worst:.3e} > {args.tol}")
            ok = False
    print("verified" if ok else "verification failed")
    return 0 if ok else 1


# -- argument parsing ---------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    ap = _Parser(prog="piff", description="Compile, reduce and analyse PiFF population models.")
    ap.add_argument("--version", action="version", version=f"piff {__version__}")
    sub = ap.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("compile", help="translate a .piff model to FlyFast text and matrix JSON")
    p.add_argument("model")
    p.add_argument("-o", "--output", help="FlyFast output file")
    p.add_argument("--matrix", help="matrix JSON output file")
    p.add_argument("--no-prune", action="store_true", help="keep states unreachable from init")
    p.add_argument("--const", action="append", type=_parse_const, metavar="NAME=VALUE",
                   help="override a constant (repeatable)")
    p.add_argument("-q", "--quiet", action="store_true")
    p.set_defaults(func=cmd_compile)

    p = sub.add_parser("reduce", help="bisimulation quotient of a matrix")
    p.add_argument("matrix")
    p.add_argument("--labels", required=True, help="label definition file")
    p.add_argument("-o", "--output", help="reduced matrix JSON")
    p.add_argument("--emit-ff", metavar="FILE", help="also write the reduced FlyFast text")
    p.add_argument("--partition", metavar="FILE", help="write the partition JSON")
    p.add_argument("--prefix", default="Q", help="block name prefix (default Q)")
    p.add_argument("-q", "--quiet", action="store_true")
    p.set_defaults(func=cmd_reduce)

    def common(p, steps=True):
        p.add_argument("matrix")
        p.add_argument("--init", help='initial occupancy, e.g. "QSh:0.5,QIh:0.5" (default: matrix init)')
        if steps:
            p.add_argument("--steps", type=int, required=True)
        p.add_argument("-o", "--output", help="output file (default: standard output)")

    p = sub.add_parser("mf", help="mean-field trajectory as CSV")
    common(p)
    p.set_defaults(func=cmd_mf)

    p = sub.add_parser("fastsim", help="fast simulation of one individual as CSV")
    common(p)
    g = p.add_mutually_exclusive_group(required=True)
    g.add_argument("--start", help="state the individual starts in")
    g.add_argument("--h0", help="initial distribution of the individual")
    p.set_defaults(func=cmd_fastsim)

    p = sub.add_parser("check", help="bounded PCTL check; prints verdict JSON")
    common(p, steps=False)
    p.add_argument("--labels", help="label file (default: labels stored in the matrix)")
    p.add_argument("--state", action="append", help="state to check (repeatable; default all)")
    p.add_argument("--time", type=int, default=0)
    p.add_argument("--formula", action="append", required=True)
    p.set_defaults(func=cmd_check)

    p = sub.add_parser("simulate", help="exact Monte Carlo simulation of N components")
    p.add_argument("matrix")
    p.add_argument("--init", help="initial occupancy (default: matrix init)")
    p.add_argument("--N", type=int, required=True)
    p.add_argument("--steps", type=int, required=True)
    p.add_argument("--replicas", type=int, default=1)
    p.add_argument("--seed", type=int, required=True)
    p.add_argument("--threads", type=int, help="worker threads (default: $PIFF_THREADS or CPU count)")
    p.add_argument("-o", "--output", required=True, help="output directory")
    p.add_argument("-q", "--quiet", action="store_true")
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("verify", help="check a quotient against its full matrix")
    p.add_argument("full")
    p.add_argument("reduced")
    p.add_argument("--labels", required=True)
    p.add_argument("--init", help="initial occupancy of the full matrix (default: its init)")
    p.add_argument("--steps", type=int, default=100)
    p.add_argument("--time", type=int, default=0)
    p.add_argument("--formula", action="append", default=[])
    p.add_argument("--tol", type=float, default=1e-12)
    p.set_defaults(func=cmd_verify)
    return ap


def main(argv: Optional[Sequence[str]] = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    for name in ("steps", "N", "replicas"):
        v = getattr(args, name, None)
        if v is not None and (v < 1 if name != "steps" else v < 0):
            parser.error(f"--{name} must be {'nonnegative' if name == 'steps' else 'positive'}")
    try:
        return args.func(args)
    except Failure:
        return 1
    except (DomainError, NumericError, PiffError) as exc:
        print(f"piff: error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
