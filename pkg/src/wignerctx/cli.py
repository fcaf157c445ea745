"""Command-line front end: ``wigner-ctx <subcommand> ...``.

Exit codes: 0 success, 1 domain errors (negativity, coverage, truncation,
unphysical or unsupported input), 2 usage, parse and IO errors. Outputs are
written to a temporary file and renamed into place, so a failed run leaves no
partial file behind.
"""

from __future__ import annotations

import argparse
import json
import math
import sys

import numpy as np

from . import hvm as hvm_mod
from . import io as fio
from . import measurement as ms
from . import qcompile as qc
from . import states as st
from .errors import (
    CoverageError,
    DimensionError,
    NegativeWignerError,
    ParseError,
    PhysicalityError,
    TruncationError,
    UnsupportedError,
)
from .phase_space import LagrangianSubspace
from .wigner import GridSpec, negativity_report, standard_grid, wigner_grid

VALUE_FLAGS = ("--grid", "--edges")
STATE_KINDS = ("vacuum", "coherent", "squeezed", "thermal", "two-mode-squeezed", "fock", "cat", "product")


class UsageError(Exception):
    pass


def _normalize_argv(argv: list[str]) -> list[str]:
    """Glue ``--grid -6:6:241`` into ``--grid=-6:6:241`` so leading minus signs survive argparse."""
    out = []
    i = 0
    while i < len(argv):
        a = argv[i]
        if a in VALUE_FLAGS and i + 1 < len(argv):
            out.append(f"{a}={argv[i + 1]}")
            i += 2
            continue
        out.append(a)
        i += 1
    return out


def _seed(text: str) -> int:
    try:
        v = int(text, 0)
    except ValueError:
        raise argparse.ArgumentTypeError(f"seed must be an integer, got {text!r}") from None
    if not 0 <= v < 2**64:
        raise argparse.ArgumentTypeError("seed must be an unsigned 64-bit value")
    return v


def _nonneg(text: str) -> int:
    try:
        v = int(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected an integer, got {text!r}") from None
    if v < 0:
        raise argparse.ArgumentTypeError("must be >= 0")
    return v


def _floats(text: str) -> list[float]:
    try:
        return [float(t) for t in text.split(",") if t.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers, got {text!r}") from None


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="wigner-ctx", description="Wigner functions, contextuality verdicts and quadrature measurements.")
    p.add_argument("--threads", type=_nonneg, default=None, help="worker threads (default: $WIGNER_CTX_THREADS, 0 = auto)")
    sub = p.add_subparsers(dest="command", required=True)

    def with_state(sp):
        sp.add_argument("--state", required=True, help="state JSON file")

    def with_grid(sp):
        sp.add_argument("--grid", action="append", help="min:max:count, once (broadcast) or once per axis")

    def with_out(sp, required=False):
        sp.add_argument("--out", required=required, help="output file (default: standard output)")

    s = sub.add_parser("state", help="construct a state and save it as JSON")
    s.add_argument("--kind", required=True, choices=STATE_KINDS)
    s.add_argument("--backbone", choices=("gaussian", "fock"), default="gaussian")
    s.add_argument("--modes", type=int, default=1)
    s.add_argument("--q", type=float, default=0.0)
    s.add_argument("--p", type=float, default=0.0)
    s.add_argument("--r", type=float, default=0.0)
    s.add_argument("--nbar", type=float, default=0.0)
    s.add_argument("--n", type=str, default="0", help="comma-separated occupations")
    s.add_argument("--alpha", type=float, default=1.0)
    s.add_argument("--parity", choices=("even", "odd"), default="even")
    s.add_argument("--cutoff", type=int, default=30)
    s.add_argument("--inputs", nargs="+", help="state files to tensor together (kind=product)")
    with_out(s, required=True)

    s = sub.add_parser("wigner", help="evaluate the Wigner function on a grid (CSV)")
    with_state(s)
    with_grid(s)
    with_out(s, required=True)

    for name, helptext in (("negativity", "report Wigner negativity"), ("verdict", "contextuality verdict")):
        s = sub.add_parser(name, help=helptext)
        with_state(s)
        with_grid(s)
        if name == "verdict":
            s.add_argument("--tol", type=float, default=None)
        with_out(s)

    s = sub.add_parser("quad-pdf", help="outcome distribution of one quadrature (CSV)")
    with_state(s)
    s.add_argument("--label", required=True, help="expression such as 'q1 + 2 p1'")
    s.add_argument("--edges", default=None, help="min:max:count edge points")
    s.add_argument("--method", choices=("wigner", "born"), default="wigner")
    with_out(s)

    s = sub.add_parser("context-pdf", help="joint distribution over a Lagrangian context (JSON)")
    with_state(s)
    s.add_argument("--context", required=True, help="basis expressions separated by ';'")
    s.add_argument("--edges", default=None)
    with_out(s)

    s = sub.add_parser("hvm-sample", help="sample hidden variables of the noncontextual model (CSV)")
    with_state(s)
    with_grid(s)
    s.add_argument("--seed", type=_seed, default=0)
    s.add_argument("--count", type=_nonneg, default=1000)
    with_out(s)

    s = sub.add_parser("hvm-check", help="compare model answers with measurement statistics")
    with_state(s)
    with_grid(s)
    s.add_argument("--seed", type=_seed, default=0)
    s.add_argument("--count", type=_nonneg, default=100_000)
    s.add_argument("--label", action="append", default=[], help="quadrature expression (repeatable)")
    s.add_argument("--context", action="append", default=[], help="context basis, ';'-separated (repeatable)")
    with_out(s)

    s = sub.add_parser("compile", help="compile a quadrature into a measurement circuit (JSON)")
    s.add_argument("--label", required=True)
    s.add_argument("--modes", type=int, required=True)
    with_out(s)

    s = sub.add_parser("simulate", help="simulate homodyne shots of a compiled plan")
    with_state(s)
    g = s.add_mutually_exclusive_group(required=True)
    g.add_argument("--plan", help="plan JSON file")
    g.add_argument("--label", help="quadrature expression to compile on the fly")
    s.add_argument("--shots", type=_nonneg, default=1000)
    s.add_argument("--seed", type=_seed, default=0)
    s.add_argument("--method", choices=("pullback", "gates"), default="pullback")
    with_out(s)
    return p


def _grid(args, modes: int) -> GridSpec:
    if not args.grid:
        return standard_grid(modes)
    try:
        return GridSpec.parse(args.grid, modes)
    except ValueError as exc:
        raise UsageError(str(exc)) from None


def _edges(text):
    if text is None:
        return None
    try:
        lo, hi, n = text.split(":")
        return np.linspace(float(lo), float(hi), int(n))
    except ValueError:
        raise UsageError(f"--edges must look like min:max:count, got {text!r}") from None


def _emit(args, text: str):
    if args.out:
        fio.write_atomic(args.out, text)
    else:
        sys.stdout.write(text)


def _context(text: str, modes: int) -> LagrangianSubspace:
    rows = [qc.parse_quadrature_expr(part, modes).vector for part in text.split(";") if part.strip()]
    try:
        return LagrangianSubspace(np.array(rows))
    except ValueError as exc:
        raise UsageError(f"context {text!r}: {exc}") from None


def _make_state(a) -> st.StateHandle:
    fock = a.backbone == "fock"
    k = a.kind
    if k == "vacuum":
        return st.tensor(*[st.make_fock([0], a.cutoff)] * a.modes) if fock else st.vacuum(a.modes)
    if k == "coherent":
        return st.coherent_fock(a.q, a.p, a.cutoff) if fock else st.coherent(a.q, a.p)
    if k == "squeezed":
        return st.squeezed_vacuum_fock(a.r, a.cutoff) if fock else st.squeezed_vacuum(a.r)
    if k == "thermal":
        if fock:
            return st.tensor(*[st.thermal_fock(a.nbar, a.cutoff)] * a.modes)
        return st.thermal(a.nbar, a.modes)
    if k == "two-mode-squeezed":
        if fock:
            raise UnsupportedError("two-mode squeezed states are built on the Gaussian backbone")
        return st.two_mode_squeezed_vacuum(a.r)
    if k == "fock":
        occ = [int(v) for v in a.n.split(",")]
        return st.make_fock(occ, a.cutoff)
    if k == "cat":
        return st.make_cat(a.alpha, a.parity, a.cutoff)
    if not a.inputs:
        raise UsageError("--kind product needs --inputs")
    return st.tensor(*[fio.load_state(path) for path in a.inputs])


def _cmd(args) -> int:
    c = args.command
    if c == "state":
        fio.save_state(args.out, _make_state(args))
        return 0
    if c == "compile":
        plan = qc.compile_measurement(qc.parse_quadrature_expr(args.label, args.modes))
        _emit(args, fio.dumps(fio.plan_to_dict(plan)))
        return 0
    state = fio.load_state(args.state)
    M = state.modes
    if c == "wigner":
        grid = wigner_grid(state, _grid(args, M), threads=args.threads)
        _emit(args, fio.wigner_csv(grid))
    elif c == "negativity":
        spec = _grid(args, M)
        report = negativity_report(wigner_grid(state, spec, threads=args.threads))
        body = report.to_dict()
        body["grid"] = spec.to_dict()
        _emit(args, fio.dumps(body))
    elif c == "verdict":
        v = hvm_mod.verdict(state, _grid(args, M), tol=args.tol, threads=args.threads)
        report = v.report if isinstance(v, hvm_mod.Noncontextual) else v.witness
        _emit(args, fio.dumps(fio.verdict_dict(v.verdict, report, v.spec, v.scope)))
    elif c == "quad-pdf":
        label = qc.parse_quadrature_expr(args.label, M)
        fn = ms.quadrature_pdf if args.method == "wigner" else ms.born_quadrature_pdf_oracle
        _emit(args, fio.pdf_csv(fn(state, label, _edges(args.edges))))
    elif c == "context-pdf":
        L = _context(args.context, M)
        model = ms.context_distribution(state, L, _edges(args.edges))
        _emit(args, fio.dumps(fio.context_model_dict(model)))
    elif c == "hvm-sample":
        model = hvm_mod.build_hvm(state, _grid(args, M), threads=args.threads)
        _emit(args, fio.samples_csv(model.sample_points(args.seed, args.count, args.threads)))
    elif c == "hvm-check":
        if args.count == 0:
            raise UsageError("hvm-check needs --count > 0")
        model = hvm_mod.build_hvm(state, _grid(args, M), threads=args.threads)
        labels = [qc.parse_quadrature_expr(t, M) for t in args.label] or [
            ms.QuadratureLabel(np.eye(2 * M)[i]) for i in range(2 * M)
        ]
        contexts = [_context(t, M) for t in args.context]
        res = hvm_mod.round_trip(state, model, labels, contexts, seed=args.seed, count=args.count, threads=args.threads)
        body = {
            "labels": [{"label": str(x), "ks": ks} for x, ks in res["labels"]],
            "contexts": [{"context": L.basis.tolist(), "tv": tv} for L, tv in res["contexts"]],
            "count": args.count,
            "seed": args.seed,
        }
        _emit(args, fio.dumps(body))
    elif c == "simulate":
        if args.plan:
            plan = fio.plan_from_dict(fio.load_json(args.plan))
        else:
            plan = qc.compile_measurement(qc.parse_quadrature_expr(args.label, M))
        shots = qc.simulate_homodyne(state, plan, args.shots, args.seed, method=args.method)
        _emit(args, fio.homodyne_csv(shots))
    return 0


DOMAIN_ERRORS = (NegativeWignerError, CoverageError, TruncationError, PhysicalityError, UnsupportedError)
USAGE_ERRORS = (UsageError, ParseError, DimensionError, fio.FormatError, OSError, json.JSONDecodeError)


def run(argv: list[str] | None = None) -> int:
    """Run one subcommand and return its exit code."""
    argv = list(sys.argv[1:] if argv is None else argv)
    parser = build_parser()
    try:
        args = parser.parse_args(_normalize_argv(argv))
    except SystemExit as exc:
        return 0 if exc.code in (0, None) else 2
    try:
        return _cmd(args)
    except DOMAIN_ERRORS as exc:
        print(f"wigner-ctx: error: {exc}", file=sys.stderr)
        return 1
    except USAGE_ERRORS as exc:
        print(f"wigner-ctx: error: {exc}", file=sys.stderr)
        return 2
    except ValueError as exc:
        print(f"wigner-ctx: error: {exc}", file=sys.stderr)
        return 2


def main() -> None:
    sys.exit(run())


if __name__ == "__main__":
    main()
