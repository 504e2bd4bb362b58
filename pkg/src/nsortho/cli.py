"""Command-line interface: ``nsortho <command> [flags]``.

Exit codes are shared by every command: 0 success, 1 numeric failure
(solver breakdown, divergence, failed certificate), 2 usage error.
JSON is written with sorted keys so identical inputs give identical bytes.
"""

from __future__ import annotations

import argparse
import json
import logging
import math
import sys
from typing import Sequence

import numpy as np

from . import __version__
from .bench import BenchConfig, Bounds, OracleCapError, format_bench, run_bench
from .engine import (
    ConvergenceTrace,
    NormalizationMethod,
    OrthoConfig,
    _normalize,
    _record,
    format_matrix,
    orthogonalize,
    read_matrix,
    run_polys,
)
from .minimax import MAX_TERMS, best_cubic, best_odd, remez
from .poly import Composition
from .schedule import (
    Schedule,
    backchained_schedule,
    cans_schedule,
    delta_design,
    stage_images,
    verify_composition,
)
from .stiefel import check_point, orth_residual, polar_retract, project_tangent

log = logging.getLogger("nsortho")

EXIT_OK, EXIT_NUMERIC, EXIT_USAGE = 0, 1, 2


class UsageError(Exception):
    pass


class NumericFailure(Exception):
    pass


# -- helpers -------------------------------------------------------------------


def _emit(text: str, path: str | None) -> None:
    if path in (None, "-"):
        sys.stdout.write(text)
    else:
        with open(path, "w") as fh:
            fh.write(text)


def _dump_json(obj) -> str:
    return json.dumps(obj, sort_keys=True, indent=2) + "\n"


def _read_text(path: str) -> str:
    try:
        if path == "-":
            return sys.stdin.read()
        with open(path) as fh:
            return fh.read()
    except OSError as exc:
        raise UsageError(f"cannot read {path}: {exc.strerror}") from exc


def _load_matrix(path: str) -> np.ndarray:
    try:
        return read_matrix(_read_text(path))
    except ValueError as exc:
        raise UsageError(f"{path}: {exc}") from exc


def _degrees(text: str) -> list[int]:
    try:
        degs = [int(t) for t in text.split(",") if t.strip()]
    except ValueError as exc:
        raise UsageError(f"degrees must be a comma-separated list of integers, got {text!r}") from exc
    if not degs:
        raise UsageError("empty degree list")
    for d in degs:
        if d % 2 != 1 or not 3 <= d <= 2 * MAX_TERMS - 1:
            raise UsageError(f"degrees must be odd and in [3, {2 * MAX_TERMS - 1}], got {d}")
    return degs


def _normalization(text: str) -> NormalizationMethod:
    try:
        return NormalizationMethod.parse(text)
    except ValueError as exc:
        raise UsageError(str(exc)) from exc


def _parse_polys(data) -> tuple[Composition, Schedule | None]:
    """Accept a schedule ({"entries": ...}), {"polys": [...]}, or a bare list
    of coefficient lists / {"coeffs": ...} objects."""
    sched = None
    if isinstance(data, dict) and "entries" in data:
        sched = Schedule.from_dict(data)
        return sched.composition(), sched
    if isinstance(data, dict) and "polys" in data:
        data = data["polys"]
    if isinstance(data, dict) and "coeffs" in data:
        data = [data]
    if not isinstance(data, list) or not data:
        raise ValueError("expected a non-empty list of polynomials")
    return Composition.from_list(data), None


def _load_polys(path: str) -> tuple[Composition, Schedule | None]:
    text = _read_text(path)
    try:
        return _parse_polys(json.loads(text))
    except (ValueError, KeyError, TypeError) as exc:
        raise UsageError(f"{path}: cannot parse coefficients ({exc})") from exc


def _positive(name: str, value: float | None) -> float:
    if value is None:
        raise UsageError(f"--{name} is required")
    if not (math.isfinite(value) and value > 0):
        raise UsageError(f"--{name} must be positive, got {value}")
    return value


def _delta(value: float | None) -> float:
    if value is None:
        raise UsageError("--delta is required")
    if not 0 < value < 1:
        raise UsageError(f"--delta must lie in (0, 1), got {value}")
    return value


# -- remez ---------------------------------------------------------------------


def cmd_remez(args) -> int:
    a, b = _positive("a", args.a), _positive("b", args.b)
    if a > b:
        raise UsageError(f"need a <= b, got a={a}, b={b}")
    if args.degree % 2 != 1 or not 1 <= args.degree <= 2 * MAX_TERMS - 1:
        raise UsageError(f"--degree must be odd and in [1, {2 * MAX_TERMS - 1}], got {args.degree}")
    n = (args.degree + 1) // 2
    if n == 2:
        res = best_cubic(a, b)
    elif n == 1 or a == b:
        res = best_odd(n, a, b) if a == b else remez(a, b, 1)
    else:
        res = remez(a, b, n, tol=args.tol, max_iter=args.max_iter)
        if not res.converged:
            sys.stdout.write(res.to_json() + "\n")
            raise NumericFailure(f"remez did not converge in {args.max_iter} iterations")
    sys.stdout.write(res.to_json() + "\n")
    return EXIT_OK


# -- schedule ------------------------------------------------------------------


def _certificate(sched: Schedule, lo: float, hi: float, grid: int, slack: float):
    """Per-stage image of [lo, hi] against each stage's claimed band."""
    images = stage_images(sched.polys, lo, hi, grid)
    stages = []
    ok = True
    for i, (entry, (ilo, ihi)) in enumerate(zip(sched.entries, images)):
        tlo, thi = entry.post_interval
        good = ilo >= tlo - slack and ihi <= thi + slack
        ok = ok and good
        stages.append({"stage": i, "image": [ilo, ihi], "band": [tlo, thi], "contained": good})
    return {"input": [lo, hi], "grid": grid, "slack": slack, "stages": stages, "contained": ok}


def cmd_schedule(args) -> int:
    degrees = _degrees(args.degrees)
    out: dict = {"mode": args.mode}
    if args.mode == "exact":
        a, b = _positive("a", args.a), _positive("b", args.b)
        if a > b:
            raise UsageError(f"need a <= b, got a={a}, b={b}")
        sched = cans_schedule(a, b, degrees)
        lo, hi = a, b
    elif args.mode == "delta":
        delta = _delta(args.delta)
        dd = delta_design(delta, degrees, B=args.right)
        sched = dd.schedule
        out["a_reach"] = dd.a_reach
        out["bisection_residual"] = dd.residual
        lo, hi = dd.a_reach, dd.right
    else:
        delta = _delta(args.delta)
        if len(set(degrees)) != 1:
            raise UsageError("maxderiv mode takes a single degree")
        if args.iters is None or args.iters < 1:
            raise UsageError("maxderiv mode needs --iters >= 1")
        sched = backchained_schedule((degrees[0] + 1) // 2, args.iters, delta, right=args.right)
        lo, hi = sched.input_interval
        out["a_reach"] = lo
    out.update(sched.to_dict())
    eps = sched.epsilons
    out["epsilons"] = eps
    out["quadratic_steps"] = [eps[i + 1] <= eps[i] ** 2 for i in range(len(eps) - 1)]
    out["derivative_at_zero"] = float(np.prod([p.coeffs[0] for p in sched.polys]))
    cert = _certificate(sched, lo, hi, args.grid, args.slack)
    out["certificate"] = cert
    _emit(_dump_json(out), args.out)
    if not cert["contained"]:
        raise NumericFailure("containment certificate failed for at least one stage")
    return EXIT_OK


# -- orthogonalize -------------------------------------------------------------


def cmd_orthogonalize(args) -> int:
    A = _load_matrix(args.input)
    if A.shape[0] < A.shape[1]:
        raise UsageError(f"input must have rows >= cols, got {A.shape[0]}x{A.shape[1]}")
    if not np.any(A):
        raise UsageError("input matrix is zero")
    norm = _normalization(args.normalization)
    if args.a_hint is not None:
        _positive("a-hint", args.a_hint)
    fixed = None
    sched = None
    if args.schedule:
        comp, sched = _load_polys(args.schedule)
        if sched is None:
            # a bare coefficient list is applied verbatim, e.g. Muon-style lists
            fixed = list(comp.polys)
    dd = None
    if args.delta is not None:
        dd = delta_design(_delta(args.delta), _degrees(args.delta_degrees))

    if fixed is not None:
        X, _, G = _normalize(A, norm)
        trace = ConvergenceTrace()
        mm = norm.matmuls
        _record(trace, 0, mm, X, args.oracle, None)
        Q, _ = run_polys(X, fixed, trace, mm, G, args.oracle, None, args.parallel)
    else:
        if sched is None and dd is None and args.a_hint is None:
            raise UsageError("the spectral interval is unknown: give --schedule, --a-hint, or --delta")
        config = OrthoConfig(
            normalization=norm,
            a_hint=args.a_hint,
            schedule=sched,
            delta_preprocess=dd,
            target_eps=args.target_eps,
            oracle=args.oracle,
            parallel=args.parallel,
        )
        Q, trace = orthogonalize(A, config)
    if args.trace_out:
        _emit(trace.to_csv(), args.trace_out)
    last = trace.last
    if trace.diverged:
        sys.stderr.write(f"diverged at iteration {last.iter}: fro_err = {last.fro_err:.6g}\n")
        return EXIT_NUMERIC
    _emit(format_matrix(Q), args.output)
    sys.stderr.write(f"iterations={last.iter} matmuls={last.matmuls} fro_err={last.fro_err:.6g}\n")
    return EXIT_OK


# -- bench ---------------------------------------------------------------------


def cmd_bench(args) -> int:
    methods = tuple(m.strip() for m in args.methods.split(",") if m.strip())
    try:
        cfg = BenchConfig(
            n=args.n,
            seed=args.seed,
            methods=methods,
            target_eps=args.target_eps,
            normalization=_normalization(args.normalization),
            bounds=Bounds.parse(args.bounds),
            oracle=not args.no_oracle,
            max_iter=args.max_iter,
            delta=_delta(args.delta),
            delta_degrees=tuple(_degrees(args.delta_degrees)),
            parallel=args.parallel,
        )
    except ValueError as exc:
        raise UsageError(str(exc)) from exc
    try:
        results = run_bench(cfg)
    except OracleCapError as exc:
        raise NumericFailure(str(exc)) from exc
    _emit(format_bench(cfg, results), args.out)
    return EXIT_OK


# -- verify --------------------------------------------------------------------


def cmd_verify(args) -> int:
    comp, _ = _load_polys(args.coeffs)
    delta = _delta(args.delta)
    right = None if args.right is None else _positive("right", args.right)
    rep = verify_composition(comp, delta, right=right, grid=args.grid, slack=args.slack)
    _emit(_dump_json(rep.to_dict()), args.out)
    return EXIT_OK if rep.contained else EXIT_NUMERIC


# -- retract -------------------------------------------------------------------


def cmd_retract(args) -> int:
    X = _load_matrix(args.x_file)
    xi = _load_matrix(args.xi_file)
    if xi.shape != X.shape:
        raise UsageError(f"shape mismatch: X is {X.shape}, xi is {xi.shape}")
    if X.shape[0] < X.shape[1]:
        raise UsageError(f"X must be n x p with n >= p, got {X.shape}")
    if args.s < 1:
        raise UsageError("--s must be >= 1")
    try:
        check_point(X)
    except ValueError as exc:
        raise NumericFailure(str(exc)) from exc
    R = polar_retract(X, args.alpha * project_tangent(X, xi), args.s)
    _emit(format_matrix(R), args.output)
    sys.stderr.write(f"orth_residual={orth_residual(R)!r}\n")
    return EXIT_OK


# -- parser --------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="nsortho", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    parser.add_argument("-v", "--verbose", action="store_true", help="log progress to stderr")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("remez", help="optimal odd polynomial on [a, b]")
    p.add_argument("--a", type=float, required=True)
    p.add_argument("--b", type=float, required=True)
    p.add_argument("--degree", type=int, required=True, help="odd polynomial degree")
    p.add_argument("--tol", type=float, default=1e-12)
    p.add_argument("--max-iter", type=int, default=100)
    p.set_defaults(func=cmd_remez)

    p = sub.add_parser("schedule", help="build a polynomial schedule with a containment certificate")
    p.add_argument("--mode", choices=("exact", "delta", "maxderiv"), required=True)
    p.add_argument("--a", type=float)
    p.add_argument("--b", type=float)
    p.add_argument("--delta", type=float)
    p.add_argument("--degrees", required=True, help="comma-separated odd degrees, e.g. 3,3,5")
    p.add_argument("--iters", type=int, help="chain length for maxderiv mode")
    p.add_argument("--right", type=float, help="right boundary for delta/maxderiv (default 1+delta)")
    p.add_argument("--grid", type=int, default=10_000)
    p.add_argument("--slack", type=float, default=1e-9)
    p.add_argument("--out", help="output file (default stdout)")
    p.set_defaults(func=cmd_schedule)

    p = sub.add_parser("orthogonalize", help="orthogonalize a matrix file")
    p.add_argument("--input", required=True)
    p.add_argument("--output", help="output matrix file (default stdout)")
    p.add_argument("--schedule", help="schedule JSON or coefficient list")
    p.add_argument("--a-hint", type=float, help="lower bound on the normalized singular values")
    p.add_argument("--delta", type=float, help="run a delta-orthogonalization preprocessing first")
    p.add_argument("--delta-degrees", default="5,5,5,5,5")
    p.add_argument("--normalization", default="frobenius", help="frobenius, gelfand[:k] or spectral")
    p.add_argument("--target-eps", type=float, default=1e-6)
    p.add_argument("--oracle", action="store_true", help="record spectral error via the reference SVD")
    p.add_argument("--trace-out", help="CSV trace file")
    p.add_argument("--parallel", action="store_true", help="BLAS products (not bit-reproducible)")
    p.set_defaults(func=cmd_orthogonalize)

    p = sub.add_parser("bench", help="convergence benchmark on a seeded Gaussian matrix")
    p.add_argument("--n", type=int, default=300)
    p.add_argument("--seed", type=int, default=42)
    p.add_argument("--methods", default="ns,cans3")
    p.add_argument("--target-eps", type=float, default=1e-6)
    p.add_argument("--normalization", default="gelfand:2")
    p.add_argument("--bounds", default="exact", help="exact, overestimate:A0 or underestimate:A0")
    p.add_argument("--no-oracle", action="store_true", help="skip spectral errors; stop on fro_err")
    p.add_argument("--max-iter", type=int, default=100)
    p.add_argument("--delta", type=float, default=0.3)
    p.add_argument("--delta-degrees", default="5,5,5,5,5")
    p.add_argument("--parallel", action="store_true", help="BLAS products (not bit-reproducible)")
    p.add_argument("--out", help="CSV output file (default stdout)")
    p.set_defaults(func=cmd_bench)

    p = sub.add_parser("verify", help="certify a composition maps [a*, right] into [1-delta, 1+delta]")
    p.add_argument("--coeffs", required=True, help="JSON coefficient list or schedule")
    p.add_argument("--delta", type=float, required=True)
    p.add_argument("--right", type=float, help="right end of the input interval (default 1+delta)")
    p.add_argument("--grid", type=int, default=10_000)
    p.add_argument("--slack", type=float, default=1e-6)
    p.add_argument("--out", help="output file (default stdout)")
    p.set_defaults(func=cmd_verify)

    p = sub.add_parser("retract", help="approximate polar retraction of X + alpha * pi_X(xi)")
    p.add_argument("--x-file", required=True)
    p.add_argument("--xi-file", required=True)
    p.add_argument("--alpha", type=float, required=True)
    p.add_argument("--s", type=int, default=1)
    p.add_argument("--output", help="output matrix file (default stdout)")
    p.set_defaults(func=cmd_retract)
    return parser


def main(argv: Sequence[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, stream=sys.stderr,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except UsageError as exc:
        sys.stderr.write(f"nsortho {args.command}: {exc}\n")
        return EXIT_USAGE
    except (NumericFailure, ArithmeticError, RuntimeError, ValueError) as exc:
        sys.stderr.write(f"nsortho {args.command}: {exc}\n")
        return EXIT_NUMERIC


if __name__ == "__main__":
    sys.exit(main())
