"""Convergence benchmark on a seeded Gaussian matrix.

Every method normalizes the same matrix, applies its designed polynomials,
and then keeps taking classical Newton-Schulz steps until the measured
error reaches the target (or ``max_iter`` is hit), so each trace shows the
iteration and matmul count at which the target was actually reached.
"""

from __future__ import annotations

import io
from dataclasses import dataclass, field

import numpy as np

from .engine import (
    CLASSICAL,
    ConvergenceTrace,
    NormalizationMethod,
    _normalize,
    _record,
    run_polys,
)
from .linalg import SVD_CAP, reference_svd
from .rng import gaussian_matrix
from .schedule import delta_design, schedule_until

METHODS = ("ns", "cans3", "cans5", "delta-preproc")
MAX_N = 1024


@dataclass(frozen=True)
class Bounds:
    """How the left spectral boundary is obtained: exactly, or a guess a0."""

    mode: str = "exact"
    a0: float | None = None

    @classmethod
    def parse(cls, text: str) -> "Bounds":
        name, _, arg = text.partition(":")
        if name == "exact" and not arg:
            return cls("exact")
        if name in ("overestimate", "underestimate"):
            a0 = float(arg)
            if not 0 < a0 < 1:
                raise ValueError(f"a0 must lie in (0, 1), got {arg!r}")
            return cls(name, a0)
        raise ValueError(f"bounds must be exact, overestimate:A0 or underestimate:A0, got {text!r}")

    def __str__(self) -> str:
        return self.mode if self.a0 is None else f"{self.mode}:{self.a0:g}"


@dataclass
class BenchConfig:
    n: int = 300
    seed: int = 42
    methods: tuple[str, ...] = ("ns", "cans3")
    target_eps: float = 1e-6
    normalization: NormalizationMethod = field(default_factory=lambda: NormalizationMethod.gelfand(2))
    bounds: Bounds = field(default_factory=Bounds)
    oracle: bool = True
    max_iter: int = 100
    delta: float = 0.3
    delta_degrees: tuple[int, ...] = (5, 5, 5, 5, 5)
    parallel: bool = False

    def __post_init__(self):
        if not 1 <= self.n <= MAX_N:
            raise ValueError(f"n must be in [1, {MAX_N}], got {self.n}")
        if not self.methods:
            raise ValueError("at least one method is required")
        bad = [m for m in self.methods if m not in METHODS]
        if bad:
            raise ValueError(f"unknown methods {bad}; choose from {', '.join(METHODS)}")
        if not 0 < self.target_eps < 1:
            raise ValueError("target_eps must lie in (0, 1)")
        if not 0 <= self.seed < 2**64:
            raise ValueError("seed must be a 64-bit unsigned integer")


class OracleCapError(ValueError):
    pass


@dataclass
class MethodResult:
    method: str
    trace: ConvergenceTrace
    a: float | None
    reached: object  # TraceRecord or None

    @property
    def iterations(self) -> int | None:
        return None if self.reached is None else self.reached.iter

    @property
    def matmuls(self) -> int | None:
        return None if self.reached is None else self.reached.matmuls


def _reached(trace: ConvergenceTrace, eps: float, oracle: bool):
    return trace.first_reaching(eps, use_spec=oracle)


def _run(X, G, mm0, polys, cfg: BenchConfig, warm) -> ConvergenceTrace:
    trace = ConvergenceTrace()
    _record(trace, 0, mm0, X, cfg.oracle, warm)
    X, mm = run_polys(X, polys, trace, mm0, G, cfg.oracle, warm, cfg.parallel)
    if polys:
        G = None  # the normalization Gram matrix was consumed by the first stage
    # classical tail until the measured error reaches the target
    while not trace.diverged and trace.last.iter < cfg.max_iter:
        if _reached(trace, cfg.target_eps, cfg.oracle) is not None:
            break
        X, mm = run_polys(X, [CLASSICAL], trace, mm, G, cfg.oracle, warm, cfg.parallel)
        G = None
    return trace


def run_bench(cfg: BenchConfig, A: np.ndarray | None = None, svd=None) -> list[MethodResult]:
    """Run every configured method; ``svd`` may carry a precomputed
    reference_svd(A) to share between runs on the same matrix."""
    if cfg.oracle and cfg.n > SVD_CAP:
        raise OracleCapError(f"spectral error needs the SVD oracle, capped at n={SVD_CAP}")
    if cfg.bounds.mode == "exact" and cfg.n > SVD_CAP:
        raise OracleCapError(f"exact bounds need the SVD oracle, capped at n={SVD_CAP}")
    A = gaussian_matrix(cfg.n, cfg.n, cfg.seed) if A is None else A

    warm = None
    S = None
    if cfg.oracle or cfg.bounds.mode == "exact":
        _, S, warm = reference_svd(A) if svd is None else svd
    if cfg.bounds.mode == "exact":
        norm = NormalizationMethod.spectral_exact()
        X = A / S[0]
        G = None
        a = float(S[-1] / S[0])
        if a <= 0:
            raise ValueError("matrix is singular; exact bounds give a = 0")
    else:
        norm = cfg.normalization
        X, _, G = _normalize(A, norm)
        a = cfg.bounds.a0
    mm0 = norm.matmuls

    results = []
    for method in cfg.methods:
        if method == "ns":
            polys = []
            used_a = None
        elif method in ("cans3", "cans5"):
            deg = 3 if method == "cans3" else 5
            polys = list(schedule_until(a, 1.0, cfg.target_eps, deg).polys)
            used_a = a
        else:
            dd = delta_design(cfg.delta, cfg.delta_degrees)
            lo, hi = dd.final_interval
            polys = list(dd.schedule.polys) + list(schedule_until(lo, hi, cfg.target_eps, 3).polys)
            used_a = dd.a_reach
        trace = _run(X, G, mm0, polys, cfg, warm)
        results.append(MethodResult(method, trace, used_a, _reached(trace, cfg.target_eps, cfg.oracle)))
    return results


def format_bench(cfg: BenchConfig, results: list[MethodResult]) -> str:
    """One CSV block per method, each introduced by a '# method=...' line."""
    buf = io.StringIO()
    norm = "spectral_exact" if cfg.bounds.mode == "exact" else str(cfg.normalization)
    for r in results:
        a = "" if r.a is None else f" a={r.a!r}"
        reached = "none" if r.reached is None else f"{r.reached.iter}/{r.reached.matmuls}"
        buf.write(
            f"# method={r.method} n={cfg.n} seed={cfg.seed} bounds={cfg.bounds} "
            f"normalization={norm}{a} target={cfg.target_eps!r} "
            f"reached_iter/matmuls={reached} diverged={str(r.trace.diverged).lower()}\n"
        )
        buf.write(r.trace.to_csv())
    return buf.getvalue()
