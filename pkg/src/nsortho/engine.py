"""Applying odd-polynomial schedules to dense matrices.

Matrices are float64 numpy arrays with at least as many rows as columns.
A polynomial with d coefficients costs d products: one Gram matrix
G = X^T X, d - 2 Horner steps in G, and the final X @ q(G).
"""

from __future__ import annotations

import io
import logging
import math
from dataclasses import dataclass, field
from typing import Iterable, TextIO

import numpy as np

from .linalg import matmul, reference_svd, singular_values
from .poly import OddPolynomial
from .schedule import DeltaDesign, Schedule, schedule_until

log = logging.getLogger(__name__)

DIVERGENCE_LIMIT = 1e6
CLASSICAL = OddPolynomial((1.5, -0.5))


class NonFiniteError(ArithmeticError):
    """A polynomial application overflowed."""


def as_matrix(A, allow_wide: bool = False) -> np.ndarray:
    A = np.asarray(A, dtype=float)
    if A.ndim != 2 or A.size == 0:
        raise ValueError(f"expected a non-empty 2-D matrix, got shape {A.shape}")
    if not allow_wide and A.shape[0] < A.shape[1]:
        raise ValueError(f"need rows >= cols, got {A.shape[0]}x{A.shape[1]}")
    if not np.all(np.isfinite(A)):
        raise ValueError("matrix has non-finite entries")
    return A


def fro_norm(A: np.ndarray) -> float:
    """Frobenius norm that does not overflow for entries near the float limit."""
    m = float(np.max(np.abs(A)))
    if m == 0 or not math.isfinite(m):
        return m
    return m * float(np.linalg.norm(A / m))


def gram(X: np.ndarray, parallel: bool = False) -> np.ndarray:
    return matmul(X.T, X, parallel=parallel)


def apply_odd_poly(X, p: OddPolynomial, G: np.ndarray | None = None, parallel: bool = False) -> np.ndarray:
    """sum_k a_{2k-1} X (X^T X)^{k-1}, i.e. U p(S) V^T for X = U S V^T.

    A precomputed Gram matrix ``G`` may be passed in to be reused.
    """
    X = as_matrix(X)
    c = p.coeffs
    if len(c) == 1:
        return c[0] * X
    n = X.shape[1]
    if G is not None and G.shape != (n, n):
        raise ValueError(f"Gram matrix shape {G.shape} does not match {n} columns")
    eye = np.eye(n)
    # overflow is reported below as NonFiniteError rather than as a warning
    with np.errstate(over="ignore", invalid="ignore"):
        if G is None:
            G = gram(X, parallel)
        Q = c[-1] * G + c[-2] * eye
        for a in c[-3::-1]:
            Q = matmul(Q, G, parallel=parallel) + a * eye
        Y = matmul(X, Q, parallel=parallel)
    if not np.all(np.isfinite(Y)):
        raise NonFiniteError("polynomial application overflowed")
    return Y


@dataclass
class TraceRecord:
    iter: int
    matmuls: int
    fro_err: float
    spec_err: float | None = None


@dataclass
class ConvergenceTrace:
    records: list[TraceRecord] = field(default_factory=list)
    diverged: bool = False

    def append(self, rec: TraceRecord) -> None:
        self.records.append(rec)

    def __len__(self) -> int:
        return len(self.records)

    def __iter__(self):
        return iter(self.records)

    @property
    def last(self) -> TraceRecord:
        return self.records[-1]

    def first_reaching(self, eps: float, use_spec: bool = True) -> TraceRecord | None:
        for r in self.records:
            err = r.spec_err if use_spec else r.fro_err
            if err is not None and err <= eps:
                return r
        return None

    def to_csv(self) -> str:
        buf = io.StringIO()
        buf.write("iter,matmuls,fro_err,spec_err\n")
        for r in self.records:
            spec = "" if r.spec_err is None else repr(r.spec_err)
            buf.write(f"{r.iter},{r.matmuls},{r.fro_err!r},{spec}\n")
        return buf.getvalue()


def orthogonality_error(X, use_oracle: bool = False, warm: np.ndarray | None = None):
    """(||X^T X - I||_F, max_i |sigma_i - 1| or None)."""
    X = as_matrix(X)
    n = X.shape[1]
    fro = float(np.linalg.norm(gram(X) - np.eye(n)))
    if not use_oracle:
        return fro, None
    s = singular_values(X, warm=warm)
    return fro, float(np.max(np.abs(s - 1.0)))


def _record(trace, it, mm, X, oracle, warm):
    fro, spec = orthogonality_error(X, oracle, warm)
    trace.append(TraceRecord(it, mm, fro, spec))
    return fro


def classical_newton_schulz(X, iters: int, oracle: bool = False, warm: np.ndarray | None = None):
    """Iterate X <- 3/2 X - 1/2 X X^T X, recording the error after each step.

    Stops early with ``trace.diverged`` set if the Frobenius error exceeds
    1e6 or the iterate overflows.
    """
    X = as_matrix(X)
    trace = ConvergenceTrace()
    _record(trace, 0, 0, X, oracle, warm)
    mm = 0
    for it in range(1, iters + 1):
        try:
            X = apply_odd_poly(X, CLASSICAL)
        except NonFiniteError:
            trace.diverged = True
            break
        mm += CLASSICAL.matmuls
        fro = _record(trace, it, mm, X, oracle and math.isfinite(trace.last.fro_err), warm)
        if not math.isfinite(fro) or fro > DIVERGENCE_LIMIT:
            trace.diverged = True
            break
    return X, trace


def gelfand_estimate(A, k: int, G: np.ndarray | None = None) -> float:
    """Upper bound ||(A^T A)^k||_F^{1/(2k)} >= sigma_1(A).

    The matrix is pre-scaled by its Frobenius norm so the powers cannot
    overflow; a Gram matrix of A can be supplied to avoid recomputing it.
    """
    A = as_matrix(A, allow_wide=True)
    if k < 1:
        raise ValueError("k must be >= 1")
    f = fro_norm(A)
    if f == 0:
        return 0.0
    if G is None:
        As = A / f
        Gs = As.T @ As
    else:
        Gs = G / (f * f)
    P = Gs
    for _ in range(k - 1):
        P = matmul(P, Gs)
    return f * float(np.linalg.norm(P)) ** (1.0 / (2 * k))


@dataclass(frozen=True)
class NormalizationMethod:
    kind: str = "frobenius"
    k: int = 2

    def __post_init__(self):
        if self.kind not in ("frobenius", "gelfand", "spectral_exact"):
            raise ValueError(f"unknown normalization {self.kind!r}")
        if self.kind == "gelfand" and self.k < 1:
            raise ValueError("gelfand k must be >= 1")

    @classmethod
    def frobenius(cls) -> "NormalizationMethod":
        return cls("frobenius")

    @classmethod
    def gelfand(cls, k: int = 2) -> "NormalizationMethod":
        return cls("gelfand", k)

    @classmethod
    def spectral_exact(cls) -> "NormalizationMethod":
        return cls("spectral_exact")

    @classmethod
    def parse(cls, text: str) -> "NormalizationMethod":
        """'frobenius', 'spectral' / 'spectral_exact', or 'gelfand[:k]'."""
        name, _, arg = text.partition(":")
        if name in ("spectral", "spectral_exact", "exact"):
            return cls.spectral_exact()
        if name == "gelfand":
            return cls.gelfand(int(arg) if arg else 2)
        if name == "frobenius":
            return cls.frobenius()
        raise ValueError(f"unknown normalization {text!r}")

    @property
    def matmuls(self) -> int:
        return self.k if self.kind == "gelfand" else 0

    def __str__(self) -> str:
        return f"gelfand:{self.k}" if self.kind == "gelfand" else self.kind


def _normalize(A: np.ndarray, method: NormalizationMethod):
    """(A / scale, scale, Gram of the normalized matrix or None)."""
    if not np.any(A):
        raise ValueError("cannot normalize the zero matrix")
    if method.kind == "frobenius":
        scale = fro_norm(A)
        return A / scale, scale, None
    if method.kind == "spectral_exact":
        scale = float(reference_svd(A)[1][0])
        return A / scale, scale, None
    f = fro_norm(A)
    As = A / f
    Gs = gram(As)
    rel = gelfand_estimate(As, method.k, Gs)
    return As / rel, f * rel, Gs / (rel * rel)


def normalize(A, method: NormalizationMethod) -> tuple[np.ndarray, float]:
    A = as_matrix(A, allow_wide=True)
    X, scale, _ = _normalize(A, method)
    return X, scale


@dataclass
class OrthoConfig:
    normalization: NormalizationMethod = field(default_factory=NormalizationMethod.frobenius)
    a_hint: float | None = None
    schedule: Schedule | None = None
    delta_preprocess: DeltaDesign | None = None
    target_eps: float = 1e-6
    degree: int = 3
    oracle: bool = False
    warm: np.ndarray | None = None
    parallel: bool = False


def plan(config: OrthoConfig) -> list[OddPolynomial]:
    """Polynomials the driver will apply, in order."""
    polys: list[OddPolynomial] = []
    if config.delta_preprocess is not None:
        dd = config.delta_preprocess
        polys.extend(dd.schedule.polys)
        interval = dd.final_interval
    elif config.a_hint is not None:
        interval = (config.a_hint, 1.0)
    elif config.schedule is not None:
        interval = config.schedule.input_interval
    else:
        raise ValueError("lower spectral bound unknown: give a_hint, a schedule, or a delta preprocessing design")

    if config.schedule is not None:
        polys.extend(config.schedule.polys)
        if config.schedule.final_epsilon > config.target_eps:
            e = config.schedule.final_epsilon
            polys.extend(schedule_until(1 - e, 1 + e, config.target_eps, config.degree).polys)
    else:
        a, b = interval
        polys.extend(schedule_until(a, b, config.target_eps, config.degree).polys)
    return polys


def run_polys(X: np.ndarray, polys: Iterable[OddPolynomial], trace: ConvergenceTrace, mm: int = 0,
              first_gram: np.ndarray | None = None, oracle: bool = False, warm=None, parallel: bool = False):
    """Apply ``polys`` in order, appending one trace record per application."""
    it = trace.last.iter if len(trace) else 0
    G = first_gram
    for p in polys:
        reuse = G is not None and p.terms > 1
        try:
            X = apply_odd_poly(X, p, G if reuse else None, parallel=parallel)
        except NonFiniteError:
            trace.diverged = True
            break
        mm += p.matmuls - (1 if reuse else 0)
        G = None
        it += 1
        fro = _record(trace, it, mm, X, oracle, warm)
        if not math.isfinite(fro) or fro > DIVERGENCE_LIMIT:
            trace.diverged = True
            break
    return X, mm


def orthogonalize(A, config: OrthoConfig):
    """Normalize, optionally pre-condition with a delta design, then run the
    polynomial schedule; returns (Q, trace)."""
    A = as_matrix(A)
    polys = plan(config)
    X, _, G = _normalize(A, config.normalization)
    warm = config.warm
    if config.oracle and warm is None:
        warm = reference_svd(X)[2]
    trace = ConvergenceTrace()
    mm = config.normalization.matmuls
    _record(trace, 0, mm, X, config.oracle, warm)
    X, mm = run_polys(X, polys, trace, mm, G, config.oracle, warm, config.parallel)
    if trace.diverged:
        log.warning("orthogonalization diverged after %d iterations", trace.last.iter)
    return X, trace


# -- text formats -------------------------------------------------------------


def read_matrix(src: str | TextIO) -> np.ndarray:
    """Parse 'm n' followed by m rows of n numbers."""
    text = src if isinstance(src, str) else src.read()
    tokens = text.split()
    if len(tokens) < 2:
        raise ValueError("matrix file is missing its 'm n' header")
    m, n = int(tokens[0]), int(tokens[1])
    vals = tokens[2:]
    if m < 1 or n < 1 or len(vals) != m * n:
        raise ValueError(f"expected {m}x{n} = {m * n} entries, found {len(vals)}")
    A = np.array([float(v) for v in vals]).reshape(m, n)
    if not np.all(np.isfinite(A)):
        raise ValueError("matrix has non-finite entries")
    return A


def format_matrix(A: np.ndarray) -> str:
    A = np.asarray(A, dtype=float)
    lines = [f"{A.shape[0]} {A.shape[1]}"]
    lines += [" ".join(f"{v:.17g}" for v in row) for row in A]
    return "\n".join(lines) + "\n"
