"""Stiefel manifold St(n, p) = {X : X^T X = I}: tangent projection, an
approximate polar retraction built from one optimal cubic step, and
Riemannian SGD / Adam steppers.

Points and tangent vectors are plain n x p float arrays.
"""

from __future__ import annotations

import io
import logging
import math
from dataclasses import dataclass, field, replace
from typing import Callable

import numpy as np

from .engine import CLASSICAL, apply_odd_poly
from .minimax import best_cubic

log = logging.getLogger(__name__)

ORTH_TOL = 1e-6
DEGENERATE = 1e-12
MAX_DRIFT_FIXES = 10


def orth_residual(X: np.ndarray) -> float:
    """||X^T X - I||_F."""
    return float(np.linalg.norm(X.T @ X - np.eye(X.shape[1])))


def check_point(X, tol: float = ORTH_TOL) -> np.ndarray:
    X = np.asarray(X, dtype=float)
    if X.ndim != 2 or X.shape[0] < X.shape[1]:
        raise ValueError(f"Stiefel point must be n x p with n >= p, got shape {X.shape}")
    r = orth_residual(X)
    if not r <= tol:
        raise ValueError(f"point is not orthonormal: ||X^T X - I||_F = {r:.3g} > {tol:g}")
    return X


def _same_shape(X: np.ndarray, Z) -> np.ndarray:
    Z = np.asarray(Z, dtype=float)
    if Z.shape != X.shape:
        raise ValueError(f"shape mismatch: point {X.shape}, vector {Z.shape}")
    return Z


def project_tangent(X: np.ndarray, Z) -> np.ndarray:
    """pi_X(Z) = Z - X (Z^T X + X^T Z) / 2."""
    X = np.asarray(X, dtype=float)
    Z = _same_shape(X, Z)
    S = Z.T @ X
    return Z - 0.5 * X @ (S + S.T)


def w_matrix(X: np.ndarray, Z) -> np.ndarray:
    """Skew-symmetric W with W X = pi_X(Z): W = W_hat - W_hat^T,
    W_hat = Z X^T - X (X^T Z X^T) / 2."""
    X = np.asarray(X, dtype=float)
    Z = _same_shape(X, Z)
    W_hat = Z @ X.T - 0.5 * X @ ((X.T @ Z) @ X.T)
    return W_hat - W_hat.T


def sigma1_bound(A: np.ndarray, p: int | None = None) -> float:
    """sqrt(||A||_F^2 - (p - 1)), an upper bound on sigma_1(A) when the
    other p - 1 singular values are at least 1."""
    A = np.asarray(A, dtype=float)
    p = A.shape[1] if p is None else p
    rad = float(np.sum(A * A)) - (p - 1)
    if not rad > 0:
        raise ValueError(f"||A||_F^2 - (p-1) = {rad:.3g} is not positive; A is not a point plus a tangent step")
    return math.sqrt(rad)


def polar_retract(X: np.ndarray, V, s: int = 1) -> np.ndarray:
    """Approximate polar factor of X + V using ``s`` optimal cubic steps.

    X + V is divided by the sigma_1 bound so its singular values sit in
    [1/sigma_1, 1], and each round applies the best cubic for the current
    interval.  A zero step returns X unchanged.
    """
    X = np.asarray(X, dtype=float)
    V = _same_shape(X, V)
    if s < 1:
        raise ValueError("s must be >= 1")
    if not np.any(V):
        return X.copy()
    A = X + V
    sigma = sigma1_bound(A)
    A = A / sigma
    a, b = 1.0 / sigma, 1.0
    for _ in range(s):
        if a >= b - DEGENERATE:
            # interval has collapsed onto 1: the limit polynomial 3x/2 - x^3/2
            poly, e = CLASSICAL, 0.0
        else:
            res = best_cubic(a, b)
            poly, e = res.poly, res.epsilon
        A = apply_odd_poly(A, poly)
        a, b = 1.0 - e, 1.0 + e
    return A


def _tighten(X: np.ndarray, tol: float = ORTH_TOL) -> np.ndarray:
    """Extra classical steps, each logged, while the point drifts off the manifold."""
    for _ in range(MAX_DRIFT_FIXES):
        r = orth_residual(X)
        if r <= tol:
            return X
        log.info("manifold drift %.3g > %g: applying one classical Newton-Schulz step", r, tol)
        X = apply_odd_poly(X, CLASSICAL)
    r = orth_residual(X)
    if r > tol:
        log.warning("manifold drift %.3g persists after %d corrections", r, MAX_DRIFT_FIXES)
    return X


@dataclass(frozen=True)
class OptimizerState:
    X: np.ndarray
    M: np.ndarray
    v: float = 0.0
    step_count: int = 0
    lr: float = 0.1
    beta: float = 0.9
    beta1: float = 0.9
    beta2: float = 0.999
    eps_adam: float = 1e-8
    s: int = 1

    def __post_init__(self):
        if self.v < 0:
            raise ValueError("second moment v must be non-negative")
        if self.step_count < 0:
            raise ValueError("step_count must be non-negative")
        if self.M.shape != self.X.shape:
            raise ValueError("momentum shape must match the point")

    @classmethod
    def init(cls, X, **hyper) -> "OptimizerState":
        X = check_point(X)
        return cls(X=X.copy(), M=np.zeros_like(X), **hyper)


def rsgd_step(state: OptimizerState, G) -> OptimizerState:
    """M <- beta M - G;  M <- pi_X(M);  X <- Retr_X(lr M)."""
    X = state.X
    G = _same_shape(X, G)
    M = project_tangent(X, state.beta * state.M - G)
    Xn = _tighten(polar_retract(X, state.lr * M, state.s))
    return replace(state, X=Xn, M=M, step_count=state.step_count + 1)


def radam_step(state: OptimizerState, G) -> OptimizerState:
    """Adam with a scalar second moment.

    M accumulates the negative gradient, so the step X + lr M_hat / sqrt(v_hat + eps)
    descends; the momentum is stored back without its bias correction.
    """
    X = state.X
    G = _same_shape(X, G)
    k = state.step_count + 1
    v = state.beta2 * state.v + (1.0 - state.beta2) * float(np.sum(G * G))
    v_hat = v / (1.0 - state.beta2**k)
    corr = 1.0 - state.beta1**k
    M = state.beta1 * state.M - (1.0 - state.beta1) * G
    M_hat = project_tangent(X, M / corr)
    step = (state.lr / math.sqrt(v_hat + state.eps_adam)) * M_hat
    Xn = _tighten(polar_retract(X, step, state.s))
    return replace(state, X=Xn, M=corr * M_hat, v=v, step_count=k)


@dataclass
class OptimizerTrace:
    rows: list[tuple[int, float, float, float]] = field(default_factory=list)

    def to_csv(self) -> str:
        buf = io.StringIO()
        buf.write("step,objective,orth_residual,step_norm\n")
        for k, f, r, sn in self.rows:
            buf.write(f"{k},{f!r},{r!r},{sn!r}\n")
        return buf.getvalue()

    @property
    def max_orth_residual(self) -> float:
        return max((r for _, _, r, _ in self.rows), default=0.0)


def optimize(
    objective: Callable[[np.ndarray], float],
    grad: Callable[[np.ndarray], np.ndarray],
    state: OptimizerState,
    steps: int,
    method: str = "sgd",
) -> tuple[OptimizerState, OptimizerTrace]:
    """Run ``steps`` updates of ``method`` ('sgd' or 'adam'), tracing each."""
    stepper = {"sgd": rsgd_step, "adam": radam_step}.get(method)
    if stepper is None:
        raise ValueError(f"method must be 'sgd' or 'adam', got {method!r}")
    trace = OptimizerTrace()
    trace.rows.append((state.step_count, float(objective(state.X)), orth_residual(state.X), 0.0))
    for _ in range(steps):
        prev = state.X
        state = stepper(state, grad(prev))
        trace.rows.append(
            (state.step_count, float(objective(state.X)), orth_residual(state.X), float(np.linalg.norm(state.X - prev)))
        )
    return state, trace
