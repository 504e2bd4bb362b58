"""Best uniform odd polynomial approximation of f(x) = 1 on [a, b].

Degree 3 has a closed form; higher degrees go through a Remez exchange on
odd monomials.  ``n`` always counts coefficients, so the degree is 2n - 1.
"""

from __future__ import annotations

import json
import logging
import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Sequence

import numpy as np

from .poly import OddPolynomial, critical_points, evaluate, range_on_interval

log = logging.getLogger(__name__)

MAX_TERMS = 8
COND_LIMIT = 1e15
# absolute floor for the equioscillation defect; |p - 1| near 1 cannot be
# resolved better than a few ulps
ABS_DEFECT_FLOOR = 64 * np.finfo(float).eps


class DegreeTooHighError(ValueError):
    """The alternance system is too ill-conditioned to solve in double precision."""


@dataclass(frozen=True)
class MinimaxResult:
    poly: OddPolynomial
    epsilon: float
    alternance: tuple[float, ...]
    interval: tuple[float, float]
    iterations: int = 0
    converged: bool = True

    @property
    def a(self) -> float:
        return self.interval[0]

    @property
    def b(self) -> float:
        return self.interval[1]

    def to_dict(self) -> dict:
        return {
            "coeffs": list(self.poly.coeffs),
            "epsilon": self.epsilon,
            "alternance": list(self.alternance),
            "a": self.a,
            "b": self.b,
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True)

    @classmethod
    def from_dict(cls, d: dict) -> "MinimaxResult":
        return cls(
            poly=OddPolynomial(d["coeffs"]),
            epsilon=float(d["epsilon"]),
            alternance=tuple(float(x) for x in d["alternance"]),
            interval=(float(d["a"]), float(d["b"])),
        )


def _check_interval(a: float, b: float) -> None:
    if not (math.isfinite(a) and math.isfinite(b)):
        raise ValueError(f"interval endpoints must be finite, got [{a}, {b}]")
    if a <= 0:
        raise ValueError(f"left endpoint must be positive, got a={a}")
    if a > b:
        raise ValueError(f"need a <= b, got [{a}, {b}]")


def _cubic_parts(a: float, b: float) -> tuple[float, float]:
    # s = a^2 + ab + b^2, D = 2 (s/3)^{3/2} + ab(a + b)
    s = a * a + a * b + b * b
    d = 2.0 * (s / 3.0) ** 1.5 + a * b * (a + b)
    return s, d


def epsilon_cubic(a: float, b: float) -> float:
    """Error of the best cubic odd approximation of 1 on [a, b].

    Uses 4 s^3 - 27 a^2 b^2 (a + b)^2 = (b - a)^2 (2a + b)^2 (a + 2b)^2 to
    clear the cancellation in 2 (s/3)^{3/2} - ab(a + b) as a -> b.
    """
    _check_interval(a, b)
    _, d = _cubic_parts(a, b)
    num = ((b - a) * (2 * a + b) * (a + 2 * b)) ** 2
    return num / (27.0 * d * d)


def epsilon_cubic_centered(e: float) -> float:
    """epsilon_cubic(1 - e, 1 + e), written in terms of the half-width e.

    Forming 1 - e in floating point loses e once it drops below the unit
    roundoff, so the chained recursion uses this form instead.
    """
    if not 0 <= e < 1:
        raise ValueError(f"half-width must lie in [0, 1), got {e}")
    d = 2.0 * (1.0 + e * e / 3.0) ** 1.5 + 2.0 * (1.0 - e * e)
    num = 2.0 * e * (9.0 - e * e)
    return num * num / (27.0 * d * d)


def flat_poly(n: int, c: float = 1.0) -> OddPolynomial:
    """Limit of the best approximation as the interval shrinks to the point c.

    The polynomial has p(c) = 1 and its first n - 1 derivatives vanish at c;
    for n = 2 this is 3x/2 - x^3/2 at c = 1.
    """
    if n < 1:
        raise ValueError("n must be >= 1")
    terms = [Fraction(math.comb(n - 1, k) * (-1) ** k, 2 * k + 1) for k in range(n)]
    norm = sum(terms)
    return OddPolynomial(float(t / norm) / c ** (2 * k + 1) for k, t in enumerate(terms))


def best_cubic(a: float, b: float) -> MinimaxResult:
    """Closed-form optimal cubic on [a, b] (a == b gives the flat limit)."""
    _check_interval(a, b)
    s, d = _cubic_parts(a, b)
    poly = OddPolynomial((2.0 * s / d, -2.0 / d))
    e = math.sqrt(s / 3.0)
    return MinimaxResult(
        poly=poly,
        epsilon=epsilon_cubic(a, b),
        alternance=(a, e, b),
        interval=(a, b),
    )


def solve_alternance_system(points: Sequence[float], n: int) -> tuple[OddPolynomial, float]:
    """Solve p(x_j) = 1 - (-1)^j eps, j = 0..n, for p with n odd coefficients.

    The system is assembled on points divided by the last one (the scale
    invariance of the problem) and then mapped back; one round of iterative
    refinement with a long-double residual tightens the solution.
    """
    xs = np.asarray(points, dtype=float)
    if xs.ndim != 1 or len(xs) != n + 1:
        raise ValueError(f"need {n + 1} points for n={n}, got {len(xs)}")
    if n < 1:
        raise ValueError("n must be >= 1")
    if np.any(xs <= 0) or not np.all(np.isfinite(xs)):
        raise ValueError("alternance points must be positive and finite")
    if np.any(np.diff(xs) <= 0):
        raise ValueError("alternance points must be strictly increasing (duplicate point?)")

    scale = xs[-1]
    t = xs / scale
    powers = 2 * np.arange(n) + 1
    signs = (-1.0) ** np.arange(n + 1)
    mat = np.empty((n + 1, n + 1))
    mat[:, :n] = t[:, None] ** powers[None, :]
    mat[:, n] = signs
    rhs = np.ones(n + 1)

    cond = np.linalg.cond(mat)
    if not math.isfinite(cond) or cond > COND_LIMIT:
        raise DegreeTooHighError(f"alternance system condition {cond:.3g} exceeds {COND_LIMIT:g} (n={n})")

    sol = np.linalg.solve(mat, rhs)
    ext = mat.astype(np.longdouble)
    resid = rhs.astype(np.longdouble) - ext @ sol.astype(np.longdouble)
    sol = sol + np.linalg.solve(mat, resid.astype(float))

    res_norm = float(np.max(np.abs(rhs - ext @ sol.astype(np.longdouble))))
    eps = float(sol[n])
    if res_norm > 1e-10 * (1.0 + abs(eps)):
        raise DegreeTooHighError(f"alternance residual {res_norm:.3g} too large (n={n})")

    coeffs = sol[:n] / scale ** powers
    return OddPolynomial(coeffs), eps


def _chebyshev_reference(a: float, b: float, n: int) -> list[float]:
    # second-kind points, endpoints pinned exactly
    j = np.arange(n + 1)
    pts = 0.5 * (a + b) - 0.5 * (b - a) * np.cos(np.pi * j / n)
    pts[0], pts[-1] = a, b
    return [float(x) for x in pts]


def _interior_extrema(p: OddPolynomial, a: float, b: float, want: int) -> list[float] | None:
    for samples in (4096, 65536, 1 << 20):
        ext = [x for x in critical_points(p, a, b, samples) if a < x < b]
        if len(ext) == want:
            return ext
    return None


def remez(a: float, b: float, n: int, tol: float = 1e-12, max_iter: int = 100) -> MinimaxResult:
    """Remez exchange for the best odd approximation of 1 with n coefficients.

    Stops when the largest deviation on [a, b] exceeds the levelled error by
    at most ``tol`` relative (or a few ulps absolute).  If ``max_iter`` is hit
    the best iterate is returned with ``converged=False``.
    """
    _check_interval(a, b)
    if a == b:
        raise ValueError("remez needs a < b; use best_cubic for the degenerate interval")
    if not 1 <= n <= MAX_TERMS:
        raise ValueError(f"n must be in [1, {MAX_TERMS}], got {n}")

    if n == 1:
        poly, eps = solve_alternance_system([a, b], 1)
        return MinimaxResult(poly, eps, (a, b), (a, b), iterations=1)

    ref = _chebyshev_reference(a, b, n)
    best = None
    for it in range(1, max_iter + 1):
        poly, eps = solve_alternance_system(ref, n)
        result = MinimaxResult(poly, eps, tuple(ref), (a, b), iterations=it)
        ext = _interior_extrema(poly, a, b, n - 1)
        if ext is None:
            log.debug("remez: lost track of extrema on [%g, %g], n=%d", a, b, n)
            if best is None:
                best = (math.inf, result)
            break
        cand = [a, *ext, b]
        worst = max(abs(float(evaluate(poly, x)) - 1.0) for x in cand)
        defect = worst - abs(eps)
        if best is None or defect < best[0]:
            best = (defect, result)
        if defect <= max(tol * abs(eps), ABS_DEFECT_FLOOR):
            return result
        ref = cand

    log.warning("remez did not converge on [%g, %g] with n=%d", a, b, n)
    _, result = best
    return MinimaxResult(
        result.poly, result.epsilon, result.alternance, result.interval,
        iterations=result.iterations, converged=False,
    )


def _flat_result(n: int, a: float, b: float) -> MinimaxResult:
    c = 0.5 * (a + b)
    poly = flat_poly(n, c)
    if a == b:
        return MinimaxResult(poly, abs(float(evaluate(poly, a)) - 1.0), (a,), (a, b))
    lo, hi = range_on_interval(poly, a, b)
    return MinimaxResult(poly, max(1.0 - lo, hi - 1.0), (a, c, b), (a, b), converged=False)


def best_odd(n: int, a: float, b: float, **kw) -> MinimaxResult:
    """Optimal odd polynomial with n coefficients on [a, b].

    Closed form for n = 2, Remez otherwise.  When the interval is too narrow
    for Remez to resolve in double precision, the flat-contact limit
    polynomial centred on the interval is returned instead (flagged
    ``converged=False``, epsilon measured on [a, b]).
    """
    if n == 2:
        return best_cubic(a, b)
    _check_interval(a, b)
    width = (b - a) / (b + a)
    if width < 1e-6:
        return _flat_result(n, a, b)
    try:
        res = remez(a, b, n, **kw)
    except ValueError:
        # DegreeTooHighError, or a reference collapsing onto itself
        if width > 1e-2:
            raise
        log.info("narrow interval [%r, %r]: using flat polynomial for n=%d", a, b, n)
        return _flat_result(n, a, b)
    if not res.converged and width <= 1e-2:
        return _flat_result(n, a, b)
    return res


def minimax_error(n: int, a: float, b: float) -> float:
    if n == 2:
        return epsilon_cubic(a, b)
    return best_odd(n, a, b).epsilon
