"""Iteration schedules built from optimal odd polynomials.

A schedule is a chain of polynomials, each designed for the interval its
input singular values are known to occupy, together with the interval its
output lands in.  Schedules are computed once and applied many times;
applying one never triggers a Remez solve.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np

from .minimax import MinimaxResult, best_odd, epsilon_cubic, epsilon_cubic_centered, minimax_error
from .poly import (
    Composition,
    OddPolynomial,
    compose_eval,
    composition_derivative_at_zero,
    range_on_interval,
)

BISECT_TOL = 1e-10
CHAIN_LIMIT = 1e-12
MAX_DEGREE = 15


@dataclass(frozen=True)
class ScheduleEntry:
    poly: OddPolynomial
    pre_interval: tuple[float, float]
    epsilon: float

    @property
    def post_interval(self) -> tuple[float, float]:
        return (1.0 - self.epsilon, 1.0 + self.epsilon)

    def to_dict(self) -> dict:
        a, b = self.pre_interval
        return {"coeffs": list(self.poly.coeffs), "a": a, "b": b, "epsilon": self.epsilon}


@dataclass(frozen=True)
class Schedule:
    entries: tuple[ScheduleEntry, ...]
    delta: float | None = None

    def __post_init__(self):
        if not self.entries:
            raise ValueError("schedule needs at least one entry")

    def __len__(self) -> int:
        return len(self.entries)

    @property
    def polys(self) -> tuple[OddPolynomial, ...]:
        return tuple(e.poly for e in self.entries)

    @property
    def total_matmuls(self) -> int:
        return sum(p.matmuls for p in self.polys)

    @property
    def epsilons(self) -> list[float]:
        return [e.epsilon for e in self.entries]

    @property
    def final_epsilon(self) -> float:
        return self.entries[-1].epsilon

    @property
    def input_interval(self) -> tuple[float, float]:
        return self.entries[0].pre_interval

    def composition(self) -> Composition:
        return Composition(self.polys)

    def to_dict(self) -> dict:
        d = {"entries": [e.to_dict() for e in self.entries], "total_matmuls": self.total_matmuls}
        if self.delta is not None:
            d["delta"] = self.delta
        return d

    def to_json(self, **kw) -> str:
        return json.dumps(self.to_dict(), sort_keys=True, **kw)

    @classmethod
    def from_dict(cls, d: dict) -> "Schedule":
        entries = tuple(
            ScheduleEntry(OddPolynomial(e["coeffs"]), (float(e["a"]), float(e["b"])), float(e["epsilon"]))
            for e in d["entries"]
        )
        return cls(entries, d.get("delta"))


@dataclass(frozen=True)
class DeltaDesign:
    schedule: Schedule
    a_reach: float
    delta: float
    residual: float
    steps: int = 0

    @property
    def right(self) -> float:
        return self.schedule.input_interval[1]

    @property
    def final_interval(self) -> tuple[float, float]:
        return (1.0 - self.delta, 1.0 + self.delta)


def _terms(degree: int) -> int:
    if degree % 2 != 1 or not 3 <= degree <= MAX_DEGREE:
        raise ValueError(f"degrees must be odd integers in [3, {MAX_DEGREE}], got {degree}")
    return (degree + 1) // 2


def _design(n: int, a: float, b: float) -> MinimaxResult:
    return best_odd(n, a, b)


def cans_schedule(a: float, b: float, degrees: Sequence[int]) -> Schedule:
    """Chain optimal polynomials starting from singular values in [a, b]."""
    if not degrees:
        raise ValueError("degree list is empty")
    if not (0 < a <= b) or not math.isfinite(b):
        raise ValueError(f"invalid interval [{a}, {b}]")
    entries = []
    for deg in degrees:
        res = _design(_terms(deg), a, b)
        entries.append(ScheduleEntry(res.poly, (a, b), res.epsilon))
        a, b = 1.0 - res.epsilon, 1.0 + res.epsilon
    return Schedule(tuple(entries))


def schedule_until(a: float, b: float, target_eps: float, degree: int = 3, max_steps: int = 100) -> Schedule:
    """Repeat ``degree`` until the chained error is at most ``target_eps``."""
    n = _terms(degree)
    entries = []
    for _ in range(max_steps):
        res = _design(n, a, b)
        entries.append(ScheduleEntry(res.poly, (a, b), res.epsilon))
        if res.epsilon <= target_eps:
            return Schedule(tuple(entries))
        a, b = 1.0 - res.epsilon, 1.0 + res.epsilon
    raise RuntimeError(f"target error {target_eps:g} not reached in {max_steps} steps")


def epsilon_recursion(a0: float, b0: float, steps: int) -> list[float]:
    """Errors of the degree-3 chain a_{k+1} = 1 - eps_k, b_{k+1} = 1 + eps_k."""
    if steps < 1:
        raise ValueError("steps must be >= 1")
    if not (0 < a0 <= b0):
        raise ValueError(f"invalid interval [{a0}, {b0}]")
    e = epsilon_cubic(a0, b0)
    out = [e]
    for _ in range(steps - 1):
        e = epsilon_cubic_centered(e)
        out.append(e)
    return out


def predicted_iterations(a0: float, eps: float) -> int:
    """Degree-3 iterations that suffice to reach error ``eps`` from [a0, 1]."""
    if not (0 < a0 < 1):
        raise ValueError(f"a0 must lie in (0, 1), got {a0}")
    if not (0 < eps < 1):
        raise ValueError(f"eps must lie in (0, 1), got {eps}")
    v = math.log2(math.log(eps) / math.log1p(-a0))
    # absorbs rounding when a0 == 1 - eps
    return max(0, math.ceil(v - 1e-12))


def _bisect(f, lo: float, hi: float, target: float, increasing: bool, tol: float = BISECT_TOL, max_steps: int = 200):
    """Locate x in (lo, hi) with f(x) ~= target for monotone f.

    Returns (x, f(x)) once |f(x) - target| <= tol or the bracket collapses.
    """
    fx = math.nan
    x = 0.5 * (lo + hi)
    for _ in range(max_steps):
        x = 0.5 * (lo + hi)
        fx = f(x)
        if abs(fx - target) <= tol:
            return x, fx
        if (fx < target) == increasing:
            lo = x
        else:
            hi = x
        if hi - lo <= 4 * math.ulp(hi):
            return x, fx
    return x, fx


def max_derivative_poly(d: int, delta: float) -> MinimaxResult:
    """The polynomial p_{d, a, 1+delta} whose error equals delta.

    Its left endpoint a(d, delta) is the smallest input from which one
    application lands in [1 - delta, 1 + delta].
    """
    if d < 2:
        raise ValueError("d must be >= 2")
    if not 0 < delta < 1:
        raise ValueError(f"delta must lie in (0, 1), got {delta}")
    b = 1.0 + delta
    a, e = _bisect(lambda t: minimax_error(d, t, b), 0.0, b, delta, increasing=False)
    assert abs(e - delta) <= 1e-6, f"bisection failed to bracket delta={delta}"
    return best_odd(d, a, b)


def _half_width_for(d: int, target: float) -> float:
    """x in (0, 1) with eps(d, 1 - x, 1 + x) <= target, as close as bisection allows."""
    lo, hi = 0.0, 1.0
    for _ in range(200):
        if hi - lo <= BISECT_TOL * 1e-3:
            break
        mid = 0.5 * (lo + hi)
        if minimax_error(d, 1.0 - mid, 1.0 + mid) <= target:
            lo = mid
        else:
            hi = mid
    return lo


def backchained_schedule(d: int, l: int, delta: float, right: float | None = None) -> Schedule:
    """Distinct polynomials chained backwards from the target band.

    delta_0 = delta and delta_j solves eps(d, 1 - delta_j, 1 + delta_j) =
    delta_{j-1}; the j-th polynomial is optimal on [1 - delta_j, 1 + delta_j].
    The innermost one is rescaled so the composition accepts inputs up to
    ``right`` (default 1 + delta).  Each delta_j is taken from the safe side
    of its bisection so the stage images nest.
    """
    if d < 2:
        raise ValueError("d must be >= 2")
    if l < 1:
        raise ValueError("l must be >= 1")
    if not 0 < delta < 1:
        raise ValueError(f"delta must lie in (0, 1), got {delta}")
    B = 1.0 + delta if right is None else float(right)
    if B <= 0:
        raise ValueError("right boundary must be positive")

    deltas = [delta]
    for _ in range(l):
        nxt = _half_width_for(d, deltas[-1])
        # delta_j -> 1 geometrically; past 1 - 1e-12 the bisection can no
        # longer separate consecutive links, so the chain is exhausted
        if not 0 < nxt < 1 - CHAIN_LIMIT:
            raise ValueError(
                f"back-chain reached delta_j = 1 to working precision after {len(deltas) - 1} steps; l={l} too large"
            )
        deltas.append(nxt)

    entries = []
    for j in range(l, 0, -1):
        dj = deltas[j]
        poly = best_odd(d, 1.0 - dj, 1.0 + dj).poly
        pre = (1.0 - dj, 1.0 + dj)
        if j == l:
            t = (1.0 + dj) / B
            poly = poly.rescaled(t)
            pre = ((1.0 - dj) / t, B)
        entries.append(ScheduleEntry(poly, pre, deltas[j - 1]))
    return Schedule(tuple(entries), delta)


def _chain_error(a: float, b: float, terms: Sequence[int]) -> float:
    for n in terms:
        if a <= 0:
            return 1.0
        e = minimax_error(n, a, b)
        a, b = 1.0 - e, 1.0 + e
    return e


def delta_design(
    delta: float,
    degrees: Sequence[int],
    B: float | None = None,
    eps_tol: float = 1e-7,
    max_steps: int = 200,
) -> DeltaDesign:
    """Bisect the left boundary so the chained error equals ``delta``.

    The right boundary ``B`` defaults to 1 + delta.  Mirrors the
    delta-orthogonalization search: the left end of [A_l, A_r] moves up
    while the chain overshoots delta and down otherwise.
    """
    if not 0 < delta < 1:
        raise ValueError(f"delta must lie in (0, 1), got {delta}")
    if not degrees:
        raise ValueError("degree list is empty")
    terms = [_terms(deg) for deg in degrees]
    B = 1.0 + delta if B is None else float(B)
    lo, hi = 0.0, B
    eps = math.inf
    a = 0.5 * (lo + hi)
    steps = 0
    while abs(delta - eps) > eps_tol:
        if steps >= max_steps:
            raise RuntimeError(f"delta_design did not converge in {max_steps} bisection steps")
        steps += 1
        a = 0.5 * (lo + hi)
        eps = _chain_error(a, B, terms)
        if eps < delta:
            hi = a
        else:
            lo = a
    sched = cans_schedule(a, B, degrees)
    return DeltaDesign(Schedule(sched.entries, delta), a, delta, abs(delta - eps), steps)


# -- verification of arbitrary compositions --------------------------------


@dataclass(frozen=True)
class VerifyReport:
    delta: float
    right: float
    a_star: float
    image: tuple[float, float]
    max_violation: float
    derivative_at_zero: float
    matmuls: int
    contained: bool
    stage_images: list[tuple[float, float]] = field(default_factory=list)

    def to_dict(self) -> dict:
        return {
            "a_star": self.a_star,
            "contained": self.contained,
            "delta": self.delta,
            "derivative_at_zero": self.derivative_at_zero,
            "image": list(self.image),
            "matmuls": self.matmuls,
            "max_violation": self.max_violation,
            "right": self.right,
            "stage_images": [list(s) for s in self.stage_images],
        }


def image_interval(p: OddPolynomial, lo: float, hi: float, grid_size: int = 10_000) -> tuple[float, float]:
    """Range of p over [lo, hi]; intervals straddling 0 use oddness."""
    if lo > hi:
        raise ValueError("empty interval")
    if lo == hi:
        v = float(p(lo))
        return v, v
    if lo >= 0:
        return range_on_interval(p, lo, hi, grid_size)
    if hi <= 0:
        m, M = range_on_interval(p, -hi, -lo, grid_size)
        return -M, -m
    m1, M1 = range_on_interval(p, 0.0, -lo, grid_size)
    m2, M2 = range_on_interval(p, 0.0, hi, grid_size)
    return min(-M1, m2), max(-m1, M2)


def stage_images(polys: Iterable[OddPolynomial], lo: float, hi: float, grid_size: int = 10_000) -> list[tuple[float, float]]:
    """Propagate [lo, hi] through each polynomial; the last entry is the exact
    image of the composition (images of intervals are intervals)."""
    out = []
    for p in polys:
        if not (math.isfinite(lo) and math.isfinite(hi)):
            out.append((lo, hi))
            continue
        with np.errstate(over="ignore", invalid="ignore"):
            lo, hi = image_interval(p, lo, hi, grid_size)
        out.append((lo, hi))
    return out


def find_a_star(c, delta: float, right: float, grid: int = 10_000) -> float:
    """Smallest x in [0, right] with |phi(x) - 1| <= delta, refined by bisection."""
    xs = np.linspace(0.0, right, grid)
    with np.errstate(over="ignore", invalid="ignore"):
        ok = np.abs(compose_eval(c, xs) - 1.0) <= delta
    if not ok.any():
        return math.nan
    i = int(np.argmax(ok))
    if i == 0:
        return 0.0
    lo, hi = float(xs[i - 1]), float(xs[i])
    while hi - lo > 1e-15 * right:
        mid = 0.5 * (lo + hi)
        if abs(compose_eval(c, mid) - 1.0) <= delta:
            hi = mid
        else:
            lo = mid
    return hi


def verify_composition(c, delta: float, right: float | None = None, grid: int = 10_000, slack: float = 1e-6) -> VerifyReport:
    """Certify that phi maps [a*, right] into [1 - delta, 1 + delta].

    ``c`` is a Composition or Schedule.  The image is computed stage by stage
    from grids plus critical points, and cross-checked on a uniform grid of
    the composition itself.
    """
    if not 0 < delta < 1:
        raise ValueError(f"delta must lie in (0, 1), got {delta}")
    polys = tuple(c.polys)
    right = 1.0 + delta if right is None else float(right)
    a_star = find_a_star(c, delta, right, grid)
    deriv = composition_derivative_at_zero(c)
    matmuls = sum(p.matmuls for p in polys)
    if math.isnan(a_star):
        return VerifyReport(delta, right, a_star, (math.nan, math.nan), math.inf, deriv, matmuls, False)
    stages = stage_images(polys, a_star, right, grid)
    lo, hi = stages[-1]
    xs = np.linspace(a_star, right, grid)
    with np.errstate(over="ignore", invalid="ignore"):
        ys = compose_eval(c, xs)
    lo = min(lo, float(np.min(ys)))
    hi = max(hi, float(np.max(ys)))
    viol = max(0.0, (1.0 - delta) - lo, hi - (1.0 + delta))
    if math.isnan(viol):
        viol = math.inf
    return VerifyReport(delta, right, a_star, (lo, hi), viol, deriv, matmuls, viol <= slack, stages)
