"""Odd polynomials p(x) = a1*x + a3*x^3 + ... and their compositions.

Coefficients are stored lowest degree first, odd powers only, so oddness
holds by construction.  Evaluation is Horner in x^2 followed by a single
multiply by x, which makes p(-x) == -p(x) bitwise.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np

SCAN_SAMPLES = 4096


@dataclass(frozen=True)
class OddPolynomial:
    coeffs: tuple[float, ...]

    def __init__(self, coeffs: Iterable[float]):
        c = tuple(float(v) for v in coeffs)
        if not c:
            raise ValueError("odd polynomial needs at least one coefficient")
        if not all(math.isfinite(v) for v in c):
            raise ValueError(f"non-finite coefficient in {c}")
        object.__setattr__(self, "coeffs", c)

    @property
    def terms(self) -> int:
        return len(self.coeffs)

    @property
    def degree(self) -> int:
        return 2 * len(self.coeffs) - 1

    @property
    def matmuls(self) -> int:
        """Matrix products needed to apply this polynomial to a matrix."""
        return len(self.coeffs)

    def __call__(self, x):
        return evaluate(self, x)

    def derivative(self, x):
        return eval_derivative(self, x)

    def rescaled(self, t: float) -> "OddPolynomial":
        """Return x -> p(t*x)."""
        return OddPolynomial(a * t ** (2 * k + 1) for k, a in enumerate(self.coeffs))

    def to_dict(self) -> dict:
        return {"coeffs": list(self.coeffs)}

    @classmethod
    def from_dict(cls, d: dict) -> "OddPolynomial":
        return cls(d["coeffs"])


@dataclass(frozen=True)
class Composition:
    """Polynomials applied innermost first: polys[0] acts on x."""

    polys: tuple[OddPolynomial, ...]

    def __init__(self, polys: Iterable[OddPolynomial | Sequence[float]]):
        ps = tuple(p if isinstance(p, OddPolynomial) else OddPolynomial(p) for p in polys)
        if not ps:
            raise ValueError("composition must contain at least one polynomial")
        object.__setattr__(self, "polys", ps)

    def __len__(self) -> int:
        return len(self.polys)

    def __call__(self, x):
        return compose_eval(self, x)

    @property
    def matmuls(self) -> int:
        return sum(p.matmuls for p in self.polys)

    def to_list(self) -> list[dict]:
        return [p.to_dict() for p in self.polys]

    @classmethod
    def from_list(cls, items: Sequence) -> "Composition":
        polys = []
        for item in items:
            if isinstance(item, dict):
                polys.append(OddPolynomial.from_dict(item))
            else:
                polys.append(OddPolynomial(item))
        return cls(polys)


def evaluate(p: OddPolynomial, x):
    """Evaluate p at a scalar or array ``x``."""
    x2 = x * x
    c = p.coeffs
    acc = c[-1]
    for a in c[-2::-1]:
        acc = acc * x2 + a
    return acc * x


def eval_derivative(p: OddPolynomial, x):
    """p'(x) = sum (2k-1) a_{2k-1} x^(2k-2), Horner in x^2."""
    x2 = x * x
    c = p.coeffs
    acc = (2 * len(c) - 1) * c[-1]
    for k in range(len(c) - 2, -1, -1):
        acc = acc * x2 + (2 * k + 1) * c[k]
    return acc


def derivative_at_zero(p: OddPolynomial) -> float:
    return p.coeffs[0]


def compose_eval(c, x):
    """Apply ``c.polys`` to ``x`` innermost first.

    Anything exposing a ``polys`` sequence is accepted, so schedules can be
    evaluated directly.
    """
    for p in c.polys:
        x = evaluate(p, x)
    return x


def composition_derivative_at_zero(c) -> float:
    # chain rule at the fixed point 0
    return math.prod(p.coeffs[0] for p in c.polys)


def critical_points(p: OddPolynomial, a: float, b: float, samples: int = SCAN_SAMPLES) -> list[float]:
    """Zeros of p' in the open interval (a, b), located by a sign-change scan
    followed by bisection down to a width of 1e-14*b."""
    if p.terms < 2:
        return []
    xs = np.linspace(a, b, samples)
    ds = eval_derivative(p, xs)
    width = 1e-14 * max(abs(b), 1e-300)
    roots = [float(x) for x in xs[1:-1][ds[1:-1] == 0.0]]
    for i in np.nonzero(ds[:-1] * ds[1:] < 0.0)[0]:
        lo, hi = float(xs[i]), float(xs[i + 1])
        flo = ds[i]
        while hi - lo > width:
            mid = 0.5 * (lo + hi)
            fm = eval_derivative(p, mid)
            if fm == 0.0:
                lo = hi = mid
                break
            if (fm > 0) == (flo > 0):
                lo = mid
            else:
                hi = mid
        roots.append(0.5 * (lo + hi))
    return sorted(roots)


def range_on_interval(p: OddPolynomial, a: float, b: float, grid_size: int = 10_000) -> tuple[float, float]:
    """Min and max of p over [a, b], from a uniform grid plus every interior
    critical point."""
    if not (0.0 <= a < b) or not math.isfinite(b):
        raise ValueError(f"invalid interval [{a}, {b}]")
    if grid_size < 2:
        raise ValueError("grid_size must be at least 2")
    xs = np.linspace(a, b, grid_size)
    vals = evaluate(p, xs)
    lo, hi = float(vals.min()), float(vals.max())
    for x in critical_points(p, a, b):
        v = float(evaluate(p, x))
        lo, hi = min(lo, v), max(hi, v)
    return lo, hi


def dumps(obj) -> str:
    """Serialize a polynomial or composition; repr() of a float round-trips."""
    if isinstance(obj, OddPolynomial):
        return json.dumps(obj.to_dict())
    if isinstance(obj, Composition):
        return json.dumps(obj.to_list())
    raise TypeError(f"cannot serialize {type(obj).__name__}")


def loads(text: str):
    data = json.loads(text)
    if isinstance(data, dict):
        return OddPolynomial.from_dict(data)
    return Composition.from_list(data)
