import math

import mpmath as mp
import numpy as np
import pytest

from nsortho.minimax import (
    DegreeTooHighError,
    MinimaxResult,
    best_cubic,
    best_odd,
    epsilon_cubic,
    epsilon_cubic_centered,
    flat_poly,
    minimax_error,
    remez,
    solve_alternance_system,
)
from nsortho.poly import OddPolynomial, derivative_at_zero, evaluate, range_on_interval

mp.mp.dps = 40


def mp_cubic_oracle(a, b):
    """Solve p(a) = 1 - e, p(m) = 1 + e, p'(m) = 0, p(b) = 1 - e at 40 digits."""
    a, b = mp.mpf(a), mp.mpf(b)

    def eqs(c1, c3, e, m):
        p = lambda x: c1 * x + c3 * x**3
        return [p(a) - 1 + e, p(m) - 1 - e, c1 + 3 * c3 * m**2, p(b) - 1 + e]

    m0 = (a + b) / 2
    c1, c3, e, m = mp.findroot(eqs, (mp.mpf(2) / (a + b), -mp.mpf(0.5), (b - a) / (4 * (a + b)), m0))
    return float(c1), float(c3), float(e), float(m)


def mp_sup_error(p, a, b, n=20001):
    xs = [mp.mpf(a) + (mp.mpf(b) - mp.mpf(a)) * i / (n - 1) for i in range(n)]
    cs = [mp.mpf(c) for c in p.coeffs]
    worst = 0
    for x in xs:
        v = sum(c * x ** (2 * k + 1) for k, c in enumerate(cs))
        worst = max(worst, abs(v - 1))
    return float(worst)


def test_epsilon_cubic_examples():
    assert epsilon_cubic(1, 1) == 0.0
    assert abs(epsilon_cubic(0.5, 1) - 0.085952) < 1e-5
    assert epsilon_cubic(0.25, 0.5) == epsilon_cubic(0.5, 1)
    for bad in [(0, 1), (-1, 1), (2, 1)]:
        with pytest.raises(ValueError):
            epsilon_cubic(*bad)


@pytest.mark.parametrize("e", [0.5, 0.3, 1e-3, 1e-9, 1e-17, 1e-30])
def test_epsilon_cubic_centered_against_direct_formula(e):
    # direct (cancelling) formula, evaluated with enough digits to survive the cancellation
    with mp.workdps(150):
        a, b = 1 - mp.mpf(e), 1 + mp.mpf(e)
        s = a * a + a * b + b * b
        t = 2 * (s / 3) ** mp.mpf(1.5)
        expect = float((t - a * b * (a + b)) / (t + a * b * (a + b)))
    assert epsilon_cubic_centered(e) == pytest.approx(expect, rel=1e-13)
    if e > 1e-6:
        assert epsilon_cubic_centered(e) == pytest.approx(epsilon_cubic(1 - e, 1 + e), rel=1e-12)
    with pytest.raises(ValueError):
        epsilon_cubic_centered(1.0)


@pytest.mark.parametrize("a,b", [(0.5, 1), (0.01, 1), (0.3, 1.7), (0.999, 1.0), (1e-6, 1.0)])
def test_best_cubic_against_high_precision_oracle(a, b):
    c1, c3, e, m = mp_cubic_oracle(a, b)
    res = best_cubic(a, b)
    assert res.poly.coeffs == pytest.approx((c1, c3), rel=1e-12)
    assert res.epsilon == pytest.approx(e, rel=1e-10, abs=1e-16)
    assert res.alternance[1] == pytest.approx(m, rel=1e-12)


def test_best_cubic_examples():
    assert best_cubic(1, 1).poly.coeffs == (1.5, -0.5)
    res = best_cubic(0.5, 1)
    assert res.poly.coeffs == pytest.approx((2.13278, -1.21873), abs=1e-5)
    assert res.epsilon == pytest.approx(0.085952, abs=1e-5)
    assert res.alternance[1] == pytest.approx(math.sqrt(1.75 / 3), abs=1e-12)
    assert res.alternance == (0.5, res.alternance[1], 1.0)


def test_best_cubic_beats_brute_force_grid():
    # the closed form must be at least as good as any cubic on a refined grid
    a, b = 0.5, 1.0
    xs = np.linspace(a, b, 2001)
    c1, c3 = 2.0, -1.0
    step = 0.5
    for _ in range(30):
        grid1 = c1 + step * np.linspace(-1, 1, 21)
        grid3 = c3 + step * np.linspace(-1, 1, 21)
        errs = np.array([[np.max(np.abs(u * xs + v * xs**3 - 1)) for v in grid3] for u in grid1])
        i, j = np.unravel_index(np.argmin(errs), errs.shape)
        c1, c3 = grid1[i], grid3[j]
        step /= 3
    res = best_cubic(a, b)
    lo, hi = range_on_interval(OddPolynomial((c1, c3)), a, b)
    true_sup = max(1 - lo, hi - 1)
    assert res.epsilon <= true_sup + 1e-12
    assert abs(res.epsilon - true_sup) < 1e-6


def test_solve_alternance_examples():
    p, e = solve_alternance_system([0.5, 1.0], 1)
    assert p.coeffs[0] == pytest.approx(4 / 3, rel=1e-14)
    assert e == pytest.approx(1 / 3, rel=1e-14)
    ref = best_cubic(0.5, 1)
    p, e = solve_alternance_system(list(ref.alternance), 2)
    assert p.coeffs == pytest.approx(ref.poly.coeffs, abs=1e-8)
    with pytest.raises(ValueError):
        solve_alternance_system([0.5, 0.5, 1.0], 2)
    with pytest.raises(ValueError):
        solve_alternance_system([0.5, 1.0], 2)


def test_degree_too_high_reported():
    with pytest.raises(DegreeTooHighError):
        solve_alternance_system([1e-3 * (1 + 1e-9 * k) for k in range(9)], 8)


def test_remez_examples():
    r = remez(0.5, 1, 2)
    assert r.poly.coeffs == pytest.approx(best_cubic(0.5, 1).poly.coeffs, rel=1e-10)
    r1 = remez(0.5, 1, 1)
    assert r1.poly.coeffs[0] == pytest.approx(4 / 3, rel=1e-14)
    assert r1.epsilon == pytest.approx(1 / 3, rel=1e-14)
    assert remez(0.1, 1, 3).epsilon < epsilon_cubic(0.1, 1)
    with pytest.raises(ValueError):
        remez(1, 1, 3)
    with pytest.raises(ValueError):
        remez(0.5, 1, 9)


@pytest.mark.parametrize("n", [3, 4, 5, 6])
@pytest.mark.parametrize("a,b", [(0.1, 1.0), (0.01, 1.0), (0.7, 1.3)])
def test_remez_certified_by_high_precision_sup(n, a, b):
    r = remez(a, b, n)
    assert r.converged
    # independent sup-norm check at 40 digits
    sup = mp_sup_error(r.poly, a, b, 4001)
    assert sup <= r.epsilon * (1 + 1e-9) + 1e-15
    # de la Vallee Poussin: alternating errors at the reference bound the optimum from below
    errs = [float(evaluate(r.poly, x)) - 1 for x in r.alternance]
    assert all(errs[j] * errs[j + 1] < 0 for j in range(n))
    assert min(abs(v) for v in errs) >= r.epsilon * (1 - 1e-9)


def test_equioscillation_properties(rng):
    for _ in range(10):
        b = rng.uniform(0.5, 2)
        a = b * rng.uniform(0.02, 0.9)
        for n in (2, 3, 4, 5):
            r = best_odd(n, a, b)
            assert r.alternance[0] == a and r.alternance[-1] == b
            assert evaluate(r.poly, a) == pytest.approx(1 - r.epsilon, abs=1e-10)
            for j, x in enumerate(r.alternance):
                assert evaluate(r.poly, x) - 1 == pytest.approx(-((-1) ** j) * r.epsilon, abs=1e-10)
            assert derivative_at_zero(r.poly) >= (1 - r.epsilon) / a - 1e-9
            assert r.epsilon < (b - a) / (b + a)


@pytest.mark.parametrize("t", [0.1, 2.0, 10.0])
def test_scale_invariance(t):
    for n in (2, 3, 5):
        r = best_odd(n, 0.2, 1.0)
        rt = best_odd(n, 0.2 * t, t)
        assert rt.epsilon == pytest.approx(r.epsilon, abs=1e-9)
        xs = np.linspace(0, 1.0, 101)
        assert np.allclose(evaluate(rt.poly, t * xs), evaluate(r.poly, xs), atol=1e-8)


def test_monotonicity():
    b = 1.0
    for n in (2, 3, 4):
        errs = [minimax_error(n, a, b) for a in (0.05, 0.2, 0.5, 0.8)]
        assert all(x > y for x, y in zip(errs, errs[1:]))
    for a in (0.05, 0.3):
        errs = [minimax_error(n, a, b) for n in (1, 2, 3, 4, 5)]
        assert all(x > y for x, y in zip(errs, errs[1:]))


def test_flat_poly_limits():
    assert flat_poly(2).coeffs == (1.5, -0.5)
    assert flat_poly(3).coeffs == pytest.approx((15 / 8, -10 / 8, 3 / 8))
    p = flat_poly(4, 2.0)
    assert evaluate(p, 2.0) == pytest.approx(1.0)
    assert best_odd(3, 1.0, 1.0).poly.coeffs == pytest.approx((15 / 8, -10 / 8, 3 / 8))


def test_narrow_interval_falls_back_to_flat():
    r = best_odd(5, 1 - 1e-9, 1 + 1e-9)
    assert not r.converged
    assert r.epsilon < 1e-15


def test_result_json_round_trip():
    r = best_odd(3, 0.2, 1.0)
    d = MinimaxResult.from_dict(__import__("json").loads(r.to_json()))
    assert d.poly == r.poly and d.epsilon == r.epsilon and d.alternance == r.alternance
    assert list(__import__("json").loads(r.to_json())) == ["a", "alternance", "b", "coeffs", "epsilon"]
