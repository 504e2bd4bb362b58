import logging
import math

import numpy as np
import pytest

from conftest import orthonormal
from nsortho.linalg import reference_svd
from nsortho.minimax import epsilon_cubic
from nsortho.stiefel import (
    OptimizerState,
    check_point,
    optimize,
    orth_residual,
    polar_retract,
    project_tangent,
    radam_step,
    rsgd_step,
    sigma1_bound,
    w_matrix,
)


def random_case(rng, n=None, p=None, scale=None):
    n = int(rng.integers(2, 30)) if n is None else n
    p = int(rng.integers(1, n + 1)) if p is None else p
    X = orthonormal(rng, n, p)
    xi = rng.standard_normal((n, p)) * (rng.uniform(0.01, 2) if scale is None else scale)
    return X, xi


def toy_problem(n=20, p=4, seed=0):
    g = np.random.default_rng(seed)
    C = g.standard_normal((n, n))
    B = C @ C.T / n
    f_opt = -float(np.sum(np.linalg.eigvalsh(B)[-p:]))
    X0 = np.linalg.qr(g.standard_normal((n, p)))[0]
    return B, f_opt, X0, (lambda X: -float(np.trace(X.T @ B @ X))), (lambda X: -2.0 * B @ X)


def test_projection_examples():
    e1, e2 = np.eye(5)[:, :1], np.eye(5)[:, 1:2]
    assert np.array_equal(project_tangent(e1, e2), e2)
    assert np.array_equal(project_tangent(e1, e1), np.zeros((5, 1)))
    with pytest.raises(ValueError):
        project_tangent(e1, np.eye(5)[:, :2])


def test_projection_tangent_idempotent_linear(rng):
    for _ in range(50):
        X, Z = random_case(rng)
        P = project_tangent(X, Z)
        assert np.linalg.norm(P.T @ X + X.T @ P) <= 1e-10 * (1 + np.linalg.norm(Z))
        assert np.allclose(project_tangent(X, P), P, atol=1e-12)
        Z2 = rng.standard_normal(Z.shape)
        assert np.allclose(project_tangent(X, 2 * Z - Z2), 2 * P - project_tangent(X, Z2), atol=1e-12)


def test_w_matrix(rng):
    for _ in range(50):
        X, Z = random_case(rng)
        W = w_matrix(X, Z)
        assert np.abs(W + W.T).max() <= 1e-12
        assert np.allclose(W @ X, project_tangent(X, Z), atol=1e-10)
    X, _ = random_case(rng, 6, 3)
    assert np.allclose(w_matrix(X, X) @ X, 0, atol=1e-14)


def test_sigma_bounds_and_gram_identity(rng):
    for _ in range(100):
        X, xi = random_case(rng)
        P = project_tangent(X, xi)
        A = X + P
        s = reference_svd(A)[1]
        assert s[0] <= sigma1_bound(A) * (1 + 1e-12)
        assert s[-1] >= 1 - 1e-10
        assert np.linalg.norm(A.T @ A - (np.eye(A.shape[1]) + P.T @ P)) <= 1e-9
    X, _ = random_case(rng, 7, 3)
    assert sigma1_bound(X) == pytest.approx(1.0)
    with pytest.raises(ValueError):
        sigma1_bound(0.1 * X)


def test_retract_zero_is_exact(rng):
    X, _ = random_case(rng, 9, 4)
    R = polar_retract(X, np.zeros_like(X))
    assert np.array_equal(R, X) and R is not X


def test_retract_bound(rng):
    for _ in range(50):
        X, xi = random_case(rng)
        V = project_tangent(X, xi)
        R = polar_retract(X, V)
        e1 = epsilon_cubic(1.0 / sigma1_bound(X + V), 1.0)
        assert np.linalg.norm(R.T @ R - np.eye(X.shape[1]), 2) <= 2 * e1 + e1**2 + 1e-12
        s = reference_svd(R)[1]
        assert np.all(np.abs(s - 1) <= e1 + 1e-12)


def test_retract_more_rounds_tighter(rng):
    X, xi = random_case(rng, 12, 5, scale=0.5)
    V = project_tangent(X, xi)
    assert orth_residual(polar_retract(X, V, 3)) < orth_residual(polar_retract(X, V, 1))
    with pytest.raises(ValueError):
        polar_retract(X, V, 0)


def test_retract_near_degenerate_interval(rng):
    X, xi = random_case(rng, 8, 3)
    V = 1e-9 * project_tangent(X, xi)
    R = polar_retract(X, V)
    assert orth_residual(R) < 1e-12
    assert np.all(np.isfinite(R))


def test_retract_first_order_rigidity(rng):
    X, xi = random_case(rng, 15, 4, scale=1.0)
    V = project_tangent(X, xi)
    ratios = []
    for t in (1e-2, 1e-3, 1e-4):
        ratios.append(np.linalg.norm(polar_retract(X, t * V) - (X + t * V)) / t)
    assert ratios[0] > ratios[1] > ratios[2]
    # the defect is second order, so each tenfold cut in t cuts the ratio about tenfold
    assert ratios[1] / ratios[0] < 0.2 and ratios[2] / ratios[1] < 0.2


def test_optimizer_state_validation(rng):
    X, _ = random_case(rng, 5, 2)
    with pytest.raises(ValueError):
        OptimizerState(X, np.zeros_like(X), v=-1.0)
    with pytest.raises(ValueError):
        OptimizerState.init(2 * X)
    with pytest.raises(ValueError):
        check_point(X.T)


def test_zero_gradient_keeps_point(rng):
    X, _ = random_case(rng, 8, 3)
    st = OptimizerState.init(X)
    assert np.array_equal(rsgd_step(st, np.zeros_like(X)).X, X)
    st = OptimizerState.init(X, v=3.0)
    assert np.array_equal(radam_step(st, np.zeros_like(X)).X, X)


def test_rsgd_beta_zero_direction(rng):
    X, G = random_case(rng, 10, 3)
    st = OptimizerState.init(X, beta=0.0, lr=1e-4)
    new = rsgd_step(st, G)
    d = (new.X - X) / 1e-4
    expect = -project_tangent(X, G)
    assert np.linalg.norm(d - expect) <= 1e-3 * np.linalg.norm(expect)
    assert np.allclose(new.M, expect, atol=1e-14)


def test_radam_first_step(rng):
    X, G = random_case(rng, 10, 3)
    st = OptimizerState.init(X, lr=1e-4)
    new = radam_step(st, G)
    v_hat = new.v / (1 - st.beta2)
    assert v_hat == pytest.approx(float(np.sum(G * G)), rel=1e-12)
    assert new.step_count == 1
    # first step: M_hat = -pi_X(G), so the step descends along the projected gradient
    expect = -project_tangent(X, G) / math.sqrt(v_hat + st.eps_adam)
    d = (new.X - X) / 1e-4
    assert np.linalg.norm(d - expect) <= 1e-3 * np.linalg.norm(expect)
    assert np.allclose(new.M, (1 - st.beta1) * -project_tangent(X, G), atol=1e-14)


@pytest.mark.parametrize("method,lr,steps", [("sgd", 0.05, 200), ("adam", 0.05, 2000)])
def test_toy_convergence(method, lr, steps):
    B, f_opt, X0, f, grad = toy_problem()
    st, tr = optimize(f, grad, OptimizerState.init(X0, lr=lr), steps, method)
    assert abs(f(st.X) - f_opt) <= 1e-3
    assert tr.max_orth_residual <= 1e-6
    assert tr.rows[-1][1] < tr.rows[0][1]


def test_procrustes_toy():
    g = np.random.default_rng(3)
    # maximize tr(X^T M) over St(12, 3); the optimum is the polar factor of M
    M = g.standard_normal((12, 3))
    U, s, Vt = np.linalg.svd(M, full_matrices=False)
    f_opt = -float(np.sum(s))
    X0 = np.linalg.qr(g.standard_normal((12, 3)))[0]
    st, tr = optimize(lambda X: -float(np.sum(X * M)), lambda X: -M, OptimizerState.init(X0, lr=0.1), 300)
    assert -float(np.sum(st.X * M)) - f_opt <= 1e-6
    assert np.allclose(st.X, U @ Vt, atol=1e-3)


def test_long_run_drift(rng):
    X, _ = random_case(rng, 10, 4)
    st = OptimizerState.init(X, lr=0.5, beta=0.5)
    worst = 0.0
    for k in range(1000):
        G = rng.standard_normal(X.shape)
        st = (rsgd_step if k % 2 else radam_step)(st, G)
        worst = max(worst, orth_residual(st.X))
    assert worst <= 1e-6


def test_drift_fix_is_logged(rng, caplog):
    X, _ = random_case(rng, 10, 4)
    st = OptimizerState.init(X, lr=5.0, beta=0.0)
    with caplog.at_level(logging.INFO, logger="nsortho.stiefel"):
        new = rsgd_step(st, 3 * rng.standard_normal(X.shape))
    assert orth_residual(new.X) <= 1e-6
    assert any("drift" in r.getMessage() for r in caplog.records)


def test_optimizer_csv():
    B, f_opt, X0, f, grad = toy_problem(8, 2)
    _, tr = optimize(f, grad, OptimizerState.init(X0), 3)
    lines = tr.to_csv().splitlines()
    assert lines[0] == "step,objective,orth_residual,step_norm"
    assert len(lines) == 5 and lines[1].startswith("0,")
    with pytest.raises(ValueError):
        optimize(f, grad, OptimizerState.init(X0), 1, "lbfgs")
