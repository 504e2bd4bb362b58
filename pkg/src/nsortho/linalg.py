"""Dense kernels: tiled matrix product and a one-sided Jacobi SVD.

The SVD is the reference oracle for tests and error traces, so it is kept
independent of the polynomial machinery.
"""

from __future__ import annotations

import numpy as np

TILE = 64
SVD_CAP = 512


def matmul(A: np.ndarray, B: np.ndarray, tile: int = TILE, parallel: bool = False) -> np.ndarray:
    """C = A @ B accumulated tile by tile in a fixed order.

    The fixed k-order keeps results bit-identical across runs.  ``parallel``
    hands the whole product to BLAS instead, which may reassociate sums.
    """
    if A.ndim != 2 or B.ndim != 2 or A.shape[1] != B.shape[0]:
        raise ValueError(f"cannot multiply {A.shape} by {B.shape}")
    if parallel:
        return A @ B
    m, k = A.shape
    n = B.shape[1]
    C = np.zeros((m, n), dtype=np.result_type(A, B))
    for i in range(0, m, tile):
        for j in range(0, n, tile):
            acc = C[i:i + tile, j:j + tile]
            for p in range(0, k, tile):
                acc += A[i:i + tile, p:p + tile] @ B[p:p + tile, j:j + tile]
    return C


def _round_robin(n: int) -> list[tuple[np.ndarray, np.ndarray]]:
    # circle-method tournament: every pair of columns meets once per sweep
    m = n + (n % 2)
    players = list(range(m))
    rounds = []
    for _ in range(m - 1):
        left = players[: m // 2]
        right = players[m // 2:][::-1]
        pairs = [(p, q) for p, q in zip(left, right) if p < n and q < n]
        P = np.array([min(p, q) for p, q in pairs], dtype=int)
        Q = np.array([max(p, q) for p, q in pairs], dtype=int)
        rounds.append((P, Q))
        players = [players[0], players[-1], *players[1:-1]]
    return rounds


def _jacobi(W: np.ndarray, V: np.ndarray | None, tol: float, max_sweeps: int) -> int:
    """Orthogonalize the columns of W in place; apply the same rotations to V."""
    n = W.shape[1]
    if n < 2:
        return 0
    rounds = _round_robin(n)
    for sweep in range(1, max_sweeps + 1):
        rotated = False
        for P, Q in rounds:
            if P.size == 0:
                continue
            wp, wq = W[:, P], W[:, Q]
            alpha = np.einsum("ij,ij->j", wp, wp)
            beta = np.einsum("ij,ij->j", wq, wq)
            gamma = np.einsum("ij,ij->j", wp, wq)
            active = np.abs(gamma) > tol * np.sqrt(alpha * beta)
            if not active.any():
                continue
            rotated = True
            g = np.where(active, gamma, 1.0)
            zeta = (beta - alpha) / (2.0 * g)
            t = np.where(zeta >= 0, 1.0, -1.0) / (np.abs(zeta) + np.sqrt(1.0 + zeta * zeta))
            c = 1.0 / np.sqrt(1.0 + t * t)
            s = c * t
            c = np.where(active, c, 1.0)
            s = np.where(active, s, 0.0)
            W[:, P] = c * wp - s * wq
            W[:, Q] = s * wp + c * wq
            if V is not None:
                vp, vq = V[:, P], V[:, Q]
                V[:, P] = c * vp - s * vq
                V[:, Q] = s * vp + c * vq
        if not rotated:
            return sweep
    raise RuntimeError(f"Jacobi SVD did not converge in {max_sweeps} sweeps")


def _check_shape(A: np.ndarray) -> None:
    if A.ndim != 2:
        raise ValueError("expected a 2-D matrix")
    m, n = A.shape
    if m < n:
        raise ValueError(f"need rows >= cols, got {m}x{n}")
    if n > SVD_CAP:
        raise ValueError(f"reference SVD is capped at {SVD_CAP} columns, got {n}")
    if not np.all(np.isfinite(A)):
        raise ValueError("matrix has non-finite entries")


def reference_svd(A: np.ndarray, tol: float | None = None, max_sweeps: int = 60):
    """Thin SVD A = U diag(S) V^T by one-sided (Hestenes) Jacobi.

    Returns U (m x n), S (n, non-increasing), V (n x n).
    """
    A = np.asarray(A, dtype=float)
    _check_shape(A)
    m, n = A.shape
    tol = 4 * m * np.finfo(float).eps if tol is None else tol
    W = A.copy()
    V = np.eye(n)
    _jacobi(W, V, tol, max_sweeps)
    S = np.linalg.norm(W, axis=0)
    order = np.argsort(-S, kind="stable")
    S, W, V = S[order], W[:, order], V[:, order]
    U = np.zeros_like(W)
    nz = S > S[0] * m * np.finfo(float).eps if S.size and S[0] > 0 else np.zeros(n, bool)
    U[:, nz] = W[:, nz] / S[nz]
    if not nz.all():
        U = _complete_basis(U, nz)
    return U, S, V


def _complete_basis(U: np.ndarray, nz: np.ndarray) -> np.ndarray:
    # fill columns for zero singular values with an orthonormal complement
    m, n = U.shape
    k = int(nz.sum())
    basis = U[:, nz]
    rng = np.random.default_rng(0)
    fill = []
    while len(fill) < n - k:
        v = rng.standard_normal(m)
        for _ in range(2):
            for b in [*basis.T, *fill]:
                v -= (b @ v) * b
        v /= np.linalg.norm(v)
        fill.append(v)
    out = U.copy()
    out[:, ~nz] = np.array(fill).T
    return out


def singular_values(A: np.ndarray, warm: np.ndarray | None = None, tol: float | None = None) -> np.ndarray:
    """Singular values (non-increasing) via the Jacobi oracle.

    ``warm`` is an orthogonal n x n matrix (typically right singular vectors
    of a related matrix); A @ warm has the same singular values and nearly
    orthogonal columns when A is a spectral function of that matrix, so the
    sweeps finish almost immediately.
    """
    A = np.asarray(A, dtype=float)
    _check_shape(A)
    m = A.shape[0]
    tol = 4 * m * np.finfo(float).eps if tol is None else tol
    W = A @ warm if warm is not None else A.copy()
    _jacobi(W, None, tol, 60)
    return np.sort(np.linalg.norm(W, axis=0))[::-1]
