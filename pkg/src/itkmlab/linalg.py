"""Small dense kernels: cyclic Jacobi, power iteration, bottleneck matching."""

from __future__ import annotations

import math

import numpy as np
from scipy.optimize import linear_sum_assignment

from .errors import InvalidInputError, NumericalError


def jacobi_eigh(A: np.ndarray, tol: float = 1e-12, max_sweeps: int = 100):
    """Eigen-decomposition of a real symmetric matrix by cyclic Jacobi rotations.

    Sweeps over all (p, q) pairs above the diagonal until the Frobenius norm of
    the off-diagonal part is at most ``tol``.

    Returns:
        (eigenvalues ascending, eigenvectors as columns, sweeps used)
    """
    A = np.array(A, dtype=float)
    n, m = A.shape
    if n != m:
        raise InvalidInputError("matrix must be square")
    if not np.allclose(A, A.T, rtol=0, atol=1e-12 * max(1.0, np.abs(A).max())):
        raise InvalidInputError("matrix must be symmetric")
    A = 0.5 * (A + A.T)
    V = np.eye(n)

    def off(M):
        return float(np.linalg.norm(M - np.diag(np.diag(M))))

    sweeps = 0
    while off(A) > tol:
        if sweeps >= max_sweeps:
            raise NumericalError(f"Jacobi did not converge in {max_sweeps} sweeps (off={off(A):.3e})")
        for p in range(n - 1):
            for q in range(p + 1, n):
                apq = A[p, q]
                if apq == 0.0:
                    continue
                diff = A[q, q] - A[p, p]
                if abs(apq) < 1e-300 or abs(diff) > 1e150 * abs(apq):
                    # tan of the rotation angle ~ apq / diff; avoids overflow in theta^2
                    t = apq / diff
                else:
                    # stable rotation angle (Rutishauser)
                    theta = diff / (2.0 * apq)
                    t = math.copysign(1.0, theta) / (abs(theta) + math.sqrt(theta * theta + 1.0))
                c = 1.0 / math.sqrt(t * t + 1.0)
                s = t * c
                R = np.array([[c, s], [-s, c]])
                idx = [p, q]
                A[:, idx] = A[:, idx] @ R
                A[idx, :] = R.T @ A[idx, :]
                A[p, q] = A[q, p] = 0.0
                V[:, idx] = V[:, idx] @ R
        sweeps += 1

    w = np.diag(A).copy()
    order = np.argsort(w, kind="stable")
    return w[order], V[:, order], sweeps


def power_iteration(G: np.ndarray, rng: np.random.Generator, tol: float = 1e-12, max_iter: int = 10_000):
    """Leading eigenpair of a symmetric positive semidefinite matrix.

    Stops once ``||G w - lam w|| <= tol * ||G||_F``. Raises NumericalError with
    the last residual if ``max_iter`` is reached first.
    """
    G = np.asarray(G, dtype=float)
    n = G.shape[0]
    scale = float(np.linalg.norm(G))
    if scale == 0.0:
        raise NumericalError("power iteration on the zero matrix")
    w = rng.standard_normal(n)
    w /= np.linalg.norm(w)
    resid = math.inf
    for _ in range(max_iter):
        v = G @ w
        lam = float(w @ v)
        resid = float(np.linalg.norm(v - lam * w))
        if resid <= tol * scale:
            return lam, w
        nv = np.linalg.norm(v)
        if nv == 0.0:
            # start vector in the null space
            w = rng.standard_normal(n)
            w /= np.linalg.norm(w)
            continue
        w = v / nv
    raise NumericalError(
        f"power iteration did not converge in {max_iter} steps: "
        f"residual {resid:.3e}, ||G||_F {scale:.3e}"
    )


def bottleneck_assignment(cost: np.ndarray):
    """Permutation minimising the largest assigned cost of a square matrix.

    The optimal bottleneck value is one of the matrix entries; a binary search
    over the sorted entries uses Hungarian assignment on the thresholded matrix
    as feasibility test. Among bottleneck-optimal assignments the one with the
    smallest total cost is returned.

    Returns:
        (bottleneck value, perm) with ``perm[i]`` the column assigned to row i.
    """
    cost = np.asarray(cost, dtype=float)
    n = cost.shape[0]
    if cost.shape != (n, n):
        raise InvalidInputError("cost matrix must be square")
    if n == 0:
        return 0.0, np.zeros(0, dtype=int)
    values = np.unique(cost)
    big = float(cost.sum()) + 1.0

    def solve(thr):
        masked = np.where(cost <= thr, cost, big)
        rows, cols = linear_sum_assignment(masked)
        feasible = bool(np.all(cost[rows, cols] <= thr))
        return feasible, cols

    lo, hi = 0, len(values) - 1
    while lo < hi:
        mid = (lo + hi) // 2
        if solve(values[mid])[0]:
            hi = mid
        else:
            lo = mid + 1
    _, cols = solve(values[lo])
    return float(values[lo]), np.asarray(cols, dtype=int)
