"""Dense strictly convex QP by the Goldfarb-Idnani dual active-set method.

Solves ``min 1/2 y'Gy + a'y  s.t.  E y = e,  C y >= c`` for the small
problems that arise when projecting onto polyhedra (tens of variables).  The
factorization is recomputed from scratch whenever the active set changes,
which is cheap at that size and avoids the bookkeeping of Givens updates.
"""
from __future__ import annotations

import numpy as np
from scipy.linalg import cholesky, solve_triangular

from .core import InfeasibleError


def solve_qp(G, a, E=None, e=None, C=None, c=None, tol: float = 1e-12, max_iter: int = 10_000):
    G = np.asarray(G, dtype=float)
    a = np.asarray(a, dtype=float)
    n = a.shape[0]
    E = np.zeros((0, n)) if E is None else np.atleast_2d(np.asarray(E, dtype=float))
    e = np.zeros(0) if e is None else np.asarray(e, dtype=float).reshape(-1)
    C = np.zeros((0, n)) if C is None else np.atleast_2d(np.asarray(C, dtype=float))
    c = np.zeros(0) if c is None else np.asarray(c, dtype=float).reshape(-1)

    L = cholesky(G, lower=True)
    Linv = solve_triangular(L, np.eye(n), lower=True)
    y = -Linv.T @ (Linv @ a)

    normals: list[np.ndarray] = []
    rhs: list[float] = []
    is_eq: list[bool] = []
    u = np.zeros(0)
    pending_eq = list(range(E.shape[0]))

    def factor():
        q = len(normals)
        if q == 0:
            return Linv.T, np.zeros((0, 0))
        N = np.column_stack(normals)
        Q, R = np.linalg.qr(Linv @ N, mode="complete")
        return Linv.T @ Q, R[:q, :q]

    scale = 1.0 + np.abs(a).max(initial=0.0)
    eps = 1e-13 * scale

    for _ in range(max_iter):
        # choose the next constraint to enforce: equalities first
        if pending_eq:
            i = pending_eq.pop(0)
            n_p, b_p, eq = E[i].copy(), float(e[i]), True
            s_p = float(n_p @ y) - b_p
            if s_p > 0:
                n_p, b_p, s_p = -n_p, -b_p, -s_p
        else:
            if C.shape[0] == 0:
                break
            slack = C @ y - c
            i = int(np.argmin(slack))
            if slack[i] >= -tol * (1.0 + abs(c[i])):
                break
            n_p, b_p, eq = C[i], float(c[i]), False
            s_p = float(slack[i])

        u_plus = np.append(u, 0.0)
        while True:
            J, R = factor()
            q = len(normals)
            d = J.T @ n_p
            z = J[:, q:] @ d[q:]
            r = solve_triangular(R, d[:q]) if q else np.zeros(0)

            t1, drop = np.inf, None
            for j in range(q):
                if not is_eq[j] and r[j] > eps:
                    ratio = u_plus[j] / r[j]
                    if ratio < t1:
                        t1, drop = ratio, j

            s_p = float(n_p @ y) - b_p
            if np.linalg.norm(z) <= eps:
                if eq and abs(s_p) <= tol * (1.0 + abs(b_p)):
                    # redundant but consistent equality
                    u_plus = u_plus[:-1]
                    break
                t2 = np.inf
            else:
                t2 = -s_p / float(z @ n_p)

            t = min(t1, t2)
            if not np.isfinite(t):
                raise InfeasibleError("constraints are inconsistent")
            if not np.isfinite(t2):
                u_plus[:q] -= t * r
                u_plus[q] += t
                normals.pop(drop), rhs.pop(drop), is_eq.pop(drop)
                u_plus = np.delete(u_plus, drop)
                continue
            y = y + t * z
            u_plus[:q] -= t * r
            u_plus[q] += t
            if t2 <= t1:
                normals.append(n_p)
                rhs.append(b_p)
                is_eq.append(eq)
                u = u_plus
                break
            normals.pop(drop), rhs.pop(drop), is_eq.pop(drop)
            u_plus = np.delete(u_plus, drop)
    else:
        raise InfeasibleError("active-set iteration limit reached")

    if E.shape[0] and np.abs(E @ y - e).max() > 1e-8 * (1.0 + np.abs(e).max()):
        raise InfeasibleError("equality constraints are inconsistent")
    return y
