"""Dense two-phase tableau simplex for small linear programs.

Solves ``min c^T x  s.t.  A_ub x <= b_ub,  A_eq x = b_eq,  x >= 0``.
Bland's rule is used for both the entering and the leaving variable, which
rules out cycling on degenerate vertices (all sets we build here have lots
of those).  Sizes of interest are a few hundred rows/columns at most.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import Infeasible, InnerSolverFailure, Unbounded


@dataclass(frozen=True)
class LPResult:
    x: np.ndarray
    value: float
    iterations: int


def _pivot(T: np.ndarray, row: int, col: int) -> None:
    T[row] /= T[row, col]
    factors = T[:, col].copy()
    factors[row] = 0.0
    T -= np.outer(factors, T[row])


def _simplex(T: np.ndarray, basis: np.ndarray, allowed: int, tol: float, max_iter: int) -> int:
    """Run primal simplex on tableau ``T`` (objective in the last row).

    Only the first ``allowed`` columns may enter the basis.
    """
    m = T.shape[0] - 1
    for it in range(max_iter):
        reduced = T[-1, :allowed]
        entering = np.flatnonzero(reduced < -tol)
        if entering.size == 0:
            return it
        col = int(entering[0])
        column = T[:m, col]
        pos = column > tol
        if not pos.any():
            raise Unbounded("linear program is unbounded below")
        ratios = np.full(m, np.inf)
        ratios[pos] = T[:m, -1][pos] / column[pos]
        best = ratios.min()
        ties = np.flatnonzero(ratios <= best + tol * max(1.0, abs(best)))
        row = int(ties[np.argmin(basis[ties])])
        _pivot(T, row, col)
        basis[row] = col
    raise InnerSolverFailure(f"simplex did not terminate in {max_iter} pivots")


def linprog_dense(
    c,
    A_ub=None,
    b_ub=None,
    A_eq=None,
    b_eq=None,
    *,
    tol: float = 1e-11,
    max_iter: int = 50_000,
) -> LPResult:
    c = np.asarray(c, dtype=float)
    n = c.size
    A_ub = np.zeros((0, n)) if A_ub is None else np.atleast_2d(np.asarray(A_ub, dtype=float))
    b_ub = np.zeros(0) if b_ub is None else np.atleast_1d(np.asarray(b_ub, dtype=float))
    A_eq = np.zeros((0, n)) if A_eq is None else np.atleast_2d(np.asarray(A_eq, dtype=float))
    b_eq = np.zeros(0) if b_eq is None else np.atleast_1d(np.asarray(b_eq, dtype=float))
    m_ub, m_eq = A_ub.shape[0], A_eq.shape[0]
    m = m_ub + m_eq

    # equality form with slacks for the inequality rows
    A = np.zeros((m, n + m_ub))
    A[:m_ub, :n] = A_ub
    A[:m_ub, n:] = np.eye(m_ub)
    A[m_ub:, :n] = A_eq
    b = np.concatenate([b_ub, b_eq])
    neg = b < 0
    A[neg] *= -1.0
    b = np.abs(b)

    n_struct = n + m_ub
    # rows whose slack can start in the basis need no artificial
    needs_art = np.ones(m, dtype=bool)
    needs_art[:m_ub] = neg[:m_ub]
    art_rows = np.flatnonzero(needs_art)
    n_art = art_rows.size

    T = np.zeros((m + 1, n_struct + n_art + 1))
    T[:m, :n_struct] = A
    T[:m, -1] = b
    basis = np.empty(m, dtype=int)
    for i in range(m_ub):
        basis[i] = n + i
    for j, i in enumerate(art_rows):
        T[i, n_struct + j] = 1.0
        basis[i] = n_struct + j

    iters = 0
    if n_art:
        T[-1, n_struct:n_struct + n_art] = 1.0
        for i in art_rows:
            T[-1] -= T[i]
        iters += _simplex(T, basis, n_struct + n_art, tol, max_iter)
        if -T[-1, -1] > 1e3 * tol * max(1.0, np.abs(b).max(initial=0.0)):
            raise Infeasible("linear program has no feasible point")
        # drive zero-level artificials out of the basis
        keep = np.ones(m, dtype=bool)
        for i in range(m):
            if basis[i] >= n_struct:
                row = T[i, :n_struct]
                cand = np.flatnonzero(np.abs(row) > tol)
                if cand.size:
                    _pivot(T, i, int(cand[0]))
                    basis[i] = int(cand[0])
                else:
                    keep[i] = False
        T = np.vstack([T[:m][keep], T[-1:]])
        basis = basis[keep]
        T = np.delete(T, np.s_[n_struct:n_struct + n_art], axis=1)
        m = basis.size

    T[-1] = 0.0
    T[-1, :n] = c
    for i in range(m):
        cb = T[-1, basis[i]]
        if cb != 0.0:
            T[-1] -= cb * T[i]
    iters += _simplex(T, basis, n_struct, tol, max_iter)

    x_full = np.zeros(n_struct)
    x_full[basis] = T[:m, -1]
    x = x_full[:n]
    return LPResult(x=x, value=float(c @ x), iterations=iters)
