"""Zero-sum matrix games: certified Nash equilibria and best responses.

The main solver is a dense tableau simplex on the column player's LP

    max 1'w  s.t.  M' w <= 1,  w >= 0,

where ``M'`` is ``M`` affinely rescaled into ``[1, 2]``.  The optimal tableau
gives both players' strategies at once (the row player's comes from the slack
columns' reduced costs).  Every answer carries a duality-gap certificate
computed directly from ``M``, so the caller never has to trust the pivoting.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction

import numpy as np

ORACLE_TOL = 1e-9
LEARNER_TOL = 1e-6

_PIVOT_EPS = 1e-12
_EXACT_MAX_ENTRIES = 400  # rational fallback only for small games


@dataclass(frozen=True)
class NashCertificate:
    x: np.ndarray
    y: np.ndarray
    value: float
    lower: float  # min_b (x'M)_b: what x guarantees
    upper: float  # max_a (M y)_a: what y concedes
    converged: bool = True

    @property
    def gap(self) -> float:
        return self.upper - self.lower


def certify(M, x, y, value=None, tol=ORACLE_TOL) -> NashCertificate:
    """Build a certificate for the strategy pair ``(x, y)`` on ``M``."""
    M = np.asarray(M, dtype=float)
    x = _to_simplex(x)
    y = _to_simplex(y)
    lower = float(np.min(x @ M))
    upper = float(np.max(M @ y))
    if value is None:
        value = 0.5 * (lower + upper)
    value = min(max(float(value), lower), upper)
    return NashCertificate(x, y, value, lower, upper, upper - lower <= tol)


def _to_simplex(p):
    p = np.clip(np.asarray(p, dtype=float), 0.0, None)
    total = p.sum()
    if total <= 0:
        raise ValueError("strategy has no positive mass")
    return p / total


def best_response_row(M, y) -> tuple[int, float]:
    """Row maximising ``(M y)_a``; ties go to the lowest index."""
    M = np.asarray(M, dtype=float)
    y = np.asarray(y, dtype=float)
    if M.ndim != 2 or y.shape != (M.shape[1],):
        raise ValueError(f"dimension mismatch: M{M.shape} vs y{y.shape}")
    payoff = M @ y
    a = int(np.argmax(payoff))
    return a, float(payoff[a])


def best_response_col(M, x) -> tuple[int, float]:
    """Column minimising ``(x' M)_b``; ties go to the lowest index."""
    M = np.asarray(M, dtype=float)
    x = np.asarray(x, dtype=float)
    if M.ndim != 2 or x.shape != (M.shape[0],):
        raise ValueError(f"dimension mismatch: M{M.shape} vs x{x.shape}")
    payoff = x @ M
    b = int(np.argmin(payoff))
    return b, float(payoff[b])


def solve_zero_sum(M, tol=ORACLE_TOL, warm=None, max_iter=None) -> NashCertificate:
    """Nash equilibrium of the zero-sum game with row-player payoff ``M``.

    ``warm`` may hold a previous ``(x, y)``; if re-solving the indifference
    equations on its supports yields a pair with gap ``<= tol`` the simplex is
    skipped.  If neither the simplex nor the multiplicative-weights fallback
    reaches ``tol`` the best certificate found is returned with
    ``converged=False``.
    """
    M = np.asarray(M, dtype=float)
    if M.ndim != 2 or M.size == 0:
        raise ValueError(f"payoff must be a non-empty matrix, got shape {M.shape}")
    if not np.all(np.isfinite(M)):
        raise ValueError("payoff matrix has non-finite entries")
    if tol <= 0:
        raise ValueError("tol must be positive")
    n_rows, n_cols = M.shape

    if n_rows == 1 or n_cols == 1:
        return _solve_degenerate(M, tol)
    if n_rows == 2 and n_cols == 2:
        cert = _solve_2x2(M.tolist(), tol)
        if cert.converged:
            return cert

    if warm is not None:
        cert = _support_resolve(M, warm[0], warm[1], tol)
        if cert is not None and cert.converged:
            return cert

    lo, hi = float(M.min()), float(M.max())
    if hi - lo == 0.0:
        return certify(M, np.eye(n_rows)[0], np.eye(n_cols)[0], lo, tol)
    scale = hi - lo
    Mp = 1.0 + (M - lo) / scale
    best = None
    for bland in (False, True):
        x, y, v_scaled = _simplex(Mp, max_iter or 50 * (n_rows + n_cols), bland)
        if x is None:
            continue
        for cert in (certify(M, x, y, lo + scale * (v_scaled - 1.0), tol), _support_resolve(M, x, y, tol)):
            if cert is not None and (best is None or cert.gap < best.gap):
                best = cert
        if best is not None and best.converged:
            return best
    if M.size <= _EXACT_MAX_ENTRIES:
        x, y = _exact_simplex(M)
        cert = certify(M, x, y, tol=tol)
        if best is None or cert.gap < best.gap:
            best = cert
        if best.converged:
            return best
    fallback = _mw_selfplay(M, tol)
    if best is None or fallback.gap < best.gap:
        best = fallback
    return best


def _solve_degenerate(M, tol):
    n_rows, n_cols = M.shape
    if n_rows == 1:
        b = int(np.argmin(M[0]))
        return certify(M, np.ones(1), np.eye(n_cols)[b], M[0, b], tol)
    a = int(np.argmax(M[:, 0]))
    return certify(M, np.eye(n_rows)[a], np.ones(1), M[a, 0], tol)


def _solve_2x2(M, tol):
    """Closed form: a pure saddle point if one exists, else the equalizing mix."""
    (a, b), (c, d) = M
    x1 = y1 = None
    for i, row in enumerate(M):
        for j in range(2):
            if row[j] <= row[1 - j] and row[j] >= M[1 - i][j]:
                x1, y1 = 1.0 - i, 1.0 - j
                break
        if x1 is not None:
            break
    if x1 is None:
        denom = a - b - c + d
        if denom == 0.0:
            return NashCertificate(np.full(2, 0.5), np.full(2, 0.5), 0.0, -np.inf, np.inf, False)
        x1 = (d - c) / denom
        y1 = (d - b) / denom
        x1 = min(max(x1, 0.0), 1.0)
        y1 = min(max(y1, 0.0), 1.0)
    x2, y2 = 1.0 - x1, 1.0 - y1
    lower = min(x1 * a + x2 * c, x1 * b + x2 * d)
    upper = max(a * y1 + b * y2, c * y1 + d * y2)
    value = 0.5 * (lower + upper)
    return NashCertificate(np.array([x1, x2]), np.array([y1, y2]), value, lower, upper, upper - lower <= tol)


def _simplex(Mp, max_iter, bland=False):
    """Tableau simplex on ``max 1'w, Mp w <= 1, w >= 0``.

    The entering column is the lowest index with a negative reduced cost.
    Among tied leaving rows the largest pivot wins, which avoids dividing by
    near-zero entries on degenerate steps; ``bland=True`` breaks ties by the
    lowest basis index instead, which cannot cycle.  Returns
    ``(x, y, value)`` for the rescaled game, or ``(None, None, None)`` if the
    iteration budget runs out.
    """
    m, n = Mp.shape
    T = np.zeros((m + 1, n + m + 1))
    T[:m, :n] = Mp
    T[:m, n : n + m] = np.eye(m)
    T[:m, -1] = 1.0
    T[m, :n] = -1.0
    basis = list(range(n, n + m))
    for _ in range(max_iter):
        reduced = T[m, :-1]
        entering = np.flatnonzero(reduced < -_PIVOT_EPS)
        if entering.size == 0:
            break
        j = int(entering[0])
        col = T[:m, j]
        rows = np.flatnonzero(col > _PIVOT_EPS)
        # Mp > 0 keeps the LP bounded, so some row always qualifies.
        ratios = T[rows, -1] / col[rows]
        best = ratios.min()
        ties = rows[ratios <= best + 1e-14 * max(1.0, abs(best))]
        if bland:
            i = int(min(ties, key=lambda r: basis[r]))
        else:
            i = int(ties[np.argmax(col[ties])])
        T[i] /= T[i, j]
        others = np.arange(m + 1) != i
        T[others] -= np.outer(T[others, j], T[i])
        basis[i] = j
    else:
        return None, None, None
    z = T[m, -1]
    w = np.zeros(n)
    for i, j in enumerate(basis):
        if j < n:
            w[j] = T[i, -1]
    u = T[m, n : n + m].copy()
    return u / z, w / z, 1.0 / z


def _exact_simplex(M):
    """The same LP in rational arithmetic with Bland's rule: exact, slow, always terminates."""
    m, n = M.shape
    vals = [[Fraction(float(v)) for v in row] for row in M]
    lo = min(min(r) for r in vals)
    scale = max(max(r) for r in vals) - lo
    width = n + m + 1
    T = [[1 + (v - lo) / scale for v in vals[i]] + [Fraction(int(k == i)) for k in range(m)] + [Fraction(1)]
         for i in range(m)]
    T.append([Fraction(-1)] * n + [Fraction(0)] * (m + 1))
    basis = list(range(n, n + m))
    while True:
        j = next((k for k in range(width - 1) if T[m][k] < 0), None)
        if j is None:
            break
        rows = [i for i in range(m) if T[i][j] > 0]
        best = min(T[i][-1] / T[i][j] for i in rows)
        i = min((r for r in rows if T[r][-1] / T[r][j] == best), key=lambda r: basis[r])
        piv = T[i][j]
        T[i] = [v / piv for v in T[i]]
        for r in range(m + 1):
            if r != i and T[r][j] != 0:
                f = T[r][j]
                T[r] = [a - f * b for a, b in zip(T[r], T[i])]
        basis[i] = j
    z = T[m][-1]
    w = [Fraction(0)] * n
    for i, j in enumerate(basis):
        if j < n:
            w[j] = T[i][-1]
    x = np.array([float(u / z) for u in T[m][n : n + m]])
    y = np.array([float(v / z) for v in w])
    return x, y


def _support_resolve(M, x_prev, y_prev, tol):
    """Re-solve the indifference equations on the supports of ``(x_prev, y_prev)``."""
    I = np.flatnonzero(np.asarray(x_prev) > 1e-12)
    J = np.flatnonzero(np.asarray(y_prev) > 1e-12)
    k = I.size
    if k == 0 or k != J.size:
        return None
    sub = M[np.ix_(I, J)]
    ones = np.ones((k, 1))
    # [sub -1; 1' 0] [y_J; v] = [0; 1] and the transposed system for x_I
    K_y = np.block([[sub, -ones], [ones.T, np.zeros((1, 1))]])
    K_x = np.block([[sub.T, -ones], [ones.T, np.zeros((1, 1))]])
    rhs = np.zeros(k + 1)
    rhs[-1] = 1.0
    try:
        sol_y = np.linalg.solve(K_y, rhs)
        sol_x = np.linalg.solve(K_x, rhs)
    except np.linalg.LinAlgError:
        return None
    if sol_y[:k].min() < -1e-12 or sol_x[:k].min() < -1e-12:
        return None
    x = np.zeros(M.shape[0])
    y = np.zeros(M.shape[1])
    x[I] = sol_x[:k]
    y[J] = sol_y[:k]
    return certify(M, x, y, 0.5 * (sol_x[-1] + sol_y[-1]), tol)


def _mw_selfplay(M, tol, max_iter=200_000):
    """Hedge vs Hedge with averaged iterates; slow but always yields a certificate."""
    n_rows, n_cols = M.shape
    lo, hi = float(M.min()), float(M.max())
    G = (M - lo) / (hi - lo)
    wx = np.zeros(n_rows)
    wy = np.zeros(n_cols)
    sx = np.zeros(n_rows)
    sy = np.zeros(n_cols)
    best = None
    for t in range(1, max_iter + 1):
        lr = np.sqrt(8 * np.log(max(n_rows, n_cols, 2)) / t)
        x = np.exp(wx - wx.max())
        x /= x.sum()
        y = np.exp(wy - wy.max())
        y /= y.sum()
        sx += x
        sy += y
        wx += lr * (G @ y)
        wy -= lr * (x @ G)
        if t % 1000 == 0 or t == max_iter:
            cert = certify(M, sx, sy, tol=tol)
            if best is None or cert.gap < best.gap:
                best = cert
            if best.converged:
                break
    return best
