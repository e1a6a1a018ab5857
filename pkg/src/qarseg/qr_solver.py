"""Exact check-loss minimization for one segment.

The fitting problem is a small linear program: minimize the summed
check loss of the residuals over the segment's loss window.  The solver
walks vertices of the feasible polytope (solutions interpolating p+1
observations) with a compiled pivoting loop; on rank-deficient designs
or in the rare event the pivoting stalls, it falls back to
``scipy.optimize.linprog``.  Either path lands within 1e-8 relative of
the global optimum.

Lag vectors reach into the previous segment: for a window starting at
observation a, the row for time t is (1, y_{t-1}, ..., y_{t-p}) taken
from the full series.  Only for the very first segment (a <= p) does the
loss sum start at t = p+1, where lags first exist.
"""

from __future__ import annotations

import numpy as np
from numba import njit
from scipy import sparse
from scipy.optimize import linprog

from .core import SegmentFit, TimeSeries

_RELATIVE_TOL = 1e-8


def check_loss(u, tau: float):
    """Tilted absolute loss: tau*u for u >= 0, (tau-1)*u for u < 0."""
    if not 0.0 < tau < 1.0:
        raise ValueError(f"tau={tau} outside (0, 1)")
    u = np.asarray(u, dtype=float)
    out = u * (tau - (u < 0))
    return float(out) if out.ndim == 0 else out


@njit(cache=True)
def _initial_basis(X, r):
    """Pick p+1 independent rows, preferring small |r|, by Gram-Schmidt."""
    n, k = X.shape
    order = np.argsort(np.abs(r))
    Q = np.empty((k, k))
    basis = np.empty(k, dtype=np.int64)
    got = 0
    for idx in order:
        v = X[idx].copy()
        nv0 = np.sqrt(np.sum(v * v))
        for j in range(got):
            v -= np.dot(Q[j], v) * Q[j]
        nv = np.sqrt(np.sum(v * v))
        if nv > 1e-10 * max(nv0, 1.0):
            Q[got] = v / nv
            basis[got] = idx
            got += 1
            if got == k:
                return basis, True
    return basis, False


@njit(cache=True)
def _simplex_qr(X, y, tau, max_pivots):
    """Vertex descent for the quantile-regression LP.

    Returns (theta, status) with status 0 = optimal, 1 = rank deficient,
    2 = pivot limit hit (caller falls back to the generic LP).
    """
    n, k = X.shape
    scale = max(1.0, np.mean(np.abs(y)))
    ztol = 1e-11 * scale
    dtol = 1e-9 * scale

    # warm start near the least-squares fit
    theta0 = np.linalg.lstsq(X, y)[0]
    r0 = y - X @ theta0
    basis, ok = _initial_basis(X, r0)
    if not ok:
        return theta0, 1

    theta = np.empty(k)
    for _ in range(max_pivots):
        XB = np.empty((k, k))
        yB = np.empty(k)
        for j in range(k):
            XB[j] = X[basis[j]]
            yB[j] = y[basis[j]]
        theta = np.linalg.solve(XB, yB)
        r = y - X @ theta
        for j in range(k):
            r[basis[j]] = 0.0

        XBinv = np.linalg.inv(XB)

        best_D = -dtol
        best_j = -1
        best_sigma = 0.0
        best_s = np.empty(0)
        for j in range(k):
            d = XBinv[:, j]  # direction with x_{b_i}' d = delta_ij
            s = X @ d
            Dpos = 0.0
            Dneg = 0.0
            for i in range(n):
                si = s[i]
                if np.abs(r[i]) > ztol:
                    w = tau if r[i] > 0.0 else tau - 1.0
                    Dpos -= si * w
                    Dneg += si * w
                else:
                    Dpos += tau * max(-si, 0.0) + (1.0 - tau) * max(si, 0.0)
                    Dneg += tau * max(si, 0.0) + (1.0 - tau) * max(-si, 0.0)
            if Dpos < best_D:
                best_D = Dpos
                best_j, best_sigma, best_s = j, 1.0, s
            if Dneg < best_D:
                best_D = Dneg
                best_j, best_sigma, best_s = j, -1.0, s

        if best_j < 0:
            return theta, 0

        # piecewise-linear line search: walk residual crossings until the
        # directional derivative turns nonnegative
        s = best_sigma * best_s
        cross_t = np.empty(n)
        cross_w = np.empty(n)
        cross_i = np.empty(n, dtype=np.int64)
        ncross = 0
        for i in range(n):
            if np.abs(r[i]) > ztol and np.abs(s[i]) > 1e-13:
                t = r[i] / s[i]
                if t > 0.0:
                    cross_t[ncross] = t
                    cross_w[ncross] = np.abs(s[i])
                    cross_i[ncross] = i
                    ncross += 1
        if ncross == 0:
            return theta, 2  # unbounded direction: numerical trouble
        order = np.argsort(cross_t[:ncross])
        cum = best_D
        enter_row = -1
        for oi in range(ncross):
            c = order[oi]
            cum += cross_w[c]
            if cum >= 0.0:
                enter_row = cross_i[c]
                break
        if enter_row < 0:
            return theta, 2
        basis[best_j] = enter_row

    return theta, 2


def _linprog_qr(X: np.ndarray, y: np.ndarray, tau: float) -> np.ndarray:
    """Generic LP fallback; exact but much slower than the pivoting path."""
    n, k = X.shape
    c = np.concatenate([np.zeros(k), np.full(n, tau), np.full(n, 1.0 - tau)])
    A = sparse.hstack(
        [sparse.csr_matrix(X), sparse.eye(n, format="csr"), -sparse.eye(n, format="csr")],
        format="csr",
    )
    bounds = [(None, None)] * k + [(0, None)] * (2 * n)
    res = linprog(c, A_eq=A, b_eq=y, bounds=bounds, method="highs")
    if not res.success:
        raise ArithmeticError(f"quantile regression LP failed: {res.message}")
    return res.x[:k]


def design_window(series: TimeSeries, start: int, end: int, p: int):
    """Design matrix and response for the loss window of [start, end].

    Returns (X, y_w, t0) where t0 is the first time index of the window.
    """
    n = series.n
    if not 1 <= start <= end <= n:
        raise ValueError(f"invalid range [{start}, {end}] for a series of length {n}")
    t0 = max(start, p + 1)
    nw = end - t0 + 1
    if nw < p + 2:
        raise ValueError(f"loss window [{t0}, {end}] too short for order {p} (need >= {p + 2})")
    v = series.values
    X = np.empty((nw, p + 1))
    X[:, 0] = 1.0
    for j in range(1, p + 1):
        X[:, j] = v[t0 - 1 - j : end - j]
    return X, v[t0 - 1 : end].copy(), t0


def fit_qar(series: TimeSeries, start: int, end: int, p: int, tau: float) -> SegmentFit:
    """Fit a quantile autoregression of order p on observations [start, end].

    ``start`` and ``end`` are 1-based inclusive.  Returns the fitted
    coefficients, window residuals and summed check loss.  Rank-deficient
    designs are solved by the generic LP and reported with the minimum-norm
    coefficient vector and ``degenerate=True``.
    """
    if not 0.0 < tau < 1.0:
        raise ValueError(f"tau={tau} outside (0, 1)")
    if not 0 <= p <= 20:
        raise ValueError(f"order {p} outside 0..20")
    X, y, _ = design_window(series, start, end, p)

    degenerate = bool(np.linalg.matrix_rank(X) < p + 1)
    if degenerate:
        theta = _linprog_qr(X, y, tau)
        # keep the fitted values, expose the minimum-norm representative
        theta = np.linalg.pinv(X) @ (X @ theta)
    else:
        theta, status = _simplex_qr(X, y, tau, max_pivots=200 + 20 * y.size)
        if status != 0:
            theta = _linprog_qr(X, y, tau)
    residuals = y - X @ theta
    loss = float(np.sum(check_loss(residuals, tau)))
    return SegmentFit(tau=tau, theta=theta, residuals=residuals, loss=loss, degenerate=degenerate)


class FitCache:
    """Memoized segment fitting against one fixed series.

    The genetic search re-scores the same (start, end, order) windows
    thousands of times; only the scalar loss is kept per window.  Safe
    for concurrent readers once populated; each search run owns its own
    instance.
    """

    def __init__(self, series: TimeSeries):
        self.series = series
        self._losses: dict[tuple[int, int, int, float], float] = {}
        self.calls = 0
        self.misses = 0

    def loss(self, start: int, end: int, p: int, tau: float) -> float:
        key = (start, end, p, tau)
        self.calls += 1
        hit = self._losses.get(key)
        if hit is None:
            self.misses += 1
            hit = fit_qar(self.series, start, end, p, tau).loss
            self._losses[key] = hit
        return hit

    def fit(self, start: int, end: int, p: int, tau: float) -> SegmentFit:
        return fit_qar(self.series, start, end, p, tau)
