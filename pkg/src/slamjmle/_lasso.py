"""Compiled coordinate descent for L1-penalized logistic regression.

Objective: -(1/n) * loglik(b0, beta) + lam * ||beta||_1, intercept free.
Rows carry counts ``c`` (n = sum of counts) and ``y`` holds the success
fraction of each row, so data with repeated design rows can be passed
in aggregated form.
Each outer step solves the weighted least-squares approximation at the
current fit by cyclic coordinate descent and then backtracks along the
resulting direction until the objective does not increase.
"""

import numpy as np
from numba import njit


@njit(cache=True)
def _objective(X, y, c, b0, beta, lam):
    m, p = X.shape
    total = 0.0
    for i in range(m):
        eta = b0
        for k in range(p):
            eta += X[i, k] * beta[k]
        # log(1 + e^eta) - y * eta, evaluated stably
        if eta > 0:
            total += c[i] * (eta + np.log1p(np.exp(-eta)) - y[i] * eta)
        else:
            total += c[i] * (np.log1p(np.exp(eta)) - y[i] * eta)
    pen = 0.0
    for k in range(p):
        pen += abs(beta[k])
    return total / c.sum() + lam * pen


@njit(cache=True)
def _linear(X, b0, beta):
    n, p = X.shape
    eta = np.empty(n)
    for i in range(n):
        s = b0
        for k in range(p):
            s += X[i, k] * beta[k]
        eta[i] = s
    return eta


@njit(cache=True)
def kkt_residual(X, y, c, b0, beta, lam):
    """Largest violation of the subgradient optimality conditions."""
    m, p = X.shape
    n = c.sum()
    eta = _linear(X, b0, beta)
    resid = np.empty(m)
    for i in range(m):
        resid[i] = c[i] * (y[i] - 1.0 / (1.0 + np.exp(-eta[i])))
    worst = abs(resid.sum() / n)
    for k in range(p):
        g = 0.0
        for i in range(m):
            g -= X[i, k] * resid[i]
        g /= n
        if beta[k] > 0:
            v = abs(g + lam)
        elif beta[k] < 0:
            v = abs(g - lam)
        else:
            v = max(abs(g) - lam, 0.0)
        worst = max(worst, v)
    return worst


@njit(cache=True)
def l1_logistic_cd(X, y, c, lam, b0, beta, tol=1e-8, max_outer=1000, max_inner=1000):
    """Minimize the penalized deviance from the warm start (b0, beta).

    Returns (b0, beta, converged) where converged means the KKT residual
    dropped below ``tol``.
    """
    n, p = X.shape
    total = c.sum()
    beta = beta.copy()
    obj = _objective(X, y, c, b0, beta, lam)
    for _ in range(max_outer):
        if kkt_residual(X, y, c, b0, beta, lam) <= tol:
            return b0, beta, True
        eta = _linear(X, b0, beta)
        w = np.empty(n)
        res = np.empty(n)
        for i in range(n):
            pr = 1.0 / (1.0 + np.exp(-eta[i]))
            wi = max(pr * (1.0 - pr), 1e-6)
            w[i] = c[i] * wi
            res[i] = (y[i] - pr) / wi
        sw = w.sum()
        nb0 = b0
        nbeta = beta.copy()
        for _inner in range(max_inner):
            step = 0.0
            d = 0.0
            for i in range(n):
                d += w[i] * res[i]
            d /= sw
            nb0 += d
            for i in range(n):
                res[i] -= d
            step = max(step, abs(d))
            for k in range(p):
                a = 0.0
                g = 0.0
                for i in range(n):
                    xw = X[i, k] * w[i]
                    a += xw * X[i, k]
                    g += xw * res[i]
                if a <= 0.0:
                    continue
                a /= total
                g = g / total + a * nbeta[k]
                if g > lam:
                    new = (g - lam) / a
                elif g < -lam:
                    new = (g + lam) / a
                else:
                    new = 0.0
                delta = new - nbeta[k]
                if delta != 0.0:
                    for i in range(n):
                        res[i] -= delta * X[i, k]
                    nbeta[k] = new
                    step = max(step, abs(delta) * np.sqrt(a))
            if step < 1e-13:
                break
        # backtracking along the proposed direction; the slack absorbs
        # rounding once the remaining decrease is below machine precision
        slack = 1e-13 * max(1.0, abs(obj))
        t = 1.0
        while True:
            tb0 = b0 + t * (nb0 - b0)
            tbeta = beta + t * (nbeta - beta)
            tobj = _objective(X, y, c, tb0, tbeta, lam)
            if tobj <= obj + slack or t < 1e-6:
                break
            t *= 0.5
        if tobj > obj + slack:
            break
        moved = abs(tb0 - b0)
        for k in range(p):
            moved = max(moved, abs(tbeta[k] - beta[k]))
        b0, beta, obj = tb0, tbeta, tobj
        if moved < 1e-15:
            break
    return b0, beta, kkt_residual(X, y, c, b0, beta, lam) <= tol


def aggregate(X, y):
    """Collapse repeated design rows into (rows, success fraction, count)."""
    X = np.asarray(X, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    if X.shape[1] == 0:
        return np.zeros((1, 0)), np.array([y.mean()]), np.array([float(y.size)])
    rows, inverse = np.unique(X, axis=0, return_inverse=True)
    inverse = inverse.ravel()
    counts = np.bincount(inverse).astype(np.float64)
    hits = np.bincount(inverse, weights=y)
    return np.ascontiguousarray(rows), hits / counts, counts
