"""Independent reference computations shared by the test modules."""

import itertools
import math

import numpy as np


def brute_loglik(R, Q, A, tp, tm):
    """Two-parameter log-likelihood by explicit loops over cells."""
    total = 0.0
    for i in range(A.shape[0]):
        for j in range(Q.shape[0]):
            if np.isnan(R[i, j]):
                continue
            ideal = all(A[i, k] == 1 for k in range(Q.shape[1]) if Q[j, k] == 1)
            p = tp[j] if ideal else tm[j]
            total += math.log(p) if R[i, j] == 1 else math.log(1 - p)
    return total


def flip_posterior(M, idx, loglik):
    """P(M[idx] = 1 | rest) by evaluating both values of the bit."""
    M = M.copy()
    M[idx] = 1
    l1 = loglik(M)
    M[idx] = 0
    l0 = loglik(M)
    return 1.0 / (1.0 + math.exp(l0 - l1))


def exhaustive_best(A_hat, A_true):
    """Largest total column agreement over all K! relabellings."""
    K = A_true.shape[1]
    return max(
        sum(int((A_hat[:, p[k]] == A_true[:, k]).sum()) for k in range(K)) for p in itertools.permutations(range(K))
    )


def group_means(R, ideal):
    """Per-item success rate among ideal=1 and ideal=0 cells (NaN cells skipped)."""
    J = R.shape[1]
    plus, minus = np.full(J, np.nan), np.full(J, np.nan)
    for j in range(J):
        hit = [R[i, j] for i in range(R.shape[0]) if not np.isnan(R[i, j]) and ideal[i, j] == 1]
        miss = [R[i, j] for i in range(R.shape[0]) if not np.isnan(R[i, j]) and ideal[i, j] == 0]
        if hit:
            plus[j] = sum(hit) / len(hit)
        if miss:
            minus[j] = sum(miss) / len(miss)
    return plus, minus


def newton_logistic(X, y, iters=100):
    """Unpenalized logistic MLE with intercept by dense Newton steps."""
    Z = np.column_stack([np.ones(len(y)), X])
    w = np.zeros(Z.shape[1])
    for _ in range(iters):
        p = 1 / (1 + np.exp(-Z @ w))
        H = Z.T @ (Z * (p * (1 - p))[:, None])
        step = np.linalg.solve(H, Z.T @ (y - p))
        w += step
        if np.abs(step).max() < 1e-13:
            break
    return w
