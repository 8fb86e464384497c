"""Compiled Gibbs sweeps over the rows of A and Q.

Both kernels keep ``miss[i, j]``, the number of attributes required by
item j that subject i lacks, in sync with the bits they flip, so the
ideal-response factor of every (i, j) pair is a single comparison.
Uniform draws are supplied by the caller, one per (row, sample, column),
which makes results independent of row scheduling.
"""

import numpy as np
from numba import njit


@njit(cache=True)
def _sigmoid(x):
    if x >= 0:
        return 1.0 / (1.0 + np.exp(-x))
    e = np.exp(x)
    return e / (1.0 + e)


@njit(cache=True)
def sweep_attributes(A, psi, miss, item_ptr, item_idx, U, A_sum):
    """C Gibbs passes over every a[i, k]; adds each pass's A into ``A_sum``.

    ``item_idx[item_ptr[k]:item_ptr[k + 1]]`` lists the items loading on
    attribute k. ``U`` has shape (N, C, K).
    """
    N, K = A.shape
    C = U.shape[1]
    for i in range(N):
        for c in range(C):
            for k in range(K):
                lack = 1 - A[i, k]
                logit = 0.0
                for p in range(item_ptr[k], item_ptr[k + 1]):
                    j = item_idx[p]
                    if miss[i, j] == lack:
                        logit += psi[i, j]
                new = 1 if U[i, c, k] < _sigmoid(logit) else 0
                if new != A[i, k]:
                    step = A[i, k] - new
                    for p in range(item_ptr[k], item_ptr[k + 1]):
                        miss[i, item_idx[p]] += step
                    A[i, k] = new
            for k in range(K):
                A_sum[i, k] += A[i, k]


@njit(cache=True)
def sweep_loadings(Q, psiT, missT, subj_ptr, subj_idx, frozen, U, Q_sum):
    """C Gibbs passes over every q[j, k] of non-frozen rows.

    ``subj_idx[subj_ptr[k]:subj_ptr[k + 1]]`` lists the subjects lacking
    attribute k (only they enter the sum). ``psiT`` and ``missT`` are
    J x N. ``U`` has shape (J, C, K).
    """
    J, K = Q.shape
    C = U.shape[1]
    for j in range(J):
        for c in range(C):
            if not frozen[j]:
                for k in range(K):
                    qjk = Q[j, k]
                    logit = 0.0
                    for p in range(subj_ptr[k], subj_ptr[k + 1]):
                        i = subj_idx[p]
                        logit -= psiT[j, i] * (missT[j, i] == qjk)
                    new = 1 if U[j, c, k] < _sigmoid(logit) else 0
                    if new != qjk:
                        step = new - qjk
                        for p in range(subj_ptr[k], subj_ptr[k + 1]):
                            missT[j, subj_idx[p]] += step
                        Q[j, k] = new
            for k in range(K):
                Q_sum[j, k] += Q[j, k]


def items_by_attribute(Q):
    """CSR-style (ptr, idx) listing the rows of a 0/1 matrix with a 1 in each column."""
    K = Q.shape[1]
    lists = [np.flatnonzero(Q[:, k]) for k in range(K)]
    ptr = np.zeros(K + 1, dtype=np.int64)
    ptr[1:] = np.cumsum([len(x) for x in lists])
    idx = np.concatenate(lists).astype(np.int64) if ptr[-1] else np.zeros(0, dtype=np.int64)
    return ptr, idx


def missing_counts(A, Q):
    """N x J count of required-but-absent attributes."""
    lack = 1.0 - A.astype(np.float64)
    return np.rint(lack @ Q.T.astype(np.float64)).astype(np.int32)
