"""Accuracy metrics up to attribute relabelling, reconstruction error and
two-parameter approximation diagnostics."""

import json
from dataclasses import asdict, dataclass

import numpy as np
from scipy.optimize import linear_sum_assignment

from .model import EPS_CLAMP, clamp_prob, ideal_matrix
from .validation import DimensionError, check_binary_matrix

REPORT_FIELDS = (
    "q_exact",
    "q_row_acc",
    "q_entry_acc",
    "a_exact",
    "a_row_acc",
    "a_entry_acc",
    "recon_err",
    "bic",
)


def align_columns(A_hat, A_true):
    """Permutation ``perm`` maximising sum_k agreement(A_hat[:, perm[k]], A_true[:, k]).

    ``A_hat[:, perm]`` is the relabelled estimate.
    """
    A_hat = check_binary_matrix(A_hat, "A_hat")
    A_true = check_binary_matrix(A_true, "A_true")
    if A_hat.shape != A_true.shape:
        raise DimensionError(f"shapes differ: {A_hat.shape} vs {A_true.shape}")
    agree = agreement_matrix(A_hat, A_true)
    rows, cols = linear_sum_assignment(agree, maximize=True)
    perm = np.empty(A_true.shape[1], dtype=int)
    perm[cols] = rows
    return perm


def agreement_matrix(A_hat, A_true):
    """K x K counts: entry (a, b) = #rows where A_hat[:, a] == A_true[:, b]."""
    X = A_hat.astype(np.int64)
    Y = A_true.astype(np.int64)
    return X.T @ Y + (1 - X).T @ (1 - Y)


@dataclass
class EvalReport:
    perm: list
    q_exact: int
    q_row_acc: float
    q_entry_acc: float
    a_exact: int
    a_row_acc: float
    a_entry_acc: float
    recon_err: float = float("nan")
    bic: float = float("nan")

    def to_json(self):
        return json.dumps(asdict(self), indent=2)

    def csv_row(self):
        return [getattr(self, f) for f in REPORT_FIELDS]


def _accuracy(M_hat, M_true):
    eq = M_hat == M_true
    rows = eq.all(axis=1)
    return int(rows.all()), float(rows.mean()), float(eq.mean())


def accuracy_report(Q_hat, A_hat, Q_true, A_true, perm=None):
    """Exact/row/entry agreement for Q and A after aligning columns on A."""
    Q_hat = check_binary_matrix(Q_hat, "Q_hat")
    Q_true = check_binary_matrix(Q_true, "Q_true")
    A_hat = check_binary_matrix(A_hat, "A_hat")
    A_true = check_binary_matrix(A_true, "A_true")
    if Q_hat.shape != Q_true.shape:
        raise DimensionError(f"Q shapes differ: {Q_hat.shape} vs {Q_true.shape}")
    if perm is None:
        perm = align_columns(A_hat, A_true)
    q = _accuracy(Q_hat[:, perm], Q_true)
    a = _accuracy(A_hat[:, perm], A_true)
    return EvalReport([int(p) for p in perm], *q, *a)


def reconstruct(Q_hat, A_hat, theta_plus, theta_minus, model="dina"):
    """Cell-wise indicator that the fitted success probability exceeds 1/2."""
    xi = ideal_matrix(Q_hat, A_hat, model)
    tp = np.broadcast_to(np.asarray(theta_plus, dtype=float), (xi.shape[1],))
    tm = np.broadcast_to(np.asarray(theta_minus, dtype=float), (xi.shape[1],))
    P = np.where(xi == 1, tp[None, :], tm[None, :])
    return (P > 0.5).astype(np.int8)


def recon_error(R_hat, R_ideal):
    return float(np.mean(np.asarray(R_hat) != np.asarray(R_ideal)))


def bernoulli_kl(p, q, eps=EPS_CLAMP):
    """KL divergence D(p || q) between Bernoulli distributions (elementwise)."""
    p = np.asarray(p, dtype=float)
    q = np.asarray(q, dtype=float)
    # clamping keeps D finite; equal arguments are left alone so D(p || p) = 0
    q = np.where(q == p, q, clamp_prob(q, eps))
    with np.errstate(divide="ignore", invalid="ignore"):
        t1 = np.where(p > 0, p * np.log(p / q), 0.0)
        t0 = np.where(p < 1, (1 - p) * np.log((1 - p) / (1 - q)), 0.0)
    return t1 + t0


def two_param_approx(Q, A, P_true):
    """Replace each item's probabilities by their mean within the two DINA groups.

    Returns
    -------
    P2 : ndarray (N, J)
        NaN where a group is empty.
    empty : ndarray of bool, shape (J,)
        Items with an empty group.
    """
    P_true = np.asarray(P_true, dtype=float)
    xi = ideal_matrix(Q, A, "dina").astype(bool)
    n1 = xi.sum(0)
    n0 = (~xi).sum(0)
    with np.errstate(invalid="ignore", divide="ignore"):
        m1 = np.where(xi, P_true, 0.0).sum(0) / n1
        m0 = np.where(~xi, P_true, 0.0).sum(0) / n0
    P2 = np.where(xi, m1[None, :], m0[None, :])
    empty = (n1 == 0) | (n0 == 0)
    return P2, empty


def kl_objective(Q, A, P_true):
    """Per-item KL divergence from P_true to its two-parameter approximation.

    Items whose approximation has an empty group are NaN (flagged) and
    should be left out of any total.
    """
    P2, empty = two_param_approx(Q, A, P_true)
    P2 = np.where(np.isnan(P2), 0.5, P2)
    f = bernoulli_kl(P_true, P2).sum(0)
    f[empty] = np.nan
    return f
