"""Structured latent attribute models: ideal responses, success probabilities
and the joint log-likelihood.

Conventions used throughout the package:

* ``Q`` is a J x K 0/1 matrix, ``A`` an N x K 0/1 matrix, ``R`` an N x J
  response matrix (see :func:`slamjmle.validation.check_response_matrix`
  for the missing-cell encoding).
* Attribute subsets in multi-parameter coefficient maps are sorted tuples
  of 0-based column indices; ``()`` is the intercept.
"""

from dataclasses import dataclass, field
from itertools import combinations

import numpy as np

from .validation import (
    DimensionError,
    ParameterError,
    check_binary_matrix,
    check_consistent,
    check_response_matrix,
)

EPS_CLAMP = 1e-4

MODELS = ("dina", "dino", "multi")
LINKS = ("identity", "logistic")


def clamp_prob(p, eps=EPS_CLAMP):
    return np.clip(p, eps, 1.0 - eps)


def _pair(a, q):
    a = np.asarray(a)
    q = np.asarray(q)
    if a.shape != q.shape or a.ndim != 1:
        raise DimensionError(f"a and q must be equal-length vectors, got {a.shape} and {q.shape}")
    return a, q


def ideal_response_dina(a, q):
    """1 iff the profile has every attribute the item requires (0**0 == 1)."""
    a, q = _pair(a, q)
    return int(np.all(a[q == 1] == 1))


def ideal_response_dino(a, q):
    """1 iff the profile has at least one required attribute; 0 when q is all zero."""
    a, q = _pair(a, q)
    return int(np.any((a == 1) & (q == 1)))


def ideal_matrix(Q, A, model="dina"):
    """N x J matrix of ideal responses for every (subject, item) pair."""
    Q = np.asarray(Q, dtype=np.float64)
    A = np.asarray(A, dtype=np.float64)
    if Q.shape[1] != A.shape[1]:
        raise DimensionError(f"Q has K={Q.shape[1]} but A has K={A.shape[1]}")
    if model == "dina":
        return (((1 - A) @ Q.T) < 0.5).astype(np.int8)
    if model == "dino":
        return ((A @ Q.T) > 0.5).astype(np.int8)
    raise ValueError(f"ideal responses are defined for 'dina' and 'dino', not {model!r}")


@dataclass
class ItemParamsTwo:
    """Per-item (theta_plus, theta_minus) for DINA/DINO models."""

    theta_plus: np.ndarray
    theta_minus: np.ndarray

    def __post_init__(self):
        self.theta_plus = np.atleast_1d(np.asarray(self.theta_plus, dtype=float))
        self.theta_minus = np.atleast_1d(np.asarray(self.theta_minus, dtype=float))
        if self.theta_plus.shape != self.theta_minus.shape:
            raise DimensionError("theta_plus and theta_minus must have the same length")

    @property
    def n_items(self):
        return self.theta_plus.shape[0]

    def validate(self, eps=EPS_CLAMP):
        tp, tm = self.theta_plus, self.theta_minus
        if not (np.all(tm >= eps) and np.all(tp <= 1 - eps) and np.all(tm < tp)):
            raise ParameterError("item parameters must satisfy eps <= theta_minus < theta_plus <= 1 - eps")
        return self

    def clamped(self, eps=EPS_CLAMP):
        return ItemParamsTwo(clamp_prob(self.theta_plus, eps), clamp_prob(self.theta_minus, eps))


@dataclass
class ItemParamsMulti:
    """Main- and interaction-effect coefficients for each item.

    ``coefs[j]`` maps attribute subsets (sorted tuples of column indices)
    to real coefficients; subsets not present are zero.
    """

    coefs: list = field(default_factory=list)
    link: str = "identity"

    def __post_init__(self):
        if self.link not in LINKS:
            raise ValueError(f"link must be one of {LINKS}, got {self.link!r}")
        self.coefs = [{tuple(sorted(S)): float(v) for S, v in c.items()} for c in self.coefs]

    @property
    def n_items(self):
        return len(self.coefs)

    def active_set(self, j):
        return sorted({k for S in self.coefs[j] for k in S})

    def class_table(self, j, q):
        """Probabilities for every local class of item ``j``.

        Local classes are indexed by the bits of ``a`` restricted to the
        active attributes of ``q`` (first active attribute = lowest bit).
        """
        active = np.flatnonzero(np.asarray(q))
        table = np.empty(2 ** len(active))
        for code in range(table.size):
            a = np.zeros(len(q), dtype=np.int8)
            a[active] = [(code >> b) & 1 for b in range(len(active))]
            table[code] = success_prob("multi", a, q, self.coefs[j], link=self.link)
        return table


def _linear_predictor(a, q, coefs):
    eff = np.asarray(a) * np.asarray(q)
    total = 0.0
    for S, mu in coefs.items():
        if all(eff[k] == 1 for k in S):
            total += mu
    return total


def success_prob(model, a, q, params, link="identity"):
    """P(r = 1 | a, q, params) for one subject and one item.

    For ``dina``/``dino`` ``params`` is a ``(theta_plus, theta_minus)``
    pair; for ``multi`` it is a coefficient map (subset -> value).
    """
    a, q = _pair(a, q)
    if model in ("dina", "dino"):
        theta_plus, theta_minus = params
        ideal = ideal_response_dina(a, q) if model == "dina" else ideal_response_dino(a, q)
        return float(theta_plus if ideal else theta_minus)
    if model != "multi":
        raise ValueError(f"model must be one of {MODELS}, got {model!r}")
    eta = _linear_predictor(a, q, params)
    if link == "logistic":
        return float(1.0 / (1.0 + np.exp(-eta)))
    if link != "identity":
        raise ValueError(f"link must be one of {LINKS}, got {link!r}")
    if eta < -1e-12 or eta > 1 + 1e-12:
        raise ParameterError(f"identity-link probability {eta} is outside [0, 1]")
    return float(min(max(eta, 0.0), 1.0))


def _multi_prob_matrix(Q, A, params):
    N, J = A.shape[0], Q.shape[0]
    P = np.empty((N, J))
    for j in range(J):
        eta = np.zeros(N)
        for S, mu in params.coefs[j].items():
            col = np.ones(N, dtype=bool)
            for k in S:
                col &= (A[:, k] == 1) & (Q[j, k] == 1)
            eta += mu * col
        P[:, j] = eta
    if params.link == "logistic":
        return 1.0 / (1.0 + np.exp(-P))
    if P.min() < -1e-12 or P.max() > 1 + 1e-12:
        raise ParameterError("identity-link probabilities fall outside [0, 1]")
    return np.clip(P, 0.0, 1.0)


def prob_matrix(Q, A, params, model="dina"):
    """N x J matrix of success probabilities (unclamped)."""
    Q = check_binary_matrix(Q, "Q")
    A = check_binary_matrix(A, "A")
    if Q.shape[1] != A.shape[1]:
        raise DimensionError(f"Q has K={Q.shape[1]} but A has K={A.shape[1]}")
    if model == "multi":
        return _multi_prob_matrix(Q, A, params)
    if isinstance(params, ItemParamsTwo):
        tp, tm = params.theta_plus, params.theta_minus
    else:
        tp, tm = (np.broadcast_to(np.asarray(p, dtype=float), (Q.shape[0],)) for p in params)
    xi = ideal_matrix(Q, A, model)
    return np.where(xi == 1, tp[None, :], tm[None, :])


def bernoulli_loglik(R, P, observed=None, eps=EPS_CLAMP):
    """Sum of r log p + (1 - r) log(1 - p) over observed cells."""
    P = clamp_prob(np.asarray(P, dtype=float), eps)
    R = np.asarray(R)
    terms = np.where(R == 1, np.log(P), np.log1p(-P))
    if observed is not None:
        terms = np.where(observed, terms, 0.0)
    return float(terms.sum())


def joint_loglik(R, Q, A, params, model="dina"):
    """Joint log-likelihood of (Q, A, params) restricted to observed cells."""
    values, observed = check_response_matrix(R)
    Q = check_binary_matrix(Q, "Q")
    A = check_binary_matrix(A, "A")
    check_consistent(values.shape, Q, A)
    P = prob_matrix(Q, A, params, model)
    return bernoulli_loglik(values, P, observed)


def duality_map(a, q, theta_plus, theta_minus):
    """DINO success probability computed through the DINA model.

    Flipping every attribute and every response turns a DINO item with
    (theta_plus, theta_minus) into a DINA item with
    (1 - theta_minus, 1 - theta_plus). The result is checked against
    the direct DINO computation before it is returned.
    """
    a, q = _pair(a, q)
    dina = success_prob("dina", 1 - a, q, (1.0 - theta_minus, 1.0 - theta_plus))
    via_dual = 1.0 - dina
    direct = success_prob("dino", a, q, (theta_plus, theta_minus))
    assert abs(via_dual - direct) < 1e-12, "DINA/DINO duality violated"
    return via_dual


def power_set(items, include_empty=True, max_order=None):
    items = sorted(items)
    top = len(items) if max_order is None else min(max_order, len(items))
    start = 0 if include_empty else 1
    return [S for r in range(start, top + 1) for S in combinations(items, r)]
