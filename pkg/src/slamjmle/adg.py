"""Alternating-direction Gibbs EM for joint maximum likelihood under DINA/DINO.

Each iteration draws a few Gibbs samples of every attribute bit, then of
every loading bit, and finishes with a closed-form update of the item
parameters. The plain variant (``algorithm="em"``) keeps a 1/t running
average of the attribute samples and rounds the loading samples
directly; ``algorithm="saem"`` averages attributes, loadings and item
parameters.

The log-odds used by the Gibbs draws follow from the two-parameter
log-likelihood, which equals a constant plus sum_ij xi_ij * psi_ij:

* a[i, k]:  +sum_j q[j, k] * eta_ijk * psi[i, j]
* q[j, k]:  -sum_i (1 - a[i, k]) * eta_ijk * psi[i, j]

where eta_ijk is the ideal response with attribute k left out.
"""

import logging
import warnings
from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import linear_sum_assignment
from sklearn.base import BaseEstimator, TransformerMixin
from sklearn.cluster import KMeans
from sklearn.utils.validation import check_is_fitted

from . import _gibbs
from .datagen import _FIT, _INIT, row_generator, stream
from .model import EPS_CLAMP, ItemParamsTwo, bernoulli_loglik, clamp_prob, ideal_matrix
from .validation import DimensionError, check_binary_matrix, check_response_matrix

logger = logging.getLogger(__name__)

ALGORITHMS = ("em", "saem")
INITS = ("cluster", "random", "perturb", "warm")
RANDOM_START_THETA = (0.8, 0.2)


class ConvergenceWarning(UserWarning):
    pass


def compute_psi(R, theta_plus, theta_minus, observed=None):
    """Per-cell log-likelihood ratio of ideal response 1 versus 0.

    Missing cells get 0 so they drop out of every Gibbs sum.
    """
    tp = clamp_prob(np.asarray(theta_plus, dtype=float))
    tm = clamp_prob(np.asarray(theta_minus, dtype=float))
    pos = np.log(tp / tm)
    neg = np.log((1 - tp) / (1 - tm))
    R = np.asarray(R)
    psi = np.where(R == 1, pos[None, :], neg[None, :])
    if observed is not None:
        psi = np.where(observed, psi, 0.0)
    return psi


def _sigmoid(x):
    return 0.5 * (1.0 + np.tanh(0.5 * x))


def _eta(a_row, q_row, k):
    rest = np.ones(len(a_row), dtype=bool)
    rest[k] = False
    return float(np.all(a_row[rest & (q_row == 1)] == 1))


def gibbs_conditional_a(i, k, Q, A, psi):
    """P(a[i, k] = 1 | everything else) under the two-parameter likelihood."""
    Q = np.asarray(Q)
    A = np.asarray(A)
    logit = 0.0
    for j in np.flatnonzero(Q[:, k]):
        logit += _eta(A[i], Q[j], k) * psi[i, j]
    return float(_sigmoid(logit))


def gibbs_conditional_q(j, k, Q, A, psi):
    """P(q[j, k] = 1 | everything else) under the two-parameter likelihood."""
    Q = np.asarray(Q)
    A = np.asarray(A)
    logit = 0.0
    for i in np.flatnonzero(A[:, k] == 0):
        logit -= _eta(A[i], Q[j], k) * psi[i, j]
    return float(_sigmoid(logit))


def soft_ideal(A_soft, Q):
    """prod_k A_soft[i, k] ** q[j, k]; reduces to the ideal matrix for 0/1 input."""
    logs = np.log(np.maximum(A_soft, 1e-300))
    out = np.exp(logs @ Q.T.astype(np.float64))
    out[out < 1e-250] = 0.0
    return out


def m_step(R, weights, observed=None, pseudocount=0.0, eps=EPS_CLAMP):
    """Weighted group means for theta_plus / theta_minus.

    ``weights`` is the N x J (possibly soft) ideal-response matrix. With
    ``pseudocount`` s > 0 each mean becomes (sum + s/2) / (count + s).
    An empty group gets 0.5. Results are clamped to [eps, 1 - eps] and
    forced to satisfy theta_plus > theta_minus.
    """
    R = np.asarray(R, dtype=float)
    W = np.asarray(weights, dtype=float)
    obs = np.ones_like(W, dtype=bool) if observed is None else observed
    W1 = np.where(obs, W, 0.0)
    W0 = np.where(obs, 1.0 - W, 0.0)
    num_p, den_p = (R * W1).sum(0) + 0.5 * pseudocount, W1.sum(0) + pseudocount
    num_m, den_m = (R * W0).sum(0) + 0.5 * pseudocount, W0.sum(0) + pseudocount
    with np.errstate(invalid="ignore", divide="ignore"):
        tp = np.where(den_p > 1e-12, num_p / den_p, 0.5)
        tm = np.where(den_m > 1e-12, num_m / den_m, 0.5)
    return enforce_order(clamp_prob(tp, eps), clamp_prob(tm, eps), eps)


def enforce_order(tp, tm, eps=EPS_CLAMP):
    tp, tm = tp.copy(), tm.copy()
    bad = tp <= tm
    tp[bad] = np.minimum(tm[bad] + eps, 1 - eps)
    still = tp <= tm
    tm[still] = tp[still] - eps
    return tp, tm


def two_param_objective(values, observed, Q, A, tp, tm):
    """Two-parameter log-likelihood from per-item response counts."""
    xi = ideal_matrix(Q, A, "dina").astype(np.float64)
    r = values.astype(np.float64)
    obs = observed.astype(np.float64)
    n1 = (xi * obs).sum(0)
    r1 = (xi * r * obs).sum(0)
    n0 = obs.sum(0) - n1
    r0 = (r * obs).sum(0) - r1
    tp, tm = clamp_prob(tp), clamp_prob(tm)
    return float(
        (r1 * np.log(tp) + (n1 - r1) * np.log1p(-tp) + r0 * np.log(tm) + (n0 - r0) * np.log1p(-tm)).sum()
    )


def cluster_start(values, observed, K, seed=0, anchor_Q=None):
    """Data-driven (Q, A) start from k-means on standardized item columns.

    Every item loads on its own cluster only, and a[i, k] is the majority
    response of subject i over the observed items of cluster k. When
    ``anchor_Q`` (rows of frozen anchor items, -1 elsewhere) is given,
    clusters are matched to columns so anchor items keep their attribute.
    """
    N, J = values.shape
    X = np.where(observed, values, 0).astype(np.float64)
    counts = np.maximum(observed.sum(0), 1)
    X = np.where(observed, X - X.sum(0) / counts, 0.0)
    X /= np.maximum(X.std(0), 1e-12)
    km_seed = int(row_generator(seed, _INIT, 2**32).integers(2**31))
    labels = KMeans(K, n_init=10, random_state=km_seed).fit_predict(X.T)
    if anchor_Q is not None:
        score = np.zeros((K, K))
        for j in np.flatnonzero(anchor_Q[:, 0] >= 0):
            score[labels[j]] += anchor_Q[j]
        rows, cols = linear_sum_assignment(score, maximize=True)
        relabel = np.empty(K, dtype=int)
        relabel[rows] = cols
        labels = relabel[labels]
    Q = np.eye(K, dtype=np.int8)[labels]
    hits = np.where(observed, values, 0).astype(np.float64) @ Q
    seen = observed.astype(np.float64) @ Q
    A = (hits > 0.5 * seen).astype(np.int8)
    return Q, A


def _item_logliks(values, observed, Q, A, eps=EPS_CLAMP):
    """Per-item two-parameter log-likelihood with theta at its group-mean optimum."""
    xi = ideal_matrix(Q, A, "dina").astype(np.float64)
    r = np.where(observed, values, 0).astype(np.float64)
    obs = observed.astype(np.float64)
    n1 = (xi * obs).sum(0)
    r1 = (xi * r).sum(0)
    n0 = obs.sum(0) - n1
    r0 = r.sum(0) - r1

    def part(hits, n):
        with np.errstate(invalid="ignore", divide="ignore"):
            th = clamp_prob(np.where(n > 0, hits / n, 0.5), eps)
        return hits * np.log(th) + (n - hits) * np.log1p(-th)

    return part(r1, n1) + part(r0, n0)


def refine_loadings(values, observed, Q, A, frozen=None, max_passes=10):
    """Greedy single-bit moves on Q rows under the profile likelihood.

    Each pass tries flipping every q[j, k] with theta re-fitted for the
    item, and applies the best improving flip per item. Stops when no flip
    improves any item. Returns the refined Q and the number of flips.
    """
    Q = Q.copy()
    J, K = Q.shape
    frozen = np.zeros(J, dtype=bool) if frozen is None else frozen
    total = 0
    for _ in range(max_passes):
        base = _item_logliks(values, observed, Q, A)
        gains = np.empty((K, J))
        for k in range(K):
            Qf = Q.copy()
            Qf[:, k] ^= 1
            gains[k] = _item_logliks(values, observed, Qf, A) - base
        gains[:, frozen] = 0.0
        best_k = gains.argmax(0)
        move = gains[best_k, np.arange(J)] > 1e-9
        if not move.any():
            break
        Q[np.flatnonzero(move), best_k[move]] ^= 1
        total += int(move.sum())
    return Q, total


@dataclass
class FitConfig:
    algorithm: str = "em"
    n_gibbs: int = 5
    max_iter: int = 100
    stable_iters: int = 3
    theta_tol: float = 1e-4
    init: str = "cluster"
    perturb_rate: float = 1 / 3
    anchor_rows: list = field(default_factory=list)
    n_init: int = 5
    seed: int = 0

    def validate(self):
        if self.algorithm not in ALGORITHMS:
            raise ValueError(f"algorithm must be one of {ALGORITHMS}")
        if not 1 <= self.n_gibbs <= 64:
            raise ValueError("n_gibbs must lie in [1, 64]")
        if self.init not in INITS:
            raise ValueError(f"init must be one of {INITS}")
        return self


@dataclass
class FitState:
    """Mutable iterate of one fitting run."""

    Q: np.ndarray
    A: np.ndarray
    frozen: np.ndarray
    tp: np.ndarray
    tm: np.ndarray
    rng: np.random.Generator
    t: int = 0
    stable: int = 0
    converged: bool = False
    best: tuple = None
    trace: list = field(default_factory=list)
    history: list = field(default_factory=list)

    def __post_init__(self):
        N, K = self.A.shape
        J = self.Q.shape[0]
        self.A_ave = np.zeros((N, K))
        self.Q_ave = np.zeros((J, K))
        self.tp_ave = np.zeros(J)
        self.tm_ave = np.zeros(J)


@dataclass
class FitResult:
    Q: np.ndarray
    A: np.ndarray
    theta: ItemParamsTwo
    trace: list
    converged: bool
    A_ave: np.ndarray = None


class ADGEM(TransformerMixin, BaseEstimator):
    """Joint MLE of (Q, A, theta) for two-parameter latent attribute models.

    Parameters
    ----------
    n_attributes : int
        Number of latent attributes K.
    algorithm : {"em", "saem"}
        ``em`` averages only the attribute samples across iterations;
        ``saem`` also averages loadings and item parameters.
    n_gibbs : int
        Gibbs samples drawn per direction per iteration.
    max_iter, stable_iters, theta_tol
        Stop once Q has not changed for ``stable_iters`` iterations and no
        item parameter moved more than ``theta_tol``, or at ``max_iter``.
    init : {"cluster", "random", "perturb", "warm"}
        ``cluster`` starts from k-means clusters of the items (see
        :func:`cluster_start`); ``random`` draws fair bits; ``warm`` starts from ``Q_init`` and
        ``A_init``; ``perturb`` flips each entry of ``Q_init``/``A_init``
        with probability ``perturb_rate``.
    anchor_rows : sequence of int, optional
        Items whose Q rows stay fixed at their ``Q_init`` values.
    theta_init : (float, float), optional
        Starting (theta_plus, theta_minus) for every item. By default a
        random start uses ``RANDOM_START_THETA`` (group means under random
        (Q, A) carry no signal and stall the sampler) and the other starts
        use the group means under the initial (Q, A).
    n_init, init_iter : int
        With ``init="random"``, ``n_init`` independent starts each run
        ``init_iter`` iterations and the one with the highest objective
        continues. Other starts run once.
    refine : bool
        After the sampler stops, apply :func:`refine_loadings` to Q with
        the final profiles held fixed.
    model : {"dina", "dino"}
        DINO data are fitted through the DINA/DINO duality.
    pseudocount : float
        Additive smoothing for the parameter updates (0 gives the exact
        weighted group means).
    random_state : int
    """

    def __init__(
        self,
        n_attributes=3,
        algorithm="em",
        n_gibbs=5,
        max_iter=100,
        stable_iters=3,
        theta_tol=1e-4,
        init="cluster",
        Q_init=None,
        A_init=None,
        perturb_rate=1 / 3,
        anchor_rows=None,
        theta_init=None,
        n_init=5,
        init_iter=15,
        refine=True,
        model="dina",
        pseudocount=0.0,
        store_history=False,
        random_state=0,
    ):
        self.n_attributes = n_attributes
        self.algorithm = algorithm
        self.n_gibbs = n_gibbs
        self.max_iter = max_iter
        self.stable_iters = stable_iters
        self.theta_tol = theta_tol
        self.init = init
        self.Q_init = Q_init
        self.A_init = A_init
        self.perturb_rate = perturb_rate
        self.anchor_rows = anchor_rows
        self.theta_init = theta_init
        self.n_init = n_init
        self.init_iter = init_iter
        self.refine = refine
        self.model = model
        self.pseudocount = pseudocount
        self.store_history = store_history
        self.random_state = random_state

    def _check_params(self):
        FitConfig(self.algorithm, self.n_gibbs, init=self.init).validate()
        if self.model not in ("dina", "dino"):
            raise ValueError("model must be 'dina' or 'dino'")
        if self.n_attributes < 1:
            raise ValueError("n_attributes must be positive")
        if self.n_init < 1 or self.init_iter < 1:
            raise ValueError("n_init and init_iter must be positive")

    def _anchor_pattern(self, J):
        if self.anchor_rows is None or not len(self.anchor_rows):
            return None
        if self.Q_init is None:
            raise ValueError("anchor_rows need Q_init to supply the frozen rows")
        pattern = np.full((J, self.n_attributes), -1, dtype=np.int64)
        rows = np.asarray(self.anchor_rows, dtype=int)
        pattern[rows] = check_binary_matrix(self.Q_init, "Q_init")[rows]
        return pattern

    def _initial(self, values, observed, candidate=0):
        N, J = values.shape
        K = self.n_attributes
        rng = row_generator(self.random_state, _INIT, candidate)
        if self.init == "cluster" and J < K:
            raise ValueError(f"init='cluster' needs at least K={K} items")
        if self.init == "cluster":
            Q, A = cluster_start(values, observed, K, self.random_state, self._anchor_pattern(J))
        elif self.init == "random":
            Q = (rng.random((J, K)) < 0.5).astype(np.int8)
            A = (rng.random((N, K)) < 0.5).astype(np.int8)
        else:
            if self.Q_init is None or self.A_init is None:
                raise ValueError(f"init={self.init!r} needs Q_init and A_init")
            Q = check_binary_matrix(self.Q_init, "Q_init").copy()
            A = check_binary_matrix(self.A_init, "A_init").copy()
            if Q.shape != (J, K) or A.shape != (N, K):
                raise DimensionError(f"Q_init/A_init must have shapes {(J, K)} and {(N, K)}")
            if self.model == "dino":
                A = 1 - A
            if self.init == "perturb":
                Q ^= (rng.random(Q.shape) < self.perturb_rate).astype(np.int8)
                A ^= (rng.random(A.shape) < self.perturb_rate).astype(np.int8)
        frozen = np.zeros(J, dtype=np.bool_)
        if self._anchor_pattern(J) is not None:
            rows = np.asarray(self.anchor_rows, dtype=int)
            Q[rows] = check_binary_matrix(self.Q_init, "Q_init")[rows]
            frozen[rows] = True
            anchor_block = Q[rows]
            if not (anchor_block.sum(0) > 0).all():
                warnings.warn("anchor rows do not cover every attribute", stacklevel=3)
        return Q, A, frozen

    def _start(self, values, observed, candidate):
        J = values.shape[1]
        Q, A, frozen = self._initial(values, observed, candidate)
        theta_init = self.theta_init
        if theta_init is None and self.init == "random":
            theta_init = RANDOM_START_THETA
        if theta_init is not None:
            tp = np.full(J, float(theta_init[0]))
            tm = np.full(J, float(theta_init[1]))
            tp, tm = enforce_order(clamp_prob(tp), clamp_prob(tm))
        else:
            tp, tm = m_step(values, ideal_matrix(Q, A), observed, self.pseudocount)
        return FitState(Q, A, frozen, tp, tm, row_generator(self.random_state, _FIT, candidate))

    def _step(self, state, values, observed):
        """One iteration: attribute sweeps, loading sweeps, parameter update."""
        s = state
        s.t += 1
        t, C = s.t, self.n_gibbs
        N, K = s.A.shape
        J = s.Q.shape[0]
        psi = compute_psi(values, s.tp, s.tm, observed)
        Q_prev = s.Q.copy()

        ptr, idx = _gibbs.items_by_attribute(s.Q)
        miss = _gibbs.missing_counts(s.A, s.Q)
        A_sum = np.zeros((N, K))
        _gibbs.sweep_attributes(s.A, psi, miss, ptr, idx, s.rng.random((N, C, K)), A_sum)

        missT = np.ascontiguousarray(_gibbs.missing_counts(s.A, s.Q).T)
        sptr, sidx = _gibbs.items_by_attribute(1 - s.A)
        Q_sum = np.zeros((J, K))
        _gibbs.sweep_loadings(
            s.Q, np.ascontiguousarray(psi.T), missT, sptr, sidx, s.frozen, s.rng.random((J, C, K)), Q_sum
        )

        s.A_ave = (1 - 1 / t) * s.A_ave + (A_sum / C) / t
        if self.algorithm == "saem":
            s.Q_ave = (1 - 1 / t) * s.Q_ave + (Q_sum / C) / t
            s.Q = (s.Q_ave > 0.5).astype(np.int8)
            s.A = (s.A_ave > 0.5).astype(np.int8)
            tp_new, tm_new = m_step(values, ideal_matrix(s.Q, s.A), observed, self.pseudocount)
            s.tp_ave = (1 - 1 / t) * s.tp_ave + tp_new / t
            s.tm_ave = (1 - 1 / t) * s.tm_ave + tm_new / t
            tp_next, tm_next = enforce_order(clamp_prob(s.tp_ave), clamp_prob(s.tm_ave))
        else:
            s.Q = (Q_sum / C > 0.5).astype(np.int8)
            tp_next, tm_next = m_step(values, soft_ideal(s.A_ave, s.Q), observed, self.pseudocount)
        s.Q[s.frozen] = Q_prev[s.frozen]

        dtheta = 0.5 * (np.abs(tp_next - s.tp).mean() + np.abs(tm_next - s.tm).mean())
        s.tp, s.tm = tp_next, tm_next
        A_hat = (s.A_ave > 0.5).astype(np.int8)
        objective = two_param_objective(values, observed, s.Q, A_hat, s.tp, s.tm)
        flips = int((s.Q != Q_prev).sum())
        s.trace.append({"iteration": t, "q_flips": flips, "objective": objective, "theta_change": dtheta})
        if self.store_history:
            s.history.append(s.Q.copy())
        logger.debug("iter %d: %d Q flips, objective %.4f", t, flips, objective)
        if s.best is None or objective > s.best[0]:
            s.best = (objective, s.Q.copy(), A_hat, s.tp.copy(), s.tm.copy(), s.A_ave.copy())
        s.stable = s.stable + 1 if flips == 0 else 0
        s.converged = t > 1 and s.stable >= self.stable_iters and dtheta < self.theta_tol
        return s

    def fit(self, R, y=None):
        self._check_params()
        values, observed = check_response_matrix(R)
        if self.model == "dino":
            values = np.where(observed, 1 - values, 0).astype(np.int8)

        n_start = self.n_init if self.init == "random" else 1
        states = [self._start(values, observed, c) for c in range(n_start)]
        if n_start > 1:
            for s in states:
                while s.t < min(self.init_iter, self.max_iter) and not s.converged:
                    self._step(s, values, observed)
            state = max(states, key=lambda s: s.trace[-1]["objective"])
        else:
            state = states[0]
        while state.t < self.max_iter and not state.converged:
            self._step(state, values, observed)

        if state.converged:
            Q, tp, tm, A_ave = state.Q, state.tp, state.tm, state.A_ave
            A_hat = (A_ave > 0.5).astype(np.int8)
        else:
            warnings.warn(
                f"no convergence after {self.max_iter} iterations; returning the best iterate",
                ConvergenceWarning,
                stacklevel=2,
            )
            _, Q, A_hat, tp, tm, A_ave = state.best

        n_refined = 0
        if self.refine:
            Q_fit = Q
            Q, n_refined = refine_loadings(values, observed, Q, A_hat, state.frozen)
            changed = (Q != Q_fit).any(1)
            if changed.any():
                tp_h, tm_h = m_step(values, ideal_matrix(Q, A_hat), observed, self.pseudocount)
                tp, tm = tp.copy(), tm.copy()
                tp[changed], tm[changed] = tp_h[changed], tm_h[changed]

        if self.model == "dino":
            A_hat, A_ave = 1 - A_hat, 1 - A_ave
            tp, tm = 1 - tm, 1 - tp

        self.Q_ = Q
        self.A_ = A_hat
        self.A_ave_ = A_ave
        self.theta_plus_ = tp
        self.theta_minus_ = tm
        self.trace_ = state.trace
        self.q_history_ = state.history
        self.n_iter_ = state.t
        self.converged_ = state.converged
        self.n_refined_ = n_refined
        self.loglik_ = self._loglik(R, A_hat)
        return self

    def _loglik(self, R, A):
        values, observed = check_response_matrix(R)
        xi = ideal_matrix(self.Q_, A, self.model)
        P = np.where(xi == 1, self.theta_plus_[None, :], self.theta_minus_[None, :])
        return bernoulli_loglik(values, P, observed)

    @property
    def theta_(self):
        check_is_fitted(self, "Q_")
        return ItemParamsTwo(self.theta_plus_, self.theta_minus_)

    def fit_transform(self, R, y=None):
        return self.fit(R).A_

    def transform(self, R, n_iter=20):
        """Attribute profiles for (possibly new) subjects with Q and theta held fixed."""
        check_is_fitted(self, "Q_")
        values, observed = check_response_matrix(R)
        if values.shape[1] != self.Q_.shape[0]:
            raise DimensionError(f"R has {values.shape[1]} items, the model has {self.Q_.shape[0]}")
        tp, tm = self.theta_plus_, self.theta_minus_
        if self.model == "dino":
            values = np.where(observed, 1 - values, 0).astype(np.int8)
            tp, tm = 1 - tm, 1 - tp
        N, K, C = values.shape[0], self.n_attributes, self.n_gibbs
        rng = stream(self.random_state + 1, _FIT)
        psi = compute_psi(values, tp, tm, observed)
        ptr, idx = _gibbs.items_by_attribute(self.Q_)
        A = (rng.random((N, K)) < 0.5).astype(np.int8)
        A_ave = np.zeros((N, K))
        for t in range(1, n_iter + 1):
            miss = _gibbs.missing_counts(A, self.Q_)
            A_sum = np.zeros((N, K))
            _gibbs.sweep_attributes(A, psi, miss, ptr, idx, rng.random((N, C, K)), A_sum)
            A_ave = (1 - 1 / t) * A_ave + (A_sum / C) / t
        A_hat = (A_ave > 0.5).astype(np.int8)
        return 1 - A_hat if self.model == "dino" else A_hat

    def score(self, R, y=None):
        """Joint log-likelihood of R at the fitted Q and theta with profiles from ``transform``."""
        return self._loglik(R, self.transform(R))

    def reconstruct(self):
        """0/1 matrix nearest to the fitted success probabilities."""
        check_is_fitted(self, "Q_")
        xi = ideal_matrix(self.Q_, self.A_, self.model)
        P = np.where(xi == 1, self.theta_plus_[None, :], self.theta_minus_[None, :])
        return (P > 0.5).astype(np.int8)

    def to_result(self):
        check_is_fitted(self, "Q_")
        return FitResult(self.Q_, self.A_, self.theta_, self.trace_, self.converged_, self.A_ave_)


def _estimator_from_config(K, config, **extra):
    config.validate()
    return ADGEM(
        n_attributes=K,
        algorithm=config.algorithm,
        n_gibbs=config.n_gibbs,
        max_iter=config.max_iter,
        stable_iters=config.stable_iters,
        theta_tol=config.theta_tol,
        init=config.init,
        perturb_rate=config.perturb_rate,
        anchor_rows=config.anchor_rows or None,
        n_init=config.n_init,
        random_state=config.seed,
        **extra,
    )


def adg_em_fit(R, K, config=None, **extra):
    """Run ADG-EM and return a :class:`FitResult`."""
    config = FitConfig() if config is None else config
    config.algorithm = "em"
    return _estimator_from_config(K, config, **extra).fit(R).to_result()


def adg_saem_fit(R, K, config=None, **extra):
    """Run ADG-SAEM and return a :class:`FitResult`."""
    config = FitConfig() if config is None else config
    config.algorithm = "saem"
    return _estimator_from_config(K, config, **extra).fit(R).to_result()
