"""Second-stage estimation for multi-parameter models.

Given stage-one profiles A_hat, every item is treated as a logistic
regression of its responses on interaction columns prod_{k in S} a_ik:

1. marginal screening picks candidate attributes (or interactions),
2. an L1-penalized logistic fit with cross-validated penalty selects
   the interactions that matter,
3. the item's Q row becomes the union of the selected subsets,
4. success probabilities are re-estimated per local latent class.

BIC then compares the two-parameter stage-one fit with the
multi-parameter stage-two fit.
"""

from dataclasses import dataclass, field

import numpy as np
from sklearn.base import BaseEstimator, clone
from sklearn.utils.validation import check_is_fitted

from . import _lasso
from .adg import ADGEM
from .datagen import _FOLDS, row_generator
from .model import (
    EPS_CLAMP,
    ItemParamsMulti,
    bernoulli_loglik,
    clamp_prob,
    ideal_matrix,
    power_set,
)
from .validation import DimensionError, check_binary_matrix, check_response_matrix

SCREEN_MODES = ("main", "all")
CV_RULES = ("min", "1se")


def _logit(p):
    with np.errstate(divide="ignore"):
        return np.log(p) - np.log1p(-p)


def marginal_fit(r, x, smooth=True):
    """Closed-form logistic MLE of r on one binary predictor x.

    Returns (intercept, slope, degenerate). With ``smooth`` each group
    mean is (hits + 0.5) / (count + 1), which keeps both coefficients
    finite. A constant x gives slope 0 and ``degenerate=True``.
    """
    r = np.asarray(r, dtype=float)
    x = np.asarray(x)
    if r.shape != x.shape or r.ndim != 1:
        raise DimensionError(f"r and x must be equal-length vectors, got {r.shape} and {x.shape}")
    s, d = (0.5, 1.0) if smooth else (0.0, 0.0)
    on = x == 1
    n1, n0 = int(on.sum()), int((~on).sum())
    if n1 == 0 or n0 == 0:
        return float(_logit((r.sum() + s) / (r.size + d))), 0.0, True
    p1 = (r[on].sum() + s) / (n1 + d)
    p0 = (r[~on].sum() + s) / (n0 + d)
    return float(_logit(p0)), float(_logit(p1) - _logit(p0)), False


def interaction_design(A, subsets):
    """N x len(subsets) matrix with column S equal to prod_{k in S} A[:, k]."""
    A = np.asarray(A)
    X = np.ones((A.shape[0], len(subsets)))
    for c, S in enumerate(subsets):
        for k in S:
            X[:, c] *= A[:, k]
    return X


def marginal_slopes(values, observed, X, smooth=True):
    """Marginal logistic slopes of every item on every column of X.

    Returns (slopes, degenerate), both J x p; only observed cells count.
    """
    obs = observed.astype(np.float64)
    r = np.where(observed, values, 0).astype(np.float64)
    n1 = obs.T @ X
    h1 = r.T @ X
    n0 = obs.sum(0)[:, None] - n1
    h0 = r.sum(0)[:, None] - h1
    s, d = (0.5, 1.0) if smooth else (0.0, 0.0)
    degenerate = (n1 == 0) | (n0 == 0)
    with np.errstate(invalid="ignore", divide="ignore"):
        slopes = _logit((h1 + s) / (n1 + d)) - _logit((h0 + s) / (n0 + d))
    slopes[degenerate] = 0.0
    return slopes, degenerate


def gap_select(magnitudes, max_active=4):
    """Attributes above the largest gap in the sorted magnitudes.

    The sorted list is closed by a floor of 0, so when every attribute
    matters equally the cut falls after the last one and all are kept.
    If no gap is positive (all magnitudes equal, and zero) all are
    selected as well. Ties between equally large gaps cut at the first
    one. At most ``max_active`` attributes are kept, largest first.
    """
    mags = np.asarray(magnitudes, dtype=float)
    order = np.argsort(-mags, kind="stable")
    ranked = np.append(mags[order], 0.0)
    gaps = ranked[:-1] - ranked[1:]
    if gaps.max() <= 0:
        chosen = order
    else:
        chosen = order[: int(np.argmax(gaps)) + 1]
    return tuple(sorted(int(k) for k in chosen[:max_active]))


@dataclass
class ScreenResult:
    """Marginal screening output.

    ``subsets[c]`` is the interaction behind column c of ``magnitudes``;
    ``candidates[j]`` is the family passed to the penalized fit for item
    j and always starts with the empty set.
    """

    mode: str
    subsets: list
    magnitudes: np.ndarray
    degenerate: np.ndarray
    selected: list
    candidates: list


def screen_main(R, A_hat, gap_rule=True, tau=None, max_active=4, smooth=True, Q_stage1=None):
    """Main-effect screening: candidate family = power set of the selected attributes.

    With ``Q_stage1`` the attributes of each stage-one row join the
    screened set before the ``max_active`` cap (largest magnitudes
    first), so the penalized fit can confirm or drop them.
    """
    values, observed = check_response_matrix(R)
    A = check_binary_matrix(A_hat, "A_hat")
    if A.shape[0] != values.shape[0]:
        raise DimensionError("A_hat and R disagree on N")
    if not gap_rule and tau is None:
        raise ValueError("threshold mode needs tau")
    K = A.shape[1]
    if Q_stage1 is not None:
        Q_stage1 = check_binary_matrix(Q_stage1, "Q_stage1")
        if Q_stage1.shape != (values.shape[1], K):
            raise DimensionError(f"Q_stage1 must be {(values.shape[1], K)}, got {Q_stage1.shape}")
    subsets = [(k,) for k in range(K)]
    slopes, degenerate = marginal_slopes(values, observed, A.astype(np.float64), smooth)
    mags = np.abs(slopes)
    selected, candidates = [], []
    for j in range(values.shape[1]):
        if gap_rule:
            sel = set(gap_select(mags[j], K))
        else:
            sel = {int(k) for k in np.flatnonzero(mags[j] > tau)}
        if Q_stage1 is not None:
            sel |= {int(k) for k in np.flatnonzero(Q_stage1[j])}
        ranked = [int(k) for k in np.argsort(-mags[j], kind="stable") if k in sel]
        sel = tuple(sorted(ranked[:max_active]))
        selected.append(sel)
        candidates.append(power_set(sel))
    return ScreenResult("main", subsets, mags, degenerate, selected, candidates)


def screen_all_effects(R, A_hat, tau, max_order=3, smooth=True):
    """Keep every interaction of order <= max_order whose marginal slope exceeds tau."""
    values, observed = check_response_matrix(R)
    A = check_binary_matrix(A_hat, "A_hat")
    if A.shape[0] != values.shape[0]:
        raise DimensionError("A_hat and R disagree on N")
    subsets = power_set(range(A.shape[1]), include_empty=False, max_order=max_order)
    X = interaction_design(A, subsets)
    slopes, degenerate = marginal_slopes(values, observed, X, smooth)
    mags = np.abs(slopes)
    keep = (mags > tau) & ~degenerate
    selected = [[subsets[c] for c in np.flatnonzero(keep[j])] for j in range(values.shape[1])]
    candidates = [[()] + sel for sel in selected]
    return ScreenResult("all", subsets, mags, degenerate, selected, candidates)


def stratified_folds(y, n_folds, seed=0, stream_id=0):
    """Fold index per observation, balanced within each response class."""
    y = np.asarray(y)
    rng = row_generator(seed, _FOLDS, stream_id)
    folds = np.empty(y.size, dtype=np.int64)
    for cls in (0, 1):
        idx = rng.permutation(np.flatnonzero(y == cls))
        folds[idx] = np.arange(idx.size) % n_folds
    return folds


@dataclass
class LassoPath:
    columns: list
    lambdas: np.ndarray
    intercepts: np.ndarray
    coefs: np.ndarray
    converged: np.ndarray
    cv_loss: np.ndarray
    chosen: int
    support: list
    fallback: bool = False

    def kkt(self, X, y):
        """KKT residual at every grid point (NaN where the fit was skipped)."""
        Xu, yu, cu = _lasso.aggregate(X, y)
        out = np.full(self.lambdas.size, np.nan)
        for g, lam in enumerate(self.lambdas):
            if self.converged[g]:
                out[g] = _lasso.kkt_residual(Xu, yu, cu, self.intercepts[g], self.coefs[g], lam)
        return out


def lambda_max(X, y):
    """Smallest penalty at which every slope is zero."""
    if X.shape[1] == 0:
        return 0.0
    return float(np.abs(X.T @ (y - y.mean())).max() / y.size)


def l1_logistic(X, y, lam, tol=1e-8):
    """Single-penalty fit; returns (intercept, slopes, converged)."""
    X = np.ascontiguousarray(X, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    Xu, yu, cu = _lasso.aggregate(X, y)
    b0 = float(_logit(clamp_prob(y.mean(), 1e-6)))
    return _lasso.l1_logistic_cd(Xu, yu, cu, float(lam), b0, np.zeros(X.shape[1]), tol)


def _fit_path(X, y, lambdas, tol):
    G, p = lambdas.size, X.shape[1]
    b0s = np.zeros(G)
    coefs = np.zeros((G, p))
    ok = np.zeros(G, dtype=bool)
    ybar = y.mean()
    if ybar in (0.0, 1.0):
        # constant response: intercept-only limit, no slope can help
        b0s[:] = _logit(clamp_prob(ybar, 1e-6))
        return b0s, coefs, np.ones(G, dtype=bool)
    Xu, yu, cu = _lasso.aggregate(X, y)
    b0, beta = float(_logit(ybar)), np.zeros(p)
    for g, lam in enumerate(lambdas):
        nb0, nbeta, conv = _lasso.l1_logistic_cd(Xu, yu, cu, lam, b0, beta, tol)
        ok[g] = conv
        if conv:
            b0, beta = nb0, nbeta
        b0s[g], coefs[g] = nb0, nbeta
    return b0s, coefs, ok


def _deviance(X, y, b0, beta):
    eta = b0 + X @ beta
    return float(np.sum(np.logaddexp(0.0, eta) - y * eta) * 2.0)


def lasso_logistic(
    y,
    design,
    columns=None,
    n_folds=5,
    grid_size=30,
    ratio=1e-3,
    cv_rule="1se",
    seed=0,
    stream_id=0,
    tol=1e-8,
):
    """L1-penalized logistic path with K-fold cross-validated penalty choice.

    ``design`` holds the candidate columns (no intercept column). The grid
    runs from the smallest all-zero penalty down by ``ratio`` on a log
    scale. Each penalty is scored by the held-out deviance per
    observation, averaged over folds. ``cv_rule="min"`` takes the
    minimizer (ties go to the larger penalty); ``"1se"`` takes the largest
    penalty within one standard error of that minimum, which keeps
    pure-noise items empty far more often.
    """
    if cv_rule not in CV_RULES:
        raise ValueError(f"cv_rule must be one of {CV_RULES}")
    X = np.ascontiguousarray(design, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    if X.ndim != 2 or X.shape[0] != y.size:
        raise DimensionError(f"design must be {y.size} x p, got {X.shape}")
    p = X.shape[1]
    columns = list(range(p)) if columns is None else list(columns)
    lmax = lambda_max(X, y)
    if p == 0 or lmax <= 0:
        lambdas = np.full(1, lmax)
        b0 = float(_logit(clamp_prob(y.mean(), 1e-6)))
        return LassoPath(columns, lambdas, np.array([b0]), np.zeros((1, p)), np.ones(1, bool), np.zeros(1), 0, [])
    lambdas = lmax * np.logspace(0.0, np.log10(ratio), grid_size)
    b0s, coefs, ok = _fit_path(X, y, lambdas, tol)

    folds = stratified_folds(y, n_folds, seed, stream_id)
    fold_loss = np.full((n_folds, grid_size), np.nan)
    for f in range(n_folds):
        test = folds == f
        if not test.any():
            continue
        train = ~test
        fb0, fcoef, fok = _fit_path(X[train], y[train], lambdas, tol)
        ok &= fok
        for g in range(grid_size):
            fold_loss[f, g] = _deviance(X[test], y[test], fb0[g], fcoef[g]) / test.sum()
    fold_loss = fold_loss[~np.isnan(fold_loss[:, 0])]
    loss = fold_loss.mean(0)

    if not ok.any():
        return LassoPath(columns, lambdas, b0s, coefs, ok, loss, -1, [], fallback=True)
    masked = np.where(ok, loss, np.inf)
    chosen = int(np.argmin(masked))
    if cv_rule == "1se" and fold_loss.shape[0] > 1:
        se = fold_loss[:, chosen].std(ddof=1) / np.sqrt(fold_loss.shape[0])
        # largest penalty whose CV loss is within one standard error of the minimum
        chosen = int(np.flatnonzero(masked <= masked[chosen] + se)[0])
    support = [columns[c] for c in np.flatnonzero(coefs[chosen] != 0)]
    return LassoPath(columns, lambdas, b0s, coefs, ok, loss, chosen, support)


def rebuild_q(supports, Q_stage1):
    """Q rows from the union of selected subsets; empty supports keep the stage-one row.

    Returns (Q, fallback) where ``fallback[j]`` marks kept rows.
    """
    Q1 = check_binary_matrix(Q_stage1, "Q_stage1")
    if len(supports) != Q1.shape[0]:
        raise DimensionError(f"{len(supports)} supports for {Q1.shape[0]} items")
    Q = Q1.copy()
    fallback = np.zeros(Q1.shape[0], dtype=bool)
    for j, support in enumerate(supports):
        attrs = sorted({k for S in support for k in S})
        if attrs:
            Q[j] = 0
            Q[j, attrs] = 1
        else:
            fallback[j] = True
    return Q, fallback


@dataclass
class ThetaTable:
    """Success probability of each item for each local latent class.

    For item j, ``probs[j][c]`` belongs to the class whose bits on
    ``active[j]`` spell c (first active attribute = lowest bit).
    """

    active: list
    probs: list
    counts: list
    empty: list = field(default_factory=list)

    @property
    def n_params(self):
        return int(sum(p.size for p in self.probs))

    def local_codes(self, A, j):
        act = list(self.active[j])
        if not act:
            return np.zeros(A.shape[0], dtype=np.int64)
        return A[:, act].astype(np.int64) @ (1 << np.arange(len(act)))

    def prob_matrix(self, A):
        A = check_binary_matrix(A, "A")
        return np.column_stack([self.probs[j][self.local_codes(A, j)] for j in range(len(self.probs))])

    def loglik(self, R, A):
        values, observed = check_response_matrix(R)
        return bernoulli_loglik(values, self.prob_matrix(A), observed)

    def to_params(self):
        """Identity-link coefficients reproducing the table (Moebius inversion)."""
        coefs = []
        for act, probs in zip(self.active, self.probs):
            m = len(act)
            c = {}
            for code in range(2**m):
                total = 0.0
                sub = code
                while True:
                    sign = -1.0 if (bin(code).count("1") - bin(sub).count("1")) % 2 else 1.0
                    total += sign * probs[sub]
                    if sub == 0:
                        break
                    sub = (sub - 1) & code
                c[tuple(act[b] for b in range(m) if (code >> b) & 1)] = total
            coefs.append(c)
        return ItemParamsMulti(coefs, link="identity")


def estimate_theta_multi(R, A_hat, Q_hat, pseudocount=0.0, eps=EPS_CLAMP):
    """Observed response mean per local latent class of every item.

    With ``pseudocount`` s > 0 each mean becomes (hits + s/2) / (count + s).
    Empty classes get 0.5 and are flagged. Results are clamped to
    [eps, 1 - eps].
    """
    values, observed = check_response_matrix(R)
    A = check_binary_matrix(A_hat, "A_hat")
    Q = check_binary_matrix(Q_hat, "Q_hat")
    if A.shape[0] != values.shape[0] or Q.shape[0] != values.shape[1] or A.shape[1] != Q.shape[1]:
        raise DimensionError("R, A_hat and Q_hat have inconsistent shapes")
    table = ThetaTable([], [], [], [])
    for j in range(Q.shape[0]):
        act = tuple(int(k) for k in np.flatnonzero(Q[j]))
        table.active.append(act)
        codes = table.local_codes(A, j)[observed[:, j]]
        hits = values[observed[:, j], j].astype(np.float64)
        n = np.bincount(codes, minlength=2 ** len(act)).astype(np.float64)
        h = np.bincount(codes, weights=hits, minlength=2 ** len(act))
        empty = n + pseudocount <= 0
        with np.errstate(invalid="ignore", divide="ignore"):
            prob = np.where(empty, 0.5, (h + 0.5 * pseudocount) / (n + pseudocount))
        table.probs.append(clamp_prob(prob, eps))
        table.counts.append(n.astype(np.int64))
        table.empty.append(n == 0)
    return table


def bic(loglik, n_params, n_obs):
    return float(-2.0 * loglik + n_params * np.log(n_obs))


def bic_compare(R, two_param, multi_param, model="dina"):
    """BIC of the stage-one two-parameter fit versus the stage-two table.

    ``two_param`` is (Q, A, theta_plus, theta_minus); ``multi_param`` is
    (A, ThetaTable); ``model`` is the two-parameter rule. Only continuous parameters are counted: 2 per item
    for the two-parameter fit, one per local class for the table. The
    smaller BIC wins; an exact tie goes to the two-parameter model.
    """
    values, observed = check_response_matrix(R)
    n_obs = int(observed.sum())
    Q1, A1, tp, tm = two_param
    xi = ideal_matrix(Q1, A1, model)
    P = np.where(xi == 1, np.asarray(tp)[None, :], np.asarray(tm)[None, :])
    ll_two = bernoulli_loglik(values, P, observed)
    A2, table = multi_param
    ll_multi = table.loglik(R, A2)
    report = {
        "two_parameter": {"loglik": ll_two, "k": 2 * Q1.shape[0], "n_obs": n_obs},
        "multi_parameter": {"loglik": ll_multi, "k": table.n_params, "n_obs": n_obs},
    }
    for entry in report.values():
        entry["bic"] = bic(entry["loglik"], entry["k"], n_obs)
    two_wins = report["two_parameter"]["bic"] <= report["multi_parameter"]["bic"]
    report["winner"] = "two_parameter" if two_wins else "multi_parameter"
    return report


class TwoStageSLAM(BaseEstimator):
    """Two-parameter stage one followed by screening + L1 logistic stage two.

    Parameters
    ----------
    n_attributes : int
    screen : {"main", "all"}
        Main-effect screening with the gap rule (or ``tau``), or
        all-effect screening with threshold ``tau``.
    tau : float, optional
    gap_rule : bool
        Main-effect mode only: cut at the largest gap instead of ``tau``.
    max_active, max_order : int
        Caps on selected attributes per item and on interaction order.
    n_folds, grid_size, lambda_ratio, cv_rule
        Cross-validation folds, penalty grid and penalty choice rule
        (see :func:`lasso_logistic`).
    use_stage_one : bool
        Main-effect mode: add each item's stage-one attributes to its
        screened set.
    pseudocount : float
        Smoothing for the class means.
    stage_one : ADGEM, optional
        Unfitted stage-one estimator; defaults to ``ADGEM(n_attributes)``.
    random_state : int
    """

    def __init__(
        self,
        n_attributes=3,
        screen="main",
        tau=None,
        gap_rule=True,
        max_active=4,
        max_order=3,
        n_folds=5,
        grid_size=30,
        lambda_ratio=1e-3,
        cv_rule="1se",
        use_stage_one=True,
        pseudocount=0.0,
        stage_one=None,
        random_state=0,
    ):
        self.n_attributes = n_attributes
        self.screen = screen
        self.tau = tau
        self.gap_rule = gap_rule
        self.max_active = max_active
        self.max_order = max_order
        self.n_folds = n_folds
        self.grid_size = grid_size
        self.lambda_ratio = lambda_ratio
        self.cv_rule = cv_rule
        self.use_stage_one = use_stage_one
        self.pseudocount = pseudocount
        self.stage_one = stage_one
        self.random_state = random_state

    def fit(self, R, y=None):
        if self.stage_one is None:
            est = ADGEM(self.n_attributes, random_state=self.random_state)
        else:
            est = clone(self.stage_one)
        est.fit(R)
        self.stage_one_ = est
        return self.fit_second_stage(R, est.A_, est.Q_, est.theta_plus_, est.theta_minus_, est.model)

    def fit_second_stage(self, R, A_hat, Q_stage1, theta_plus=None, theta_minus=None, model="dina"):
        """Run stage two on given stage-one estimates (``model`` is the stage-one rule)."""
        if self.screen not in SCREEN_MODES:
            raise ValueError(f"screen must be one of {SCREEN_MODES}")
        values, observed = check_response_matrix(R)
        A = check_binary_matrix(A_hat, "A_hat")
        Q1 = check_binary_matrix(Q_stage1, "Q_stage1")
        if self.screen == "main":
            scr = screen_main(
                R, A, self.gap_rule, self.tau, self.max_active,
                Q_stage1=Q1 if self.use_stage_one else None,
            )
        else:
            if self.tau is None:
                raise ValueError("all-effect screening needs tau")
            scr = screen_all_effects(R, A, self.tau, self.max_order)
        paths = []
        for j in range(values.shape[1]):
            cols = [S for S in scr.candidates[j] if S]
            rows = observed[:, j]
            paths.append(
                lasso_logistic(
                    values[rows, j],
                    interaction_design(A[rows], cols),
                    columns=cols,
                    n_folds=self.n_folds,
                    grid_size=self.grid_size,
                    ratio=self.lambda_ratio,
                    cv_rule=self.cv_rule,
                    seed=self.random_state,
                    stream_id=j,
                )
            )
        Q2, fallback = rebuild_q([p.support for p in paths], Q1)
        self.screen_ = scr
        self.paths_ = paths
        self.Q_stage1_ = Q1
        self.A_ = A
        self.Q_ = Q2
        self.fallback_ = fallback
        self.theta_table_ = estimate_theta_multi(R, A, Q2, self.pseudocount)
        if theta_plus is not None and theta_minus is not None:
            self.bic_ = bic_compare(R, (Q1, A, theta_plus, theta_minus), (A, self.theta_table_), model)
        return self

    def predict_proba(self, A=None):
        """N x J success probabilities from the class table (default: fitted profiles)."""
        check_is_fitted(self, "Q_")
        return self.theta_table_.prob_matrix(self.A_ if A is None else A)
