import math
import warnings

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from oracles import newton_logistic
from sklearn.base import clone

from slamjmle import _lasso
from slamjmle.adg import ADGEM, m_step
from slamjmle.datagen import SimConfig, simulate
from slamjmle.evaluation import align_columns
from slamjmle.model import ideal_matrix, power_set
from slamjmle.stage_two import (
    ThetaTable,
    TwoStageSLAM,
    bic,
    bic_compare,
    estimate_theta_multi,
    gap_select,
    interaction_design,
    l1_logistic,
    lambda_max,
    lasso_logistic,
    marginal_fit,
    rebuild_q,
    screen_all_effects,
    screen_main,
    stratified_folds,
)
from slamjmle.validation import check_response_matrix


def binary_design(rng, N, K):
    A = (rng.random((N, K)) < 0.5).astype(np.int8)
    cols = power_set(range(K), include_empty=False)
    return A, cols, interaction_design(A, cols)


# marginal fits and screening


def test_marginal_fit_examples():
    _, slope, deg = marginal_fit([1, 0, 0, 1], [1, 1, 0, 0])
    assert slope == pytest.approx(0.0) and not deg
    b0, slope, _ = marginal_fit([1, 1, 0, 1, 0, 0], [1, 1, 1, 0, 0, 0], smooth=False)
    assert slope == pytest.approx(2 * math.log(2))
    assert b0 == pytest.approx(math.log(1 / 3) - math.log(2 / 3))
    _, slope, deg = marginal_fit([1, 0, 1], [1, 1, 1])
    assert slope == 0.0 and deg


def test_marginal_fit_is_the_logistic_mle():
    rng = np.random.default_rng(0)
    x = (rng.random(300) < 0.4).astype(float)
    r = (rng.random(300) < 0.3 + 0.4 * x).astype(float)
    b0, b1, _ = marginal_fit(r, x, smooth=False)
    np.testing.assert_allclose([b0, b1], newton_logistic(x[:, None], r), atol=1e-8)


def test_gap_rule_examples():
    assert gap_select([2.1, 1.9, 0.1]) == (0, 1)
    assert gap_select([0.7, 0.7, 0.7]) == (0, 1, 2)
    assert gap_select([0.0, 0.0]) == (0, 1)
    # magnitudes 3, 2, 1 and the zero floor give equal gaps: cut at the first
    assert gap_select([3.0, 2.0, 1.0]) == (0,)
    assert gap_select([3.0, 2.5, 1.0]) == (0, 1)
    assert gap_select([3.0, 2.0, 1.1, 0.1]) == (0,)
    assert gap_select([5, 4.9, 4.8, 4.7, 4.6, 0.1], max_active=4) == (0, 1, 2, 3)


def test_threshold_mode_above_everything_is_empty():
    rng = np.random.default_rng(1)
    A = (rng.random((100, 3)) < 0.5).astype(np.int8)
    R = (rng.random((100, 4)) < 0.5).astype(float)
    res = screen_main(R, A, gap_rule=False, tau=1e6)
    assert res.selected == [()] * 4
    assert all(c == [()] for c in res.candidates)
    with pytest.raises(ValueError):
        screen_main(R, A, gap_rule=False)


def test_stage_one_rows_join_the_candidates():
    rng = np.random.default_rng(2)
    A = (rng.random((200, 3)) < 0.5).astype(np.int8)
    R = (rng.random((200, 1)) < 0.2 + 0.6 * A[:, [0]]).astype(float)
    assert screen_main(R, A).selected == [(0,)]
    assert screen_main(R, A, Q_stage1=np.array([[0, 0, 1]])).selected == [(0, 2)]


@given(st.integers(0, 2**31))
def test_main_screening_is_permutation_equivariant(seed):
    rng = np.random.default_rng(seed)
    A = (rng.random((60, 4)) < 0.5).astype(np.int8)
    R = (rng.random((60, 5)) < 0.2 + 0.5 * A[:, [0, 1, 2, 3, 0]]).astype(float)
    perm = rng.permutation(4)
    base = screen_main(R, A, max_active=4).selected
    moved = screen_main(R, A[:, perm], max_active=4).selected
    for b, m in zip(base, moved):
        assert tuple(sorted(int(perm[k]) for k in m)) == b


def test_all_effect_screening_degenerate_and_infinite_tau():
    A = np.array([[1, 0], [0, 1], [1, 0], [0, 1]] * 5, dtype=np.int8)
    R = np.array([[1], [0], [1], [0]] * 5, dtype=float)
    res = screen_all_effects(R, A, tau=0.1, max_order=2)
    c = res.subsets.index((0, 1))
    assert res.degenerate[0, c]
    assert (0, 1) not in res.selected[0]
    assert screen_all_effects(R, A, tau=np.inf).candidates == [[()]]


def test_all_effect_screening_prefers_the_true_singleton():
    rng = np.random.default_rng(3)
    A = (rng.random((10_000, 3)) < 0.5).astype(np.int8)
    R = (rng.random((10_000, 1)) < np.where(A[:, [1]] == 1, 0.8, 0.2)).astype(float)
    res = screen_all_effects(R, A, tau=0.0, max_order=3)
    assert res.subsets[int(np.argmax(res.magnitudes[0]))] == (1,)


# penalized logistic regression


def test_lambda_max_zeroes_every_slope():
    rng = np.random.default_rng(4)
    _, _, X = binary_design(rng, 400, 2)
    y = (rng.random(400) < 0.3 + 0.3 * X[:, 0]).astype(float)
    lmax = lambda_max(X, y)
    b0, beta, ok = l1_logistic(X, y, lmax)
    assert ok and (beta == 0).all()
    assert b0 == pytest.approx(math.log(y.mean() / (1 - y.mean())), abs=1e-8)
    b0, beta, ok = l1_logistic(X, y, 0.9 * lmax)
    assert ok and (beta != 0).any()


@pytest.mark.parametrize("K", [1, 2])
def test_tiny_penalty_matches_newton(K):
    rng = np.random.default_rng(5 + K)
    _, _, X = binary_design(rng, 3000, K)
    eta = -0.5 + X @ np.linspace(0.8, -0.4, X.shape[1])
    y = (rng.random(3000) < 1 / (1 + np.exp(-eta))).astype(float)
    b0, beta, ok = l1_logistic(X, y, 1e-12, tol=1e-10)
    assert ok
    np.testing.assert_allclose(np.r_[b0, beta], newton_logistic(X, y), atol=1e-4)


def test_path_satisfies_kkt():
    rng = np.random.default_rng(8)
    _, cols, X = binary_design(rng, 1500, 3)
    y = (rng.random(1500) < 0.2 + 0.6 * X[:, 3]).astype(float)
    path = lasso_logistic(y, X, cols)
    assert path.converged.all()
    assert np.nanmax(path.kkt(X, y)) <= 1e-6
    assert np.abs(path.coefs[0]).max() == 0


def test_aggregated_objective_equals_raw():
    rng = np.random.default_rng(9)
    _, _, X = binary_design(rng, 200, 2)
    y = (rng.random(200) < 0.5).astype(float)
    beta = np.array([0.3, -0.2, 0.1])
    raw = _lasso._objective(X, y, np.ones(200), 0.1, beta, 0.05)
    Xu, yu, cu = _lasso.aggregate(X, y)
    assert Xu.shape[0] == 4
    assert _lasso._objective(Xu, yu, cu, 0.1, beta, 0.05) == pytest.approx(raw, rel=1e-12)


def test_min_rule_picks_the_cv_minimum():
    rng = np.random.default_rng(10)
    _, cols, X = binary_design(rng, 800, 2)
    y = (rng.random(800) < 0.3 + 0.3 * X[:, 0]).astype(float)
    path = lasso_logistic(y, X, cols, cv_rule="min")
    assert path.chosen == int(np.argmin(np.where(path.converged, path.cv_loss, np.inf)))
    loose = lasso_logistic(y, X, cols, cv_rule="1se")
    assert loose.chosen <= path.chosen
    with pytest.raises(ValueError):
        lasso_logistic(y, X, cols, cv_rule="aic")


@pytest.mark.parametrize("K", [1, 2])
def test_pure_noise_support_is_usually_empty(K):
    trials, empty = 100, 0
    for s in range(trials):
        rng = np.random.default_rng(1000 + s)
        _, cols, X = binary_design(rng, 2000, K)
        y = (rng.random(2000) < 0.5).astype(float)
        empty += not lasso_logistic(y, X, cols, seed=s).support
    assert empty / trials >= 0.9


def test_signal_is_selected():
    rng = np.random.default_rng(11)
    A, cols, X = binary_design(rng, 1000, 2)
    y = (rng.random(1000) < 0.2 + 0.6 * A[:, 0] * A[:, 1]).astype(float)
    assert (0, 1) in lasso_logistic(y, X, cols).support


def test_constant_response_and_empty_design():
    X = np.ones((10, 1))
    path = lasso_logistic(np.ones(10), X, [(0,)])
    assert path.support == []
    path = lasso_logistic(np.r_[np.ones(5), np.zeros(5)], np.zeros((10, 0)))
    assert path.support == [] and path.intercepts[0] == pytest.approx(0.0)


def test_stratified_folds_balance():
    y = np.r_[np.ones(23), np.zeros(17)]
    folds = stratified_folds(y, 5, seed=3)
    for f in range(5):
        assert abs((y[folds == f] == 1).sum() - 23 / 5) < 1
        assert abs((y[folds == f] == 0).sum() - 17 / 5) < 1
    np.testing.assert_array_equal(folds, stratified_folds(y, 5, seed=3))


# Q rebuild, class tables and BIC


def test_rebuild_q_union_and_fallback():
    Q1 = np.array([[0, 0, 1, 0], [0, 1, 0, 0]])
    Q, fb = rebuild_q([[(0,), (0, 1)], []], Q1)
    np.testing.assert_array_equal(Q, [[1, 1, 0, 0], [0, 1, 0, 0]])
    np.testing.assert_array_equal(fb, [False, True])


def test_theta_table_single_attribute_matches_m_step():
    R, Q, A, _ = simulate(SimConfig(N=300, J=56, K=7, seed=3))
    values, observed = check_response_matrix(R)
    single = np.flatnonzero(Q.sum(1) == 1)
    table = estimate_theta_multi(R, A, Q)
    tp, tm = m_step(values, ideal_matrix(Q, A), observed)
    for j in single:
        np.testing.assert_allclose(table.probs[j], [tm[j], tp[j]], atol=1e-12)


def test_theta_table_noiseless_and_empty_class():
    R, Q, A, _ = simulate(SimConfig(N=400, J=56, K=7, noise=0.0, seed=5))
    table = estimate_theta_multi(R, A, Q, eps=0.0)
    for j, q in enumerate(Q):
        want = np.zeros(2 ** q.sum())
        want[-1] = 1.0
        np.testing.assert_array_equal(table.probs[j], want)
    lonely = estimate_theta_multi(np.array([[1], [0]]), np.array([[1, 1], [1, 1]]), np.array([[1, 1]]))
    assert lonely.probs[0][0] == 0.5 and lonely.empty[0][0]


def test_theta_table_moebius_round_trip():
    table = ThetaTable([(0, 2), (1,)], [np.array([0.1, 0.3, 0.4, 0.9]), np.array([0.2, 0.7])], [None, None])
    params = table.to_params()
    np.testing.assert_allclose(params.class_table(0, np.array([1, 0, 1])), table.probs[0])
    np.testing.assert_allclose(params.class_table(1, np.array([0, 1, 0])), table.probs[1])
    assert params.coefs[0][(0, 2)] == pytest.approx(0.9 - 0.3 - 0.4 + 0.1)


def test_bic_arithmetic_and_ties():
    assert bic(-100.0, 4, 50) == pytest.approx(200 + 4 * math.log(50))
    assert bic(-100.0, 4, 50) < bic(-100.0, 6, 50)
    R, Q, A, _ = simulate(SimConfig(N=200, J=28, K=7, seed=2))
    values, observed = check_response_matrix(R)
    tp, tm = m_step(values[:, :14], ideal_matrix(Q[:14], A), observed[:, :14])
    # single-attribute items: the class table is the two-parameter fit
    sub = R[:, :14]
    report = bic_compare(sub, (Q[:14], A, tp, tm), (A, estimate_theta_multi(sub, A, Q[:14])))
    assert report["two_parameter"]["k"] == report["multi_parameter"]["k"] == 28
    assert report["two_parameter"]["n_obs"] == 200 * 14
    assert report["winner"] == "two_parameter"


@pytest.fixture(scope="module")
def dina_two_stage():
    R, Q, A, _ = simulate(SimConfig(N=1000, J=1000, K=5, seed=1))
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        model = TwoStageSLAM(5, random_state=1).fit(R)
    return Q, A, model


def test_two_parameter_data_prefers_two_parameter_bic(dina_two_stage):
    Q, A, model = dina_two_stage
    assert model.bic_["winner"] == "two_parameter"
    perm = align_columns(model.A_, A)
    np.testing.assert_array_equal(model.Q_stage1_[:, perm], Q)
    assert (model.Q_[:, perm] == Q).all(1).mean() >= 0.995
    assert model.predict_proba().shape == (1000, 1000)


@pytest.mark.slow
def test_example3_weak_second_stage_is_exact():
    R, Q, A, _ = simulate(SimConfig(N=2400, J=1200, K=3, model="multi_weak", q_design="example3", seed=1))
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        model = TwoStageSLAM(3, random_state=1).fit(R)
    perm = align_columns(model.A_, A)
    np.testing.assert_array_equal(model.Q_[:, perm], Q)
    assert model.bic_["winner"] == "multi_parameter"


def test_all_effect_mode_and_validation():
    R, Q, A, _ = simulate(SimConfig(N=300, J=12, K=3, model="multi_weak", q_design="example3", seed=4))
    est = TwoStageSLAM(3, screen="all", tau=0.5).fit_second_stage(R, A, Q)
    assert est.Q_.shape == Q.shape
    assert not hasattr(est, "bic_")
    with pytest.raises(ValueError):
        TwoStageSLAM(3, screen="all").fit_second_stage(R, A, Q)
    with pytest.raises(ValueError):
        TwoStageSLAM(3, screen="pairs").fit_second_stage(R, A, Q)
    twin = clone(TwoStageSLAM(7, stage_one=ADGEM(7, max_iter=3)))
    assert twin.stage_one.max_iter == 3
