import itertools
import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from slamjmle.model import (
    ItemParamsMulti,
    ItemParamsTwo,
    duality_map,
    ideal_matrix,
    ideal_response_dina,
    ideal_response_dino,
    joint_loglik,
    power_set,
    prob_matrix,
    success_prob,
)
from slamjmle.validation import DimensionError, ParameterError


def bits(K):
    return arrays(np.int8, K, elements=st.integers(0, 1))


@st.composite
def q_and_a(draw, max_k=5, max_n=6, max_j=6):
    K = draw(st.integers(1, max_k))
    N = draw(st.integers(1, max_n))
    J = draw(st.integers(1, max_j))
    Q = draw(arrays(np.int8, (J, K), elements=st.integers(0, 1)))
    A = draw(arrays(np.int8, (N, K), elements=st.integers(0, 1)))
    return Q, A


@pytest.mark.parametrize(
    "a, q, expected",
    [((1, 1, 0), (1, 1, 0), 1), ((1, 0, 0), (1, 1, 0), 0), ((0, 0, 0), (0, 0, 0), 1)],
)
def test_dina_examples(a, q, expected):
    assert ideal_response_dina(a, q) == expected


@pytest.mark.parametrize(
    "a, q, expected",
    [((1, 0, 0), (1, 1, 0), 1), ((0, 0, 1), (1, 1, 0), 0), ((1, 1), (0, 0), 0)],
)
def test_dino_examples(a, q, expected):
    assert ideal_response_dino(a, q) == expected


def test_length_mismatch_raises():
    with pytest.raises(DimensionError):
        ideal_response_dina((1, 0), (1, 0, 1))
    with pytest.raises(DimensionError):
        ideal_response_dino((1,), (1, 1))


def test_multi_single_attribute():
    coefs = {(): 0.2, (0,): 0.6}
    assert success_prob("multi", (1, 0), (1, 0), coefs) == pytest.approx(0.8)
    assert success_prob("multi", (0, 0), (1, 0), coefs) == pytest.approx(0.2)


def test_multi_two_attribute_interaction():
    coefs = {(): 0.2, (0,): 0.2, (1,): 0.2, (0, 1): 0.2}
    assert success_prob("multi", (1, 1), (1, 1), coefs) == pytest.approx(0.8)
    assert success_prob("multi", (1, 0), (1, 1), coefs) == pytest.approx(0.4)


def test_multi_ignores_attributes_outside_q():
    coefs = {(): 0.1, (0,): 0.5}
    assert success_prob("multi", (1, 1), (0, 1), coefs) == pytest.approx(0.1)


def test_multi_identity_out_of_range():
    with pytest.raises(ParameterError):
        success_prob("multi", (1,), (1,), {(): 0.7, (0,): 0.6})


def test_multi_logistic_link():
    p = success_prob("multi", (1,), (1,), {(): -1.0, (0,): 2.0}, link="logistic")
    assert p == pytest.approx(1 / (1 + math.exp(-1.0)))


def test_two_parameter_success_prob():
    assert success_prob("dina", (1, 1), (1, 1), (0.8, 0.2)) == 0.8
    assert success_prob("dina", (1, 0), (1, 1), (0.8, 0.2)) == 0.2
    assert success_prob("dino", (1, 0), (1, 1), (0.8, 0.2)) == 0.8


def test_unknown_model():
    with pytest.raises(ValueError):
        success_prob("gdina", (1,), (1,), (0.8, 0.2))


def test_loglik_single_cell():
    ll = joint_loglik(np.array([[1]]), np.array([[1]]), np.array([[1]]), ItemParamsTwo([0.8], [0.2]))
    assert ll == pytest.approx(math.log(0.8))


def test_loglik_missing_cell_is_zero():
    ll = joint_loglik(np.array([[np.nan]]), np.array([[1]]), np.array([[1]]), ItemParamsTwo([0.8], [0.2]))
    assert ll == 0.0


def test_loglik_two_subjects():
    R = np.array([[1], [0]])
    ll = joint_loglik(R, np.array([[1]]), np.array([[1], [0]]), ItemParamsTwo([0.8], [0.2]))
    assert ll == pytest.approx(2 * math.log(0.8))


def test_loglik_clamps_certain_parameters():
    R = np.array([[0]])
    ll = joint_loglik(R, np.array([[1]]), np.array([[1]]), (1.0, 0.0))
    assert np.isfinite(ll)


def test_loglik_dimension_check():
    with pytest.raises(DimensionError):
        joint_loglik(np.ones((2, 3)), np.ones((2, 1)), np.ones((2, 1)), (0.8, 0.2))


def test_duality_examples():
    direct = success_prob("dino", (0, 1), (1, 1), (0.8, 0.2))
    via = 1 - success_prob("dina", (1, 0), (1, 1), (0.8, 0.2))
    assert duality_map(np.array([0, 1]), np.array([1, 1]), 0.8, 0.2) == pytest.approx(direct)
    assert via == pytest.approx(direct)
    assert duality_map(np.ones(3, dtype=int), np.array([1, 0, 1]), 0.8, 0.2) == pytest.approx(0.8)


def test_duality_exhaustive_k3():
    for a in itertools.product((0, 1), repeat=3):
        for q in itertools.product((0, 1), repeat=3):
            if not any(q):
                continue
            # dyadic parameters keep 1 - (1 - x) exact in floating point
            p = duality_map(np.array(a), np.array(q), 0.875, 0.125)
            assert p == success_prob("dino", a, q, (0.875, 0.125))


@given(bits(4), bits(4))
def test_dino_is_dual_of_dina(a, q):
    if q.any():
        assert ideal_response_dino(a, q) == 1 - ideal_response_dina(1 - a, q)


@given(bits(5))
def test_dina_empty_q_always_one(a):
    assert ideal_response_dina(a, np.zeros(5, dtype=np.int8)) == 1
    assert ideal_response_dino(a, np.zeros(5, dtype=np.int8)) == 0


@given(q_and_a())
def test_ideal_matrix_matches_scalar(qa):
    Q, A = qa
    for model, fn in (("dina", ideal_response_dina), ("dino", ideal_response_dino)):
        M = ideal_matrix(Q, A, model)
        expected = np.array([[fn(a, q) for q in Q] for a in A])
        np.testing.assert_array_equal(M, expected)


@given(q_and_a(), st.randoms(use_true_random=False))
def test_loglik_invariant_to_column_permutation(qa, rnd):
    Q, A = qa
    N, J = A.shape[0], Q.shape[0]
    perm = list(range(Q.shape[1]))
    rnd.shuffle(perm)
    R = np.array([[rnd.randint(0, 1) for _ in range(J)] for _ in range(N)])
    params = ItemParamsTwo(np.linspace(0.6, 0.9, J), np.linspace(0.1, 0.3, J))
    ll = joint_loglik(R, Q, A, params)
    assert joint_loglik(R, Q[:, perm], A[:, perm], params) == pytest.approx(ll, abs=1e-10)


@given(q_and_a(), st.floats(0.05, 0.4), st.floats(0.1, 0.5))
def test_multi_with_two_coefficients_is_dina(qa, lo, gap):
    Q, A = qa
    coefs = []
    for q in Q:
        c = {(): lo}
        active = tuple(int(k) for k in np.flatnonzero(q))
        if active:
            c[active] = gap
        coefs.append(c)
    P_multi = prob_matrix(Q, A, ItemParamsMulti(coefs), "multi")
    P_dina = prob_matrix(Q, A, (lo + gap, lo), "dina")
    # an all-zero row has an empty active set: the multi item stays at lo
    empty = ~Q.any(1)
    P_dina[:, empty] = lo
    np.testing.assert_allclose(P_multi, P_dina, atol=1e-12)


def test_item_params_two_validation():
    ItemParamsTwo([0.8], [0.2]).validate()
    with pytest.raises(ParameterError):
        ItemParamsTwo([0.2], [0.8]).validate()
    with pytest.raises(ParameterError):
        ItemParamsTwo([1.0], [0.2]).validate()
    with pytest.raises(DimensionError):
        ItemParamsTwo([0.8, 0.7], [0.2])


def test_class_table_bit_order():
    params = ItemParamsMulti([{(): 0.1, (0,): 0.2, (2,): 0.4, (0, 2): 0.2}])
    table = params.class_table(0, np.array([1, 0, 1]))
    # code bit 0 is attribute 0, bit 1 is attribute 2
    np.testing.assert_allclose(table, [0.1, 0.3, 0.5, 0.9])


def test_power_set():
    assert power_set([2, 0]) == [(), (0,), (2,), (0, 2)]
    assert power_set(range(3), include_empty=False, max_order=2) == [(0,), (1,), (2,), (0, 1), (0, 2), (1, 2)]


def test_invalid_link():
    with pytest.raises(ValueError):
        ItemParamsMulti([{(): 0.1}], link="probit")
