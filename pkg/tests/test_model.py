import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from hypothesis.extra.numpy import arrays

from mectrust.model import SvmParams, TrustModel, augment, classify, local_objective, score


def test_score_examples():
    assert score(TrustModel([1, -1, 0]), [2, 1]) == 1.0
    assert score(np.zeros(4), [3.0, -2.0, 7.0]) == 0.0
    assert score([0, 0, 0.5], [9, 9]) == 0.5


def test_score_dimension_mismatch():
    with pytest.raises(ValueError):
        score([1, 2, 3], [1, 2, 3])


@pytest.mark.parametrize("w, expected", [([1.0], 1), ([0.0], -1), ([-0.3], -1)])
def test_classify_sign_rule_and_tie(w, expected):
    # zero-dimensional features: the score is the bias alone
    assert classify(w, np.zeros(0)) == expected


def test_classify_batch():
    X = np.array([[1.0], [-1.0], [0.0]])
    np.testing.assert_array_equal(classify([1.0, 0.0], X), [1, -1, -1])


def test_local_objective_examples():
    # y * score = 2 with ||w||^2 = 1: hinge inactive
    w = np.array([1.0, 0.0])
    assert local_objective(w, np.array([[2.0]]), np.array([1]), SvmParams(1.0)) == 0.5
    assert local_objective(np.zeros(2), np.array([[3.0]]), np.array([-1]), SvmParams(1.0)) == 1.0
    assert local_objective(np.array([2.0, 0.0]), np.zeros((0, 1)), np.zeros(0), SvmParams(1.0)) == 2.0


def test_default_cost_is_inverse_sample_count():
    assert SvmParams().cost(4) == 0.25
    with pytest.raises(ValueError):
        SvmParams(0.0)


def test_model_rejects_non_finite():
    with pytest.raises(ValueError):
        TrustModel([np.nan, 1.0])


def test_augment_appends_ones():
    np.testing.assert_array_equal(augment(np.array([[2.0, 3.0]])), [[2.0, 3.0, 1.0]])


finite = st.floats(-5, 5, allow_nan=False)


@settings(max_examples=60, deadline=None)
@given(w=arrays(float, 4, elements=finite), x=arrays(float, 3, elements=finite), alpha=st.floats(1e-3, 1e3))
def test_classification_invariant_to_positive_scaling(w, x, alpha):
    assert classify(w, x) == classify(alpha * w, x)


@settings(max_examples=60, deadline=None)
@given(
    X=arrays(float, (6, 3), elements=finite),
    y=arrays(np.int64, 6, elements=st.sampled_from([-1, 1])),
    w1=arrays(float, 4, elements=finite),
    w2=arrays(float, 4, elements=finite),
    lam=st.floats(0, 1),
    C=st.floats(0.01, 10),
)
def test_objective_convex_and_nonnegative(X, y, w1, w2, lam, C):
    p = SvmParams(C)
    f = lambda w: local_objective(w, X, y, p)  # noqa: E731
    assert f(w1) >= 0
    assert f(lam * w1 + (1 - lam) * w2) <= lam * f(w1) + (1 - lam) * f(w2) + 1e-9
