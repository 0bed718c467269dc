import numpy as np
import pytest

from topicflow.tensor import (
    activation,
    activation_backward,
    log_softmax,
    logsumexp,
    sigmoid,
    softmax,
    softmax_cross_entropy,
)


def test_softmax_uniform_on_equal_logits():
    out = softmax(np.zeros(4))
    np.testing.assert_allclose(out, np.full(4, 0.25), atol=1e-12)


def test_softmax_reference_values():
    out = softmax(np.array([2.0, 1.0, 0.0]))
    np.testing.assert_allclose(out, [0.6652, 0.2447, 0.0900], atol=1e-4)


def test_softmax_sums_to_one_and_nonnegative():
    rng = np.random.default_rng(11)
    for _ in range(50):
        logits = rng.normal(scale=10.0, size=rng.integers(1, 12))
        out = softmax(logits)
        assert abs(out.sum() - 1.0) <= 1e-12
        assert (out >= 0.0).all()


def test_softmax_shift_invariance():
    rng = np.random.default_rng(3)
    logits = rng.normal(size=7)
    base = softmax(logits)
    for c in (-1e3, -2.5, 0.017, 1e4):
        shifted = softmax(logits + c)
        assert shifted.argmax() == base.argmax()
        np.testing.assert_allclose(shifted, base, atol=1e-12)


def test_softmax_extreme_logits_stay_finite():
    out = softmax(np.array([1e4, 0.0, -1e4]))
    assert np.all(np.isfinite(out))
    assert abs(out.sum() - 1.0) <= 1e-12


def test_log_softmax_matches_log_of_softmax():
    rng = np.random.default_rng(5)
    logits = rng.normal(size=9)
    np.testing.assert_allclose(log_softmax(logits), np.log(softmax(logits)), atol=1e-12)


def test_logsumexp_against_direct_sum():
    rng = np.random.default_rng(8)
    x = rng.normal(size=(4, 6))
    np.testing.assert_allclose(logsumexp(x, axis=1), np.log(np.exp(x).sum(axis=1)), atol=1e-12)
    assert np.isfinite(logsumexp(np.array([1e4, 1e4])))


def test_sigmoid_stable_at_extremes():
    vals = sigmoid(np.array([-1e4, -30.0, 0.0, 30.0, 1e4]))
    assert np.all(np.isfinite(vals))
    assert vals[2] == 0.5
    assert vals[0] >= 0.0 and vals[-1] <= 1.0


def test_activation_backward_matches_numeric():
    rng = np.random.default_rng(13)
    x = rng.normal(size=20) + 0.3  # keep relu inputs away from the kink
    for kind in ("linear", "relu", "tanh", "sigmoid"):
        out = activation(x, kind)
        dout = rng.normal(size=20)
        analytic = activation_backward(dout, out, kind)
        h = 1e-6
        numeric = (activation(x + h, kind) - activation(x - h, kind)) / (2 * h) * dout
        np.testing.assert_allclose(analytic, numeric, atol=1e-7)


def test_activation_rejects_unknown_kind():
    with pytest.raises(ValueError):
        activation(np.zeros(2), "swish")


def test_cross_entropy_loss_and_gradient():
    logits = np.array([2.0, 1.0, 0.0])
    loss, dlogits = softmax_cross_entropy(logits, 0)
    assert loss == pytest.approx(-np.log(softmax(logits)[0]), abs=1e-12)
    h = 1e-6
    for k in range(3):
        bumped = logits.copy()
        bumped[k] += h
        lp, _ = softmax_cross_entropy(bumped, 0)
        bumped[k] -= 2 * h
        lm, _ = softmax_cross_entropy(bumped, 0)
        assert dlogits[k] == pytest.approx((lp - lm) / (2 * h), abs=1e-8)
