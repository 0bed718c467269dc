"""Stateless numerical primitives with paired backward rules."""

from __future__ import annotations

from typing import Literal

import numpy as np

ActivationKind = Literal["linear", "relu", "tanh", "sigmoid"]


def sigmoid(x: np.ndarray) -> np.ndarray:
    # Split by sign to stay finite for large |x|.
    out = np.empty_like(x)
    pos = x >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-x[pos]))
    ex = np.exp(x[~pos])
    out[~pos] = ex / (1.0 + ex)
    return out


def activation(x: np.ndarray, kind: ActivationKind) -> np.ndarray:
    if kind == "linear":
        return x
    if kind == "relu":
        return np.maximum(x, 0.0)
    if kind == "tanh":
        return np.tanh(x)
    if kind == "sigmoid":
        return sigmoid(x)
    raise ValueError(f"unknown activation {kind!r}")


def activation_backward(dout: np.ndarray, out: np.ndarray, kind: ActivationKind) -> np.ndarray:
    """Gradient through an activation given its *output* value."""
    if kind == "linear":
        return dout
    if kind == "relu":
        return dout * (out > 0.0)
    if kind == "tanh":
        return dout * (1.0 - out * out)
    if kind == "sigmoid":
        return dout * out * (1.0 - out)
    raise ValueError(f"unknown activation {kind!r}")


def softmax(logits: np.ndarray, axis: int = -1) -> np.ndarray:
    """Stable softmax; output sums to 1 along ``axis``."""
    z = logits - np.max(logits, axis=axis, keepdims=True)
    e = np.exp(z)
    return e / np.sum(e, axis=axis, keepdims=True)


def log_softmax(logits: np.ndarray, axis: int = -1) -> np.ndarray:
    z = logits - np.max(logits, axis=axis, keepdims=True)
    return z - np.log(np.sum(np.exp(z), axis=axis, keepdims=True))


def logsumexp(x: np.ndarray, axis: int = -1) -> np.ndarray:
    m = np.max(x, axis=axis, keepdims=True)
    out = m.squeeze(axis) + np.log(np.sum(np.exp(x - m), axis=axis))
    return out


def softmax_cross_entropy(logits: np.ndarray, target: int) -> tuple[float, np.ndarray]:
    """Cross-entropy of a single target class; returns (loss, dloss/dlogits)."""
    logp = log_softmax(logits)
    loss = -float(logp[target])
    dlogits = np.exp(logp)
    dlogits[target] -= 1.0
    return loss, dlogits
