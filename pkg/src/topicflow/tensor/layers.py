"""Trainable layers with explicit forward/backward passes.

Every ``forward`` returns ``(output, cache)``; the matching ``backward``
consumes the cache, accumulates parameter gradients in place and returns the
gradient w.r.t. its inputs. No graph is recorded: callers chain backward
calls in reverse order themselves.
"""

from __future__ import annotations

import numpy as np

from topicflow.tensor.functional import ActivationKind, activation, activation_backward, sigmoid
from topicflow.tensor.params import Module, Parameter, glorot_uniform


class Dense(Module):
    """Affine layer ``act(x @ W + b)``; accepts 1-D or 2-D inputs."""

    def __init__(self, in_dim: int, out_dim: int, rng: np.random.Generator,
                 act: ActivationKind = "linear"):
        self.W = Parameter(glorot_uniform(rng, in_dim, out_dim))
        self.b = Parameter(np.zeros(out_dim))
        self.act = act

    def forward(self, x: np.ndarray):
        pre = x @ self.W.value + self.b.value
        out = activation(pre, self.act)
        return out, (x, out)

    def backward(self, dout: np.ndarray, cache) -> np.ndarray:
        x, out = cache
        dpre = activation_backward(dout, out, self.act)
        if x.ndim == 1:
            self.W.grad += np.outer(x, dpre)
            self.b.grad += dpre
        else:
            self.W.grad += x.T @ dpre
            self.b.grad += dpre.sum(axis=0)
        return dpre @ self.W.value.T


class Dropout:
    """Inverted dropout; identity when eval-mode or keep_prob == 1."""

    def __init__(self, keep_prob: float):
        if not 0.0 < keep_prob <= 1.0:
            raise ValueError(f"keep_prob must be in (0, 1], got {keep_prob}")
        self.keep_prob = keep_prob

    def forward(self, x: np.ndarray, rng: np.random.Generator | None, training: bool):
        if not training or self.keep_prob >= 1.0:
            return x, None
        if rng is None:
            raise ValueError("training-mode dropout needs an rng")
        mask = (rng.random(x.shape) < self.keep_prob) / self.keep_prob
        return x * mask, mask

    def backward(self, dout: np.ndarray, mask) -> np.ndarray:
        if mask is None:
            return dout
        return dout * mask


class Embedding(Module):
    """Token-index lookup over a (V, d) matrix; scatter-add gradients if trainable."""

    def __init__(self, vectors: np.ndarray, trainable: bool):
        self.vectors = Parameter(vectors)
        self.trainable = trainable

    @property
    def dim(self) -> int:
        return self.vectors.value.shape[1]

    def forward(self, indices):
        idx = np.asarray(indices, dtype=np.intp)
        return self.vectors.value[idx], idx

    def backward(self, dout: np.ndarray, idx: np.ndarray) -> None:
        if self.trainable:
            np.add.at(self.vectors.grad, idx, dout)

    def parameters(self) -> dict[str, Parameter]:
        # Frozen tables stay out of optimizer/gradient traversal but are
        # still saved through explicit snapshot calls by their owners.
        if not self.trainable:
            return {}
        return {"vectors": self.vectors}


class TextCnn(Module):
    """Multi-width 1-D convolution bank over an embedded token sequence.

    Same-padding uses a caller-provided pad row (the padding token's
    embedding), each filter is max-pooled over time, and the pooled outputs
    are concatenated width-by-width: output length = len(widths) * filters.
    """

    def __init__(self, embed_dim: int, widths: tuple[int, ...], filters_per_width: int,
                 rng: np.random.Generator, act: ActivationKind = "relu"):
        if not widths:
            raise ValueError("need at least one convolution width")
        self.widths = tuple(sorted(widths))
        self.filters_per_width = filters_per_width
        self.embed_dim = embed_dim
        self.act = act
        self.conv_w = [Parameter(glorot_uniform(rng, w * embed_dim, filters_per_width))
                       for w in self.widths]
        self.conv_b = [Parameter(np.zeros(filters_per_width)) for _ in self.widths]

    @property
    def out_dim(self) -> int:
        return len(self.widths) * self.filters_per_width

    def forward(self, x: np.ndarray, pad_row: np.ndarray):
        if x.ndim != 2 or x.shape[0] < 1:
            raise ValueError("expected a non-empty (T, d) embedded sequence")
        t = x.shape[0]
        feats = []
        caches = []
        for wi, w in enumerate(self.widths):
            left, right = (w - 1) // 2, w // 2
            if left or right:
                xp = np.concatenate([np.tile(pad_row, (left, 1)), x, np.tile(pad_row, (right, 1))])
            else:
                xp = x
            windows = np.lib.stride_tricks.sliding_window_view(xp, (w, self.embed_dim))
            windows = windows.reshape(t, w * self.embed_dim)
            pre = windows @ self.conv_w[wi].value + self.conv_b[wi].value
            out = activation(pre, self.act)
            arg = out.argmax(axis=0)
            feats.append(out[arg, np.arange(self.filters_per_width)])
            caches.append((windows, out, arg, left, right))
        return np.concatenate(feats), (t, caches)

    def backward(self, dout: np.ndarray, cache):
        """Returns (dx, dpad_row)."""
        t, caches = cache
        f = self.filters_per_width
        dx = np.zeros((t, self.embed_dim))
        dpad = np.zeros(self.embed_dim)
        for wi, w in enumerate(self.widths):
            windows, out, arg, left, right = caches[wi]
            dpool = dout[wi * f:(wi + 1) * f]
            dconv = np.zeros_like(out)
            dconv[arg, np.arange(f)] = dpool
            dpre = activation_backward(dconv, out, self.act)
            self.conv_w[wi].grad += windows.T @ dpre
            self.conv_b[wi].grad += dpre.sum(axis=0)
            dwin = (dpre @ self.conv_w[wi].value.T).reshape(t, w, self.embed_dim)
            dxp = np.zeros((t + left + right, self.embed_dim))
            for k in range(w):
                dxp[k:k + t] += dwin[:, k, :]
            dx += dxp[left:left + t]
            if left:
                dpad += dxp[:left].sum(axis=0)
            if right:
                dpad += dxp[left + t:].sum(axis=0)
        return dx, dpad


class LstmCell(Module):
    """Standard LSTM cell, gate layout [input, forget, cell, output].

    ``act`` replaces the tanh used for the candidate and the cell-state
    output transform (the knob most frameworks call the cell activation).
    """

    def __init__(self, in_dim: int, hidden: int, rng: np.random.Generator,
                 act: ActivationKind = "tanh"):
        self.hidden = hidden
        self.act = act
        self.W_x = Parameter(glorot_uniform(rng, in_dim, 4 * hidden))
        self.W_h = Parameter(glorot_uniform(rng, hidden, 4 * hidden))
        b = np.zeros(4 * hidden)
        b[hidden:2 * hidden] = 1.0  # forget-gate bias
        self.b = Parameter(b)

    def init_state(self):
        return np.zeros(self.hidden), np.zeros(self.hidden)

    def step(self, x: np.ndarray, state):
        h, c = state
        hid = self.hidden
        pre = x @ self.W_x.value + h @ self.W_h.value + self.b.value
        i = sigmoid(pre[:hid])
        f = sigmoid(pre[hid:2 * hid])
        g = activation(pre[2 * hid:3 * hid], self.act)
        o = sigmoid(pre[3 * hid:])
        c2 = f * c + i * g
        tc2 = activation(c2, self.act)
        h2 = o * tc2
        cache = (x, h, c, i, f, g, o, tc2)
        return h2, (h2, c2), cache

    def step_backward(self, dout: np.ndarray, dstate, cache):
        x, h, c, i, f, g, o, tc2 = cache
        dh2, dc2 = dstate if dstate is not None else (0.0, 0.0)
        dh2 = dh2 + dout
        do = dh2 * tc2
        dc = dc2 + activation_backward(dh2 * o, tc2, self.act)
        di = dc * g
        df = dc * c
        dg = dc * i
        dc_prev = dc * f
        dpre = np.concatenate([
            di * i * (1.0 - i),
            df * f * (1.0 - f),
            activation_backward(dg, g, self.act),
            do * o * (1.0 - o),
        ])
        self.W_x.grad += np.outer(x, dpre)
        self.W_h.grad += np.outer(h, dpre)
        self.b.grad += dpre
        dx = dpre @ self.W_x.value.T
        dh_prev = dpre @ self.W_h.value.T
        return dx, (dh_prev, dc_prev)


class GruCell(Module):
    """GRU cell, gate layout [update, reset, candidate]."""

    def __init__(self, in_dim: int, hidden: int, rng: np.random.Generator):
        self.hidden = hidden
        self.W_x = Parameter(glorot_uniform(rng, in_dim, 3 * hidden))
        self.W_h = Parameter(glorot_uniform(rng, hidden, 3 * hidden))
        self.b_x = Parameter(np.zeros(3 * hidden))
        self.b_h = Parameter(np.zeros(3 * hidden))

    def init_state(self):
        return np.zeros(self.hidden)

    def step(self, x: np.ndarray, state):
        h = state
        hid = self.hidden
        px = x @ self.W_x.value + self.b_x.value
        ph = h @ self.W_h.value + self.b_h.value
        z = sigmoid(px[:hid] + ph[:hid])
        r = sigmoid(px[hid:2 * hid] + ph[hid:2 * hid])
        hn = ph[2 * hid:]
        n = np.tanh(px[2 * hid:] + r * hn)
        h2 = (1.0 - z) * n + z * h
        cache = (x, h, z, r, n, hn)
        return h2, h2, cache

    def step_backward(self, dout: np.ndarray, dstate, cache):
        x, h, z, r, n, hn = cache
        dh2 = dout + (dstate if dstate is not None else 0.0)
        hid = self.hidden
        dz = dh2 * (h - n)
        dn = dh2 * (1.0 - z)
        dh_prev = dh2 * z
        dn_pre = dn * (1.0 - n * n)
        dr = dn_pre * hn
        dhn = dn_pre * r
        dz_pre = dz * z * (1.0 - z)
        dr_pre = dr * r * (1.0 - r)
        dpx = np.concatenate([dz_pre, dr_pre, dn_pre])
        dph = np.concatenate([dz_pre, dr_pre, dhn])
        self.W_x.grad += np.outer(x, dpx)
        self.W_h.grad += np.outer(h, dph)
        self.b_x.grad += dpx
        self.b_h.grad += dph
        dx = dpx @ self.W_x.value.T
        dh_prev = dh_prev + dph @ self.W_h.value.T
        return dx, dh_prev


class Rnn(Module):
    """Unrolls a recurrent cell over a (T, d) sequence."""

    def __init__(self, cell: LstmCell | GruCell):
        self.cell = cell

    def forward(self, xs: np.ndarray, state=None):
        if state is None:
            state = self.cell.init_state()
        outs = []
        caches = []
        for t in range(xs.shape[0]):
            out, state, cache = self.cell.step(xs[t], state)
            outs.append(out)
            caches.append(cache)
        return np.stack(outs), (caches, state)

    def backward(self, douts: np.ndarray, cache, dstate_final=None):
        caches, _ = cache
        dstate = dstate_final
        dxs = []
        for t in range(len(caches) - 1, -1, -1):
            dx, dstate = self.cell.step_backward(douts[t], dstate, caches[t])
            dxs.append(dx)
        dxs.reverse()
        return np.stack(dxs), dstate


class BiRnn(Module):
    """Bidirectional wrapper; output is [forward_t ; backward_t] per step."""

    def __init__(self, forward_cell, backward_cell):
        self.fwd = Rnn(forward_cell)
        self.bwd = Rnn(backward_cell)

    @property
    def out_dim(self) -> int:
        return self.fwd.cell.hidden + self.bwd.cell.hidden

    def forward(self, xs: np.ndarray):
        out_f, cache_f = self.fwd.forward(xs)
        out_b_rev, cache_b = self.bwd.forward(xs[::-1])
        out_b = out_b_rev[::-1]
        return np.concatenate([out_f, out_b], axis=1), (cache_f, cache_b)

    def final_states(self, out: np.ndarray) -> np.ndarray:
        """[last forward state ; last backward state] of a forward() output."""
        hf = self.fwd.cell.hidden
        return np.concatenate([out[-1, :hf], out[0, hf:]])

    def backward(self, dout: np.ndarray, cache):
        cache_f, cache_b = cache
        hf = self.fwd.cell.hidden
        dx_f, _ = self.fwd.backward(dout[:, :hf], cache_f)
        dx_b_rev, _ = self.bwd.backward(dout[::-1, hf:], cache_b)
        return dx_f + dx_b_rev[::-1]
