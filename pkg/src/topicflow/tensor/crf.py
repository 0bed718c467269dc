"""Linear-chain CRF over per-token emission scores.

All dynamic programming runs in log space. Training maximizes the exact
sequence log-likelihood; gradients come from forward-backward marginals, so
no sampling or approximation is involved.
"""

from __future__ import annotations

import numpy as np

from topicflow.tensor.functional import logsumexp
from topicflow.tensor.params import Module, Parameter


class LinearChainCrf(Module):
    def __init__(self, num_tags: int):
        self.num_tags = num_tags
        self.transitions = Parameter(np.zeros((num_tags, num_tags)))

    def _alphas(self, emissions: np.ndarray) -> np.ndarray:
        t_len = emissions.shape[0]
        alphas = np.empty_like(emissions)
        alphas[0] = emissions[0]
        trans = self.transitions.value
        for t in range(1, t_len):
            alphas[t] = emissions[t] + logsumexp(alphas[t - 1][:, None] + trans, axis=0)
        return alphas

    def _betas(self, emissions: np.ndarray) -> np.ndarray:
        t_len = emissions.shape[0]
        betas = np.zeros_like(emissions)
        trans = self.transitions.value
        for t in range(t_len - 2, -1, -1):
            betas[t] = logsumexp(trans + (emissions[t + 1] + betas[t + 1])[None, :], axis=1)
        return betas

    def log_partition(self, emissions: np.ndarray) -> float:
        return float(logsumexp(self._alphas(emissions)[-1]))

    def score(self, emissions: np.ndarray, tags) -> float:
        tags = np.asarray(tags, dtype=np.intp)
        s = float(emissions[np.arange(len(tags)), tags].sum())
        if len(tags) > 1:
            s += float(self.transitions.value[tags[:-1], tags[1:]].sum())
        return s

    def log_likelihood(self, emissions: np.ndarray, tags):
        if emissions.ndim != 2 or emissions.shape[0] < 1:
            raise ValueError("expected a non-empty (T, K) emission matrix")
        if len(tags) != emissions.shape[0]:
            raise ValueError("tag sequence length must match emissions")
        alphas = self._alphas(emissions)
        betas = self._betas(emissions)
        log_z = float(logsumexp(alphas[-1]))
        ll = self.score(emissions, tags) - log_z
        return ll, (emissions, np.asarray(tags, dtype=np.intp), alphas, betas, log_z)

    def log_likelihood_backward(self, dll: float, cache) -> np.ndarray:
        """Accumulates the transition gradient; returns d(ll)/d(emissions) * dll."""
        emissions, tags, alphas, betas, log_z = cache
        t_len, k = emissions.shape
        unary = np.exp(alphas + betas - log_z)
        demissions = -unary
        demissions[np.arange(t_len), tags] += 1.0
        if t_len > 1:
            trans = self.transitions.value
            dtrans = np.zeros_like(trans)
            for t in range(1, t_len):
                pair = np.exp(alphas[t - 1][:, None] + trans
                              + (emissions[t] + betas[t])[None, :] - log_z)
                dtrans -= pair
            np.add.at(dtrans, (tags[:-1], tags[1:]), 1.0)
            self.transitions.grad += dtrans * dll
        return demissions * dll

    def viterbi(self, emissions: np.ndarray) -> list[int]:
        """Best tag sequence; ties resolve to the lexicographically smallest path."""
        if emissions.ndim != 2 or emissions.shape[0] < 1:
            raise ValueError("expected a non-empty (T, K) emission matrix")
        t_len, k = emissions.shape
        trans = self.transitions.value
        # Backward recursion so that taking the first argmax at every step
        # picks the smallest tag index among equally scoring paths.
        delta = emissions[t_len - 1].copy()
        psi = np.zeros((t_len - 1, k), dtype=np.intp)
        for t in range(t_len - 2, -1, -1):
            scores = trans + delta[None, :]
            psi[t] = scores.argmax(axis=1)
            delta = emissions[t] + scores[np.arange(k), psi[t]]
        path = [int(delta.argmax())]
        for t in range(t_len - 1):
            path.append(int(psi[t, path[-1]]))
        return path
