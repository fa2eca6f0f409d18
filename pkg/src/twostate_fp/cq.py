"""Backward-Euler convolution quadrature weights.

``d_j`` are the power-series coefficients of ``((1 - zeta) / tau) ** beta``.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np


@dataclass(frozen=True, eq=False)
class CqWeights:
    beta: float
    tau: float
    g: np.ndarray  # coefficients of (1 - zeta) ** beta
    d: np.ndarray  # tau ** -beta * g

    def __len__(self) -> int:
        return self.d.size


def binomial_series(beta: float, count: int) -> np.ndarray:
    """First ``count`` coefficients of ``(1 - zeta) ** beta`` by the ratio recurrence."""
    j = np.arange(1, count, dtype=float)
    g = np.empty(count)
    g[0] = 1.0
    g[1:] = np.cumprod((j - 1.0 - beta) / j)
    return g


def cq_weights(beta: float, tau: float, count: int) -> CqWeights:
    if not 0.0 <= beta <= 1.0:
        raise ValueError(f"beta must lie in [0, 1], got {beta}")
    if not tau > 0.0:
        raise ValueError(f"tau must be positive, got {tau}")
    if int(count) != count or count < 1:
        raise ValueError(f"count must be a positive integer, got {count}")
    g = binomial_series(beta, int(count))
    d = g * tau ** (-beta)
    g.flags.writeable = False
    d.flags.writeable = False
    return CqWeights(float(beta), float(tau), g, d)


def history_sum(weights: CqWeights, history: Sequence[np.ndarray], n: int) -> np.ndarray:
    """``sum_{i=1}^{n-1} d_i v^{n-i}`` where ``history[m - 1]`` is ``v^m``.

    The ``i = 0`` term belongs to the implicit part of a step and is not
    included.
    """
    if n < 1:
        raise ValueError("n must be >= 1")
    if len(history) < n - 1:
        raise ValueError(f"history holds {len(history)} levels, step {n} needs {n - 1}")
    if n - 1 >= len(weights):
        raise ValueError("not enough weights for this step")
    if n == 1:
        if len(history):
            return np.zeros_like(np.asarray(history[0], dtype=float))
        return np.zeros(0)
    stack = np.asarray(history[: n - 1], dtype=float)
    if stack.ndim < 2:
        raise ValueError("history entries must be equal-length arrays")
    # v^{n-1}, ..., v^1 paired with d_1, ..., d_{n-1}
    return weights.d[n - 1 : 0 : -1] @ stack
