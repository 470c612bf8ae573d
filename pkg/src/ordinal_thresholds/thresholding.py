"""Threshold labeling and the optimal-threshold dynamic program."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .losses import TaskLoss
from .probability_models import _bias_array

TIE_TOL = 1e-12


@dataclass(frozen=True)
class ThresholdVector:
    """Thresholds ``t_1..t_{K-1}``; ``risk`` and ``assignment`` are set by the DP."""

    t: np.ndarray
    risk: float | None = None
    assignment: np.ndarray | None = None

    def __post_init__(self):
        t = np.array(self.t, dtype=float)
        if t.ndim != 1:
            raise ValueError("thresholds must be a vector")
        t.setflags(write=False)
        object.__setattr__(self, "t", t)

    @property
    def K(self) -> int:
        return self.t.size + 1

    def __call__(self, u):
        return h_thr(u, self.t)


def h_thr(u, t):
    """``1 + #{k : u >= t_k}``; works elementwise on arrays of u."""
    tv = t.t if isinstance(t, ThresholdVector) else np.asarray(t, dtype=float)
    u = np.asarray(u, dtype=float)
    out = 1 + np.sum(u[..., None] >= tv, axis=-1)
    return int(out) if out.ndim == 0 else out


def h_min_rule(u, b):
    """``min({k : u < b_k} | {K})``."""
    bv = _bias_array(b)
    K = bv.size + 1
    u = np.asarray(u, dtype=float)
    below = u[..., None] < bv
    out = np.where(below.any(axis=-1), np.argmax(below, axis=-1) + 1, K)
    return int(out) if out.ndim == 0 else out


def conditional_risks(cpds, ell: TaskLoss) -> np.ndarray:
    """``R[i, k-1] = sum_y p_{i,y} ell(k, y)``."""
    p = np.atleast_2d(np.asarray(cpds, dtype=float))
    return p @ ell.matrix(p.shape[1]).T


def bayes_prediction(cpd_row, ell: TaskLoss) -> int:
    """Label minimising the conditional task risk; ties go to the lowest label."""
    r = conditional_risks(cpd_row, ell)[0]
    return int(np.flatnonzero(r <= r.min() + TIE_TOL)[0]) + 1


def _aggregate(a_values, cost):
    """Sum cost rows over equal a-values; returns sorted distinct values and summed rows."""
    u, inv = np.unique(np.asarray(a_values, dtype=float), return_inverse=True)
    agg = np.zeros((u.size, cost.shape[1]))
    np.add.at(agg, inv.ravel(), cost)
    return u, agg


def best_monotone_assignment(cost: np.ndarray):
    """Non-decreasing labels g_1 <= ... <= g_M (1-based) minimising ``sum_j cost[j, g_j - 1]``.

    O(M K): suffix DP with running minima. Among optimal assignments the
    lexicographically smallest one is returned.
    """
    M, K = cost.shape
    # G[j, k]: best cost of positions j.. with g_j = k
    G = np.empty((M + 1, K))
    G[M] = 0.0
    for j in range(M - 1, -1, -1):
        tail = np.minimum.accumulate(G[j + 1][::-1])[::-1]  # min over k' >= k
        G[j] = cost[j] + tail
    g = np.empty(M, dtype=int)
    lo = 0
    for j in range(M):
        row = G[j, lo:]
        k = lo + int(np.flatnonzero(row <= row.min() + TIE_TOL)[0])
        g[j] = k + 1
        lo = k
    return g, float(cost[np.arange(M), g - 1].sum())


def thresholds_from_assignment(u: np.ndarray, g: np.ndarray, K: int) -> np.ndarray:
    """Midpoint thresholds realising labels ``g`` at sorted distinct positions ``u``."""
    t = np.empty(K - 1)
    for k in range(1, K):
        above = np.flatnonzero(g > k)
        if above.size == 0:
            t[k - 1] = u[-1] + 1.0
        elif above[0] == 0:
            t[k - 1] = u[0] - 1.0
        else:
            j = above[0]
            t[k - 1] = 0.5 * (u[j - 1] + u[j])
    return t


def optimal_thresholds(a_values, cpds, ell: TaskLoss, weights=None) -> ThresholdVector:
    """Thresholds minimising ``sum_i w_i sum_y p_{i,y} ell(h_thr(a_i; t), y)`` exactly."""
    a = np.asarray(a_values, dtype=float).ravel()
    p = np.atleast_2d(np.asarray(cpds, dtype=float))
    if a.size == 0 or p.shape[0] != a.size:
        raise ValueError("need one cpd row per a-value and at least one point")
    w = np.full(a.size, 1.0 / a.size) if weights is None else np.asarray(weights, dtype=float)
    cost = w[:, None] * conditional_risks(p, ell)
    u, agg = _aggregate(a, cost)
    g, risk = best_monotone_assignment(agg)
    t = thresholds_from_assignment(u, g, p.shape[1])
    return ThresholdVector(t, risk, g)


def optimal_thresholds_from_sample(a_values, y, K: int, ell: TaskLoss) -> ThresholdVector:
    """Sample variant: weights 1/n and one-hot CPDs."""
    y = np.asarray(y, dtype=int)
    onehot = np.zeros((y.size, K))
    onehot[np.arange(y.size), y - 1] = 1.0
    return optimal_thresholds(a_values, onehot, ell)
