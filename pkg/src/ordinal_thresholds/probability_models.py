"""Ordinal PMFs and the cumulative-logit / adjacent-categories-logit models.

Labels are 1-based throughout the public API (``1..K``); arrays are indexed
from 0 internally, so ``probs[y - 1]`` is the mass of label ``y``.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.special import expit, logsumexp

PROB_ATOL = 1e-12

ACUTE_PATTERN = (0.0, 0.5, 0.9, 1.5, 4.0, 6.5, 7.1, 7.6, 8.0)
GRAVE_PATTERN = (0.0, 1.0, 2.0, 3.0, 5.0, 4.0, 6.0, 7.0, 8.0)


def as_pmf(probs, atol: float = PROB_ATOL) -> np.ndarray:
    """Validate ``probs`` as a PMF over K >= 3 labels and return it as an array."""
    p = np.asarray(probs, dtype=float)
    if p.ndim != 1 or p.size < 3:
        raise ValueError(f"a PMF needs K >= 3 entries, got shape {p.shape}")
    if np.any(p < -atol) or np.any(p > 1 + atol):
        raise ValueError("PMF entries must lie in [0, 1]")
    if abs(p.sum() - 1.0) > max(atol, 1e-12 * p.size):
        raise ValueError(f"PMF entries sum to {p.sum()!r}, not 1")
    return p


def mode_set(probs) -> set[int]:
    p = np.asarray(probs, dtype=float)
    top = p.max()
    return {int(k) + 1 for k in np.flatnonzero(p == top)}


def is_unimodal(probs) -> bool:
    """True iff the PMF rises (non-strictly) to every mode and falls after it."""
    p = np.asarray(probs, dtype=float)
    d = np.diff(p)
    for m in mode_set(p):
        if np.any(d[: m - 1] < 0) or np.any(d[m - 1 :] > 0):
            return False
    return True


@dataclass(frozen=True)
class BiasVector:
    """Bias parameters ``b_1..b_{K-1}`` with ``b_1 = 0``.

    ``ordered=True`` additionally requires ``b`` to be non-decreasing.
    """

    values: np.ndarray
    ordered: bool = False

    def __post_init__(self):
        b = np.array(self.values, dtype=float)
        if b.ndim != 1 or b.size < 2:
            raise ValueError("a bias vector needs K - 1 >= 2 entries")
        if b[0] != 0.0:
            raise ValueError(f"b_1 must be exactly 0, got {b[0]!r}")
        if self.ordered and np.any(np.diff(b) < 0):
            raise ValueError("ordered bias vector is not non-decreasing")
        b.setflags(write=False)
        object.__setattr__(self, "values", b)

    @property
    def K(self) -> int:
        return self.values.size + 1

    @property
    def is_sorted(self) -> bool:
        return bool(np.all(np.diff(self.values) >= 0))

    def __len__(self):
        return self.values.size

    def __iter__(self):
        return iter(self.values)

    def shifted(self, c: float) -> np.ndarray:
        """Raw translated values ``b + c``; no longer pinned at 0, hence an array."""
        return self.values + c

    @classmethod
    def equal_interval(cls, delta: float, K: int) -> "BiasVector":
        return cls(delta * np.arange(K - 1, dtype=float), ordered=True)

    @classmethod
    def acute(cls, delta: float, K: int = 10) -> "BiasVector":
        if K != 10:
            raise ValueError("the unequal-interval bias vector is only defined for K=10")
        return cls(delta * np.array(ACUTE_PATTERN), ordered=True)

    @classmethod
    def grave(cls, delta: float, K: int = 10) -> "BiasVector":
        if K != 10:
            raise ValueError("the non-ordered bias vector is only defined for K=10")
        return cls(delta * np.array(GRAVE_PATTERN), ordered=False)


def _bias_array(b) -> np.ndarray:
    if isinstance(b, BiasVector):
        return b.values
    return np.asarray(b, dtype=float)


def cl_pmf(u: float, b) -> np.ndarray:
    """Cumulative-logit PMF: ``P(Y <= k) = sigmoid(b_k - u)``."""
    bv = _bias_array(b)
    if np.any(np.diff(bv) < 0):
        raise ValueError("CL requires ordered bias")
    cum = np.concatenate(([0.0], expit(bv - u), [1.0]))
    p = np.diff(cum)
    p[p < 0] = 0.0
    return p


def acl_log_pmf(u: float, b) -> np.ndarray:
    bv = _bias_array(b)
    logits = np.concatenate(([0.0], -np.cumsum(bv - u)))
    return logits - logsumexp(logits)


def acl_pmf(u: float, b) -> np.ndarray:
    """Adjacent-categories-logit PMF: ``P(k+1) / P(k) = exp(u - b_k)``."""
    p = np.exp(acl_log_pmf(u, b))
    return p / p.sum()


def unimodal_region_scan(model: str, b, u_grid) -> np.ndarray:
    pmf = {"cl": cl_pmf, "acl": acl_pmf}[model.lower()]
    return np.array([is_unimodal(pmf(u, b)) for u in np.asarray(u_grid, dtype=float)])


def _delta1_gap(delta: float, u: float) -> float:
    # b_1 = 0, b_2 = delta
    return 2.0 * expit(-u) - expit(delta - u)


def _delta2_gap(delta: float, u: float, K: int) -> float:
    b_last = delta * (K - 2)
    b_prev = delta * (K - 3)
    return 2.0 * expit(u - b_last) - expit(u - b_prev)


def cl_delta_thresholds(u: float, K: int, delta_max: float = 100.0,
                        tol: float = 1e-10) -> tuple[float, float]:
    """Scale levels above which the equal-interval CL PMF is monotone toward label 1 / K.

    The first is closed-form; the second has no explicit expression and is
    found by bisection on ``(0, delta_max]``. A level of 0 means the condition
    already holds for every positive step.
    """
    if u <= 0:
        delta1 = 0.0
    else:
        delta1 = float(-np.log((1.0 - np.exp(-u)) / 2.0))

    def gap(d):
        return _delta2_gap(d, u, K)

    # the last-label condition holds where gap <= 0
    lo, hi = 1e-12, delta_max
    if gap(lo) <= 0:
        delta2 = 0.0
    else:
        if gap(hi) > 0:
            raise ValueError(f"bisection does not bracket a root on (0, {delta_max}] for u={u}")
        while hi - lo > tol:
            mid = 0.5 * (lo + hi)
            if gap(mid) > 0:
                lo = mid
            else:
                hi = mid
        delta2 = hi
    return delta1, float(delta2)
