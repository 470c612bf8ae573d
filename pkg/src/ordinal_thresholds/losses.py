"""Binary base losses, their all-threshold / immediate-threshold compositions,
task losses, and piecewise-linear structure."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .probability_models import _bias_array

PHI_NAMES = ("logi", "hing", "ramp", "smhi", "sqhi", "expo", "abso", "squa")
PHI_CODES = {name: i for i, name in enumerate(PHI_NAMES)}

# u -> 1(u <= 0) upper bounds; abso/squa are V-shaped, and logi only bounds
# it after division by log 2 (it equals log 2 at u = 0)
BOUNDING_PHIS = ("hing", "ramp", "smhi", "sqhi", "expo")
CONVEX_PHIS = ("logi", "hing", "smhi", "sqhi", "expo", "abso", "squa")
PL_KNOTS = {"hing": 1, "abso": 1, "ramp": 2}
FB_PHIS = ("hing", "ramp", "smhi", "sqhi")


@dataclass(frozen=True)
class BasePhi:
    name: str
    s: float = 1.0  # ramp height; ignored by other kinds

    def __post_init__(self):
        if self.name not in PHI_CODES:
            raise ValueError(f"unknown base loss {self.name!r}; expected one of {PHI_NAMES}")
        if self.name == "ramp" and not self.s > 0:
            raise ValueError("ramp height s must be positive")

    @property
    def code(self) -> int:
        return PHI_CODES[self.name]

    def __call__(self, u):
        return phi_value(self, u)

    def derivative(self, u):
        return phi_derivative(self, u)


def phi_value(phi: BasePhi, u):
    u = np.asarray(u, dtype=float)
    name = phi.name
    if name == "logi":
        out = np.logaddexp(0.0, -u)
    elif name == "hing":
        out = np.maximum(1.0 - u, 0.0)
    elif name == "ramp":
        out = np.minimum(np.maximum(1.0 - u, 0.0), phi.s)
    elif name == "smhi":
        out = np.where(u <= 0, 1.0 - 2.0 * u, np.maximum(1.0 - u, 0.0) ** 2)
    elif name == "sqhi":
        out = np.maximum(1.0 - u, 0.0) ** 2
    elif name == "expo":
        out = np.exp(-u)
    elif name == "abso":
        out = np.abs(1.0 - u)
    else:
        out = (1.0 - u) ** 2
    return out[()] if out.ndim == 0 else out


def phi_derivative(phi: BasePhi, u):
    """Derivative, with a fixed subgradient at kinks (0 for hinge/ramp corners
    and the mean of the one-sided slopes, also 0, for abso)."""
    u = np.asarray(u, dtype=float)
    name = phi.name
    if name == "logi":
        out = -1.0 / (1.0 + np.exp(u))
    elif name == "hing":
        out = np.where(u < 1.0, -1.0, 0.0)
    elif name == "ramp":
        out = np.where((u < 1.0) & (u > 1.0 - phi.s), -1.0, 0.0)
    elif name == "smhi":
        out = np.where(u <= 0, -2.0, -2.0 * np.maximum(1.0 - u, 0.0))
    elif name == "sqhi":
        out = -2.0 * np.maximum(1.0 - u, 0.0)
    elif name == "expo":
        out = -np.exp(-u)
    elif name == "abso":
        out = np.sign(u - 1.0)
    else:
        out = -2.0 * (1.0 - u)
    return out[()] if out.ndim == 0 else out


@dataclass(frozen=True)
class SurrogateSpec:
    """A base loss composed over thresholds, with the bias-class constraint.

    Serialises as ``<phi>-<at|it>-<o|n>``, e.g. ``logi-at-o``.
    """

    phi: BasePhi
    composition: str  # "at" | "it"
    ordered: bool = True

    def __post_init__(self):
        if self.composition not in ("at", "it"):
            raise ValueError("composition must be 'at' or 'it'")

    @property
    def name(self) -> str:
        return f"{self.phi.name}-{self.composition}-{'o' if self.ordered else 'n'}"

    def __str__(self):
        return self.name

    @classmethod
    def parse(cls, name: str, s: float = 1.0) -> "SurrogateSpec":
        try:
            phi, comp, cls_ = name.lower().split("-")
        except ValueError:
            raise ValueError(f"cannot parse surrogate name {name!r}") from None
        if cls_ not in ("o", "n"):
            raise ValueError(f"bias class must be 'o' or 'n' in {name!r}")
        return cls(BasePhi(phi, s), comp, cls_ == "o")


def simulation_specs() -> list[SurrogateSpec]:
    """The 21 convex settings: AT-O, IT-N, IT-O over the 7 non-ramp losses."""
    out = []
    for comp, ordered in (("at", True), ("it", False), ("it", True)):
        for name in CONVEX_PHIS:
            out.append(SurrogateSpec(BasePhi(name), comp, ordered))
    return out


def threshold_weights(composition: str, cpds) -> tuple[np.ndarray, np.ndarray]:
    """Per-threshold weights so a conditional risk reads
    ``sum_k w_le[k] * phi(b_k - a) + w_gt[k] * phi(a - b_k)``.

    AT weights are ``P(Y <= k)`` / ``P(Y > k)``; IT weights are
    ``P(Y = k)`` / ``P(Y = k + 1)``. Works row-wise on an (N, K) matrix.
    """
    p = np.asarray(cpds, dtype=float)
    if composition == "at":
        cum = np.cumsum(p, axis=-1)[..., :-1]
        w_le = cum
        w_gt = np.clip(p.sum(axis=-1, keepdims=True) - cum, 0.0, None)
    elif composition == "it":
        w_le = p[..., :-1].copy()
        w_gt = p[..., 1:].copy()
    else:
        raise ValueError("composition must be 'at' or 'it'")
    return w_le, w_gt


def surrogate_loss(spec: SurrogateSpec, a: float, b, y: int) -> float:
    bv = _bias_array(b)
    K = bv.size + 1
    if not 1 <= y <= K:
        raise ValueError(f"label {y} outside 1..{K}")
    onehot = np.zeros(K)
    onehot[y - 1] = 1.0
    w_le, w_gt = threshold_weights(spec.composition, onehot)
    return float(np.sum(w_le * phi_value(spec.phi, bv - a) + w_gt * phi_value(spec.phi, a - bv)))


TASK_LOSSES = ("zo", "ab", "sq")


@dataclass(frozen=True)
class TaskLoss:
    kind: str  # "zo" | "ab" | "sq" | "zo_eps"
    eps: float = 0.0

    def __post_init__(self):
        if self.kind not in TASK_LOSSES + ("zo_eps",):
            raise ValueError(f"unknown task loss {self.kind!r}")
        if self.kind == "zo_eps" and not self.eps > 0:
            raise ValueError("zo_eps needs eps > 0")

    def __call__(self, k, y):
        return task_loss(self, k, y)

    def matrix(self, K: int) -> np.ndarray:
        """``L[k-1, y-1] = ell(k, y)``."""
        k = np.arange(1, K + 1)
        return np.asarray(task_loss(self, k[:, None], k[None, :]), dtype=float)

    @property
    def metric(self) -> str:
        return {"zo": "MZE", "ab": "MAE", "sq": "RMSE"}.get(self.kind, f"ZO{self.eps:g}")


ZERO_ONE = TaskLoss("zo")
ABSOLUTE = TaskLoss("ab")
SQUARED = TaskLoss("sq")


def task_loss(ell: TaskLoss, k, y):
    d = np.asarray(k) - np.asarray(y)
    if ell.kind == "zo":
        out = (d != 0).astype(float)
    elif ell.kind == "ab":
        out = np.abs(d).astype(float)
    elif ell.kind == "sq":
        out = (d * d).astype(float)
    else:
        out = (np.abs(d) > ell.eps).astype(float)
    return out[()] if np.ndim(out) == 0 else out


def fb_edge(phi: BasePhi):
    """Edge ``c`` of a flat-bottom base loss, or None when it is not flat-bottom."""
    return 1.0 if phi.name in FB_PHIS else None


# ---- piecewise-linear structure ------------------------------------------------

def _phi_pieces(phi: BasePhi):
    """(knots, slopes) of a PL base loss in its own argument; None if not PL."""
    if phi.name == "hing":
        return [1.0], [-1.0, 0.0]
    if phi.name == "abso":
        return [1.0], [-1.0, 1.0]
    if phi.name == "ramp":
        return [1.0 - phi.s, 1.0], [0.0, -1.0, 0.0]
    return None


@dataclass(frozen=True)
class PLProfile:
    """Knots and per-interval affine coefficients ``(intercept, slope)`` of a
    piecewise-linear function of the 1DT value ``u``."""

    knots: np.ndarray
    segment_coeffs: np.ndarray  # (len(knots) + 1, 2)

    @property
    def n_knots(self) -> int:
        return int(self.knots.size)

    def __call__(self, u):
        u = np.asarray(u, dtype=float)
        idx = np.searchsorted(self.knots, u, side="left")
        c = self.segment_coeffs[idx]
        return c[..., 0] + c[..., 1] * u


def _profile_from_terms(terms, value_fn, merge_tol: float = 1e-12) -> PLProfile:
    """Build a PL profile from candidate knots, dropping knots where the slope
    does not change (cancelling or coincident contributions)."""
    cand = np.unique(np.round(np.asarray(terms, dtype=float), 12))
    if cand.size:
        merged = [cand[0]]
        for c in cand[1:]:
            if c - merged[-1] > merge_tol:
                merged.append(c)
        cand = np.asarray(merged)
    # probe points strictly inside each interval
    span = 1.0 + (np.ptp(cand) if cand.size else 0.0)
    probes = np.concatenate((
        [cand[0] - span] if cand.size else [-1.0],
        0.5 * (cand[:-1] + cand[1:]) if cand.size > 1 else [],
        [cand[-1] + span] if cand.size else [1.0],
    ))
    h = 1e-3 * min(1.0, np.min(np.diff(cand)) if cand.size > 1 else 1.0)
    slopes = (value_fn(probes + h) - value_fn(probes - h)) / (2 * h)
    intercepts = value_fn(probes) - slopes * probes
    coeffs = np.column_stack([intercepts, slopes])
    keep_knots, keep_coeffs = [], [coeffs[0]]
    for j, c in enumerate(cand):
        nxt = coeffs[j + 1]
        if not np.allclose(nxt, keep_coeffs[-1], atol=1e-9):
            keep_knots.append(c)
            keep_coeffs.append(nxt)
    return PLProfile(np.asarray(keep_knots), np.asarray(keep_coeffs))


def pl_profile(spec: SurrogateSpec, b, y: int | None = None, cpd=None):
    """Knot structure of ``u -> phi(u, b, y)`` (or of the conditional risk
    under ``cpd`` when given). Returns None for a non-PL base loss."""
    pieces = _phi_pieces(spec.phi)
    if pieces is None:
        return None
    phi_knots, _ = pieces
    bv = _bias_array(b)
    K = bv.size + 1
    if cpd is None:
        if y is None:
            raise ValueError("need a label y or a cpd")
        weights = np.zeros(K)
        weights[y - 1] = 1.0
    else:
        weights = np.asarray(cpd, dtype=float)
    w_le, w_gt = threshold_weights(spec.composition, weights)
    cand = []
    for k in range(K - 1):
        for c in phi_knots:
            if w_le[k] > 0:
                cand.append(bv[k] - c)  # phi(b_k - u) kinks where b_k - u = c
            if w_gt[k] > 0:
                cand.append(bv[k] + c)  # phi(u - b_k) kinks where u - b_k = c

    def value(u):
        u = np.asarray(u, dtype=float)[..., None]
        return np.sum(w_le * phi_value(spec.phi, bv - u) + w_gt * phi_value(spec.phi, u - bv), axis=-1)

    return _profile_from_terms(cand, value)


def pl_knot_bound(spec: SurrogateSpec, b, y: int | None = None, conditional: bool = False) -> int:
    """Upper bound on the knot count of the AT/IT loss or its conditional risk.

    The per-label AT bound ``I * J`` assumes no tied bias value sits on both
    sides of the label; a tie straddling ``y`` contributes two knots.
    """
    I = PL_KNOTS[spec.phi.name]
    bv = _bias_array(b)
    J = int(np.unique(bv).size)
    K = bv.size + 1
    if conditional:
        return 2 * I * J
    if spec.composition == "at":
        return I * J
    return I if y in (1, K) else 2 * I


def check_condition(phi: BasePhi, condition: str, u1, u2) -> np.ndarray:
    """Evaluate a bias-order sufficient condition on pairs ``u1 < u2``.

    ``monotone`` / ``strict_monotone``: phi(u1) >= / > phi(u2).
    ``odd_part`` / ``strict_odd_part``: phi(u) - phi(-u) non-increasing / decreasing.
    """
    u1 = np.asarray(u1, dtype=float)
    u2 = np.asarray(u2, dtype=float)
    if condition in ("monotone", "strict_monotone"):
        diff = phi_value(phi, u1) - phi_value(phi, u2)
    elif condition in ("odd_part", "strict_odd_part"):
        g = lambda u: phi_value(phi, u) - phi_value(phi, -u)  # noqa: E731
        diff = g(u1) - g(u2)
    else:
        raise ValueError(condition)
    if condition.startswith("strict"):
        return diff > 0
    return diff >= -1e-12

