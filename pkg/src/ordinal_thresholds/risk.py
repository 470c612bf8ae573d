"""Surrogate-risk minimisation over a discrete population or a finite sample,
plus the closed-form minimisers of the squared-loss compositions."""

from __future__ import annotations

import logging
from dataclasses import asdict, dataclass, field

import numpy as np

from . import _kernels
from .distributions import Dataset, DiscreteOrdinalDistribution
from .losses import SurrogateSpec, threshold_weights
from .probability_models import BiasVector

log = logging.getLogger(__name__)

INIT_BIAS_STEP = 0.1


class FitDivergenceError(RuntimeError):
    """The optimiser produced a non-finite risk."""

    def __init__(self, msg, diagnostics=None):
        super().__init__(msg)
        self.diagnostics = diagnostics or {}


class SingularSystemError(np.linalg.LinAlgError):
    pass


@dataclass(frozen=True)
class FitConfig:
    """Adam schedule: lr at epoch t of T is ``lr_base ** (lr_exp0 + lr_exp1 * t / T)``."""

    epochs: int = 100_000
    lr_base: float = 0.1
    lr_exp0: float = 1.0
    lr_exp1: float = 3.0
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8
    init: str = "zeros"  # "zeros" | "small_random"
    init_seed: int = 0
    batch_size: int | None = None  # None = full batch
    seed: int = 0  # shuffling stream for mini-batches

    def __post_init__(self):
        if self.epochs < 1:
            raise ValueError("epochs must be >= 1")
        if self.batch_size is not None and self.batch_size < 1:
            raise ValueError("batch_size must be >= 1")
        if self.init not in ("zeros", "small_random"):
            raise ValueError(f"unknown init {self.init!r}")

    @classmethod
    def simulation(cls, fast: bool = False, **kw) -> "FitConfig":
        return cls(epochs=20_000 if fast else 100_000, **kw)

    @classmethod
    def sampled(cls, **kw) -> "FitConfig":
        kw.setdefault("epochs", 2000)
        kw.setdefault("batch_size", 4)
        return cls(lr_exp0=2.5, lr_exp1=1.0, **kw)


def concentration_report(a, tol: float = 1e-3) -> dict:
    """Cluster sorted 1DT values whose neighbours are within ``tol``."""
    v = np.sort(np.asarray(a, dtype=float))
    if v.size == 0:
        return {"n_distinct": 0, "cluster_sizes": [], "cluster_centers": []}
    breaks = np.flatnonzero(np.diff(v) > tol) + 1
    groups = np.split(v, breaks)
    return {
        "n_distinct": len(groups),
        "cluster_sizes": [int(g.size) for g in groups],
        "cluster_centers": [float(g.mean()) for g in groups],
    }


@dataclass
class FitResult:
    a: np.ndarray
    b: BiasVector
    risk: float
    spec: str
    epochs: int
    trace: list = field(default_factory=list)
    best_epoch: int | None = None

    @property
    def bias_gaps(self) -> np.ndarray:
        return np.diff(self.b.values)

    @property
    def concentration(self) -> dict:
        return concentration_report(self.a)

    def to_dict(self) -> dict:
        return {
            "spec": self.spec,
            "a": self.a.tolist(),
            "b": self.b.values.tolist(),
            "risk": self.risk,
            "epochs": self.epochs,
            "best_epoch": self.best_epoch,
            "bias_gaps": self.bias_gaps.tolist(),
            "concentration": self.concentration,
        }


# ---- objective ------------------------------------------------------------------

def _weights(dist: DiscreteOrdinalDistribution, spec: SurrogateSpec):
    w_le, w_gt = threshold_weights(spec.composition, dist.cpds)
    w = dist.weights[:, None]
    return np.ascontiguousarray(w * w_le), np.ascontiguousarray(w * w_gt)


def _bias_values(b) -> np.ndarray:
    return np.ascontiguousarray(b.values if isinstance(b, BiasVector) else np.asarray(b, dtype=float))


def objective(dist: DiscreteOrdinalDistribution, spec: SurrogateSpec, a, b) -> float:
    """``sum_i w_i sum_y p_{i,y} phi(a_i, b, y)``. ``b`` may be any real vector."""
    a = np.ascontiguousarray(a, dtype=float)
    bv = _bias_values(b)
    if a.size != dist.N or bv.size != dist.K - 1:
        raise ValueError("dimension mismatch between a, b and the distribution")
    w_le, w_gt = _weights(dist, spec)
    return float(_kernels.risk_only(spec.phi.code, spec.phi.s, a, bv, w_le, w_gt))


def objective_grad(dist: DiscreteOrdinalDistribution, spec: SurrogateSpec, a, b):
    """Risk and its gradient with respect to (a, b), b treated as free."""
    a = np.ascontiguousarray(a, dtype=float)
    bv = _bias_values(b)
    w_le, w_gt = _weights(dist, spec)
    ga = np.empty(dist.N)
    gb = np.empty(dist.K - 1)
    val = _kernels.risk_and_grad(spec.phi.code, spec.phi.s, a, bv, w_le, w_gt, ga, gb)
    return float(val), ga, gb


# ---- parameterisation -----------------------------------------------------------

def _init_params(n_a: int, K: int, ordered: bool, cfg: FitConfig):
    if cfg.init == "zeros":
        a = np.zeros(n_a)
    else:
        a = np.random.default_rng(cfg.init_seed).normal(0.0, 0.01, n_a)
    if ordered:
        theta = np.full(K - 2, np.sqrt(INIT_BIAS_STEP))
    else:
        theta = INIT_BIAS_STEP * np.arange(1, K - 1, dtype=float)
    return a, theta


def _bias(theta, ordered: bool) -> BiasVector:
    b = np.empty(theta.size + 1)
    _kernels.bias_from_theta(theta, ordered, b)
    return BiasVector(b, ordered=ordered)


def theta_from_bias(b, ordered: bool) -> np.ndarray:
    bv = _bias_values(b)
    if ordered:
        return np.sqrt(np.clip(np.diff(bv), 0.0, None))
    return bv[1:].copy()


# ---- population fit -------------------------------------------------------------

def fit(dist: DiscreteOrdinalDistribution, spec: SurrogateSpec, cfg: FitConfig | None = None,
        trace_every: int = 1000) -> FitResult:
    """Minimise the population surrogate risk with full-batch Adam."""
    cfg = cfg or FitConfig()
    if cfg.batch_size is not None:
        raise ValueError("population fits are full batch; use fit_empirical for mini-batches")
    w_le, w_gt = _weights(dist, spec)
    a, theta = _init_params(dist.N, dist.K, spec.ordered, cfg)
    val, trace = _kernels.adam_full_batch(
        spec.phi.code, spec.phi.s, w_le, w_gt, a, theta, spec.ordered, cfg.epochs,
        cfg.lr_base, cfg.lr_exp0, cfg.lr_exp1, cfg.beta1, cfg.beta2, cfg.eps, max(1, trace_every),
    )
    if not np.isfinite(val) or not np.all(np.isfinite(a)) or not np.all(np.isfinite(theta)):
        raise FitDivergenceError(
            f"{spec.name} on {dist.name or 'distribution'} diverged",
            {"last_trace": trace[-5:].tolist(), "max_abs_a": float(np.nanmax(np.abs(a)))},
        )
    b = _bias(theta, spec.ordered)
    log.debug("fit %s on %s: risk %.6g", spec.name, dist.name, val)
    return FitResult(a, b, float(val), spec.name, cfg.epochs, trace.tolist())


# ---- empirical (tabular) fit ----------------------------------------------------

@dataclass
class TabularModel:
    """A 1DT stored as one value per distinct training input."""

    support: np.ndarray
    values: np.ndarray

    def __call__(self, x):
        """Look up each x; an x absent from the table takes its nearest support value."""
        x = np.asarray(x, dtype=float)
        pos = np.searchsorted(self.support, x)
        pos = np.clip(pos, 1, self.support.size - 1) if self.support.size > 1 else np.zeros_like(pos)
        if self.support.size > 1:
            left = self.support[pos - 1]
            right = self.support[pos]
            pos = np.where(np.abs(x - left) <= np.abs(right - x), pos - 1, pos)
        return self.values[pos]


@dataclass
class EmpiricalFit:
    model: TabularModel
    result: FitResult
    val_risks: list


def _encode(ds: Dataset, support: np.ndarray) -> np.ndarray:
    pos = np.searchsorted(support, ds.x)
    pos = np.clip(pos, 0, support.size - 1)
    if not np.all(support[pos] == ds.x):
        raise KeyError("dataset contains x values outside the table")
    return pos.astype(np.int64)


def empirical_objective(spec: SurrogateSpec, model: TabularModel, b, ds: Dataset) -> float:
    """Mean surrogate loss of a tabular 1DT over a dataset; unseen x use nearest support."""
    a = np.ascontiguousarray(model(ds.x), dtype=float)
    idx = np.arange(len(ds), dtype=np.int64)
    return float(_kernels.empirical_risk(spec.phi.code, spec.phi.s, spec.composition == "at",
                                         a, _bias_values(b), idx, ds.y.astype(np.int64)))


def fit_empirical(train: Dataset, spec: SurrogateSpec, cfg: FitConfig | None = None, K: int = 10,
                  validation: Dataset | None = None) -> EmpiricalFit:
    """Minimise the empirical surrogate risk with a tabular 1DT.

    With a validation set, the returned parameters are those at the epoch with
    the smallest validation surrogate risk; otherwise the last epoch's.
    """
    cfg = cfg or FitConfig.sampled()
    if len(train) == 0:
        raise ValueError("empty training set")
    support = np.unique(train.x)
    idx = _encode(train, support)
    y = train.y.astype(np.int64)
    at = spec.composition == "at"
    a, theta = _init_params(support.size, K, spec.ordered, cfg)
    params = np.concatenate([a, theta])
    n_a = support.size
    mom = np.zeros_like(params)
    vel = np.zeros_like(params)
    batch = cfg.batch_size or len(train)
    rng = np.random.default_rng(cfg.seed)
    if validation is not None:
        v_idx = np.arange(len(validation), dtype=np.int64)
        v_y = validation.y.astype(np.int64)
    best = (np.inf, params.copy(), -1)
    val_risks = []
    step = 0
    b = np.empty(K - 1)
    for t in range(cfg.epochs):
        order = rng.permutation(len(train)) if batch < len(train) else np.arange(len(train))
        lr = cfg.lr_base ** (cfg.lr_exp0 + cfg.lr_exp1 * t / cfg.epochs)
        step = _kernels.adam_minibatch_epoch(
            spec.phi.code, spec.phi.s, at, params, n_a, spec.ordered, idx, y, order, batch,
            mom, vel, step, lr, cfg.beta1, cfg.beta2, cfg.eps,
        )
        if not np.all(np.isfinite(params)):
            raise FitDivergenceError(f"{spec.name} diverged at epoch {t}", {"epoch": t})
        if validation is not None:
            _kernels.bias_from_theta(params[n_a:], spec.ordered, b)
            a_val = np.ascontiguousarray(TabularModel(support, params[:n_a])(validation.x))
            vr = _kernels.empirical_risk(spec.phi.code, spec.phi.s, at, a_val, b, v_idx, v_y)
            val_risks.append(float(vr))
            if vr < best[0]:
                best = (vr, params.copy(), t)
    if validation is not None:
        params, best_epoch = best[1], best[2]
    else:
        best_epoch = cfg.epochs - 1
    a = params[:n_a].copy()
    bias = _bias(params[n_a:], spec.ordered)
    train_risk = float(_kernels.empirical_risk(spec.phi.code, spec.phi.s, at, a, bias.values, idx, y))
    result = FitResult(a, bias, train_risk, spec.name, cfg.epochs, best_epoch=best_epoch)
    return EmpiricalFit(TabularModel(support, a), result, val_risks)


# ---- closed forms ---------------------------------------------------------------

def closed_form_squared_at(dist: DiscreteOrdinalDistribution):
    """Minimiser of the Squared-AT population risk with ``b_1 = 0``.

    From the stationarity conditions: ``b_y = 2 (Pr(Y<=y) - Pr(Y<=1))`` and
    ``a(x) = c2 + 2 E[Y|x] / (K-1)`` with
    ``c2 = 1 + 2 (sum_{y<K} Pr(Y<=y) - K) / (K-1) - 2 Pr(Y<=1)``.
    Returns ``(a, b, c2)``; the squared-task optimal thresholds are
    ``c2 + 2 (k + 0.5) / (K-1)``.
    """
    K = dist.K
    cum = np.cumsum(dist.marginal())[:-1]
    c1 = cum[0]
    c2 = 1.0 + 2.0 / (K - 1) * (cum.sum() - K) - 2.0 * c1
    b = 2.0 * (cum - c1)
    b[0] = 0.0
    mean_y = dist.cpds @ np.arange(1, K + 1)
    a = c2 + 2.0 / (K - 1) * mean_y
    return a, BiasVector(b, ordered=True), c2


def squared_at_thresholds(c2: float, K: int) -> np.ndarray:
    k = np.arange(1, K)
    return c2 + 2.0 / (K - 1) * (k + 0.5)


def solve_pivoted(A, rhs, tiny: float = 1e-12) -> np.ndarray:
    """Gaussian elimination with partial pivoting."""
    M = np.array(A, dtype=float)
    x = np.array(rhs, dtype=float)
    n = x.size
    for col in range(n):
        piv = col + int(np.argmax(np.abs(M[col:, col])))
        if abs(M[piv, col]) < tiny:
            raise SingularSystemError("linear system is singular")
        if piv != col:
            M[[col, piv]] = M[[piv, col]]
            x[[col, piv]] = x[[piv, col]]
        f = M[col + 1:, col] / M[col, col]
        M[col + 1:, col:] -= f[:, None] * M[col, col:]
        x[col + 1:] -= f * x[col]
    for row in range(n - 1, -1, -1):
        x[row] = (x[row] - M[row, row + 1:] @ x[row + 1:]) / M[row, row]
    return x


def closed_form_squared_it(dist: DiscreteOrdinalDistribution):
    """Minimiser of the Squared-IT population risk over unordered ``b`` with ``b_1 = 0``.

    Solves ``(I - D) b = c`` for the bias and then sets each 1DT value from
    its stationarity condition. Returns ``(a, b)``.
    """
    p = dist.cpds
    w = dist.weights
    K = dist.K
    pair = p[:, :-1] + p[:, 1:]  # Pr(Y in {y, y+1} | x_i)
    pair_mass = w @ pair
    if np.any(pair_mass <= 0):
        raise ValueError("every adjacent label pair needs positive probability")
    denom = 2.0 - p[:, 0] - p[:, -1]
    marg = dist.marginal()
    edge = (p[:, 0] - p[:, -1]) / denom
    c = (marg[:-1] - marg[1:] - (w * edge) @ pair) / pair_mass
    D = ((pair * (w / denom)[:, None]).T @ pair) / pair_mass[:, None]
    D[:, 0] = 0.0
    b = solve_pivoted(np.eye(K - 1) - D, c)
    if abs(b[0]) > 1e-8:
        log.warning("closed-form IT bias has b_1 = %.3g before pinning", b[0])
    b[0] = 0.0
    a = (pair @ b - p[:, 0] + p[:, -1]) / denom
    return a, BiasVector(b, ordered=False)


def config_dict(cfg: FitConfig) -> dict:
    return asdict(cfg)
