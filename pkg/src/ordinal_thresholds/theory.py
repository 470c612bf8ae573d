"""Executable checks of analytic results: the three-class hinge-IT phase
transition, bias-order audits and flat-bottom bias-gap audits."""

from __future__ import annotations

import csv
from dataclasses import dataclass, field

import numpy as np

from .distributions import DiscreteOrdinalDistribution
from .losses import FB_PHIS, SurrogateSpec, fb_edge
from .probability_models import BiasVector
from .risk import FitConfig, FitResult, fit, objective

SLACK_TOL = 1e-12
PHASE1, PHASE2, BOUNDARY = "Phase1", "Phase2", "Boundary"

# which sufficient condition each base loss satisfies (strongest one listed)
BIAS_ORDER_CONDITION = {
    "ramp": "a2", "abso": "a3",
    "logi": "a5", "expo": "a5",
    "hing": "a6", "smhi": "a6", "sqhi": "a6", "squa": "a6",
}
STRICT_CONDITIONS = ("a5", "a6")  # both imply the strict condition a4


# ---- three-class example -------------------------------------------------------

def region_partition(cpds) -> list[str]:
    """Label each 3-class PMF with its region X1..X4, or "boundary" if none applies."""
    out = []
    for p1, p2, p3 in np.atleast_2d(np.asarray(cpds, dtype=float)):
        if p1 > p2 + p3:
            out.append("X1")
        elif p2 > p1 - p3 > 0:
            out.append("X2")
        elif p2 > p3 - p1 > 0:
            out.append("X3")
        elif p3 > p1 + p2:
            out.append("X4")
        else:
            out.append("boundary")
    return out


@dataclass(frozen=True)
class PhaseInstance:
    """Masses ``p`` at four points with CPDs built from ``q1 < q2 < q3``."""

    p: tuple
    q: tuple

    def __post_init__(self):
        p = tuple(float(v) for v in self.p)
        q = tuple(float(v) for v in self.q)
        if len(p) != 4 or min(p) < 0 or abs(sum(p) - 1) > 1e-9:
            raise ValueError("p must be a point of the 3-simplex")
        if len(q) != 3 or abs(sum(q) - 1) > 1e-9:
            raise ValueError("q must sum to 1")
        if not (0 <= q[0] < q[1] < q[2]):
            raise ValueError("q must satisfy 0 <= q1 < q2 < q3")
        object.__setattr__(self, "p", p)
        object.__setattr__(self, "q", q)

    @property
    def cpds(self) -> np.ndarray:
        q1, q2, q3 = self.q
        return np.array([[q1, q2, q3], [q1, q3, q2], [q2, q3, q1], [q3, q2, q1]])

    def distribution(self) -> DiscreteOrdinalDistribution:
        return DiscreteOrdinalDistribution(np.arange(4.0), self.cpds, np.array(self.p), "phase-example")

    def slack(self) -> float:
        """Positive slack means phase 1, negative phase 2."""
        p1, p2, p3, p4 = self.p
        q1, q2, q3 = self.q
        if q3 > q1 + q2 + SLACK_TOL:
            return (p1 + p4) * q1 - (p2 + p3) * (q3 - q2)
        if q3 < q1 + q2 - SLACK_TOL:
            return (p1 + p4) - (p2 + p3)
        return 0.0


def phase_of(inst: PhaseInstance) -> str:
    s = inst.slack()
    if s > SLACK_TOL:
        return PHASE1
    if s < -SLACK_TOL:
        return PHASE2
    return BOUNDARY


def expected_1dt(inst: PhaseInstance, phase: str) -> np.ndarray:
    """Per-point minimiser values of the 1DT in the given phase."""
    regions = region_partition(inst.cpds)
    table = {
        PHASE1: {"X1": -1.0, "X2": -1.0, "X3": 1.0, "X4": 1.0},
        PHASE2: {"X1": -1.0, "X2": 1.0, "X3": 1.0, "X4": 3.0},
    }[phase]
    return np.array([table.get(r, np.nan) for r in regions])


def phase_diagram(p, resolution: int = 60) -> list[tuple[float, float, float, str]]:
    """Phase label on the lattice ``q = (i, j, k) / resolution`` with ``q1 < q2 < q3``."""
    rows = []
    n = int(resolution)
    for i in range(n + 1):
        for j in range(i + 1, n + 1):
            k = n - i - j
            if k <= j:
                continue
            q = (i / n, j / n, k / n)
            rows.append((*q, phase_of(PhaseInstance(tuple(p), q))))
    return rows


def figure_panels() -> list[tuple[float, float, float, float]]:
    """``p`` with (p1, p2) = (p4, p3) stepping from (0, 0.5) to (0.5, 0)."""
    out = []
    for p1 in (0.0, 0.1, 0.2, 0.3, 0.4, 0.5):
        p2 = round(0.5 - p1, 10)
        out.append((p1, p2, p2, p1))
    return out


def write_phase_csv(path, rows) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["q1", "q2", "q3", "phase"])
        for q1, q2, q3, ph in rows:
            w.writerow([f"{q1:.6f}", f"{q2:.6f}", f"{q3:.6f}", ph])


@dataclass
class PhaseReport:
    predicted: str
    fitted: str  # Phase1 | Phase2 | inconclusive
    b2: float
    a: list
    cluster_status: str  # "at knot" | "plateau"
    agrees: bool
    risk: float = float("nan")

    def to_dict(self) -> dict:
        return dict(self.__dict__)


def verify_phase_against_optimizer(inst: PhaseInstance, cfg: FitConfig | None = None,
                                   tol: float = 0.05) -> PhaseReport:
    """Fit hinge-IT with ordered bias on the four-point population and compare."""
    cfg = cfg or FitConfig(epochs=50_000)
    predicted = phase_of(inst)
    res = fit(inst.distribution(), SurrogateSpec.parse("hing-it-o"), cfg)
    b2 = float(res.b.values[1])
    if abs(b2) <= tol:
        fitted = PHASE1
    elif abs(b2 - 2.0) <= tol:
        fitted = PHASE2
    else:
        fitted = "inconclusive"
    cluster = "plateau"
    if fitted != "inconclusive":
        want = expected_1dt(inst, fitted)
        live = (np.asarray(inst.p) > 0) & np.isfinite(want)
        if np.all(np.abs(res.a[live] - want[live]) <= tol):
            cluster = "at knot"
    agrees = predicted == BOUNDARY or fitted == predicted
    return PhaseReport(predicted, fitted, b2, res.a.tolist(), cluster, agrees, res.risk)


def random_phase_instance(rng: np.random.Generator, min_slack: float = 0.02,
                          max_tries: int = 10_000) -> PhaseInstance:
    """Rejection-sample an instance whose phase slack exceeds ``min_slack``."""
    for _ in range(max_tries):
        p = rng.dirichlet(np.ones(4))
        q = np.sort(rng.dirichlet(np.ones(3)))
        if not (q[0] < q[1] < q[2]) or abs(q[2] - q[0] - q[1]) < min_slack:
            continue
        inst = PhaseInstance(tuple(p), tuple(q))
        if abs(inst.slack()) > min_slack:
            return inst
    raise RuntimeError("could not draw an instance away from the boundary")


# ---- audits ---------------------------------------------------------------------

@dataclass
class AuditEntry:
    distribution: str
    method: str
    condition: str
    max_violation: float
    violations: int
    ties: int

    def to_dict(self) -> dict:
        return dict(self.__dict__)


def bias_order_violations(b, tol: float = 1e-6) -> tuple[float, int, int]:
    """(largest decrease, number of decreases beyond tol, number of near-ties)."""
    d = np.diff(np.asarray(b.values if isinstance(b, BiasVector) else b, dtype=float))
    worst = float(max(0.0, -d.min())) if d.size else 0.0
    return worst, int(np.sum(d < -tol)), int(np.sum(np.abs(d) <= tol))


def audit_bias_order(fits, tol: float = 1e-6) -> dict:
    """``fits``: iterable of (distribution name, SurrogateSpec, FitResult or bias)
    under the non-ordered class. Losses satisfying a strict condition must show
    no violation."""
    entries = []
    for dname, spec, res in fits:
        if spec.ordered:
            raise ValueError(f"{spec.name} was fitted under the ordered class")
        worst, n_viol, ties = bias_order_violations(getattr(res, "b", res), tol)
        entries.append(AuditEntry(dname, spec.name, BIAS_ORDER_CONDITION[spec.phi.name], worst, n_viol, ties))
    by_condition: dict = {}
    for e in entries:
        c = by_condition.setdefault(e.condition, {"fits": 0, "violating_fits": 0})
        c["fits"] += 1
        c["violating_fits"] += int(e.violations > 0)
    strict_ok = all(e.violations == 0 for e in entries if e.condition in STRICT_CONDITIONS)
    return {"entries": [e.to_dict() for e in entries], "by_condition": by_condition, "strict_ok": strict_ok}


def fb_gap_projection(dist: DiscreteOrdinalDistribution, spec: SurrogateSpec, a, b,
                      max_gap: float | None = None):
    """Shrink every bias gap above ``2c`` to exactly ``2c`` without raising the risk.

    For each offending gap between ``b_l`` and ``b_{l+1}`` the bias values
    after ``l`` and the 1DT values above ``b_{l+1} - c`` move down by the
    excess, and 1DT values between ``b_l + c`` and ``b_{l+1} - c`` are
    clipped to ``b_l + c``. A flat-bottom loss is unchanged on every term.
    """
    c = fb_edge(spec.phi)
    if c is None:
        raise ValueError(f"{spec.phi.name} is not a flat-bottom loss")
    cap = 2 * c if max_gap is None else max_gap
    a = np.array(a, dtype=float)
    bv = np.array(b.values if isinstance(b, BiasVector) else b, dtype=float)
    for l in range(bv.size - 1):
        gap = bv[l + 1] - bv[l]
        if gap <= cap:
            continue
        delta = gap - cap
        lo, hi = bv[l] + c, bv[l + 1] - c
        upper = a > hi
        middle = (a > lo) & ~upper
        a[upper] -= delta
        a[middle] = lo
        bv[l + 1:] -= delta
    return a, BiasVector(bv, ordered=spec.ordered and bool(np.all(np.diff(bv) >= 0)))


@dataclass
class GapEntry:
    distribution: str
    method: str
    raw_min_gap: float
    raw_max_gap: float
    min_gap: float
    max_gap: float
    risk_change: float

    def to_dict(self) -> dict:
        return dict(self.__dict__)


def audit_fb_gaps(dist: DiscreteOrdinalDistribution, spec: SurrogateSpec, res: FitResult) -> GapEntry:
    """Gaps of a fitted flat-bottom model before and after the shrink projection."""
    if spec.phi.name not in FB_PHIS:
        raise ValueError(f"{spec.phi.name} is not flat-bottom")
    raw = np.diff(res.b.values)
    a2, b2 = fb_gap_projection(dist, spec, res.a, res.b)
    gaps = np.diff(b2.values)
    change = objective(dist, spec, a2, b2) - objective(dist, spec, res.a, res.b)
    return GapEntry(dist.name, spec.name, float(raw.min()), float(raw.max()),
                    float(gaps.min()), float(gaps.max()), float(change))


@dataclass
class AuditBundle:
    bias_order: dict = field(default_factory=dict)
    fb_gaps: list = field(default_factory=list)
    closed_forms: list = field(default_factory=list)
    concentration: list = field(default_factory=list)
