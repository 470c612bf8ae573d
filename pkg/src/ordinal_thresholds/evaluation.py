"""Approximation errors, Bayes errors and error tables."""

from __future__ import annotations

import csv
from dataclasses import asdict, dataclass
from decimal import ROUND_HALF_EVEN, Decimal

import numpy as np

from .distributions import Dataset, DiscreteOrdinalDistribution
from .losses import ABSOLUTE, SQUARED, ZERO_ONE, TaskLoss
from .thresholding import ThresholdVector, conditional_risks, h_thr, optimal_thresholds

TASKS = (ZERO_ONE, ABSOLUTE, SQUARED)
CSV_COLUMNS = ("distribution", "method", "task", "error", "bayes", "gap")


def _finish(value: float, ell: TaskLoss, root: bool) -> float:
    value = max(float(value), 0.0)
    return float(np.sqrt(value)) if (ell.kind == "sq" and root) else value


def approximation_error(dist: DiscreteOrdinalDistribution, a_values, t, ell: TaskLoss,
                        root: bool = True) -> float:
    """Weighted task risk of labels ``h_thr(a_i; t)``. For the squared loss the
    root of the MSE is returned unless ``root=False``."""
    pred = h_thr(np.asarray(a_values, dtype=float), t)
    r = conditional_risks(dist.cpds, ell)
    return _finish(dist.weights @ r[np.arange(dist.N), pred - 1], ell, root)


def prediction_error(dist: DiscreteOrdinalDistribution, labels, ell: TaskLoss, root: bool = True) -> float:
    labels = np.asarray(labels, dtype=int)
    r = conditional_risks(dist.cpds, ell)
    return _finish(dist.weights @ r[np.arange(dist.N), labels - 1], ell, root)


def bayes_error(dist: DiscreteOrdinalDistribution, ell: TaskLoss, root: bool = True) -> float:
    r = conditional_risks(dist.cpds, ell)
    return _finish(dist.weights @ r.min(axis=1), ell, root)


def empirical_error(test_set: Dataset, predictor, ell: TaskLoss, root: bool = True) -> float:
    """Sample mean of ``ell(f(x), y)``; ``predictor`` maps an array of x to labels."""
    if len(test_set) == 0:
        raise ValueError("empty test set")
    pred = np.asarray(predictor(test_set.x), dtype=int)
    return _finish(np.mean(ell(pred, test_set.y)), ell, root)


@dataclass
class ErrorReport:
    mze: float
    mae: float
    rmse: float
    bayes_mze: float
    bayes_mae: float
    bayes_rmse: float

    def __post_init__(self):
        for name, v in asdict(self).items():
            if v < 0:
                raise ValueError(f"{name} is negative")
        for m in ("mze", "mae", "rmse"):
            if getattr(self, m) < getattr(self, "bayes_" + m) - 1e-9:
                raise ValueError(f"{m} is below the Bayes error")

    @property
    def gaps(self) -> tuple[float, float, float]:
        return (self.mze - self.bayes_mze, self.mae - self.bayes_mae, self.rmse - self.bayes_rmse)

    def errors(self) -> tuple[float, float, float]:
        return self.mze, self.mae, self.rmse

    def bayes(self) -> tuple[float, float, float]:
        return self.bayes_mze, self.bayes_mae, self.bayes_rmse

    def to_dict(self) -> dict:
        return {**asdict(self), "gaps": list(self.gaps)}


def bayes_report(dist: DiscreteOrdinalDistribution) -> ErrorReport:
    b = [bayes_error(dist, ell) for ell in TASKS]
    return ErrorReport(*b, *b)


def evaluate_1dt(dist: DiscreteOrdinalDistribution, a_values) -> tuple[ErrorReport, dict]:
    """Errors of a fitted 1DT under per-task optimal thresholds (the DP)."""
    errs, thr = [], {}
    for ell in TASKS:
        t: ThresholdVector = optimal_thresholds(a_values, dist.cpds, ell, dist.weights)
        errs.append(approximation_error(dist, a_values, t, ell))
        thr[ell.metric] = t.t.tolist()
    b = [bayes_error(dist, ell) for ell in TASKS]
    return ErrorReport(*errs, *b), thr


def round3(x: float) -> str:
    """Half-even rounding to three decimals, as printed in tables."""
    return str(Decimal(repr(float(x))).quantize(Decimal("0.001"), rounding=ROUND_HALF_EVEN))


def report_rows(distribution: str, method: str, report: ErrorReport) -> list[dict]:
    rows = []
    for ell, err, bay in zip(TASKS, report.errors(), report.bayes()):
        rows.append({
            "distribution": distribution,
            "method": method,
            "task": ell.metric,
            "error": round3(err),
            "bayes": round3(bay),
            "gap": round3(err - bay),
        })
    return rows


def write_rows(path, rows) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.DictWriter(fh, fieldnames=CSV_COLUMNS, lineterminator="\n")
        w.writeheader()
        w.writerows(rows)
