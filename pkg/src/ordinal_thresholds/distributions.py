"""Discrete populations used by the simulations, and seeded samplers for them."""

from __future__ import annotations

import csv
import json
from dataclasses import dataclass, field
from fractions import Fraction
from pathlib import Path

import numpy as np

from .probability_models import BiasVector, acl_pmf

# 1-based label permutation used by the almost non-unimodal family
PI_PERMUTATION = (1, 10, 2, 9, 3, 8, 4, 7, 5, 6)


@dataclass(frozen=True)
class DiscreteOrdinalDistribution:
    """N support points, each with a conditional PMF over K labels and a weight.

    ``support_1dt`` holds the latent generator positions. Rows are keyed by
    index, not by position: two rows may share a position (the O family).
    """

    support_1dt: np.ndarray
    cpds: np.ndarray
    weights: np.ndarray
    name: str = ""

    def __post_init__(self):
        x = np.asarray(self.support_1dt, dtype=float)
        p = np.asarray(self.cpds, dtype=float)
        w = np.asarray(self.weights, dtype=float)
        if p.ndim != 2 or p.shape[0] != x.size or w.size != x.size:
            raise ValueError("support, cpds and weights have inconsistent shapes")
        if p.shape[1] < 3:
            raise ValueError("need K >= 3 labels")
        if np.any(p < -1e-12) or np.any(np.abs(p.sum(axis=1) - 1) > 1e-10):
            raise ValueError("every cpd row must be a PMF")
        if np.any(w < 0) or abs(w.sum() - 1) > 1e-12:
            raise ValueError("weights must be non-negative and sum to 1")
        for arr in (x, p, w):
            arr.setflags(write=False)
        object.__setattr__(self, "support_1dt", x)
        object.__setattr__(self, "cpds", p)
        object.__setattr__(self, "weights", w)

    @property
    def N(self) -> int:
        return self.cpds.shape[0]

    @property
    def K(self) -> int:
        return self.cpds.shape[1]

    def marginal(self) -> np.ndarray:
        """``Pr(Y = y)`` for each label."""
        return self.weights @ self.cpds

    def to_dict(self, family: "DistributionFamily | None" = None) -> dict:
        out = {
            "name": self.name,
            "K": self.K,
            "N": self.N,
            "support": self.support_1dt.tolist(),
            "weights": self.weights.tolist(),
            "cpds": self.cpds.tolist(),
        }
        if family is not None:
            out.update(family=family.kind, deltas=list(family.deltas))
        return out

    @classmethod
    def from_dict(cls, d: dict) -> "DiscreteOrdinalDistribution":
        return cls(np.array(d["support"]), np.array(d["cpds"]), np.array(d["weights"]), d.get("name", ""))


def latent_grid(N: int, delta: float, K: int) -> np.ndarray:
    """``((i-1) K / (N-1) - 1) * delta`` for ``i = 1..N``."""
    if N < 2:
        raise ValueError("latent grid needs N >= 2")
    i = np.arange(N, dtype=float)
    return (i * K / (N - 1) - 1.0) * delta


def _fmt_delta(d: float) -> str:
    frac = Fraction(d).limit_denominator(12)
    if abs(float(frac) - d) < 1e-12 and frac.denominator != 1:
        return f"{frac.numerator}/{frac.denominator}"
    return f"{d:g}"


@dataclass(frozen=True)
class DistributionFamily:
    """One of the simulation families: H, M, A, N take one scale, O takes two."""

    kind: str
    deltas: tuple
    K: int = 10
    N: int = 100

    def __post_init__(self):
        if self.kind not in ("H", "M", "A", "O", "N"):
            raise ValueError(f"unknown family {self.kind!r}")
        d = tuple(float(x) for x in np.atleast_1d(self.deltas))
        if len(d) != (2 if self.kind == "O" else 1):
            raise ValueError(f"family {self.kind} takes {'two scales' if self.kind == 'O' else 'one scale'}")
        object.__setattr__(self, "deltas", d)

    @property
    def label(self) -> str:
        if self.kind == "O":
            return f"O-({_fmt_delta(self.deltas[0])},{_fmt_delta(self.deltas[1])})"
        return f"{self.kind}-{_fmt_delta(self.deltas[0])}"

    @classmethod
    def parse(cls, label: str, K: int = 10, N: int = 100) -> "DistributionFamily":
        kind, _, rest = label.partition("-")
        vals = [float(Fraction(v)) for v in rest.strip("()").split(",")]
        return cls(kind, tuple(vals), K, N)

    def bias(self, delta: float) -> BiasVector:
        if self.kind == "M":
            return BiasVector.acute(delta, self.K)
        if self.kind == "A":
            return BiasVector.grave(delta, self.K)
        return BiasVector.equal_interval(delta, self.K)


BENCHMARK_FAMILIES = (
    [DistributionFamily(k, (d,)) for k in "HMA" for d in (1 / 3, 1.0, 3.0)]
    + [DistributionFamily("O", pair) for pair in ((1 / 3, 1.0), (1 / 3, 3.0), (1.0, 3.0))]
    + [DistributionFamily("N", (d,)) for d in (1 / 3, 1.0, 3.0)]
)


def _acl_rows(grid, b) -> np.ndarray:
    return np.array([acl_pmf(u, b) for u in grid])


def build_distribution(fam: DistributionFamily) -> DiscreteOrdinalDistribution:
    K, N = fam.K, fam.N
    if fam.kind == "O":
        if N % 2:
            raise ValueError("family O needs an even N")
        d1, d2 = fam.deltas
        g1 = latent_grid(N // 2, d1, K)
        g2 = latent_grid(N // 2, d2, K)
        cpds = np.vstack([_acl_rows(g1, fam.bias(d1)), _acl_rows(g2, fam.bias(d2))])
        support = np.concatenate([g1, g2])
    else:
        (delta,) = fam.deltas
        support = latent_grid(N, delta, K)
        cpds = _acl_rows(support, fam.bias(delta))
        if fam.kind == "N":
            if K != 10:
                raise ValueError("the label permutation is only defined for K=10")
            perm = np.array(PI_PERMUTATION) - 1
            cpds = cpds[:, perm]
    return DiscreteOrdinalDistribution(support, cpds, np.full(N, 1.0 / N), fam.label)


def benchmark_distributions() -> list[DiscreteOrdinalDistribution]:
    return [build_distribution(f) for f in BENCHMARK_FAMILIES]


# ---- sampling -------------------------------------------------------------------

@dataclass(frozen=True)
class Dataset:
    """A finite sample; ``index`` records which support row produced each point."""

    x: np.ndarray
    y: np.ndarray
    index: np.ndarray = field(default=None)

    def __len__(self):
        return int(self.y.size)

    def subset(self, idx) -> "Dataset":
        return Dataset(self.x[idx], self.y[idx], None if self.index is None else self.index[idx])

    def to_csv(self, path) -> None:
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["x", "y"])
            for xv, yv in zip(self.x, self.y):
                w.writerow([repr(float(xv)), int(yv)])

    @classmethod
    def from_csv(cls, path) -> "Dataset":
        with open(path, newline="") as fh:
            rows = list(csv.DictReader(fh))
        return cls(np.array([float(r["x"]) for r in rows]), np.array([int(r["y"]) for r in rows]))


def trial_rng(seed: int, trial: int = 0) -> np.random.Generator:
    """PCG64 stream for one trial: ``SeedSequence(seed).spawn`` child ``trial``.

    Distinct trials get statistically independent streams, and each trial's
    stream does not depend on how many trials run.
    """
    child = np.random.SeedSequence(seed).spawn(trial + 1)[trial]
    return np.random.Generator(np.random.PCG64(child))


def sample_categorical(rows: np.ndarray, rng: np.random.Generator) -> np.ndarray:
    """Inverse-CDF draw of a 1-based label per row; boundary ties go to the lower label."""
    cum = np.cumsum(rows, axis=1)
    cum[:, -1] = 1.0
    u = rng.random(rows.shape[0])
    return 1 + np.sum(u[:, None] >= cum, axis=1)


def sample_dataset(fam: DistributionFamily, n: int, seed: int | None = None, offset_variant: bool = True,
                   rng: np.random.Generator | None = None) -> Dataset:
    """Draw ``n`` points: a support point uniformly, then a label from its PMF.

    For family O with ``offset_variant`` the second half's positions and
    biases are shifted by ``K * delta1 + delta2`` so the two halves do not
    overlap; that shift does not change the PMFs (ACL is translation invariant).
    """
    if n < 1:
        raise ValueError("n must be >= 1")
    if rng is None:
        rng = trial_rng(0 if seed is None else seed)
    dist = build_distribution(fam)
    support = dist.support_1dt.copy()
    if fam.kind == "O" and offset_variant:
        shift = fam.K * fam.deltas[0] + fam.deltas[1]
        support[fam.N // 2:] += shift
    idx = rng.integers(0, dist.N, size=n)
    y = sample_categorical(dist.cpds[idx], rng)
    return Dataset(support[idx], y, idx)


def split_dataset(ds: Dataset, sizes, rng: np.random.Generator) -> list[Dataset]:
    """Random disjoint split into consecutive chunks of the given sizes."""
    if sum(sizes) > len(ds):
        raise ValueError("split sizes exceed dataset size")
    perm = rng.permutation(len(ds))
    out, start = [], 0
    for s in sizes:
        out.append(ds.subset(perm[start:start + s]))
        start += s
    return out


def save_distribution(dist: DiscreteOrdinalDistribution, path, family: DistributionFamily | None = None):
    Path(path).write_text(json.dumps(dist.to_dict(family), indent=1))
