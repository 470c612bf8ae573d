"""Command-line entry point: simulate, sample, audit, phase-diagram."""

from __future__ import annotations

import argparse
import csv
import json
import logging
import sys
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, fields
from pathlib import Path

import numpy as np

from .distributions import (
    BENCHMARK_FAMILIES, DistributionFamily, build_distribution, sample_dataset, split_dataset, trial_rng,
)
from .evaluation import (
    TASKS, ErrorReport, bayes_report, empirical_error, evaluate_1dt, report_rows, round3, write_rows,
)
from .losses import CONVEX_PHIS, SurrogateSpec, TaskLoss, simulation_specs
from .probability_models import BiasVector, acl_pmf, cl_pmf, is_unimodal
from .risk import (
    FitConfig, FitDivergenceError, closed_form_squared_at, closed_form_squared_it, fit, fit_empirical,
)
from .theory import (
    audit_bias_order, audit_fb_gaps, figure_panels, phase_diagram, write_phase_csv,
)
from .thresholding import h_thr, optimal_thresholds_from_sample

try:  # Python < 3.11
    import tomllib
except ModuleNotFoundError:  # pragma: no cover
    import tomli as tomllib

log = logging.getLogger("ordinal_thresholds")

EXIT_PARTIAL = 2


@dataclass
class ExperimentPlan:
    distributions: list = field(default_factory=lambda: [f.label for f in BENCHMARK_FAMILIES])
    methods: list = field(default_factory=lambda: [s.name for s in simulation_specs()])
    tasks: list = field(default_factory=lambda: [t.kind for t in TASKS])
    fit: dict = field(default_factory=dict)
    trials: int = 20
    seed: int = 0
    output_dir: str = "results"
    n_train: int = 900
    n_val: int = 100
    n_test: int = 10_000

    def __post_init__(self):
        if not self.distributions or not self.methods or not self.tasks:
            raise ValueError("plan lists must be non-empty")
        if self.trials < 1:
            raise ValueError("trials must be >= 1")
        for d in self.distributions:
            DistributionFamily.parse(d)
        for m in self.methods:
            SurrogateSpec.parse(m)
        for t in self.tasks:
            TaskLoss(t)

    @property
    def families(self):
        return [DistributionFamily.parse(d) for d in self.distributions]

    @property
    def specs(self):
        return [SurrogateSpec.parse(m) for m in self.methods]

    @property
    def task_losses(self):
        return [TaskLoss(t) for t in self.tasks]

    def fit_config(self, fast: bool = False, **overrides) -> FitConfig:
        kw = {**self.fit, **overrides}
        if "epochs" not in kw:
            kw["epochs"] = 20_000 if fast else 100_000
        return FitConfig(**kw)


def load_plan(path: str | None, **overrides) -> ExperimentPlan:
    data = {}
    if path:
        text = Path(path).read_text()
        data = tomllib.loads(text) if str(path).endswith(".toml") else json.loads(text)
    known = {f.name for f in fields(ExperimentPlan)}
    unknown = set(data) - known
    if unknown:
        raise ValueError(f"unknown plan fields: {sorted(unknown)}")
    data.update({k: v for k, v in overrides.items() if v is not None})
    return ExperimentPlan(**data)


def _dump_json(path: Path, obj) -> None:
    path.write_text(json.dumps(obj, indent=1, sort_keys=True) + "\n")


def _slug(label: str) -> str:
    return label.replace("/", "_").replace("(", "").replace(")", "").replace(",", "_")


def _run_pool(func, jobs, n_jobs: int):
    """Run ``func`` over ``jobs`` in submission order, in a pool when ``n_jobs > 1``."""
    if n_jobs <= 1:
        return [func(j) for j in jobs]
    with ProcessPoolExecutor(max_workers=n_jobs) as pool:
        return list(pool.map(func, jobs))


# ---- simulate -------------------------------------------------------------------

def _simulation_cell(job):
    label, method, cfg = job
    dist = build_distribution(DistributionFamily.parse(label))
    spec = SurrogateSpec.parse(method)
    try:
        res = fit(dist, spec, cfg, trace_every=cfg.epochs)
    except FitDivergenceError as exc:
        return {"distribution": label, "method": method, "error": str(exc), "diagnostics": exc.diagnostics}
    report, thresholds = evaluate_1dt(dist, res.a)
    out = res.to_dict()
    out.pop("a")
    return {
        "distribution": label, "method": method, "fit": out, "a": res.a.tolist(),
        "thresholds": thresholds, "report": report.to_dict(),
    }


def run_simulation(plan: ExperimentPlan, out: Path, fast: bool = False, jobs: int = 1) -> int:
    cfg = plan.fit_config(fast)
    cells = [(d, m, cfg) for d in plan.distributions for m in plan.methods]
    results = _run_pool(_simulation_cell, cells, jobs)
    metrics = {TaskLoss(t).metric for t in plan.tasks}
    all_rows, failures, raw = [], [], []
    for label in plan.distributions:
        dist = build_distribution(DistributionFamily.parse(label))
        rows = [r for r in report_rows(label, "optimal", bayes_report(dist)) if r["task"] in metrics]
        for cell in (c for c in results if c["distribution"] == label):
            if "error" in cell:
                failures.append(cell)
                continue
            raw.append(cell)
            rep = cell["report"]
            er = ErrorReport(*(rep[k] for k in ("mze", "mae", "rmse", "bayes_mze", "bayes_mae", "bayes_rmse")))
            rows += [r for r in report_rows(label, cell["method"], er) if r["task"] in metrics]
        write_rows(out / f"simulation_{_slug(label)}.csv", rows)
        all_rows += rows
    write_rows(out / "simulation.csv", all_rows)
    _dump_json(out / "simulation_fits.json", {"config": cfg.__dict__, "cells": raw})
    return _finish(out, failures)


def _finish(out: Path, failures) -> int:
    if failures:
        _dump_json(out / "failures.json", failures)
        log.error("%d cell(s) failed; see %s", len(failures), out / "failures.json")
        return EXIT_PARTIAL
    return 0


# ---- sample ---------------------------------------------------------------------

def run_trial(label: str, method: str, trial: int, seed: int, tasks, sizes=(900, 100, 10_000),
              cfg: FitConfig | None = None) -> dict:
    """One sampled-data trial: draw, split, fit with validation selection, test."""
    fam = DistributionFamily.parse(label)
    rng = trial_rng(seed, trial)
    data = sample_dataset(fam, sum(sizes), rng=rng)
    train, val, test = split_dataset(data, sizes, rng)
    spec = SurrogateSpec.parse(method)
    cfg = cfg or FitConfig.sampled(seed=int(rng.integers(2**31)))
    ef = fit_empirical(train, spec, cfg, K=fam.K, validation=val)
    a_train = ef.model(train.x)
    errors = {}
    for ell in tasks:
        t = optimal_thresholds_from_sample(a_train, train.y, fam.K, ell)
        errors[ell.metric] = empirical_error(test, lambda x, t=t: h_thr(ef.model(x), t), ell)
    return {
        "distribution": label, "method": method, "trial": trial, "errors": errors,
        "best_epoch": ef.result.best_epoch, "concentration": ef.result.concentration,
        "a": ef.result.a.tolist(), "b": ef.result.b.values.tolist(),
    }


def _sample_cell(job):
    label, method, trial, seed, tasks, sizes = job
    try:
        return run_trial(label, method, trial, seed, [TaskLoss(t) for t in tasks], sizes)
    except FitDivergenceError as exc:
        return {"distribution": label, "method": method, "trial": trial, "error": str(exc)}


def mean_sd(values) -> str:
    v = np.asarray(values, dtype=float)
    sd = v.std(ddof=1) if v.size > 1 else 0.0
    return f"{round3(v.mean())}({round3(sd)})"


def run_sampled(plan: ExperimentPlan, out: Path, jobs: int = 1) -> int:
    sizes = (plan.n_train, plan.n_val, plan.n_test)
    cells = [(d, m, t, plan.seed, tuple(plan.tasks), sizes)
             for d in plan.distributions for m in plan.methods for t in range(plan.trials)]
    results = _run_pool(_sample_cell, cells, jobs)
    failures = [r for r in results if "error" in r]
    ok = [r for r in results if "error" not in r]
    trial_rows, summary = [], []
    for r in ok:
        for metric, err in r["errors"].items():
            trial_rows.append({"distribution": r["distribution"], "method": r["method"],
                               "trial": r["trial"], "task": metric, "error": repr(float(err))})
    with open(out / "sampled_trials.csv", "w", newline="") as fh:
        w = csv.DictWriter(fh, ["distribution", "method", "trial", "task", "error"], lineterminator="\n")
        w.writeheader()
        w.writerows(trial_rows)
    for d in plan.distributions:
        for m in plan.methods:
            rs = [r for r in ok if r["distribution"] == d and r["method"] == m]
            if not rs:
                continue
            for metric in rs[0]["errors"]:
                vals = [r["errors"][metric] for r in rs]
                summary.append({"distribution": d, "method": m, "task": metric, "trials": len(vals),
                                "mean": round3(np.mean(vals)),
                                "sd": round3(np.std(vals, ddof=1) if len(vals) > 1 else 0.0),
                                "mean_sd": mean_sd(vals)})
    with open(out / "sampled_summary.csv", "w", newline="") as fh:
        w = csv.DictWriter(fh, ["distribution", "method", "task", "trials", "mean", "sd", "mean_sd"],
                           lineterminator="\n")
        w.writeheader()
        w.writerows(summary)
    _dump_json(out / "sampled_trials.json", ok)
    return _finish(out, failures)


# ---- audit ----------------------------------------------------------------------

def _audit_cell(job):
    kind, label, method, cfg = job
    dist = build_distribution(DistributionFamily.parse(label))
    spec = SurrogateSpec.parse(method)
    try:
        res = fit(dist, spec, cfg, trace_every=cfg.epochs)
    except FitDivergenceError as exc:
        return {"kind": kind, "distribution": label, "method": method, "error": str(exc)}
    out = {"kind": kind, "distribution": label, "method": method}
    if kind == "order":
        out["b"] = res.b.values.tolist()
    elif kind == "fb":
        out["gaps"] = audit_fb_gaps(dist, spec, res).to_dict()
    elif kind == "closed":
        if spec.composition == "at":
            a, b, _ = closed_form_squared_at(dist)
        else:
            a, b = closed_form_squared_it(dist)
        out["a_err"] = float(np.max(np.abs(res.a - a)))
        out["b_err"] = float(np.max(np.abs(res.b.values - b.values)))
    else:
        out["concentration"] = res.concentration
    return out


def unimodal_scan_rows(u_grid=None):
    """Unimodality of CL/ACL PMFs along a 1DT grid for each scale and bias shape."""
    u_grid = np.linspace(-5.0, 30.0, 1001) if u_grid is None else u_grid
    rows = []
    for delta in (1 / 3, 1.0, 3.0):
        for shape, b in (("equal", BiasVector.equal_interval(delta, 10)),
                         ("acute", BiasVector.acute(delta)), ("grave", BiasVector.grave(delta))):
            for model, pmf in (("cl", cl_pmf), ("acl", acl_pmf)):
                if model == "cl" and not b.is_sorted:
                    continue
                for u in u_grid:
                    rows.append({"model": model, "bias": shape, "delta": f"{delta:.6f}", "u": f"{u:.6f}",
                                 "unimodal": int(is_unimodal(pmf(u, b)))})
    return rows


def run_audits(plan: ExperimentPlan, out: Path, fast: bool = False, jobs: int = 1) -> int:
    cfg = plan.fit_config(fast)
    d = plan.distributions
    jobs_ = [("order", x, f"{p}-at-n", cfg) for x in d for p in CONVEX_PHIS]
    jobs_ += [("fb", x, f"{p}-{c}", cfg) for x in d for p in ("hing", "smhi", "sqhi") for c in ("at-o", "it-o")]
    jobs_ += [("closed", x, m, cfg) for x in d for m in ("squa-at-o", "squa-it-n")]
    jobs_ += [("conc", x, f"abso-{c}", cfg) for x in d for c in ("at-o", "it-n", "it-o")]
    results = _run_pool(_audit_cell, jobs_, jobs)
    failures = [r for r in results if "error" in r]
    ok = [r for r in results if "error" not in r]

    order = audit_bias_order(
        (r["distribution"], SurrogateSpec.parse(r["method"]), BiasVector(np.array(r["b"])))
        for r in ok if r["kind"] == "order"
    )
    bundle = {
        "bias_order": order,
        "fb_gaps": [r["gaps"] for r in ok if r["kind"] == "fb"],
        "closed_forms": [{k: r[k] for k in ("distribution", "method", "a_err", "b_err")}
                         for r in ok if r["kind"] == "closed"],
        "concentration": [{k: r[k] for k in ("distribution", "method", "concentration")}
                          for r in ok if r["kind"] == "conc"],
        "config": cfg.__dict__,
    }
    _dump_json(out / "audit.json", bundle)
    rows = unimodal_scan_rows()
    with open(out / "unimodal_regions.csv", "w", newline="") as fh:
        w = csv.DictWriter(fh, list(rows[0]), lineterminator="\n")
        w.writeheader()
        w.writerows(rows)
    _write_panels(out, 60)
    return _finish(out, failures)


def _write_panels(out: Path, resolution: int, panels=None):
    for p in panels or figure_panels():
        name = "phase_p" + "_".join(f"{v:g}" for v in p[:2]) + ".csv"
        write_phase_csv(out / name, phase_diagram(p, resolution))


# ---- entry point ----------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="ordinal-thresholds", description=__doc__)
    sub = ap.add_subparsers(dest="command", required=True)
    for name in ("simulate", "sample", "audit", "phase-diagram"):
        sp = sub.add_parser(name)
        sp.add_argument("--plan", help="TOML or JSON experiment plan")
        sp.add_argument("--fast", action="store_true", help="fewer epochs for population fits")
        sp.add_argument("--out", default=None, help="output directory")
        sp.add_argument("--seed", type=int, default=None)
        sp.add_argument("--jobs", type=int, default=1, help="parallel fits")
        sp.add_argument("--distributions", nargs="+", default=None)
        sp.add_argument("--methods", nargs="+", default=None)
        sp.add_argument("--trials", type=int, default=None)
        sp.add_argument("-v", "--verbose", action="store_true")
        if name == "phase-diagram":
            sp.add_argument("--p", type=float, nargs=4, default=None, help="point masses p1..p4")
            sp.add_argument("--resolution", type=int, default=60)
    return ap


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.INFO, format="%(levelname)s %(message)s")
    try:
        plan = load_plan(args.plan, seed=args.seed, output_dir=args.out, distributions=args.distributions,
                         methods=args.methods, trials=args.trials)
    except (ValueError, OSError, tomllib.TOMLDecodeError, json.JSONDecodeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    out = Path(plan.output_dir)
    out.mkdir(parents=True, exist_ok=True)
    if args.command == "simulate":
        return run_simulation(plan, out, args.fast, args.jobs)
    if args.command == "sample":
        return run_sampled(plan, out, args.jobs)
    if args.command == "audit":
        return run_audits(plan, out, args.fast, args.jobs)
    _write_panels(out, args.resolution, [tuple(args.p)] if args.p else None)
    return 0


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
