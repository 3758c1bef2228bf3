"""Run every algorithm of a scenario on every instance."""

import logging
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from ..beamforming.algorithms import (apig_fp_a, apig_fp_r, apig_fp_run,
                                      pg_baseline, psg_run, reference_config)
from ..beamforming.dual import dual_reference
from ..beamforming.fixed_point import FpDivergence
from ..oracle import ErrorBudget, ExactOracle, NoisyOracle, PowerSequence
from ..prox import NonnegIndicator, gradient_mapping
from ..solver import ApigConfig, Status, run, stepsize_floor
from .config import generate_instances

__all__ = ["RunReport", "run_suite", "run_instance", "COLUMNS", "METRICS"]

log = logging.getLogger(__name__)

COLUMNS = ["instance_id", "algorithm", "outer_iters", "total_fp_iters",
           "mean_fpi_per_outer", "final_delta", "final_dual_value", "status", "wall_ms"]
METRICS = ["outer_iters", "total_fp_iters", "mean_fpi_per_outer", "wall_ms"]

ADMITTED = "Converged"
_NONNEG = NonnegIndicator()


@dataclass
class RunReport:
    """Per-run rows and per-algorithm means over admitted runs.

    A row is admitted when its status is ``Converged``: the run stopped on
    its own test and passed the quality gate against the reference.
    """

    rows: list = field(default_factory=list)
    meta: dict = field(default_factory=dict)

    def algorithms(self):
        seen = []
        for r in self.rows:
            if r["algorithm"] not in seen:
                seen.append(r["algorithm"])
        return seen

    def admitted(self, algorithm=None):
        return [r for r in self.rows if r["status"] == ADMITTED
                and (algorithm is None or r["algorithm"] == algorithm)]

    def aggregates(self):
        """``{algorithm: {metric: mean, "runs": n_admitted, "total": n}}``."""
        out = {}
        for name in self.algorithms():
            rows = self.admitted(name)
            agg = {"runs": len(rows),
                   "total": sum(r["algorithm"] == name for r in self.rows)}
            for m in METRICS:
                agg[m] = float(np.mean([r[m] for r in rows])) if rows else float("nan")
            out[name] = agg
        return out


def _row(instance_id, algorithm, outer, total_fp, delta, value, status, wall_ms):
    return {"instance_id": instance_id, "algorithm": algorithm,
            "outer_iters": int(outer), "total_fp_iters": int(total_fp),
            "mean_fpi_per_outer": float(total_fp) / outer if outer else 0.0,
            "final_delta": float(delta), "final_dual_value": float(value),
            "status": str(status), "wall_ms": float(wall_ms)}


def _fp_config(spec, epsilon):
    p = dict(spec.params)
    if spec.kind == "pg":
        return pg_baseline(p.pop("precision", 1e-10), epsilon=epsilon, name=spec.name, **p)
    if spec.kind == "apig-fp-a":
        return apig_fp_a(p.pop("delta1", 2.0), p.pop("delta2", 1.2), epsilon=epsilon,
                         name=spec.name, **p)
    return apig_fp_r(p.pop("delta1", 1.0), p.pop("delta2", 1.2), p.pop("delta3", 1.0),
                     epsilon=epsilon, name=spec.name, **p)


def _quality(inst, x, lam, d_ref, config):
    ev = dual_reference(inst, x)
    stat = gradient_mapping(_NONNEG, lam, x, -ev.gradient).norm
    ok = stat <= config.grad_tol and abs(ev.value - d_ref) <= config.value_tol
    return ok, stat, ev.value


def _run_beamforming(idx, inst, config):
    rows = []
    iid = f"bf-{idx:04d}-s{inst.seed}"
    t0 = time.perf_counter()
    try:
        ref = apig_fp_run(inst, reference_config())
    except FpDivergence as exc:
        log.info("%s: reference failed: %s", iid, exc)
        ref = None
    if ref is None or ref.status is not Status.CONVERGED:
        status = "ReferenceFailed" if ref is None else f"Reference{ref.status}"
        return [_row(iid, "reference", 0 if ref is None else ref.n_iter, 0, np.nan,
                     np.nan, status, 1e3 * (time.perf_counter() - t0))]
    d_ref = dual_reference(inst, ref.x_final).value
    evals = []
    for spec in config.algorithms:
        if spec.kind == "psg":
            continue
        cfg = _fp_config(spec, config.epsilon)
        t0 = time.perf_counter()
        try:
            res = apig_fp_run(inst, cfg)
        except FpDivergence as exc:
            rows.append(_row(iid, spec.name, 0, 0, np.nan, np.nan, "FpDivergence",
                             1e3 * (time.perf_counter() - t0)))
            continue
        wall = 1e3 * (time.perf_counter() - t0)
        evals.append(res.info["gradient_evals"])
        status = str(res.status)
        lam = res.trace[-1].lam if res.trace else 1.0
        ok, _, value = _quality(inst, res.x_final, lam, d_ref, config)
        if res.status is Status.CONVERGED and not ok:
            status = "QualityFail"
        delta = res.trace[-1].delta_g if res.trace else np.nan
        rows.append(_row(iid, spec.name, res.n_iter, res.info["total_fp_iters"], delta,
                         value, status, wall))
    for spec in config.algorithms:
        if spec.kind != "psg":
            continue
        rows.append(_run_psg(iid, inst, spec, config, d_ref,
                             max(evals) if evals else 100))
    return rows


def _run_psg(iid, inst, spec, config, d_ref, default_budget):
    p = spec.params
    lambdas = p.get("lambdas", [1e-2, 1e-1, 1.0, 10.0])
    deltas = p.get("deltas", [1e-2, 1e-1, 1.0, 10.0])
    budget = int(p.get("max_iters", default_budget))
    best = None
    t0 = time.perf_counter()
    for lb in lambdas:
        for dl in deltas:
            try:
                tr = psg_run(inst, None, lb, dl, budget)
            except FpDivergence:
                continue
            v = max(tr.dual_values)
            if best is None or v > best[0]:
                best = (v, tr)
    wall = 1e3 * (time.perf_counter() - t0)
    if best is None:
        return _row(iid, spec.name, budget, 0, np.nan, np.nan, "FpDivergence", wall)
    v, tr = best
    x = tr.best_x
    ok, stat, value = _quality(inst, x, 1.0, d_ref, config)
    status = "Converged" if ok else "Budget"
    return _row(iid, spec.name, budget, tr.total_fp_iters, stat, value, status, wall)


def _run_synthetic(idx, prob, config):
    rows = []
    iid = f"{prob.name}-{idx:04d}"
    for spec in config.algorithms:
        if spec.kind != "apig":
            raise ValueError(f"algorithm {spec.kind!r} needs a beamforming scenario")
        p = dict(spec.params)
        d1, d2 = p.pop("delta1", 2.0), p.pop("delta2", 1.2)
        budget = ErrorBudget(eta_g=PowerSequence.from_deltas(d1, d2),
                             eta_f=PowerSequence.from_deltas(d1, d2))
        seed = p.pop("seed", idx)
        cfg = ApigConfig(epsilon=config.epsilon, budget=budget, **p)
        oracle = NoisyOracle(prob.fun, prob.h, budget, seed=seed, alpha=cfg.alpha,
                             lam_floor=stepsize_floor(cfg, prob.lipschitz_L))
        t0 = time.perf_counter()
        res = run(oracle, prob.h, cfg, np.zeros(prob.dim))
        wall = 1e3 * (time.perf_counter() - t0)
        status = str(res.status)
        x = res.x_final
        lam = res.trace[-1].lam if res.trace else 1.0
        stat = gradient_mapping(prob.h, lam, x, prob.grad(x)).norm
        gap = prob.F(x) - prob.f_star
        if res.status is Status.CONVERGED and not (stat <= config.grad_tol
                                                   and gap <= config.value_tol):
            status = "QualityFail"
        delta = res.trace[-1].delta_g if res.trace else np.nan
        rows.append(_row(iid, spec.name, res.n_iter, res.total_inner_cost, delta,
                         prob.F(x), status, wall))
    return rows


def run_instance(args):
    """Worker entry point: all algorithms on one instance."""
    idx, inst, config = args
    if config.problem_kind == "beamforming":
        return _run_beamforming(idx, inst, config)
    return _run_synthetic(idx, inst, config)


def run_suite(config, jobs=1, instances=None):
    """Run the scenario and return a :class:`RunReport`.

    Failures of individual runs are recorded in their status; the suite
    itself only raises on configuration errors.
    """
    if instances is None:
        instances = generate_instances(config)
    tasks = [(j, inst, config) for j, inst in enumerate(instances)]
    if jobs > 1 and len(tasks) > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            results = list(pool.map(run_instance, tasks))
    else:
        results = [run_instance(t) for t in tasks]
    report = RunReport([r for rows in results for r in rows])
    report.meta = {"draws": getattr(instances, "draws", len(instances)),
                   "infeasible_draws": getattr(instances, "infeasible", 0),
                   "inactive_draws": getattr(instances, "inactive", 0),
                   "budget_infeasible_draws": getattr(instances, "budget_infeasible", 0),
                   "instances": len(instances)}
    return report
