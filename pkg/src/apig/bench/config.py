"""Scenario configuration and instance generation for benchmark sweeps."""

import json
from dataclasses import asdict, dataclass, field

import numpy as np

from ..beamforming.algorithms import apig_fp_run, reference_config
from ..beamforming.dual import evaluate_dual
from ..beamforming.fixed_point import FpDivergence, solve_fp_stage1
from ..beamforming.network import random_instance
from ..problems import make_lasso, make_nnls, make_nonconvex_quartic

__all__ = ["ConfigError", "AlgorithmSpec", "ScenarioConfig", "InstanceBatch",
           "generate_instances", "load_config"]

PROBLEM_KINDS = ("beamforming", "nnls", "lasso", "quartic")
ALGORITHM_KINDS = ("pg", "apig-fp-a", "apig-fp-r", "psg", "apig")


class ConfigError(ValueError):
    """Invalid scenario configuration."""


@dataclass
class AlgorithmSpec:
    """One algorithm of a sweep.

    ``kind`` selects the method; ``params`` holds its settings, e.g.
    ``{"delta1": 2, "delta2": 1.2}`` for ``apig-fp-a`` or
    ``{"lambdas": [0.01, 0.1, 1, 10], "deltas": [0.01, 0.1, 1, 10]}`` for
    ``psg``. ``name`` labels rows in the report.
    """

    kind: str
    name: str = None
    params: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.kind not in ALGORITHM_KINDS:
            raise ConfigError(f"unknown algorithm kind {self.kind!r}")
        if self.name is None:
            self.name = {"pg": "PG", "apig-fp-a": "APIG-FP-A", "apig-fp-r": "APIG-FP-R",
                         "psg": "PSG", "apig": "APIG"}[self.kind]
        if self.kind in ("apig-fp-a", "apig-fp-r"):
            d2 = self.params.get("delta2", 1.2)
            if not d2 > 1.0:
                raise ConfigError(f"{self.name}: delta2 must exceed 1 for summable "
                                  f"tolerances, got {d2}")


def _default_algorithms():
    return [AlgorithmSpec("pg"),
            AlgorithmSpec("apig-fp-a", params={"delta1": 2.0, "delta2": 1.2}),
            AlgorithmSpec("apig-fp-r", params={"delta1": 1.0, "delta2": 1.2, "delta3": 1.0})]


@dataclass
class ScenarioConfig:
    """A benchmark scenario.

    Beamforming fields: ``M``, ``K``, ``gamma_bar``, ``p_bar``, ``sigma2``,
    ``require_active`` (discard draws whose budgets are all slack at
    ``x = 0``), ``screen_budgets`` (discard draws whose budgets cannot be
    met). Synthetic fields: ``m``, ``n``, ``lambda_l1``.
    """

    problem_kind: str = "beamforming"
    M: int = 5
    K: int = 5
    gamma_bar: float = 3.0
    p_bar: float = 4.0
    sigma2: float = 1.0
    capacity_mode: str = "infinite"
    require_active: bool = True
    screen_budgets: bool = True
    m: int = 20
    n: int = 10
    lambda_l1: float = 0.5
    algorithms: list = field(default_factory=_default_algorithms)
    n_instances: int = 10
    base_seed: int = 0
    epsilon: float = 1e-6
    max_draws_factor: int = 100
    probe_cap: int = 5_000
    grad_tol: float = 1e-5
    value_tol: float = 1e-6

    def __post_init__(self):
        if self.problem_kind not in PROBLEM_KINDS:
            raise ConfigError(f"unknown problem kind {self.problem_kind!r}")
        if self.capacity_mode != "infinite":
            raise ConfigError("only the infinite fronthaul-capacity mode is implemented")
        self.algorithms = [a if isinstance(a, AlgorithmSpec) else AlgorithmSpec(**a)
                           for a in self.algorithms]
        names = [a.name for a in self.algorithms]
        if len(set(names)) != len(names):
            raise ConfigError("algorithm names must be unique")
        if self.n_instances < 0:
            raise ConfigError("n_instances must be nonnegative")
        if min(self.M, self.K) < 1 or min(self.gamma_bar, self.p_bar, self.sigma2) <= 0:
            raise ConfigError("network dimensions and powers must be positive")
        if not self.epsilon > 0:
            raise ConfigError("epsilon must be positive")

    def to_dict(self):
        d = asdict(self)
        return d

    @classmethod
    def from_dict(cls, d):
        known = set(cls.__dataclass_fields__)
        unknown = set(d) - known
        if unknown:
            raise ConfigError(f"unknown config keys: {sorted(unknown)}")
        try:
            return cls(**d)
        except TypeError as exc:
            raise ConfigError(str(exc)) from exc


def load_config(path):
    """Read a JSON scenario file."""
    try:
        with open(path) as fh:
            data = json.load(fh)
    except (OSError, json.JSONDecodeError) as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    return ScenarioConfig.from_dict(data)


class InstanceBatch(list):
    """Generated instances plus screening counts."""

    draws = 0
    infeasible = 0
    inactive = 0
    budget_infeasible = 0


def _instance_seed(base_seed, draw):
    return int(base_seed) * 1_000_003 + draw


def generate_instances(config):
    """Draw `config.n_instances` instances deterministically from `base_seed`.

    Beamforming draws are probed at ``x = 0``: draws whose SINR targets are
    infeasible (stage-1 divergence) are discarded and counted, and with
    ``require_active`` draws where no antenna budget binds are discarded as
    well. With ``screen_budgets`` a high-precision reference run must
    converge; draws whose multipliers diverge (the per-antenna budgets
    cannot be met) are discarded. More than 90% SINR-infeasible draws is a
    configuration error.
    """
    batch = InstanceBatch()
    kind = config.problem_kind
    if kind != "beamforming":
        for j in range(config.n_instances):
            seed = _instance_seed(config.base_seed, j)
            if kind == "nnls":
                batch.append(make_nnls(config.m, config.n, seed))
            elif kind == "lasso":
                batch.append(make_lasso(config.m, config.n, config.lambda_l1, seed))
            else:
                batch.append(make_nonconvex_quartic(config.n, seed))
        batch.draws = config.n_instances
        return batch

    max_draws = max(config.max_draws_factor * max(config.n_instances, 1), 20)
    draw = 0
    x0 = np.zeros(config.M)
    while len(batch) < config.n_instances:
        if draw >= max_draws:
            raise ConfigError(f"only {len(batch)} usable instances after {draw} draws")
        seed = _instance_seed(config.base_seed, draw)
        inst = random_instance(config.M, config.K, config.gamma_bar, config.p_bar,
                               config.sigma2, seed)
        draw += 1
        try:
            solve_fp_stage1(inst, x0, np.ones(config.K), 1e-6, config.probe_cap)
        except FpDivergence:
            batch.infeasible += 1
            if draw >= 20 and batch.infeasible > 0.9 * draw:
                raise ConfigError(f"{batch.infeasible} of {draw} draws have infeasible "
                                  "SINR targets; lower gamma_bar")
            continue
        if config.require_active:
            ev = evaluate_dual(inst, x0, 1e-8, cap=config.probe_cap)
            if ev.gradient.max() <= 0.0:
                batch.inactive += 1
                continue
        if config.screen_budgets:
            try:
                ok = apig_fp_run(inst, reference_config()).converged
            except FpDivergence:
                ok = False
            if not ok:
                batch.budget_infeasible += 1
                continue
        batch.append(inst)
    batch.draws = draw
    return batch
