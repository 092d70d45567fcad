"""Seeded benchmark harness: runs every training method on shared per-trial
data, aggregates accuracies, and emits reproducible reports.

Method semantics (all evaluated on the same held-out clean test data):

* ``clean``       fit on the clean training sample;
* ``noisy``       fit on the corrupted training sample;
* ``auto``        fit on cap-threshold auto-collected distilled examples only;
* ``noisy_act``   fit on the corrupted sample with the actively-queried
                  examples' labels replaced by oracle labels (the exact same
                  indices the ``auto_act`` pipeline queries, for fairness);
* ``auto_act``    the full pipeline: estimate the noisy posterior, auto-collect
                  with the caps, actively label from the remaining pool,
                  compute kernel-mean-matching weights against all training
                  points, and fit with those weights;
* ``*_wo``        the same three methods with cap thresholds replaced by
                  k-nearest-neighborhood bound estimates (no caps needed).

Every trial derives all of its randomness from (base_seed, trial_index), so
results do not depend on execution order and a rerun of the same config
produces a byte-identical report.
"""

from __future__ import annotations

import json
from dataclasses import asdict, dataclass, field, replace
from functools import cached_property

import numpy as np

from .data import LabeledSample, SplitConfig, load_csv, split, standardize
from .distill import (
    DistillOutcome,
    LabelOracle,
    active_label,
    collect_knn,
    collect_with_bounds,
    with_active,
)
from .kmm import ImportanceWeights, KernelSpec, build_problem, solve
from .logistic import FitConfig, LinearModel, fit, predict_proba
from .synthetic import (
    GaussianPairSpec,
    bayes_labels,
    corrupt,
    sample_clean,
    sample_noise_model,
)
from .weighted import accuracy, train_weighted

METHOD_NAMES = (
    "clean",
    "noisy",
    "auto",
    "noisy_act",
    "auto_act",
    "auto_wo",
    "noisy_act_wo",
    "auto_act_wo",
)

_KNN_METHODS = {"auto_wo", "noisy_act_wo", "auto_act_wo"}
_SYNTHETIC_PROBE_SIZE = 10_000


class ConfigError(ValueError):
    """Invalid experiment configuration."""


class DegenerateTrialError(RuntimeError):
    """A method ended up with an empty training set in this trial."""


@dataclass(frozen=True)
class ExperimentConfig:
    dataset: str = "synthetic"  # "synthetic" or a path to a CSV file
    rho_pos_max: float = 0.25
    rho_neg_max: float = 0.25
    n_act: int = 3
    methods: tuple[str, ...] = ("clean", "noisy", "auto", "noisy_act", "auto_act")
    trials: int = 200
    base_seed: int = 0
    k: int = 10
    sigma: float | None = None  # kernel scale; defaults to 1.0 synthetic / 0.01 csv
    kmm_B: float = 1000.0
    n_train: int = 400
    n_test: int = 2000
    train_fraction: float = 0.75
    oracle: str = "clean"  # "clean" labels, or "bayes" labels (synthetic only)
    swap_knn_bounds: bool = False

    def __post_init__(self):
        object.__setattr__(self, "methods", tuple(self.methods))

    @property
    def synthetic(self) -> bool:
        return self.dataset == "synthetic"

    @property
    def resolved_sigma(self) -> float:
        if self.sigma is not None:
            return self.sigma
        return 1.0 if self.synthetic else 0.01

    def validate(self) -> None:
        if self.trials < 1:
            raise ConfigError("trials must be at least 1")
        if self.n_act < 0:
            raise ConfigError("n_act must be non-negative")
        if not self.methods:
            raise ConfigError("at least one method must be selected")
        unknown = [m for m in self.methods if m not in METHOD_NAMES]
        if unknown:
            raise ConfigError(f"unknown methods: {unknown}")
        if not (0.0 <= self.rho_pos_max < 1.0 and 0.0 <= self.rho_neg_max < 1.0):
            raise ConfigError("noise rate bounds must lie in [0, 1)")
        if self.k < 1:
            raise ConfigError("k must be at least 1")
        if self.sigma is not None and self.sigma <= 0.0:
            raise ConfigError("sigma must be positive")
        if self.kmm_B <= 0.0:
            raise ConfigError("kmm_B must be positive")
        if self.n_train < 1 or self.n_test < 1:
            raise ConfigError("n_train and n_test must be positive")
        if not 0.0 < self.train_fraction < 1.0:
            raise ConfigError("train_fraction must lie strictly between 0 and 1")
        if self.oracle not in ("clean", "bayes"):
            raise ConfigError("oracle must be 'clean' or 'bayes'")
        if self.oracle == "bayes" and not self.synthetic:
            raise ConfigError("the bayes oracle is only available in synthetic mode")

    def to_dict(self) -> dict:
        obj = asdict(self)
        obj["methods"] = list(self.methods)
        return obj

    @classmethod
    def from_dict(cls, obj: dict) -> "ExperimentConfig":
        known = set(cls.__dataclass_fields__)
        unknown = set(obj) - known
        if unknown:
            raise ConfigError(f"unknown config keys: {sorted(unknown)}")
        try:
            cfg = cls(**obj)
        except TypeError as exc:
            raise ConfigError(str(exc)) from None
        cfg.validate()
        return cfg

    @classmethod
    def from_json_file(cls, path) -> "ExperimentConfig":
        try:
            with open(path, "r", encoding="utf-8") as fh:
                obj = json.load(fh)
        except (OSError, json.JSONDecodeError) as exc:
            raise ConfigError(f"cannot read config {path}: {exc}") from None
        if not isinstance(obj, dict):
            raise ConfigError("config file must hold a JSON object")
        return cls.from_dict(obj)


@dataclass
class _Pipeline:
    """One collection route (cap thresholds or knn bounds) within a trial."""

    outcome: DistillOutcome
    active_pairs: list[tuple[int, int]]
    full: DistillOutcome
    weights: ImportanceWeights | None = None
    audit: dict = field(default_factory=dict)


class TrialData:
    """Per-trial working set; shares intermediate results across methods."""

    def __init__(self, cfg: ExperimentConfig, trial: int, csv_sample: LabeledSample | None):
        self.cfg = cfg
        self.trial = trial
        streams = np.random.SeedSequence((cfg.base_seed, trial)).spawn(7)
        spec = GaussianPairSpec()
        self.spec = spec if cfg.synthetic else None
        if cfg.synthetic:
            clean_train = sample_clean(spec, cfg.n_train, streams[0])
            test = sample_clean(spec, cfg.n_test, streams[1])
            probe = None
            if cfg.rho_pos_max + cfg.rho_neg_max >= 1.0:
                probe = sample_clean(spec, _SYNTHETIC_PROBE_SIZE, streams[6]).features
        else:
            seed = int(streams[0].generate_state(1, np.uint64)[0])
            raw_train, raw_test = split(csv_sample, SplitConfig(cfg.train_fraction, seed))
            clean_train, [test], _ = standardize(raw_train, [raw_test])
            probe = clean_train.features
        self.clean_train = clean_train
        self.test = test
        self.noise = sample_noise_model(
            cfg.rho_pos_max, cfg.rho_neg_max, clean_train.dim, streams[2], probe=probe
        )
        self.noisy_train = corrupt(clean_train, self.noise, streams[3])
        if cfg.oracle == "bayes":
            oracle_labels = bayes_labels(spec, clean_train.features)
        else:
            oracle_labels = clean_train.labels
        self.oracle = LabelOracle(oracle_labels)
        self._active_streams = {"bounds": streams[4], "knn": streams[5]}
        self._pipelines: dict[str, _Pipeline] = {}

    @cached_property
    def noisy_model(self) -> LinearModel:
        return fit(self.noisy_train)

    @cached_property
    def eta_hat(self) -> np.ndarray:
        return predict_proba(self.noisy_model, self.noisy_train.features)

    @cached_property
    def clean_model(self) -> LinearModel:
        return fit(self.clean_train)

    def pipeline(self, route: str) -> _Pipeline:
        if route not in self._pipelines:
            if route == "bounds":
                outcome = collect_with_bounds(
                    self.noisy_train, self.eta_hat,
                    self.cfg.rho_pos_max, self.cfg.rho_neg_max,
                )
            else:
                outcome = collect_knn(
                    self.noisy_train, self.eta_hat, self.cfg.k,
                    swap_bounds=self.cfg.swap_knn_bounds,
                )
            n_act = min(self.cfg.n_act, len(outcome.remaining_indices))
            pairs = active_label(
                self.noisy_train, outcome.remaining_indices, n_act,
                self.oracle, self._active_streams[route],
            )
            full = with_active(outcome, self.noisy_train, pairs)
            labels = outcome.distilled.labels
            audit = {
                "n_auto_pos": int(np.sum(labels == 1)),
                "n_auto_neg": int(np.sum(labels == -1)),
                "n_remaining": int(len(outcome.remaining_indices)),
                "n_active": len(pairs),
                "active_indices": [i for i, _ in pairs],
                "kmm": None,
            }
            self._pipelines[route] = _Pipeline(outcome, pairs, full, audit=audit)
        return self._pipelines[route]

    def kmm_weights(self, route: str) -> ImportanceWeights:
        pl = self.pipeline(route)
        if pl.weights is None:
            problem = build_problem(
                pl.full.distilled.features,
                self.noisy_train.features,
                KernelSpec(self.cfg.resolved_sigma),
                B=self.cfg.kmm_B,
            )
            pl.weights = solve(problem)
            beta = pl.weights.beta
            pl.audit["kmm"] = {
                "m": int(problem.m),
                "objective": float(pl.weights.objective),
                "kkt_residual": float(pl.weights.kkt_residual),
                "iterations": int(pl.weights.iterations),
                "beta_min": float(beta.min()),
                "beta_max": float(beta.max()),
                "beta_mean": float(beta.mean()),
                "beta_sum": float(beta.sum()),
                "box_violation": problem.box_violation(beta),
                "slab_violation": problem.slab_violation(beta),
            }
        return pl.weights

    def _replaced_noisy(self, pairs: list[tuple[int, int]]) -> LabeledSample:
        labels = self.noisy_train.labels.copy()
        for index, label in pairs:
            labels[index] = label
        return LabeledSample(self.noisy_train.features, labels, "noisy")


def run_method(method: str, td: TrialData) -> float:
    """Train per the method's semantics and return clean test accuracy."""
    if method == "clean":
        model = td.clean_model
    elif method == "noisy":
        model = td.noisy_model
    elif method in ("auto", "auto_wo"):
        route = "knn" if method in _KNN_METHODS else "bounds"
        distilled = td.pipeline(route).outcome.distilled
        if len(distilled) == 0:
            raise DegenerateTrialError("auto-collection produced no examples")
        model = fit(distilled)
    elif method in ("noisy_act", "noisy_act_wo"):
        route = "knn" if method in _KNN_METHODS else "bounds"
        model = fit(td._replaced_noisy(td.pipeline(route).active_pairs))
    elif method in ("auto_act", "auto_act_wo"):
        route = "knn" if method in _KNN_METHODS else "bounds"
        full = td.pipeline(route).full
        if len(full.distilled) == 0:
            raise DegenerateTrialError(
                "no distilled examples (empty auto-collection and no active labels)"
            )
        model = train_weighted(full.distilled, td.kmm_weights(route))
    else:
        raise ConfigError(f"unknown method {method!r}")
    return accuracy(model, td.test)


@dataclass(frozen=True)
class TrialReport:
    """Aggregated per-method accuracies plus per-trial audit records."""

    config: dict
    n_trials: int
    methods: dict
    failures: list
    trials: list

    def to_json(self) -> str:
        payload = {
            "schema_version": 1,
            "config": self.config,
            "n_trials": self.n_trials,
            "methods": self.methods,
            "failures": self.failures,
            "trials": self.trials,
        }
        return json.dumps(payload, sort_keys=True, separators=(",", ":")) + "\n"

    def setting_label(self) -> str:
        cfg = self.config
        return f"({cfg['rho_pos_max']:g},{cfg['rho_neg_max']:g},{cfg['n_act']})"


def _aggregate(values_pct: list) -> tuple[float | None, float | None]:
    present = [v for v in values_pct if v is not None]
    if not present:
        return None, None
    arr = np.asarray(present, dtype=np.float64)
    return float(arr.mean()), float(arr.std())


def run_experiment(cfg: ExperimentConfig) -> TrialReport:
    """Run all configured methods over seeded trials and aggregate."""
    cfg.validate()
    csv_sample = None
    if not cfg.synthetic:
        csv_sample = load_csv(cfg.dataset)
        if len(csv_sample) < 2:
            raise ConfigError(f"dataset {cfg.dataset} has too few rows")
    per_method: dict[str, list] = {m: [] for m in cfg.methods}
    failures = []
    audits = []
    for trial in range(cfg.trials):
        td = TrialData(cfg, trial, csv_sample)
        for method in cfg.methods:
            try:
                acc = run_method(method, td)
            except DegenerateTrialError as exc:
                per_method[method].append(None)
                failures.append({"trial": trial, "method": method, "reason": str(exc)})
            else:
                per_method[method].append(float(acc) * 100.0)
        audit = {
            "trial": trial,
            "noise_model": td.noise.to_dict(),
            "pipelines": {
                route: pl.audit for route, pl in sorted(td._pipelines.items())
            },
        }
        audits.append(audit)
    methods = {}
    for name in cfg.methods:
        mean_pct, std_pct = _aggregate(per_method[name])
        methods[name] = {
            "accuracy_pct": per_method[name],
            "mean_pct": mean_pct,
            "std_pct": std_pct,
            "n_failed": sum(1 for v in per_method[name] if v is None),
        }
    return TrialReport(
        config=cfg.to_dict(),
        n_trials=cfg.trials,
        methods=methods,
        failures=failures,
        trials=audits,
    )


def k_sweep(cfg: ExperimentConfig, k_values: list[int]) -> dict[int, TrialReport]:
    """Rerun the experiment for each k with identical seeds, for paired sweeps."""
    if not k_values:
        raise ConfigError("k_values must be non-empty")
    if not any(m in _KNN_METHODS for m in cfg.methods):
        raise ConfigError("k_sweep requires at least one *_wo method")
    return {int(k): run_experiment(replace(cfg, k=int(k))) for k in k_values}


def summary_csv(report: TrialReport) -> str:
    """CSV with columns setting, method, mean_pct, std_pct."""
    lines = ["setting,method,mean_pct,std_pct"]
    label = report.setting_label()
    for name in METHOD_NAMES:
        if name not in report.methods:
            continue
        stats = report.methods[name]
        mean = "" if stats["mean_pct"] is None else repr(stats["mean_pct"])
        std = "" if stats["std_pct"] is None else repr(stats["std_pct"])
        lines.append(f"{label},{name},{mean},{std}")
    return "\n".join(lines) + "\n"


def sweep_csv(reports: dict[int, TrialReport]) -> str:
    """CSV with columns k, method, mean_pct, std_pct for plotting sweeps."""
    lines = ["k,method,mean_pct,std_pct"]
    for k in sorted(reports):
        report = reports[k]
        for name in METHOD_NAMES:
            if name not in report.methods:
                continue
            stats = report.methods[name]
            mean = "" if stats["mean_pct"] is None else repr(stats["mean_pct"])
            std = "" if stats["std_pct"] is None else repr(stats["std_pct"])
            lines.append(f"{k},{name},{mean},{std}")
    return "\n".join(lines) + "\n"


REPORT_SCHEMA = {
    "$schema": "http://json-schema.org/draft-07/schema#",
    "type": "object",
    "required": ["schema_version", "config", "n_trials", "methods", "failures", "trials"],
    "additionalProperties": False,
    "properties": {
        "schema_version": {"const": 1},
        "config": {"type": "object"},
        "n_trials": {"type": "integer", "minimum": 1},
        "methods": {
            "type": "object",
            "additionalProperties": {
                "type": "object",
                "required": ["accuracy_pct", "mean_pct", "std_pct", "n_failed"],
                "additionalProperties": False,
                "properties": {
                    "accuracy_pct": {
                        "type": "array",
                        "items": {
                            "type": ["number", "null"],
                        },
                    },
                    "mean_pct": {"type": ["number", "null"], "minimum": 0, "maximum": 100},
                    "std_pct": {"type": ["number", "null"], "minimum": 0},
                    "n_failed": {"type": "integer", "minimum": 0},
                },
            },
        },
        "failures": {
            "type": "array",
            "items": {
                "type": "object",
                "required": ["trial", "method", "reason"],
                "properties": {
                    "trial": {"type": "integer"},
                    "method": {"type": "string"},
                    "reason": {"type": "string"},
                },
            },
        },
        "trials": {
            "type": "array",
            "items": {
                "type": "object",
                "required": ["trial", "noise_model", "pipelines"],
                "properties": {
                    "trial": {"type": "integer"},
                    "noise_model": {
                        "type": "object",
                        "required": ["rho_pos_max", "rho_neg_max", "w_pos", "w_neg"],
                    },
                    "pipelines": {"type": "object"},
                },
            },
        },
    },
}
