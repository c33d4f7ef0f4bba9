"""Evaluation runs and attack sweeps producing JSON reports and CSV rows."""
from __future__ import annotations

import csv
import json
import time
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from . import classic
from .attacks import AttackConfig, attack_dataset
from .dataset import factor_entropy, uniformity_deviation
from .errors import ContractError
from .estimator import DEFAULT_SAMPLES, estimate_mi_table
from .pid import aggregate_pid, mig, score_std_error, unibound
from .toy import GAUSSIAN_FACTOR_ENTROPY

SCHEMA_VERSION = 1
METRICS = ("unibound", "mig", "betavae", "factorvae", "pid")
MI_METRICS = ("unibound", "mig", "pid")

# empirical factor marginals further than this from uniform (TV) trigger a warning
UNIFORMITY_TOL = 0.01


@dataclass(frozen=True)
class EvaluationRequest:
    metrics: tuple = METRICS
    samples: int = DEFAULT_SAMPLES
    seed: int = 0
    attack: Optional[AttackConfig] = None
    inner_subsample: Optional[int] = None
    normalizer: str = "empirical"
    intervention: classic.InterventionConfig = field(default_factory=classic.InterventionConfig)
    dataset_path: Optional[str] = None

    def __post_init__(self):
        metrics = tuple(self.metrics)
        if not metrics:
            raise ContractError("select at least one metric")
        unknown = set(metrics) - set(METRICS)
        if unknown:
            raise ContractError(f"unknown metrics {sorted(unknown)}")
        object.__setattr__(self, "metrics", tuple(m for m in METRICS if m in metrics))
        if self.samples < 1:
            raise ContractError("samples must be >= 1")
        if self.normalizer not in ("empirical", "gaussian"):
            raise ContractError("normalizer must be 'empirical' or 'gaussian'")

    def settings(self):
        return {
            "dataset": self.dataset_path,
            "metrics": list(self.metrics),
            "samples": self.samples,
            "seed": self.seed,
            "attack": None if self.attack is None else self.attack.to_json(),
            "inner_subsample": self.inner_subsample,
            "normalizer": self.normalizer,
            "intervention": {
                "pairs_per_vote": self.intervention.pairs_per_vote,
                "train_votes": self.intervention.train_votes,
                "test_votes": self.intervention.test_votes,
                "global_samples": self.intervention.global_samples,
            },
        }


def normalizers(dataset, kind):
    if kind == "gaussian":
        return np.full(dataset.K, GAUSSIAN_FACTOR_ENTROPY)
    return np.array([factor_entropy(dataset, k) for k in range(dataset.K)])


def evaluate(dataset, request):
    """Run one evaluation and return the report as a JSON-ready dict.

    All MI-based metrics share a single MI table.  The classic metrics use
    their own seeded streams derived from the request seed.
    """
    start = time.perf_counter()
    warnings = []
    for k in range(dataset.K):
        c = len(dataset.strata[k])
        if request.samples < c:
            raise ContractError(f"samples={request.samples} is below factor {k}'s cardinality {c}")
        tv = uniformity_deviation(dataset, k)
        if tv > UNIFORMITY_TOL:
            warnings.append(
                f"factor {k} marginal deviates from uniform (TV {tv:.3f}); stratified sampling assumes uniform"
            )
    if request.attack is not None:
        dataset = attack_dataset(dataset, request.attack)
    if "mig" in request.metrics and dataset.L < 2:
        raise ContractError("MIG needs at least two latent slots")
    h = normalizers(dataset, request.normalizer)
    scores = {}
    report = {"schema": SCHEMA_VERSION, "settings": request.settings()}
    if any(m in request.metrics for m in MI_METRICS):
        table = estimate_mi_table(dataset, request.samples, request.seed, request.inner_subsample)
        warnings.extend(table.warnings)
        if "unibound" in request.metrics:
            scores["unibound"] = {
                "value": unibound(table, h),
                "std_error": score_std_error(table, h, "unibound"),
            }
        if "mig" in request.metrics:
            scores["mig"] = {
                "value": mig(table, h),
                "std_error": score_std_error(table, h, "mig"),
                "gap_clamping": "per-factor gaps clamped at 0",
            }
        if "pid" in request.metrics:
            agg = aggregate_pid(table, h)
            warnings.extend(agg.flags)
            report["pid"] = agg.to_json()
        report["mi_table"] = table.to_json()
    config = classic.InterventionConfig(**{**request.settings()["intervention"], "seed": request.seed})
    for name, fn in (("betavae", classic.betavae_metric), ("factorvae", classic.factorvae_metric)):
        if name in request.metrics:
            res = fn(dataset, config)
            n = config.test_votes
            scores[name] = {
                "value": res.score,
                "std_error": float(np.sqrt(res.score * (1 - res.score) / n)),
            }
            warnings.extend(f"{name}: {f}" for f in res.flags)
    report["scores"] = scores
    report["normalizers"] = h.tolist()
    report["warnings"] = warnings
    report["wall_time_s"] = time.perf_counter() - start
    return report


def report_body(report):
    """Serialized report without the wall-time field, for reproducibility checks."""
    body = {k: v for k, v in report.items() if k != "wall_time_s"}
    return json.dumps(body, sort_keys=True)


def write_report(report, path):
    with open(path, "w") as fh:
        json.dump(report, fh, indent=2, sort_keys=True)
        fh.write("\n")


def derived_seed(master, index):
    """Independent per-step seed derived from a master seed."""
    return int(np.random.SeedSequence([int(master), int(index)]).generate_state(1)[0])


SWEEP_COLUMNS = ("alpha", "metric", "value", "std_error_proxy")


def sweep(dataset, request, alphas):
    """Evaluate the configured attack at each strength in ``alphas``.

    Returns ``(rows, reports)`` where every row is
    ``(alpha, metric, value, std_error_proxy)``.
    """
    if request.attack is None:
        raise ContractError("sweep needs an attack configuration")
    rows = []
    reports = []
    for i, alpha in enumerate(alphas):
        attack = AttackConfig(request.attack.kind, float(alpha), request.attack.mixing)
        req = EvaluationRequest(
            metrics=tuple(m for m in request.metrics if m != "pid"),
            samples=request.samples,
            seed=derived_seed(request.seed, i),
            attack=attack,
            inner_subsample=request.inner_subsample,
            normalizer=request.normalizer,
            intervention=request.intervention,
            dataset_path=request.dataset_path,
        )
        rep = evaluate(dataset, req)
        reports.append(rep)
        for name, s in rep["scores"].items():
            rows.append((float(alpha), name, s["value"], s["std_error"]))
    return rows, reports


def format_cell(x):
    """Shortest round-tripping text for floats (numpy scalars included)."""
    return repr(float(x)) if isinstance(x, (float, np.floating)) else x


def write_csv(rows, columns, path):
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(columns)
        for r in rows:
            w.writerow([format_cell(x) for x in r])


def read_csv(path):
    with open(path, newline="") as fh:
        r = csv.reader(fh)
        header = next(r)
        return header, [row for row in r]
