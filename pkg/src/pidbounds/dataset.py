"""Annotated datasets: factor layout, per-record posteriors and strata.

The on-disk format is JSON lines.  The first line is a header::

    {"spec": {"factors": [{"name": "shape", "cardinality": 3}, ...],
              "layout": ["continuous", {"categorical": 3}, ...]}}

and every further line is one record::

    {"y": [0, 2, ...], "posterior": {"type": "diag_gaussian", "mean": [...], "std": [...]}}

``type`` may also be ``full_gaussian`` (with ``cov``) or ``mixed`` (with a
nested ``gaussian`` object and a ``categorical`` list of probability vectors).
"""
from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .errors import ContractError, DatasetValidationError
from .prob import (
    DiagGaussian,
    FullGaussian,
    LatentLayout,
    Mixed,
    PosteriorBatch,
    layout_of,
)


@dataclass(frozen=True)
class Factor:
    name: str
    cardinality: int


@dataclass(frozen=True)
class FactorSpec:
    factors: tuple

    def __post_init__(self):
        factors = tuple(f if isinstance(f, Factor) else Factor(**f) for f in self.factors)
        if not factors:
            raise ContractError("need at least one generative factor")
        names = [f.name for f in factors]
        if len(set(names)) != len(names):
            raise ContractError(f"factor names must be unique: {names}")
        for f in factors:
            if int(f.cardinality) != f.cardinality or f.cardinality < 2:
                raise ContractError(f"factor {f.name!r}: cardinality must be an integer >= 2")
        object.__setattr__(self, "factors", factors)

    @classmethod
    def from_cardinalities(cls, cards, names=None):
        names = names or [f"y{k}" for k in range(len(cards))]
        return cls(tuple(Factor(n, int(c)) for n, c in zip(names, cards)))

    @property
    def K(self):
        return len(self.factors)

    @property
    def cardinalities(self):
        return tuple(f.cardinality for f in self.factors)

    def to_json(self):
        return [{"name": f.name, "cardinality": f.cardinality} for f in self.factors]


class AnnotatedDataset:
    """Factor annotations plus posteriors for ``N`` records.

    Use :func:`build_dataset` rather than the constructor; it validates.

    Attributes
    ----------
    spec : FactorSpec
    layout : LatentLayout
    factor_values : int array, shape (N, K)
    posteriors : PosteriorBatch
    strata : tuple of tuples of int arrays
        ``strata[k][v]`` lists the records with ``y_k = v``.
    """

    def __init__(self, spec, layout, factor_values, posteriors, strata):
        self.spec = spec
        self.layout = layout
        self.factor_values = factor_values
        self.factor_values.setflags(write=False)
        self.posteriors = posteriors
        self.strata = strata

    def __len__(self):
        return len(self.posteriors)

    @property
    def K(self):
        return self.spec.K

    @property
    def L(self):
        return len(self.layout)

    def records(self):
        for i in range(len(self)):
            yield self.factor_values[i], self.posteriors.record(i)

    def with_posteriors(self, posteriors):
        """Same annotations, new posteriors (used by attacks)."""
        return AnnotatedDataset(
            self.spec, posteriors.layout, self.factor_values.copy(), posteriors, self.strata
        )


def build_dataset(spec, records, layout=None):
    """Validate records and index the strata ``D(y_k = v)``.

    ``records`` is a sequence of ``(factor_values, posterior)`` pairs.  Every
    problem found is collected and raised together in a
    :class:`DatasetValidationError`.
    """
    records = list(records)
    if not records:
        raise DatasetValidationError(["dataset has no records"])
    problems = []
    if layout is None:
        layout = layout_of(records[0][1])
    K = spec.K
    ys = np.zeros((len(records), K), dtype=np.int64)
    params = []
    for i, (y, post) in enumerate(records):
        y = np.asarray(y)
        if y.shape != (K,):
            problems.append(f"record {i}: expected {K} factor values, got {y.size}")
            continue
        if not np.issubdtype(y.dtype, np.integer):
            if np.any(y != np.round(y)):
                problems.append(f"record {i}: factor values must be integers")
                continue
            y = y.astype(np.int64)
        for k, f in enumerate(spec.factors):
            if not 0 <= y[k] < f.cardinality:
                problems.append(
                    f"record {i}: factor {f.name!r} value {int(y[k])} outside [0, {f.cardinality})"
                )
        if isinstance(post, Mixed) and post.layout != layout:
            problems.append(f"record {i}: posterior layout differs from dataset layout")
        elif not isinstance(post, Mixed) and layout_of(post) != layout:
            problems.append(
                f"record {i}: posterior layout {len(layout_of(post))} continuous slots "
                f"does not match dataset layout"
            )
        ys[i] = y
        params.append(post)
    if not problems:
        for k, f in enumerate(spec.factors):
            counts = np.bincount(ys[:, k], minlength=f.cardinality)
            for v in np.nonzero(counts == 0)[0]:
                problems.append(f"empty stratum: factor {k} ({f.name!r}) value {int(v)}")
    if problems:
        raise DatasetValidationError(problems)
    batch = PosteriorBatch.from_params(params, layout)
    strata = tuple(
        tuple(np.flatnonzero(ys[:, k] == v) for v in range(f.cardinality))
        for k, f in enumerate(spec.factors)
    )
    return AnnotatedDataset(spec, layout, ys, batch, strata)


def factor_entropy(dataset, k):
    """Empirical entropy of ``y_k`` over the records, in nats."""
    if not 0 <= k < dataset.K:
        raise ContractError(f"factor index {k} out of range")
    p = np.array([len(s) for s in dataset.strata[k]], dtype=float) / len(dataset)
    p = p[p > 0]
    return float(-np.sum(p * np.log(p)))


def uniformity_deviation(dataset, k):
    """Total-variation distance between the empirical ``y_k`` marginal and uniform."""
    p = np.array([len(s) for s in dataset.strata[k]], dtype=float) / len(dataset)
    return 0.5 * float(np.abs(p - 1.0 / p.size).sum())


# ---------------------------------------------------------------------------
# JSON lines


def _gaussian_from_json(obj):
    kind = obj.get("type")
    if kind == "full_gaussian" or (kind is None and "cov" in obj):
        return FullGaussian(obj["mean"], obj["cov"])
    if kind in ("diag_gaussian", None):
        return DiagGaussian(obj["mean"], obj["std"])
    raise ValueError(f"unknown Gaussian type {kind!r}")


def posterior_from_json(obj, layout=None):
    kind = obj.get("type")
    if kind == "mixed":
        g = obj.get("gaussian")
        gauss = None if g is None else _gaussian_from_json(g)
        return Mixed(gauss, tuple(obj.get("categorical", ())), layout)
    return _gaussian_from_json(obj)


def posterior_to_json(post):
    if isinstance(post, DiagGaussian):
        return {"type": "diag_gaussian", "mean": post.mean.tolist(), "std": post.std.tolist()}
    if isinstance(post, FullGaussian):
        return {"type": "full_gaussian", "mean": post.mean.tolist(), "cov": post.cov.tolist()}
    return {
        "type": "mixed",
        "gaussian": None if post.gaussian is None else posterior_to_json(post.gaussian),
        "categorical": [p.tolist() for p in post.categorical],
    }


def read_jsonl(path):
    """Parse a dataset file.  Errors name the offending line number."""
    path = Path(path)
    spec = layout = None
    records = []
    problems = []
    with path.open() as fh:
        for lineno, line in enumerate(fh, start=1):
            if not line.strip():
                continue
            try:
                obj = json.loads(line)
            except json.JSONDecodeError as e:
                problems.append(f"line {lineno}: invalid JSON ({e.msg})")
                continue
            try:
                if spec is None:
                    if "spec" not in obj:
                        raise ValueError("first line must be a header with a 'spec' object")
                    spec = FactorSpec(tuple(obj["spec"]["factors"]))
                    if obj["spec"].get("layout") is not None:
                        layout = LatentLayout.from_json(obj["spec"]["layout"])
                    continue
                post = posterior_from_json(obj["posterior"], layout)
                records.append((obj["y"], post))
            except (KeyError, TypeError, ValueError, ArithmeticError) as e:
                problems.append(f"line {lineno}: {type(e).__name__}: {e}")
    if spec is None:
        problems.append("missing header line")
    if problems:
        raise DatasetValidationError(problems)
    return build_dataset(spec, records, layout)


def write_jsonl(dataset, path):
    path = Path(path)
    with path.open("w") as fh:
        header = {"spec": {"factors": dataset.spec.to_json(), "layout": dataset.layout.to_json()}}
        fh.write(json.dumps(header) + "\n")
        for y, post in dataset.records():
            fh.write(json.dumps({"y": [int(v) for v in y], "posterior": posterior_to_json(post)}) + "\n")
