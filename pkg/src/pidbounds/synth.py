"""Synthetic encoders over a full factorial grid of discrete factors."""
from __future__ import annotations

import itertools
from dataclasses import dataclass

import numpy as np

from .attacks import reflection_matrix
from .dataset import FactorSpec, build_dataset
from .errors import ContractError
from .prob import DiagGaussian

KINDS = ("ideal", "duplicated", "rotated")


@dataclass(frozen=True)
class SyntheticSpec:
    """Grid of factors and a linear-Gaussian encoder.

    ``ideal`` puts factor ``k`` on slot ``k`` (extra slots get mean 0),
    ``duplicated`` repeats the ideal code ``(m, m)`` and needs ``L >= 2K``,
    ``rotated`` applies the reflection ``I - (2/K) 1 1^T`` to the ideal code.
    """

    cardinalities: tuple
    L: int
    sigma: float = 0.05
    kind: str = "ideal"

    def __post_init__(self):
        object.__setattr__(self, "cardinalities", tuple(int(c) for c in self.cardinalities))
        K = len(self.cardinalities)
        if K < 1 or any(c < 2 for c in self.cardinalities):
            raise ContractError("need at least one factor, each with cardinality >= 2")
        if self.kind not in KINDS:
            raise ContractError(f"encoder kind must be one of {KINDS}")
        if self.sigma <= 0:
            raise ContractError("sigma must be positive")
        need = 2 * K if self.kind == "duplicated" else K
        if self.L < need:
            raise ContractError(f"{self.kind} encoder needs L >= {need}")

    @property
    def K(self):
        return len(self.cardinalities)


def factor_code(values, cardinalities):
    """Map factor value ``v`` of a ``c``-valued factor to ``2v/(c-1) - 1``."""
    c = np.asarray(cardinalities, dtype=float)
    return 2.0 * np.asarray(values, dtype=float) / (c - 1.0) - 1.0


def encoder_mean(spec, values):
    m = factor_code(values, spec.cardinalities)
    out = np.zeros(spec.L)
    if spec.kind == "ideal":
        out[: spec.K] = m
    elif spec.kind == "duplicated":
        out[: spec.K] = m
        out[spec.K : 2 * spec.K] = m
    else:
        out[: spec.K] = reflection_matrix(spec.K) @ m
    return out


def synthesize(spec):
    """Build the full factorial dataset for ``spec``."""
    fspec = FactorSpec.from_cardinalities(spec.cardinalities)
    std = np.full(spec.L, spec.sigma)
    records = [
        (np.array(v), DiagGaussian(encoder_mean(spec, v), std))
        for v in itertools.product(*(range(c) for c in spec.cardinalities))
    ]
    return build_dataset(fspec, records)
