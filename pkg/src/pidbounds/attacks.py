"""Redundancy and synergy entanglement attacks on Gaussian posteriors.

Both attacks append ``L`` dimensions built from independent standard normal
noise ``eps``:

* redundancy: ``(z, alpha U z + eps)``
* synergy:    ``(z + alpha U eps, eps)``

For a Gaussian posterior ``N(mu, Sigma)`` the attacked posterior is again
Gaussian and is assembled here in closed form, so downstream estimation sees
exact densities.
"""
from __future__ import annotations

from dataclasses import dataclass
from enum import Enum

import numpy as np

from .errors import ContractError, UnsupportedAttackError
from .prob import DiagGaussian, FullGaussian, LatentLayout, PosteriorBatch


class AttackKind(str, Enum):
    REDUNDANCY = "red"
    SYNERGY = "syn"


def reflection_matrix(L):
    """Householder reflection ``I - (2/L) 1 1^T``; orthonormal, mixes every slot."""
    if L < 1:
        raise ContractError("L must be >= 1")
    return np.eye(L) - (2.0 / L) * np.ones((L, L))


@dataclass(frozen=True, eq=False)
class AttackConfig:
    """Attack kind, strength and mixing.

    ``mixing`` is ``"identity"``, ``"reflection"`` or an explicit orthonormal
    ``L x L`` array.
    """

    kind: AttackKind
    alpha: float
    mixing: object = "reflection"

    def __post_init__(self):
        object.__setattr__(self, "kind", AttackKind(self.kind))
        if not np.isfinite(self.alpha) or self.alpha < 0:
            raise ContractError(f"alpha must be >= 0, got {self.alpha}")
        if isinstance(self.mixing, str):
            if self.mixing not in ("identity", "reflection"):
                raise ContractError(f"unknown mixing {self.mixing!r}")
        else:
            u = np.asarray(self.mixing, dtype=float)
            if u.ndim != 2 or u.shape[0] != u.shape[1]:
                raise ContractError("custom mixing must be a square matrix")
            if np.max(np.abs(u.T @ u - np.eye(u.shape[0]))) > 1e-9:
                raise ContractError("custom mixing matrix is not orthonormal")
            object.__setattr__(self, "mixing", u)

    def matrix(self, L):
        if isinstance(self.mixing, str):
            return np.eye(L) if self.mixing == "identity" else reflection_matrix(L)
        if self.mixing.shape[0] != L:
            raise ContractError(f"mixing matrix is {self.mixing.shape[0]}x{self.mixing.shape[0]}, need {L}x{L}")
        return self.mixing

    def to_json(self):
        mixing = self.mixing if isinstance(self.mixing, str) else self.mixing.tolist()
        return {"kind": self.kind.value, "alpha": self.alpha, "mixing": mixing}


def _gaussian_parts(posterior):
    if isinstance(posterior, DiagGaussian):
        return posterior.mean, np.diag(posterior.std**2)
    if isinstance(posterior, FullGaussian):
        return posterior.mean, np.asarray(posterior.cov)
    raise UnsupportedAttackError("attacks are defined for Gaussian posteriors only")


def redundancy_moments(mean, cov, alpha, U):
    """Mean and covariance of ``(z, alpha U z + eps)`` for ``z ~ N(mean, cov)``."""
    L = mean.shape[-1]
    us = alpha * (U @ cov)
    m = np.concatenate([mean, alpha * (U @ mean)])
    c = np.block([[cov, us.T], [us, np.eye(L) + alpha * us @ U.T]])
    return m, 0.5 * (c + c.T)


def synergy_moments(mean, cov, alpha, U):
    """Mean and covariance of ``(z + alpha U eps, eps)`` for ``z ~ N(mean, cov)``."""
    L = mean.shape[-1]
    m = np.concatenate([mean, np.zeros(L)])
    c = np.block([[alpha**2 * np.eye(L) + cov, alpha * U], [alpha * U.T, np.eye(L)]])
    return m, 0.5 * (c + c.T)


def _check_kind(config, kind):
    if config.kind is not kind:
        raise ContractError(f"expected a {kind.name.lower()} attack config, got {config.kind.name.lower()}")


def redundancy_attack(posterior, config):
    _check_kind(config, AttackKind.REDUNDANCY)
    mean, cov = _gaussian_parts(posterior)
    return FullGaussian(*redundancy_moments(mean, cov, config.alpha, config.matrix(mean.size)))


def synergy_attack(posterior, config):
    _check_kind(config, AttackKind.SYNERGY)
    mean, cov = _gaussian_parts(posterior)
    return FullGaussian(*synergy_moments(mean, cov, config.alpha, config.matrix(mean.size)))


def attack_dataset(dataset, config):
    """Apply an attack record-wise; factor annotations are unchanged."""
    if not dataset.layout.all_continuous:
        raise UnsupportedAttackError("attacks are defined for Gaussian posteriors only")
    batch = dataset.posteriors
    L = dataset.L
    U = config.matrix(L)
    covs = batch.full_covs()
    moments = redundancy_moments if config.kind is AttackKind.REDUNDANCY else synergy_moments
    means = np.empty((len(batch), 2 * L))
    new_covs = np.empty((len(batch), 2 * L, 2 * L))
    for i in range(len(batch)):
        means[i], new_covs[i] = moments(batch.means[i], covs[i], config.alpha, U)
    attacked = PosteriorBatch(LatentLayout.continuous(2 * L), means, None, new_covs)
    return dataset.with_posteriors(attacked)
