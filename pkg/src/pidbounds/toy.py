"""Closed-form scores for the linear-Gaussian toy model.

Factors ``y ~ N(0, I_K)`` are encoded as ``z | y ~ N(y, sigma^2 I_K)``,
optionally followed by a redundancy or synergy attack mixed with the
reflection ``U = I - (2/K) 1 1^T``.  Every mutual information term then has
a closed form, which makes this model a sampling-free reference for the
metric and bound arithmetic.

:func:`toy_mi_terms_numeric` recomputes the same table from Gaussian
entropies of the attacked covariances; it shares no formulas with
:func:`toy_mi_terms` and is used to cross-check it.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

import numpy as np

from .attacks import AttackKind, redundancy_moments, reflection_matrix, synergy_moments
from .errors import ContractError
from .estimator import MITable
from .pid import aggregate_pid, mig, pid_bounds, unibound
from .prob import LOG_2PIE, gaussian_entropy

GAUSSIAN_FACTOR_ENTROPY = 0.5 * LOG_2PIE


@dataclass(frozen=True)
class ToyConfig:
    K: int
    sigma: float
    alpha: float = 0.0
    attack: Optional[AttackKind] = None
    normalized: bool = False

    def __post_init__(self):
        if self.K < 2:
            raise ContractError("toy model needs K >= 2")
        if not self.sigma > 0:
            raise ContractError("sigma must be positive")
        if self.alpha < 0:
            raise ContractError("alpha must be >= 0")
        if self.attack is not None:
            object.__setattr__(self, "attack", AttackKind(self.attack))

    @property
    def normalizer(self):
        return GAUSSIAN_FACTOR_ENTROPY if self.normalized else 1.0


def _half_log(x):
    return 0.5 * np.log(x)


def toy_mi_terms(config):
    """Exact ``I(y_k; z_S)`` for every single slot, every complement and the full set.

    Returns an :class:`MITable` over ``K`` slots (no attack) or ``2K`` slots
    (attacked), slot ``K + l`` being the ``l``-th appended dimension.
    """
    K, s2, a2 = config.K, config.sigma**2, config.alpha**2
    full = _half_log((1 + s2) / s2)
    eye = np.eye(K, dtype=bool)
    joint = np.full(K, full)
    if config.attack is None:
        single = np.where(eye, full, 0.0)
        rest = np.where(eye, 0.0, full)
        return MITable.exact(single, rest, joint)
    diag_mix = (1 - 2 / K) ** 2
    off_mix = 4 / K**2
    if config.attack is AttackKind.REDUNDANCY:
        top = 1 + a2 * (1 + s2)
        app = np.where(eye, _half_log(top / (1 + a2 * (1 + s2 - diag_mix))), _half_log(top / (1 + a2 * (1 + s2 - off_mix))))
        orig_single = np.where(eye, full, 0.0)
        orig_rest = np.where(eye, _half_log(top / (1 + a2 * s2)), full)
        app_rest = np.full((K, K), full)
    else:
        base = 1 + s2 + a2
        orig_single = np.where(eye, _half_log(base / (s2 + a2)), 0.0)
        app = np.zeros((K, K))
        orig_rest = np.where(eye, 0.0, full)
        num = (1 + s2) * base
        app_rest = np.where(eye, _half_log(num / (s2 * base + a2 * diag_mix)), _half_log(num / (s2 * base + a2 * off_mix)))
    single = np.hstack([orig_single, app])
    rest = np.hstack([orig_rest, app_rest])
    return MITable.exact(single, rest, joint)


def _toy_covariances(config):
    """Covariances of the (attacked) representation, marginally and given ``y_k``."""
    K, s2 = config.K, config.sigma**2
    marg = (1 + s2) * np.eye(K)
    conds = [marg - np.outer(e, e) for e in np.eye(K)]
    if config.attack is None:
        return marg, conds
    U = reflection_matrix(K)
    moments = redundancy_moments if config.attack is AttackKind.REDUNDANCY else synergy_moments
    zero = np.zeros(K)

    def attacked(c):
        return moments(zero, c, config.alpha, U)[1]

    return attacked(marg), [attacked(c) for c in conds]


def toy_mi_terms_numeric(config):
    """Same table as :func:`toy_mi_terms`, via ``H(z_S) - H(z_S | y_k)``."""
    marg, conds = _toy_covariances(config)
    D = marg.shape[0]
    K = config.K

    def mi(k, idx):
        return gaussian_entropy(marg[np.ix_(idx, idx)]) - gaussian_entropy(conds[k][np.ix_(idx, idx)])

    single = np.array([[mi(k, [l]) for l in range(D)] for k in range(K)])
    rest = np.array([[mi(k, [i for i in range(D) if i != l]) for l in range(D)] for k in range(K)])
    joint = np.array([mi(k, list(range(D))) for k in range(K)])
    return MITable.exact(single, rest, joint)


def toy_scores(config):
    """MIG, UniBound and the unique-information bounds in closed form.

    For the redundancy attack the MIG runner-up is the appended slot with the
    larger mixing weight on ``y_k``: ``(1 - 2/K)^2`` for ``K >= 4`` (the
    familiar closed form) and ``4/K^2`` for ``K = 2, 3``.
    """
    K, s2, a2 = config.K, config.sigma**2, config.alpha**2
    full = _half_log(1 + 1 / s2)
    if config.attack is None:
        mig_v = ub = u_ub = full
    elif config.attack is AttackKind.REDUNDANCY:
        w = max((1 - 2 / K) ** 2, 4 / K**2)
        mig_v = _half_log((1 + s2) * (1 + a2 * (1 + s2 - w)) / (s2 * (1 + a2 * (1 + s2))))
        ub = u_ub = _half_log((1 + s2) * (1 + a2 * s2) / (s2 * (1 + a2 * (1 + s2))))
    else:
        mig_v = ub = u_ub = _half_log(1 + 1 / (a2 + s2))
    c = config.normalizer
    return {"mig": mig_v / c, "unibound": ub / c, "u_lb": ub / c, "u_ub": u_ub / c}


def toy_attacked_pid(config):
    """Redundant and complementary information at ``(y_k; z_k, z_-k)``, in nats."""
    s2, a2 = config.sigma**2, config.alpha**2
    if config.attack is AttackKind.REDUNDANCY:
        r = _half_log((1 + a2 * (1 + s2)) / (1 + a2 * s2))
        cc = 0.0
    elif config.attack is AttackKind.SYNERGY:
        r = 0.0
        cc = _half_log((1 + s2) * (s2 + a2) / (s2 * (1 + s2 + a2)))
    else:
        r = cc = 0.0
    return {"R": float(r), "C": float(cc)}


@dataclass(frozen=True)
class CheckFailure:
    formula: str
    inputs: dict
    expected: object
    got: object

    def __str__(self):
        return f"{self.formula} at {self.inputs}: expected {self.expected}, got {self.got}"


def toy_consistency_check(config, tol=1e-9, scores_fn=None):
    """Cross-check the closed forms against the generic bound arithmetic.

    * the analytic R and C lie inside the :func:`pid_bounds` intervals
      computed from :func:`toy_mi_terms`;
    * the closed-form MIG, UniBound and U bounds equal what
      :func:`mig`, :func:`unibound` and :func:`aggregate_pid` give on the
      same table.

    Returns a list of :class:`CheckFailure`, empty when everything holds.
    """
    scores_fn = scores_fn or toy_scores
    inputs = {
        "K": config.K,
        "sigma": config.sigma,
        "alpha": config.alpha,
        "attack": None if config.attack is None else config.attack.value,
        "normalized": config.normalized,
    }
    failures = []
    table = toy_mi_terms(config)
    pid = toy_attacked_pid(config)
    for k in range(config.K):
        b = pid_bounds(table.single[k, k], table.rest[k, k], table.joint[k], (k, k))
        for name, (lo, hi) in (("R", (b.r_lb, b.r_ub)), ("C", (b.c_lb, b.c_ub))):
            v = pid[name]
            if not (lo - tol <= v <= hi + tol):
                failures.append(CheckFailure(f"toy_attacked_pid.{name}", dict(inputs, k=k), (lo, hi), v))
    h = config.normalizer
    scores = scores_fn(config)
    agg = aggregate_pid(table, h)
    ref = {
        "mig": mig(table, h),
        "unibound": unibound(table, h),
        "u_lb": float(np.mean([f.normalized.u_lb for f in agg.per_factor.values()])),
        "u_ub": float(np.mean([f.normalized.u_ub for f in agg.per_factor.values()])),
    }
    for key, want in ref.items():
        got = scores[key]
        if not abs(got - want) <= tol * max(1.0, abs(want)):
            failures.append(CheckFailure(f"toy_scores.{key}", inputs, want, got))
    return failures
