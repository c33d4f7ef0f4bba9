"""Partial-information bounds, UniBound and MIG computed from an MI table.

Every quantity here is arithmetic on three mutual informations per
``(k, l)``: ``I(y_k; z_l)``, ``I(y_k; z_{-l})`` and ``I(y_k; z)``.  Whatever
concrete PID definition is used, the unique (U), redundant (R) and
complementary (C) terms must fall inside the intervals returned by
:func:`pid_bounds`.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import ContractError

# negative algebraic bounds this close to zero are rounding noise
_CLAMP_EPS = 1e-9
_ORDER_EPS = 1e-12


def _pos(x):
    return max(x, 0.0)


def interaction_information(i_l, i_rest, i_joint):
    """``II(y; z_l; z_-l) = I(y; z_l) + I(y; z_-l) - I(y; z)``; may be negative."""
    return i_l + i_rest - i_joint


@dataclass(frozen=True)
class PIDBounds:
    u_lb: float
    u_ub: float
    r_lb: float
    r_ub: float
    c_lb: float
    c_ub: float
    source: tuple = ()
    flags: tuple = ()

    def intervals(self):
        return {
            "U": (self.u_lb, self.u_ub),
            "R": (self.r_lb, self.r_ub),
            "C": (self.c_lb, self.c_ub),
        }

    def scaled(self, factor):
        return PIDBounds(
            self.u_lb * factor,
            self.u_ub * factor,
            self.r_lb * factor,
            self.r_ub * factor,
            self.c_lb * factor,
            self.c_ub * factor,
            self.source,
            self.flags,
        )

    def to_json(self):
        return {
            "U": [self.u_lb, self.u_ub],
            "R": [self.r_lb, self.r_ub],
            "C": [self.c_lb, self.c_ub],
            "flags": list(self.flags),
        }


def _clamp(x):
    return 0.0 if -_CLAMP_EPS <= x < 0.0 else x


def pid_bounds(i_l, i_rest, i_joint, source=(), std_error=0.0):
    """Lower and upper bounds on U(y; z_l \\ z_-l), R(y; z_l, z_-l) and C(y; z_l, z_-l).

    Parameters
    ----------
    i_l, i_rest, i_joint : float
        ``I(y; z_l)``, ``I(y; z_-l)`` and ``I(y; z)`` in nats, already
        clamped at 0 if they came from a noisy estimator.
    source : tuple
        ``(k, l)`` label carried into the result.
    std_error : float
        Combined standard error of the inputs.  An interval whose lower end
        exceeds its upper end by more than ``3 * std_error`` is flagged
        ``inconsistent``; smaller inversions are flagged ``noise_inverted``.
    """
    vals = (i_l, i_rest, i_joint)
    if not all(np.isfinite(v) for v in vals):
        raise ContractError(f"non-finite MI inputs {vals}")
    ii = interaction_information(i_l, i_rest, i_joint)
    lo = min(i_l, i_rest)
    b = [
        _pos(i_l - i_rest),
        i_l - _pos(ii),
        _pos(ii),
        lo,
        _pos(-ii),
        lo - ii,
    ]
    b = [_clamp(x) for x in b]
    flags = []
    for name, (a, c) in zip("URC", ((b[0], b[1]), (b[2], b[3]), (b[4], b[5]))):
        if a > c + _ORDER_EPS:
            if a - c > 3.0 * std_error:
                flags.append(f"inconsistent_{name}")
            else:
                flags.append(f"noise_inverted_{name}")
    return PIDBounds(*b, source=tuple(source), flags=tuple(flags))


def _checked_entropies(entropies, K):
    h = np.broadcast_to(np.asarray(entropies, dtype=float), (K,))
    if np.any(h <= 0):
        raise ContractError("factor entropies must be positive")
    return h


def _clamped(table):
    return (
        np.maximum(table.single, 0.0),
        np.maximum(table.rest, 0.0),
        np.maximum(table.joint, 0.0),
    )


def unibound_terms(table):
    """Per-factor ``max_l [I(y_k; z_l) - I(y_k; z_-l)]_+`` in nats, with argmax."""
    single, rest, _ = _clamped(table)
    gap = np.maximum(single - rest, 0.0)
    best = np.argmax(gap, axis=1)
    return gap[np.arange(gap.shape[0]), best], best


def unibound(table, entropies):
    """UniBound: mean over factors of the normalized unique-information lower bound."""
    h = _checked_entropies(entropies, table.K)
    terms, _ = unibound_terms(table)
    return float(np.mean(terms / h))


def mig_terms(table):
    """Per-factor gap between the largest and second-largest ``I(y_k; z_l)``.

    Returns ``(clamped, raw)``; the raw gap is already non-negative for the
    max-minus-second-max reading, so the two agree unless inputs are negative.
    """
    if table.L < 2:
        raise ContractError("MIG needs at least two latent slots")
    single = np.maximum(table.single, 0.0)
    top2 = -np.sort(-single, axis=1)[:, :2]
    raw = top2[:, 0] - top2[:, 1]
    return np.maximum(raw, 0.0), raw


def mig(table, entropies):
    """Mutual information gap normalized by the factor entropies."""
    h = _checked_entropies(entropies, table.K)
    gaps, _ = mig_terms(table)
    return float(np.mean(gaps / h))


@dataclass(frozen=True)
class FactorPID:
    latent: int
    bounds: PIDBounds
    normalizer: float

    @property
    def normalized(self):
        return self.bounds.scaled(1.0 / self.normalizer)


@dataclass(frozen=True)
class PIDBoundsResult:
    per_pair: dict
    per_factor: dict
    flags: tuple = field(default=())

    def summary(self):
        """Mean over factors of every normalized bound, as in the UniBound summary."""
        keys = ("u_lb", "u_ub", "r_lb", "r_ub", "c_lb", "c_ub")
        rows = [f.normalized for f in self.per_factor.values()]
        return {key: float(np.mean([getattr(r, key) for r in rows])) for key in keys}

    def to_json(self):
        return {
            "per_factor": {
                str(k): {
                    "latent": f.latent,
                    "normalizer": f.normalizer,
                    "nats": f.bounds.to_json(),
                    "normalized": f.normalized.to_json(),
                }
                for k, f in self.per_factor.items()
            },
            "summary": self.summary(),
            "flags": list(self.flags),
        }


def aggregate_pid(table, entropies):
    """Bounds for every ``(k, l)`` plus a per-factor summary at the UniBound latent.

    For each factor the latent ``l*`` maximizing the unique lower bound is
    chosen (ties go to the smallest index) and all six bounds are reported at
    that same ``l*``.
    """
    h = _checked_entropies(entropies, table.K)
    single, rest, joint = _clamped(table)
    flags = []
    for name, raw in (("single", table.single), ("rest", table.rest), ("joint", table.joint)):
        n_neg = int(np.sum(raw < 0))
        if n_neg:
            flags.append(f"clamped {n_neg} negative {name} MI estimate(s) to 0")
    per_pair = {}
    for k in range(table.K):
        for l in range(table.L):
            se = float(np.sqrt(table.single_se[k, l] ** 2 + table.rest_se[k, l] ** 2 + table.joint_se[k] ** 2))
            per_pair[(k, l)] = pid_bounds(single[k, l], rest[k, l], joint[k], (k, l), se)
    per_factor = {}
    for k in range(table.K):
        u = [per_pair[(k, l)].u_lb for l in range(table.L)]
        best = int(np.argmax(u))
        per_factor[k] = FactorPID(best, per_pair[(k, best)], float(h[k]))
    return PIDBoundsResult(per_pair, per_factor, tuple(flags))


def score_std_error(table, entropies, metric):
    """First-order standard error of UniBound or MIG from the table's errors."""
    h = _checked_entropies(entropies, table.K)
    rows = np.arange(table.K)
    if metric == "unibound":
        terms, best = unibound_terms(table)
        var = table.single_se[rows, best] ** 2 + table.rest_se[rows, best] ** 2
        var = np.where(terms > 0, var, 0.0)
    elif metric == "mig":
        order = np.argsort(-np.maximum(table.single, 0.0), axis=1, kind="stable")
        var = table.single_se[rows, order[:, 0]] ** 2 + table.single_se[rows, order[:, 1]] ** 2
    else:
        raise ContractError(f"unknown metric {metric!r}")
    return float(np.sqrt(np.sum(var / h**2)) / table.K)
