"""Mutual information between discrete factors and latent subsets.

``I(y_k; z_S)`` is estimated as the sample mean of

    log (1/|D(y_k)|) sum_{x' in D(y_k)} p(z_S|x')  -  log (1/|D|) sum_{x' in D} p(z_S|x')

over ``M`` draws ``(y_k, z_S)``.  Factor values are stratified (round-robin,
shuffled remainder), ``x`` is uniform in ``D(y_k)`` and ``z ~ p(z|x)``.  The
mixture sums are exact over the records unless ``inner_subsample`` is given.

Draws depend on ``(seed, k)`` only, never on ``S``: every subset estimated
for a factor reuses the same latent samples, so a table cell is bit-identical
to the matching standalone :func:`estimate_mi` call.

:func:`brute_force_mi` and :func:`quadrature_mi_1d` are exact references used
to validate the estimator.
"""
from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np
from scipy import integrate
from scipy.special import logsumexp

from .errors import ContractError, QuadratureError
from .prob import VariableSubset

DEFAULT_SAMPLES = 10_000

_FACTOR_STREAM = 0
_LATENT_STREAM = 1
_SUBSAMPLE_STREAM = 2

# samples x records evaluated per block
_CHUNK_CELLS = 2_000_000


@dataclass(frozen=True)
class MIEstimate:
    value: float
    std_error: float
    sample_size: int
    seed: int
    warnings: tuple = ()

    def __post_init__(self):
        if self.std_error < 0 or self.sample_size < 1:
            raise ContractError("invalid MI estimate")


@dataclass(frozen=True, eq=False)
class MITable:
    """``I(y_k; z_l)``, ``I(y_k; z_{-l})`` and ``I(y_k; z)`` with standard errors.

    ``single`` and ``rest`` have shape ``(K, L)``; ``joint`` has shape ``(K,)``.
    """

    single: np.ndarray
    single_se: np.ndarray
    rest: np.ndarray
    rest_se: np.ndarray
    joint: np.ndarray
    joint_se: np.ndarray
    sample_size: int = 0
    seed: int = 0
    warnings: tuple = ()

    @classmethod
    def exact(cls, single, rest, joint):
        """Table of known values with zero standard errors."""
        single = np.asarray(single, dtype=float)
        rest = np.asarray(rest, dtype=float)
        joint = np.asarray(joint, dtype=float)
        return cls(single, np.zeros_like(single), rest, np.zeros_like(rest), joint, np.zeros_like(joint))

    @property
    def K(self):
        return self.single.shape[0]

    @property
    def L(self):
        return self.single.shape[1]

    def cell(self, kind, k, l=None):
        seed, m = self.seed, max(self.sample_size, 1)
        if kind == "joint":
            return MIEstimate(float(self.joint[k]), float(self.joint_se[k]), m, seed)
        arr, se = (self.single, self.single_se) if kind == "single" else (self.rest, self.rest_se)
        return MIEstimate(float(arr[k, l]), float(se[k, l]), m, seed)

    def to_json(self):
        return {
            "single": self.single.tolist(),
            "single_se": self.single_se.tolist(),
            "rest": self.rest.tolist(),
            "rest_se": self.rest_se.tolist(),
            "joint": self.joint.tolist(),
            "joint_se": self.joint_se.tolist(),
            "sample_size": self.sample_size,
            "seed": self.seed,
        }


def _rng(seed, *key):
    return np.random.default_rng(np.random.SeedSequence(int(seed), spawn_key=key))


def stratified_values(cardinality, M, rng):
    """Round-robin factor values; the remainder gets distinct shuffled values."""
    q, r = divmod(M, cardinality)
    base = np.tile(np.arange(cardinality), q)
    extra = rng.permutation(cardinality)[:r]
    return np.concatenate([base, extra])


def _draw_factor_samples(dataset, k, M, seed):
    rng = _rng(seed, _FACTOR_STREAM, k)
    strata = dataset.strata[k]
    values = stratified_values(len(strata), M, rng)
    sizes = np.array([len(s) for s in strata])
    pos = np.floor(rng.random(M) * sizes[values]).astype(np.intp)
    offsets = np.concatenate([[0], np.cumsum(sizes)[:-1]])
    flat = np.concatenate(strata)
    rows = flat[offsets[values] + pos]
    z = dataset.posteriors.sample(rows, rng)
    return values, z


def _inner_columns(dataset, k, seed, inner_subsample):
    """Record sets for the two mixture sums; exact unless subsampling."""
    strata = dataset.strata[k]
    n = len(dataset)
    if inner_subsample is None or inner_subsample >= n:
        return np.arange(n), list(strata)
    if inner_subsample < 1:
        raise ContractError("inner_subsample must be >= 1")
    rng = _rng(seed, _SUBSAMPLE_STREAM, k)
    den = np.sort(rng.choice(n, inner_subsample, replace=False))
    num = [
        s if len(s) <= inner_subsample else np.sort(rng.choice(s, inner_subsample, replace=False))
        for s in strata
    ]
    return den, num


def _factor_terms(dataset, k, subsets, M, seed, inner_subsample=None):
    """Per-sample log-ratio terms for each subset; shape ``(len(subsets), M)``."""
    values, z = _draw_factor_samples(dataset, k, M, seed)
    den_cols, num_cols = _inner_columns(dataset, k, seed, inner_subsample)
    cols = np.unique(np.concatenate([den_cols] + list(num_cols)))
    den_idx = np.searchsorted(cols, den_cols)
    num_idx = [np.searchsorted(cols, s) for s in num_cols]
    log_den_n = np.log(den_idx.size)
    log_num_n = [np.log(s.size) for s in num_idx]
    out = np.empty((len(subsets), M))
    step = max(1, _CHUNK_CELLS // cols.size)
    for a in range(0, M, step):
        vals = values[a : a + step]
        by_value = [(v, np.flatnonzero(vals == v)) for v in range(len(num_idx))]
        for i, S in enumerate(subsets):
            logp = dataset.posteriors.log_density(S, z[a : a + step, list(S.indices)], cols)
            den = logsumexp(logp[:, den_idx], axis=1) - log_den_n
            num = np.empty(vals.size)
            for v, rows in by_value:
                if rows.size:
                    num[rows] = logsumexp(logp[np.ix_(rows, num_idx[v])], axis=1) - log_num_n[v]
            out[i, a : a + step] = num - den
    return out


def _summarize(terms, M, seed, notes):
    if not np.all(np.isfinite(terms)):
        raise FloatingPointError("non-finite log-density ratio in MI estimate")
    sd = float(np.std(terms, ddof=1)) if M > 1 else 0.0
    return MIEstimate(float(np.mean(terms)), sd / np.sqrt(M), M, int(seed), tuple(notes))


def _notes(dataset, k, M, inner_subsample):
    notes = []
    c = len(dataset.strata[k])
    if M < c:
        notes.append(f"factor {k}: M={M} < {c} values, some strata unsampled")
    if inner_subsample is not None and inner_subsample < len(dataset):
        notes.append(f"factor {k}: mixture sums subsampled to {inner_subsample} records (biased)")
    return notes


def estimate_mi(dataset, k, subset, M=DEFAULT_SAMPLES, seed=0, inner_subsample=None):
    """Monte-Carlo estimate of ``I(y_k; z_S)`` in nats.

    The value is never clamped; small negative values are expected when the
    true information is zero.
    """
    if M < 1:
        raise ContractError("sample size must be >= 1")
    if not 0 <= k < dataset.K:
        raise ContractError(f"factor index {k} out of range")
    terms = _factor_terms(dataset, k, [subset], M, seed, inner_subsample)[0]
    return _summarize(terms, M, seed, _notes(dataset, k, M, inner_subsample))


def estimate_mi_table(dataset, M=DEFAULT_SAMPLES, seed=0, inner_subsample=None):
    """Estimate every ``I(y_k; z_l)``, ``I(y_k; z_{-l})`` and ``I(y_k; z)``.

    With a single latent slot the complement is empty and ``I(y_k; z_{-l})``
    is 0 by convention.
    """
    if M < 1:
        raise ContractError("sample size must be >= 1")
    K, L = dataset.K, dataset.L
    single = np.zeros((K, L))
    single_se = np.zeros((K, L))
    rest = np.zeros((K, L))
    rest_se = np.zeros((K, L))
    joint = np.zeros(K)
    joint_se = np.zeros(K)
    notes = []
    full = VariableSubset.full(L)
    for k in range(K):
        subsets = [VariableSubset.single(l, L) for l in range(L)]
        if L > 1:
            subsets += [VariableSubset.complement(l, L) for l in range(L)]
        subsets.append(full)
        terms = _factor_terms(dataset, k, subsets, M, seed, inner_subsample)
        note = _notes(dataset, k, M, inner_subsample)
        notes.extend(note)
        est = [_summarize(t, M, seed, note) for t in terms]
        for l in range(L):
            single[k, l], single_se[k, l] = est[l].value, est[l].std_error
            if L > 1:
                rest[k, l], rest_se[k, l] = est[L + l].value, est[L + l].std_error
        joint[k], joint_se[k] = est[-1].value, est[-1].std_error
    return MITable(single, single_se, rest, rest_se, joint, joint_se, M, int(seed), tuple(notes))


def estimate_latent_mi(dataset, l, M=DEFAULT_SAMPLES, seed=0):
    """Estimate ``I(z_l; z_{-l})`` with the same mixture-of-posteriors densities."""
    L = dataset.L
    if L < 2:
        raise ContractError("latent MI needs at least two slots")
    if M < 1:
        raise ContractError("sample size must be >= 1")
    rng = _rng(seed, _LATENT_STREAM, l)
    n = len(dataset)
    rows = rng.integers(0, n, size=M)
    z = dataset.posteriors.sample(rows, rng)
    logn = np.log(n)

    def log_mix(S):
        return logsumexp(dataset.posteriors.log_density(S, z[:, list(S.indices)]), axis=1) - logn

    terms = (
        log_mix(VariableSubset.full(L))
        - log_mix(VariableSubset.single(l, L))
        - log_mix(VariableSubset.complement(l, L))
    )
    return _summarize(terms, M, seed, ())


# ---------------------------------------------------------------------------
# oracles


def brute_force_mi(joint):
    """Exact mutual information of a 2-D joint probability table (rows: y)."""
    p = np.asarray(joint, dtype=float)
    if p.ndim != 2 or np.any(p < 0) or abs(p.sum() - 1.0) > 1e-9:
        raise ContractError("joint table must be a non-negative 2-D array summing to 1")
    py = p.sum(axis=1, keepdims=True)
    pz = p.sum(axis=0, keepdims=True)
    nz = p > 0
    return float(np.sum(p[nz] * np.log(p[nz] / (py @ pz)[nz])))


def _mixture_logpdf(t, weights, means, stds):
    t = np.atleast_1d(t)[:, None]
    comp = -0.5 * ((t - means) / stds) ** 2 - np.log(stds) - 0.5 * np.log(2 * np.pi)
    return logsumexp(comp + np.log(weights), axis=1)


def _mixture_entropy(weights, means, stds, lo, hi, tol):
    def f(t):
        lp = _mixture_logpdf(t, weights, means, stds)[0]
        return -np.exp(lp) * lp

    knots = np.concatenate([means, means - 3 * stds, means + 3 * stds])
    knots = np.unique(knots[(knots > lo) & (knots < hi)])
    with warnings.catch_warnings():
        warnings.simplefilter("error", integrate.IntegrationWarning)
        try:
            val, err = integrate.quad(f, lo, hi, points=knots, limit=1000, epsabs=tol, epsrel=tol)
        except integrate.IntegrationWarning as e:
            raise QuadratureError(f"quadrature over [{lo:.4g}, {hi:.4g}] did not converge: {e}") from e
    return val


def quadrature_mi_1d(conditionals, marginal, tol=1e-6):
    """``I(y; z)`` for scalar ``z`` whose conditionals are Gaussian mixtures.

    Parameters
    ----------
    conditionals : sequence of (weights, means, stds)
        One finite Gaussian mixture ``p(z | y = v)`` per factor value.
    marginal : sequence of float
        ``p(y = v)``.
    tol : float
        Absolute and relative quadrature tolerance.

    Returns
    -------
    float
        ``H(z) - sum_v p(v) H(z | v)`` in nats.
    """
    marginal = np.asarray(marginal, dtype=float)
    if len(conditionals) != marginal.size or abs(marginal.sum() - 1) > 1e-9 or np.any(marginal < 0):
        raise ContractError("marginal must be a probability vector matching the conditionals")
    comps = []
    for w, m, s in conditionals:
        w = np.atleast_1d(np.asarray(w, dtype=float))
        comps.append((w / w.sum(), np.atleast_1d(np.asarray(m, float)), np.atleast_1d(np.asarray(s, float))))
    all_m = np.concatenate([c[1] for c in comps])
    all_s = np.concatenate([c[2] for c in comps])
    if np.any(all_s <= 0):
        raise ContractError("mixture stds must be positive")
    lo = all_m.min() - 10 * all_s.max()
    hi = all_m.max() + 10 * all_s.max()
    cond_h = sum(p * _mixture_entropy(w, m, s, lo, hi, tol) for p, (w, m, s) in zip(marginal, comps) if p > 0)
    w_all = np.concatenate([p * w for p, (w, _, _) in zip(marginal, comps)])
    keep = w_all > 0
    h = _mixture_entropy(w_all[keep], all_m[keep], all_s[keep], lo, hi, tol)
    return h - cond_h
