"""Posterior families, marginal log-densities, sampling and Gaussian entropies.

Three posterior families are supported for ``p(z|x)``:

* :class:`DiagGaussian` -- independent Gaussian slots,
* :class:`FullGaussian` -- correlated Gaussian slots,
* :class:`Mixed` -- a Gaussian block over the continuous slots plus one
  independent probability vector per categorical slot.

Single-record helpers (:func:`log_marginal_density`, :func:`sample_posterior`)
are thin wrappers over :class:`PosteriorBatch`, which stacks the parameters
of a whole dataset so that the estimator can evaluate ``log p(z_S|x')`` for
every record ``x'`` at once.

All quantities are in nats.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Optional, Union

import numpy as np

from .errors import ContractError, DegenerateDistributionError

LOG_2PI = float(np.log(2.0 * np.pi))
LOG_2PIE = float(np.log(2.0 * np.pi * np.e))

# relative eigenvalue floor used for singularity detection
EIG_FLOOR = 1e-12
# tolerance on negative eigenvalues when factorizing a PSD covariance
PSD_TOL = 1e-10

# upper bound on (samples x records x dims) elements held in memory at once
_CHUNK_ELEMENTS = 4_000_000


# ---------------------------------------------------------------------------
# layout


@dataclass(frozen=True)
class Continuous:
    """A scalar real-valued latent slot."""

    def to_json(self):
        return "continuous"


@dataclass(frozen=True)
class Categorical:
    """A categorical latent slot with ``arms`` outcomes."""

    arms: int

    def __post_init__(self):
        if int(self.arms) != self.arms or self.arms < 2:
            raise ContractError(f"categorical slot needs arms >= 2, got {self.arms}")

    def to_json(self):
        return {"categorical": int(self.arms)}


VariableSlot = Union[Continuous, Categorical]


@dataclass(frozen=True)
class LatentLayout:
    """Ordered description of the latent slots ``z_1, ..., z_L``."""

    slots: tuple

    def __post_init__(self):
        object.__setattr__(self, "slots", tuple(self.slots))
        if not self.slots:
            raise ContractError("layout needs at least one slot")
        for s in self.slots:
            if not isinstance(s, (Continuous, Categorical)):
                raise ContractError(f"unknown slot type {s!r}")

    @classmethod
    def continuous(cls, n):
        return cls(tuple(Continuous() for _ in range(n)))

    @classmethod
    def from_json(cls, obj):
        slots = []
        for item in obj:
            if item == "continuous":
                slots.append(Continuous())
            elif isinstance(item, dict) and "categorical" in item:
                slots.append(Categorical(int(item["categorical"])))
            else:
                raise ContractError(f"unrecognised layout entry {item!r}")
        return cls(tuple(slots))

    def to_json(self):
        return [s.to_json() for s in self.slots]

    def __len__(self):
        return len(self.slots)

    @property
    def continuous_slots(self):
        return tuple(i for i, s in enumerate(self.slots) if isinstance(s, Continuous))

    @property
    def categorical_slots(self):
        return tuple(i for i, s in enumerate(self.slots) if isinstance(s, Categorical))

    @property
    def n_continuous(self):
        return len(self.continuous_slots)

    @property
    def all_continuous(self):
        return not self.categorical_slots


@dataclass(frozen=True)
class VariableSubset:
    """A non-empty sorted set of slot indices ``S``."""

    indices: tuple

    def __post_init__(self):
        idx = tuple(sorted(set(int(i) for i in self.indices)))
        if not idx:
            raise ContractError("variable subset must be non-empty")
        if idx[0] < 0:
            raise ContractError(f"negative slot index in {idx}")
        object.__setattr__(self, "indices", idx)

    @classmethod
    def single(cls, l, n_slots):
        if not 0 <= l < n_slots:
            raise ContractError(f"slot {l} out of range for L={n_slots}")
        return cls((l,))

    @classmethod
    def complement(cls, l, n_slots):
        if not 0 <= l < n_slots:
            raise ContractError(f"slot {l} out of range for L={n_slots}")
        return cls(tuple(i for i in range(n_slots) if i != l))

    @classmethod
    def full(cls, n_slots):
        return cls(tuple(range(n_slots)))

    def __len__(self):
        return len(self.indices)

    def check(self, n_slots):
        if self.indices[-1] >= n_slots:
            raise ContractError(f"subset {self.indices} exceeds L={n_slots}")


# ---------------------------------------------------------------------------
# posterior parameter types


def _frozen(a, dtype=float):
    arr = np.array(a, dtype=dtype)
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True, eq=False)
class DiagGaussian:
    mean: np.ndarray
    std: np.ndarray

    def __post_init__(self):
        mean = _frozen(self.mean)
        std = _frozen(self.std)
        if mean.ndim != 1 or std.shape != mean.shape or mean.size == 0:
            raise ContractError(f"mean/std shapes {mean.shape}, {std.shape} do not match")
        if not np.all(np.isfinite(mean)) or not np.all(np.isfinite(std)):
            raise ContractError("non-finite Gaussian parameters")
        if np.any(std <= 0):
            raise ContractError("std must be strictly positive")
        object.__setattr__(self, "mean", mean)
        object.__setattr__(self, "std", std)

    @property
    def dim(self):
        return self.mean.size

    @property
    def cov(self):
        return np.diag(self.std**2)


@dataclass(frozen=True, eq=False)
class FullGaussian:
    mean: np.ndarray
    cov: np.ndarray

    def __post_init__(self):
        mean = _frozen(self.mean)
        cov = np.array(self.cov, dtype=float)
        d = mean.size
        if mean.ndim != 1 or d == 0 or cov.shape != (d, d):
            raise ContractError(f"mean shape {mean.shape} and cov shape {cov.shape} disagree")
        if not np.all(np.isfinite(mean)) or not np.all(np.isfinite(cov)):
            raise ContractError("non-finite Gaussian parameters")
        scale = max(1.0, float(np.max(np.abs(cov))))
        if np.max(np.abs(cov - cov.T)) > 1e-9 * scale:
            raise ContractError("covariance is not symmetric")
        cov = 0.5 * (cov + cov.T)
        w = np.linalg.eigvalsh(cov)
        if w[0] < -PSD_TOL * max(abs(w[-1]), 1.0):
            raise DegenerateDistributionError(
                f"covariance is not positive semidefinite (min eigenvalue {w[0]:.3g})"
            )
        cov.setflags(write=False)
        object.__setattr__(self, "mean", mean)
        object.__setattr__(self, "cov", cov)

    @property
    def dim(self):
        return self.mean.size


@dataclass(frozen=True, eq=False)
class Mixed:
    """Gaussian block over continuous slots and independent categorical slots.

    ``layout`` fixes where the continuous and categorical slots sit in ``z``;
    when omitted, continuous slots come first.
    """

    gaussian: Optional[Union[DiagGaussian, FullGaussian]]
    categorical: tuple
    layout: Optional[LatentLayout] = None

    def __post_init__(self):
        probs = []
        for i, p in enumerate(self.categorical):
            p = _frozen(p)
            if p.ndim != 1 or p.size < 2:
                raise ContractError(f"categorical slot {i}: need a probability vector of length >= 2")
            if np.any(p < 0) or abs(p.sum() - 1.0) > 1e-9:
                raise ContractError(f"categorical slot {i}: probabilities must be >= 0 and sum to 1")
            probs.append(p)
        object.__setattr__(self, "categorical", tuple(probs))
        n_cont = 0 if self.gaussian is None else self.gaussian.dim
        if self.layout is None:
            slots = [Continuous()] * n_cont + [Categorical(p.size) for p in probs]
            object.__setattr__(self, "layout", LatentLayout(tuple(slots)))
        lay = self.layout
        if lay.n_continuous != n_cont:
            raise ContractError(
                f"layout has {lay.n_continuous} continuous slots, Gaussian block has {n_cont}"
            )
        arms = [lay.slots[i].arms for i in lay.categorical_slots]
        if arms != [p.size for p in probs]:
            raise ContractError(f"categorical arms {arms} do not match probability vectors")


PosteriorParams = Union[DiagGaussian, FullGaussian, Mixed]


def layout_of(params):
    """Layout implied by a posterior."""
    if isinstance(params, Mixed):
        return params.layout
    return LatentLayout.continuous(params.dim)


# ---------------------------------------------------------------------------
# stacked posteriors


class PosteriorBatch:
    """Posterior parameters of ``N`` records sharing one layout.

    Gaussian blocks are stored either as ``stds`` (all records diagonal) or as
    ``covs`` (any record with a full covariance promotes the whole batch).
    """

    def __init__(self, layout, means=None, stds=None, covs=None, cat_probs=()):
        self.layout = layout
        self.means = means
        self.stds = stds
        self.covs = covs
        self.cat_probs = tuple(cat_probs)
        if means is not None:
            n = means.shape[0]
        else:
            n = self.cat_probs[0].shape[0]
        self.n = n
        self._cont_pos = {s: i for i, s in enumerate(layout.continuous_slots)}
        self._cat_pos = {s: i for i, s in enumerate(layout.categorical_slots)}
        self._factor = None
        with np.errstate(divide="ignore"):
            self._cat_logp = tuple(np.log(p) for p in self.cat_probs)

    @classmethod
    def from_params(cls, params, layout=None):
        params = list(params)
        if not params:
            raise ContractError("empty posterior list")
        if layout is None:
            layout = layout_of(params[0])
        gauss = [p.gaussian if isinstance(p, Mixed) else p for p in params]
        cats = [p.categorical if isinstance(p, Mixed) else () for p in params]
        means = stds = covs = None
        if layout.n_continuous:
            means = np.stack([g.mean for g in gauss])
            if all(isinstance(g, DiagGaussian) for g in gauss):
                stds = np.stack([g.std for g in gauss])
            else:
                covs = np.stack([g.cov for g in gauss])
        cat_probs = [np.stack([c[j] for c in cats]) for j in range(len(layout.categorical_slots))]
        return cls(layout, means, stds, covs, cat_probs)

    def __len__(self):
        return self.n

    @property
    def is_diag(self):
        return self.covs is None

    def record(self, i):
        """Rebuild the :data:`PosteriorParams` of record ``i``."""
        g = None
        if self.means is not None:
            if self.is_diag:
                g = DiagGaussian(self.means[i], self.stds[i])
            else:
                g = FullGaussian(self.means[i], self.covs[i])
        if self.layout.all_continuous:
            return g
        return Mixed(g, tuple(p[i] for p in self.cat_probs), self.layout)

    def full_covs(self):
        if self.means is None:
            return None
        if self.is_diag:
            return np.einsum("ni,ij->nij", self.stds**2, np.eye(self.stds.shape[1]))
        return self.covs

    # -- sampling -----------------------------------------------------------

    def _gaussian_factor(self):
        if self._factor is None:
            w, v = np.linalg.eigh(self.covs)
            top = np.maximum(np.abs(w[:, -1]), 1.0)
            bad = np.nonzero(w[:, 0] < -PSD_TOL * top)[0]
            if bad.size:
                raise DegenerateDistributionError(
                    f"record {bad[0]}: covariance is not positive semidefinite"
                )
            self._factor = v * np.sqrt(np.clip(w, 0.0, None))[:, None, :]
        return self._factor

    def sample(self, rows, rng):
        """Draw one latent vector per entry of ``rows``; returns ``(len(rows), L)``.

        Categorical slots carry the sampled outcome index as a float.
        """
        rows = np.asarray(rows, dtype=np.intp)
        out = np.empty((rows.size, len(self.layout)))
        if self.means is not None:
            eps = rng.standard_normal((rows.size, self.means.shape[1]))
            if self.is_diag:
                zc = self.means[rows] + self.stds[rows] * eps
            else:
                zc = self.means[rows] + np.einsum("nij,nj->ni", self._gaussian_factor()[rows], eps)
            out[:, list(self.layout.continuous_slots)] = zc
        if self.cat_probs:
            u = rng.random((rows.size, len(self.cat_probs)))
            for j, (slot, p) in enumerate(zip(self.layout.categorical_slots, self.cat_probs)):
                cdf = np.cumsum(p[rows], axis=1)
                idx = (cdf <= u[:, j : j + 1] * cdf[:, -1:]).sum(axis=1)
                out[:, slot] = np.minimum(idx, p.shape[1] - 1)
        return out

    # -- densities ----------------------------------------------------------

    def _split(self, subset):
        subset.check(len(self.layout))
        cont = [self._cont_pos[s] for s in subset.indices if s in self._cont_pos]
        cont_cols = [j for j, s in enumerate(subset.indices) if s in self._cont_pos]
        cat = [(j, self._cat_pos[s]) for j, s in enumerate(subset.indices) if s in self._cat_pos]
        return cont, cont_cols, cat

    def _gaussian_prep(self, cont, columns):
        """Per-record whitening data for the Gaussian marginal over ``cont``."""
        means = self.means[np.ix_(columns, cont)]
        if self.is_diag:
            stds = self.stds[np.ix_(columns, cont)]
            return ("diag", means, 1.0 / stds, np.log(stds).sum(axis=1))
        sub = self.covs[np.ix_(columns, cont, cont)]
        if np.all(sub == sub[0]):
            _check_nonsingular(sub[:1])
            chol = np.linalg.cholesky(sub[0])
            winv = np.linalg.inv(chol)
            logdet = np.full(len(columns), np.log(np.diag(chol)).sum())
            return ("shared", means, winv, logdet)
        _check_nonsingular(sub)
        chol = np.linalg.cholesky(sub)
        winv = np.linalg.inv(chol)
        logdet = np.log(np.diagonal(chol, axis1=1, axis2=2)).sum(axis=1)
        return ("full", means, winv, logdet)

    def log_density(self, subset, values, columns=None):
        """``log p(z_S | x')`` for every value row and every record ``x'``.

        Parameters
        ----------
        subset : VariableSubset
        values : array, shape (M, |S|)
            Latent values restricted to ``S`` (in subset order).
        columns : array of record indices, optional
            Restrict the records ``x'`` evaluated; defaults to all records.

        Returns
        -------
        array, shape (M, len(columns))
        """
        values = np.atleast_2d(np.asarray(values, dtype=float))
        if values.shape[1] != len(subset):
            raise ContractError(f"value has {values.shape[1]} entries, subset has {len(subset)}")
        columns = np.arange(self.n) if columns is None else np.asarray(columns, dtype=np.intp)
        cont, cont_cols, cat = self._split(subset)
        m = values.shape[0]
        out = np.zeros((m, columns.size))
        if cont:
            kind, means, winv, logdet = self._gaussian_prep(cont, columns)
            d = len(cont)
            const = -0.5 * d * LOG_2PI - logdet
            vc = values[:, cont_cols]
            step = max(1, _CHUNK_ELEMENTS // max(1, columns.size * d))
            for a in range(0, m, step):
                diff = vc[a : a + step, None, :] - means[None, :, :]
                if kind == "diag":
                    w = diff * winv[None]
                elif kind == "shared":
                    w = diff @ winv.T
                else:
                    w = np.einsum("nij,mnj->mni", winv, diff)
                out[a : a + step] = const - 0.5 * np.einsum("mni,mni->mn", w, w)
        for j, c in cat:
            logp = self._cat_logp[c][columns]
            k = values[:, j].astype(np.intp)
            if np.any(k < 0) or np.any(k >= logp.shape[1]) or np.any(k != values[:, j]):
                raise ContractError("categorical value out of range")
            out += logp[:, k].T
        return out


def _check_nonsingular(covs):
    w = np.linalg.eigvalsh(covs)
    top = np.abs(w[:, -1])
    bad = np.nonzero(w[:, 0] < EIG_FLOOR * top)[0]
    if bad.size or np.any(top == 0):
        i = int(bad[0]) if bad.size else 0
        raise DegenerateDistributionError(
            f"singular marginal covariance (record {i}, eigenvalues {w[i, 0]:.3g} .. {w[i, -1]:.3g})"
        )


# ---------------------------------------------------------------------------
# single-record helpers


def log_marginal_density(params, subset, value):
    """Log-density of ``z_S`` under one posterior ``p(z|x)``, in nats."""
    batch = PosteriorBatch.from_params([params])
    value = np.asarray(value, dtype=float).reshape(1, -1)
    return float(batch.log_density(subset, value)[0, 0])


def sample_posterior(params, rng):
    """Draw a full latent vector from ``params``; deterministic given ``rng``."""
    batch = PosteriorBatch.from_params([params])
    return batch.sample([0], rng)[0]


def gaussian_entropy(cov):
    """Differential entropy ``0.5 log((2 pi e)^d det cov)`` in nats."""
    cov = np.atleast_2d(np.asarray(cov, dtype=float))
    if cov.shape[0] != cov.shape[1]:
        raise ContractError(f"covariance must be square, got {cov.shape}")
    w = np.linalg.eigvalsh(0.5 * (cov + cov.T))
    if w[-1] <= 0 or w[0] < EIG_FLOOR * w[-1]:
        raise DegenerateDistributionError(f"singular covariance (eigenvalues {w[0]:.3g} .. {w[-1]:.3g})")
    return 0.5 * (cov.shape[0] * LOG_2PIE + float(np.sum(np.log(w))))


def _require_invertible(block, name):
    sv = np.linalg.svd(block, compute_uv=False)
    if sv.size == 0 or sv[0] == 0 or sv[-1] < EIG_FLOOR * sv[0]:
        raise DegenerateDistributionError(f"block {name} is not invertible")


def block_det_inv(matrix, split, pivot="A"):
    """Determinant and inverse of ``[[A, B], [C, D]]`` via a Schur complement.

    ``split`` is the size of the leading block ``A``.  With ``pivot="A"`` the
    complement ``S = D - C A^-1 B`` is used, with ``pivot="D"`` the complement
    ``T = A - B D^-1 C``.
    """
    m = np.asarray(matrix, dtype=float)
    n = m.shape[0]
    if m.shape != (n, n) or not 0 < split < n:
        raise ContractError(f"cannot split a {m.shape} matrix at {split}")
    a, b = m[:split, :split], m[:split, split:]
    c, d = m[split:, :split], m[split:, split:]
    if pivot == "A":
        _require_invertible(a, "A")
        ai = np.linalg.inv(a)
        s = d - c @ ai @ b
        _require_invertible(s, "Schur complement D - C A^-1 B")
        si = np.linalg.inv(s)
        det = np.linalg.det(a) * np.linalg.det(s)
        inv = np.block([[ai + ai @ b @ si @ c @ ai, -ai @ b @ si], [-si @ c @ ai, si]])
    elif pivot == "D":
        _require_invertible(d, "D")
        di = np.linalg.inv(d)
        t = a - b @ di @ c
        _require_invertible(t, "Schur complement A - B D^-1 C")
        ti = np.linalg.inv(t)
        det = np.linalg.det(d) * np.linalg.det(t)
        inv = np.block([[ti, -ti @ b @ di], [-di @ c @ ti, di + di @ c @ ti @ b @ di]])
    else:
        raise ContractError(f"pivot must be 'A' or 'D', got {pivot!r}")
    return float(det), inv
