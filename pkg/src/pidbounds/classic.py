"""BetaVAE and FactorVAE interventional disentanglement metrics.

Both metrics fix one factor value, draw a batch of records sharing it and
look at how much each latent slot varies across the batch; a slot that
barely moves identifies the fixed factor.

* BetaVAE: features are mean absolute differences between paired samples;
  a multinomial linear classifier predicts the factor index.
* FactorVAE: per-slot variances normalized by the dataset-wide scale; each
  vote is the arg-min slot and a majority-vote table maps slots to factors.

Categorical slots use expected one-hot vectors (BetaVAE) and Gini impurity
(FactorVAE) in place of continuous differences and variances.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from sklearn.linear_model import LogisticRegression
from sklearn.pipeline import make_pipeline
from sklearn.preprocessing import StandardScaler

from .errors import ContractError


@dataclass(frozen=True)
class InterventionConfig:
    pairs_per_vote: int = 64
    train_votes: int = 800
    test_votes: int = 200
    seed: int = 0
    global_samples: int = 10_000

    def __post_init__(self):
        for name in ("pairs_per_vote", "train_votes", "test_votes", "global_samples"):
            if getattr(self, name) < 1:
                raise ContractError(f"{name} must be positive")


@dataclass(frozen=True)
class ClassicScore:
    score: float
    flags: tuple = field(default=())


def _check(dataset):
    for k, strata in enumerate(dataset.strata):
        if len(strata) < 2:
            raise ContractError(f"factor {k} has fewer than 2 values")


def _stream(config, name):
    tag = {"betavae": 0, "factorvae": 1}[name]
    return np.random.default_rng(np.random.SeedSequence(config.seed, spawn_key=(3, tag)))


def _draw_votes(dataset, n, rng):
    ks = rng.integers(0, dataset.K, size=n)
    vs = np.array([rng.integers(0, len(dataset.strata[k])) for k in ks])
    return ks, vs


def _beta_features(dataset, k, v, B, rng):
    stratum = dataset.strata[k][v]
    rows_a = stratum[rng.integers(0, len(stratum), size=B)]
    rows_b = stratum[rng.integers(0, len(stratum), size=B)]
    batch = dataset.posteriors
    za = batch.sample(rows_a, rng)
    zb = batch.sample(rows_b, rng)
    feat = np.abs(za - zb).mean(axis=0)
    for j, slot in enumerate(dataset.layout.categorical_slots):
        p = batch.cat_probs[j]
        feat[slot] = np.abs(p[rows_a] - p[rows_b]).mean()
    return feat


def betavae_metric(dataset, config=InterventionConfig()):
    """Held-out accuracy of a linear classifier predicting the fixed factor."""
    _check(dataset)
    rng = _stream(config, "betavae")
    n = config.train_votes + config.test_votes
    ks, vs = _draw_votes(dataset, n, rng)
    X = np.stack([_beta_features(dataset, k, v, config.pairs_per_vote, rng) for k, v in zip(ks, vs)])
    flags = []
    if any(len(dataset.strata[k][v]) == 1 for k, v in zip(ks, vs)):
        flags.append("stratum of size 1: pairs drawn with replacement")
    X_tr, y_tr = X[: config.train_votes], ks[: config.train_votes]
    X_te, y_te = X[config.train_votes :], ks[config.train_votes :]
    if np.unique(y_tr).size < 2:
        pred = np.full(y_te.shape, y_tr[0])
    else:
        clf = make_pipeline(StandardScaler(), LogisticRegression(C=1.0, max_iter=2000))
        clf.fit(X_tr, y_tr)
        pred = clf.predict(X_te)
    return ClassicScore(float(np.mean(pred == y_te)), tuple(flags))


def _gini(labels, arms):
    p = np.bincount(labels.astype(np.intp), minlength=arms) / labels.size
    return 1.0 - float(np.sum(p**2))


def _spread(z, layout):
    """Per-slot variance (continuous) or Gini impurity (categorical)."""
    out = np.var(z, axis=0, ddof=1) if z.shape[0] > 1 else np.zeros(z.shape[1])
    for slot in layout.categorical_slots:
        out[slot] = _gini(z[:, slot], layout.slots[slot].arms)
    return out


def factorvae_metric(dataset, config=InterventionConfig()):
    """Majority-vote accuracy of the arg-min normalized-variance slot."""
    _check(dataset)
    rng = _stream(config, "factorvae")
    batch = dataset.posteriors
    rows = rng.integers(0, len(dataset), size=config.global_samples)
    scale = _spread(batch.sample(rows, rng), dataset.layout)
    flags = []
    active = scale > 0
    if not np.all(active):
        flags.append(f"excluded zero-variance slots {np.flatnonzero(~active).tolist()}")
    if not np.any(active):
        raise ContractError("every latent slot has zero variance")
    n = config.train_votes + config.test_votes
    ks, vs = _draw_votes(dataset, n, rng)
    votes = np.empty(n, dtype=np.intp)
    B = config.pairs_per_vote
    for i, (k, v) in enumerate(zip(ks, vs)):
        stratum = dataset.strata[k][v]
        if len(stratum) == 1 and "stratum of size 1" not in " ".join(flags):
            flags.append("stratum of size 1: samples drawn with replacement")
        z = batch.sample(stratum[rng.integers(0, len(stratum), size=B)], rng)
        norm = np.full(dataset.L, np.inf)
        norm[active] = _spread(z, dataset.layout)[active] / scale[active]
        votes[i] = int(np.argmin(norm))
    tr = slice(0, config.train_votes)
    te = slice(config.train_votes, n)
    table = np.zeros((dataset.L, dataset.K), dtype=np.int64)
    np.add.at(table, (votes[tr], ks[tr]), 1)
    assign = np.argmax(table, axis=1)
    acc = float(np.mean(assign[votes[te]] == ks[te]))
    return ClassicScore(acc, tuple(flags))
