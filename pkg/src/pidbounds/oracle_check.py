"""Self-check suite comparing every computed quantity with an exact reference.

Three groups run:

* toy model: closed forms versus the generic bound arithmetic and versus
  Gaussian-entropy recomputation;
* estimator: Monte-Carlo estimates versus enumeration on small discrete
  systems;
* bounds: ordering and identity properties of the six PID bounds on random
  MI triples.
"""
from __future__ import annotations

import itertools

import numpy as np

from .attacks import AttackKind
from .dataset import FactorSpec, build_dataset
from .estimator import brute_force_mi, estimate_mi
from .pid import pid_bounds
from .prob import Categorical, DiagGaussian, LatentLayout, Mixed, VariableSubset
from .toy import CheckFailure, ToyConfig, toy_consistency_check, toy_mi_terms, toy_mi_terms_numeric

TOY_SIGMAS = (0.05, 0.1, 0.5)
TOY_ALPHAS = (0.0, 1.0, 5.0, 10.0)
TOY_KS = (2, 3, 5)


def random_discrete_system(rng, max_values=4, max_states=16):
    """A one-factor dataset with categorical latents and its exact joint table.

    Returns ``(dataset, joint)`` where ``joint[v, s]`` is the probability of
    factor value ``v`` and joint latent state ``s`` (row-major over slots).
    Every stratum has the same size, so the factor marginal is uniform.
    """
    c = int(rng.integers(2, max_values + 1))
    per_value = int(rng.integers(1, 5))
    n_slots = int(rng.integers(1, 3))
    while True:
        arms = [int(a) for a in rng.integers(2, 5, size=n_slots)]
        if np.prod(arms) <= max_states:
            break
    layout = LatentLayout(tuple(Categorical(a) for a in arms))
    records = []
    joint = np.zeros((c, int(np.prod(arms))))
    for v in range(c):
        for _ in range(per_value):
            probs = [rng.dirichlet(np.full(a, 0.5)) for a in arms]
            # keep every outcome representable so log-densities stay finite
            probs = [(p + 1e-12) / (p + 1e-12).sum() for p in probs]
            records.append(([v], Mixed(None, tuple(probs), layout)))
            prod = probs[0]
            for p in probs[1:]:
                prod = np.outer(prod, p).ravel()
            joint[v] += prod / (c * per_value)
    spec = FactorSpec.from_cardinalities([c])
    return build_dataset(spec, records, layout), joint


def random_gaussian_mixture_system(rng, max_values=4):
    """A one-factor dataset with a scalar Gaussian latent and its mixture conditionals."""
    c = int(rng.integers(2, max_values + 1))
    per_value = int(rng.integers(1, 4))
    records = []
    conditionals = []
    for v in range(c):
        means = rng.uniform(-2, 2, size=per_value)
        stds = rng.uniform(0.1, 1.0, size=per_value)
        conditionals.append((np.full(per_value, 1.0 / per_value), means, stds))
        records += [([v], DiagGaussian([m], [s])) for m, s in zip(means, stds)]
    spec = FactorSpec.from_cardinalities([c])
    return build_dataset(spec, records), conditionals, np.full(c, 1.0 / c)


def check_toy(scores_fn=None):
    failures = []
    for K, sigma, alpha, attack, norm in itertools.product(
        TOY_KS, TOY_SIGMAS, TOY_ALPHAS, (None, AttackKind.REDUNDANCY, AttackKind.SYNERGY), (False, True)
    ):
        cfg = ToyConfig(K, sigma, alpha, attack, norm)
        failures += toy_consistency_check(cfg, scores_fn=scores_fn)
        if norm:
            continue
        exact = toy_mi_terms(cfg)
        numeric = toy_mi_terms_numeric(cfg)
        for name in ("single", "rest", "joint"):
            err = float(np.max(np.abs(getattr(exact, name) - getattr(numeric, name))))
            if err > 1e-8:
                failures.append(
                    CheckFailure(f"toy_mi_terms.{name}", {"K": K, "sigma": sigma, "alpha": alpha}, "entropy route", err)
                )
    return failures


def check_estimator(seed=0, systems=5, samples=10_000):
    rng = np.random.default_rng(seed)
    failures = []
    for i in range(systems):
        ds, joint = random_discrete_system(rng)
        want = brute_force_mi(joint)
        est = estimate_mi(ds, 0, VariableSubset.full(ds.L), samples, seed=i)
        tol = max(0.02, 4 * est.std_error)
        if abs(est.value - want) > tol:
            failures.append(CheckFailure("estimate_mi vs brute_force_mi", {"system": i}, want, est.value))
    return failures


def check_bounds(seed=0, n=10_000, tol=1e-12):
    rng = np.random.default_rng(seed)
    failures = []
    for _ in range(n):
        a, b = rng.uniform(0, 3, size=2)
        j = max(a, b) + rng.uniform(0, 3)
        pb = pid_bounds(a, b, j)
        ok = (
            pb.u_lb <= pb.u_ub + tol
            and pb.r_lb <= pb.r_ub + tol
            and pb.c_lb <= pb.c_ub + tol
            and abs((pb.r_ub - pb.r_lb) - (pb.c_ub - pb.c_lb)) <= tol
            and abs(pb.u_ub + pb.r_lb - a) <= tol
        )
        if not ok:
            failures.append(CheckFailure("pid_bounds invariants", {"i_l": a, "i_rest": b, "i_joint": j}, "ordered", pb))
    return failures


def run_oracle_check(seed=0, scores_fn=None):
    """Run every group; returns a dict of group name to failure list."""
    return {
        "toy": check_toy(scores_fn),
        "estimator": check_estimator(seed),
        "bounds": check_bounds(seed),
    }
