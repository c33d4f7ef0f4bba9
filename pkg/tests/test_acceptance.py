"""Acceptance gate.

Each test carries a ``criterion`` marker; the terminal summary prints one
PASS/FAIL line per criterion (see ``conftest.py``).
"""
import numpy as np
import pytest

from pidbounds.attacks import AttackConfig, redundancy_attack, synergy_attack
from pidbounds.estimator import brute_force_mi, estimate_mi, quadrature_mi_1d
from pidbounds.oracle_check import random_discrete_system, random_gaussian_mixture_system
from pidbounds.pid import pid_bounds
from pidbounds.prob import FullGaussian, VariableSubset
from pidbounds.report import EvaluationRequest, evaluate, report_body, sweep
from pidbounds.synth import SyntheticSpec, synthesize
from pidbounds.toy import ToyConfig, toy_attacked_pid, toy_mi_terms, toy_scores

C = np.log(2 * np.pi * np.e)
ALPHAS = [0.0, 0.5, 1.0, 2.0, 10.0]


def detail(record_property, text):
    record_property("detail", text)


@pytest.mark.criterion(1, "toy redundancy scores match closed forms")
def test_toy_redundancy_exact(record_property):
    worst = 0.0
    for a in ALPHAS:
        s = toy_scores(ToyConfig(5, 0.1, a, "red", normalized=True))
        a2 = a * a
        mig_want = np.log(101 * (1 + 0.65 * a2) / (1 + 1.01 * a2)) / C
        ub_want = np.log(101 * (1 + 0.01 * a2) / (1 + 1.01 * a2)) / C
        for got, want in ((s["mig"], mig_want), (s["unibound"], ub_want)):
            worst = max(worst, abs(got - want) / abs(want))
    limit = toy_scores(ToyConfig(5, 0.1, 1e4, "red", normalized=True))
    detail(record_property, f"max rel err {worst:.1e}; limits {limit['mig']:.6f}, {limit['unibound']:.1e}")
    assert worst <= 1e-9
    assert abs(limit["mig"] - np.log(65) / C) <= 1e-6
    assert abs(limit["unibound"]) <= 1e-6


@pytest.mark.criterion(2, "toy synergy scores match closed form")
def test_toy_synergy_exact(record_property):
    worst = 0.0
    for a in ALPHAS:
        s = toy_scores(ToyConfig(5, 0.1, a, "syn", normalized=True))
        want = np.log(1 + 1 / (a * a + 0.01)) / C
        worst = max(worst, abs(s["mig"] - want) / want, abs(s["unibound"] - want) / want)
    detail(record_property, f"max rel err {worst:.1e}")
    assert worst <= 1e-9


@pytest.mark.criterion(3, "analytic R and C inside computed bounds")
def test_toy_containment(record_property):
    worst = 0.0
    for sigma in (0.05, 0.1, 0.5):
        for a in (0.0, 1.0, 5.0):
            for attack in ("red", "syn"):
                cfg = ToyConfig(5, sigma, a, attack)
                t = toy_mi_terms(cfg)
                pid = toy_attacked_pid(cfg)
                for k in range(cfg.K):
                    b = pid_bounds(t.single[k, k], t.rest[k, k], t.joint[k])
                    for v, lo, hi in ((pid["R"], b.r_lb, b.r_ub), (pid["C"], b.c_lb, b.c_ub)):
                        worst = max(worst, lo - v, v - hi)
    detail(record_property, f"max violation {worst:.1e}")
    assert worst <= 1e-9


@pytest.mark.criterion(4, "Monte-Carlo estimator agrees with exact oracles")
def test_estimator_vs_oracles(record_property):
    rng = np.random.default_rng(2024)
    misses = []
    for i in range(20):
        ds, joint = random_discrete_system(rng)
        est = estimate_mi(ds, 0, VariableSubset.full(ds.L), 10_000, seed=i)
        if abs(est.value - brute_force_mi(joint)) > max(0.02, 4 * est.std_error):
            misses.append(("discrete", i))
    for i in range(10):
        ds, conditionals, marginal = random_gaussian_mixture_system(rng)
        est = estimate_mi(ds, 0, VariableSubset.full(1), 10_000, seed=100 + i)
        if abs(est.value - quadrature_mi_1d(conditionals, marginal)) > max(0.02, 4 * est.std_error):
            misses.append(("mixture", i))
    detail(record_property, f"{30 - len(misses)}/30 systems within tolerance")
    assert not misses


@pytest.mark.criterion(5, "attack response on the synthetic ideal encoder")
def test_attack_response(record_property):
    ds = synthesize(SyntheticSpec((5, 5, 5), 3, sigma=0.05))
    grid = [0.0, 0.5, 1.0, 2.0, 5.0, 10.0]
    request = EvaluationRequest(
        metrics=("unibound", "mig", "betavae", "factorvae"),
        samples=10_000,
        attack=AttackConfig("red", 0.0, "reflection"),
    )
    values, errors = {}, {}
    for master in range(5):
        rows, _ = sweep(ds, EvaluationRequest(**{**request.__dict__, "seed": master}), grid)
        for alpha, metric, value, se in rows:
            values.setdefault(metric, {}).setdefault(alpha, []).append(value)
            errors.setdefault(metric, {}).setdefault(alpha, []).append(se)
    mean = {m: np.array([np.mean(values[m][a]) for a in grid]) for m in values}
    # standard error of the mean of 5 independent runs
    sem = {m: np.array([np.sqrt(np.sum(np.square(errors[m][a]))) / 5 for a in grid]) for m in errors}

    classic_shift = max(np.max(np.abs(mean[m] - mean[m][0])) for m in ("betavae", "factorvae"))
    ub, ub_se = mean["unibound"], sem["unibound"]
    non_increasing = all(ub[i + 1] <= ub[i] + 2 * np.hypot(ub_se[i], ub_se[i + 1]) for i in range(len(grid) - 1))
    ub_drop = ub[0] - ub[-1]
    mig_drop = mean["mig"][0] - mean["mig"][-1]
    detail(
        record_property,
        f"classic shift {classic_shift:.3f}; UniBound {ub[0]:.3f}->{ub[-1]:.3f}; "
        f"MIG {mean['mig'][0]:.3f}->{mean['mig'][-1]:.3f}",
    )
    assert classic_shift < 0.05
    assert ub[-1] < 0.15 and non_increasing
    assert mig_drop < ub_drop


@pytest.mark.criterion(6, "bound invariants on random triples")
def test_bound_invariants(record_property):
    rng = np.random.default_rng(6)
    worst = 0.0
    for _ in range(10_000):
        i_l, i_rest = rng.uniform(0, 3, size=2)
        i_joint = max(i_l, i_rest) + rng.uniform(0, 3)
        b = pid_bounds(i_l, i_rest, i_joint)
        worst = max(
            worst,
            b.u_lb - b.u_ub,
            b.r_lb - b.r_ub,
            b.c_lb - b.c_ub,
            abs((b.r_ub - b.r_lb) - (b.c_ub - b.c_lb)),
            abs(b.u_ub + b.r_lb - i_l),
        )
    detail(record_property, f"max violation {worst:.1e}")
    assert worst <= 1e-12


@pytest.mark.criterion(7, "attacked covariance determinant equals det Sigma")
def test_determinant_invariance(record_property):
    rng = np.random.default_rng(7)
    worst = 0.0
    for _ in range(50):
        L = int(rng.integers(1, 9))
        a = rng.normal(size=(L, L))
        sigma = a @ a.T + 0.5 * np.eye(L)
        want = np.linalg.det(sigma)
        post = FullGaussian(np.zeros(L), sigma)
        for alpha in (0.5, 2.0):
            for attack, kind in ((redundancy_attack, "red"), (synergy_attack, "syn")):
                got = np.linalg.det(attack(post, AttackConfig(kind, alpha)).cov)
                worst = max(worst, abs(got - want) / want)
    detail(record_property, f"max rel err {worst:.1e}")
    assert worst <= 1e-8


@pytest.mark.criterion(8, "scope: trained-VAE figures not reproduced; synthetic pipeline deterministic")
def test_pipeline_determinism(record_property):
    ds = synthesize(SyntheticSpec((3, 4), 3, sigma=0.2, kind="rotated"))
    request = EvaluationRequest(samples=2000, seed=11)
    a, b = evaluate(ds, request), evaluate(ds, request)
    detail(record_property, "figures from trained VAEs are out of scope; report bodies byte-identical")
    assert report_body(a) == report_body(b)
    assert set(a["scores"]) == {"unibound", "mig", "betavae", "factorvae"}
    assert set(a["pid"]["per_factor"]) == {"0", "1"}
