import numpy as np
import pytest
from scipy import integrate, stats

from pidbounds.errors import ContractError, DegenerateDistributionError
from pidbounds.prob import (
    Categorical,
    Continuous,
    DiagGaussian,
    FullGaussian,
    LatentLayout,
    Mixed,
    PosteriorBatch,
    VariableSubset,
    block_det_inv,
    gaussian_entropy,
    log_marginal_density,
    sample_posterior,
)


def random_spd(rng, d):
    a = rng.normal(size=(d, d))
    return a @ a.T + 0.5 * np.eye(d)


# -- log_marginal_density ------------------------------------------------------


def test_standard_normal_at_mode():
    p = DiagGaussian([0, 0], [1, 1])
    assert log_marginal_density(p, VariableSubset.full(2), [0, 0]) == pytest.approx(-np.log(2 * np.pi), abs=1e-12)


def test_diag_single_slot_at_mean():
    p = DiagGaussian([0, 3], [1, 2])
    got = log_marginal_density(p, VariableSubset.single(1, 2), [3])
    assert got == pytest.approx(-0.5 * np.log(2 * np.pi * 4), abs=1e-12)
    assert got == pytest.approx(-1.6121, abs=1e-4)


def test_full_gaussian_marginal_matches_quadrature():
    cov = np.array([[1.0, 0.5], [0.5, 1.0]])
    p = FullGaussian([0, 0], cov)
    got = log_marginal_density(p, VariableSubset.single(0, 2), [1.0])
    joint = stats.multivariate_normal([0, 0], cov)
    marg, _ = integrate.quad(lambda t: joint.pdf([1.0, t]), -np.inf, np.inf, epsabs=1e-13)
    assert got == pytest.approx(np.log(marg), abs=1e-9)
    assert got == pytest.approx(-1.4189, abs=1e-4)


def test_diag_marginal_consistency():
    rng = np.random.default_rng(3)
    p = DiagGaussian(rng.normal(size=4), rng.uniform(0.2, 2, size=4))
    z = rng.normal(size=4)
    S = VariableSubset((0, 2, 3))
    whole = log_marginal_density(p, S, z[[0, 2, 3]])
    parts = sum(log_marginal_density(p, VariableSubset.single(i, 4), [z[i]]) for i in (0, 2, 3))
    assert whole == pytest.approx(parts, abs=1e-12)


def test_full_marginal_matches_scipy():
    rng = np.random.default_rng(4)
    cov = random_spd(rng, 4)
    mean = rng.normal(size=4)
    p = FullGaussian(mean, cov)
    idx = [1, 3]
    z = rng.normal(size=2)
    want = stats.multivariate_normal(mean[idx], cov[np.ix_(idx, idx)]).logpdf(z)
    assert log_marginal_density(p, VariableSubset(idx), z) == pytest.approx(want, abs=1e-10)


@pytest.mark.parametrize("mean,std", [(0.0, 1.0), (2.0, 0.3), (-1.0, 5.0)])
def test_density_integrates_to_one(mean, std):
    p = DiagGaussian([mean], [std])
    t = np.linspace(mean - 8 * std, mean + 8 * std, 4001)
    batch = PosteriorBatch.from_params([p])
    dens = np.exp(batch.log_density(VariableSubset.full(1), t[:, None])[:, 0])
    assert integrate.trapezoid(dens, t) == pytest.approx(1.0, abs=1e-3)


def test_mixed_density_adds_categorical_terms():
    layout = LatentLayout((Categorical(3), Continuous()))
    p = Mixed(DiagGaussian([1.0], [0.5]), ([0.2, 0.3, 0.5],), layout)
    got = log_marginal_density(p, VariableSubset.full(2), [2, 1.0])
    want = np.log(0.5) + stats.norm(1.0, 0.5).logpdf(1.0)
    assert got == pytest.approx(want, abs=1e-12)
    assert log_marginal_density(p, VariableSubset.single(0, 2), [1]) == pytest.approx(np.log(0.3))


def test_singular_subcovariance_rejected():
    p = FullGaussian([0, 0], [[1.0, 1.0], [1.0, 1.0]])
    with pytest.raises(DegenerateDistributionError):
        log_marginal_density(p, VariableSubset.full(2), [0, 0])
    # the 1-D marginal is fine
    assert np.isfinite(log_marginal_density(p, VariableSubset.single(0, 2), [0]))


def test_dimension_mismatch():
    p = DiagGaussian([0, 0], [1, 1])
    with pytest.raises(ContractError):
        log_marginal_density(p, VariableSubset.full(2), [0.0])


def test_invalid_parameters():
    with pytest.raises(ContractError):
        DiagGaussian([0.0], [0.0])
    with pytest.raises(ContractError):
        Mixed(None, ([0.5, 0.6],))
    with pytest.raises(ContractError):
        LatentLayout((Categorical(1),))
    with pytest.raises(DegenerateDistributionError):
        FullGaussian([0, 0], [[1, 2], [2, 1]])


def test_subset_constructors():
    assert VariableSubset.complement(1, 4).indices == (0, 2, 3)
    assert VariableSubset.full(3).indices == (0, 1, 2)
    with pytest.raises(ContractError):
        VariableSubset(())
    with pytest.raises(ContractError):
        VariableSubset.single(3, 3)


# -- sampling ------------------------------------------------------------------


def test_near_deterministic_sample():
    z = sample_posterior(DiagGaussian([5.0], [1e-8]), np.random.default_rng(0))
    assert abs(z[0] - 5.0) < 1e-6


def test_sampling_is_seeded():
    p = FullGaussian([0, 1], [[1, 0.3], [0.3, 2]])
    a = sample_posterior(p, np.random.default_rng(42))
    b = sample_posterior(p, np.random.default_rng(42))
    assert np.array_equal(a, b)


def test_sample_correlation():
    p = FullGaussian([0, 0], [[1, 0.9], [0.9, 1]])
    batch = PosteriorBatch.from_params([p])
    z = batch.sample(np.zeros(100_000, dtype=int), np.random.default_rng(1))
    assert np.corrcoef(z.T)[0, 1] == pytest.approx(0.9, abs=0.01)


def test_categorical_sampling_frequencies():
    p = Mixed(None, ([0.1, 0.6, 0.3],))
    batch = PosteriorBatch.from_params([p])
    z = batch.sample(np.zeros(50_000, dtype=int), np.random.default_rng(2))
    freq = np.bincount(z[:, 0].astype(int), minlength=3) / z.shape[0]
    np.testing.assert_allclose(freq, [0.1, 0.6, 0.3], atol=0.01)


# -- entropy and block inverse -------------------------------------------------


@pytest.mark.parametrize(
    "cov,want",
    [
        ([[1.0]], 0.5 * np.log(2 * np.pi * np.e)),
        ([[0.01]], 0.5 * np.log(2 * np.pi * np.e * 0.01)),
        ([[2.0, 1.0], [1.0, 2.0]], np.log(2 * np.pi * np.e) + 0.5 * np.log(3.0)),
    ],
)
def test_gaussian_entropy(cov, want):
    assert gaussian_entropy(cov) == pytest.approx(want, abs=1e-12)


def test_gaussian_entropy_reference_values():
    assert gaussian_entropy([[1.0]]) == pytest.approx(1.4189, abs=1e-4)
    assert gaussian_entropy([[0.01]]) == pytest.approx(-0.8837, abs=1e-4)
    assert gaussian_entropy([[2.0, 1.0], [1.0, 2.0]]) == pytest.approx(3.3872, abs=1e-4)


def test_gaussian_entropy_singular():
    with pytest.raises(DegenerateDistributionError):
        gaussian_entropy([[1.0, 1.0], [1.0, 1.0]])


def test_block_identity():
    det, inv = block_det_inv(np.eye(4), 2)
    assert det == pytest.approx(1.0)
    np.testing.assert_allclose(inv, np.eye(4), atol=1e-15)


@pytest.mark.parametrize("pivot", ["A", "D"])
@pytest.mark.parametrize("seed", range(5))
def test_block_matches_dense(pivot, seed):
    rng = np.random.default_rng(seed)
    m = random_spd(rng, 4)
    det, inv = block_det_inv(m, 2, pivot)
    assert det == pytest.approx(np.linalg.det(m), rel=1e-10)
    np.testing.assert_allclose(inv, np.linalg.inv(m), rtol=1e-10, atol=1e-12)
    assert np.max(np.abs(inv @ m - np.eye(4))) < 1e-9


@pytest.mark.parametrize("alpha", [0.0, 0.5, 3.0])
def test_block_attack_structure_determinant(alpha):
    rng = np.random.default_rng(9)
    L = 3
    sigma = random_spd(rng, L)
    U = np.linalg.qr(rng.normal(size=(L, L)))[0]
    m = np.block([[sigma, alpha * sigma @ U.T], [alpha * U @ sigma, np.eye(L) + alpha**2 * U @ sigma @ U.T]])
    det, _ = block_det_inv(m, L)
    assert det == pytest.approx(np.linalg.det(sigma), rel=1e-10)


def test_block_names_failing_block():
    m = np.array([[0.0, 1.0], [1.0, 0.0]])
    with pytest.raises(DegenerateDistributionError, match="block A"):
        block_det_inv(m, 1, "A")
    m = np.array([[1.0, 1.0], [1.0, 1.0]])
    with pytest.raises(DegenerateDistributionError, match="Schur"):
        block_det_inv(m, 1, "A")
