import math

import numpy as np
import pytest

from sketchlsq.approx_matmul import (
    ColumnSampler,
    approx_gram,
    c_lower_bound,
    column_probabilities,
    exactly_c,
    gram_error,
    matmul_error,
    rescale_to_unit_spectral,
    require_unit_spectral,
    spectral_norm_estimate,
    theory_sample_size,
    uniform_probabilities,
)
from sketchlsq.errors import (
    FrobeniusTooSmall,
    InvalidSpec,
    SpectralNormTooLarge,
    ZeroMatrix,
)


def test_probabilities_equal_norm_columns():
    a = np.array([[1.0, 0.0, 1.0], [0.0, 1.0, 0.0]])  # all columns unit norm
    assert np.allclose(column_probabilities(a), 1.0 / 3.0, atol=1e-15)


def test_probabilities_hand_case():
    probs = column_probabilities(np.array([[1.0, 0.0], [0.0, 2.0]]))
    assert np.allclose(probs, [0.2, 0.8], atol=1e-15)


def test_probabilities_sum_to_one():
    rng = np.random.default_rng(0)
    probs = column_probabilities(rng.standard_normal((5, 40)))
    assert abs(probs.sum() - 1.0) <= 1e-12


def test_probabilities_zero_matrix():
    with pytest.raises(ZeroMatrix):
        column_probabilities(np.zeros((3, 3)))


def test_uniform_probabilities_effective_beta():
    a = np.array([[1.0, 0.0], [0.0, 2.0]])
    probs, beta = uniform_probabilities(a)
    assert np.allclose(probs, 0.5)
    # Heaviest column holds 4/5 of the mass: 0.5 >= beta * 0.8 at beta = 5/8.
    assert beta == pytest.approx(0.625, rel=1e-12)
    ColumnSampler(probs=probs, c=10, beta=beta).validate_floor(a)


def test_sampler_validation():
    with pytest.raises(InvalidSpec):
        ColumnSampler(probs=np.array([0.5, 0.4]), c=1, beta=1.0)  # sums to 0.9
    with pytest.raises(InvalidSpec):
        ColumnSampler(probs=np.array([1.0]), c=0, beta=1.0)
    a = np.array([[1.0, 0.0], [0.0, 2.0]])
    bad = ColumnSampler(probs=np.array([0.9, 0.1]), c=4, beta=1.0)
    with pytest.raises(InvalidSpec):
        bad.validate_floor(a)  # p_2 = 0.1 < 0.8


def test_single_column_degenerate():
    a = np.array([[3.0], [4.0]])
    sampler = ColumnSampler.norm_squared(a, c=7)
    c_mat = exactly_c(a, sampler, seed=0)
    assert c_mat.shape == (2, 7)
    # Every draw is the single column divided by sqrt(c).
    assert np.allclose(c_mat, a / math.sqrt(7.0), atol=1e-15)
    assert np.allclose(c_mat @ c_mat.T, a @ a.T, atol=1e-12)
    assert matmul_error(a, c_mat) <= 1e-12


def test_exactly_c_unbiased():
    rng = np.random.default_rng(5)
    a = rng.standard_normal((4, 6))
    sampler = ColumnSampler.norm_squared(a, c=12)
    target = a @ a.T
    samples = np.empty((5000, 4, 4))
    for s in range(5000):
        c_mat = exactly_c(a, sampler, seed=s)
        samples[s] = c_mat @ c_mat.T
    mean = samples.mean(axis=0)
    se = samples.std(axis=0) / math.sqrt(5000)
    assert (np.abs(mean - target) <= 3.0 * se + 1e-12).all()


def test_exactly_c_index_frequencies():
    a = np.array([[1.0, 0.0], [0.0, 2.0]])
    sampler = ColumnSampler.norm_squared(a, c=10000)
    c_mat = exactly_c(a, sampler, seed=3)
    # Column 1 contributes value 1/sqrt(c p_0) in row 0: count them.
    hits_col0 = int((c_mat[0] != 0).sum())
    p0 = 0.2
    sigma = math.sqrt(10000 * p0 * (1 - p0))
    assert abs(hits_col0 - 10000 * p0) <= 3 * sigma


def test_exactly_c_deterministic():
    rng = np.random.default_rng(9)
    a = rng.standard_normal((3, 8))
    sampler = ColumnSampler.norm_squared(a, c=20)
    assert np.array_equal(exactly_c(a, sampler, 4), exactly_c(a, sampler, 4))


def test_approx_gram_matches_materialized():
    rng = np.random.default_rng(11)
    a = rng.standard_normal((5, 30))
    sampler = ColumnSampler.norm_squared(a, c=200)
    c_mat = exactly_c(a, sampler, seed=8)
    gram = approx_gram(a, sampler, seed=8)
    assert np.abs(gram - c_mat @ c_mat.T).max() <= 1e-10


def test_c_lower_bound_value():
    # 96*4/(1*0.25) = 1536; ceil(1536*ln(1536/sqrt(0.1))) = 13038.
    assert c_lower_bound(4.0, 1.0, 0.5, 0.1) == 13038


def test_c_lower_bound_monotone_in_frobenius():
    c1 = c_lower_bound(2.0, 1.0, 0.5, 0.1)
    c2 = c_lower_bound(4.0, 1.0, 0.5, 0.1)
    assert c2 > 2 * c1  # superlinear through the log factor


def test_c_lower_bound_frobenius_hypothesis():
    with pytest.raises(FrobeniusTooSmall):
        c_lower_bound(1.0 / 48.0, 1.0, 0.5, 0.1)


def test_matmul_error_extremes():
    rng = np.random.default_rng(13)
    a = rng.standard_normal((4, 10))
    assert matmul_error(a, a) <= 1e-10
    sv_max = np.linalg.svd(a, compute_uv=False)[0]
    err = gram_error(a, np.zeros((4, 4)))
    assert err == pytest.approx(sv_max**2, rel=1e-5)


def test_rescale_and_require():
    rng = np.random.default_rng(15)
    a = rng.standard_normal((6, 40))
    scaled = rescale_to_unit_spectral(a)
    require_unit_spectral(scaled)  # should not raise
    assert spectral_norm_estimate(scaled) <= 1.0 + 1e-8
    with pytest.raises(SpectralNormTooLarge):
        require_unit_spectral(2.0 * scaled)
    with pytest.raises(ZeroMatrix):
        rescale_to_unit_spectral(np.zeros((2, 2)))


def test_theory_sample_size_checks_hypotheses():
    rng = np.random.default_rng(17)
    a = rescale_to_unit_spectral(rng.standard_normal((8, 100)))
    sampler = ColumnSampler.norm_squared(a, c=1)
    c = theory_sample_size(a, eps=0.5, delta=0.1, sampler=sampler)
    frob_sq = float(np.sum(a * a))
    assert c == c_lower_bound(frob_sq, 1.0, 0.5, 0.1)
    with pytest.raises(SpectralNormTooLarge):
        theory_sample_size(3.0 * a, eps=0.5, delta=0.1, sampler=sampler)
