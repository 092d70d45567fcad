import numpy as np
import pytest

from biln.synthetic import (
    GaussianPairSpec,
    InfeasibleNoiseError,
    NoiseModel,
    bayes_labels,
    clean_posterior,
    corrupt,
    noisy_posterior,
    sample_clean,
    sample_noise_model,
)

SPEC = GaussianPairSpec()


def test_sample_clean_empty():
    sample = sample_clean(SPEC, 0, seed=0)
    assert len(sample) == 0 and sample.dim == 2


def test_sample_clean_prior_concentration():
    n = 100_000
    sample = sample_clean(SPEC, n, seed=1)
    frac_pos = np.mean(sample.labels == 1)
    assert abs(frac_pos - 0.5) < 3.0 * np.sqrt(0.25 / n)


def test_sample_clean_class_means():
    n = 100_000
    sample = sample_clean(SPEC, n, seed=2)
    pos = sample.features[sample.labels == 1]
    se = 1.0 / np.sqrt(len(pos))
    assert abs(pos[:, 0].mean() - (-2.0)) < 3.0 * se
    assert abs(pos[:, 1].mean() - 2.0) < 3.0 * se


def test_sample_clean_determinism():
    a = sample_clean(SPEC, 50, seed=3)
    b = sample_clean(SPEC, 50, seed=3)
    assert np.array_equal(a.features, b.features)
    assert np.array_equal(a.labels, b.labels)


def test_clean_posterior_origin_is_half():
    assert clean_posterior(SPEC, np.array([0.0, 0.0])) == pytest.approx(0.5, abs=1e-15)


def test_clean_posterior_closed_form_point():
    # independent oracle: likelihood ratio of the two unit-covariance Gaussians
    x = np.array([1.0, 2.0])
    u = SPEC.u_array
    num = np.exp(-0.5 * np.sum((x - u) ** 2))
    den = num + np.exp(-0.5 * np.sum((x + u) ** 2))
    oracle = num / den
    value = clean_posterior(SPEC, x)
    assert value == pytest.approx(oracle, rel=1e-12)
    assert value == pytest.approx(0.9820137900379085, rel=1e-12)  # sigmoid(4)


def test_clean_posterior_monte_carlo_bins():
    # empirical +1 frequency in a disc vs the mean posterior over the disc's draws
    n = 100_000
    sample = sample_clean(SPEC, n, seed=4)
    eta = clean_posterior(SPEC, sample.features)
    for center in ([0.0, 0.0], [-1.0, 1.0], [1.0, -1.0]):
        inside = np.sum((sample.features - np.asarray(center)) ** 2, axis=1) < 0.6 ** 2
        assert inside.sum() > 100
        observed = np.sum(sample.labels[inside] == 1)
        expected = eta[inside].sum()
        stderr = np.sqrt(np.sum(eta[inside] * (1.0 - eta[inside])))
        assert abs(observed - expected) <= 3.0 * stderr + 1e-9


def test_noise_model_zero_bound_forces_zero_rate():
    model = sample_noise_model(0.0, 0.49, dim=2, seed=5)
    pts = np.random.default_rng(0).standard_normal((50, 2))
    assert np.all(model.rho_pos(pts) == 0.0)
    assert np.all(model.rho_neg(pts) > 0.0)


def test_noise_model_rate_at_orthogonal_point_is_half_cap():
    model = sample_noise_model(0.3, 0.2, dim=2, seed=6)
    w = model.w_pos
    # solve w0 + w1 a + w2 b = 0 for a point on the hyperplane
    x = np.array([-w[0] / w[1], 0.0]) if w[1] != 0 else np.array([0.0, -w[0] / w[2]])
    assert model.rho_pos(x) == pytest.approx(0.5 * 0.3, abs=1e-12)


def test_noise_model_sum_below_one_skips_probe():
    model = sample_noise_model(0.25, 0.25, dim=2, seed=7, probe=None)
    assert model.rho_pos_max == 0.25


def test_noise_model_probe_required_when_sum_reaches_one():
    with pytest.raises(ValueError):
        sample_noise_model(0.5, 0.5, dim=2, seed=8, probe=None)
    probe = sample_clean(SPEC, 10_000, seed=8).features
    model = sample_noise_model(0.5, 0.5, dim=2, seed=8, probe=probe)
    total = model.rho_pos(probe) + model.rho_neg(probe)
    assert np.max(total) < 1.0


def test_noise_model_resample_cap():
    probe = sample_clean(SPEC, 10_000, seed=9).features
    with pytest.raises(InfeasibleNoiseError):
        sample_noise_model(0.99, 0.99, dim=2, seed=9, probe=probe, max_resamples=5)


def test_noise_model_json_round_trip():
    model = sample_noise_model(0.3, 0.4, dim=2, seed=10)
    back = NoiseModel.from_dict(model.to_dict())
    assert back.rho_pos_max == model.rho_pos_max
    assert np.array_equal(back.w_pos, model.w_pos)
    assert np.array_equal(back.w_neg, model.w_neg)


def test_corrupt_zero_noise_is_identity():
    sample = sample_clean(SPEC, 500, seed=11)
    model = NoiseModel(0.0, 0.0, np.zeros(3), np.zeros(3))
    noisy = corrupt(sample, model, seed=12)
    assert np.array_equal(noisy.labels, sample.labels)
    assert np.array_equal(noisy.features, sample.features)
    assert noisy.kind == "noisy"


def test_corrupt_constant_rate_flip_fraction():
    # zero weight vectors give sigmoid(0) = 1/2, so the rate is half the cap
    n = 100_000
    sample = sample_clean(SPEC, n, seed=13)
    model = NoiseModel(0.3, 0.0, np.zeros(3), np.zeros(3))
    noisy = corrupt(sample, model, seed=14)
    pos = sample.labels == 1
    flipped = np.mean(noisy.labels[pos] != sample.labels[pos])
    stderr = np.sqrt(0.15 * 0.85 / pos.sum())
    assert abs(flipped - 0.15) < 3.0 * stderr
    assert np.all(noisy.labels[~pos] == sample.labels[~pos])


def test_corrupt_deterministic_and_preserves_features():
    sample = sample_clean(SPEC, 300, seed=15)
    model = sample_noise_model(0.4, 0.3, dim=2, seed=16)
    a = corrupt(sample, model, seed=17)
    b = corrupt(sample, model, seed=17)
    assert np.array_equal(a.labels, b.labels)
    assert a.features is sample.features or np.array_equal(a.features, sample.features)


def test_corrupt_requires_clean_sample():
    sample = sample_clean(SPEC, 10, seed=18)
    model = NoiseModel(0.0, 0.0, np.zeros(3), np.zeros(3))
    noisy = corrupt(sample, model, seed=19)
    with pytest.raises(ValueError):
        corrupt(noisy, model, seed=20)


def test_noisy_posterior_symmetric_mixing():
    # eta = 1/2 with equal rates stays at 1/2: 0.8 * 0.5 + 0.2 * 0.5
    model = NoiseModel(0.4, 0.4, np.zeros(3), np.zeros(3))
    x = np.array([0.0, 0.0])  # eta = 0.5; both rates are 0.2 here
    assert noisy_posterior(SPEC, model, x) == pytest.approx(0.5, abs=1e-15)


def test_noisy_posterior_zero_noise_equals_clean():
    model = NoiseModel(0.0, 0.0, np.zeros(3), np.zeros(3))
    pts = np.random.default_rng(21).standard_normal((100, 2)) * 2.0
    assert np.allclose(noisy_posterior(SPEC, model, pts), clean_posterior(SPEC, pts), atol=0)


def test_noisy_posterior_matches_direct_recomputation():
    model = sample_noise_model(0.35, 0.45, dim=2, seed=22)
    pts = np.random.default_rng(23).standard_normal((200, 2)) * 2.0
    eta = clean_posterior(SPEC, pts)
    direct = (1.0 - model.rho_pos(pts)) * eta + model.rho_neg(pts) * (1.0 - eta)
    values = noisy_posterior(SPEC, model, pts)
    assert np.allclose(values, direct, atol=0)
    assert np.all((values >= 0.0) & (values <= 1.0))


def test_noisy_label_frequency_matches_mixing_identity():
    # small-scale version of the corrupted-draw frequency check
    n = 20_000
    sample = sample_clean(SPEC, n, seed=24)
    model = sample_noise_model(0.4, 0.3, dim=2, seed=25)
    noisy = corrupt(sample, model, seed=26)
    eta_noisy = noisy_posterior(SPEC, model, sample.features)
    for center in ([0.0, 0.0], [-2.0, 2.0], [2.0, -2.0], [-1.0, 0.0], [0.5, 1.0]):
        inside = np.sum((sample.features - np.asarray(center)) ** 2, axis=1) < 0.8 ** 2
        assert inside.sum() > 50
        observed = np.sum(noisy.labels[inside] == 1)
        expected = eta_noisy[inside].sum()
        stderr = np.sqrt(np.sum(eta_noisy[inside] * (1.0 - eta_noisy[inside])))
        assert abs(observed - expected) <= 3.0 * stderr + 1e-9


def test_rate_bound_invariants_small():
    # pointwise bounds via the mixing identity on random models and probes
    rng = np.random.default_rng(27)
    for _ in range(50):
        model = NoiseModel(
            rng.uniform(0, 0.49), rng.uniform(0, 0.49),
            rng.standard_normal(3), rng.standard_normal(3),
        )
        pts = sample_clean(SPEC, 50, seed=rng.integers(2**32)).features
        eta_noisy = noisy_posterior(SPEC, model, pts)
        assert np.all(model.rho_pos(pts) <= 1.0 - eta_noisy + 1e-12)
        assert np.all(model.rho_neg(pts) <= eta_noisy + 1e-12)


def test_bayes_labels_threshold():
    pts = np.array([[-2.0, 2.0], [2.0, -2.0], [0.0, 0.0]])
    assert bayes_labels(SPEC, pts).tolist() == [1, -1, 1]  # tie at the origin goes to +1
