"""Synthetic curves, noise, denoising, anomaly detection, decay reports."""

from __future__ import annotations

import numpy as np
import pytest

from geopyramid import (
    Anomaly,
    Euclidean,
    ManifoldSequence,
    NoiseModel,
    Sphere,
    ValidationError,
    add_noise,
    bspline_mask,
    detect_anomalies,
    flower_curve,
    m_analyze,
    m_synthesize,
    p_min_report,
    solve_decimation,
    spd_curve,
    threshold_denoise,
    threshold_pyramid,
)

ALPHA = bspline_mask(3)
ZETA = solve_decimation(ALPHA).normalized(1e-5)
ALPHA2 = bspline_mask(2)
ZETA2 = solve_decimation(ALPHA2).normalized(1e-4)


def test_flower_curve_first_sample_and_norms():
    curve = flower_curve(5, 64)
    polar = 11.0 * np.pi / 48.0  # pi/16 + pi/6 at the first sample
    expected = np.array([np.sin(polar), 0.0, np.cos(polar)])
    assert float(np.max(np.abs(curve.points[0] - expected))) < 1e-15
    assert float(np.max(np.abs(np.linalg.norm(curve.points, axis=1) - 1.0))) < 1e-14
    assert isinstance(curve.manifold, Sphere)
    assert len(curve) == 64


def test_flower_curve_petal_symmetry():
    # rotating by one petal maps the sample set onto itself
    petals, samples = 5, 100
    curve = flower_curve(petals, samples)
    shifted = np.roll(curve.points, -samples // petals, axis=0)
    angle = 2.0 * np.pi / petals
    rot = np.array(
        [
            [np.cos(angle), -np.sin(angle), 0.0],
            [np.sin(angle), np.cos(angle), 0.0],
            [0.0, 0.0, 1.0],
        ]
    )
    assert float(np.max(np.abs(shifted - curve.points @ rot.T))) < 1e-12


def test_flower_curve_validation():
    with pytest.raises(ValidationError):
        flower_curve(0, 64)
    with pytest.raises(ValidationError):
        flower_curve(5, 3)


def test_spd_curve_is_valid_and_smooth():
    curve = spd_curve(60)
    assert curve.points.shape == (60, 3, 3)
    skew = np.max(np.abs(curve.points - np.transpose(curve.points, (0, 2, 1))))
    assert float(skew) < 1e-14
    eigenvalues = np.linalg.eigvalsh(curve.points)
    assert float(np.min(eigenvalues)) > 0.1
    assert curve.delta() < 0.5


def test_spd_curve_anomaly_creates_two_jumps():
    n = 60
    smooth = spd_curve(n)
    jumped = spd_curve(n, Anomaly(scale=2.0))
    start, stop = n // 3, 2 * n // 3
    inside = slice(start, stop)
    assert np.allclose(jumped.points[inside], 2.0 * smooth.points[inside], atol=1e-12)
    outside = np.r_[0:start, stop:n]
    assert np.allclose(jumped.points[outside], smooth.points[outside], atol=1e-12)
    m = smooth.manifold
    gaps = m.distance(jumped.points, np.roll(jumped.points, -1, axis=0))
    assert set(np.argsort(gaps)[-2:]) == {start - 1, stop - 1}


def test_anomaly_validation():
    with pytest.raises(ValidationError):
        Anomaly(scale=0.0)
    with pytest.raises(ValidationError):
        Anomaly(window=(5, 3)).resolve_window(10)
    with pytest.raises(ValidationError):
        Anomaly(window=(0, 11)).resolve_window(10)
    assert Anomaly(window=(2, 5)).resolve_window(10) == (2, 5)
    assert Anomaly().resolve_window(12) == (4, 8)


def test_add_noise_zero_sigma_is_identity():
    curve = flower_curve(3, 32)
    noisy, rescaled = add_noise(curve, NoiseModel(0.0))
    assert np.array_equal(noisy.points, curve.points)
    assert rescaled == 0


def test_add_noise_is_seed_deterministic():
    curve = flower_curve(3, 32)
    a, _ = add_noise(curve, NoiseModel(0.01, rng_seed=5))
    b, _ = add_noise(curve, NoiseModel(0.01, rng_seed=5))
    c, _ = add_noise(curve, NoiseModel(0.01, rng_seed=6))
    assert np.array_equal(a.points, b.points)
    assert not np.array_equal(a.points, c.points)


def test_add_noise_mean_displacement():
    # 2D isotropic tangent noise has Rayleigh norms: mean sigma * sqrt(pi/2)
    curve = flower_curve(3, 4096)
    sigma = 0.02
    noisy, rescaled = add_noise(curve, NoiseModel(sigma, rng_seed=1))
    displacement = curve.manifold.distance(curve.points, noisy.points)
    expected = sigma * np.sqrt(np.pi / 2.0)
    assert abs(float(np.mean(displacement)) - expected) < 0.05 * expected
    assert rescaled == 0


def test_add_noise_rescales_oversized_draws():
    curve = flower_curve(3, 64)
    noisy, rescaled = add_noise(curve, NoiseModel(2.5, rng_seed=2))
    assert rescaled > 0
    displacement = curve.manifold.distance(curve.points, noisy.points)
    assert float(np.max(displacement)) <= 0.9 * np.pi + 1e-9


def test_noise_model_validation():
    with pytest.raises(ValidationError):
        NoiseModel(-0.1)


def test_threshold_pyramid_keeps_and_zeroes():
    values = np.linspace(0.0, 2.0 * np.pi, 32, endpoint=False)
    seq = ManifoldSequence(Euclidean(1), np.sin(values)[:, None])
    pyramid = m_analyze(ALPHA, ZETA, seq, 2)
    norms = np.concatenate(pyramid.detail_norms())
    tau = float(np.median(norms))
    cut = threshold_pyramid(pyramid, tau)
    for before, after in zip(pyramid.details, cut.details):
        b = before.norms(pyramid.manifold)
        a = after.norms(pyramid.manifold)
        assert np.array_equal(a[b >= tau], b[b >= tau])
        assert np.all(a[b < tau] == 0.0)
    with pytest.raises(ValidationError):
        threshold_pyramid(pyramid, -0.5)


def test_threshold_zero_reconstructs_exactly():
    curve = flower_curve(5, 64)
    pyramid = m_analyze(ALPHA, ZETA, curve, 2)
    rec = threshold_denoise(ALPHA, pyramid, 0.0)
    assert rec.sup_distance(curve) < 1e-9


def test_threshold_infinity_gives_subdivision_limit():
    from geopyramid import ManifoldPyramid, t_subdivide

    curve = flower_curve(5, 64)
    pyramid = m_analyze(ALPHA, ZETA, curve, 2)
    rec = threshold_denoise(ALPHA, pyramid, np.inf)
    expected = t_subdivide(ALPHA, t_subdivide(ALPHA, pyramid.coarse))
    assert rec.sup_distance(
        ManifoldSequence(curve.manifold, expected.points, rec.level, validate=False)
    ) < 1e-10


def test_single_level_denoising_improves_error():
    truth = flower_curve(5, 320)
    manifold = truth.manifold
    for seed in range(5):
        noisy, _ = add_noise(truth, NoiseModel(0.0125, rng_seed=seed))
        pyramid = m_analyze(ALPHA, ZETA, noisy, 1)
        denoised = threshold_denoise(ALPHA, pyramid, 0.14)
        noisy_error = float(np.mean(manifold.distance(truth.points, noisy.points)))
        denoised_error = float(np.mean(manifold.distance(truth.points, denoised.points)))
        assert denoised_error < noisy_error


def test_denoising_restores_detail_decay():
    # noise flattens the detail decay; thresholding restores a steep one and
    # keeps the result close to the clean curve
    truth = flower_curve(5, 320)
    noisy, _ = add_noise(truth, NoiseModel(0.0125, rng_seed=0))
    denoised = threshold_denoise(ALPHA, m_analyze(ALPHA, ZETA, noisy, 5), 0.14)
    ratio_noisy = p_min_report(ALPHA, ZETA, noisy, 5).fitted_ratio
    ratio_denoised = p_min_report(ALPHA, ZETA, denoised, 5).fitted_ratio
    assert ratio_noisy > 0.4
    assert ratio_denoised < 0.2
    closeness = float(np.mean(truth.manifold.distance(truth.points, denoised.points)))
    assert closeness < 0.1


def test_detect_single_outlier():
    x = np.linspace(0.0, 2.0 * np.pi, 64, endpoint=False)
    values = np.sin(x)[:, None]
    values[37] += 0.5
    pyramid = m_analyze(ALPHA, ZETA, ManifoldSequence(Euclidean(1), values), 3)
    flags = detect_anomalies(pyramid, 6.0)
    assert [(f.level, f.index) for f in flags] == [(3, 37)]
    assert flags[0].grid_position == 37 / 8.0


def test_detect_nothing_on_smooth_input():
    x = np.linspace(0.0, 2.0 * np.pi, 64, endpoint=False)
    pyramid = m_analyze(
        ALPHA, ZETA, ManifoldSequence(Euclidean(1), np.sin(x)[:, None]), 3
    )
    assert detect_anomalies(pyramid, 6.0) == []
    smooth_spd = m_analyze(ALPHA2, ZETA2, spd_curve(96), 3)
    assert detect_anomalies(smooth_spd, 6.0) == []


def test_detect_spd_jumps():
    n = 96
    pyramid = m_analyze(ALPHA2, ZETA2, spd_curve(n, Anomaly(scale=2.0)), 3)
    flags = detect_anomalies(pyramid, 6.0)
    finest = [f.index for f in flags if f.level == 3]
    assert any(abs(i - n // 3) <= 2 for i in finest)
    assert any(abs(i - 2 * n // 3) <= 2 for i in finest)


def test_detector_is_shift_equivariant():
    points = flower_curve(3, 64).points.copy()
    sphere = Sphere()
    nudge = sphere.project_tangent(points[20], np.array([0.3, -0.5, 0.1]))
    points[20] = sphere.exp(points[20], 0.2 * nudge)
    rolled = np.roll(points, 16, axis=0)
    flags = detect_anomalies(
        m_analyze(ALPHA, ZETA, ManifoldSequence(sphere, points), 2), 6.0
    )
    flags_rolled = detect_anomalies(
        m_analyze(ALPHA, ZETA, ManifoldSequence(sphere, rolled), 2), 6.0
    )
    assert flags
    mapped = {
        (f.level, (f.index + 16 // 2 ** (2 - f.level)) % (16 * 2**f.level))
        for f in flags
    }
    assert mapped == {(f.level, f.index) for f in flags_rolled}


def test_detector_validation():
    pyramid = m_analyze(ALPHA, ZETA, flower_curve(3, 32), 1)
    with pytest.raises(ValidationError):
        detect_anomalies(pyramid, 0.0)
    with pytest.raises(ValidationError):
        detect_anomalies(pyramid, 6.0, parities=())
    with pytest.raises(ValidationError):
        detect_anomalies(pyramid, 6.0, parities=(2,))


def test_detail_norms_split_into_parity_bands():
    # odd positions carry the geometric prediction error, even positions only
    # the small decimation artifact, so the two populations sit on different
    # scales; that is why the detector screens them separately
    pyramid = m_analyze(ALPHA, ZETA, flower_curve(5, 64), 1)
    norms = pyramid.detail_norms()[0]
    even = float(np.median(norms[0::2]))
    odd = float(np.median(norms[1::2]))
    assert 0.0 < even
    assert odd > 5.0 * even


def test_p_min_report_shapes_and_monotonicity():
    report = p_min_report(ALPHA, ZETA, flower_curve(5, 320), 5)
    assert len(report.p_min_series) == 5
    assert len(report.delta_series) == 5
    assert report.p_min == report.p_min_series[0]
    assert report.floor_estimate == min(report.per_level_max)
    # sampling densities increase along the series, so both columns decrease
    assert all(a > b for a, b in zip(report.delta_series, report.delta_series[1:]))
    assert all(a > b for a, b in zip(report.p_min_series, report.p_min_series[1:]))
    assert report.p_min_series[-1] > 1.0
    assert 0.0 < report.fitted_ratio < 0.5


def test_p_min_report_validation():
    curve = flower_curve(5, 320)
    with pytest.raises(ValidationError):
        p_min_report(ALPHA, ZETA, curve, 0)
    with pytest.raises(ValidationError):
        p_min_report(ALPHA, ZETA, curve, 7)  # 320 not divisible by 128
    constant = ManifoldSequence(Sphere(), np.tile([0.0, 0.0, 1.0], (32, 1)))
    with pytest.raises(ValidationError):
        p_min_report(ALPHA, ZETA, constant, 2)


def test_p_min_single_level_has_no_fit():
    report = p_min_report(ALPHA, ZETA, flower_curve(5, 64), 1)
    assert np.isnan(report.fitted_ratio)
    assert len(report.p_min_series) == 1


def test_decay_report_asdict_keys():
    report = p_min_report(ALPHA, ZETA, flower_curve(5, 64), 2)
    document = report.asdict()
    assert set(document) == {
        "per_level_max",
        "fitted_ratio",
        "p_min",
        "floor_estimate",
        "p_min_series",
        "delta_series",
    }


def test_round_trip_through_application_stack():
    curve = spd_curve(48)
    pyramid = m_analyze(ALPHA2, ZETA2, curve, 2)
    rec = m_synthesize(ALPHA2, pyramid)
    assert rec.sup_distance(curve) < 1e-9
