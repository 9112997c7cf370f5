"""Shared generators for the test suite.

Random smooth closed curves on each manifold, built from low-order
trigonometric series so that consecutive-sample distances shrink as the
sample count grows.
"""

from __future__ import annotations

import numpy as np

from geopyramid import SPD, Euclidean, ManifoldSequence, Sphere


def random_trig_series(rng, samples, terms=3, scale=1.0):
    """A smooth periodic scalar signal: sum of a few random harmonics."""
    theta = np.linspace(0.0, 2.0 * np.pi, samples, endpoint=False)
    values = np.zeros(samples)
    for k in range(1, terms + 1):
        amp = scale * rng.normal() / k**2
        phase = rng.uniform(0.0, 2.0 * np.pi)
        values += amp * np.cos(k * theta + phase)
    return values


def random_sphere_curve(rng, samples, terms=3, wobble=0.35):
    """A smooth closed curve on the unit sphere near the north pole."""
    x = random_trig_series(rng, samples, terms, wobble)
    y = random_trig_series(rng, samples, terms, wobble)
    points = np.stack([np.sin(x), np.cos(x) * np.sin(y), np.cos(x) * np.cos(y)], axis=1)
    return ManifoldSequence(Sphere(), points)


def random_spd_curve(rng, samples, terms=3, wobble=0.3):
    """A smooth closed curve of symmetric positive definite 3x3 matrices.

    Exponentials of smoothly varying symmetric matrices, so positivity is
    automatic and eigenvalues stay within a bounded band.
    """
    entries = np.zeros((samples, 3, 3))
    for i in range(3):
        for j in range(i, 3):
            series = random_trig_series(rng, samples, terms, wobble)
            entries[:, i, j] = series
            entries[:, j, i] = series
    eigvals, eigvecs = np.linalg.eigh(entries)
    points = np.einsum("nij,nj,nkj->nik", eigvecs, np.exp(eigvals), eigvecs)
    return ManifoldSequence(SPD(), 0.5 * (points + np.transpose(points, (0, 2, 1))))


def random_euclidean_curve(rng, samples, dim=2, terms=3, scale=1.0):
    values = np.stack(
        [random_trig_series(rng, samples, terms, scale) for _ in range(dim)], axis=1
    )
    return ManifoldSequence(Euclidean(dim), values)


def random_curve(manifold_tag, rng, samples):
    if manifold_tag == "s2":
        return random_sphere_curve(rng, samples)
    if manifold_tag == "spd3":
        return random_spd_curve(rng, samples)
    return random_euclidean_curve(rng, samples)
