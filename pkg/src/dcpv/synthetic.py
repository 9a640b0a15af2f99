"""Synthetic feature corpora for desk-scale experiments."""

import numpy as np

from .cancelable import FeatureVector


def make_corpus(n_classes=50, n_samples=10, dim=384, sigma=0.15, seed=0, noise="coordinate"):
    """Class centers uniform on the unit sphere plus Gaussian within-class noise.

    ``noise="coordinate"`` adds i.i.d. N(0, sigma^2) to every coordinate;
    ``noise="vector"`` scales it by 1/sqrt(dim) so the expected noise norm
    is ``sigma``.
    """
    rng = np.random.default_rng(seed)
    centers = rng.standard_normal((n_classes, dim))
    centers /= np.linalg.norm(centers, axis=1, keepdims=True)
    scale = sigma if noise == "coordinate" else sigma / np.sqrt(dim)
    if noise not in ("coordinate", "vector"):
        raise ValueError(f"unknown noise mode {noise!r}")
    out = []
    for c in range(n_classes):
        samples = centers[c] + scale * rng.standard_normal((n_samples, dim))
        out.extend(
            FeatureVector(v, subject_id=f"s{c:03d}", sample_id=str(s))
            for s, v in enumerate(samples)
        )
    return out
