"""Centroid-anchored minority oversampling."""
from __future__ import annotations

from typing import Sequence

import numpy as np


def smote_center_oversample(X, labels: Sequence, seed: int = 0):
    """Upsample every class to the size of the largest one.

    Each synthetic point of class ``c`` is ``mu_c + r * (z * sigma_c / 3)``
    with ``mu_c`` the class centroid, ``sigma_c`` the per-feature class
    standard deviation, ``z`` uniform on ``[-1, 1]^p`` and ``r`` uniform on
    ``[0, 1]``, then clipped to ``[0, 1]``. Original rows come first and are
    returned unchanged; synthetic rows follow in sorted class order.

    Returns
    -------
    X_out : ndarray
    labels_out : ndarray of object
    """
    X = np.asarray(getattr(X, "values", X), dtype=float)
    labels = np.asarray(list(labels), dtype=object)
    if labels.size != X.shape[0]:
        raise ValueError("one label per row is required")
    classes, counts = np.unique(labels.astype(str), return_counts=True)
    small = classes[counts < 2]
    if small.size:
        raise ValueError(f"class {small[0]!r} has fewer than 2 samples")
    rng = np.random.default_rng(seed)
    target = counts.max()
    new_X, new_y = [X], [labels]
    str_labels = labels.astype(str)
    for c, n_c in zip(classes, counts):
        m = target - n_c
        if m == 0:
            continue
        rows = X[str_labels == c]
        mu = rows.mean(axis=0)
        sigma = rows.std(axis=0)
        z = rng.uniform(-1.0, 1.0, size=(m, X.shape[1]))
        r = rng.uniform(0.0, 1.0, size=(m, 1))
        synth = np.clip(mu + r * (z * sigma / 3.0), 0.0, 1.0)
        new_X.append(synth)
        # reuse the original label object so types are preserved
        new_y.append(np.array([labels[str_labels == c][0]] * m, dtype=object))
    return np.concatenate(new_X, axis=0), np.concatenate(new_y)
