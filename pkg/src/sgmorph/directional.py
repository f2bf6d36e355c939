"""Directional statistics of the unoriented segment directions of a shape graph.

Each polyline segment contributes its unit direction, identified with its
opposite (a point of RP^{d-1}), weighted by its length. Features derived
here are invariant to rotations, branch orientation and segment subdivision.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

from .core import ShapeGraph
from .errors import UndefinedFeatureError

#: Lower clamp on the mean resultant length in 2-D.
RESULTANT_EPS = 1e-12
SIGMA_MAX = float(np.sqrt(-2.0 * np.log(RESULTANT_EPS)))

BINS_2D = 18
POLAR_BINS = 8
AZIMUTH_BINS = 16

_NONUNIQUE_TOL = 1e-9


@dataclass(frozen=True)
class DirectionalDistribution:
    dim: int
    directions: np.ndarray  # (K, dim), canonical unit vectors
    weights: np.ndarray  # (K,), segment lengths

    @property
    def total_weight(self) -> float:
        return float(self.weights.sum())

    @property
    def angles(self) -> np.ndarray:
        """Unoriented angles in [0, pi) (2-D only)."""
        a = np.arctan2(self.directions[:, 1], self.directions[:, 0])
        return np.mod(a, np.pi)


@dataclass(frozen=True)
class DirectionalHistogram:
    dim: int
    masses: np.ndarray

    @property
    def num_bins(self) -> int:
        return self.masses.size

    def edges(self):
        """Bin boundaries: angles (2-D) or (cos-polar, azimuth) pairs (3-D)."""
        if self.dim == 2:
            return np.linspace(0.0, np.pi, BINS_2D + 1)
        return (np.linspace(1.0, 0.0, POLAR_BINS + 1),
                np.linspace(0.0, 2 * np.pi, AZIMUTH_BINS + 1))


class ProjectiveMoments(NamedTuple):
    mean: np.ndarray
    sigma: float
    unique: bool


def canonicalize(u: np.ndarray) -> np.ndarray:
    """Flip rows so the last nonzero coordinate is positive."""
    u = np.array(u, dtype=float, copy=True)
    sign = np.zeros(len(u))
    for k in range(u.shape[1] - 1, -1, -1):
        undecided = sign == 0
        sign[undecided] = np.sign(u[undecided, k])
    sign[sign == 0] = 1.0
    return u * sign[:, None]


def directional_distribution(graph: ShapeGraph) -> DirectionalDistribution:
    """Length-weighted unoriented directions of every polyline segment."""
    if graph.num_edges == 0:
        raise UndefinedFeatureError("directional_distribution", "graph has no edges")
    seg = np.concatenate([np.diff(b, axis=0) for b in graph.branches], axis=0)
    w = np.sqrt(np.sum(seg * seg, axis=1))
    keep = w > 0
    if not keep.any():
        raise UndefinedFeatureError("directional_distribution", "no positive-length segment")
    u = canonicalize(seg[keep] / w[keep, None])
    return DirectionalDistribution(graph.dim, u, w[keep])


def _require(dist, dim=None, name="directional"):
    if dim is not None and dist.dim != dim:
        raise ValueError(f"{name} expects a {dim}-D distribution, got {dist.dim}-D")
    if not dist.total_weight > 0:
        raise UndefinedFeatureError(name, "zero total weight")


def circular_mean_std_2d(dist: DirectionalDistribution):
    """Mean unoriented angle in [0, pi) and angular deviation via angle doubling.

    ``sigma = sqrt(-2 ln |u_bar|)`` where ``u_bar`` is the weighted mean of
    ``(cos 2t, sin 2t)``. ``|u_bar|`` is clamped to ``[1e-12, 1]``; when it is
    below the clamp the mean is reported as 0.
    """
    _require(dist, 2, "circular_mean_std_2d")
    t = 2.0 * dist.angles
    w = dist.weights / dist.total_weight
    c, s = np.dot(w, np.cos(t)), np.dot(w, np.sin(t))
    r = float(np.hypot(c, s))
    r = min(max(r, RESULTANT_EPS), 1.0)
    sigma = float(np.sqrt(-2.0 * np.log(r)))
    if r <= RESULTANT_EPS:
        return 0.0, sigma
    mean = float(np.mod(np.arctan2(s, c) / 2.0, np.pi))
    return mean, sigma


def second_moment(dist: DirectionalDistribution) -> np.ndarray:
    """``sum_k w_k u_k u_k^T`` with weights normalised to unit trace."""
    w = dist.weights / dist.total_weight
    return (dist.directions * w[:, None]).T @ dist.directions


def projective_mean_std_3d(dist: DirectionalDistribution) -> ProjectiveMoments:
    """Mean axis and deviation on RP^2 from the top eigenpair of the moment matrix."""
    _require(dist, 3, "projective_mean_std_3d")
    M = second_moment(dist)
    vals, vecs = np.linalg.eigh(M)
    top = vals[-1]
    sigma = float(np.sqrt(max(np.trace(M) - top, 0.0)))
    mean = canonicalize(vecs[:, -1][None, :])[0]
    unique = bool(top - vals[-2] > _NONUNIQUE_TOL)
    return ProjectiveMoments(mean, sigma, unique)


def _centered_angles(dist, mean, target):
    return np.mod(dist.angles - mean + target, np.pi)


def quantile_vector(dist: DirectionalDistribution) -> np.ndarray:
    """Mass fractions in four concentric bands around the mean direction.

    In 2-D the bands are angular distances from the mean in
    ``[0, pi/8], (pi/8, pi/4], (pi/4, 3pi/8], (3pi/8, pi/2]``. In 3-D they are
    equal-area polar bands with ``|cos|`` to the mean axis in
    ``(3/4, 1], (1/2, 3/4], (1/4, 1/2], [0, 1/4]``.
    """
    _require(dist, name="quantile_vector")
    w = dist.weights / dist.total_weight
    if dist.dim == 2:
        mean, _ = circular_mean_std_2d(dist)
        delta = np.abs(_centered_angles(dist, mean, np.pi / 2) - np.pi / 2)
        band = np.searchsorted(np.array([1, 2, 3]) * np.pi / 8, delta, side="left")
    else:
        m = projective_mean_std_3d(dist).mean
        c = np.abs(dist.directions @ m)
        band = 3 - np.searchsorted(np.array([0.25, 0.5, 0.75]), c, side="left")
    band = np.clip(band, 0, 3)
    q = np.bincount(band, weights=w, minlength=4)
    return q / q.sum()


def _frame_3d(dist):
    """Rows: rotation taking the moment eigenframe to (x, y, z) with the mean on z."""
    vals, vecs = np.linalg.eigh(second_moment(dist))
    z = canonicalize(vecs[:, 2][None, :])[0]
    x = canonicalize(vecs[:, 1][None, :])[0]
    y = np.cross(z, x)
    # offset the azimuth origin by half a sector so sign flips of the frame
    # map sectors onto sectors
    a = np.pi / AZIMUTH_BINS
    xr = np.cos(a) * x - np.sin(a) * y
    yr = np.sin(a) * x + np.cos(a) * y
    return np.stack([xr, yr, z])


def center_distribution(dist: DirectionalDistribution) -> DirectionalDistribution:
    """Rotate the distribution into a frame defined by the distribution itself.

    2-D: the mean angle goes to the middle of the first histogram bin.
    3-D: the mean axis goes to the pole and the second principal axis to the
    middle of the first azimuthal sector. Histograms of the result depend on
    the graph only up to rotation.
    """
    _require(dist, name="center_distribution")
    if dist.dim == 2:
        mean, _ = circular_mean_std_2d(dist)
        t = _centered_angles(dist, mean, np.pi / (2 * BINS_2D))
        u = np.stack([np.cos(t), np.sin(t)], axis=1)
    else:
        u = dist.directions @ _frame_3d(dist).T
    return DirectionalDistribution(dist.dim, canonicalize(u), dist.weights)


def histogram_bins(dist: DirectionalDistribution) -> np.ndarray:
    """Bin index of every direction of ``dist``."""
    if dist.dim == 2:
        k = np.floor(dist.angles / (np.pi / BINS_2D)).astype(np.int64)
        return np.clip(k, 0, BINS_2D - 1)
    u = dist.directions
    z = np.clip(u[:, 2], 0.0, 1.0)
    polar = np.clip(np.floor((1.0 - z) * POLAR_BINS).astype(np.int64), 0, POLAR_BINS - 1)
    rho2 = u[:, 0] ** 2 + u[:, 1] ** 2
    phi = np.mod(np.arctan2(u[:, 1], u[:, 0]), 2 * np.pi)
    phi[rho2 < 1e-24] = 0.0
    sector = np.clip(np.floor(phi / (2 * np.pi / AZIMUTH_BINS)).astype(np.int64),
                     0, AZIMUTH_BINS - 1)
    return polar * AZIMUTH_BINS + sector


def directional_histogram(dist: DirectionalDistribution) -> DirectionalHistogram:
    """Normalised histogram on 18 angular bins (2-D) or 8 x 16 equal-area bins (3-D)."""
    _require(dist, name="directional_histogram")
    nbins = BINS_2D if dist.dim == 2 else POLAR_BINS * AZIMUTH_BINS
    p = np.bincount(histogram_bins(dist), weights=dist.weights, minlength=nbins)
    return DirectionalHistogram(dist.dim, p / p.sum())


def shannon_entropy(p) -> float:
    p = np.asarray(p, dtype=float)
    p = p[p > 0]
    return float(-np.sum(p * np.log(p)))


def directional_entropy(hist: DirectionalHistogram) -> float:
    return shannon_entropy(hist.masses)


def orientation_order(hist: DirectionalHistogram) -> float:
    """``1 - (H / ln N)^2``: 1 for a single direction, 0 for a uniform histogram."""
    h = directional_entropy(hist)
    phi = 1.0 - (h / np.log(hist.num_bins)) ** 2
    return float(min(max(phi, 0.0), 1.0))


def directional_features(graph: ShapeGraph) -> dict:
    """The seven directional entries of the feature vector, plus diagnostics."""
    dist = directional_distribution(graph)
    unique = True
    if dist.dim == 2:
        _, sigma = circular_mean_std_2d(dist)
    else:
        mom = projective_mean_std_3d(dist)
        sigma, unique = mom.sigma, mom.unique
    q = quantile_vector(dist)
    hist = directional_histogram(center_distribution(dist))
    h = directional_entropy(hist)
    return {
        "directional_std": sigma,
        "q1": float(q[0]),
        "q2": float(q[1]),
        "q3": float(q[2]),
        "q4": float(q[3]),
        "directional_entropy": h,
        "orientation_order": orientation_order(hist),
        "_mean_unique": unique,
        "_histogram": hist,
    }
