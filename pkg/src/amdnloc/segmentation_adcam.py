"""Power/angle/delay-domain segmentation via centroid clustering.

Per-sample path descriptors (departure angle, arrival angle, gain
magnitude, pathloss) are standardized and clustered with Lloyd's
algorithm; the cluster count is selected automatically by combining the
silhouette and Calinski-Harabasz indices.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.spatial.distance import cdist

__all__ = [
    "ClusterModel",
    "Standardizer",
    "build_features",
    "kmeans",
    "silhouette",
    "calinski_harabasz",
    "select_k",
]


@dataclass
class Standardizer:
    """Per-dimension z-score constants; zero-variance dims pass through."""

    mean: np.ndarray
    scale: np.ndarray  # std where positive, 1 where degenerate

    @classmethod
    def fit(cls, x: np.ndarray) -> "Standardizer":
        mean = x.mean(axis=0)
        std = x.std(axis=0)
        # dims whose spread is pure float noise count as constant too,
        # otherwise unseen data divided by a ~1e-16 std explodes
        floor = 1e-12 * np.maximum(np.abs(mean), 1.0)
        scale = np.where(std > floor, std, 1.0)
        return cls(mean=mean, scale=scale)

    def apply(self, x: np.ndarray) -> np.ndarray:
        return (np.asarray(x, dtype=float) - self.mean) / self.scale


@dataclass
class ClusterModel:
    k: int
    centroids: np.ndarray
    assignment: np.ndarray
    wcss: float


def build_features(samples, path_select: str = "strongest") -> tuple[np.ndarray, Standardizer]:
    """One standardized [aod, aoa, |gain|, pathloss_db] row per sample.

    ``path_select`` picks which path represents the sample: "strongest"
    (lowest pathloss) or "first_arrival" (smallest delay).
    """
    rows = []
    for s in samples:
        if not s.paths:
            raise ValueError(f"sample {s.id} has no paths")
        if path_select == "strongest":
            p = min(s.paths, key=lambda p: p.pathloss_db)
        elif path_select == "first_arrival":
            p = min(s.paths, key=lambda p: p.delay_samples)
        else:
            raise ValueError(f"unknown path_select {path_select!r}")
        rows.append([p.aod, p.aoa, abs(p.gain), p.pathloss_db])
    raw = np.asarray(rows, dtype=float)
    std = Standardizer.fit(raw)
    return std.apply(raw), std


def _init_centroids(points: np.ndarray, k: int, rng: np.random.Generator) -> np.ndarray:
    """Farthest-weighted (k-means++ style) seeding."""
    n = points.shape[0]
    centroids = [points[rng.integers(n)]]
    for _ in range(1, k):
        d2 = cdist(points, np.asarray(centroids)).min(axis=1) ** 2
        total = d2.sum()
        if total == 0:
            # all remaining points coincide with a centroid; pick any new point
            centroids.append(points[rng.integers(n)])
            continue
        centroids.append(points[rng.choice(n, p=d2 / total)])
    return np.asarray(centroids)


def kmeans(points: np.ndarray, k: int, seed: int = 0, max_iter: int = 100, tol: float = 1e-6) -> ClusterModel:
    """Seeded Lloyd iterations; empty clusters are reseeded from the farthest point."""
    points = np.asarray(points, dtype=float)
    n = points.shape[0]
    if k < 1:
        raise ValueError("k must be >= 1")
    n_distinct = np.unique(points, axis=0).shape[0]
    if k > n_distinct:
        raise ValueError(f"k={k} exceeds the {n_distinct} distinct points")
    rng = np.random.default_rng(seed)
    centroids = _init_centroids(points, k, rng)
    prev_wcss = np.inf
    assignment = np.zeros(n, dtype=int)
    for _ in range(max_iter):
        d = cdist(points, centroids)
        assignment = d.argmin(axis=1)
        for c in range(k):
            if not np.any(assignment == c):
                far = d.min(axis=1).argmax()
                centroids[c] = points[far]
                assignment[far] = c
        new_centroids = np.array(
            [points[assignment == c].mean(axis=0) for c in range(k)]
        )
        wcss = float(np.sum((points - new_centroids[assignment]) ** 2))
        assert wcss <= prev_wcss + 1e-9, "within-cluster scatter must not increase"
        move = float(np.abs(new_centroids - centroids).max())
        centroids = new_centroids
        prev_wcss = wcss
        if move < tol:
            break
    d = cdist(points, centroids)
    assignment = d.argmin(axis=1)
    wcss = float(np.sum((points - centroids[assignment]) ** 2))
    return ClusterModel(k=k, centroids=centroids, assignment=assignment, wcss=wcss)


def silhouette(points: np.ndarray, assignment: np.ndarray) -> float:
    """Mean silhouette score; singleton clusters contribute 0."""
    points = np.asarray(points, dtype=float)
    assignment = np.asarray(assignment)
    clusters = np.unique(assignment)
    if clusters.size < 2:
        raise ValueError("silhouette needs at least 2 clusters")
    d = cdist(points, points)
    n = points.shape[0]
    scores = np.zeros(n)
    for i in range(n):
        own = assignment == assignment[i]
        n_own = own.sum()
        if n_own == 1:
            scores[i] = 0.0
            continue
        a = d[i, own].sum() / (n_own - 1)
        b = min(d[i, assignment == c].mean() for c in clusters if c != assignment[i])
        scores[i] = (b - a) / max(a, b)
    return float(scores.mean())


def calinski_harabasz(points: np.ndarray, assignment: np.ndarray) -> float:
    """Between/within scatter ratio scaled by degrees of freedom.

    Returns +inf when the within-cluster scatter is exactly zero.
    """
    points = np.asarray(points, dtype=float)
    assignment = np.asarray(assignment)
    q = points.shape[0]
    clusters = np.unique(assignment)
    k = clusters.size
    if not (2 <= k < q):
        raise ValueError(f"need 2 <= k < n, got k={k}, n={q}")
    global_c = points.mean(axis=0)
    tr_b = 0.0
    tr_w = 0.0
    for c in clusters:
        members = points[assignment == c]
        cc = members.mean(axis=0)
        tr_b += members.shape[0] * float(np.sum((cc - global_c) ** 2))
        tr_w += float(np.sum((members - cc) ** 2))
    if tr_w == 0.0:
        return np.inf
    return (tr_b * (q - k)) / (tr_w * (k - 1))


def select_k(points: np.ndarray, k_range=range(2, 9), seed: int = 0) -> tuple[int, ClusterModel]:
    """Pick the cluster count maximizing the mean of the min-max
    normalized silhouette and Calinski-Harabasz scores; ties break
    toward smaller k."""
    ks = [int(k) for k in k_range]
    if not ks:
        raise ValueError("empty k range")
    models = {k: kmeans(points, k, seed=seed) for k in ks}
    if len(ks) == 1:
        k = ks[0]
        return k, models[k]
    sc = np.array([silhouette(points, models[k].assignment) for k in ks])
    ch = np.array([calinski_harabasz(points, models[k].assignment) for k in ks])

    def norm(v: np.ndarray) -> np.ndarray:
        finite = np.isfinite(v)
        out = np.ones_like(v, dtype=float)  # +inf entries normalize to 1
        if finite.sum() == 0:
            return out
        lo, hi = v[finite].min(), v[finite].max()
        out[finite] = 0.5 if hi == lo else (v[finite] - lo) / (hi - lo)
        return out

    combined = (norm(sc) + norm(ch)) / 2.0
    best = ks[int(np.argmax(combined))]  # argmax takes the first (smallest) max
    return best, models[best]
