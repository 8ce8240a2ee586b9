"""Fingerprint features and the per-region coordinate regressor array.

Features are deterministic: block means of the CFR magnitude/phase and
angle-delay images, row/column profiles, and the strongest angle-delay
peaks. Each fused region gets its own affine regressor over the fused
feature vector; test samples are routed to a region by re-running the
training-time matchers (CFR founder templates, clustering centroids)
with a nearest-centroid fallback.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.spatial.distance import cdist

from .channel import render_image
from .fusion import RegionLabels
from .segmentation_adcam import Standardizer
from .segmentation_cfr import TemplatePair, _pair_score

__all__ = [
    "FeatureConfig",
    "LocalizationModel",
    "extract_features_cfr",
    "extract_features_adcam",
    "fuse_features",
    "fit_region_weights",
    "apply_weights",
    "train",
    "assign_region",
    "predict",
]

_BLOCK_GRID = (8, 8)
_TOP_PEAKS = 5


@dataclass(frozen=True)
class FeatureConfig:
    nt: int
    nc: int

    @property
    def cfr_len(self) -> int:
        return 2 * _BLOCK_GRID[0] * _BLOCK_GRID[1] + self.nt + self.nc

    @property
    def adcam_len(self) -> int:
        return _BLOCK_GRID[0] * _BLOCK_GRID[1] + self.nt + self.nc + 3 * _TOP_PEAKS

    @property
    def fused_len(self) -> int:
        return self.cfr_len + self.adcam_len


def _block_means(img: np.ndarray, grid: tuple[int, int] = _BLOCK_GRID) -> np.ndarray:
    """Mean over an evenly split grid of blocks, flattened row-major."""
    h, w = img.shape
    gh, gw = grid
    if h < gh or w < gw:
        raise ValueError(f"image {img.shape} smaller than block grid {grid}")
    rows = np.array_split(img, gh, axis=0)
    out = np.empty((gh, gw))
    for i, r in enumerate(rows):
        for j, c in enumerate(np.array_split(r, gw, axis=1)):
            out[i, j] = c.mean()
    return out.ravel()


def extract_features_cfr(mag: np.ndarray, phase: np.ndarray, config: FeatureConfig) -> np.ndarray:
    """Block means of magnitude and phase plus magnitude row/column profiles."""
    if mag.shape != (config.nt, config.nc) or phase.shape != (config.nt, config.nc):
        raise ValueError(
            f"image dims {mag.shape}/{phase.shape} do not match config ({config.nt}, {config.nc})"
        )
    return np.concatenate(
        [_block_means(mag), _block_means(phase), mag.mean(axis=1), mag.mean(axis=0)]
    )


def extract_features_adcam(img: np.ndarray, config: FeatureConfig) -> np.ndarray:
    """Block means, row/column profiles, and the top peaks of the angle-delay image."""
    if img.shape != (config.nt, config.nc):
        raise ValueError(
            f"image dims {img.shape} do not match config ({config.nt}, {config.nc})"
        )
    flat = img.ravel()
    order = np.argsort(-flat, kind="stable")[:_TOP_PEAKS]
    peaks = np.empty(3 * _TOP_PEAKS)
    for i, idx in enumerate(order):
        if flat[idx] == 0.0:
            peaks[3 * i : 3 * i + 3] = 0.0  # zero peaks carry no location
            continue
        r, c = divmod(int(idx), img.shape[1])
        peaks[3 * i : 3 * i + 3] = (r, c, flat[idx])
    return np.concatenate(
        [_block_means(img), img.mean(axis=1), img.mean(axis=0), peaks]
    )


def fuse_features(f_cfr: np.ndarray, f_adcam: np.ndarray, standardizer: Standardizer | None = None) -> np.ndarray:
    """Concatenate the two feature vectors; optionally z-score them."""
    fused = np.concatenate([f_cfr, f_adcam])
    if standardizer is not None:
        fused = standardizer.apply(fused)
    return fused


def sample_features(sample, config: FeatureConfig) -> np.ndarray:
    """Raw (un-normalized) fused feature vector of one dataset sample."""
    mag = render_image(sample.cfr, "cfr_magnitude")
    phase = render_image(sample.cfr, "cfr_phase")
    ad = render_image(sample.adcam, "adcam")
    return fuse_features(
        extract_features_cfr(mag, phase, config), extract_features_adcam(ad, config)
    )


def fit_region_weights(x: np.ndarray, y: np.ndarray, ridge_lambda: float = 1e-3) -> np.ndarray:
    """Closed-form ridge solution for one region; returns 2 x (d+1) weights."""
    xb = np.hstack([x, np.ones((x.shape[0], 1))])
    d = xb.shape[1]
    # leave the bias column unpenalized: targets are absolute coordinates
    penalty = ridge_lambda * np.eye(d)
    penalty[-1, -1] = 0.0
    gram = xb.T @ xb + penalty
    if ridge_lambda == 0.0 and np.linalg.matrix_rank(gram) < d:
        raise np.linalg.LinAlgError("singular system; use ridge_lambda > 0")
    w = np.linalg.solve(gram, xb.T @ y)
    return w.T  # (2, d+1)


def _sgd_fit(x, y, seed, ridge_lambda, batch=16, epochs=200, lr=0.05, decay=0.99):
    """Seeded mini-batch gradient descent on the same ridge objective."""
    rng = np.random.default_rng(seed)
    xb = np.hstack([x, np.ones((x.shape[0], 1))])
    n, d = xb.shape
    w = np.zeros((2, d))
    for epoch in range(epochs):
        order = rng.permutation(n)
        step = lr * decay**epoch
        for start in range(0, n, batch):
            idx = order[start : start + batch]
            xi, yi = xb[idx], y[idx]
            err = xi @ w.T - yi  # (b, 2)
            reg = 2.0 * ridge_lambda * w / n
            reg[:, -1] = 0.0  # bias stays unpenalized, matching the closed form
            grad = 2.0 * err.T @ xi / xi.shape[0] + reg
            w -= step * grad
    return w


@dataclass
class LocalizationModel:
    """Trained per-region regressors plus everything needed to route a
    new sample to a region."""

    config: FeatureConfig
    weights: dict[int, np.ndarray]  # fused region id -> (2, d+1)
    founders: dict[int, TemplatePair]  # cfr category -> founder templates
    adcam_centroids: np.ndarray
    adcam_standardizer: Standardizer
    path_select: str
    pair_to_fused: dict[tuple[int, int], int]
    feature_standardizer: Standardizer
    region_feature_centroids: dict[int, np.ndarray]
    ridge_lambda: float = 1e-3
    method: str = "ridge_closed_form"


def train(
    samples,
    regions: RegionLabels,
    founders: dict[int, TemplatePair],
    adcam_centroids: np.ndarray,
    adcam_standardizer: Standardizer,
    path_select: str = "strongest",
    method: str = "ridge_closed_form",
    ridge_lambda: float = 1e-3,
    seed: int = 0,
) -> LocalizationModel:
    """Fit one affine regressor per retained fused region.

    Feature normalization constants come from the retained training
    samples; the founders/centroids of the segmentation stages are
    stored so prediction can re-run region assignment.
    """
    if method not in ("ridge_closed_form", "sgd"):
        raise ValueError(f"unknown method {method!r}")
    config = FeatureConfig(nt=samples[0].cfr.shape[0], nc=samples[0].cfr.shape[1])
    raw = np.array([sample_features(s, config) for s in samples])
    feat_std = Standardizer.fit(raw[regions.retained])
    feats = feat_std.apply(raw)
    positions = np.array([s.pos for s in samples])

    weights: dict[int, np.ndarray] = {}
    centroids: dict[int, np.ndarray] = {}
    for region in range(regions.fused_count):
        mask = regions.retained & (regions.fused_labels == region)
        if not np.any(mask):
            raise ValueError(f"region {region} has no training samples")
        x, y = feats[mask], positions[mask]
        if method == "ridge_closed_form":
            weights[region] = fit_region_weights(x, y, ridge_lambda)
        else:
            weights[region] = _sgd_fit(x, y, seed + region, ridge_lambda)
        centroids[region] = x.mean(axis=0)

    return LocalizationModel(
        config=config,
        weights=weights,
        founders=founders,
        adcam_centroids=np.asarray(adcam_centroids, dtype=float),
        adcam_standardizer=adcam_standardizer,
        path_select=path_select,
        pair_to_fused=dict(regions.pair_to_fused),
        feature_standardizer=feat_std,
        region_feature_centroids=centroids,
        ridge_lambda=ridge_lambda,
        method=method,
    )


def _cluster_feature(sample, path_select: str) -> np.ndarray:
    if path_select == "strongest":
        p = min(sample.paths, key=lambda p: p.pathloss_db)
    else:
        p = min(sample.paths, key=lambda p: p.delay_samples)
    return np.array([p.aod, p.aoa, abs(p.gain), p.pathloss_db])


def assign_region(model: LocalizationModel, sample) -> int:
    """Route a sample to a trained fused region.

    CFR label: best-matching founder templates. Power/angle/delay label:
    nearest clustering centroid. If the resulting pair was never seen
    (or was cleansed away), fall back to the region whose training
    feature centroid is nearest.
    """
    mag = render_image(sample.cfr, "cfr_magnitude")
    cfr_label = max(
        model.founders, key=lambda c: _pair_score(model.founders[c], mag)
    )
    kf = model.adcam_standardizer.apply(_cluster_feature(sample, model.path_select))
    adcam_label = int(cdist([kf], model.adcam_centroids)[0].argmin())
    fused = model.pair_to_fused.get((int(cfr_label), adcam_label))
    if fused is not None and fused in model.weights:
        return fused
    feat = model.feature_standardizer.apply(sample_features(sample, model.config))
    return min(
        model.region_feature_centroids,
        key=lambda r: float(np.sum((model.region_feature_centroids[r] - feat) ** 2)),
    )


def apply_weights(weights: np.ndarray, features: np.ndarray) -> np.ndarray:
    """Affine map: W @ [features; 1]."""
    return weights @ np.append(features, 1.0)


def predict(model: LocalizationModel, sample) -> np.ndarray:
    """Estimated (x, y) in meters."""
    region = assign_region(model, sample)
    feat = model.feature_standardizer.apply(sample_features(sample, model.config))
    return apply_weights(model.weights[region], feat)
