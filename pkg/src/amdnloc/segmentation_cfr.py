"""Frequency-domain region segmentation by dual-template matching.

Every CFR magnitude image is assigned to a category by a two-stage
matched filter: stage one grows categories sequentially from founder
images whose corner templates are slid over candidate images; stage two
merges categories whose founders match each other. Similarity is
placement-maximized normalized cross-correlation over nonnegative
pixels, so values live in [0, 1].
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from numpy.lib.stride_tricks import sliding_window_view

__all__ = [
    "UNLABELED",
    "TemplatePair",
    "CfrLabeling",
    "ncc",
    "extract_templates",
    "match_within",
    "match_between",
    "segment_cfr",
]

# Sentinel for "no category yet"; any value larger than every valid label works.
UNLABELED = -1


@dataclass(frozen=True)
class TemplatePair:
    """Corner templates cut from a founder image."""

    t1: np.ndarray  # upper-left block
    t2: np.ndarray  # lower-right block
    size: tuple[int, int]
    founder_id: int


@dataclass
class CfrLabeling:
    """Per-sample category labels plus the founder template of each category."""

    labels: np.ndarray  # int array, one label per sample
    founders: dict[int, TemplatePair]
    class_count: int
    images: list[np.ndarray] = field(default_factory=list)


def _window_energy(source: np.ndarray, shape: tuple[int, int]) -> np.ndarray:
    windows = sliding_window_view(source, shape)
    e = np.einsum("ijkl,ijkl->ij", windows, windows)
    np.maximum(e, 0.0, out=e)
    return e


def ncc(template: np.ndarray, source: np.ndarray) -> float:
    """Best normalized cross-correlation of a template over a source image.

    Maximum over all placements of sum(T*I) / sqrt(sum(T^2) * sum(I^2)),
    the sums running over the template window. Placements whose window
    energy is zero are skipped; an all-zero template scores 0.
    """
    template = np.asarray(template, dtype=float)
    source = np.asarray(source, dtype=float)
    if template.shape[0] > source.shape[0] or template.shape[1] > source.shape[1]:
        raise ValueError(
            f"template {template.shape} larger than source {source.shape}"
        )
    t_energy = float(np.sum(template * template))
    if t_energy == 0.0:
        return 0.0
    num = np.einsum(
        "ijkl,kl->ij", sliding_window_view(source, template.shape), template
    )
    win = _window_energy(source, template.shape)
    denom = np.sqrt(t_energy * win)
    # Zero-energy windows carry no signal; keep them out of the maximum.
    scale = float(np.max(win))
    valid = win > (1e-12 * scale if scale > 0 else 0.0)
    if not np.any(valid):
        return 0.0
    best = float(np.max(num[valid] / denom[valid]))
    return float(np.clip(best, 0.0, 1.0))


def extract_templates(image: np.ndarray, size: tuple[int, int], founder_id: int = -1) -> TemplatePair:
    """Cut the upper-left and lower-right blocks of the given size."""
    a, b = size
    h, w = image.shape
    if a > h or b > w:
        raise ValueError(f"template size {size} exceeds image {image.shape}")
    return TemplatePair(
        t1=np.array(image[:a, :b]),
        t2=np.array(image[h - a :, w - b :]),
        size=(a, b),
        founder_id=founder_id,
    )


def _pair_score(pair: TemplatePair, image: np.ndarray) -> float:
    """min of the two template matches; both corners must agree."""
    return min(ncc(pair.t1, image), ncc(pair.t2, image))


def match_within(
    images: list[np.ndarray], tau_in: float, size: tuple[int, int]
) -> CfrLabeling:
    """Stage one: grow categories sequentially from founder images.

    Each still-unlabeled image founds a tentative new category and its
    corner templates are matched against all later unlabeled images;
    matches at or above ``tau_in`` join the category. A founder that
    recruits nobody is matched back against earlier (already labeled)
    images and adopts the first matching image's category instead of
    keeping a fresh one.
    """
    if not images:
        raise ValueError("no images to segment")
    if not (0.0 < tau_in <= 1.0):
        raise ValueError(f"tau_in must lie in (0, 1], got {tau_in}")
    m = len(images)
    labels = np.full(m, UNLABELED, dtype=int)
    founders: dict[int, TemplatePair] = {}
    class_num = 0
    for i in range(m):
        if labels[i] != UNLABELED:
            continue
        pair = extract_templates(images[i], size, founder_id=i)
        labels[i] = class_num
        recruited = False
        for j in range(i + 1, m):
            if labels[j] != UNLABELED:
                continue
            if _pair_score(pair, images[j]) >= tau_in:
                labels[j] = class_num
                recruited = True
        if not recruited:
            for k in range(i):
                if _pair_score(pair, images[k]) >= tau_in:
                    labels[i] = labels[k]
                    break
        if labels[i] == class_num:
            founders[class_num] = pair
            class_num += 1
    return CfrLabeling(labels=labels, founders=founders, class_count=class_num, images=list(images))


def _reindex(labels: np.ndarray, founders: dict[int, TemplatePair]) -> tuple[np.ndarray, dict[int, TemplatePair]]:
    """Relabel to 0..K-1 in order of first occurrence in sample order."""
    mapping: dict[int, int] = {}
    out = np.empty_like(labels)
    for idx, lab in enumerate(labels):
        if lab not in mapping:
            mapping[lab] = len(mapping)
        out[idx] = mapping[lab]
    new_founders = {mapping[old]: pair for old, pair in founders.items() if old in mapping}
    return out, new_founders


def match_between(labeling: CfrLabeling, tau_out: float) -> CfrLabeling:
    """Stage two: merge categories whose founders match each other.

    The founder templates of category i are matched against the founder
    image of category j; a score at or above ``tau_out`` links the two.
    Merging is the symmetric-transitive closure of those links (smaller
    id survives), which is already the fixpoint of repeated scanning.
    """
    if not (0.0 < tau_out <= 1.0):
        raise ValueError(f"tau_out must lie in (0, 1], got {tau_out}")
    k = labeling.class_count
    parent = list(range(k))

    def find(a: int) -> int:
        while parent[a] != a:
            parent[a] = parent[parent[a]]
            a = parent[a]
        return a

    def union(a: int, b: int):
        ra, rb = find(a), find(b)
        if ra != rb:
            parent[max(ra, rb)] = min(ra, rb)

    founder_imgs = {c: labeling.images[p.founder_id] for c, p in labeling.founders.items()}
    cats = sorted(labeling.founders)
    for i in cats:
        for j in cats:
            if i == j:
                continue
            if _pair_score(labeling.founders[i], founder_imgs[j]) >= tau_out:
                union(i, j)

    merged = np.array([find(int(lab)) for lab in labeling.labels])
    root_founders = {find(c): labeling.founders[find(c)] for c in cats}
    new_labels, new_founders = _reindex(merged, root_founders)
    return CfrLabeling(
        labels=new_labels,
        founders=new_founders,
        class_count=len(new_founders),
        images=labeling.images,
    )


def segment_cfr(
    images: list[np.ndarray],
    tau_in: float = 0.99,
    tau_out: float = 0.99,
    size: tuple[int, int] = (16, 16),
) -> CfrLabeling:
    """Full two-stage segmentation of CFR magnitude images."""
    return match_between(match_within(images, tau_in, size), tau_out)
