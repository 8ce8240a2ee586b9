"""Metrics, report generation and end-to-end pipeline orchestration."""
from __future__ import annotations

import dataclasses
import json
from pathlib import Path

import numpy as np

from . import io as dio
from .channel import render_image
from .fusion import RegionLabels, cleanse, fuse_labels
from .localizer import LocalizationModel, assign_region, predict, train
from .scenegen import SceneConfig, build_dataset, nlos_filter, scene_from_json, scene_to_json
from .segmentation_adcam import Standardizer, build_features, kmeans, select_k
from .segmentation_cfr import TemplatePair, extract_templates, segment_cfr

__all__ = [
    "mean_error",
    "cdf_curve",
    "export_region_map",
    "PipelineError",
    "run_pipeline",
    "default_config",
]

DEFAULT_CDF_THRESHOLDS = [0.5, 1.0, 2.0, 3.0, 5.0, 10.0, 20.0, 50.0, 100.0, 250.0, 500.0]


class PipelineError(RuntimeError):
    """Pipeline failure with the stage name attached."""

    def __init__(self, stage: str, message: str):
        super().__init__(f"[{stage}] {message}")
        self.stage = stage


def mean_error(preds, truths) -> tuple[float, float]:
    """Mean Euclidean error and RMSE (both meters)."""
    preds = np.asarray(preds, dtype=float)
    truths = np.asarray(truths, dtype=float)
    if preds.shape != truths.shape or preds.size == 0:
        raise ValueError("predictions and truths must be equal-length and nonempty")
    d = np.linalg.norm(preds - truths, axis=1)
    return float(d.mean()), float(np.sqrt(np.mean(d**2)))


def cdf_curve(errors, thresholds=DEFAULT_CDF_THRESHOLDS) -> list[tuple[float, float]]:
    """Fraction of errors at or below each threshold."""
    errors = np.asarray(errors, dtype=float)
    if errors.size == 0:
        raise ValueError("no errors to summarize")
    return [(float(t), float(np.mean(errors <= t))) for t in thresholds]


def _label_color(label: int) -> tuple[int, int, int]:
    """Deterministic palette; label -1 (removed) is black."""
    if label < 0:
        return (0, 0, 0)
    rng = np.random.default_rng(label + 12345)
    c = rng.integers(40, 256, size=3)
    return (int(c[0]), int(c[1]), int(c[2]))


def export_region_map(samples, labels: RegionLabels, csv_path, ppm_path, cell_px: int = 4):
    """Region map as CSV plus a binary PPM raster (one color per label)."""
    dio.write_region_map(csv_path, [s.id for s in samples], labels)
    xs = np.array([s.pos[0] for s in samples])
    ys = np.array([s.pos[1] for s in samples])
    w = int(np.ceil(xs.max())) + 1 if xs.size else 1
    h = int(np.ceil(ys.max())) + 1 if ys.size else 1
    gw = max(1, w // cell_px)
    gh = max(1, h // cell_px)
    img = np.zeros((gh, gw, 3), dtype=np.uint8)
    for i, s in enumerate(samples):
        gx = min(int(s.pos[0] / w * gw), gw - 1)
        gy = min(int(s.pos[1] / h * gh), gh - 1)
        lab = int(labels.fused_labels[i]) if labels.retained[i] else -1
        img[gh - 1 - gy, gx] = _label_color(lab)
    with open(ppm_path, "wb") as fh:
        fh.write(f"P6\n{gw} {gh}\n255\n".encode())
        fh.write(img.tobytes())


def default_config() -> dict:
    return {
        "scene": scene_to_json(SceneConfig()),
        "nlos_mode": "all",
        "tau_in": 0.99,
        "tau_out": 0.99,
        "template_size": [16, 16],
        "min_count": 2,
        "k_max": 8,
        "path_select": "strongest",
        "train_fraction": 0.8,
        "method": "ridge_closed_form",
        "ridge_lambda": 1e-3,
        "single_region": False,
        "seed": 0,
    }


def _split(n: int, train_fraction: float, seed: int) -> tuple[np.ndarray, np.ndarray]:
    rng = np.random.default_rng(seed)
    order = rng.permutation(n)
    n_train = max(1, int(round(n * train_fraction)))
    n_train = min(n_train, n - 1) if n > 1 else 1
    return np.sort(order[:n_train]), np.sort(order[n_train:])


def _segment_train_set(train_samples, cfg) -> tuple[RegionLabels, dict[int, TemplatePair], np.ndarray, Standardizer]:
    """Run both segmentations on the training set and fuse them."""
    images = [render_image(s.cfr, "cfr_magnitude") for s in train_samples]
    size = tuple(cfg["template_size"])
    if cfg.get("single_region"):
        cfr_lab = np.zeros(len(train_samples), dtype=int)
        founders = {0: extract_templates(images[0], size, founder_id=train_samples[0].id)}
        feats, std = build_features(train_samples, cfg["path_select"])
        centroids = feats.mean(axis=0, keepdims=True)
        adcam_lab = np.zeros(len(train_samples), dtype=int)
    else:
        labeling = segment_cfr(images, cfg["tau_in"], cfg["tau_out"], size)
        cfr_lab = labeling.labels
        # re-cut templates so founder ids refer to dataset sample ids
        founders = {
            c: extract_templates(images[p.founder_id], size, founder_id=train_samples[p.founder_id].id)
            for c, p in labeling.founders.items()
        }
        feats, std = build_features(train_samples, cfg["path_select"])
        k_max = min(cfg["k_max"], np.unique(feats, axis=0).shape[0], len(train_samples) - 1)
        if k_max >= 2:
            _, cmodel = select_k(feats, range(2, k_max + 1), seed=cfg["seed"])
        else:
            cmodel = kmeans(feats, 1, seed=cfg["seed"])
        adcam_lab = cmodel.assignment
        centroids = cmodel.centroids
    regions = cleanse(fuse_labels(cfr_lab, adcam_lab), cfg["min_count"])
    return regions, founders, centroids, std


def run_pipeline(config: dict, out_dir: str | Path | None = None) -> dict:
    """Generate, segment, train and evaluate in one deterministic run.

    The train/test split happens before segmentation; segmentation is
    fit on training samples only and test samples are routed through
    the trained matchers. Returns the report dict; when ``out_dir`` is
    given all artifacts (dataset, region map, model, report) are written
    there.
    """
    cfg = {**default_config(), **config}
    if isinstance(cfg["scene"], dict):
        scene_dict = {**default_config()["scene"], **cfg["scene"]}
    else:
        scene_dict = cfg["scene"]
    try:
        scene = scene_from_json(scene_dict)
        if "seed" in cfg:
            scene.seed = int(cfg["seed"])
        samples = build_dataset(scene)
        samples = nlos_filter(samples, cfg["nlos_mode"])
    except (ValueError, TypeError) as e:
        raise PipelineError("generate", str(e)) from e

    train_idx, test_idx = _split(len(samples), cfg["train_fraction"], cfg["seed"])
    train_samples = [samples[i] for i in train_idx]
    test_samples = [samples[i] for i in test_idx]

    try:
        regions, founders, centroids, adcam_std = _segment_train_set(train_samples, cfg)
    except ValueError as e:
        raise PipelineError("segment", str(e)) from e

    try:
        model = train(
            train_samples,
            regions,
            founders,
            centroids,
            adcam_std,
            path_select=cfg["path_select"],
            method=cfg["method"],
            ridge_lambda=cfg["ridge_lambda"],
            seed=cfg["seed"],
        )
    except (ValueError, np.linalg.LinAlgError) as e:
        raise PipelineError("train", str(e)) from e

    try:
        eval_samples = test_samples if test_samples else train_samples
        preds = np.array([predict(model, s) for s in eval_samples])
        truths = np.array([s.pos for s in eval_samples])
        errors = np.linalg.norm(preds - truths, axis=1)
        me, rmse = mean_error(preds, truths)
        assigned = [assign_region(model, s) for s in eval_samples]
        per_region: dict[str, float] = {}
        for r in sorted(set(assigned)):
            mask = np.array([a == r for a in assigned])
            per_region[str(r)] = float(errors[mask].mean())
    except ValueError as e:
        raise PipelineError("eval", str(e)) from e

    report = {
        "mean_error_m": me,
        "rmse_m": rmse,
        "cdf": cdf_curve(errors),
        "covering_rate": regions.covering_rate,
        "per_region_errors": per_region,
        "n_train": len(train_samples),
        "n_test": len(test_samples),
        "region_count": regions.fused_count,
        "config": cfg,
        "seed": cfg["seed"],
    }

    if out_dir is not None:
        out = Path(out_dir)
        out.mkdir(parents=True, exist_ok=True)
        dio.write_dataset(samples, out / "dataset")
        export_region_map(
            train_samples, regions, out / "region_map.csv", out / "region_map.ppm"
        )
        dio.write_model(out / "model.json", model)
        (out / "report.json").write_text(json.dumps(report, sort_keys=True, indent=1))
    return report
