"""Command-line interface.

Subcommands: generate, segment, train, eval, plot, pipeline. The
environment variable AMDN_SEED overrides any configured seed. Exit code
0 on success; failures print a stage-tagged message and exit nonzero.
"""
from __future__ import annotations

import argparse
import csv
import json
import os
import sys
from pathlib import Path

import numpy as np

from . import io as dio
from .evaluate import (
    PipelineError,
    cdf_curve,
    export_region_map,
    mean_error,
    run_pipeline,
)
from .fusion import cleanse, fuse_labels
from .localizer import predict, train
from .scenegen import build_dataset, scene_from_json
from .segmentation_adcam import build_features, kmeans, select_k
from .segmentation_cfr import extract_templates, segment_cfr
from .channel import render_image


def _seed_override(seed: int) -> int:
    env = os.environ.get("AMDN_SEED")
    return int(env) if env is not None else seed


def _cmd_generate(args) -> int:
    scene = scene_from_json(json.loads(Path(args.scene).read_text()))
    scene.seed = _seed_override(scene.seed)
    samples = build_dataset(scene)
    dio.write_dataset(samples, args.out)
    print(f"wrote {len(samples)} samples to {args.out}")
    return 0


def _parse_template(text: str) -> tuple[int, int]:
    h, w = text.lower().split("x")
    return int(h), int(w)


def _cmd_segment(args) -> int:
    samples = dio.read_dataset(args.data)
    size = _parse_template(args.template)
    images = [render_image(s.cfr, "cfr_magnitude") for s in samples]
    labeling = segment_cfr(images, args.tau_in, args.tau_out, size)
    feats, std = build_features(samples, args.path_select)
    k_max = min(args.k_max, np.unique(feats, axis=0).shape[0], len(samples) - 1)
    if k_max >= 2:
        _, cmodel = select_k(feats, range(2, k_max + 1), seed=_seed_override(args.seed))
    else:
        cmodel = kmeans(feats, 1, seed=_seed_override(args.seed))
    regions = cleanse(fuse_labels(labeling.labels, cmodel.assignment), args.min_count)
    data = Path(args.data)
    export_region_map(samples, regions, data / "region_map.csv", data / "region_map.ppm")
    seg = {
        "template_size": list(size),
        "path_select": args.path_select,
        "founders": {
            str(c): samples[p.founder_id].id for c, p in labeling.founders.items()
        },
        "adcam_centroids": cmodel.centroids.tolist(),
        "adcam_standardizer": {"mean": std.mean.tolist(), "scale": std.scale.tolist()},
    }
    (data / "segmentation.json").write_text(json.dumps(seg, sort_keys=True, indent=1))
    print(
        f"{regions.fused_count} regions, covering rate {regions.covering_rate:.3f}; "
        f"wrote region_map.csv and segmentation.json"
    )
    return 0


def _cmd_train(args) -> int:
    samples = dio.read_dataset(args.data)
    by_id = {s.id: s for s in samples}
    ids, regions = dio.read_region_map(args.regions)
    data = Path(args.data)
    seg = json.loads((data / "segmentation.json").read_text())
    size = tuple(seg["template_size"])
    founders = {}
    for c, sid in seg["founders"].items():
        img = render_image(by_id[sid].cfr, "cfr_magnitude")
        founders[int(c)] = extract_templates(img, size, founder_id=sid)
    from .segmentation_adcam import Standardizer

    std = Standardizer(
        mean=np.array(seg["adcam_standardizer"]["mean"]),
        scale=np.array(seg["adcam_standardizer"]["scale"]),
    )
    ordered = [by_id[i] for i in ids]
    model = train(
        ordered,
        regions,
        founders,
        np.array(seg["adcam_centroids"]),
        std,
        path_select=seg["path_select"],
        method=args.method,
        seed=_seed_override(args.seed),
    )
    dio.write_model(args.out, model)
    print(f"trained {len(model.weights)} region regressors; wrote {args.out}")
    return 0


def _cmd_eval(args) -> int:
    samples = dio.read_dataset(args.data)
    model = dio.read_model(args.model, samples)
    preds = np.array([predict(model, s) for s in samples])
    truths = np.array([s.pos for s in samples])
    me, rmse = mean_error(preds, truths)
    errors = np.linalg.norm(preds - truths, axis=1)
    report = {
        "mean_error_m": me,
        "rmse_m": rmse,
        "cdf": cdf_curve(errors),
        "n_samples": len(samples),
    }
    Path(args.out).write_text(json.dumps(report, sort_keys=True, indent=1))
    print(f"mean error {me:.3f} m over {len(samples)} samples; wrote {args.out}")
    return 0


def _cmd_plot(args) -> int:
    report = json.loads(Path(args.report).read_text())
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    with open(out / "cdf.csv", "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["threshold_m", "fraction"])
        for t, f in report["cdf"]:
            w.writerow([t, f])
    if "per_region_errors" in report:
        with open(out / "per_region_errors.csv", "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["region", "mean_error_m"])
            for r, e in sorted(report["per_region_errors"].items(), key=lambda kv: int(kv[0])):
                w.writerow([r, e])
    print(f"wrote plot tables to {out}")
    return 0


def _cmd_pipeline(args) -> int:
    cfg = json.loads(Path(args.config).read_text())
    cfg["seed"] = _seed_override(cfg.get("seed", 0))
    report = run_pipeline(cfg, out_dir=args.out)
    print(
        f"mean error {report['mean_error_m']:.3f} m, "
        f"{report['region_count']} regions, covering rate {report['covering_rate']:.3f}"
    )
    return 0


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="amdnloc", description=__doc__)
    sub = p.add_subparsers(dest="command", required=True)

    g = sub.add_parser("generate", help="synthesize a fingerprint dataset from a scene")
    g.add_argument("--scene", required=True)
    g.add_argument("--out", required=True)
    g.set_defaults(func=_cmd_generate)

    s = sub.add_parser("segment", help="segment a dataset into regions")
    s.add_argument("--data", required=True)
    s.add_argument("--tau-in", type=float, default=0.99, dest="tau_in")
    s.add_argument("--tau-out", type=float, default=0.99, dest="tau_out")
    s.add_argument("--template", default="16x16")
    s.add_argument("--min-count", type=int, default=2, dest="min_count")
    s.add_argument("--k-max", type=int, default=8, dest="k_max")
    s.add_argument("--path-select", default="strongest", dest="path_select")
    s.add_argument("--seed", type=int, default=0)
    s.set_defaults(func=_cmd_segment)

    t = sub.add_parser("train", help="fit per-region regressors")
    t.add_argument("--data", required=True)
    t.add_argument("--regions", required=True)
    t.add_argument("--method", choices=["ridge", "sgd"], default="ridge")
    t.add_argument("--seed", type=int, default=0)
    t.add_argument("--out", default="model.json")
    t.set_defaults(func=_cmd_train)

    e = sub.add_parser("eval", help="evaluate a model on a dataset")
    e.add_argument("--data", required=True)
    e.add_argument("--model", required=True)
    e.add_argument("--out", default="report.json")
    e.set_defaults(func=_cmd_eval)

    pl = sub.add_parser("plot", help="emit plot-ready CDF tables from a report")
    pl.add_argument("--report", required=True)
    pl.add_argument("--out", required=True)
    pl.set_defaults(func=_cmd_plot)

    pp = sub.add_parser("pipeline", help="run the full pipeline from a config file")
    pp.add_argument("--config", required=True)
    pp.add_argument("--out", default="run_output")
    pp.set_defaults(func=_cmd_pipeline)
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    if getattr(args, "method", None) in ("ridge", "sgd"):
        args.method = {"ridge": "ridge_closed_form", "sgd": "sgd"}[args.method]
    try:
        return args.func(args)
    except PipelineError as e:
        print(f"error: {e}", file=sys.stderr)
        return 2
    except (ValueError, OSError, KeyError, json.JSONDecodeError) as e:
        stage = getattr(args, "command", "cli")
        print(f"error: [{stage}] {e}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
