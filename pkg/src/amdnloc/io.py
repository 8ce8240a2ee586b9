"""Dataset and model persistence.

A dataset directory holds positions.csv, paths.csv, cfr.bin and
adcam.bin. The .bin files start with the magic bytes "AMDN" followed by
little-endian u32 fields (version, count, nt, nc) and then per-sample
row-major entries as little-endian float32 (interleaved re/im for the
CFR file, plain values for the angle-delay file).
"""
from __future__ import annotations

import csv
import json
from pathlib import Path

import numpy as np

from .channel import PathRecord, render_image
from .fusion import RegionLabels
from .localizer import FeatureConfig, LocalizationModel
from .scenegen import Sample
from .segmentation_adcam import Standardizer
from .segmentation_cfr import extract_templates

__all__ = [
    "MAGIC",
    "FORMAT_VERSION",
    "write_dataset",
    "read_dataset",
    "write_region_map",
    "read_region_map",
    "write_model",
    "read_model",
]

MAGIC = b"AMDN"
FORMAT_VERSION = 1


def _write_bin(path: Path, arrays: list[np.ndarray], complex_data: bool):
    count = len(arrays)
    nt, nc = arrays[0].shape if count else (0, 0)
    header = MAGIC + np.array([FORMAT_VERSION, count, nt, nc], dtype="<u4").tobytes()
    with open(path, "wb") as fh:
        fh.write(header)
        for a in arrays:
            if complex_data:
                inter = np.empty((a.shape[0], a.shape[1], 2), dtype="<f4")
                inter[..., 0] = a.real
                inter[..., 1] = a.imag
                fh.write(inter.tobytes())
            else:
                fh.write(np.asarray(a, dtype="<f4").tobytes())


def _read_bin(path: Path, complex_data: bool) -> list[np.ndarray]:
    raw = Path(path).read_bytes()
    if raw[:4] != MAGIC:
        raise ValueError(f"{path}: bad magic bytes {raw[:4]!r}")
    version, count, nt, nc = np.frombuffer(raw, dtype="<u4", count=4, offset=4)
    if version != FORMAT_VERSION:
        raise ValueError(f"{path}: unsupported format version {version}")
    per = nt * nc * (2 if complex_data else 1)
    data = np.frombuffer(raw, dtype="<f4", offset=20)
    if data.size != count * per:
        raise ValueError(f"{path}: payload size mismatch")
    out = []
    for i in range(count):
        block = data[i * per : (i + 1) * per].astype(np.float64)
        if complex_data:
            block = block.reshape(nt, nc, 2)
            out.append((block[..., 0] + 1j * block[..., 1]).astype(np.complex128))
        else:
            out.append(block.reshape(nt, nc))
    return out


def write_dataset(samples: list[Sample], out_dir: str | Path):
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    with open(out / "positions.csv", "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["id", "x", "y", "is_los"])
        for s in samples:
            w.writerow([s.id, repr(float(s.pos[0])), repr(float(s.pos[1])), int(s.is_los)])
    with open(out / "paths.csv", "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(
            ["id", "path_id", "aoa_rad", "aod_rad", "gain_re", "gain_im", "delay_samples", "pathloss_db"]
        )
        for s in samples:
            for pid, p in enumerate(s.paths):
                w.writerow(
                    [s.id, pid, repr(float(p.aoa)), repr(float(p.aod)), repr(float(p.gain.real)), repr(float(p.gain.imag)), int(p.delay_samples), repr(float(p.pathloss_db))]
                )
    _write_bin(out / "cfr.bin", [s.cfr for s in samples], complex_data=True)
    _write_bin(out / "adcam.bin", [s.adcam for s in samples], complex_data=False)


def read_dataset(data_dir: str | Path) -> list[Sample]:
    d = Path(data_dir)
    cfrs = _read_bin(d / "cfr.bin", complex_data=True)
    adcams = _read_bin(d / "adcam.bin", complex_data=False)
    paths_by_id: dict[int, list[PathRecord]] = {}
    with open(d / "paths.csv", newline="") as fh:
        for row in csv.DictReader(fh):
            paths_by_id.setdefault(int(row["id"]), []).append(
                PathRecord(
                    aoa=float(row["aoa_rad"]),
                    aod=float(row["aod_rad"]),
                    gain=complex(float(row["gain_re"]), float(row["gain_im"])),
                    delay_samples=int(row["delay_samples"]),
                    pathloss_db=float(row["pathloss_db"]),
                )
            )
    samples = []
    with open(d / "positions.csv", newline="") as fh:
        for i, row in enumerate(csv.DictReader(fh)):
            sid = int(row["id"])
            samples.append(
                Sample(
                    id=sid,
                    pos=(float(row["x"]), float(row["y"])),
                    paths=paths_by_id.get(sid, []),
                    is_los=bool(int(row["is_los"])),
                    cfr=cfrs[i],
                    adcam=adcams[i],
                )
            )
    return samples


def write_region_map(path: str | Path, sample_ids, labels: RegionLabels):
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["id", "cfr_label", "adcam_label", "fused_label", "retained"])
        for i, sid in enumerate(sample_ids):
            w.writerow(
                [
                    sid,
                    int(labels.cfr_labels[i]),
                    int(labels.adcam_labels[i]),
                    int(labels.fused_labels[i]),
                    int(labels.retained[i]),
                ]
            )


def read_region_map(path: str | Path) -> tuple[list[int], RegionLabels]:
    ids, cfr, ad, fused, ret = [], [], [], [], []
    with open(path, newline="") as fh:
        for row in csv.DictReader(fh):
            ids.append(int(row["id"]))
            cfr.append(int(row["cfr_label"]))
            ad.append(int(row["adcam_label"]))
            fused.append(int(row["fused_label"]))
            ret.append(bool(int(row["retained"])))
    fused_arr = np.array(fused)
    retained = np.array(ret)
    pair_to_fused = {}
    for c, a, f, r in zip(cfr, ad, fused, ret):
        if r:
            pair_to_fused[(c, a)] = f
    labels = RegionLabels(
        cfr_labels=np.array(cfr),
        adcam_labels=np.array(ad),
        fused_labels=fused_arr,
        retained=retained,
        fused_count=int(fused_arr[retained].max()) + 1 if retained.any() else 0,
        pair_to_fused=pair_to_fused,
    )
    return ids, labels


def _std_to_json(s: Standardizer) -> dict:
    return {"mean": s.mean.tolist(), "scale": s.scale.tolist()}


def _std_from_json(obj: dict) -> Standardizer:
    return Standardizer(mean=np.array(obj["mean"]), scale=np.array(obj["scale"]))


def write_model(path: str | Path, model: LocalizationModel):
    obj = {
        "format": "amdnloc-model",
        "version": FORMAT_VERSION,
        "nt": model.config.nt,
        "nc": model.config.nc,
        "method": model.method,
        "ridge_lambda": model.ridge_lambda,
        "path_select": model.path_select,
        "weights": {str(r): w.tolist() for r, w in model.weights.items()},
        "founders": {
            str(c): {"founder_sample_id": p.founder_id, "size": list(p.size)}
            for c, p in model.founders.items()
        },
        "adcam_centroids": model.adcam_centroids.tolist(),
        "adcam_standardizer": _std_to_json(model.adcam_standardizer),
        "feature_standardizer": _std_to_json(model.feature_standardizer),
        "pair_to_fused": [[c, a, f] for (c, a), f in sorted(model.pair_to_fused.items())],
        "region_feature_centroids": {
            str(r): c.tolist() for r, c in model.region_feature_centroids.items()
        },
    }
    Path(path).write_text(json.dumps(obj, sort_keys=True, indent=1))


def read_model(path: str | Path, samples: list[Sample]) -> LocalizationModel:
    """Load a model; founder templates are re-cut from the given dataset."""
    obj = json.loads(Path(path).read_text())
    if obj.get("format") != "amdnloc-model":
        raise ValueError(f"{path}: not a model file")
    by_id = {s.id: s for s in samples}
    founders = {}
    for c, info in obj["founders"].items():
        sid = info["founder_sample_id"]
        if sid not in by_id:
            raise ValueError(f"model references missing founder sample {sid}")
        img = render_image(by_id[sid].cfr, "cfr_magnitude")
        founders[int(c)] = extract_templates(img, tuple(info["size"]), founder_id=sid)
    return LocalizationModel(
        config=FeatureConfig(nt=obj["nt"], nc=obj["nc"]),
        weights={int(r): np.array(w) for r, w in obj["weights"].items()},
        founders=founders,
        adcam_centroids=np.array(obj["adcam_centroids"]),
        adcam_standardizer=_std_from_json(obj["adcam_standardizer"]),
        path_select=obj["path_select"],
        pair_to_fused={(c, a): f for c, a, f in obj["pair_to_fused"]},
        feature_standardizer=_std_from_json(obj["feature_standardizer"]),
        region_feature_centroids={
            int(r): np.array(c) for r, c in obj["region_feature_centroids"].items()
        },
        ridge_lambda=obj["ridge_lambda"],
        method=obj["method"],
    )
