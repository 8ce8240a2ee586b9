"""Run the full localization pipeline and compare against one global model.

Generates a scene, splits train/test, segments the training
fingerprints, trains one affine regressor per fused region and
evaluates held-out error. The single_region flag reruns the identical
features and split with one global regressor, which is the baseline
the segmentation has to beat.
"""
import json

from amdnloc import Rect, SceneConfig, run_pipeline, scene_to_json
from amdnloc.evaluate import default_config

scene = SceneConfig(
    area_m=(120.0, 120.0),
    bs_pos=(60.0, 2.0),
    buildings=[Rect(30.0, 30.0, 18.0, 20.0), Rect(75.0, 60.0, 20.0, 15.0)],
    grid_spacing_m=6.0,
    nt=16,
    nc=16,
    seed=5,
)
config = {
    **default_config(),
    "scene": scene_to_json(scene),
    "tau_in": 0.93,
    "tau_out": 0.9,
    "template_size": [8, 8],
    "min_count": 4,
    "k_max": 4,
    "seed": 2,
}

segmented = run_pipeline(config)
global_run = run_pipeline({**config, "single_region": True})

print(f"samples: {segmented['n_train']} train + {segmented['n_test']} test")
print(f"regions: {segmented['region_count']}, covering rate {segmented['covering_rate']:.3f}")
print(f"segmented mean error: {segmented['mean_error_m']:.2f} m")
print(f"global    mean error: {global_run['mean_error_m']:.2f} m")
print("cdf (m -> fraction):", json.dumps(segmented["cdf"][:5]))
