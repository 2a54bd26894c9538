"""Dataset directory format and the visualization export.

Materializes a synthetic dataset on disk, reloads it through the
documented loader, trains briefly, and exports labeled real+synthesized
feature matrices suitable for external 2-D projection (t-SNE, UMAP, ...).
The same flows are available from the CLI as `gzslgen synth-data` and
`gzslgen export-viz`.
"""

import json
import os
import tempfile

import numpy as np

from gzslgen import SyntheticSpec, load_dataset, make_synthetic_dataset, save_dataset
from gzslgen.cli import main as gzslgen_main
from gzslgen.matio import dumps_json

workdir = tempfile.mkdtemp(prefix="gzslgen_demo_")
spec = dict(
    n_seen_classes=3, n_unseen_classes=2,
    feature_dim=16, attribute_dim=4,
    samples_per_class=30, cluster_std=0.1,
    projection_seed=1, noise_seed=11,
)

# 1) write + reload the on-disk format
bundle = make_synthetic_dataset(SyntheticSpec(**spec))
ds_dir = os.path.join(workdir, "dataset")
save_dataset(bundle, ds_dir)
print("dataset directory:", sorted(os.listdir(ds_dir)))
reloaded = load_dataset(ds_dir)
print("reload ok:", reloaded.visual_train.shape, reloaded.attributes.shape)

# 2) the same artifacts through the CLI
run_dir = os.path.join(workdir, "run")
cfg_path = os.path.join(workdir, "config.json")
with open(cfg_path, "w") as fh:
    fh.write(dumps_json({
        "dataset": ds_dir,
        "train": {"batch_size": 30, "epochs": 40, "hidden_dim": 32,
                  "learning_rate": 1e-3, "beta2": 0.999, "seed": 0},
        "eval": {"n_per_class": 50},
        "out": run_dir,
    }))
assert gzslgen_main(["train", "--config", cfg_path]) == 0

viz_dir = os.path.join(workdir, "viz")
assert gzslgen_main([
    "export-viz", "--checkpoint", os.path.join(run_dir, "checkpoint.zip"),
    "--classes", "3,4", "--n-per-class", "50", "--out", viz_dir,
]) == 0

meta = json.load(open(os.path.join(viz_dir, "meta.json")))
feats = np.fromfile(os.path.join(viz_dir, "viz_features.f32"), dtype="<f4")
print(f"viz export: {meta['n_real']} real + {meta['n_synth']} synthesized rows "
      f"({feats.size // meta['feature_dim']} total)")
print("artifacts in:", workdir)
