"""Sample-count sweep: H as a function of how many features are
synthesized per class. One trained model is reused; only the final
classifier is refit per count.
"""

from gzslgen import EvalConfig, SyntheticSpec, make_synthetic_dataset, sweep_samples
from gzslgen.trainer import OptimizerConfig, TrainConfig, train

bundle = make_synthetic_dataset(SyntheticSpec(
    n_seen_classes=3, n_unseen_classes=2,
    feature_dim=16, attribute_dim=4,
    samples_per_class=50, cluster_std=0.1,
    projection_seed=5, noise_seed=11,
))

config = TrainConfig(
    batch_size=30, epochs=600, hidden_dim=64,
    optimizer=OptimizerConfig(learning_rate=1e-4, beta2=0.999),
    seed=0,
)
model, _ = train(bundle, config)

counts = [10, 30, 100, 300, 500]
curve = sweep_samples(bundle, config, counts, EvalConfig(), model=model)
print(f"{'n_per_class':>12} {'H':>8}")
for n, h in curve:
    bar = "#" * int(round(40 * h))
    print(f"{n:>12d} {h:>8.3f}  {bar}")
