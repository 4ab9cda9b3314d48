"""
Training the from-scratch tree ensembles
========================================

Three regressors share one exact greedy splitter: a mean baseline, a
bootstrap random forest, and gradient boosted trees at two regularization
strengths.
"""

import numpy as np

from somnus import (
    HyperParams,
    Matrix,
    chronological_split,
    fit_forest,
    fit_gbdt,
    fit_mean,
    gbdt_hyperparams_pair,
    generate_fixture,
    rmse,
    run_pipeline,
)

clean, _ = run_pipeline(generate_fixture(seed=7, participants=10, days_per_participant=90))

# per participant: last 14 days to test, a quarter of the rest to validation
train, val, test, _ = chronological_split(clean)
print(f"split: {len(train.rows)} train / {len(val.rows)} val / {len(test.rows)} test")

m_train = Matrix.from_table(train)
m_test = Matrix.from_table(test)

hp = HyperParams(n_trees=50)
hp_a, hp_b = gbdt_hyperparams_pair(hp)  # l2_leaf_reg 1.0 vs 3.0

models = {
    "mean": fit_mean(m_train),
    "forest": fit_forest(m_train, hp, seed=7),
    "gbdt-a": fit_gbdt(m_train, hp_a, seed=7),
    "gbdt-b": fit_gbdt(m_train, hp_b, seed=7),
}
for name, art in models.items():
    err = rmse(art.predict_matrix(m_test.X), m_test.y)
    print(f"{name:8s} test RMSE {err:.4f}")

# artifacts serialize to JSON byte-deterministically
blob = models["gbdt-b"].to_json()
assert blob == fit_gbdt(m_train, hp_b, seed=7).to_json()
print(f"\nartifact size: {len(blob)} bytes, reproducible byte for byte")

# training predictions recompute through the trees, nothing is memorized
row = {n: float(v) for n, v in zip(m_train.feature_names, m_train.X[0])}
from somnus import predict

print(f"one training-row prediction: {predict(models['gbdt-b'], row):.4f}")
print(f"target std for scale:        {np.std(m_test.y):.4f}")
