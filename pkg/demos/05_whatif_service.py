"""
What-if predictions and recommendations
=======================================

A trained artifact powers an interactive service: counterfactual sliders,
threshold-based recommendations, and a small chat layer.
"""

from somnus import (
    HyperParams,
    InsightService,
    Matrix,
    chronological_split,
    fit_gbdt,
    gbdt_hyperparams_pair,
    generate_fixture,
    importance,
    run_pipeline,
    select_top_k,
    snapshots_from_table,
)

clean, _ = run_pipeline(generate_fixture(seed=7, participants=10, days_per_participant=90))
train, _, _, _ = chronological_split(clean)

_, hp_b = gbdt_hyperparams_pair(HyperParams(n_trees=50))
ranker = fit_gbdt(Matrix.from_table(train), hp_b, seed=7)
top = select_top_k(importance(ranker), 20)
artifact = fit_gbdt(Matrix.from_table(train, top), hp_b, seed=7)

samples = snapshots_from_table(clean, artifact.feature_names)
service = InsightService(artifact, samples=samples)
snap = service.default_snapshot

pred = service.predict_snapshot(snap)
print(f"participant {snap.participant_id}: predicted sleep efficiency {pred:.3f}")

# counterfactual: what if evening screen time dropped to zero?
result = service.what_if(snap, {"screen_minutes_total": 0.0})
print(f"screen time -> 0: {result.base_prediction:.3f} -> "
      f"{result.modified_prediction:.3f} (delta {result.delta:+.3f})")

print("\nrecommendations:")
for rec in service.recommend(snap):
    print(f"  {rec.message}")

print("\nchat:")
for question in ("How will I sleep tonight?", "What if I walk 2000 more steps?"):
    reply = service.chat_turn(snap, question)
    print(f"  Q: {question}")
    print(f"  A: {reply['text']}")

# the same service mounts as a REST app; run it from the shell with
#   somnus serve --artifact artifact.json --input cleaned.csv
from somnus import create_app

app = create_app(service)
print(f"\nHTTP routes: {sorted(r.path for r in app.routes if r.path.startswith('/'))[:8]}")
