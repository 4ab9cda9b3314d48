"""
The full evaluation grid
========================

One call runs the whole protocol: clean, split, rank features, augment,
then score 3 feature sets x 4 models on a shared test split.
"""

from somnus import HyperParams, generate_fixture, render_report, run_experiment

raw = generate_fixture(seed=7, participants=10, days_per_participant=90)

report = run_experiment(raw, hyperparams=HyperParams(n_trees=50), seed=7)
print(render_report(report, "markdown"))

md = report.metadata
print(f"selected features: {', '.join(md['top_features'][:4])}, ...")
print(f"rows: {md['row_counts']}")
print(f"config hash: {md['config_hash']}")

# same seed, same bytes: reports are safe to diff across machines
again = run_experiment(raw, hyperparams=HyperParams(n_trees=50), seed=7)
assert render_report(again, "json") == render_report(report, "json")
print("rerun with the same seed reproduced the report byte for byte")
