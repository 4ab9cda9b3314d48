"""
Feature selection and generator-backed augmentation
===================================================

Gain-based importances pick the top 20 features; a seeded mock generator
then proposes extra daily rows from each participant's recent window.
"""

from somnus import (
    AugmentConfig,
    HyperParams,
    Matrix,
    MockGeneratorClient,
    augment_training_set,
    build_prompt,
    chronological_split,
    fit_gbdt,
    gbdt_hyperparams_pair,
    generate_fixture,
    importance,
    run_pipeline,
    select_top_k,
)
from somnus.augment import PromptWindow

clean, _ = run_pipeline(generate_fixture(seed=7, participants=10, days_per_participant=90))
train, _, test, _ = chronological_split(clean)

# rank features with the stronger-regularized gbdt, fit on train only
_, hp_b = gbdt_hyperparams_pair(HyperParams(n_trees=50))
ranker = fit_gbdt(Matrix.from_table(train), hp_b, seed=7)
imps = importance(ranker)
top = select_top_k(imps, 20)
print("top 5 features by gain share:")
for name in top[:5]:
    print(f"  {name:32s} {imps[name]:.3f}")

# each participant's last 20 training days become a pipe-delimited prompt
train_top = train.restrict_columns(top)
cols = train_top.feature_columns + [train_top.target_column]
pid = train_top.rows[0].participant_id
tail = [r for r in train_top.rows if r.participant_id == pid][-20:]
window = PromptWindow(pid, cols, [[r.values[c] for c in cols] for r in tail])
prompt = build_prompt(window, 5)
print(f"\nprompt preview ({len(prompt.splitlines())} lines):")
print("\n".join(prompt.splitlines()[:3]) + "\n...\n" + prompt.splitlines()[-1])

# the mock client answers deterministically; ~1 line in 10 is malformed on
# purpose so the validation path stays honest
date_floor = {}
for r in test.rows:
    if r.date > date_floor.get(r.participant_id, r.date):
        date_floor[r.participant_id] = r.date
augmented, log = augment_training_set(
    train_top, MockGeneratorClient(seed=7), AugmentConfig(seed=7), date_floor=date_floor
)
added = len(augmented.rows) - len(train_top.rows)
rejected = sum(len(e.get("rejected", [])) for e in log)
print(f"\nappended {added} synthetic rows ({rejected} candidates rejected)")

# synthetic rows are flagged; stripping them restores the input exactly
stripped = augmented.replace(rows=[r for r in augmented.rows if not r.synthetic])
assert stripped == train_top
print("stripping synthetic rows restores the original training table")
