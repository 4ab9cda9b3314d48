import datetime as dt

import pytest

from somnus.ensemble import HyperParams, Matrix, fit_gbdt, gbdt_hyperparams_pair, select_top_k
from somnus.evalharness import chronological_split
from somnus.preprocess import run_pipeline
from somnus.tabular import BehaviorRow, BehaviorTable, generate_fixture

FIXTURE_SEED = 7
FAST_HP = HyperParams(n_trees=50)


def make_table(records, columns, target="eff", start=dt.date(2020, 1, 1)):
    """Small-table helper: records = [(pid, day_index, {col: value}), ...]."""
    rows = [
        BehaviorRow(pid, start + dt.timedelta(days=day), dict(values))
        for pid, day, values in records
    ]
    rows.sort(key=lambda r: (r.participant_id, r.date))
    return BehaviorTable(rows, list(columns), target)


@pytest.fixture(scope="session")
def fixture_table():
    return generate_fixture(FIXTURE_SEED, participants=10, days_per_participant=90)


@pytest.fixture(scope="session")
def clean_and_report(fixture_table):
    return run_pipeline(fixture_table)


@pytest.fixture(scope="session")
def clean_table(clean_and_report):
    return clean_and_report[0]


@pytest.fixture(scope="session")
def splits(clean_table):
    train, val, test, excluded = chronological_split(clean_table)
    return train, val, test, excluded


@pytest.fixture(scope="session")
def topk_artifact(splits):
    """gbdt trained on the top-20 features of the fixture's training split."""
    train = splits[0]
    _, hp_b = gbdt_hyperparams_pair(FAST_HP)
    ranker = fit_gbdt(Matrix.from_table(train), hp_b, seed=FIXTURE_SEED)
    top = select_top_k(ranker.importances, 20)
    return fit_gbdt(Matrix.from_table(train, top), hp_b, seed=FIXTURE_SEED)
