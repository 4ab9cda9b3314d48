"""Sleep-efficiency prediction: data, preprocessing, models, augmentation, serving."""

from .tabular import (
    FIXTURE_SCHEMA,
    BehaviorRow,
    BehaviorTable,
    FeatureDomain,
    PlantedSignal,
    generate_fixture,
    load_csv,
    write_csv,
)
from .preprocess import PipelineConfig, PreprocessReport, run_pipeline
from .ensemble import (
    HyperParams,
    Matrix,
    ModelArtifact,
    fit_forest,
    fit_gbdt,
    fit_mean,
    gbdt_hyperparams_pair,
    importance,
    predict,
    select_top_k,
)
from .augment import (
    AugmentConfig,
    LiveGeneratorClient,
    MockGeneratorClient,
    augment_training_set,
    build_prompt,
    validate_and_prune,
)
from .evalharness import (
    EvalReport,
    SplitSpec,
    chronological_split,
    mae,
    r2,
    render_report,
    rmse,
    run_experiment,
)
from .service import (
    InsightService,
    ServiceConfig,
    UserSnapshot,
    create_app,
    load_artifact,
    snapshots_from_table,
)

__version__ = "0.1.0"
