"""embshift: label-free distribution-shift auditing for embedding datasets.

Quantifies how far new data cohorts sit from a reference cohort (squared
Frechet distance with bootstrap intervals and z-tests), projects embeddings
to 2-d for cluster inspection (exact t-SNE), trains shallow RBF probes on
frozen embeddings (SMO-solved SVM/SVR with brute-force QP verification),
and drives a noisy-label denoising workflow with event-sourced relabeling.
"""

from .audit import (
    AccuracyReport,
    CorrelationReport,
    DenoiseResult,
    LabelStore,
    RelabelAction,
    accuracy_ci,
    denoise_via_probe,
    make_action,
    pearson,
    pearson_ci,
    relabel_selection,
    run_table5_scenarios,
)
from .dataset import (
    DataError,
    Dataset,
    EmbeddingRecord,
    SplitSpec,
    concat,
    filter_by_cohort,
    load_binary,
    load_csv,
    split,
    write_binary,
    write_csv,
)
from .frechet import (
    FrechetReport,
    GaussianSummary,
    ShiftTest,
    bootstrap_frechet,
    fit_gaussian,
    frechet_distance,
    shift_z_test,
    sqrtm_psd,
)
from .kernel_probe import (
    RbfParams,
    SvcModel,
    SvrModel,
    TrainConfig,
    grid_search,
    load_model,
    predict_class,
    predict_value,
    rbf,
    save_model,
    train_svc,
    train_svr,
)
from .synth import (
    CohortSpec,
    ConfidencePlan,
    GroundTruth,
    LabelPlan,
    SynthSpec,
    closed_form_fd,
    generate,
    load_spec,
    qp_oracle_svc,
    qp_oracle_svr,
)
from .tsne import Projection, TsneConfig, tsne_embed

__version__ = "0.1.0"

__all__ = [
    "AccuracyReport",
    "CorrelationReport",
    "CohortSpec",
    "ConfidencePlan",
    "DataError",
    "Dataset",
    "DenoiseResult",
    "EmbeddingRecord",
    "FrechetReport",
    "GaussianSummary",
    "GroundTruth",
    "LabelPlan",
    "LabelStore",
    "Projection",
    "RbfParams",
    "RelabelAction",
    "ShiftTest",
    "SplitSpec",
    "SvcModel",
    "SvrModel",
    "SynthSpec",
    "TrainConfig",
    "TsneConfig",
    "accuracy_ci",
    "bootstrap_frechet",
    "closed_form_fd",
    "concat",
    "denoise_via_probe",
    "filter_by_cohort",
    "fit_gaussian",
    "frechet_distance",
    "generate",
    "grid_search",
    "load_binary",
    "load_csv",
    "load_model",
    "load_spec",
    "make_action",
    "pearson",
    "pearson_ci",
    "predict_class",
    "predict_value",
    "qp_oracle_svc",
    "qp_oracle_svr",
    "rbf",
    "relabel_selection",
    "run_table5_scenarios",
    "save_model",
    "shift_z_test",
    "split",
    "sqrtm_psd",
    "train_svc",
    "train_svr",
    "tsne_embed",
    "write_binary",
    "write_csv",
]
