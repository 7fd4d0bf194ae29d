"""truthlens: truthfulness evaluation, meta-explanation and argumentation
for feature-importance explanations of black-box models."""

__version__ = "0.1.0"

from .core import (
    CallableModel,
    DataKind,
    EvalConfig,
    Explanation,
    FeatureMap,
    FeatureStats,
    GroupStats,
    Instance,
    Model,
    ModelError,
    NoiseLevel,
    TruthlensError,
    ValidationError,
    feature_stats_from_samples,
    validate_explanation,
)
from .perturb import Alteration, Direction, alterations_for_feature
from .truthfulness import (
    ALT,
    EXP,
    IMP,
    AlterRecord,
    EvaluationReport,
    FeatureVerdict,
    average_changes,
    evaluate_explanation,
    evaluate_feature,
    observe_expected,
)
from .metaexplain import (
    Candidate,
    CandidateMap,
    MetaExplanation,
    aggregate_mean,
    aggregate_median,
    candidate_truthful_scores,
    truthful_meta_explanation,
)
from .metrics import complexity
from .argumentation import ArgTree, Verdict, build_tree, judge, mark
from .models import (
    HttpModel,
    LinearModelSpec,
    MlpModelSpec,
    SubprocessModel,
    linear_predict,
    load_model_spec,
    mlp_predict,
)
from .explainers import (
    exact_linear_explain,
    load_explanations,
    random_explain,
    surrogate_explain,
)

__all__ = [
    "__version__",
    "ALT",
    "Alteration",
    "AlterRecord",
    "ArgTree",
    "CallableModel",
    "Candidate",
    "CandidateMap",
    "DataKind",
    "Direction",
    "EXP",
    "EvalConfig",
    "EvaluationReport",
    "Explanation",
    "FeatureMap",
    "FeatureStats",
    "FeatureVerdict",
    "GroupStats",
    "HttpModel",
    "IMP",
    "Instance",
    "LinearModelSpec",
    "MetaExplanation",
    "MlpModelSpec",
    "Model",
    "ModelError",
    "NoiseLevel",
    "SubprocessModel",
    "TruthlensError",
    "ValidationError",
    "Verdict",
    "aggregate_mean",
    "aggregate_median",
    "alterations_for_feature",
    "average_changes",
    "build_tree",
    "candidate_truthful_scores",
    "complexity",
    "evaluate_explanation",
    "evaluate_feature",
    "exact_linear_explain",
    "feature_stats_from_samples",
    "judge",
    "linear_predict",
    "load_explanations",
    "load_model_spec",
    "mark",
    "mlp_predict",
    "observe_expected",
    "random_explain",
    "surrogate_explain",
    "truthful_meta_explanation",
    "validate_explanation",
]
