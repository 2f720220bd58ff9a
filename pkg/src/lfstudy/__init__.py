"""Toolbox for flicker-based subjective quality studies of coded light fields.

Submodules: lightfield (grid model and I/O), metrics (full-reference image
quality), pipeline (codecs, view synthesis, conditions), study (triplet
questions and session scheduling), scaling (Thurstone Case V), bench
(metric validation), simulate (synthetic content and observers), service
(HTTP study backend), cli (orchestration).
"""

from .bench import (
    BenchError,
    CorrelationStats,
    GroupBenchmark,
    LogisticParams,
    benchmark_group,
    correlate,
    emit_report,
    logistic_fit,
    predict,
)
from .lightfield import (
    LightField,
    LightFieldError,
    View,
    ViewType,
    classify_view,
    crop_inner,
    load_light_field,
    load_view,
    sample_sparse,
    save_light_field,
    save_view,
    view_type_census,
)
from .metrics import (
    LightFieldScore,
    MetricConfig,
    MetricId,
    MetricResult,
    compute_metric,
    fsim,
    fsimc,
    iw_ssim,
    load_metric_config,
    ms_ssim,
    psnr,
    psnr_hvs,
    score_light_field,
)
from .pipeline import (
    BITRATE_LADDER,
    BlendSynthesizer,
    CodecAdapter,
    Condition,
    EncodingMethod,
    ExternalCodec,
    ExternalSynthesizer,
    PipelineError,
    StandInCodec,
    SynthesisPlan,
    build_synthesis_plan,
    run_condition,
    select_test_views,
)
from .scaling import (
    ComparisonMatrix,
    QualityScale,
    REFERENCE_LABEL,
    ScalingError,
    bootstrap_ci,
    build_matrix,
    finalize_scale,
    group_of,
    groups_present,
    read_responses,
    screen_outliers,
    thurstone_case_v,
    write_responses,
)
from .service import StudyStore, create_app
from .simulate import make_light_field, make_natural_image, simulate_responses
from .study import (
    Choice,
    QuestionType,
    Response,
    SessionPlan,
    Stimulus,
    StudyError,
    Triplet,
    TripletRuleset,
    census,
    default_ruleset,
    generate_triplets,
    read_study_manifest,
    schedule_sessions,
    validate_responses,
    write_study_manifest,
)

__version__ = "0.1.0"

__all__ = [
    "BITRATE_LADDER",
    "BenchError",
    "BlendSynthesizer",
    "Choice",
    "CodecAdapter",
    "ComparisonMatrix",
    "Condition",
    "CorrelationStats",
    "EncodingMethod",
    "ExternalCodec",
    "ExternalSynthesizer",
    "GroupBenchmark",
    "LightField",
    "LightFieldError",
    "LightFieldScore",
    "LogisticParams",
    "MetricConfig",
    "MetricId",
    "MetricResult",
    "PipelineError",
    "QualityScale",
    "QuestionType",
    "REFERENCE_LABEL",
    "Response",
    "ScalingError",
    "SessionPlan",
    "StandInCodec",
    "Stimulus",
    "StudyError",
    "StudyStore",
    "SynthesisPlan",
    "Triplet",
    "TripletRuleset",
    "View",
    "ViewType",
    "benchmark_group",
    "bootstrap_ci",
    "build_matrix",
    "build_synthesis_plan",
    "census",
    "classify_view",
    "compute_metric",
    "correlate",
    "create_app",
    "crop_inner",
    "default_ruleset",
    "emit_report",
    "finalize_scale",
    "fsim",
    "fsimc",
    "generate_triplets",
    "group_of",
    "groups_present",
    "iw_ssim",
    "load_light_field",
    "load_metric_config",
    "load_view",
    "logistic_fit",
    "make_light_field",
    "make_natural_image",
    "ms_ssim",
    "predict",
    "psnr",
    "psnr_hvs",
    "read_responses",
    "read_study_manifest",
    "run_condition",
    "sample_sparse",
    "save_light_field",
    "save_view",
    "schedule_sessions",
    "score_light_field",
    "screen_outliers",
    "select_test_views",
    "simulate_responses",
    "thurstone_case_v",
    "validate_responses",
    "view_type_census",
    "write_responses",
    "write_study_manifest",
]
