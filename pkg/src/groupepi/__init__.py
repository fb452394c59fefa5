"""Epidemics on temporal contact networks with pooled family tests.

Simulates susceptible-infected-susceptible dynamics over day-by-day
contact graphs and static families, observes sparse family-level group
test results, and recovers per-individual infection probabilities with a
Gibbs sampler that learns its rate parameters along the way.
"""

from .errors import (
    ConfigError,
    ConstraintError,
    DataError,
    GroupEpiError,
    InitializationError,
    MetricUndefinedError,
)
from .evaluate import (
    ExperimentResult,
    ScoredInstance,
    baseline_linear_classifier,
    build_baseline_features,
    fit_linear_classifier,
    pooled_cells,
    roc_auc,
    roc_curve_points,
    run_experiment_1,
    run_experiment_2,
    summarize,
)
from .gibbs import (
    CountPair,
    GibbsState,
    InferenceConfig,
    OuterIterationRecord,
    PosteriorEstimate,
    SufficientCounts,
    count_sufficient_statistics,
    forward_initialize_states,
    gibbs_conditional,
    initialize,
    resample_parameters,
    run_inference,
    sample_origins,
    update_hyperparameters,
)
from .model import (
    ORIGIN_CONTACT,
    ORIGIN_FAMILY,
    ORIGIN_NONE,
    ORIGIN_OUTSIDE,
    PARAM_NAMES,
    PROB_CAP,
    BetaPair,
    FamilyPartition,
    HealthStateMatrix,
    HyperParameters,
    ModelParameters,
    ObservationSet,
    OriginMatrix,
    TemporalContactNetwork,
    contact_infection_counts,
    emission_positive_prob,
    family_infection_totals,
    infection_prob,
    transition_prob,
)
from .simulate import (
    Dataset,
    SimulationConfig,
    default_contact_edge_prob,
    forward_sample_states,
    generate_families,
    generate_network,
    make_dataset,
    sample_ground_truth_parameters,
    schedule_and_sample_tests,
    simulate_epidemic,
)

__version__ = "0.1.0"

__all__ = [
    "BetaPair",
    "ConfigError",
    "ConstraintError",
    "CountPair",
    "DataError",
    "Dataset",
    "ExperimentResult",
    "FamilyPartition",
    "GibbsState",
    "GroupEpiError",
    "HealthStateMatrix",
    "HyperParameters",
    "InferenceConfig",
    "InitializationError",
    "MetricUndefinedError",
    "ModelParameters",
    "ORIGIN_CONTACT",
    "ORIGIN_FAMILY",
    "ORIGIN_NONE",
    "ORIGIN_OUTSIDE",
    "ObservationSet",
    "OriginMatrix",
    "OuterIterationRecord",
    "PARAM_NAMES",
    "PROB_CAP",
    "PosteriorEstimate",
    "ScoredInstance",
    "SimulationConfig",
    "SufficientCounts",
    "TemporalContactNetwork",
    "baseline_linear_classifier",
    "build_baseline_features",
    "contact_infection_counts",
    "count_sufficient_statistics",
    "default_contact_edge_prob",
    "emission_positive_prob",
    "family_infection_totals",
    "fit_linear_classifier",
    "forward_initialize_states",
    "forward_sample_states",
    "generate_families",
    "generate_network",
    "gibbs_conditional",
    "infection_prob",
    "initialize",
    "make_dataset",
    "pooled_cells",
    "resample_parameters",
    "roc_auc",
    "roc_curve_points",
    "run_experiment_1",
    "run_experiment_2",
    "run_inference",
    "sample_ground_truth_parameters",
    "sample_origins",
    "schedule_and_sample_tests",
    "simulate_epidemic",
    "summarize",
    "transition_prob",
    "update_hyperparameters",
]
