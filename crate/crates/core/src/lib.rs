//! Treatment-hierarchy ranking metrics.
//!
//! Given estimated distributions of the mean outcome under each of `T`
//! competing treatments, this crate computes rank probabilities, cumulative
//! ranking probabilities, SUCRA, P-scores, mean and median ranks, the
//! probability of having the best value and threshold probabilities. It
//! answers named hierarchy questions and sweeps a treatment's precision to
//! find where hierarchies cross over.
//!
//! All metrics work on the smaller-is-better scale internally; models with
//! a larger-is-better outcome are negated first.

pub mod effects;
pub mod error;
pub mod hierarchy;
pub mod metrics;
pub mod normal;
pub mod rank_probs;
pub mod sensitivity;

pub use effects::{
    derive_seed, draw_samples, relative_effects, validate_model, Distribution, EffectModel,
    EmpiricalSamples, JointNormal, MarginalNormal, McConfig, OutcomeDirection, RelativeEffects,
    SampleMatrix, Treatment,
};
pub use error::{RankError, Result};
pub use hierarchy::{
    answer_hierarchy_question, answer_with_tolerance, hierarchy_agreement, rank_treatments,
    HierarchyAgreement, HierarchyQuestion, HierarchyResult,
};
pub use metrics::{
    evaluate_metrics, mean_rank, median_rank, p_best, p_score, point_estimates,
    relative_effect_report, sucra, threshold_probability, MetricKind, MetricOptions, MetricReport,
    Provenance, ThresholdSide,
};
pub use rank_probs::{
    beat_probability, cumulative_rank_probabilities, monte_carlo_rank_probabilities,
    rank_probabilities, CumulativeRankMatrix, RankProbabilityMatrix, TiePolicy,
};
pub use sensitivity::{
    detect_crossovers, linear_grid, refine_crossover, sweep_parameter, Crossover, SweepField,
    SweepPoint, SweepResult, SweepSpec,
};
