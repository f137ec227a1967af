//! Treatment-hierarchy questions and the orderings that answer them.
//!
//! A hierarchy is only meaningful relative to the question it answers, so
//! every [`HierarchyResult`] carries its question and names its head the
//! "preferable treatment under <question>".

use std::cmp::Ordering;

use serde::{Deserialize, Serialize};

use crate::effects::{EffectModel, McConfig};
use crate::error::{RankError, Result};
use crate::metrics::{
    mean_rank, median_rank, p_best, point_estimates, relative_effect_report, sucra,
    threshold_probability, MetricKind, MetricReport,
};
use crate::rank_probs::{cumulative_rank_probabilities, monte_carlo_rank_probabilities};

/// An explicit, data-answerable criterion for preferring one treatment.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum HierarchyQuestion {
    SmallestEstimatedMean,
    LargestMeanAdvantageVsReference { reference: String },
    MostLikelyBestValue,
    LargestFractionBeaten,
    LargestMeanRankPosition,
    LargestMedianRankPosition,
    MaximizeThresholdProbability { threshold: f64 },
}

impl HierarchyQuestion {
    pub const KINDS: [&'static str; 7] = [
        "smallest_estimated_mean",
        "largest_mean_advantage_vs_reference",
        "most_likely_best_value",
        "largest_fraction_beaten",
        "largest_mean_rank_position",
        "largest_median_rank_position",
        "maximize_threshold_probability",
    ];

    /// Builds a question from its kind name and optional parameters.
    pub fn from_parts(kind: &str, reference: Option<&str>, threshold: Option<f64>) -> Result<Self> {
        Ok(match kind {
            "smallest_estimated_mean" => Self::SmallestEstimatedMean,
            "largest_mean_advantage_vs_reference" => Self::LargestMeanAdvantageVsReference {
                reference: reference
                    .ok_or_else(|| RankError::InvalidQuestion(format!("{kind} needs a reference")))?
                    .to_owned(),
            },
            "most_likely_best_value" => Self::MostLikelyBestValue,
            "largest_fraction_beaten" => Self::LargestFractionBeaten,
            "largest_mean_rank_position" => Self::LargestMeanRankPosition,
            "largest_median_rank_position" => Self::LargestMedianRankPosition,
            "maximize_threshold_probability" => Self::MaximizeThresholdProbability {
                threshold: threshold.ok_or_else(|| {
                    RankError::InvalidQuestion(format!("{kind} needs a threshold"))
                })?,
            },
            other => {
                return Err(RankError::InvalidQuestion(format!(
                    "unknown question kind {other:?}; expected one of {}",
                    Self::KINDS.join(", ")
                )))
            }
        })
    }

    pub fn kind(&self) -> &'static str {
        match self {
            Self::SmallestEstimatedMean => Self::KINDS[0],
            Self::LargestMeanAdvantageVsReference { .. } => Self::KINDS[1],
            Self::MostLikelyBestValue => Self::KINDS[2],
            Self::LargestFractionBeaten => Self::KINDS[3],
            Self::LargestMeanRankPosition => Self::KINDS[4],
            Self::LargestMedianRankPosition => Self::KINDS[5],
            Self::MaximizeThresholdProbability { .. } => Self::KINDS[6],
        }
    }

    /// The single metric that answers this question.
    pub fn metric(&self) -> MetricKind {
        match self {
            Self::SmallestEstimatedMean => MetricKind::PointEstimate,
            Self::LargestMeanAdvantageVsReference { .. } => MetricKind::RelativeEffect,
            Self::MostLikelyBestValue => MetricKind::PBest,
            Self::LargestFractionBeaten => MetricKind::Sucra,
            Self::LargestMeanRankPosition => MetricKind::MeanRank,
            Self::LargestMedianRankPosition => MetricKind::MedianRank,
            Self::MaximizeThresholdProbability { .. } => MetricKind::ThresholdProbability,
        }
    }

    /// Plain-language wording of the question.
    pub fn text(&self) -> String {
        match self {
            Self::SmallestEstimatedMean => {
                "Which treatment has the most favorable estimated mean outcome?".into()
            }
            Self::LargestMeanAdvantageVsReference { reference } => format!(
                "Which treatment has the largest estimated mean advantage over {reference}?"
            ),
            Self::MostLikelyBestValue => {
                "Which treatment is most likely to have the best mean value on the outcome?".into()
            }
            Self::LargestFractionBeaten => {
                "Which treatment has the largest fraction of competitors that it beats?".into()
            }
            Self::LargestMeanRankPosition => {
                "Which treatment has the most favorable mean rank?".into()
            }
            Self::LargestMedianRankPosition => {
                "Which treatment has the most favorable median rank?".into()
            }
            Self::MaximizeThresholdProbability { threshold } => format!(
                "Which treatment is most likely to have a mean outcome on the preferable side of {threshold}?"
            ),
        }
    }
}

/// An ordering of treatments by one metric, most preferable first.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HierarchyResult {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub question: Option<HierarchyQuestion>,
    pub question_text: String,
    pub report: MetricReport,
    pub ordered: Vec<String>,
    /// Consecutive blocks of `ordered` whose values lie within `tolerance`
    /// of the block's best value.
    pub tie_groups: Vec<Vec<String>>,
    pub tolerance: f64,
}

impl HierarchyResult {
    /// Head of the ordering.
    pub fn preferable(&self) -> &str {
        &self.ordered[0]
    }

    /// Label for the head, always qualified by the question it answers.
    pub fn preferable_label(&self) -> String {
        format!(
            "preferable treatment under \"{}\": {}",
            self.question_text,
            self.preferable()
        )
    }

    /// Position of each treatment's tie group, keyed by name.
    fn group_index(&self, name: &str) -> Option<usize> {
        self.tie_groups
            .iter()
            .position(|g| g.iter().any(|n| n == name))
    }
}

/// Orders treatments by a metric report, grouping near-equal values.
pub fn rank_treatments(report: &MetricReport, tie_tolerance: f64) -> Result<HierarchyResult> {
    if tie_tolerance < 0.0 || tie_tolerance.is_nan() {
        return Err(RankError::NegativeTolerance(tie_tolerance));
    }
    let n = report.values.len();
    let better = |a: f64, b: f64| -> Ordering {
        if report.larger_is_better {
            b.total_cmp(&a)
        } else {
            a.total_cmp(&b)
        }
    };
    let mut idx: Vec<usize> = (0..n).collect();
    idx.sort_by(|&a, &b| better(report.values[a], report.values[b]));

    let mut groups: Vec<Vec<usize>> = Vec::new();
    for &i in &idx {
        match groups.last_mut() {
            Some(g) if (report.values[g[0]] - report.values[i]).abs() <= tie_tolerance => g.push(i),
            _ => groups.push(vec![i]),
        }
    }
    let tie_groups: Vec<Vec<String>> = groups
        .into_iter()
        .map(|g| {
            let mut names: Vec<String> = g
                .into_iter()
                .map(|i| report.treatments[i].clone())
                .collect();
            names.sort();
            names
        })
        .collect();
    let ordered = tie_groups.iter().flatten().cloned().collect();
    Ok(HierarchyResult {
        question: None,
        question_text: format!("ordering by {}", report.kind),
        report: report.clone(),
        ordered,
        tie_groups,
        tolerance: tie_tolerance,
    })
}

/// Computes the metric a question calls for and orders the treatments.
pub fn answer_hierarchy_question(
    model: &EffectModel,
    question: &HierarchyQuestion,
    mc: &McConfig,
) -> Result<HierarchyResult> {
    answer_with_tolerance(model, question, mc, 0.0)
}

pub fn answer_with_tolerance(
    model: &EffectModel,
    question: &HierarchyQuestion,
    mc: &McConfig,
    tie_tolerance: f64,
) -> Result<HierarchyResult> {
    let report = match question {
        HierarchyQuestion::SmallestEstimatedMean => point_estimates(model),
        HierarchyQuestion::LargestMeanAdvantageVsReference { reference } => {
            let id = model.id_of(reference).map_err(|_| {
                RankError::InvalidQuestion(format!("unknown reference {reference:?}"))
            })?;
            relative_effect_report(model, id)?
        }
        HierarchyQuestion::MaximizeThresholdProbability { threshold } => {
            threshold_probability(model, *threshold, None)?
        }
        rank_based => {
            let p = monte_carlo_rank_probabilities(model, mc)?;
            match rank_based.metric() {
                MetricKind::PBest => p_best(&p),
                MetricKind::Sucra => sucra(&cumulative_rank_probabilities(&p)),
                MetricKind::MeanRank => mean_rank(&p),
                MetricKind::MedianRank => median_rank(&p),
                other => unreachable!("{other} is not rank based"),
            }
        }
    };
    let mut result = rank_treatments(&report, tie_tolerance)?;
    result.question_text = question.text();
    result.question = Some(question.clone());
    Ok(result)
}

/// How closely two hierarchies over the same treatments agree.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HierarchyAgreement {
    pub exact_match: bool,
    /// Fraction of unordered pairs ordered the same way; a tie in one
    /// hierarchy against a strict order in the other is discordant.
    pub concordant_fraction: f64,
}

pub fn hierarchy_agreement(a: &HierarchyResult, b: &HierarchyResult) -> Result<HierarchyAgreement> {
    let mut na = a.ordered.clone();
    let mut nb = b.ordered.clone();
    na.sort();
    nb.sort();
    if na != nb {
        return Err(RankError::TreatmentSetMismatch);
    }
    let pos_a: Vec<usize> = na.iter().map(|n| a.group_index(n).unwrap()).collect();
    let pos_b: Vec<usize> = na.iter().map(|n| b.group_index(n).unwrap()).collect();
    let n = na.len();
    let mut pairs = 0usize;
    let mut concordant = 0usize;
    for i in 0..n {
        for j in (i + 1)..n {
            pairs += 1;
            if pos_a[i].cmp(&pos_a[j]) == pos_b[i].cmp(&pos_b[j]) {
                concordant += 1;
            }
        }
    }
    let fraction = if pairs == 0 {
        1.0
    } else {
        concordant as f64 / pairs as f64
    };
    Ok(HierarchyAgreement {
        exact_match: concordant == pairs,
        concordant_fraction: fraction,
    })
}
