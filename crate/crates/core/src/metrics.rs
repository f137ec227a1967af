//! Ranking metrics.
//!
//! Each metric is returned as a [`MetricReport`]: one value per treatment
//! plus whether larger values are preferable. Probability-based metrics read
//! the rank probability matrix; point estimates, P-scores and threshold
//! probabilities read the model directly.

use serde::{Deserialize, Serialize};

use crate::effects::{relative_effects, Distribution, EffectModel, McConfig, OutcomeDirection};
use crate::error::{RankError, Result};
use crate::normal;
use crate::rank_probs::{
    beat_probability, cumulative_rank_probabilities, monte_carlo_rank_probabilities,
    CumulativeRankMatrix, RankProbabilityMatrix,
};

/// Slack on `cp ≥ ½` in the median rank so that exact halves survive
/// floating point prefix sums.
const MEDIAN_SLACK: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MetricKind {
    PointEstimate,
    RelativeEffect,
    PBest,
    Sucra,
    PScore,
    MeanRank,
    MedianRank,
    ThresholdProbability,
}

impl MetricKind {
    pub const ALL: [MetricKind; 8] = [
        Self::PointEstimate,
        Self::RelativeEffect,
        Self::PBest,
        Self::Sucra,
        Self::PScore,
        Self::MeanRank,
        Self::MedianRank,
        Self::ThresholdProbability,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            Self::PointEstimate => "point_estimate",
            Self::RelativeEffect => "relative_effect",
            Self::PBest => "p_best",
            Self::Sucra => "sucra",
            Self::PScore => "p_score",
            Self::MeanRank => "mean_rank",
            Self::MedianRank => "median_rank",
            Self::ThresholdProbability => "threshold_probability",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|k| k.as_str() == s)
    }

    /// True for metrics valued in [0, 1].
    pub fn is_probability(self) -> bool {
        matches!(
            self,
            Self::PBest | Self::Sucra | Self::PScore | Self::ThresholdProbability
        )
    }

    /// True for metrics that need a rank probability matrix.
    pub fn needs_ranks(self) -> bool {
        matches!(
            self,
            Self::PBest | Self::Sucra | Self::MeanRank | Self::MedianRank
        )
    }
}

impl std::fmt::Display for MetricKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

/// How a metric value was obtained.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "method", rename_all = "snake_case")]
pub enum Provenance {
    Analytic,
    MonteCarlo {
        n_draws: usize,
        seed: Option<u64>,
    },
    /// Computed from a caller-supplied rank probability matrix.
    Supplied,
}

/// One ranking metric evaluated for every treatment.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricReport {
    pub kind: MetricKind,
    pub treatments: Vec<String>,
    pub values: Vec<f64>,
    pub larger_is_better: bool,
    pub provenance: Provenance,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub threshold: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub reference: Option<String>,
}

impl MetricReport {
    fn new(
        kind: MetricKind,
        treatments: Vec<String>,
        values: Vec<f64>,
        larger_is_better: bool,
        provenance: Provenance,
    ) -> Self {
        Self {
            kind,
            treatments,
            values,
            larger_is_better,
            provenance,
            threshold: None,
            reference: None,
        }
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn value_of(&self, name: &str) -> Option<f64> {
        self.treatments
            .iter()
            .position(|t| t == name)
            .map(|i| self.values[i])
    }

    /// Checks the value range implied by the metric kind.
    pub fn check_ranges(&self) -> Result<()> {
        let t = self.values.len() as f64;
        let bad =
            |v: f64| RankError::InvalidRankMatrix(format!("{} value {v} out of range", self.kind));
        for &v in &self.values {
            let ok = match self.kind {
                k if k.is_probability() => (0.0..=1.0).contains(&v),
                MetricKind::MeanRank => (1.0 - 1e-9..=t + 1e-9).contains(&v),
                MetricKind::MedianRank => v.fract() == 0.0 && (1.0..=t).contains(&v),
                _ => v.is_finite(),
            };
            if !ok {
                return Err(bad(v));
            }
        }
        Ok(())
    }
}

/// Centers M_i of the estimated distributions, in outcome units.
///
/// Values keep the original scale; `larger_is_better` follows the outcome
/// direction.
pub fn point_estimates(model: &EffectModel) -> MetricReport {
    MetricReport::new(
        MetricKind::PointEstimate,
        model.names(),
        model.means(),
        model.direction() == OutcomeDirection::LargerBetter,
        Provenance::Analytic,
    )
}

/// D_i,ref = M_i − M_ref for every treatment, in outcome units.
pub fn relative_effect_report(model: &EffectModel, reference: usize) -> Result<MetricReport> {
    let rel = relative_effects(model, reference)?;
    let mut report = MetricReport::new(
        MetricKind::RelativeEffect,
        model.names(),
        rel.differences,
        model.direction() == OutcomeDirection::LargerBetter,
        Provenance::Analytic,
    );
    report.reference = Some(model.name(reference).to_owned());
    Ok(report)
}

/// Probability of having the best mean value: the rank-1 column.
pub fn p_best(p: &RankProbabilityMatrix) -> MetricReport {
    MetricReport::new(
        MetricKind::PBest,
        p.treatments().to_vec(),
        p.rows().iter().map(|row| row[0]).collect(),
        true,
        p.provenance(),
    )
}

/// Surface under the cumulative ranking curve, Σ_{r<T} cp_{i,r} / (T − 1).
pub fn sucra(cp: &CumulativeRankMatrix) -> MetricReport {
    let t = cp.len();
    let values = cp
        .rows()
        .iter()
        .map(|row| {
            if t < 2 {
                1.0
            } else {
                row[..t - 1].iter().sum::<f64>() / (t - 1) as f64
            }
        })
        .collect();
    MetricReport::new(
        MetricKind::Sucra,
        cp.treatments().to_vec(),
        values,
        true,
        cp.provenance(),
    )
}

/// P-score: the mean over competitors of Φ((M_j − M_i)/SE_ij).
///
/// Each term is one minus the one-sided p-value for "i is no better than j".
pub fn p_score(model: &EffectModel) -> Result<MetricReport> {
    if !model.is_normal() {
        return Err(RankError::NonNormalModel("P-score"));
    }
    let t = model.len();
    let mut values = Vec::with_capacity(t);
    for i in 0..t {
        let mut total = 0.0;
        for j in (0..t).filter(|&j| j != i) {
            total += beat_probability(model, i, j)?;
        }
        values.push(total / (t - 1) as f64);
    }
    Ok(MetricReport::new(
        MetricKind::PScore,
        model.names(),
        values,
        true,
        Provenance::Analytic,
    ))
}

/// Expected rank Σ_r r·p_{i,r}.
pub fn mean_rank(p: &RankProbabilityMatrix) -> MetricReport {
    let values = p
        .rows()
        .iter()
        .map(|row| {
            row.iter()
                .enumerate()
                .map(|(r, &v)| (r + 1) as f64 * v)
                .sum()
        })
        .collect();
    MetricReport::new(
        MetricKind::MeanRank,
        p.treatments().to_vec(),
        values,
        false,
        p.provenance(),
    )
}

/// Smallest rank m with cp_{i,m} ≥ ½.
pub fn median_rank(p: &RankProbabilityMatrix) -> MetricReport {
    let cp = cumulative_rank_probabilities(p);
    let values = cp
        .rows()
        .iter()
        .map(|row| {
            let m = row
                .iter()
                .position(|&c| c >= 0.5 - MEDIAN_SLACK)
                .unwrap_or(row.len() - 1);
            (m + 1) as f64
        })
        .collect();
    MetricReport::new(
        MetricKind::MedianRank,
        p.treatments().to_vec(),
        values,
        false,
        p.provenance(),
    )
}

/// Which side of a threshold counts as success.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ThresholdSide {
    Below,
    Above,
}

impl ThresholdSide {
    pub fn preferable_for(direction: OutcomeDirection) -> Self {
        match direction {
            OutcomeDirection::SmallerBetter => Self::Below,
            OutcomeDirection::LargerBetter => Self::Above,
        }
    }
}

/// Probability that μ_i falls on the preferable side of `threshold`.
///
/// `threshold` is in the model's own outcome units. Without an explicit
/// side, "below" is used for smaller-is-better outcomes and "above"
/// otherwise. Joint normals use their marginal variances.
pub fn threshold_probability(
    model: &EffectModel,
    threshold: f64,
    side: Option<ThresholdSide>,
) -> Result<MetricReport> {
    if !threshold.is_finite() {
        return Err(RankError::InvalidQuestion(format!(
            "threshold must be finite, got {threshold}"
        )));
    }
    let side = side.unwrap_or_else(|| ThresholdSide::preferable_for(model.direction()));
    let below: Vec<f64> = match model.distribution() {
        Distribution::Empirical(e) => {
            let n = e.samples.n_rows() as f64;
            (0..e.samples.n_cols())
                .map(|j| e.samples.column(j).filter(|&v| v < threshold).count() as f64 / n)
                .collect()
        }
        _ => {
            let sds = model.marginal_sds().expect("normal model");
            model
                .means()
                .iter()
                .zip(&sds)
                .map(|(&m, &sd)| normal::prob_below(threshold, m, sd))
                .collect()
        }
    };
    let values = match side {
        ThresholdSide::Below => below,
        ThresholdSide::Above => below.into_iter().map(|p| 1.0 - p).collect(),
    };
    let mut report = MetricReport::new(
        MetricKind::ThresholdProbability,
        model.names(),
        values,
        true,
        Provenance::Analytic,
    );
    report.threshold = Some(threshold);
    Ok(report)
}

/// Parameters some metrics need.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct MetricOptions {
    pub threshold: Option<f64>,
    pub side: Option<ThresholdSide>,
    pub reference: Option<usize>,
}

/// Evaluates several metrics on one model, sharing a single Monte Carlo
/// rank matrix between the rank-based ones.
///
/// Returns the reports in the requested order together with the rank
/// matrix when one was needed.
pub fn evaluate_metrics(
    model: &EffectModel,
    kinds: &[MetricKind],
    mc: &McConfig,
    options: &MetricOptions,
) -> Result<(Vec<MetricReport>, Option<RankProbabilityMatrix>)> {
    let ranks = if kinds.iter().any(|k| k.needs_ranks()) {
        Some(monte_carlo_rank_probabilities(model, mc)?)
    } else {
        None
    };
    let mut reports = Vec::with_capacity(kinds.len());
    for &kind in kinds {
        let report = match kind {
            MetricKind::PointEstimate => point_estimates(model),
            MetricKind::RelativeEffect => {
                let reference = options.reference.ok_or_else(|| {
                    RankError::InvalidQuestion("relative_effect needs a reference".into())
                })?;
                relative_effect_report(model, reference)?
            }
            MetricKind::PScore => p_score(model)?,
            MetricKind::ThresholdProbability => {
                let threshold = options.threshold.ok_or_else(|| {
                    RankError::InvalidQuestion("threshold_probability needs a threshold".into())
                })?;
                threshold_probability(model, threshold, options.side)?
            }
            MetricKind::PBest => p_best(ranks.as_ref().expect("rank matrix")),
            MetricKind::Sucra => sucra(&cumulative_rank_probabilities(
                ranks.as_ref().expect("rank matrix"),
            )),
            MetricKind::MeanRank => mean_rank(ranks.as_ref().expect("rank matrix")),
            MetricKind::MedianRank => median_rank(ranks.as_ref().expect("rank matrix")),
        };
        reports.push(report);
    }
    Ok((reports, ranks))
}

/// Rounds half away from zero to `decimals` places.
pub fn round_half_away(value: f64, decimals: u32) -> f64 {
    let scale = 10f64.powi(decimals as i32);
    (value * scale).round() / scale
}
