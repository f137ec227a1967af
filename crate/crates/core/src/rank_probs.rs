//! Rank probabilities (rankograms), cumulative ranking probabilities and
//! pairwise beat probabilities.
//!
//! Ranks are 1-based in the domain (rank 1 = most favorable) but stored
//! 0-based: column `r` of a matrix holds rank `r + 1`.

use rand::seq::SliceRandom;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::effects::{draw_samples, Distribution, EffectModel, McConfig, SampleMatrix};
use crate::effects::{row_rng, CHUNK_ROWS};
use crate::error::{RankError, Result};
use crate::metrics::Provenance;
use crate::normal;

/// Tolerance for row and column sums of a rank probability matrix.
pub const STOCHASTIC_TOL: f64 = 1e-9;

/// How draws with exactly equal values are ranked.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "policy", rename_all = "snake_case")]
pub enum TiePolicy {
    /// Tied treatments get a uniformly random order, drawn from the
    /// per-row substream of `seed`.
    Random { seed: u64 },
    /// Tied treatments share the rank mass of their block equally.
    AverageMass,
}

/// `p[i][r]`: probability that treatment `i` occupies rank `r + 1`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RankProbabilityMatrix {
    treatments: Vec<String>,
    probabilities: Vec<Vec<f64>>,
    n_draws: Option<usize>,
    tie_policy: Option<TiePolicy>,
    provenance: Provenance,
}

impl RankProbabilityMatrix {
    /// Wraps a supplied matrix after checking that it is doubly stochastic.
    pub fn from_probabilities(
        treatments: Vec<String>,
        probabilities: Vec<Vec<f64>>,
    ) -> Result<Self> {
        let m = Self {
            treatments,
            probabilities,
            n_draws: None,
            tie_policy: None,
            provenance: Provenance::Supplied,
        };
        m.validate()?;
        Ok(m)
    }

    pub fn validate(&self) -> Result<()> {
        let t = self.treatments.len();
        if t == 0 {
            return Err(RankError::InvalidRankMatrix("no treatments".into()));
        }
        if self.probabilities.len() != t || self.probabilities.iter().any(|r| r.len() != t) {
            return Err(RankError::InvalidRankMatrix(format!(
                "matrix must be {t}x{t}"
            )));
        }
        for (i, row) in self.probabilities.iter().enumerate() {
            if let Some(v) = row
                .iter()
                .find(|v| !(-STOCHASTIC_TOL..=1.0 + STOCHASTIC_TOL).contains(*v))
            {
                return Err(RankError::InvalidRankMatrix(format!(
                    "entry {v} of row {i} is outside [0, 1]"
                )));
            }
            let sum: f64 = row.iter().sum();
            if (sum - 1.0).abs() > STOCHASTIC_TOL {
                return Err(RankError::InvalidRankMatrix(format!(
                    "row {i} sums to {sum}"
                )));
            }
        }
        for r in 0..t {
            let sum: f64 = self.probabilities.iter().map(|row| row[r]).sum();
            if (sum - 1.0).abs() > STOCHASTIC_TOL {
                return Err(RankError::InvalidRankMatrix(format!(
                    "rank {} column sums to {sum}",
                    r + 1
                )));
            }
        }
        Ok(())
    }

    pub fn treatments(&self) -> &[String] {
        &self.treatments
    }

    pub fn len(&self) -> usize {
        self.treatments.len()
    }

    pub fn is_empty(&self) -> bool {
        self.treatments.is_empty()
    }

    /// Probability that treatment `i` has rank `rank` (1-based).
    pub fn prob(&self, i: usize, rank: usize) -> f64 {
        self.probabilities[i][rank - 1]
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.probabilities[i]
    }

    pub fn rows(&self) -> &[Vec<f64>] {
        &self.probabilities
    }

    pub fn n_draws(&self) -> Option<usize> {
        self.n_draws
    }

    pub fn tie_policy(&self) -> Option<TiePolicy> {
        self.tie_policy
    }

    pub fn provenance(&self) -> Provenance {
        self.provenance
    }
}

/// `cp[i][r] = Σ_{k ≤ r} p[i][k]`: probability that `i` is among the top `r + 1`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CumulativeRankMatrix {
    treatments: Vec<String>,
    cumulative: Vec<Vec<f64>>,
    provenance: Provenance,
}

impl CumulativeRankMatrix {
    pub fn treatments(&self) -> &[String] {
        &self.treatments
    }

    pub fn len(&self) -> usize {
        self.treatments.len()
    }

    pub fn is_empty(&self) -> bool {
        self.treatments.is_empty()
    }

    /// Probability that treatment `i` is among the top `rank` treatments.
    pub fn cum(&self, i: usize, rank: usize) -> f64 {
        self.cumulative[i][rank - 1]
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.cumulative[i]
    }

    pub fn rows(&self) -> &[Vec<f64>] {
        &self.cumulative
    }

    pub fn provenance(&self) -> Provenance {
        self.provenance
    }
}

pub fn cumulative_rank_probabilities(p: &RankProbabilityMatrix) -> CumulativeRankMatrix {
    let cumulative = p
        .rows()
        .iter()
        .map(|row| {
            row.iter()
                .scan(0.0, |acc, &v| {
                    *acc += v;
                    Some(*acc)
                })
                .collect()
        })
        .collect();
    CumulativeRankMatrix {
        treatments: p.treatments.clone(),
        cumulative,
        provenance: p.provenance,
    }
}

/// Adds the rank mass of one draw to `counts` (row-major `T × T`).
fn rank_row(values: &[f64], order: &mut [usize], counts: &mut [f64], policy: TiePolicy, k: usize) {
    let t = values.len();
    for (pos, o) in order.iter_mut().enumerate() {
        *o = pos;
    }
    order.sort_unstable_by(|&a, &b| values[a].total_cmp(&values[b]).then(a.cmp(&b)));

    let mut start = 0;
    let mut tie_rng = None;
    while start < t {
        let mut end = start + 1;
        while end < t && values[order[end]] == values[order[start]] {
            end += 1;
        }
        let block = &mut order[start..end];
        if block.len() == 1 {
            counts[block[0] * t + start] += 1.0;
        } else {
            match policy {
                TiePolicy::Random { seed } => {
                    let rng = tie_rng.get_or_insert_with(|| row_rng(seed, k));
                    block.shuffle(rng);
                    for (offset, &i) in block.iter().enumerate() {
                        counts[i * t + start + offset] += 1.0;
                    }
                }
                TiePolicy::AverageMass => {
                    let share = 1.0 / block.len() as f64;
                    for &i in block.iter() {
                        for r in start..end {
                            counts[i * t + r] += share;
                        }
                    }
                }
            }
        }
        start = end;
    }
}

/// Estimates `p[i][r]` from joint draws on the smaller-is-better scale.
///
/// Each draw ranks treatments ascending by value; `p[i][r]` is the fraction
/// of draws in which `i` lands at rank `r + 1`.
pub fn rank_probabilities(
    samples: &SampleMatrix,
    tie_policy: TiePolicy,
) -> Result<RankProbabilityMatrix> {
    let t = samples.n_cols();
    let n = samples.n_rows();
    if n == 0 || t == 0 {
        return Err(RankError::EmptySamples);
    }
    // Per-chunk partial counts are summed in chunk order, so the result is
    // independent of how rayon schedules the chunks.
    let partials: Vec<Vec<f64>> = samples
        .as_slice()
        .par_chunks(CHUNK_ROWS * t)
        .enumerate()
        .map(|(chunk, rows)| {
            let mut counts = vec![0.0; t * t];
            let mut order = vec![0usize; t];
            for (offset, values) in rows.chunks_exact(t).enumerate() {
                rank_row(
                    values,
                    &mut order,
                    &mut counts,
                    tie_policy,
                    chunk * CHUNK_ROWS + offset,
                );
            }
            counts
        })
        .collect();
    let mut counts = vec![0.0; t * t];
    for part in &partials {
        for (c, p) in counts.iter_mut().zip(part) {
            *c += p;
        }
    }
    let probabilities = counts
        .chunks_exact(t)
        .map(|row| row.iter().map(|c| c / n as f64).collect())
        .collect();
    Ok(RankProbabilityMatrix {
        treatments: samples.names().to_vec(),
        probabilities,
        n_draws: Some(n),
        tie_policy: Some(tie_policy),
        provenance: Provenance::MonteCarlo {
            n_draws: n,
            seed: samples.seed(),
        },
    })
}

/// Canonicalizes `model`, draws `config.n_draws` joint samples and ranks them
/// with random tie-breaking keyed by the same seed.
pub fn monte_carlo_rank_probabilities(
    model: &EffectModel,
    config: &McConfig,
) -> Result<RankProbabilityMatrix> {
    let canonical = model.to_canonical_direction();
    let samples = draw_samples(&canonical, config.n_draws, config.seed)?;
    rank_probabilities(&samples, TiePolicy::Random { seed: config.seed })
}

/// Probability that treatment `i` beats treatment `j`, P(μ_i < μ_j) on the
/// canonical scale.
///
/// Normal models use Φ((M_j − M_i)/SE_ij). Empirical models count the rows
/// in which `i` is strictly better, with ties contributing one half.
pub fn beat_probability(model: &EffectModel, i: usize, j: usize) -> Result<f64> {
    model.check_id(i)?;
    model.check_id(j)?;
    if i == j {
        return Err(RankError::SelfComparison(model.name(i).to_owned()));
    }
    let sign = model.direction().sign();
    match model.distribution() {
        Distribution::Empirical(e) => {
            let mut wins = 0.0;
            for row in e.samples.rows() {
                let (a, b) = (sign * row[i], sign * row[j]);
                if a < b {
                    wins += 1.0;
                } else if a == b {
                    wins += 0.5;
                }
            }
            Ok(wins / e.samples.n_rows() as f64)
        }
        _ => {
            let means = model.means();
            let se = model.pair_se(i, j).expect("normal model");
            let gap = sign * (means[j] - means[i]);
            if se == 0.0 {
                // perfectly correlated pair with equal variance: a point mass
                return Ok(if gap > 0.0 {
                    1.0
                } else if gap < 0.0 {
                    0.0
                } else {
                    0.5
                });
            }
            Ok(normal::cdf(gap / se))
        }
    }
}
