//! Estimated treatment-effect distributions.
//!
//! An [`EffectModel`] stores, for each of `T` competing treatments, the
//! estimated distribution of its true mean outcome μ_i. Three forms are
//! supported: independent normals, a joint normal with a full covariance
//! matrix, and an empirical matrix of joint draws (posterior samples or
//! resampling replicates).

mod sampling;

use std::collections::HashSet;

use nalgebra::{DMatrix, SymmetricEigen};
use serde::{Deserialize, Serialize};

use crate::error::{RankError, Result};

pub use sampling::{derive_seed, draw_samples, McConfig, DEFAULT_DRAWS, DEFAULT_SEED};
pub(crate) use sampling::{row_rng, CHUNK_ROWS};

/// Minimum number of joint draws accepted for an empirical model.
pub const MIN_EMPIRICAL_ROWS: usize = 100;

/// Relative tolerance used for covariance symmetry and PSD checks.
const COVARIANCE_TOL: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Treatment {
    pub id: usize,
    pub name: String,
}

/// Which end of the outcome scale is preferable.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OutcomeDirection {
    /// Harmful outcome: treatment i beats j when μ_i < μ_j.
    SmallerBetter,
    LargerBetter,
}

impl OutcomeDirection {
    /// Multiplier mapping outcome values onto the smaller-is-better scale.
    pub fn sign(self) -> f64 {
        match self {
            Self::SmallerBetter => 1.0,
            Self::LargerBetter => -1.0,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Self::SmallerBetter => "smaller_better",
            Self::LargerBetter => "larger_better",
        }
    }
}

/// Independent normal distributions μ_i ~ N(M_i, SD_i²).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MarginalNormal {
    pub means: Vec<f64>,
    pub sds: Vec<f64>,
}

/// Multivariate normal μ ~ N(M, Σ).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct JointNormal {
    pub means: Vec<f64>,
    /// Row-major `T × T` covariance.
    pub covariance: Vec<Vec<f64>>,
}

/// A dense row-major matrix of joint draws, one column per treatment.
#[derive(Debug, Clone, PartialEq)]
pub struct SampleMatrix {
    names: Vec<String>,
    data: Vec<f64>,
    seed: Option<u64>,
}

impl SampleMatrix {
    /// Builds a matrix from row-major `data`; every cell must be finite.
    pub fn new(names: Vec<String>, data: Vec<f64>) -> Result<Self> {
        let n_cols = names.len();
        if n_cols == 0 || data.is_empty() {
            return Err(RankError::EmptySamples);
        }
        if !data.len().is_multiple_of(n_cols) {
            return Err(RankError::DimensionMismatch(format!(
                "{} values do not fill rows of {} columns",
                data.len(),
                n_cols
            )));
        }
        if let Some(pos) = data.iter().position(|v| !v.is_finite()) {
            return Err(RankError::MissingSample {
                row: pos / n_cols,
                col: pos % n_cols,
            });
        }
        Ok(Self {
            names,
            data,
            seed: None,
        })
    }

    /// Builds a matrix from a list of rows.
    pub fn from_rows(names: Vec<String>, rows: &[Vec<f64>]) -> Result<Self> {
        let n_cols = names.len();
        if let Some(bad) = rows.iter().position(|r| r.len() != n_cols) {
            return Err(RankError::DimensionMismatch(format!(
                "row {bad} has {} values, expected {n_cols}",
                rows[bad].len()
            )));
        }
        Self::new(names, rows.concat())
    }

    pub(crate) fn with_seed(mut self, seed: u64) -> Self {
        self.seed = Some(seed);
        self
    }

    pub fn names(&self) -> &[String] {
        &self.names
    }

    pub fn n_cols(&self) -> usize {
        self.names.len()
    }

    pub fn n_rows(&self) -> usize {
        self.data.len() / self.names.len()
    }

    /// Seed of the generator that produced these draws, if any.
    pub fn seed(&self) -> Option<u64> {
        self.seed
    }

    pub fn row(&self, k: usize) -> &[f64] {
        let t = self.n_cols();
        &self.data[k * t..(k + 1) * t]
    }

    pub fn rows(&self) -> impl Iterator<Item = &[f64]> {
        self.data.chunks_exact(self.n_cols())
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    pub fn column(&self, j: usize) -> impl Iterator<Item = f64> + '_ {
        self.rows().map(move |r| r[j])
    }

    pub fn column_mean(&self, j: usize) -> f64 {
        self.column(j).sum::<f64>() / self.n_rows() as f64
    }

    /// Sample standard deviation (n − 1 denominator) of column `j`.
    pub fn column_sd(&self, j: usize) -> f64 {
        let n = self.n_rows() as f64;
        let mean = self.column_mean(j);
        let ss: f64 = self.column(j).map(|v| (v - mean) * (v - mean)).sum();
        (ss / (n - 1.0).max(1.0)).sqrt()
    }

    fn map_values(&self, f: impl Fn(usize, f64) -> f64) -> Self {
        let t = self.n_cols();
        let data = self
            .data
            .iter()
            .enumerate()
            .map(|(pos, &v)| f(pos % t, v))
            .collect();
        Self {
            names: self.names.clone(),
            data,
            seed: self.seed,
        }
    }
}

/// Empirical joint draws of (μ_1, …, μ_T).
#[derive(Debug, Clone, PartialEq)]
pub struct EmpiricalSamples {
    pub samples: SampleMatrix,
}

#[derive(Debug, Clone, PartialEq)]
pub enum Distribution {
    MarginalNormal(MarginalNormal),
    JointNormal(JointNormal),
    Empirical(EmpiricalSamples),
}

impl Distribution {
    fn len(&self) -> usize {
        match self {
            Self::MarginalNormal(m) => m.means.len(),
            Self::JointNormal(j) => j.means.len(),
            Self::Empirical(e) => e.samples.n_cols(),
        }
    }

    pub fn kind(&self) -> &'static str {
        match self {
            Self::MarginalNormal(_) => "marginal_normal",
            Self::JointNormal(_) => "joint_normal",
            Self::Empirical(_) => "empirical",
        }
    }
}

/// The estimated distributions of the absolute effects of `T` treatments.
#[derive(Debug, Clone, PartialEq)]
pub struct EffectModel {
    treatments: Vec<Treatment>,
    direction: OutcomeDirection,
    distribution: Distribution,
}

/// Checks every model invariant and returns the model unchanged.
pub fn validate_model(model: EffectModel) -> Result<EffectModel> {
    model.validate()?;
    Ok(model)
}

impl EffectModel {
    /// Builds and validates a model; treatment ids follow the order of `names`.
    pub fn new(
        names: Vec<String>,
        direction: OutcomeDirection,
        distribution: Distribution,
    ) -> Result<Self> {
        let treatments = names
            .into_iter()
            .enumerate()
            .map(|(id, name)| Treatment { id, name })
            .collect();
        validate_model(Self {
            treatments,
            direction,
            distribution,
        })
    }

    /// Independent normals from `(name, mean, sd)` triples.
    pub fn marginal_normal<S: Into<String>>(
        direction: OutcomeDirection,
        spec: impl IntoIterator<Item = (S, f64, f64)>,
    ) -> Result<Self> {
        let mut names = Vec::new();
        let mut means = Vec::new();
        let mut sds = Vec::new();
        for (name, mean, sd) in spec {
            names.push(name.into());
            means.push(mean);
            sds.push(sd);
        }
        Self::new(
            names,
            direction,
            Distribution::MarginalNormal(MarginalNormal { means, sds }),
        )
    }

    pub fn validate(&self) -> Result<()> {
        let t = self.treatments.len();
        if t < 2 {
            return Err(RankError::TooFewTreatments(t));
        }
        let mut seen = HashSet::with_capacity(t);
        for (pos, tr) in self.treatments.iter().enumerate() {
            if tr.id != pos {
                return Err(RankError::DimensionMismatch(format!(
                    "treatment {:?} has id {} at position {pos}",
                    tr.name, tr.id
                )));
            }
            if tr.name.trim().is_empty() {
                return Err(RankError::EmptyName(pos));
            }
            if !seen.insert(tr.name.as_str()) {
                return Err(RankError::DuplicateName(tr.name.clone()));
            }
        }
        if self.distribution.len() != t {
            return Err(RankError::DimensionMismatch(format!(
                "{t} treatments but the distribution describes {}",
                self.distribution.len()
            )));
        }
        match &self.distribution {
            Distribution::MarginalNormal(m) => {
                if m.sds.len() != t {
                    return Err(RankError::DimensionMismatch(format!(
                        "{t} means but {} standard deviations",
                        m.sds.len()
                    )));
                }
                for (i, (&mean, &sd)) in m.means.iter().zip(&m.sds).enumerate() {
                    self.check_finite("mean", i, mean)?;
                    self.check_finite("standard deviation", i, sd)?;
                    if sd <= 0.0 {
                        return Err(RankError::NonPositiveSd {
                            treatment: self.name(i).to_owned(),
                            value: sd,
                        });
                    }
                }
            }
            Distribution::JointNormal(j) => {
                for (i, &mean) in j.means.iter().enumerate() {
                    self.check_finite("mean", i, mean)?;
                }
                self.validate_covariance(&j.covariance)?;
            }
            Distribution::Empirical(e) => {
                let s = &e.samples;
                if s.names()
                    != self
                        .treatments
                        .iter()
                        .map(|t| t.name.clone())
                        .collect::<Vec<_>>()
                {
                    return Err(RankError::DimensionMismatch(
                        "sample columns do not match treatment order".into(),
                    ));
                }
                if s.n_rows() < MIN_EMPIRICAL_ROWS {
                    return Err(RankError::TooFewSamples {
                        min: MIN_EMPIRICAL_ROWS,
                        got: s.n_rows(),
                    });
                }
            }
        }
        Ok(())
    }

    fn check_finite(&self, what: &'static str, i: usize, v: f64) -> Result<()> {
        if v.is_finite() {
            Ok(())
        } else {
            Err(RankError::NonFinite {
                what,
                treatment: self.name(i).to_owned(),
            })
        }
    }

    fn validate_covariance(&self, cov: &[Vec<f64>]) -> Result<()> {
        let t = self.treatments.len();
        if cov.len() != t || cov.iter().any(|r| r.len() != t) {
            return Err(RankError::DimensionMismatch(format!(
                "covariance must be {t}x{t}"
            )));
        }
        for i in 0..t {
            for j in 0..t {
                self.check_finite("covariance entry", i, cov[i][j])?;
            }
            if cov[i][i] <= 0.0 {
                return Err(RankError::NonPositiveVariance(self.name(i).to_owned()));
            }
        }
        let scale = (0..t).map(|i| cov[i][i]).fold(0.0, f64::max);
        for i in 0..t {
            for j in (i + 1)..t {
                if (cov[i][j] - cov[j][i]).abs() > COVARIANCE_TOL * scale {
                    return Err(RankError::NonSymmetricCovariance { row: i, col: j });
                }
            }
        }
        let eig = SymmetricEigen::new(covariance_matrix(cov));
        let min = eig
            .eigenvalues
            .iter()
            .copied()
            .fold(f64::INFINITY, f64::min);
        if min < -COVARIANCE_TOL * scale {
            return Err(RankError::NotPositiveSemiDefinite(min));
        }
        Ok(())
    }

    pub fn treatments(&self) -> &[Treatment] {
        &self.treatments
    }

    pub fn names(&self) -> Vec<String> {
        self.treatments.iter().map(|t| t.name.clone()).collect()
    }

    pub fn name(&self, id: usize) -> &str {
        &self.treatments[id].name
    }

    pub fn len(&self) -> usize {
        self.treatments.len()
    }

    pub fn is_empty(&self) -> bool {
        self.treatments.is_empty()
    }

    pub fn direction(&self) -> OutcomeDirection {
        self.direction
    }

    pub fn distribution(&self) -> &Distribution {
        &self.distribution
    }

    pub fn is_normal(&self) -> bool {
        !matches!(self.distribution, Distribution::Empirical(_))
    }

    /// Looks a treatment up by name.
    pub fn id_of(&self, name: &str) -> Result<usize> {
        self.treatments
            .iter()
            .position(|t| t.name == name)
            .ok_or_else(|| RankError::UnknownTreatment(name.to_owned()))
    }

    pub(crate) fn check_id(&self, id: usize) -> Result<()> {
        if id < self.len() {
            Ok(())
        } else {
            Err(RankError::UnknownTreatment(format!("#{id}")))
        }
    }

    /// Centers of the estimated distributions (column means for samples).
    pub fn means(&self) -> Vec<f64> {
        match &self.distribution {
            Distribution::MarginalNormal(m) => m.means.clone(),
            Distribution::JointNormal(j) => j.means.clone(),
            Distribution::Empirical(e) => (0..e.samples.n_cols())
                .map(|j| e.samples.column_mean(j))
                .collect(),
        }
    }

    /// Marginal standard deviations; `None` for empirical models.
    pub fn marginal_sds(&self) -> Option<Vec<f64>> {
        match &self.distribution {
            Distribution::MarginalNormal(m) => Some(m.sds.clone()),
            Distribution::JointNormal(j) => Some(
                (0..j.means.len())
                    .map(|i| j.covariance[i][i].sqrt())
                    .collect(),
            ),
            Distribution::Empirical(_) => None,
        }
    }

    /// Standard error of μ_i − μ_j, √(Σ_ii + Σ_jj − 2Σ_ij); `None` for empirical models.
    pub fn pair_se(&self, i: usize, j: usize) -> Option<f64> {
        match &self.distribution {
            Distribution::MarginalNormal(m) => Some(m.sds[i].hypot(m.sds[j])),
            Distribution::JointNormal(jn) => {
                let c = &jn.covariance;
                Some((c[i][i] + c[j][j] - 2.0 * c[i][j]).max(0.0).sqrt())
            }
            Distribution::Empirical(_) => None,
        }
    }

    /// Returns the model expressed on the smaller-is-better scale.
    pub fn to_canonical_direction(&self) -> EffectModel {
        if self.direction == OutcomeDirection::SmallerBetter {
            return self.clone();
        }
        let distribution = match &self.distribution {
            Distribution::MarginalNormal(m) => Distribution::MarginalNormal(MarginalNormal {
                means: m.means.iter().map(|v| -v).collect(),
                sds: m.sds.clone(),
            }),
            Distribution::JointNormal(j) => Distribution::JointNormal(JointNormal {
                means: j.means.iter().map(|v| -v).collect(),
                covariance: j.covariance.clone(),
            }),
            Distribution::Empirical(e) => Distribution::Empirical(EmpiricalSamples {
                samples: e.samples.map_values(|_, v| -v),
            }),
        };
        EffectModel {
            treatments: self.treatments.clone(),
            direction: OutcomeDirection::SmallerBetter,
            distribution,
        }
    }

    /// Replaces the mean of one treatment. Empirical columns are shifted.
    pub fn with_mean(&self, id: usize, mean: f64) -> Result<EffectModel> {
        self.check_id(id)?;
        let mut out = self.clone();
        match &mut out.distribution {
            Distribution::MarginalNormal(m) => m.means[id] = mean,
            Distribution::JointNormal(j) => j.means[id] = mean,
            Distribution::Empirical(e) => {
                let shift = mean - e.samples.column_mean(id);
                e.samples = e
                    .samples
                    .map_values(|col, v| if col == id { v + shift } else { v });
            }
        }
        validate_model(out)
    }

    /// Replaces the standard deviation of one treatment.
    ///
    /// Joint normals keep their correlations; empirical columns are rescaled
    /// around their mean.
    pub fn with_sd(&self, id: usize, sd: f64) -> Result<EffectModel> {
        self.check_id(id)?;
        if sd <= 0.0 || !sd.is_finite() {
            return Err(RankError::NonPositiveSd {
                treatment: self.name(id).to_owned(),
                value: sd,
            });
        }
        let mut out = self.clone();
        match &mut out.distribution {
            Distribution::MarginalNormal(m) => m.sds[id] = sd,
            Distribution::JointNormal(j) => {
                let ratio = sd / j.covariance[id][id].sqrt();
                let t = j.means.len();
                for k in 0..t {
                    if k == id {
                        j.covariance[id][id] = sd * sd;
                    } else {
                        j.covariance[id][k] *= ratio;
                        j.covariance[k][id] *= ratio;
                    }
                }
            }
            Distribution::Empirical(e) => {
                let mean = e.samples.column_mean(id);
                let current = e.samples.column_sd(id);
                if current <= 0.0 {
                    return Err(RankError::NonPositiveSd {
                        treatment: self.name(id).to_owned(),
                        value: current,
                    });
                }
                let ratio = sd / current;
                e.samples = e.samples.map_values(|col, v| {
                    if col == id {
                        mean + (v - mean) * ratio
                    } else {
                        v
                    }
                });
            }
        }
        validate_model(out)
    }
}

pub(crate) fn covariance_matrix(cov: &[Vec<f64>]) -> DMatrix<f64> {
    let t = cov.len();
    DMatrix::from_fn(t, t, |i, j| 0.5 * (cov[i][j] + cov[j][i]))
}

/// Effects of every treatment relative to a reference treatment.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RelativeEffects {
    pub reference: usize,
    /// D_i,ref = M_i − M_ref in outcome units; zero for the reference itself.
    pub differences: Vec<f64>,
    /// SE of μ_i − μ_ref for normal models.
    pub standard_errors: Option<Vec<f64>>,
}

pub fn relative_effects(model: &EffectModel, reference: usize) -> Result<RelativeEffects> {
    model.check_id(reference)?;
    let means = model.means();
    let differences = means
        .iter()
        .enumerate()
        .map(|(i, &m)| {
            if i == reference {
                0.0
            } else {
                m - means[reference]
            }
        })
        .collect();
    let standard_errors = model.is_normal().then(|| {
        (0..model.len())
            .map(|i| {
                if i == reference {
                    0.0
                } else {
                    model.pair_se(i, reference).unwrap_or(0.0)
                }
            })
            .collect()
    });
    Ok(RelativeEffects {
        reference,
        differences,
        standard_errors,
    })
}
