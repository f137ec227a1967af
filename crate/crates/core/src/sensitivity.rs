//! Precision and location sweeps with hierarchy crossover detection.
//!
//! A sweep replaces one treatment's SD (or mean) by each value of a grid,
//! recomputes the requested metrics and records where pairs of treatments
//! swap places. Every grid point gets its own seed derived from the base
//! seed and the grid index.

use serde::{Deserialize, Serialize};

use crate::effects::{EffectModel, McConfig};
use crate::error::{RankError, Result};
use crate::metrics::{evaluate_metrics, p_score, MetricKind, MetricOptions, MetricReport};

/// Bisection stops once the bracketing interval is at most this wide.
pub const REFINE_WIDTH: f64 = 0.01;

/// Which parameter of the target treatment is perturbed.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SweepField {
    Sd,
    Mean,
}

impl SweepField {
    pub fn as_str(self) -> &'static str {
        match self {
            Self::Sd => "sd",
            Self::Mean => "mean",
        }
    }
}

#[derive(Debug, Clone)]
pub struct SweepSpec {
    pub base: EffectModel,
    pub target: usize,
    pub field: SweepField,
    pub grid: Vec<f64>,
    pub metrics: Vec<MetricKind>,
    pub mc: McConfig,
    pub options: MetricOptions,
}

impl SweepSpec {
    pub fn validate(&self) -> Result<()> {
        self.base.check_id(self.target)?;
        if self.metrics.is_empty() {
            return Err(RankError::InvalidSweep("no metrics requested".into()));
        }
        if self.grid.is_empty() {
            return Err(RankError::InvalidSweep("empty grid".into()));
        }
        if let Some(v) = self.grid.iter().find(|v| !v.is_finite()) {
            return Err(RankError::InvalidSweep(format!(
                "non-finite grid value {v}"
            )));
        }
        if self.grid.windows(2).any(|w| w[1] <= w[0]) {
            return Err(RankError::InvalidSweep(
                "grid must be strictly increasing".into(),
            ));
        }
        if self.field == SweepField::Sd {
            if let Some(v) = self.grid.iter().find(|&&v| v <= 0.0) {
                return Err(RankError::InvalidSweep(format!(
                    "standard deviation grid value {v} is not positive"
                )));
            }
        }
        Ok(())
    }

    /// The base model with the target's field set to `value`.
    pub fn model_at(&self, value: f64) -> Result<EffectModel> {
        match self.field {
            SweepField::Sd => self.base.with_sd(self.target, value),
            SweepField::Mean => self.base.with_mean(self.target, value),
        }
    }
}

/// Evenly spaced grid `start, start + step, …` up to `stop` inclusive.
///
/// Values are snapped to 1e-9 so decimal steps print cleanly. A step larger
/// than the range yields the single point `start`.
pub fn linear_grid(start: f64, stop: f64, step: f64) -> Result<Vec<f64>> {
    if !(start.is_finite() && stop.is_finite() && step.is_finite()) {
        return Err(RankError::InvalidSweep("grid bounds must be finite".into()));
    }
    if step <= 0.0 {
        return Err(RankError::InvalidSweep(format!(
            "grid step {step} must be positive"
        )));
    }
    if stop < start {
        return Err(RankError::InvalidSweep(format!(
            "grid stop {stop} is below start {start}"
        )));
    }
    let count = ((stop - start) / step + 1e-9).floor() as usize + 1;
    Ok((0..count)
        .map(|k| ((start + k as f64 * step) * 1e9).round() / 1e9)
        .collect())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepPoint {
    pub value: f64,
    pub seed: u64,
    pub reports: Vec<MetricReport>,
}

/// A change of order between two treatments between consecutive grid points.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Crossover {
    pub metric: MetricKind,
    pub pair: (String, String),
    /// Grid values bracketing the flip.
    pub interval: (f64, f64),
    /// The member of `pair` preferable after the flip.
    pub preferred_after: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepResult {
    pub target: String,
    pub field: SweepField,
    pub treatments: Vec<String>,
    pub metrics: Vec<MetricKind>,
    pub points: Vec<SweepPoint>,
    pub crossovers: Vec<Crossover>,
}

impl SweepResult {
    pub fn grid(&self) -> Vec<f64> {
        self.points.iter().map(|p| p.value).collect()
    }

    /// The report for `metric` at grid point `index`.
    pub fn report(&self, index: usize, metric: MetricKind) -> Option<&MetricReport> {
        self.points
            .get(index)?
            .reports
            .iter()
            .find(|r| r.kind == metric)
    }

    fn id_of(&self, name: &str) -> Result<usize> {
        self.treatments
            .iter()
            .position(|t| t == name)
            .ok_or_else(|| RankError::UnknownTreatment(name.to_owned()))
    }
}

/// Runs the sweep and detects crossovers for every pair of treatments.
pub fn sweep_parameter(spec: &SweepSpec) -> Result<SweepResult> {
    spec.validate()?;
    let mut points = Vec::with_capacity(spec.grid.len());
    for (index, &value) in spec.grid.iter().enumerate() {
        let model = spec.model_at(value)?;
        let mc = spec.mc.derived(index as u64);
        let (reports, _) = evaluate_metrics(&model, &spec.metrics, &mc, &spec.options)?;
        points.push(SweepPoint {
            value,
            seed: mc.seed,
            reports,
        });
    }
    let mut result = SweepResult {
        target: spec.base.name(spec.target).to_owned(),
        field: spec.field,
        treatments: spec.base.names(),
        metrics: spec.metrics.clone(),
        points,
        crossovers: Vec::new(),
    };
    let t = result.treatments.len();
    let mut crossovers = Vec::new();
    for i in 0..t {
        for j in (i + 1)..t {
            crossovers.extend(crossovers_for(&result, i, j));
        }
    }
    result.crossovers = crossovers;
    Ok(result)
}

/// Order flips between the two named treatments, for each swept metric.
pub fn detect_crossovers(result: &SweepResult, pair: (&str, &str)) -> Result<Vec<Crossover>> {
    let i = result.id_of(pair.0)?;
    let j = result.id_of(pair.1)?;
    if i == j {
        return Err(RankError::SelfComparison(pair.0.to_owned()));
    }
    Ok(crossovers_for(result, i, j))
}

fn crossovers_for(result: &SweepResult, i: usize, j: usize) -> Vec<Crossover> {
    let (ni, nj) = (&result.treatments[i], &result.treatments[j]);
    let mut out = Vec::new();
    for &metric in &result.metrics {
        // (grid value, sign) of the last point where i and j were not tied
        let mut last: Option<(f64, f64)> = None;
        for point in &result.points {
            let Some(report) = point.reports.iter().find(|r| r.kind == metric) else {
                continue;
            };
            let orient = if report.larger_is_better { 1.0 } else { -1.0 };
            let diff = orient * (report.values[i] - report.values[j]);
            if diff == 0.0 {
                continue;
            }
            let sign = diff.signum();
            if let Some((prev_value, prev_sign)) = last {
                if sign != prev_sign {
                    out.push(Crossover {
                        metric,
                        pair: (ni.clone(), nj.clone()),
                        interval: (prev_value, point.value),
                        preferred_after: if sign > 0.0 { ni.clone() } else { nj.clone() },
                    });
                }
            }
            last = Some((point.value, sign));
        }
    }
    out
}

/// Narrows a SUCRA or P-score crossover with the analytic P-score.
///
/// Returns `None` when the metric has no analytic form, the model is not
/// normal, or the analytic difference does not change sign across the
/// interval (a Monte Carlo artifact).
pub fn refine_crossover(spec: &SweepSpec, crossover: &Crossover) -> Result<Option<(f64, f64)>> {
    if !matches!(crossover.metric, MetricKind::Sucra | MetricKind::PScore) || !spec.base.is_normal()
    {
        return Ok(None);
    }
    let i = spec.base.id_of(&crossover.pair.0)?;
    let j = spec.base.id_of(&crossover.pair.1)?;
    let gap = |x: f64| -> Result<f64> {
        let r = p_score(&spec.model_at(x)?)?;
        Ok(r.values[i] - r.values[j])
    };
    let (mut lo, mut hi) = crossover.interval;
    let mut f_lo = gap(lo)?;
    let f_hi = gap(hi)?;
    if f_lo == 0.0 || f_hi == 0.0 || f_lo.signum() == f_hi.signum() {
        return Ok(None);
    }
    while hi - lo > REFINE_WIDTH {
        let mid = 0.5 * (lo + hi);
        let f_mid = gap(mid)?;
        if f_mid == 0.0 {
            return Ok(Some((mid, mid)));
        }
        if f_mid.signum() == f_lo.signum() {
            lo = mid;
            f_lo = f_mid;
        } else {
            hi = mid;
        }
    }
    Ok(Some((lo, hi)))
}
