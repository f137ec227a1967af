//! Built-in models with published values to reproduce.
//!
//! Every model is embedded here so `reproduce` needs no files on disk.

use hierank::{
    cumulative_rank_probabilities, linear_grid, mean_rank, median_rank,
    monte_carlo_rank_probabilities, p_best, p_score, sucra, sweep_parameter, EffectModel, McConfig,
    MetricKind, MetricOptions, OutcomeDirection, SweepField, SweepResult, SweepSpec,
};
use serde::{Deserialize, Serialize};

use crate::error::{CliError, Result};

pub const PRESETS: [&str; 3] = ["table3_scenario1", "table4", "figure3_crossovers"];

/// Tolerance for percentages, in percentage points.
pub const PERCENT_TOL: f64 = 0.5;
/// Tolerance for mean and median ranks.
pub const RANK_TOL: f64 = 0.05;
/// Half-width of the window around a published crossover value.
pub const CROSSOVER_TOL: f64 = 0.5;

const ORDER: [&str; 4] = ["P", "A", "B", "C"];

/// Placebo and three actives, independent normals with SD 3.
pub fn scenario1() -> EffectModel {
    EffectModel::marginal_normal(
        OutcomeDirection::SmallerBetter,
        [
            ("P", 10.0, 3.0),
            ("A", 1.0, 3.0),
            ("B", 2.0, 3.0),
            ("C", 3.0, 3.0),
        ],
    )
    .expect("scenario 1 model is valid")
}

/// Means P = -2, A = 1, B = 1.5, C = 2 with unit SDs; SD_C is swept.
///
/// The outcome direction is not given with the figure. Under
/// `smaller_better` the analytic P-score puts the p_best (C, A) flip at
/// SD_C ≈ 1.6 and the SUCRA flip at SD_C ≈ 7.3, matching the reported 2
/// and 7.5. Under `larger_better` both flips fall at SD_C ≈ 1.0, so
/// `smaller_better` it is (placebo is then the pointwise-best extreme).
pub fn figure3() -> EffectModel {
    EffectModel::marginal_normal(
        OutcomeDirection::SmallerBetter,
        [
            ("P", -2.0, 1.0),
            ("A", 1.0, 1.0),
            ("B", 1.5, 1.0),
            ("C", 2.0, 1.0),
        ],
    )
    .expect("figure3 model is valid")
}

/// Published scenario-1 block, rows by metric, columns P, A, B, C.
pub const TABLE3_PUBLISHED: [(&str, [f64; 4]); 8] = [
    ("p_best (%)", [0.2, 48.0, 31.7, 20.1]),
    ("cp_2 (%)", [1.4, 79.3, 67.7, 51.7]),
    ("cp_3 (%)", [8.0, 98.8, 97.5, 95.7]),
    ("cp_4 (%)", [100.0, 100.0, 100.0, 100.0]),
    ("SUCRA (%)", [3.2, 75.2, 65.6, 56.0]),
    ("P-score (%)", [3.2, 75.2, 65.6, 56.0]),
    ("mean rank", [3.9, 1.7, 2.0, 2.3]),
    ("median rank", [4.0, 2.0, 2.0, 2.0]),
];

pub const TABLE4_SDS: [f64; 4] = [3.0, 10.0, 15.0, 20.0];

/// Published SUCRA (%) for each SD_A, columns P, A, B, C.
pub const TABLE4_PUBLISHED: [[f64; 4]; 4] = [
    [3.2, 75.3, 65.6, 55.9],
    [9.1, 63.9, 67.5, 59.5],
    [11.9, 59.9, 67.9, 60.3],
    [13.6, 57.7, 68.1, 60.6],
];

pub const FIGURE3_P_BEST_FLIP: f64 = 2.0;
pub const FIGURE3_SUCRA_FLIP: f64 = 7.5;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CellCheck {
    pub row: String,
    pub treatment: String,
    pub computed: f64,
    pub published: f64,
    pub abs_diff: f64,
    pub tolerance: f64,
    pub pass: bool,
}

impl CellCheck {
    fn new(row: &str, treatment: &str, computed: f64, published: f64, tolerance: f64) -> Self {
        let abs_diff = (computed - published).abs();
        Self {
            row: row.to_owned(),
            treatment: treatment.to_owned(),
            computed,
            published,
            abs_diff,
            tolerance,
            pass: abs_diff <= tolerance,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Reproduction {
    pub preset: String,
    pub seed: u64,
    pub n_draws: usize,
    pub checks: Vec<CellCheck>,
    pub all_pass: bool,
}

impl Reproduction {
    fn new(preset: &str, mc: &McConfig, checks: Vec<CellCheck>) -> Self {
        let all_pass = checks.iter().all(|c| c.pass);
        Self {
            preset: preset.to_owned(),
            seed: mc.seed,
            n_draws: mc.n_draws,
            checks,
            all_pass,
        }
    }
}

pub fn unknown_preset(name: &str) -> CliError {
    CliError::Invalid(format!(
        "unknown preset {name:?}; available presets: {}",
        PRESETS.join(", ")
    ))
}

pub fn reproduce(name: &str, mc: &McConfig) -> Result<Reproduction> {
    match name {
        "table3_scenario1" => reproduce_table3(mc),
        "table4" => reproduce_table4(mc),
        "figure3_crossovers" => reproduce_figure3(mc),
        other => Err(unknown_preset(other)),
    }
}

/// Scenario-1 values in published units: percents for probabilities, raw ranks.
pub fn table3_values(mc: &McConfig) -> Result<Vec<[f64; 4]>> {
    let model = scenario1();
    let p = monte_carlo_rank_probabilities(&model, mc)?;
    let cp = cumulative_rank_probabilities(&p);
    let pct = |v: &[f64]| -> [f64; 4] { std::array::from_fn(|i| 100.0 * v[i]) };
    let raw = |v: &[f64]| -> [f64; 4] { std::array::from_fn(|i| v[i]) };
    let cp_col = |rank: usize| -> [f64; 4] { std::array::from_fn(|i| 100.0 * cp.cum(i, rank)) };
    Ok(vec![
        pct(&p_best(&p).values),
        cp_col(2),
        cp_col(3),
        cp_col(4),
        pct(&sucra(&cp).values),
        pct(&p_score(&model)?.values),
        raw(&mean_rank(&p).values),
        raw(&median_rank(&p).values),
    ])
}

fn reproduce_table3(mc: &McConfig) -> Result<Reproduction> {
    let computed = table3_values(mc)?;
    let mut checks = Vec::new();
    for ((row, published), values) in TABLE3_PUBLISHED.iter().zip(&computed) {
        let tol = if row.ends_with("rank") {
            RANK_TOL
        } else {
            PERCENT_TOL
        };
        for (k, name) in ORDER.iter().enumerate() {
            checks.push(CellCheck::new(row, name, values[k], published[k], tol));
        }
    }
    Ok(Reproduction::new("table3_scenario1", mc, checks))
}

pub fn table4_spec(mc: &McConfig) -> SweepSpec {
    SweepSpec {
        base: scenario1(),
        target: 1,
        field: SweepField::Sd,
        grid: TABLE4_SDS.to_vec(),
        metrics: vec![MetricKind::Sucra],
        mc: *mc,
        options: MetricOptions::default(),
    }
}

fn reproduce_table4(mc: &McConfig) -> Result<Reproduction> {
    let result = sweep_parameter(&table4_spec(mc))?;
    let mut checks = Vec::new();
    for (index, published) in TABLE4_PUBLISHED.iter().enumerate() {
        let report = result
            .report(index, MetricKind::Sucra)
            .expect("sucra was swept");
        let row = format!("SUCRA (%) at SD_A = {}", TABLE4_SDS[index]);
        for (k, name) in ORDER.iter().enumerate() {
            checks.push(CellCheck::new(
                &row,
                name,
                100.0 * report.values[k],
                published[k],
                PERCENT_TOL,
            ));
        }
    }
    Ok(Reproduction::new("table4", mc, checks))
}

pub fn figure3_spec(mc: &McConfig) -> SweepSpec {
    SweepSpec {
        base: figure3(),
        target: 3,
        field: SweepField::Sd,
        grid: linear_grid(1.0, 10.0, 0.1).expect("fixed grid"),
        metrics: vec![MetricKind::PBest, MetricKind::Sucra],
        mc: *mc,
        options: MetricOptions::default(),
    }
}

/// Grid intervals where C and A swap order under `metric`.
pub fn flips(result: &SweepResult, metric: MetricKind) -> Vec<(f64, f64)> {
    result
        .crossovers
        .iter()
        .filter(|c| c.metric == metric)
        .filter(|c| (c.pair.0 == "A" && c.pair.1 == "C") || (c.pair.0 == "C" && c.pair.1 == "A"))
        .map(|c| c.interval)
        .collect()
}

/// A flip check passes when at least one (C, A) flip was seen and every
/// flip lies inside the window; the reported value is the midpoint of the
/// first flip's interval.
fn flip_check(row: &str, intervals: &[(f64, f64)], published: f64) -> CellCheck {
    let Some(first) = intervals.first() else {
        return CellCheck {
            row: row.to_owned(),
            treatment: "C vs A".into(),
            computed: f64::NAN,
            published,
            abs_diff: f64::INFINITY,
            tolerance: CROSSOVER_TOL,
            pass: false,
        };
    };
    let mid = 0.5 * (first.0 + first.1);
    let mut check = CellCheck::new(row, "C vs A", mid, published, CROSSOVER_TOL);
    let (lo, hi) = (published - CROSSOVER_TOL, published + CROSSOVER_TOL);
    check.pass = intervals
        .iter()
        .all(|&(a, b)| a >= lo - 1e-9 && b <= hi + 1e-9);
    check
}

fn reproduce_figure3(mc: &McConfig) -> Result<Reproduction> {
    let result = sweep_parameter(&figure3_spec(mc))?;
    let checks = vec![
        flip_check(
            "p_best crossover SD_C",
            &flips(&result, MetricKind::PBest),
            FIGURE3_P_BEST_FLIP,
        ),
        flip_check(
            "SUCRA crossover SD_C",
            &flips(&result, MetricKind::Sucra),
            FIGURE3_SUCRA_FLIP,
        ),
    ];
    Ok(Reproduction::new("figure3_crossovers", mc, checks))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn unknown_preset_lists_names() {
        let err = reproduce("table9", &McConfig::new(10, 1)).unwrap_err();
        assert_eq!(err.exit_code(), 2);
        assert!(err.to_string().contains("figure3_crossovers"));
    }

    #[test]
    fn flip_check_needs_a_flip() {
        assert!(!flip_check("x", &[], 2.0).pass);
        assert!(flip_check("x", &[(1.9, 2.0)], 2.0).pass);
        assert!(!flip_check("x", &[(1.9, 2.0), (2.6, 2.7)], 2.0).pass);
        // window edges are inclusive
        assert!(flip_check("x", &[(1.5, 1.6)], 2.0).pass);
    }

    #[test]
    fn table3_published_cells() {
        let n: usize = TABLE3_PUBLISHED.iter().map(|(_, r)| r.len()).sum();
        assert_eq!(n, 32);
    }
}
