//! The machine-readable output document and its table / CSV renderings.

use std::fmt::Write as _;

use hierank::metrics::round_half_away;
use hierank::{
    CumulativeRankMatrix, HierarchyResult, MetricKind, MetricReport, OutcomeDirection,
    RankProbabilityMatrix, SweepResult,
};
use serde::{Deserialize, Serialize};

use crate::presets::Reproduction;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunProvenance {
    pub version: String,
    pub seed: u64,
    pub n_draws: usize,
    /// Only present with `--timing`; omitted by default so that output is
    /// byte-reproducible.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub wall_time_ms: Option<u64>,
}

/// A crossover narrowed with the analytic P-score.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RefinedCrossover {
    pub metric: MetricKind,
    pub pair: (String, String),
    pub interval: (f64, f64),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OutputDocument {
    pub command: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub input_digest: Option<String>,
    pub treatments: Vec<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub direction: Option<OutcomeDirection>,
    pub provenance: RunProvenance,
    #[serde(default)]
    pub reports: Vec<MetricReport>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub rank_probabilities: Option<RankProbabilityMatrix>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub cumulative_rank_probabilities: Option<CumulativeRankMatrix>,
    #[serde(default)]
    pub hierarchies: Vec<HierarchyResult>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sweep: Option<SweepResult>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub refined_crossovers: Vec<RefinedCrossover>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub reproduction: Option<Reproduction>,
}

impl OutputDocument {
    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("output serializes");
        s.push('\n');
        s
    }

    pub fn from_json(s: &str) -> serde_json::Result<Self> {
        serde_json::from_str(s)
    }
}

/// Percent with one decimal, rounded half away from zero.
pub fn percent(v: f64) -> String {
    format!("{:.1}", round_half_away(100.0 * v, 1))
}

fn one_decimal(v: f64) -> String {
    format!("{:.1}", round_half_away(v, 1))
}

fn label(report: &MetricReport) -> String {
    match report.kind {
        MetricKind::PointEstimate => "Point estimate M_i".into(),
        MetricKind::RelativeEffect => format!(
            "D_i vs {}",
            report.reference.as_deref().unwrap_or("reference")
        ),
        MetricKind::PBest => "p_best (%)".into(),
        MetricKind::Sucra => "SUCRA (%)".into(),
        MetricKind::PScore => "P-score (%)".into(),
        MetricKind::MeanRank => "Mean rank".into(),
        MetricKind::MedianRank => "Median rank".into(),
        MetricKind::ThresholdProbability => match report.threshold {
            Some(c) => format!("P(threshold {c}) (%)"),
            None => "Threshold prob. (%)".into(),
        },
    }
}

fn cell(report: &MetricReport, v: f64) -> String {
    match report.kind {
        k if k.is_probability() => percent(v),
        MetricKind::MeanRank => one_decimal(v),
        MetricKind::MedianRank => format!("{v:.0}"),
        _ => format!("{v:.3}"),
    }
}

struct Table {
    rows: Vec<(String, Vec<String>)>,
}

impl Table {
    fn render(&self, header: &[String]) -> String {
        let label_w = self
            .rows
            .iter()
            .map(|(l, _)| l.chars().count())
            .chain(std::iter::once("Ranking metric".len()))
            .max()
            .unwrap_or(0);
        let col_w = self
            .rows
            .iter()
            .flat_map(|(_, cells)| cells.iter().map(|c| c.len()))
            .chain(header.iter().map(|h| h.chars().count()))
            .max()
            .unwrap_or(0)
            .max(6);
        let mut out = String::new();
        let _ = write!(out, "{:<label_w$}", "Ranking metric");
        for h in header {
            let _ = write!(out, "  {h:>col_w$}");
        }
        out.push('\n');
        for (l, cells) in &self.rows {
            let pad = label_w - l.chars().count();
            let _ = write!(out, "{l}{}", " ".repeat(pad));
            for c in cells {
                let _ = write!(out, "  {c:>col_w$}");
            }
            out.push('\n');
        }
        out
    }
}

/// Metrics as rows, treatments as columns, in the order p_best, cp_2..cp_T,
/// SUCRA, P-score, mean and median rank, followed by any other reports.
pub fn render_compute_table(doc: &OutputDocument) -> String {
    let mut rows = Vec::new();
    let find = |k: MetricKind| doc.reports.iter().filter(move |r| r.kind == k);
    for r in find(MetricKind::PBest) {
        rows.push((label(r), r.values.iter().map(|&v| cell(r, v)).collect()));
    }
    if let Some(cp) = &doc.cumulative_rank_probabilities {
        for rank in 2..=cp.len() {
            rows.push((
                format!("cp_{rank} (%)"),
                (0..cp.len()).map(|i| percent(cp.cum(i, rank))).collect(),
            ));
        }
    }
    for kind in [
        MetricKind::Sucra,
        MetricKind::PScore,
        MetricKind::MeanRank,
        MetricKind::MedianRank,
        MetricKind::PointEstimate,
        MetricKind::RelativeEffect,
        MetricKind::ThresholdProbability,
    ] {
        for r in find(kind) {
            rows.push((label(r), r.values.iter().map(|&v| cell(r, v)).collect()));
        }
    }
    let mut out = String::new();
    let _ = writeln!(
        out,
        "# draws: {}  seed: {}{}",
        doc.provenance.n_draws,
        doc.provenance.seed,
        doc.direction
            .map(|d| format!("  direction: {}", d.as_str()))
            .unwrap_or_default()
    );
    out.push_str(&Table { rows }.render(&doc.treatments));
    if !doc.hierarchies.is_empty() {
        out.push('\n');
        for h in &doc.hierarchies {
            out.push_str(&render_hierarchy(h));
        }
    }
    out
}

pub fn render_hierarchy(h: &HierarchyResult) -> String {
    let groups: Vec<String> = h
        .tie_groups
        .iter()
        .map(|g| {
            if g.len() == 1 {
                g[0].clone()
            } else {
                format!("[{}]", g.join(" = "))
            }
        })
        .collect();
    format!(
        "{}\n  hierarchy ({}): {}\n",
        h.preferable_label(),
        h.report.kind,
        groups.join(" > ")
    )
}

fn csv_number(v: f64) -> String {
    // shortest round-trip representation; always uses '.'
    format!("{v:?}")
}

/// Long-format CSV: `metric,treatment,value`.
pub fn render_compute_csv(doc: &OutputDocument) -> String {
    let mut out = String::from("metric,treatment,value\n");
    for r in &doc.reports {
        for (t, &v) in r.treatments.iter().zip(&r.values) {
            let _ = writeln!(out, "{},{},{}", r.kind, t, csv_number(v));
        }
    }
    if let Some(p) = &doc.rank_probabilities {
        for rank in 1..=p.len() {
            for (i, t) in p.treatments().iter().enumerate() {
                let _ = writeln!(out, "p_rank_{rank},{t},{}", csv_number(p.prob(i, rank)));
            }
        }
    }
    if let Some(cp) = &doc.cumulative_rank_probabilities {
        for rank in 1..=cp.len() {
            for (i, t) in cp.treatments().iter().enumerate() {
                let _ = writeln!(out, "cp_{rank},{t},{}", csv_number(cp.cum(i, rank)));
            }
        }
    }
    out
}

/// One row per grid point, metric and treatment.
pub fn render_sweep_csv(sweep: &SweepResult) -> String {
    let mut out = String::from("grid_value,metric,treatment,value\n");
    for point in &sweep.points {
        for r in &point.reports {
            for (t, &v) in r.treatments.iter().zip(&r.values) {
                let _ = writeln!(
                    out,
                    "{},{},{},{}",
                    csv_number(point.value),
                    r.kind,
                    t,
                    csv_number(v)
                );
            }
        }
    }
    out
}

pub fn render_crossover_summary(doc: &OutputDocument, pair: Option<(&str, &str)>) -> String {
    let Some(sweep) = &doc.sweep else {
        return String::new();
    };
    let mut out = String::from("crossovers:\n");
    let mut any = false;
    for c in &sweep.crossovers {
        if let Some((a, b)) = pair {
            let matches = (c.pair.0 == a && c.pair.1 == b) || (c.pair.0 == b && c.pair.1 == a);
            if !matches {
                continue;
            }
        }
        any = true;
        let _ = writeln!(
            out,
            "  {} ({}, {}): order flips in [{}, {}]; {} preferable after",
            c.metric, c.pair.0, c.pair.1, c.interval.0, c.interval.1, c.preferred_after
        );
    }
    for r in &doc.refined_crossovers {
        let _ = writeln!(
            out,
            "  {} ({}, {}): analytic refinement [{:.4}, {:.4}]",
            r.metric, r.pair.0, r.pair.1, r.interval.0, r.interval.1
        );
    }
    if !any {
        out.push_str("  none\n");
    }
    out
}

/// Grid values as rows, `metric:treatment` as columns.
pub fn render_sweep_table(doc: &OutputDocument, pair: Option<(&str, &str)>) -> String {
    let Some(sweep) = &doc.sweep else {
        return String::new();
    };
    let mut header = Vec::new();
    for &m in &sweep.metrics {
        for t in &sweep.treatments {
            header.push(format!("{m}:{t}"));
        }
    }
    let mut rows = Vec::new();
    for point in &sweep.points {
        let mut cells = Vec::new();
        for &m in &sweep.metrics {
            if let Some(r) = point.reports.iter().find(|r| r.kind == m) {
                cells.extend(r.values.iter().map(|&v| cell(r, v)));
            }
        }
        rows.push((format!("{} = {}", sweep.field.as_str(), point.value), cells));
    }
    let mut out = format!(
        "# sweep of {} {} over {} grid points; draws: {}  seed: {}\n",
        sweep.target,
        sweep.field.as_str(),
        sweep.points.len(),
        doc.provenance.n_draws,
        doc.provenance.seed
    );
    out.push_str(&Table { rows }.render(&header));
    out.push('\n');
    out.push_str(&render_crossover_summary(doc, pair));
    out
}

pub fn render_reproduction_table(rep: &Reproduction) -> String {
    let mut out = format!(
        "# reproduce {}  draws: {}  seed: {}\n",
        rep.preset, rep.n_draws, rep.seed
    );
    let _ = writeln!(
        out,
        "{:<28} {:>9} {:>10} {:>10} {:>9} {:>9}  result",
        "cell", "treatment", "computed", "published", "abs diff", "tolerance"
    );
    for c in &rep.checks {
        let _ = writeln!(
            out,
            "{:<28} {:>9} {:>10.3} {:>10.3} {:>9.3} {:>9.3}  {}",
            c.row,
            c.treatment,
            c.computed,
            c.published,
            c.abs_diff,
            c.tolerance,
            if c.pass { "PASS" } else { "FAIL" }
        );
    }
    let passed = rep.checks.iter().filter(|c| c.pass).count();
    let _ = writeln!(out, "{passed}/{} cells pass", rep.checks.len());
    out
}

pub fn render_reproduction_csv(rep: &Reproduction) -> String {
    let mut out =
        String::from("preset,cell,treatment,computed,published,abs_diff,tolerance,result\n");
    for c in &rep.checks {
        let _ = writeln!(
            out,
            "{},{},{},{},{},{},{},{}",
            rep.preset,
            c.row,
            c.treatment,
            csv_number(c.computed),
            csv_number(c.published),
            csv_number(c.abs_diff),
            csv_number(c.tolerance),
            if c.pass { "PASS" } else { "FAIL" }
        );
    }
    out
}
