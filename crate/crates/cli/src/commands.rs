//! Argument definitions and command dispatch.

use std::path::PathBuf;
use std::time::Instant;

use clap::{Args, Parser, Subcommand, ValueEnum};
use hierank::effects::{DEFAULT_DRAWS, DEFAULT_SEED};
use hierank::{
    answer_with_tolerance, cumulative_rank_probabilities, detect_crossovers, evaluate_metrics,
    linear_grid, refine_crossover, sweep_parameter, EffectModel, HierarchyQuestion, McConfig,
    MetricKind, MetricOptions, SweepField, SweepSpec,
};

use crate::error::{CliError, Result};
use crate::input::{load_input, LoadedInput};
use crate::output::{
    render_compute_csv, render_compute_table, render_crossover_summary, render_hierarchy,
    render_reproduction_csv, render_reproduction_table, render_sweep_csv, render_sweep_table,
    OutputDocument, RefinedCrossover, RunProvenance,
};
use crate::presets;

/// Exit status of a `reproduce` run with at least one failing cell.
pub const EXIT_REPRODUCTION_FAILED: i32 = 3;

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Table,
    Csv,
    Json,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum FieldArg {
    Sd,
    Mean,
}

#[derive(Debug, Parser)]
#[command(
    name = "hierank",
    version,
    about = "Treatment-hierarchy ranking metrics"
)]
pub struct Cli {
    /// Monte Carlo draws for rank-based metrics.
    #[arg(long, global = true)]
    pub samples: Option<usize>,
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    #[arg(long, global = true, value_enum, default_value_t = Format::Table)]
    pub format: Format,
    /// Write to this file instead of stdout.
    #[arg(long, global = true)]
    pub output: Option<PathBuf>,
    /// Worker threads; results do not depend on this.
    #[arg(long, global = true)]
    pub threads: Option<usize>,
    /// Record wall time in the output provenance.
    #[arg(long, global = true)]
    pub timing: bool,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Compute ranking metrics for a model.
    Compute(ComputeArgs),
    /// Answer one named hierarchy question.
    Question(QuestionArgs),
    /// Sweep one treatment's SD or mean and report crossovers.
    Sweep(SweepArgs),
    /// Recompute a published table and compare cell by cell.
    Reproduce(ReproduceArgs),
}

#[derive(Debug, Args)]
pub struct ComputeArgs {
    #[arg(long)]
    pub input: PathBuf,
    /// Comma-separated metric names; defaults to every metric the model
    /// and options allow.
    #[arg(long, value_delimiter = ',')]
    pub metrics: Vec<String>,
    #[arg(long)]
    pub threshold: Option<f64>,
    #[arg(long)]
    pub reference: Option<String>,
    #[arg(long, default_value_t = 0.0)]
    pub tie_tolerance: f64,
}

#[derive(Debug, Args)]
pub struct QuestionArgs {
    #[arg(long)]
    pub input: PathBuf,
    /// Question kind; falls back to the input's question block.
    #[arg(long)]
    pub kind: Option<String>,
    #[arg(long)]
    pub threshold: Option<f64>,
    #[arg(long)]
    pub reference: Option<String>,
    #[arg(long, default_value_t = 0.0)]
    pub tie_tolerance: f64,
}

#[derive(Debug, Args)]
pub struct SweepArgs {
    #[arg(long, conflicts_with = "preset", required_unless_present = "preset")]
    pub input: Option<PathBuf>,
    /// Start from a built-in sweep (table4 or figure3_crossovers).
    #[arg(long)]
    pub preset: Option<String>,
    #[arg(long)]
    pub target: Option<String>,
    #[arg(long, value_enum)]
    pub field: Option<FieldArg>,
    /// `start:stop:step` or a comma-separated list of values.
    #[arg(long)]
    pub grid: Option<String>,
    #[arg(long, value_delimiter = ',')]
    pub metrics: Vec<String>,
    /// Two comma-separated treatment names to report crossovers for.
    #[arg(long, value_delimiter = ',')]
    pub pair: Vec<String>,
    /// Narrow SUCRA / P-score crossovers with the analytic P-score.
    #[arg(long)]
    pub refine: bool,
    #[arg(long)]
    pub threshold: Option<f64>,
    #[arg(long)]
    pub reference: Option<String>,
}

#[derive(Debug, Args)]
pub struct ReproduceArgs {
    /// One of table3_scenario1, table4, figure3_crossovers.
    pub name: String,
}

/// Rendered output of a successful run.
#[derive(Debug, Clone, PartialEq)]
pub struct Outcome {
    pub text: String,
    pub exit_code: i32,
}

impl Outcome {
    fn ok(text: String) -> Self {
        Self { text, exit_code: 0 }
    }
}

struct Globals {
    mc: McConfig,
    format: Format,
    timing: Option<Instant>,
}

impl Globals {
    fn provenance(&self) -> RunProvenance {
        RunProvenance {
            version: env!("CARGO_PKG_VERSION").to_owned(),
            seed: self.mc.seed,
            n_draws: self.mc.n_draws,
            wall_time_ms: self.timing.map(|t| t.elapsed().as_millis() as u64),
        }
    }
}

pub fn run(cli: &Cli) -> Result<Outcome> {
    let n_draws = cli.samples.unwrap_or(DEFAULT_DRAWS);
    if n_draws == 0 {
        return Err(CliError::Invalid("--samples must be at least 1".into()));
    }
    let globals = Globals {
        mc: McConfig::new(n_draws, cli.seed.unwrap_or(DEFAULT_SEED)),
        format: cli.format,
        timing: cli.timing.then(Instant::now),
    };
    match &cli.command {
        Command::Compute(args) => run_compute(args, &globals),
        Command::Question(args) => run_question(args, &globals),
        Command::Sweep(args) => run_sweep(args, &globals),
        Command::Reproduce(args) => run_reproduce(args, &globals),
    }
}

fn parse_metrics(names: &[String]) -> Result<Vec<MetricKind>> {
    names
        .iter()
        .map(|n| {
            MetricKind::parse(n.trim()).ok_or_else(|| {
                let known: Vec<&str> = MetricKind::ALL.iter().map(|k| k.as_str()).collect();
                CliError::Invalid(format!(
                    "unknown metric {n:?}; expected one of {}",
                    known.join(", ")
                ))
            })
        })
        .collect()
}

fn lookup(model: &EffectModel, name: &str) -> Result<usize> {
    model
        .id_of(name)
        .map_err(|_| CliError::Invalid(format!("unknown treatment {name:?}")))
}

fn base_document(
    command: &str,
    loaded: Option<&LoadedInput>,
    model: &EffectModel,
    g: &Globals,
) -> OutputDocument {
    OutputDocument {
        command: command.to_owned(),
        input_digest: loaded.map(|l| l.digest.clone()),
        treatments: model.names(),
        direction: Some(model.direction()),
        provenance: g.provenance(),
        reports: Vec::new(),
        rank_probabilities: None,
        cumulative_rank_probabilities: None,
        hierarchies: Vec::new(),
        sweep: None,
        refined_crossovers: Vec::new(),
        reproduction: None,
    }
}

fn run_compute(args: &ComputeArgs, g: &Globals) -> Result<Outcome> {
    let loaded = load_input(&args.input)?;
    let model = &loaded.model;
    let block = loaded.document.question.as_ref();
    let reference_name = args
        .reference
        .clone()
        .or_else(|| block.and_then(|q| q.reference.clone()));
    let threshold = args.threshold.or_else(|| block.and_then(|q| q.threshold));
    let options = MetricOptions {
        threshold,
        side: None,
        reference: reference_name
            .as_deref()
            .map(|n| lookup(model, n))
            .transpose()?,
    };
    let mut kinds = if args.metrics.is_empty() {
        let mut k = vec![MetricKind::PointEstimate];
        if options.reference.is_some() {
            k.push(MetricKind::RelativeEffect);
        }
        k.extend([MetricKind::PBest, MetricKind::Sucra]);
        if model.is_normal() {
            k.push(MetricKind::PScore);
        }
        k.extend([MetricKind::MeanRank, MetricKind::MedianRank]);
        if options.threshold.is_some() {
            k.push(MetricKind::ThresholdProbability);
        }
        k
    } else {
        parse_metrics(&args.metrics)?
    };
    // the rank matrix is always reported, so always computed
    if !kinds.iter().any(|k| k.needs_ranks()) {
        kinds.push(MetricKind::PBest);
    }
    let (reports, ranks) = evaluate_metrics(model, &kinds, &g.mc, &options)?;
    let ranks = ranks.expect("rank-based metric requested");
    let mut doc = base_document("compute", Some(&loaded), model, g);
    doc.cumulative_rank_probabilities = Some(cumulative_rank_probabilities(&ranks));
    doc.rank_probabilities = Some(ranks);
    doc.reports = reports;
    if let Some(block) = block {
        let question = block.to_question()?;
        doc.hierarchies.push(answer_with_tolerance(
            model,
            &question,
            &g.mc,
            args.tie_tolerance,
        )?);
    }
    doc.provenance = g.provenance();
    Ok(Outcome::ok(match g.format {
        Format::Table => render_compute_table(&doc),
        Format::Csv => render_compute_csv(&doc),
        Format::Json => doc.to_json(),
    }))
}

fn run_question(args: &QuestionArgs, g: &Globals) -> Result<Outcome> {
    let loaded = load_input(&args.input)?;
    let block = loaded.document.question.as_ref();
    let question = match &args.kind {
        Some(kind) => HierarchyQuestion::from_parts(
            kind,
            args.reference
                .as_deref()
                .or_else(|| block.and_then(|q| q.reference.as_deref())),
            args.threshold.or_else(|| block.and_then(|q| q.threshold)),
        )?,
        None => match block {
            Some(q) => HierarchyQuestion::from_parts(
                &q.kind,
                args.reference.as_deref().or(q.reference.as_deref()),
                args.threshold.or(q.threshold),
            )?,
            None => return Err(CliError::Invalid(format!(
                "no question given: pass --kind (one of {}) or add a question block to the input",
                HierarchyQuestion::KINDS.join(", ")
            ))),
        },
    };
    let result = answer_with_tolerance(&loaded.model, &question, &g.mc, args.tie_tolerance)?;
    let mut doc = base_document("question", Some(&loaded), &loaded.model, g);
    doc.hierarchies.push(result);
    doc.provenance = g.provenance();
    let h = &doc.hierarchies[0];
    Ok(Outcome::ok(match g.format {
        Format::Table => render_hierarchy(h),
        Format::Csv => {
            let mut out = String::from("position,treatment,value,tie_group\n");
            for (pos, name) in h.ordered.iter().enumerate() {
                let value = h.report.value_of(name).unwrap_or(f64::NAN);
                let group = h
                    .tie_groups
                    .iter()
                    .position(|grp| grp.contains(name))
                    .map_or(0, |p| p + 1);
                out.push_str(&format!("{},{name},{value:?},{group}\n", pos + 1));
            }
            out
        }
        Format::Json => doc.to_json(),
    }))
}

/// Parses `start:stop:step` or `v1,v2,...`.
pub fn parse_grid(s: &str) -> Result<Vec<f64>> {
    let bad = |why: &str| CliError::Invalid(format!("malformed grid {s:?}: {why}"));
    let number = |t: &str| -> Result<f64> {
        t.trim()
            .parse::<f64>()
            .map_err(|_| bad(&format!("{t:?} is not a number")))
    };
    if s.contains(':') {
        let parts: Vec<&str> = s.split(':').collect();
        if parts.len() != 3 {
            return Err(bad("expected start:stop:step"));
        }
        let (start, stop, step) = (number(parts[0])?, number(parts[1])?, number(parts[2])?);
        linear_grid(start, stop, step).map_err(|e| bad(&e.to_string()))
    } else {
        let values = s.split(',').map(number).collect::<Result<Vec<f64>>>()?;
        if values.is_empty() {
            return Err(bad("no values"));
        }
        Ok(values)
    }
}

fn run_sweep(args: &SweepArgs, g: &Globals) -> Result<Outcome> {
    let (loaded, mut spec, mut pair) = match (&args.input, &args.preset) {
        (Some(path), _) => {
            let loaded = load_input(path)?;
            let base = loaded.model.clone();
            let spec = SweepSpec {
                base,
                target: usize::MAX,
                field: SweepField::Sd,
                grid: Vec::new(),
                metrics: vec![MetricKind::PBest, MetricKind::Sucra],
                mc: g.mc,
                options: MetricOptions::default(),
            };
            (Some(loaded), spec, None)
        }
        (None, Some(name)) => match name.as_str() {
            "table4" => (None, presets::table4_spec(&g.mc), None),
            "figure3_crossovers" => (
                None,
                presets::figure3_spec(&g.mc),
                Some(("C".to_owned(), "A".to_owned())),
            ),
            other => {
                return Err(CliError::Invalid(format!(
                    "unknown sweep preset {other:?}; available: table4, figure3_crossovers"
                )))
            }
        },
        (None, None) => return Err(CliError::Invalid("sweep needs --input or --preset".into())),
    };
    if let Some(target) = &args.target {
        spec.target = lookup(&spec.base, target)?;
    }
    if spec.target == usize::MAX {
        return Err(CliError::Invalid("sweep needs --target".into()));
    }
    if let Some(field) = args.field {
        spec.field = match field {
            FieldArg::Sd => SweepField::Sd,
            FieldArg::Mean => SweepField::Mean,
        };
    }
    if let Some(grid) = &args.grid {
        spec.grid = parse_grid(grid)?;
    }
    if spec.grid.is_empty() {
        return Err(CliError::Invalid("sweep needs --grid".into()));
    }
    if !args.metrics.is_empty() {
        spec.metrics = parse_metrics(&args.metrics)?;
    }
    if let Some(reference) = &args.reference {
        spec.options.reference = Some(lookup(&spec.base, reference)?);
    }
    if args.threshold.is_some() {
        spec.options.threshold = args.threshold;
    }
    if !args.pair.is_empty() {
        if args.pair.len() != 2 {
            return Err(CliError::Invalid(
                "--pair takes exactly two treatment names".into(),
            ));
        }
        for name in &args.pair {
            lookup(&spec.base, name)?;
        }
        pair = Some((args.pair[0].clone(), args.pair[1].clone()));
    }
    let result = sweep_parameter(&spec)?;
    let mut refined = Vec::new();
    if args.refine {
        let candidates = match &pair {
            Some((a, b)) => detect_crossovers(&result, (a, b))?,
            None => result.crossovers.clone(),
        };
        for c in &candidates {
            if let Some(interval) = refine_crossover(&spec, c)? {
                refined.push(RefinedCrossover {
                    metric: c.metric,
                    pair: c.pair.clone(),
                    interval,
                });
            }
        }
    }
    let mut doc = base_document("sweep", loaded.as_ref(), &spec.base, g);
    doc.sweep = Some(result);
    doc.refined_crossovers = refined;
    doc.provenance = g.provenance();
    let pair_ref = pair.as_ref().map(|(a, b)| (a.as_str(), b.as_str()));
    Ok(Outcome::ok(match g.format {
        Format::Table => render_sweep_table(&doc, pair_ref),
        Format::Csv => {
            let mut out = render_sweep_csv(doc.sweep.as_ref().expect("sweep set"));
            // the summary goes after the data as comment lines
            for line in render_crossover_summary(&doc, pair_ref).lines() {
                out.push_str("# ");
                out.push_str(line);
                out.push('\n');
            }
            out
        }
        Format::Json => doc.to_json(),
    }))
}

fn run_reproduce(args: &ReproduceArgs, g: &Globals) -> Result<Outcome> {
    if !presets::PRESETS.contains(&args.name.as_str()) {
        return Err(presets::unknown_preset(&args.name));
    }
    let rep = presets::reproduce(&args.name, &g.mc)?;
    let exit_code = if rep.all_pass {
        0
    } else {
        EXIT_REPRODUCTION_FAILED
    };
    let text = match g.format {
        Format::Table => render_reproduction_table(&rep),
        Format::Csv => render_reproduction_csv(&rep),
        Format::Json => {
            let model = match args.name.as_str() {
                "figure3_crossovers" => presets::figure3(),
                _ => presets::scenario1(),
            };
            let mut doc = base_document("reproduce", None, &model, g);
            doc.reproduction = Some(rep);
            doc.provenance = g.provenance();
            doc.to_json()
        }
    };
    Ok(Outcome { text, exit_code })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn grid_forms() {
        assert_eq!(
            parse_grid("3,10,15,20").unwrap(),
            vec![3.0, 10.0, 15.0, 20.0]
        );
        assert_eq!(parse_grid("1:2:0.5").unwrap(), vec![1.0, 1.5, 2.0]);
        assert_eq!(parse_grid("1:2:5").unwrap(), vec![1.0]);
        for bad in ["1:2", "a:2:1", "1:2:0", "2:1:0.1", "1,,2", ""] {
            let err = parse_grid(bad).unwrap_err();
            assert_eq!(err.exit_code(), 2, "{bad}");
        }
    }

    #[test]
    fn unknown_metric_is_rejected() {
        let err = parse_metrics(&["sucra".into(), "bogus".into()]).unwrap_err();
        assert!(err.to_string().contains("bogus"));
    }

    #[test]
    fn cli_definition_is_consistent() {
        use clap::CommandFactory;
        Cli::command().debug_assert();
    }
}
