use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use hierank_cli::output::OutputDocument;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_hierank"))
}

fn data(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR"))
        .join("data")
        .join(name)
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().expect("binary runs")
}

fn stdout(out: &Output) -> String {
    String::from_utf8(out.stdout.clone()).unwrap()
}

fn stderr(out: &Output) -> String {
    String::from_utf8(out.stderr.clone()).unwrap()
}

#[test]
fn compute_table_has_scenario1_layout() {
    let input = data("scenario1.json");
    let out = run(&[
        "compute",
        "--input",
        input.to_str().unwrap(),
        "--samples",
        "200000",
    ]);
    assert_eq!(out.status.code(), Some(0), "{}", stderr(&out));
    let text = stdout(&out);
    let header = text.lines().nth(1).unwrap();
    assert!(header.starts_with("Ranking metric"));
    for name in ["P", "A", "B", "C"] {
        assert!(header.split_whitespace().any(|w| w == name));
    }
    for row in [
        "p_best (%)",
        "cp_2 (%)",
        "cp_3 (%)",
        "SUCRA (%)",
        "P-score (%)",
        "Mean rank",
        "Median rank",
    ] {
        assert!(text.contains(row), "missing row {row}:\n{text}");
    }
    let pscore = text.lines().find(|l| l.starts_with("P-score")).unwrap();
    assert!(pscore.ends_with("3.2    75.3    65.7    55.9"), "{pscore}");
}

#[test]
fn two_identical_treatments_have_sucra_fifty() {
    let input = data("two_identical.json");
    let out = run(&["compute", "--input", input.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(0));
    let text = stdout(&out);
    let sucra = text.lines().find(|l| l.starts_with("SUCRA")).unwrap();
    assert_eq!(
        sucra.split_whitespace().skip(2).collect::<Vec<_>>(),
        ["50.0", "50.0"]
    );
}

#[test]
fn missing_input_is_an_io_error_with_no_output() {
    let dir = tempfile::tempdir().unwrap();
    let target = dir.path().join("out.json");
    let out = run(&[
        "compute",
        "--input",
        "/nonexistent/model.json",
        "--output",
        target.to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(1));
    assert!(out.stdout.is_empty());
    assert!(!target.exists());
}

#[test]
fn validation_failures_exit_two_and_name_the_problem() {
    let dir = tempfile::tempdir().unwrap();
    let cases = [
        (
            r#"{"schema_version":1,"direction":"smaller_better","treatments":[{"name":"A","mean":1,"sd":1}]}"#,
            "at least two",
        ),
        (
            r#"{"schema_version":1,"direction":"smaller_better","treatments":[{"name":"A","mean":1,"sd":1},{"name":"A","mean":2,"sd":1}]}"#,
            "duplicate",
        ),
        (
            r#"{"schema_version":1,"direction":"smaller_better","treatments":[{"name":"A","mean":1,"sd":0},{"name":"B","mean":2,"sd":1}]}"#,
            "non-positive standard deviation",
        ),
        (
            r#"{"schema_version":1,"direction":"sideways","treatments":[]}"#,
            "sideways",
        ),
        ("not json", "invalid input"),
    ];
    for (k, (body, needle)) in cases.iter().enumerate() {
        let path = dir.path().join(format!("case{k}.json"));
        std::fs::write(&path, body).unwrap();
        let out = run(&[
            "compute",
            "--input",
            path.to_str().unwrap(),
            "--samples",
            "1000",
        ]);
        assert_eq!(out.status.code(), Some(2), "case {k}: {}", stderr(&out));
        assert!(out.stdout.is_empty());
        let msg = stderr(&out).to_lowercase();
        assert!(msg.contains(needle), "case {k}: {msg}");
    }
}

#[test]
fn json_output_round_trips() {
    let input = data("ldl_threshold.json");
    let out = run(&[
        "compute",
        "--input",
        input.to_str().unwrap(),
        "--samples",
        "20000",
        "--format",
        "json",
    ]);
    assert_eq!(out.status.code(), Some(0));
    let text = stdout(&out);
    let doc = OutputDocument::from_json(&text).unwrap();
    assert_eq!(doc.to_json(), text);
    assert_eq!(doc.hierarchies[0].ordered, ["C", "B", "A"]);
    assert_eq!(doc.provenance.n_draws, 20000);
    assert!(doc.provenance.wall_time_ms.is_none());
    assert_eq!(doc.input_digest.as_ref().unwrap().len(), 64);
}

#[test]
fn timing_is_opt_in() {
    let input = data("two_identical.json");
    let out = run(&[
        "compute",
        "--input",
        input.to_str().unwrap(),
        "--samples",
        "1000",
        "--format",
        "json",
        "--timing",
    ]);
    let doc = OutputDocument::from_json(&stdout(&out)).unwrap();
    assert!(doc.provenance.wall_time_ms.is_some());
}

#[test]
fn csv_output_uses_full_precision() {
    let input = data("scenario1.json");
    let out = run(&[
        "compute",
        "--input",
        input.to_str().unwrap(),
        "--samples",
        "1000",
        "--format",
        "csv",
    ]);
    let text = stdout(&out);
    assert!(text.starts_with("metric,treatment,value\n"));
    let line = text.lines().find(|l| l.starts_with("p_score,A,")).unwrap();
    let v: f64 = line.rsplit(',').next().unwrap().parse().unwrap();
    assert!((v - 0.752_514).abs() < 1e-5);
    assert!(line.len() > "p_score,A,0.75".len());
}

#[test]
fn question_uses_input_block_or_flags() {
    let input = data("ldl_threshold.json");
    let path = input.to_str().unwrap();
    let out = run(&["question", "--input", path]);
    assert_eq!(out.status.code(), Some(0));
    assert!(stdout(&out).contains(": C\n"));

    let out = run(&[
        "question",
        "--input",
        path,
        "--kind",
        "smallest_estimated_mean",
    ]);
    assert_eq!(out.status.code(), Some(0));
    let text = stdout(&out);
    assert!(text.contains("most favorable estimated mean"));
    assert!(text.contains(": B\n"));

    let out = run(&[
        "question",
        "--input",
        path,
        "--kind",
        "largest_mean_advantage_vs_reference",
    ]);
    assert_eq!(out.status.code(), Some(2));

    let out = run(&["question", "--input", path, "--kind", "which_is_best"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(stderr(&out).contains("most_likely_best_value"));
}

#[test]
fn sweep_csv_and_crossover_summary() {
    let input = data("scenario1.json");
    let out = run(&[
        "sweep",
        "--input",
        input.to_str().unwrap(),
        "--target",
        "A",
        "--field",
        "sd",
        "--grid",
        "3,20",
        "--metrics",
        "sucra",
        "--pair",
        "A,B",
        "--samples",
        "50000",
        "--format",
        "csv",
    ]);
    assert_eq!(out.status.code(), Some(0), "{}", stderr(&out));
    let text = stdout(&out);
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("grid_value,metric,treatment,value"));
    let data_rows = text.lines().filter(|l| !l.starts_with('#')).count() - 1;
    assert_eq!(data_rows, 2 * 4);
    assert!(text.contains("# crossovers:"));
    assert!(text.contains("sucra (A, B): order flips in [3, 20]; B preferable after"));
}

#[test]
fn degenerate_grid_gives_one_point_and_no_crossovers() {
    let input = data("scenario1.json");
    let out = run(&[
        "sweep",
        "--input",
        input.to_str().unwrap(),
        "--target",
        "A",
        "--grid",
        "1:2:5",
        "--samples",
        "1000",
        "--format",
        "json",
    ]);
    assert_eq!(out.status.code(), Some(0));
    let doc = OutputDocument::from_json(&stdout(&out)).unwrap();
    let sweep = doc.sweep.unwrap();
    assert_eq!(sweep.grid(), [1.0]);
    assert!(sweep.crossovers.is_empty());
}

#[test]
fn sweep_rejects_bad_grid_and_unknown_treatment() {
    let input = data("scenario1.json");
    let path = input.to_str().unwrap();
    for args in [
        vec!["--target", "A", "--grid", "1:2"],
        vec!["--target", "A", "--grid", "3:1:1"],
        vec!["--target", "A", "--grid", "0,1"],
        vec!["--target", "Z", "--grid", "1:2:1"],
        vec!["--target", "A", "--grid", "1:2:1", "--pair", "A,Z"],
    ] {
        let out = bin()
            .args(["sweep", "--input", path, "--samples", "100"])
            .args(&args)
            .output()
            .unwrap();
        assert_eq!(out.status.code(), Some(2), "{args:?}");
        assert!(out.stdout.is_empty());
    }
}

#[test]
fn sweep_refine_narrows_p_score_crossover() {
    let out = run(&[
        "sweep",
        "--preset",
        "figure3_crossovers",
        "--grid",
        "6:9:1",
        "--metrics",
        "p_score",
        "--refine",
        "--format",
        "json",
        "--samples",
        "10",
    ]);
    assert_eq!(out.status.code(), Some(0), "{}", stderr(&out));
    let doc = OutputDocument::from_json(&stdout(&out)).unwrap();
    let refined = &doc.refined_crossovers;
    assert_eq!(refined.len(), 1);
    let (lo, hi) = refined[0].interval;
    assert!(hi - lo <= 0.01 && lo > 7.0 && hi < 7.5, "{lo} {hi}");
}

#[test]
fn unknown_preset_lists_available() {
    let out = run(&["reproduce", "table5"]);
    assert_eq!(out.status.code(), Some(2));
    let msg = stderr(&out);
    for name in ["table3_scenario1", "table4", "figure3_crossovers"] {
        assert!(msg.contains(name), "{msg}");
    }
}

#[test]
fn failing_reproduction_exits_nonzero_with_full_table() {
    // 50 draws cannot hit the published cells
    let out = run(&["reproduce", "table3_scenario1", "--samples", "50"]);
    assert_eq!(out.status.code(), Some(3));
    let text = stdout(&out);
    assert!(text.contains("FAIL"));
    assert_eq!(
        text.lines()
            .filter(|l| l.ends_with("PASS") || l.ends_with("FAIL"))
            .count(),
        32
    );
}

#[test]
fn output_flag_writes_file() {
    let dir = tempfile::tempdir().unwrap();
    let target = dir.path().join("out.csv");
    let input = data("posterior.json");
    let out = run(&[
        "compute",
        "--input",
        input.to_str().unwrap(),
        "--samples",
        "5000",
        "--format",
        "csv",
        "--output",
        target.to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(0), "{}", stderr(&out));
    assert!(out.stdout.is_empty());
    let text = std::fs::read_to_string(&target).unwrap();
    assert!(text.contains("sucra,A,"));
    // empirical models have no P-score
    assert!(!text.contains("p_score"));
}

#[test]
fn samples_flag_must_be_positive() {
    let input = data("scenario1.json");
    let out = run(&[
        "compute",
        "--input",
        input.to_str().unwrap(),
        "--samples",
        "0",
    ]);
    assert_eq!(out.status.code(), Some(2));
}
