//! Acceptance checks. Each criterion prints one `[PASS]` or `[FAIL]` line;
//! the process exits non-zero if any criterion fails.

use std::path::Path;
use std::process::Command;
use std::time::Instant;

use hierank::effects::DEFAULT_SEED;
use hierank::{
    beat_probability, cumulative_rank_probabilities, draw_samples, mean_rank,
    monte_carlo_rank_probabilities, p_best, p_score, rank_probabilities, relative_effects, sucra,
    sweep_parameter, EffectModel, McConfig, MetricKind, OutcomeDirection, RankProbabilityMatrix,
    TiePolicy,
};
use hierank_cli::presets::{self, CROSSOVER_TOL, PERCENT_TOL, RANK_TOL};
use rand::rngs::StdRng;
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};

const FULL_DRAWS: usize = 1_000_000;

struct Verdict {
    pass: bool,
    detail: String,
}

fn verdict(pass: bool, detail: impl Into<String>) -> Verdict {
    Verdict {
        pass,
        detail: detail.into(),
    }
}

fn names(t: usize) -> Vec<String> {
    (0..t).map(|i| format!("T{i}")).collect()
}

fn random_model(rng: &mut StdRng, t: usize, direction: OutcomeDirection) -> EffectModel {
    let entries: Vec<(String, f64, f64)> = names(t)
        .into_iter()
        .map(|n| (n, rng.random_range(-3.0..3.0), rng.random_range(0.3..3.0)))
        .collect();
    EffectModel::marginal_normal(direction, entries).unwrap()
}

fn ac1() -> Verdict {
    let start = Instant::now();
    let values = presets::table3_values(&McConfig::new(FULL_DRAWS, DEFAULT_SEED)).unwrap();
    let secs = start.elapsed().as_secs_f64();
    // p_best, cp_2, cp_3, SUCRA, mean rank, median rank
    let rows = [0, 1, 2, 4, 6, 7];
    let mut failed = Vec::new();
    let mut worst_pct: f64 = 0.0;
    let mut worst_rank: f64 = 0.0;
    for &r in &rows {
        let (label, published) = presets::TABLE3_PUBLISHED[r];
        let is_rank = label.ends_with("rank");
        for k in 0..4 {
            let diff = (values[r][k] - published[k]).abs();
            if is_rank {
                worst_rank = worst_rank.max(diff);
            } else {
                worst_pct = worst_pct.max(diff);
            }
            if diff > if is_rank { RANK_TOL } else { PERCENT_TOL } {
                failed.push(format!("{label}[{k}]={:.3}", values[r][k]));
            }
        }
    }
    verdict(
        failed.is_empty() && secs < 10.0,
        format!(
            "table3_scenario1, 1e6 draws: 24 cells, max |diff| {worst_pct:.3}pp / {worst_rank:.3} rank, {secs:.1}s{}",
            if failed.is_empty() { String::new() } else { format!("; off: {}", failed.join(", ")) }
        ),
    )
}

fn ac2() -> Verdict {
    let model = presets::scenario1();
    let analytic: Vec<f64> = p_score(&model)
        .unwrap()
        .values
        .iter()
        .map(|v| 100.0 * v)
        .collect();
    let published = presets::TABLE3_PUBLISHED[5].1;
    let gaps: Vec<f64> = analytic
        .iter()
        .zip(published)
        .map(|(a, p)| (a - p).abs())
        .collect();
    let analytic_ok = gaps.iter().all(|&g| g <= 0.05);

    let p =
        monte_carlo_rank_probabilities(&model, &McConfig::new(FULL_DRAWS, DEFAULT_SEED)).unwrap();
    let mc: Vec<f64> = sucra(&cumulative_rank_probabilities(&p))
        .values
        .iter()
        .map(|v| 100.0 * v)
        .collect();
    let mc_gap = analytic
        .iter()
        .zip(&mc)
        .map(|(a, m)| (a - m).abs())
        .fold(0.0, f64::max);
    verdict(
        analytic_ok && mc_gap <= 0.5,
        format!(
            "analytic P-score ({}) vs published (3.2, 75.2, 65.6, 56.0): |diff| ({}) limit 0.05pp; max |P-score - MC SUCRA| {mc_gap:.3}pp limit 0.5pp",
            analytic.iter().map(|v| format!("{v:.3}")).collect::<Vec<_>>().join(", "),
            gaps.iter().map(|v| format!("{v:.3}")).collect::<Vec<_>>().join(", "),
        ),
    )
}

fn ac3() -> Verdict {
    let result = sweep_parameter(&presets::table4_spec(&McConfig::new(
        FULL_DRAWS,
        DEFAULT_SEED,
    )))
    .unwrap();
    let mut worst: f64 = 0.0;
    for (index, published) in presets::TABLE4_PUBLISHED.iter().enumerate() {
        let report = result.report(index, MetricKind::Sucra).unwrap();
        for k in 0..4 {
            worst = worst.max((100.0 * report.values[k] - published[k]).abs());
        }
    }
    let last = result.report(3, MetricKind::Sucra).unwrap();
    let mut actives: Vec<usize> = vec![1, 2, 3];
    actives.sort_by(|&a, &b| last.values[b].total_cmp(&last.values[a]));
    let order: Vec<&str> = actives
        .iter()
        .map(|&i| last.treatments[i].as_str())
        .collect();
    verdict(
        worst <= PERCENT_TOL && order == ["B", "C", "A"],
        format!("table4 sweep: 16 SUCRA cells, max |diff| {worst:.3}pp; actives at SD_A = 20 ordered {}", order.join(", ")),
    )
}

fn ac4() -> Verdict {
    let start = Instant::now();
    let result = sweep_parameter(&presets::figure3_spec(&McConfig::new(
        FULL_DRAWS,
        DEFAULT_SEED,
    )))
    .unwrap();
    let secs = start.elapsed().as_secs_f64();
    let pb = presets::flips(&result, MetricKind::PBest);
    let su = presets::flips(&result, MetricKind::Sucra);
    let inside = |flips: &[(f64, f64)], centre: f64| {
        !flips.is_empty()
            && flips.iter().all(|&(a, b)| {
                a >= centre - CROSSOVER_TOL - 1e-9 && b <= centre + CROSSOVER_TOL + 1e-9
            })
    };
    let ordered = match (pb.last(), su.first()) {
        (Some(p), Some(s)) => p.1 <= s.0,
        _ => false,
    };
    verdict(
        inside(&pb, 2.0) && inside(&su, 7.5) && ordered && secs < 60.0,
        format!("figure3_crossovers sweep (91 points, 1e6 draws each): p_best flips {pb:?}, SUCRA flips {su:?}, {secs:.1}s"),
    )
}

/// Random doubly stochastic matrix as a convex mix of permutation matrices.
fn random_rank_matrix(rng: &mut StdRng, t: usize) -> Vec<Vec<f64>> {
    let k = rng.random_range(1..=2 * t);
    let weights: Vec<f64> = (0..k).map(|_| rng.random_range(0.01..1.0)).collect();
    let total: f64 = weights.iter().sum();
    let mut p = vec![vec![0.0; t]; t];
    let mut perm: Vec<usize> = (0..t).collect();
    for w in weights {
        perm.shuffle(rng);
        for (i, &r) in perm.iter().enumerate() {
            p[i][r] += w / total;
        }
    }
    p
}

fn ac5() -> Verdict {
    let mut rng = StdRng::seed_from_u64(5);
    let mut worst_identity: f64 = 0.0;
    for _ in 0..1000 {
        let t = rng.random_range(2..=8);
        let m =
            RankProbabilityMatrix::from_probabilities(names(t), random_rank_matrix(&mut rng, t))
                .unwrap();
        let mr = mean_rank(&m);
        let s = sucra(&cumulative_rank_probabilities(&m));
        for i in 0..t {
            let want = t as f64 - (t - 1) as f64 * s.values[i];
            worst_identity = worst_identity.max((mr.values[i] - want).abs());
        }
    }

    let mut worst_stochastic: f64 = 0.0;
    let mut worst_pbest: f64 = 0.0;
    let mut worst_antisym: f64 = 0.0;
    for k in 0..50 {
        let t = rng.random_range(2..=6);
        let model = random_model(&mut rng, t, OutcomeDirection::SmallerBetter);
        let p = monte_carlo_rank_probabilities(&model, &McConfig::new(20_000, k)).unwrap();
        for i in 0..t {
            let row: f64 = p.row(i).iter().sum();
            let col: f64 = (0..t).map(|j| p.prob(j, i + 1)).sum();
            worst_stochastic = worst_stochastic
                .max((row - 1.0).abs())
                .max((col - 1.0).abs());
        }
        let total: f64 = p_best(&p).values.iter().sum();
        worst_pbest = worst_pbest.max((total - 1.0).abs());
        for i in 0..t {
            for j in 0..t {
                if i != j {
                    let s = beat_probability(&model, i, j).unwrap()
                        + beat_probability(&model, j, i).unwrap();
                    worst_antisym = worst_antisym.max((s - 1.0).abs());
                }
            }
        }
    }

    let mut pscore_exact = true;
    let mut worst_z: f64 = 0.0;
    for t in 2..=6 {
        let entries: Vec<(String, f64, f64)> =
            names(t).into_iter().map(|n| (n, 1.5, 2.0)).collect();
        let model = EffectModel::marginal_normal(OutcomeDirection::SmallerBetter, entries).unwrap();
        pscore_exact &= p_score(&model).unwrap().values.iter().all(|&v| v == 0.5);
        let n = 200_000;
        let p = monte_carlo_rank_probabilities(&model, &McConfig::new(n, DEFAULT_SEED + t as u64))
            .unwrap();
        let s = sucra(&cumulative_rank_probabilities(&p));
        // ranks are uniform on 1..=T under equal means
        let tf = t as f64;
        let se = ((tf * tf - 1.0) / 12.0 / n as f64).sqrt() / (tf - 1.0);
        for v in s.values {
            worst_z = worst_z.max((v - 0.5).abs() / se);
        }
    }

    let pass = worst_identity <= 1e-9
        && worst_stochastic <= 1e-9
        && worst_pbest <= 1e-9
        && worst_antisym <= 1e-15
        && pscore_exact
        && worst_z <= 3.0;
    verdict(
        pass,
        format!(
            "identities: MeanR vs T-(T-1)SUCRA {worst_identity:.1e} over 1000 matrices; row/col sums {worst_stochastic:.1e}; sum p_best {worst_pbest:.1e}; beat antisymmetry {worst_antisym:.1e}; equal means P-score exactly 0.5: {pscore_exact}, MC SUCRA max {worst_z:.2} SE"
        ),
    )
}

fn ac6() -> Verdict {
    let mut rng = StdRng::seed_from_u64(6);
    let n = 200_000;
    let base = McConfig::new(n, DEFAULT_SEED);
    let (mut checks, mut misses) = (0usize, Vec::new());
    let mut worst_z: f64 = 0.0;
    for k in 0..100u64 {
        let t = rng.random_range(2..=6);
        let model = random_model(&mut rng, t, OutcomeDirection::SmallerBetter);
        let mc = base.derived(k);
        let samples = draw_samples(&model, n, mc.seed).unwrap();
        let p = rank_probabilities(&samples, TiePolicy::Random { seed: mc.seed }).unwrap();
        let s = sucra(&cumulative_rank_probabilities(&p));
        let analytic = p_score(&model).unwrap();
        let tf = t as f64;
        for i in 0..t {
            let row = p.row(i);
            let m1: f64 = row
                .iter()
                .enumerate()
                .map(|(r, q)| (r + 1) as f64 * q)
                .sum();
            let m2: f64 = row
                .iter()
                .enumerate()
                .map(|(r, q)| ((r + 1) as f64).powi(2) * q)
                .sum();
            let se = ((m2 - m1 * m1).max(0.0) / n as f64).sqrt() / (tf - 1.0);
            let z = (s.values[i] - analytic.values[i]).abs() / se;
            worst_z = worst_z.max(z);
            checks += 1;
            if z > 3.0 {
                misses.push(format!("model {k} sucra {} z={z:.2}", model.name(i)));
            }
        }
        let means = model.means();
        let sds = model.marginal_sds().unwrap();
        for i in 0..t {
            for j in (i + 1)..t {
                let want = hierank::normal::cdf(
                    (means[j] - means[i]) / (sds[i].powi(2) + sds[j].powi(2)).sqrt(),
                );
                let wins = samples.rows().filter(|r| r[i] < r[j]).count();
                let got = wins as f64 / n as f64;
                let se = (want * (1.0 - want) / n as f64).sqrt();
                let z = if se > 0.0 {
                    (got - want).abs() / se
                } else {
                    0.0
                };
                worst_z = worst_z.max(z);
                checks += 1;
                if z > 3.0 {
                    misses.push(format!(
                        "model {k} beat ({},{}) z={z:.2}",
                        model.name(i),
                        model.name(j)
                    ));
                }
            }
        }
    }
    verdict(
        misses.is_empty(),
        format!(
            "100 random models, 2e5 draws: {checks} checks, {} beyond 3 SE (max {worst_z:.2}){}",
            misses.len(),
            if misses.is_empty() {
                String::new()
            } else {
                format!(": {}", misses.join("; "))
            }
        ),
    )
}

fn argsort(v: &[f64]) -> Vec<usize> {
    let mut idx: Vec<usize> = (0..v.len()).collect();
    idx.sort_by(|&a, &b| v[a].total_cmp(&v[b]));
    idx
}

fn ac7() -> Verdict {
    let mut rng = StdRng::seed_from_u64(7);
    let mut order_ok = 0;
    for _ in 0..100 {
        let t = rng.random_range(2..=6);
        let model = random_model(&mut rng, t, OutcomeDirection::SmallerBetter);
        let by_mean = argsort(&model.means());
        let all =
            (0..t).all(|r| argsort(&relative_effects(&model, r).unwrap().differences) == by_mean);
        order_ok += usize::from(all);
    }
    let mut sign_ok = 0;
    for _ in 0..100 {
        let model = random_model(&mut rng, 2, OutcomeDirection::SmallerBetter);
        let d12 = relative_effects(&model, 1).unwrap().differences[0];
        let b = beat_probability(&model, 0, 1).unwrap();
        sign_ok += usize::from((d12 < 0.0) == (b > 0.5));
    }
    verdict(
        order_ok == 100 && sign_ok == 100,
        format!("argsort(M) = argsort(D_ref) for every reference in {order_ok}/100 models; D_12 < 0 iff P(1 beats 2) > 0.5 in {sign_ok}/100 two-arm models"),
    )
}

fn hierank_output(args: &[&str], threads: usize) -> (Option<i32>, Vec<u8>) {
    let out = Command::new(env!("CARGO_BIN_EXE_hierank"))
        .args(args)
        .args(["--threads", &threads.to_string()])
        .output()
        .expect("binary runs");
    (out.status.code(), out.stdout)
}

fn ac8() -> Verdict {
    let input = Path::new(env!("CARGO_MANIFEST_DIR")).join("data/scenario1.json");
    let input = input.to_str().unwrap();
    let invocations: Vec<Vec<&str>> = vec![
        vec![
            "compute",
            "--input",
            input,
            "--samples",
            "300000",
            "--format",
            "json",
        ],
        vec![
            "compute",
            "--input",
            input,
            "--samples",
            "300000",
            "--format",
            "csv",
        ],
        vec![
            "sweep",
            "--preset",
            "figure3_crossovers",
            "--grid",
            "1:3:0.25",
            "--samples",
            "100000",
            "--format",
            "json",
        ],
        vec![
            "sweep",
            "--input",
            input,
            "--target",
            "A",
            "--grid",
            "3,10,15,20",
            "--samples",
            "100000",
            "--format",
            "csv",
        ],
        vec![
            "reproduce",
            "table3_scenario1",
            "--samples",
            "300000",
            "--format",
            "json",
        ],
    ];
    let mut differing = Vec::new();
    for args in &invocations {
        let first = hierank_output(args, 1);
        let again = hierank_output(args, 1);
        let wide = hierank_output(args, 4);
        if first.0.is_none() || first.1.is_empty() || first != again || first != wide {
            differing.push(args[..2].join(" "));
        }
    }
    verdict(
        differing.is_empty(),
        format!(
            "{} invocations run twice with 1 thread and once with 4: {}",
            invocations.len(),
            if differing.is_empty() {
                "all byte-identical".to_owned()
            } else {
                format!("differ: {}", differing.join(", "))
            }
        ),
    )
}

fn main() {
    let criteria: [(&str, fn() -> Verdict); 8] = [
        ("AC1", ac1),
        ("AC2", ac2),
        ("AC3", ac3),
        ("AC4", ac4),
        ("AC5", ac5),
        ("AC6", ac6),
        ("AC7", ac7),
        ("AC8", ac8),
    ];
    let filter: Vec<String> = std::env::args()
        .skip(1)
        .filter(|a| !a.starts_with('-'))
        .collect();
    let mut failures = 0;
    for (id, check) in criteria {
        if !filter.is_empty() && !filter.iter().any(|f| id.contains(f.as_str())) {
            continue;
        }
        let v = check();
        failures += usize::from(!v.pass);
        println!(
            "[{}] {id} {}",
            if v.pass { "PASS" } else { "FAIL" },
            v.detail
        );
    }
    if failures > 0 {
        println!("{failures} acceptance criteria failed");
        std::process::exit(1);
    }
}
