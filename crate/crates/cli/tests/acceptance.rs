//! Acceptance suite: one pass/fail line per criterion.
//!
//! Criteria 1–4, 7 and 8 delegate to the library's frozen verification
//! suites; 5 and 6 check the pre-rank implementations against independent
//! brute-force oracles; 9 runs the postprocessing pipeline end to end; 10
//! exercises manifest-driven re-runs of the binary.
//!
//! Everything runs inside a single test so the measured runtimes are not
//! distorted by concurrent tests, and every criterion reports before the
//! final assertion.

use std::fs;
use std::path::Path;
use std::process::Command;
use std::time::Instant;

use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;

use rankcal::mst::{mst_length, DistanceCache};
use rankcal::postprocess::{
    run_pipeline, synthetic_series, DependenceStrategy, PostprocessConfig, SyntheticSeriesSpec,
};
use rankcal::prerank::{
    band_depth_general, band_depth_tie_free, univariate_ranks, PreRankMethod,
};
use rankcal::verify::{run_suite, CriterionResult, Suite};
use rankcal::{ForecastCase, RandomSource, RankHistogram};

struct Tally {
    lines: Vec<(String, bool)>,
}

impl Tally {
    fn new() -> Self {
        Self { lines: Vec::new() }
    }

    fn record(&mut self, number: u8, name: &str, passed: bool, details: String) {
        let line = format!(
            "criterion {number:2} [{}] {name}: {details}",
            if passed { "PASS" } else { "FAIL" }
        );
        println!("{line}");
        self.lines.push((line, passed));
    }

    fn record_suite(&mut self, number: u8, result: &CriterionResult) {
        self.record(number, result.id, result.passed, result.details.clone());
    }
}

fn suite_result<'a>(results: &'a [CriterionResult], id: &str) -> &'a CriterionResult {
    results
        .iter()
        .find(|r| r.id == id)
        .unwrap_or_else(|| panic!("suite exposes criterion `{id}`"))
}

// ---------------------------------------------------------------------------
// Criterion 5: band depth vs direct pair enumeration
// ---------------------------------------------------------------------------

fn band_depth_brute_force(case: &ForecastCase) -> Vec<f64> {
    let m = case.set_size();
    let d = case.dim();
    (0..m)
        .map(|target| {
            let x = case.element(target);
            let mut pairs = 0u64;
            for k in 0..d {
                for i in 0..m {
                    for j in (i + 1)..m {
                        let a = case.element(i)[k];
                        let b = case.element(j)[k];
                        if a.min(b) <= x[k] && x[k] <= a.max(b) {
                            pairs += 1;
                        }
                    }
                }
            }
            pairs as f64 / d as f64
        })
        .collect()
}

fn criterion_band_depth_oracle(tally: &mut Tally) {
    let mut rng = ChaCha8Rng::seed_from_u64(501);
    let mut checked = 0u32;
    let mut tied_cases = 0u32;
    let mut failures = Vec::new();
    for index in 0..1000u32 {
        let m = rng.random_range(2..=8);
        let d = rng.random_range(1..=4);
        let with_ties = rng.random::<bool>();
        let values: Vec<f64> = (0..m * d)
            .map(|_| {
                if with_ties {
                    f64::from(rng.random_range(-2..=2i32))
                } else {
                    rng.random_range(-10.0..10.0)
                }
            })
            .collect();
        let case = ForecastCase::from_flat(u64::from(index), values, d).unwrap();
        let table = univariate_ranks(&case);
        let general = band_depth_general(&table);
        if general != band_depth_brute_force(&case) {
            failures.push(format!("case {index}: rank form differs from enumeration"));
        }
        if table.has_ties() {
            tied_cases += 1;
        } else if general != band_depth_tie_free(&table) {
            failures.push(format!("case {index}: simplified form differs"));
        }
        checked += 1;
    }
    let passed = failures.is_empty() && tied_cases > 100;
    tally.record(
        5,
        "band-depth-enumeration",
        passed,
        format!(
            "{checked} cases ({tied_cases} with ties) against pair enumeration; {} mismatches",
            failures.len()
        ),
    );
}

// ---------------------------------------------------------------------------
// Criterion 6: MST vs exhaustive labeled-tree enumeration
// ---------------------------------------------------------------------------

fn exhaustive_min_tree_length(cache: &DistanceCache) -> f64 {
    let n = cache.len();
    if n == 2 {
        return cache.distance(0, 1);
    }
    let seq_len = n - 2;
    let total = n.pow(seq_len as u32);
    let mut best = f64::INFINITY;
    for code in 0..total {
        let mut seq = vec![0usize; seq_len];
        let mut c = code;
        for slot in seq.iter_mut() {
            *slot = c % n;
            c /= n;
        }
        let mut degree = vec![1usize; n];
        for &s in &seq {
            degree[s] += 1;
        }
        let mut length = 0.0;
        for &s in &seq {
            let leaf = (0..n).find(|&j| degree[j] == 1).unwrap();
            length += cache.distance(leaf, s);
            degree[leaf] = 0;
            degree[s] -= 1;
        }
        let mut ends = (0..n).filter(|&j| degree[j] == 1);
        length += cache.distance(ends.next().unwrap(), ends.next().unwrap());
        best = best.min(length);
    }
    best
}

fn criterion_mst_oracle(tally: &mut Tally) {
    let mut rng = ChaCha8Rng::seed_from_u64(601);
    let mut worst_gap = 0.0f64;
    let mut failures = 0u32;
    for _ in 0..200 {
        let n = rng.random_range(2..=6usize);
        let d = rng.random_range(1..=3usize);
        let points: Vec<Vec<f64>> = (0..n)
            .map(|_| (0..d).map(|_| rng.random_range(-5.0..5.0)).collect())
            .collect();
        let fast = mst_length(&points).unwrap();
        let cache = DistanceCache::from_points(&points).unwrap();
        let brute = exhaustive_min_tree_length(&cache);
        let gap = (fast - brute).abs() / brute.max(f64::MIN_POSITIVE);
        worst_gap = worst_gap.max(gap);
        if gap > 1e-12 {
            failures += 1;
        }
    }
    tally.record(
        6,
        "mst-enumeration",
        failures == 0,
        format!("200 cases vs every labeled spanning tree; worst relative gap {worst_gap:.2e}"),
    );
}

// ---------------------------------------------------------------------------
// Criterion 9: postprocessing pipeline
// ---------------------------------------------------------------------------

fn chi_square(histogram: &RankHistogram) -> f64 {
    histogram.summary().expect("non-empty histogram").chi_square
}

fn criterion_postprocess(tally: &mut Tally) {
    let spec = SyntheticSeriesSpec::default();
    let series = synthetic_series(&spec).expect("synthetic series");
    let source = RandomSource::new(0);
    let methods = [PreRankMethod::Average, PreRankMethod::BandDepth];
    let run = |strategy: DependenceStrategy| {
        let config = PostprocessConfig::new(50, strategy, true).unwrap();
        run_pipeline(&series, &config, &methods, &source).expect("pipeline runs")
    };
    let independent = run(DependenceStrategy::Independent);
    let ecc = run(DependenceStrategy::Ecc);
    let mvn = run(DependenceStrategy::Mvn);
    assert_eq!(independent.n_verification_days, 823);

    let mut failures = Vec::new();
    let mut detail = Vec::new();

    // Ignoring cross-lead dependence leaves the average ranks ∪-shaped.
    let avg_hist = &independent.multivariate[0].1;
    let expectation = avg_hist.uniform_expectation();
    let (low, high) = (
        avg_hist.counts()[0] as f64,
        *avg_hist.counts().last().unwrap() as f64,
    );
    if !(low > 1.5 * expectation && high > 1.5 * expectation) {
        failures.push(format!("independent avg ends {low}/{high} vs 1.5x{expectation:.1}"));
    }
    detail.push(format!("independent avg ends {low}/{high} (uniform {expectation:.1})"));
    let bd_hist = &independent.multivariate[1].1;
    let decile = bd_hist.m().div_ceil(10);
    let bottom: u64 = bd_hist.counts()[..decile].iter().sum();
    let top: u64 = bd_hist.counts()[bd_hist.m() - decile..].iter().sum();
    detail.push(format!("independent bd deciles {bottom}/{top}"));

    // Both dependence-aware strategies halve the miscalibration signal.
    for (label, result) in [("ecc", &ecc), ("mvn", &mvn)] {
        for (pos, method) in ["avg", "bd"].iter().enumerate() {
            let baseline = chi_square(&independent.multivariate[pos].1);
            let improved = chi_square(&result.multivariate[pos].1);
            if improved >= 0.5 * baseline {
                failures.push(format!(
                    "{label} {method} chi-square {improved:.1} not under half of {baseline:.1}"
                ));
            }
            detail.push(format!("{label} {method} {improved:.0} vs independent {baseline:.0}"));
        }
    }

    // Marginal calibration: every per-lead bin within four standard errors
    // of uniform, for every strategy.
    for (label, result) in [("independent", &independent), ("ecc", &ecc), ("mvn", &mvn)] {
        let mut worst = 0.0f64;
        for histogram in &result.univariate {
            let n = histogram.n_cases() as f64;
            let p = 1.0 / histogram.m() as f64;
            let se = (n * p * (1.0 - p)).sqrt();
            for &count in histogram.counts() {
                worst = worst.max((count as f64 - n * p).abs() / se);
            }
        }
        if worst > 4.0 {
            failures.push(format!("{label} univariate bin at {worst:.2} standard errors"));
        }
        detail.push(format!("{label} worst univariate bin {worst:.2}se"));
    }

    tally.record(
        9,
        "postprocess-pipeline",
        failures.is_empty(),
        if failures.is_empty() {
            detail.join("; ")
        } else {
            failures.join("; ")
        },
    );
}

// ---------------------------------------------------------------------------
// Criterion 10: manifest-driven re-runs are byte-identical
// ---------------------------------------------------------------------------

fn run_binary(args: &[&str]) -> std::process::Output {
    Command::new(env!("CARGO_BIN_EXE_rankcal"))
        .args(args)
        .env_remove("RANKCAL_SEED")
        .output()
        .expect("binary runs")
}

fn artifacts_match(a: &Path, b: &Path) -> Result<Vec<String>, String> {
    let mut names: Vec<String> = fs::read_dir(a)
        .map_err(|e| e.to_string())?
        .map(|entry| entry.unwrap().file_name().to_string_lossy().into_owned())
        .filter(|name| name != "manifest.json")
        .collect();
    names.sort();
    if names.is_empty() {
        return Err("no artifacts".into());
    }
    for name in &names {
        let left = fs::read(a.join(name)).map_err(|e| format!("{name}: {e}"))?;
        let right = fs::read(b.join(name)).map_err(|e| format!("{name}: {e}"))?;
        if left != right {
            return Err(format!("{name} differs"));
        }
    }
    Ok(names)
}

fn criterion_rerun_determinism(tally: &mut Tally) {
    let dir = tempfile::tempdir().unwrap();
    let mut failures = Vec::new();
    let mut detail = Vec::new();

    let scratch = dir.path().join("series");
    let commands: Vec<(&str, Vec<String>)> = vec![
        (
            "simulate",
            [
                "simulate", "--scenario", "iid:0:0.5", "--obs-scenario", "iid:0:1", "--d", "4",
                "--m", "10", "--cases", "400", "--method", "all", "--seed", "5", "--svg",
                "--dump-cases", "--dump-ranks",
            ]
            .iter()
            .map(ToString::to_string)
            .collect(),
        ),
        (
            "postprocess",
            [
                "postprocess", "--synthetic", "days=90,d=3,members=30", "--window", "30",
                "--strategy", "ecc", "--methods", "avg,mst", "--seed", "6", "--svg",
            ]
            .iter()
            .map(ToString::to_string)
            .collect(),
        ),
        (
            "oracle",
            ["oracle", "--m", "50", "--d", "12"]
                .iter()
                .map(ToString::to_string)
                .collect(),
        ),
    ];
    fs::create_dir_all(&scratch).unwrap();

    for (label, base_args) in commands {
        let first = dir.path().join(format!("{label}_a"));
        let second = dir.path().join(format!("{label}_b"));
        let mut args: Vec<String> = base_args.clone();
        args.extend(["--out".into(), first.to_str().unwrap().into()]);
        args.extend(["--workers".into(), "1".into()]);
        let output = run_binary(&args.iter().map(String::as_str).collect::<Vec<_>>());
        if !output.status.success() {
            failures.push(format!("{label}: run failed"));
            continue;
        }
        let manifest_path = first.join("manifest.json");
        let rerun_args = [
            "rerun",
            "--manifest",
            manifest_path.to_str().unwrap(),
            "--out",
            second.to_str().unwrap(),
            "--workers",
            "2",
        ];
        let output = run_binary(&rerun_args);
        if !output.status.success() {
            failures.push(format!(
                "{label}: rerun failed: {}",
                String::from_utf8_lossy(&output.stderr)
            ));
            continue;
        }
        match artifacts_match(&first, &second) {
            Ok(names) => detail.push(format!("{label}: {} artifacts identical", names.len())),
            Err(problem) => failures.push(format!("{label}: {problem}")),
        }
    }

    tally.record(
        10,
        "rerun-determinism",
        failures.is_empty(),
        if failures.is_empty() {
            detail.join("; ")
        } else {
            failures.join("; ")
        },
    );
}

// ---------------------------------------------------------------------------

#[test]
fn acceptance() {
    let started = Instant::now();
    let mut tally = Tally::new();

    let figures = run_suite(Suite::Figures).expect("figures suite");
    let tables = run_suite(Suite::Tables).expect("tables suite");
    let appendix = run_suite(Suite::Appendix).expect("appendix suite");

    tally.record_suite(1, suite_result(&figures, "uniform-calibration"));
    tally.record_suite(2, suite_result(&tables, "table-mean-ranks"));
    tally.record_suite(3, suite_result(&tables, "table-rank-variances"));
    tally.record_suite(4, suite_result(&appendix, "appendix-regime"));
    criterion_band_depth_oracle(&mut tally);
    criterion_mst_oracle(&mut tally);
    tally.record_suite(7, suite_result(&figures, "shape-diagnostics"));
    tally.record_suite(8, suite_result(&figures, "method-sensitivity"));
    criterion_postprocess(&mut tally);
    criterion_rerun_determinism(&mut tally);

    println!(
        "acceptance suite finished in {:.1}s",
        started.elapsed().as_secs_f64()
    );
    let failed: Vec<&str> = tally
        .lines
        .iter()
        .filter(|(_, passed)| !passed)
        .map(|(line, _)| line.as_str())
        .collect();
    assert!(
        failed.is_empty(),
        "{} of {} criteria failed:\n{}",
        failed.len(),
        tally.lines.len(),
        failed.join("\n")
    );
}
