//! Subcommand implementations over fully resolved parameter sets.
//!
//! Each `run_*` function is a pure function of its serializable parameters
//! and the output directory, which is what makes manifest-driven re-runs
//! byte-identical.

use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use rankcal::postprocess::{
    run_pipeline, synthetic_series, DependenceStrategy, PostprocessConfig, SyntheticSeriesSpec,
};
use rankcal::prerank::PreRankMethod;
use rankcal::simulate::{parse_scenario, run_scenario_multi, ScenarioConfig, ScenarioSampler};
use rankcal::verify::{run_suite, Suite};
use rankcal::{oracle, rank_case, RandomSource};

use crate::artifacts::{
    write_histogram_csv, write_histogram_svg, write_json, HistogramSummaryReport,
};
use crate::error::{data, usage, CliResult};
use crate::tables::{read_cases, read_series, write_cases, write_ranks};

/// What a command produced, for the manifest.
#[derive(Debug, Default)]
pub struct CommandOutcome {
    pub inputs: Vec<String>,
    pub outputs: Vec<String>,
    pub verify_failed: bool,
}

impl CommandOutcome {
    fn output(&mut self, name: impl Into<String>) {
        self.outputs.push(name.into());
    }
}

/// Parse a `--method` flag: one of the method labels or `all`.
pub fn parse_methods(name: &str, mst_standardize: bool) -> CliResult<Vec<PreRankMethod>> {
    let one = |label: &str| -> CliResult<PreRankMethod> {
        match label {
            "mv" => Ok(PreRankMethod::Multivariate),
            "bd" => Ok(PreRankMethod::BandDepth),
            "avg" => Ok(PreRankMethod::Average),
            "mst" => Ok(PreRankMethod::Mst {
                standardize: mst_standardize,
            }),
            other => Err(usage(format!(
                "unknown method `{other}` (expected mv, bd, avg, mst or all)"
            ))),
        }
    };
    if name == "all" {
        return Ok(vec![
            PreRankMethod::Multivariate,
            PreRankMethod::BandDepth,
            PreRankMethod::Average,
            PreRankMethod::Mst {
                standardize: mst_standardize,
            },
        ]);
    }
    name.split(',').map(|label| one(label.trim())).collect()
}

fn ensure_out_dir(out: &Path) -> CliResult<()> {
    fs::create_dir_all(out)?;
    Ok(())
}

// ---------------------------------------------------------------------------
// simulate
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SimulateParams {
    /// Forecast-model scenario name.
    pub scenario: String,
    /// Observation-model scenario name.
    pub obs_scenario: String,
    pub d: usize,
    pub m: usize,
    pub cases: u64,
    pub method: String,
    pub mst_standardize: bool,
    pub seed: u64,
    pub svg: bool,
    pub dump_cases: bool,
    pub dump_ranks: bool,
}

pub fn run_simulate(params: &SimulateParams, out: &Path) -> CliResult<CommandOutcome> {
    let methods = parse_methods(&params.method, params.mst_standardize)?;
    let fcst = parse_scenario(&params.scenario, params.d).map_err(usage)?;
    let obs = parse_scenario(&params.obs_scenario, params.d).map_err(usage)?;
    let config = ScenarioConfig::new(obs, fcst, params.m, params.cases, params.seed)
        .map_err(usage)?;
    let runs = run_scenario_multi(&config, &methods).map_err(data)?;

    ensure_out_dir(out)?;
    let mut outcome = CommandOutcome::default();
    for ranks in &runs {
        let label = ranks.method.label();
        let histogram = ranks.observation_histogram(params.m).map_err(data)?;
        let csv_name = format!("hist_{label}.csv");
        write_histogram_csv(&out.join(&csv_name), &histogram)?;
        outcome.output(csv_name);
        let json_name = format!("summary_{label}.json");
        write_json(
            &out.join(&json_name),
            &HistogramSummaryReport::new(label, &histogram)?,
        )?;
        outcome.output(json_name);
        if params.svg {
            let svg_name = format!("hist_{label}.svg");
            write_histogram_svg(&out.join(&svg_name), &histogram, label)?;
            outcome.output(svg_name);
        }
        if params.dump_ranks {
            let ranks_name = format!("ranks_{label}.csv");
            let rows: Vec<(String, u32)> = ranks
                .observation
                .iter()
                .enumerate()
                .map(|(case_index, &rank)| (case_index.to_string(), rank))
                .collect();
            write_ranks(&out.join(&ranks_name), &rows)?;
            outcome.output(ranks_name);
        }
    }
    if params.dump_cases {
        // Cases regenerate deterministically from their index substreams.
        let sampler = ScenarioSampler::new(&config).map_err(data)?;
        let source = RandomSource::new(params.seed);
        let cases: Vec<_> = (0..params.cases)
            .map(|case_index| sampler.sample_case(case_index, &source))
            .collect();
        write_cases(&out.join("cases.csv"), &cases)?;
        outcome.output("cases.csv");
    }
    Ok(outcome)
}

// ---------------------------------------------------------------------------
// rank
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RankParams {
    pub input: String,
    pub method: String,
    pub mst_standardize: bool,
    pub seed: u64,
}

pub fn run_rank(params: &RankParams, out: &Path) -> CliResult<CommandOutcome> {
    let methods = parse_methods(&params.method, params.mst_standardize)?;
    let [method] = methods.as_slice() else {
        return Err(usage("rank takes a single method (mv, bd, avg or mst)"));
    };
    let cases = read_cases(Path::new(&params.input))?;
    let source = RandomSource::new(params.seed);
    let rows = cases
        .iter()
        .map(|case| {
            rank_case(case, *method, &source)
                .map(|rank| (case.case_id().to_string(), rank))
                .map_err(|e| data(format!("case `{}`: {e}", case.case_id())))
        })
        .collect::<CliResult<Vec<_>>>()?;
    ensure_out_dir(out)?;
    write_ranks(&out.join("ranks.csv"), &rows)?;
    Ok(CommandOutcome {
        inputs: vec![params.input.clone()],
        outputs: vec!["ranks.csv".into()],
        verify_failed: false,
    })
}

// ---------------------------------------------------------------------------
// postprocess
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PostprocessParams {
    pub input: Option<String>,
    pub synthetic: Option<String>,
    pub strategy: String,
    pub window: usize,
    pub inflate: bool,
    pub methods: String,
    pub mst_standardize: bool,
    pub seed: u64,
    pub svg: bool,
}

/// Parse a synthetic-series spec: comma-separated `key=value` pairs over the
/// defaults, e.g. `days=873,d=12,members=50,tau=3,skill=0.5,bias=1,spread=0.7`.
pub fn parse_synthetic_spec(text: &str, seed: u64) -> CliResult<SyntheticSeriesSpec> {
    let mut spec = SyntheticSeriesSpec {
        seed,
        ..SyntheticSeriesSpec::default()
    };
    let trimmed = text.trim();
    if trimmed.is_empty() || trimmed == "default" {
        return Ok(spec);
    }
    for pair in trimmed.split(',') {
        let mut parts = pair.splitn(2, '=');
        let key = parts.next().unwrap_or_default().trim();
        let value = parts
            .next()
            .ok_or_else(|| usage(format!("synthetic spec entry `{pair}` is not key=value")))?
            .trim();
        let complain = |what: &str| usage(format!("synthetic spec `{key}`: cannot parse {what} `{value}`"));
        match key {
            "days" => spec.days = value.parse().map_err(|_| complain("count"))?,
            "d" => spec.d = value.parse().map_err(|_| complain("dimension"))?,
            "members" => spec.m_raw = value.parse().map_err(|_| complain("count"))?,
            "tau" => spec.tau = value.parse().map_err(|_| complain("number"))?,
            "skill" => spec.skill = value.parse().map_err(|_| complain("number"))?,
            "bias" => spec.bias = value.parse().map_err(|_| complain("number"))?,
            "spread" => spec.spread = value.parse().map_err(|_| complain("number"))?,
            "tau-offset" => spec.tau_offset = value.parse().map_err(|_| complain("number"))?,
            other => {
                return Err(usage(format!(
                    "unknown synthetic spec key `{other}` (known: days, d, members, tau, skill, bias, spread, tau-offset)"
                )))
            }
        }
    }
    Ok(spec)
}

fn parse_strategy(name: &str) -> CliResult<DependenceStrategy> {
    match name {
        "independent" => Ok(DependenceStrategy::Independent),
        "ecc" => Ok(DependenceStrategy::Ecc),
        "mvn" => Ok(DependenceStrategy::Mvn),
        other => Err(usage(format!(
            "unknown strategy `{other}` (expected independent, ecc or mvn)"
        ))),
    }
}

/// Per-lead-time univariate summary entry.
#[derive(Debug, Serialize)]
struct LeadSummaryReport {
    lead: usize,
    m: usize,
    n_cases: u64,
    mean_rank: f64,
    rank_variance: f64,
    chi_square: f64,
}

pub fn run_postprocess(params: &PostprocessParams, out: &Path) -> CliResult<CommandOutcome> {
    let methods = parse_methods(&params.methods, params.mst_standardize)?;
    let strategy = parse_strategy(&params.strategy)?;
    let config = PostprocessConfig::new(params.window, strategy, params.inflate).map_err(usage)?;
    let mut outcome = CommandOutcome::default();
    let series = match (&params.input, &params.synthetic) {
        (Some(path), None) => {
            outcome.inputs.push(path.clone());
            read_series(Path::new(path))?
        }
        (None, Some(spec)) => {
            let spec = parse_synthetic_spec(spec, params.seed)?;
            synthetic_series(&spec).map_err(data)?
        }
        _ => {
            return Err(usage(
                "postprocess needs exactly one of --in <series.csv> or --synthetic <spec>",
            ))
        }
    };
    let source = RandomSource::new(params.seed);
    let result = run_pipeline(&series, &config, &methods, &source).map_err(data)?;

    ensure_out_dir(out)?;
    for (method, histogram) in &result.multivariate {
        let label = method.label();
        let csv_name = format!("hist_{label}.csv");
        write_histogram_csv(&out.join(&csv_name), histogram)?;
        outcome.output(csv_name);
        let json_name = format!("summary_{label}.json");
        write_json(
            &out.join(&json_name),
            &HistogramSummaryReport::new(label, histogram)?,
        )?;
        outcome.output(json_name);
        if params.svg {
            let svg_name = format!("hist_{label}.svg");
            write_histogram_svg(&out.join(&svg_name), histogram, label)?;
            outcome.output(svg_name);
        }
    }

    let mut univariate_csv = String::from("lead,rank,count\n");
    let mut lead_summaries = Vec::new();
    for (lead, histogram) in result.univariate.iter().enumerate() {
        for (i, count) in histogram.counts().iter().enumerate() {
            use std::fmt::Write as _;
            writeln!(univariate_csv, "{},{},{count}", lead + 1, i + 1).expect("string write");
        }
        let summary = histogram.summary().map_err(data)?;
        lead_summaries.push(LeadSummaryReport {
            lead: lead + 1,
            m: histogram.m(),
            n_cases: histogram.n_cases(),
            mean_rank: summary.mean_rank,
            rank_variance: summary.rank_variance,
            chi_square: summary.chi_square,
        });
    }
    fs::write(out.join("univariate.csv"), univariate_csv)?;
    outcome.output("univariate.csv");
    write_json(&out.join("univariate_summary.json"), &lead_summaries)?;
    outcome.output("univariate_summary.json");
    Ok(outcome)
}

// ---------------------------------------------------------------------------
// oracle
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct OracleParams {
    pub m: u64,
    pub d: u64,
}

pub fn run_oracle(params: &OracleParams, out: Option<&Path>) -> CliResult<CommandOutcome> {
    let report = oracle::oracle_report(params.m, params.d).map_err(usage)?;
    let mut body = serde_json::to_string_pretty(&report)?;
    body.push('\n');
    print!("{body}");
    let mut outcome = CommandOutcome::default();
    if let Some(out) = out {
        ensure_out_dir(out)?;
        fs::write(out.join("oracle.json"), body)?;
        outcome.output("oracle.json");
    }
    Ok(outcome)
}

// ---------------------------------------------------------------------------
// verify
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct VerifyParams {
    pub suite: String,
}

/// Serializable criterion outcome for the optional JSON artifact.
#[derive(Debug, Serialize)]
struct CriterionReport {
    id: String,
    description: String,
    passed: bool,
    details: String,
}

pub fn run_verify(params: &VerifyParams, out: Option<&Path>) -> CliResult<CommandOutcome> {
    let suite = Suite::parse(&params.suite)
        .ok_or_else(|| usage(format!(
            "unknown suite `{}` (expected figures, tables or appendix)",
            params.suite
        )))?;
    let results = run_suite(suite).map_err(data)?;
    let mut outcome = CommandOutcome::default();
    for result in &results {
        println!(
            "[{}] {} — {}",
            if result.passed { "PASS" } else { "FAIL" },
            result.id,
            result.description
        );
        println!("    {}", result.details);
        if !result.passed {
            outcome.verify_failed = true;
        }
    }
    if let Some(out) = out {
        ensure_out_dir(out)?;
        let reports: Vec<CriterionReport> = results
            .iter()
            .map(|r| CriterionReport {
                id: r.id.to_string(),
                description: r.description.to_string(),
                passed: r.passed,
                details: r.details.clone(),
            })
            .collect();
        let name = format!("verify_{}.json", suite.label());
        write_json(&out.join(&name), &reports)?;
        outcome.output(name);
    }
    Ok(outcome)
}
