//! Calibration assessment for multivariate ensemble forecasts.
//!
//! Subcommands: `simulate` (scenario experiments), `rank` (rank cases from a
//! file), `postprocess` (bias correction and error dressing over a series),
//! `oracle` (closed-form reference moments), `verify` (frozen experiment
//! suites) and `rerun` (reproduce a run from its manifest).

mod artifacts;
mod commands;
mod error;
mod manifest;
mod tables;

use std::path::{Path, PathBuf};
use std::time::Instant;

use clap::{Parser, Subcommand};

use commands::{
    run_oracle, run_postprocess, run_rank, run_simulate, run_verify, CommandOutcome,
    OracleParams, PostprocessParams, RankParams, SimulateParams, VerifyParams,
};
use error::{usage, CliResult, EXIT_VERIFY};
use manifest::{read_manifest, write_manifest, RunManifest};

#[derive(Parser)]
#[command(name = "rankcal", version, about = "Rank-histogram calibration assessment for multivariate ensemble forecasts")]
struct Cli {
    /// Worker threads for case-parallel stages (0 = all cores). Results do
    /// not depend on this.
    #[arg(long, global = true, default_value_t = 0)]
    workers: usize,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a simulation scenario and write rank histograms.
    Simulate {
        /// Forecast-model scenario: iid:<mu>:<sigma>, ar1:<tau>, corr-a, corr-b, corr-c.
        #[arg(long)]
        scenario: String,
        /// Observation-model scenario (defaults to --scenario).
        #[arg(long)]
        obs_scenario: Option<String>,
        /// Dimension of every vector.
        #[arg(long)]
        d: usize,
        /// Set size (members + observation).
        #[arg(long)]
        m: usize,
        /// Number of verification cases.
        #[arg(long)]
        cases: u64,
        /// Pre-rank method: mv, bd, avg, mst, a comma list, or all.
        #[arg(long, default_value = "all")]
        method: String,
        /// Standardize components before the spanning-tree pre-rank.
        #[arg(long)]
        mst_standardize: bool,
        #[arg(long, env = "RANKCAL_SEED", default_value_t = 0)]
        seed: u64,
        /// Output directory.
        #[arg(long)]
        out: PathBuf,
        /// Also write an SVG bar chart per method.
        #[arg(long)]
        svg: bool,
        /// Also write the sampled cases (cases.csv).
        #[arg(long)]
        dump_cases: bool,
        /// Also write per-case observation ranks (ranks_<method>.csv).
        #[arg(long)]
        dump_ranks: bool,
    },
    /// Rank the observation of every case in a case file.
    Rank {
        /// Case file: case_id,member_id,v1,...,vd with member_id 0 = observation.
        #[arg(long = "in")]
        input: PathBuf,
        /// Pre-rank method: mv, bd, avg or mst.
        #[arg(long)]
        method: String,
        #[arg(long)]
        mst_standardize: bool,
        #[arg(long, env = "RANKCAL_SEED", default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
    },
    /// Bias-correct and dress a forecast series, then assess calibration.
    Postprocess {
        /// Series file: day,member_id,v1,...,vd with member_id 0 = observation.
        #[arg(long = "in")]
        input: Option<PathBuf>,
        /// Synthetic series spec (key=value list or `default`).
        #[arg(long)]
        synthetic: Option<String>,
        /// Dependence strategy: independent, ecc or mvn.
        #[arg(long, default_value = "independent")]
        strategy: String,
        /// Training window in days.
        #[arg(long, default_value_t = 50)]
        window: usize,
        /// Disable the regression-uncertainty inflation of dressed errors.
        #[arg(long)]
        no_inflate: bool,
        /// Pre-rank methods for the multivariate histograms.
        #[arg(long, default_value = "all")]
        methods: String,
        #[arg(long)]
        mst_standardize: bool,
        #[arg(long, env = "RANKCAL_SEED", default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
        #[arg(long)]
        svg: bool,
    },
    /// Print closed-form reference moments as JSON.
    Oracle {
        #[arg(long)]
        m: u64,
        #[arg(long)]
        d: u64,
        /// Optional output directory for oracle.json.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Run a frozen verification suite: figures, tables or appendix.
    Verify {
        #[arg(long)]
        suite: String,
        /// Optional output directory for the results JSON.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Re-execute a previous run from its manifest.
    Rerun {
        #[arg(long)]
        manifest: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
}

/// A dispatchable unit: subcommand name, seed, serialized params and the
/// output directory (if any).
struct Dispatch {
    subcommand: &'static str,
    seed: u64,
    params: serde_json::Value,
    out: Option<PathBuf>,
}

fn dispatch_from_cli(command: Command) -> CliResult<Dispatch> {
    let dispatch = match command {
        Command::Simulate {
            scenario,
            obs_scenario,
            d,
            m,
            cases,
            method,
            mst_standardize,
            seed,
            out,
            svg,
            dump_cases,
            dump_ranks,
        } => {
            let params = SimulateParams {
                obs_scenario: obs_scenario.unwrap_or_else(|| scenario.clone()),
                scenario,
                d,
                m,
                cases,
                method,
                mst_standardize,
                seed,
                svg,
                dump_cases,
                dump_ranks,
            };
            Dispatch {
                subcommand: "simulate",
                seed,
                params: serde_json::to_value(&params)?,
                out: Some(out),
            }
        }
        Command::Rank {
            input,
            method,
            mst_standardize,
            seed,
            out,
        } => {
            let params = RankParams {
                input: input.to_string_lossy().into_owned(),
                method,
                mst_standardize,
                seed,
            };
            Dispatch {
                subcommand: "rank",
                seed,
                params: serde_json::to_value(&params)?,
                out: Some(out),
            }
        }
        Command::Postprocess {
            input,
            synthetic,
            strategy,
            window,
            no_inflate,
            methods,
            mst_standardize,
            seed,
            out,
            svg,
        } => {
            let params = PostprocessParams {
                input: input.map(|p| p.to_string_lossy().into_owned()),
                synthetic,
                strategy,
                window,
                inflate: !no_inflate,
                methods,
                mst_standardize,
                seed,
                svg,
            };
            Dispatch {
                subcommand: "postprocess",
                seed,
                params: serde_json::to_value(&params)?,
                out: Some(out),
            }
        }
        Command::Oracle { m, d, out } => {
            let params = OracleParams { m, d };
            Dispatch {
                subcommand: "oracle",
                seed: 0,
                params: serde_json::to_value(&params)?,
                out,
            }
        }
        Command::Verify { suite, out } => {
            let params = VerifyParams { suite };
            Dispatch {
                subcommand: "verify",
                seed: 0,
                params: serde_json::to_value(&params)?,
                out,
            }
        }
        Command::Rerun { manifest, out } => {
            let recorded = read_manifest(&manifest)?;
            let subcommand: &'static str = match recorded.subcommand.as_str() {
                "simulate" => "simulate",
                "rank" => "rank",
                "postprocess" => "postprocess",
                "oracle" => "oracle",
                "verify" => "verify",
                other => return Err(usage(format!("manifest has unknown subcommand `{other}`"))),
            };
            Dispatch {
                subcommand,
                seed: recorded.seed,
                params: recorded.params,
                out: Some(out),
            }
        }
    };
    Ok(dispatch)
}

fn execute(dispatch: &Dispatch) -> CliResult<CommandOutcome> {
    let out = dispatch.out.as_deref();
    let required_out = || -> CliResult<&Path> {
        out.ok_or_else(|| usage("this subcommand requires --out"))
    };
    match dispatch.subcommand {
        "simulate" => run_simulate(&parse_params(&dispatch.params)?, required_out()?),
        "rank" => run_rank(&parse_params(&dispatch.params)?, required_out()?),
        "postprocess" => run_postprocess(&parse_params(&dispatch.params)?, required_out()?),
        "oracle" => run_oracle(&parse_params::<OracleParams>(&dispatch.params)?, out),
        "verify" => run_verify(&parse_params::<VerifyParams>(&dispatch.params)?, out),
        other => Err(usage(format!("unknown subcommand `{other}`"))),
    }
}

fn parse_params<T: serde::de::DeserializeOwned>(value: &serde_json::Value) -> CliResult<T> {
    serde_json::from_value(value.clone())
        .map_err(|e| error::data(format!("malformed manifest params: {e}")))
}

fn run(cli: Cli) -> CliResult<bool> {
    if cli.workers > 0 {
        rayon::ThreadPoolBuilder::new()
            .num_threads(cli.workers)
            .build_global()
            .map_err(|e| usage(format!("cannot configure {} workers: {e}", cli.workers)))?;
    }
    let dispatch = dispatch_from_cli(cli.command)?;
    let started = Instant::now();
    let outcome = execute(&dispatch)?;
    if let Some(out) = &dispatch.out {
        let manifest = RunManifest {
            version: env!("CARGO_PKG_VERSION").to_string(),
            subcommand: dispatch.subcommand.to_string(),
            seed: dispatch.seed,
            workers: rayon::current_num_threads(),
            params: dispatch.params.clone(),
            inputs: outcome.inputs.clone(),
            outputs: outcome.outputs.clone(),
            duration_ms: started.elapsed().as_millis() as u64,
        };
        write_manifest(out, &manifest)?;
    }
    Ok(outcome.verify_failed)
}

fn main() {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            // Help and version requests are not errors.
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            std::process::exit(code);
        }
    };
    match run(cli) {
        Ok(false) => {}
        Ok(true) => std::process::exit(EXIT_VERIFY),
        Err(err) => {
            eprintln!("{err}");
            std::process::exit(err.exit_code());
        }
    }
}
