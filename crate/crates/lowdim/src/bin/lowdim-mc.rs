//! Batch experiment runner.
//!
//! ```text
//! lowdim-mc <phase|nsp|concentration|rifs|dimension|holder>
//!           --config <file.json> --out <dir> [--seed N] [--threads N]
//! ```
//!
//! Exit codes: 0 success, 2 config error, 3 experiment assertion failure
//! (for CI), 1 other runtime errors.

use lowdim::harness::{
    concentration_csv, run_concentration, run_dimension, run_holder, run_nsp, run_phase, run_rifs,
    ExperimentConfig, HarnessError,
};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

const USAGE: &str = "\
lowdim-mc: seeded matrix-recovery experiments

USAGE:
  lowdim-mc <phase|nsp|concentration|rifs|dimension|holder> \\
            --config <file.json> --out <dir> [--seed N] [--threads N]

FLAGS:
  --config PATH   Experiment config (JSON; its \"experiment\" tag must match
                  the subcommand)
  --out DIR       Output directory (created if absent)
  --seed N        Override the config's master seed
  --threads N     Worker threads (default 1; results do not depend on this)
  --help          Show this help

OUTPUT FILES (in --out):
  phase          phase_<seed>.csv
  nsp            nsp_<seed>.csv
  concentration  concentration_<seed>.csv
  rifs           rifs_<seed>.json, rifs_cloud_<seed>.csv
  dimension      dimension_<seed>.json
  holder         holder_<seed>.csv

EXIT CODES:
  0 success, 2 config error, 3 assertion failure, 1 other errors
";

struct Args {
    kind: String,
    config: PathBuf,
    out: PathBuf,
    seed: Option<u64>,
    threads: usize,
}

fn parse_args() -> Result<Args, String> {
    let mut args = std::env::args().skip(1);
    let kind = match args.next() {
        Some(k) if k == "--help" || k == "-h" => {
            print!("{USAGE}");
            std::process::exit(0);
        }
        Some(k) => k,
        None => return Err("missing experiment kind".into()),
    };
    let valid = [
        "phase",
        "nsp",
        "concentration",
        "rifs",
        "dimension",
        "holder",
    ];
    if !valid.contains(&kind.as_str()) {
        return Err(format!(
            "unknown experiment kind {kind:?}; expected one of {valid:?}"
        ));
    }
    let mut config: Option<PathBuf> = None;
    let mut out: Option<PathBuf> = None;
    let mut seed: Option<u64> = None;
    let mut threads: usize = 1;
    while let Some(arg) = args.next() {
        let mut value_of = |name: &str| {
            args.next()
                .ok_or_else(|| format!("missing value for {name}"))
        };
        match arg.as_str() {
            "--config" => config = Some(PathBuf::from(value_of("--config")?)),
            "--out" => out = Some(PathBuf::from(value_of("--out")?)),
            "--seed" => {
                seed = Some(
                    value_of("--seed")?
                        .parse::<u64>()
                        .map_err(|_| "invalid --seed (expected u64)".to_string())?,
                )
            }
            "--threads" => {
                threads = value_of("--threads")?
                    .parse::<usize>()
                    .map_err(|_| "invalid --threads (expected integer)".to_string())?;
                if threads == 0 {
                    return Err("--threads must be at least 1".into());
                }
            }
            "--help" | "-h" => {
                print!("{USAGE}");
                std::process::exit(0);
            }
            other => return Err(format!("unknown argument {other:?}")),
        }
    }
    Ok(Args {
        kind,
        config: config.ok_or("missing --config")?,
        out: out.ok_or("missing --out")?,
        seed,
        threads,
    })
}

fn write_output(dir: &Path, name: &str, contents: &str) -> Result<PathBuf, HarnessError> {
    std::fs::create_dir_all(dir)?;
    let path = dir.join(name);
    std::fs::write(&path, contents)?;
    Ok(path)
}

fn run(args: &Args) -> Result<(), HarnessError> {
    let text = std::fs::read_to_string(&args.config)
        .map_err(|e| HarnessError::Config(format!("cannot read {}: {e}", args.config.display())))?;
    let mut config = ExperimentConfig::parse(&text)?;
    if config.kind() != args.kind {
        return Err(HarnessError::Config(format!(
            "config is a {:?} experiment but the subcommand is {:?}",
            config.kind(),
            args.kind
        )));
    }
    if let Some(seed) = args.seed {
        config.set_seed(seed);
    }
    let seed = config.seed();
    let started = std::time::Instant::now();

    match &config {
        ExperimentConfig::Phase(c) => {
            let (curve, trials) = run_phase(c, args.threads)?;
            let path = write_output(&args.out, &format!("phase_{seed}.csv"), &curve.to_csv())?;
            let successes: usize = curve.rows.iter().map(|r| r.successes).sum();
            eprintln!(
                "phase: {} trials across {} k-values, {} successes, {:.2}s",
                trials.len(),
                curve.rows.len(),
                successes,
                started.elapsed().as_secs_f64()
            );
            println!("wrote {}", path.display());
        }
        ExperimentConfig::Nsp(c) => {
            let sweep = run_nsp(c, args.threads)?;
            let path = write_output(&args.out, &format!("nsp_{seed}.csv"), &sweep.to_csv())?;
            eprintln!(
                "nsp: {} k-values, {:.2}s",
                sweep.rows.len(),
                started.elapsed().as_secs_f64()
            );
            println!("wrote {}", path.display());
        }
        ExperimentConfig::Concentration(c) => {
            let report = run_concentration(c)?;
            let path = write_output(
                &args.out,
                &format!("concentration_{seed}.csv"),
                &concentration_csv(&report),
            )?;
            eprintln!(
                "concentration: {} deltas, {} samples, dominance {}, {:.2}s",
                report.delta_grid.len(),
                report.samples,
                report.dominance_holds(),
                started.elapsed().as_secs_f64()
            );
            println!("wrote {}", path.display());
            if !report.dominance_holds() {
                return Err(HarnessError::AssertionFailed(
                    "empirical upper confidence limit exceeds the bound".into(),
                ));
            }
        }
        ExperimentConfig::Rifs(c) => {
            let (report, cloud_csv) = run_rifs(c, args.threads)?;
            let json = serde_json::to_string_pretty(&report)
                .map_err(|e| HarnessError::Run(e.to_string()))?;
            let path = write_output(&args.out, &format!("rifs_{seed}.json"), &json)?;
            let cloud_path =
                write_output(&args.out, &format!("rifs_cloud_{seed}.csv"), &cloud_csv)?;
            eprintln!(
                "rifs: d = {:.8}, bound = {:.8}, boxcount = {:.4}, {:.2}s",
                report.d,
                report.nd_bound,
                report.boxcount_estimate,
                started.elapsed().as_secs_f64()
            );
            println!("wrote {}", path.display());
            println!("wrote {}", cloud_path.display());
            if !report.passed {
                return Err(HarnessError::AssertionFailed(format!(
                    "box-count estimate {:.4} not within {} of d = {:.6}",
                    report.boxcount_estimate, c.estimate_tolerance, report.d
                )));
            }
        }
        ExperimentConfig::Dimension(c) => {
            let cloud_text = std::fs::read_to_string(&c.cloud_csv).map_err(|e| {
                HarnessError::Config(format!("cannot read cloud_csv {}: {e}", c.cloud_csv))
            })?;
            let est = run_dimension(c, &cloud_text)?;
            let json =
                serde_json::to_string_pretty(&est).map_err(|e| HarnessError::Run(e.to_string()))?;
            let path = write_output(&args.out, &format!("dimension_{seed}.json"), &json)?;
            eprintln!(
                "dimension: slope = {:.4} (r^2 = {:.4}), {:.2}s",
                est.slope,
                est.r_squared,
                started.elapsed().as_secs_f64()
            );
            println!("wrote {}", path.display());
        }
        ExperimentConfig::Holder(c) => {
            let sweep = run_holder(c, args.threads)?;
            let path = write_output(&args.out, &format!("holder_{seed}.csv"), &sweep.to_csv())?;
            eprintln!(
                "holder: {} cells, {:.2}s",
                sweep.rows.len(),
                started.elapsed().as_secs_f64()
            );
            println!("wrote {}", path.display());
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let args = match parse_args() {
        Ok(a) => a,
        Err(e) => {
            eprintln!("error: {e}\n\n{USAGE}");
            return ExitCode::from(2);
        }
    };
    match run(&args) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
