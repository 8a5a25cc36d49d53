//! Command line front end. Three subcommands: `verify` runs the built-in
//! check suite, `table` exports one functional as CSV and JSON, `sample`
//! draws seeded records. Exit code 0 means everything passed, 1 means an
//! operational error, 2 means a check or validation failed.

mod config;

use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{Context, Result};
use clap::{Parser, Subcommand};
use serde_json::json;

use qmlattice::sampler::{frequency_csv, frequency_summary, sample_ensemble, write_jsonl};
use qmlattice::table::{build_table, FunctionalKind};
use qmlattice::verify::{all_passed, run_suite, VerifyOptions};

use config::RunConfig;

#[derive(Debug, Parser)]
#[command(name = "qmlattice", version, about = "Decoherence functionals on a 1+1 null lattice")]
struct Cli {
    /// JSON run configuration; omit for the built-in default model.
    #[arg(long, global = true, value_name = "PATH")]
    config: Option<PathBuf>,

    /// Overrides every check tolerance.
    #[arg(long, global = true, value_name = "FLOAT")]
    tolerance: Option<f64>,

    /// Directory for output files.
    #[arg(long, global = true, value_name = "DIR", default_value = "out")]
    out: PathBuf,

    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Run the check suite over the configured coupling(s) and write
    /// verify_report.json.
    Verify,
    /// Tabulate one functional and write table_<functional>.csv and .json.
    Table {
        /// One of q, c, qc, qtilde, qe.
        #[arg(long, default_value = "q")]
        functional: FunctionalKind,
        /// Number of evolution steps covered; defaults to the configured
        /// extent.
        #[arg(long)]
        extent: Option<usize>,
    },
    /// Sample records and write trajectories.jsonl and frequencies.csv.
    Sample {
        #[arg(long)]
        trajectories: Option<u64>,
        #[arg(long)]
        steps: Option<usize>,
        #[arg(long)]
        seed: Option<u64>,
    },
}

fn main() -> ExitCode {
    match run() {
        Ok(code) => code,
        Err(err) => {
            eprintln!("error: {err:#}");
            ExitCode::FAILURE
        }
    }
}

fn run() -> Result<ExitCode> {
    let cli = Cli::parse();
    let cfg = RunConfig::load(cli.config.as_deref())?;
    let tol = cli.tolerance.or(cfg.tolerance);
    match cli.command {
        Command::Verify => verify(&cli.out, &cfg, tol),
        Command::Table { functional, extent } => table(&cli.out, &cfg, tol, functional, extent),
        Command::Sample {
            trajectories,
            steps,
            seed,
        } => sample(&cli.out, &cfg, trajectories, steps, seed),
    }
}

fn verify(out: &Path, cfg: &RunConfig, tol: Option<f64>) -> Result<ExitCode> {
    let opts = VerifyOptions {
        extent: cfg.extent,
        tolerance: tol,
        trajectories: cfg.trajectories,
        seed: cfg.seed,
    };
    let mut runs = Vec::new();
    let mut ok = true;
    for x in cfg.couplings() {
        let model = cfg.build_model(x)?;
        let reports = run_suite(&model, &opts)?;
        println!("coupling {x}");
        for r in &reports {
            let mark = if r.passed { "  ok " } else { " FAIL" };
            println!(
                "{mark} {:<34} {:>12.3e} <= {:.1e}  ({} ms)",
                r.name, r.max_deviation, r.tolerance, r.millis
            );
        }
        let run_ok = all_passed(&reports);
        ok &= run_ok;
        runs.push(json!({
            "coupling": x,
            "all_passed": run_ok,
            "checks": reports,
        }));
    }
    let report = json!({
        "extent": cfg.extent,
        "seed": cfg.seed,
        "tolerance_override": tol,
        "runs": runs,
        "all_passed": ok,
    });
    let path = out.join("verify_report.json");
    write_atomic(&path, serde_json::to_string_pretty(&report)?.as_bytes())?;
    println!("wrote {}", path.display());
    if ok {
        println!("all checks passed");
        Ok(ExitCode::SUCCESS)
    } else {
        println!("some checks failed");
        Ok(ExitCode::from(2))
    }
}

fn table(
    out: &Path,
    cfg: &RunConfig,
    tol: Option<f64>,
    kind: FunctionalKind,
    extent: Option<usize>,
) -> Result<ExitCode> {
    let model = cfg.build_model(cfg.single_coupling()?)?;
    let extent = extent.unwrap_or(cfg.extent);
    let table = build_table(&model, kind, extent)?;
    if let Err(err) = table.validate(tol.unwrap_or(1e-10)) {
        eprintln!("refusing to export: {err}");
        return Ok(ExitCode::from(2));
    }
    let csv_path = out.join(format!("table_{kind}.csv"));
    write_atomic(&csv_path, table.to_csv().as_bytes())?;
    let json_path = out.join(format!("table_{kind}.json"));
    write_atomic(
        &json_path,
        serde_json::to_string_pretty(&table.to_json())?.as_bytes(),
    )?;
    println!(
        "functional {kind} at extent {extent}: {} rows, hermiticity defect {:.3e}, \
         normalization defect {:.3e}",
        table.rows(),
        table.hermiticity_defect(),
        table.normalization_defect()
    );
    println!("wrote {}", csv_path.display());
    println!("wrote {}", json_path.display());
    Ok(ExitCode::SUCCESS)
}

fn sample(
    out: &Path,
    cfg: &RunConfig,
    trajectories: Option<u64>,
    steps: Option<usize>,
    seed: Option<u64>,
) -> Result<ExitCode> {
    let model = cfg.build_model(cfg.single_coupling()?)?;
    let steps = steps.or(cfg.steps).unwrap_or(cfg.extent);
    let count = trajectories.unwrap_or(cfg.trajectories);
    let seed = seed.unwrap_or(cfg.seed);
    let records = sample_ensemble(&model, steps, count, seed)?;
    let mut buf = Vec::new();
    write_jsonl(&records, &mut buf)?;
    let jsonl_path = out.join("trajectories.jsonl");
    write_atomic(&jsonl_path, &buf)?;
    let rows = frequency_summary(&model, &records)?;
    let csv_path = out.join("frequencies.csv");
    write_atomic(&csv_path, frequency_csv(&rows).as_bytes())?;
    let worst = rows
        .iter()
        .map(|r| (r.frequency - r.exact).abs())
        .fold(0.0, f64::max);
    println!(
        "sampled {count} records of {steps} steps with seed {seed}; \
         worst |frequency - measure| = {worst:.4}"
    );
    println!("wrote {}", jsonl_path.display());
    println!("wrote {}", csv_path.display());
    Ok(ExitCode::SUCCESS)
}

/// Writes via a sibling temp file and rename, so readers never see a
/// half-written file.
fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    let dir = path.parent().filter(|p| !p.as_os_str().is_empty());
    if let Some(dir) = dir {
        fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
    }
    let name = path
        .file_name()
        .map(|n| n.to_string_lossy().into_owned())
        .unwrap_or_else(|| "out".to_string());
    let tmp = match dir {
        Some(d) => d.join(format!(".{name}.tmp")),
        None => PathBuf::from(format!(".{name}.tmp")),
    };
    fs::write(&tmp, bytes).with_context(|| format!("writing {}", tmp.display()))?;
    fs::rename(&tmp, path).with_context(|| format!("renaming into {}", path.display()))?;
    Ok(())
}
