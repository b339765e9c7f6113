use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use hybrid_ilqr::GradientVariant;
use hybrid_ilqr_harness::dump::dump_trajectory;
use hybrid_ilqr_harness::table::emit_table;
use hybrid_ilqr_harness::{
    load_suite, run_experiment, run_suite, ExperimentConfig, Overrides, RunRecord, RunStatus,
};

#[derive(Parser)]
#[command(name = "hilqr", version, about = "Hybrid iLQR experiment runner")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run one experiment file.
    Run {
        config: PathBuf,
        #[arg(long, default_value = "out")]
        out: PathBuf,
        #[command(flatten)]
        overrides: OverrideArgs,
    },
    /// Run every experiment file in a directory and write a summary table.
    Suite {
        dir: PathBuf,
        #[arg(long, default_value = "out")]
        out: PathBuf,
        /// Add the published direct collocation row to the table.
        #[arg(long)]
        with_reference: bool,
        /// Worker threads (default: all cores).
        #[arg(long)]
        jobs: Option<usize>,
        #[command(flatten)]
        overrides: OverrideArgs,
    },
    /// Write the trajectory stored in a run record as CSV.
    Dump {
        record: PathBuf,
        #[arg(long)]
        trajectory: bool,
        /// Output CSV (default: next to the record).
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum VariantArg {
    Saltation,
    ResetJacobian,
    Both,
}

#[derive(Args)]
struct OverrideArgs {
    /// Gradient variant(s) to run instead of the configured ones.
    #[arg(long, value_enum)]
    variant: Option<VariantArg>,
    /// Replace the seed bounce count (bounce_count seeds only).
    #[arg(long)]
    seed_bounces: Option<usize>,
    /// Disable reference extensions.
    #[arg(long)]
    no_extension: bool,
}

impl OverrideArgs {
    fn to_overrides(&self) -> Overrides {
        Overrides {
            variants: self.variant.map(|v| match v {
                VariantArg::Saltation => vec![GradientVariant::Saltation],
                VariantArg::ResetJacobian => vec![GradientVariant::ResetJacobian],
                VariantArg::Both => {
                    vec![GradientVariant::Saltation, GradientVariant::ResetJacobian]
                }
            }),
            seed_bounces: self.seed_bounces,
            no_extension: self.no_extension,
        }
    }
}

fn summarize(r: &RunRecord) {
    match r.status {
        RunStatus::Completed => eprintln!(
            "{:<28} {:<8} cost {:>12.6} impacts {} converged {} ({} it, {:.2}s)",
            r.config.name,
            r.method(),
            r.final_cost.unwrap_or(f64::NAN),
            r.impact_count,
            r.converged,
            r.iterations,
            r.wall_time_s
        ),
        RunStatus::Failed => eprintln!(
            "{:<28} {:<8} FAILED: {}",
            r.config.name,
            r.method(),
            r.error.as_deref().unwrap_or("unknown error")
        ),
    }
}

/// Saves the record and its trajectory dump; returns whether the run completed.
fn write_outputs(r: &RunRecord, out: &Path) -> Result<bool> {
    let stem = r.file_stem();
    r.save(&out.join(format!("{stem}.json")))?;
    if let Some(traj) = &r.trajectory {
        dump_trajectory(traj, &r.events, &out.join(format!("{stem}.csv")))?;
    }
    summarize(r);
    Ok(r.status == RunStatus::Completed)
}

fn run(cli: Cli) -> Result<bool> {
    match cli.command {
        Command::Run {
            config,
            out,
            overrides,
        } => {
            let cfg = ExperimentConfig::load(&config)?.apply(&overrides.to_overrides())?;
            let mut ok = true;
            for r in run_experiment(&cfg)? {
                ok &= write_outputs(&r, &out)?;
            }
            Ok(ok)
        }
        Command::Suite {
            dir,
            out,
            with_reference,
            jobs,
            overrides,
        } => {
            if let Some(j) = jobs {
                rayon::ThreadPoolBuilder::new()
                    .num_threads(j)
                    .build_global()
                    .context("configuring worker threads")?;
            }
            let loaded = load_suite(&dir, &overrides.to_overrides())?;
            let configs: Vec<ExperimentConfig> = loaded.iter().map(|(_, c)| c.clone()).collect();
            let mut ok = true;
            let mut records = Vec::new();
            for ((path, _), result) in loaded.iter().zip(run_suite(&configs)) {
                match result {
                    Ok(rs) => {
                        for r in rs {
                            ok &= write_outputs(&r, &out)?;
                            records.push(r);
                        }
                    }
                    Err(e) => {
                        eprintln!("{}: {e}", path.display());
                        ok = false;
                    }
                }
            }
            if !records.is_empty() {
                let (csv, txt) = emit_table(&records, &out.join("table"), with_reference)?;
                print!("{}", std::fs::read_to_string(&txt)?);
                eprintln!("wrote {} and {}", csv.display(), txt.display());
            }
            Ok(ok)
        }
        Command::Dump {
            record,
            trajectory,
            out,
        } => {
            if !trajectory {
                bail!("nothing to dump; pass --trajectory");
            }
            let r = RunRecord::load(&record)?;
            let Some(traj) = &r.trajectory else {
                bail!("{} has no trajectory (status {:?})", record.display(), r.status);
            };
            let path = out.unwrap_or_else(|| record.with_extension("csv"));
            let side = dump_trajectory(traj, &r.events, &path)?;
            eprintln!("wrote {} and {}", path.display(), side.display());
            Ok(true)
        }
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}
