use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use clap::{Args, Parser, Subcommand};

use isovar::config::Config;
use isovar::runner::{convergence_table, dump_meshes, dump_varifolds, exit_code_for, run_config, RunOptions};
use isovar::{Error, Result};

#[derive(Parser)]
#[command(name = "isovar", version, about = "Isoperimetric inequalities, varifolds and curve shortening flow")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Output {
    /// Output directory.
    #[arg(long, env = "ISOVAR_OUT", default_value = "isovar-out")]
    out: PathBuf,
}

#[derive(Subcommand)]
enum Command {
    /// Run every scenario of a config file.
    Run {
        config: PathBuf,
        #[command(flatten)]
        output: Output,
        /// Override the config seed.
        #[arg(long)]
        seed: Option<u64>,
        /// Worker threads (default: all cores).
        #[arg(long)]
        threads: Option<usize>,
        /// Write a polyline snapshot of flowing curves every N steps.
        #[arg(long, value_name = "N")]
        snapshot_every: Option<usize>,
        /// Write per-step trajectory records for flow scenarios.
        #[arg(long)]
        trajectory: bool,
    },
    /// Print refinement tables for scenarios with a `refinement` section.
    Table {
        config: PathBuf,
        /// Only this scenario.
        #[arg(long)]
        scenario: Option<String>,
        /// Emit JSON instead of text.
        #[arg(long)]
        json: bool,
    },
    /// Write every mesh input in the mesh text format.
    DumpMesh {
        config: PathBuf,
        #[command(flatten)]
        output: Output,
    },
    /// Write every mesh input as a discrete varifold.
    DumpVarifold {
        config: PathBuf,
        #[command(flatten)]
        output: Output,
    },
}

fn load(path: &Path) -> Result<(Config, String, PathBuf)> {
    let text = std::fs::read_to_string(path)?;
    let config = Config::parse(&text)?;
    let base = path.parent().map(Path::to_path_buf).unwrap_or_default();
    Ok((config, text, base))
}

fn write_all(dir: &Path, files: &[(String, String)]) -> Result<()> {
    std::fs::create_dir_all(dir)?;
    for (name, text) in files {
        std::fs::write(dir.join(name), text)?;
    }
    Ok(())
}

fn execute(cli: Cli) -> Result<i32> {
    match cli.command {
        Command::Run { config, output, seed, threads, snapshot_every, trajectory } => {
            let (cfg, text, base) = load(&config)?;
            if let Some(n) = threads {
                rayon::ThreadPoolBuilder::new()
                    .num_threads(n)
                    .build_global()
                    .map_err(|e| Error::Validation(format!("thread pool: {e}")))?;
            }
            let start = Instant::now();
            let report = run_config(&cfg, &text, &base, &RunOptions { seed, snapshot_every, trajectory });
            report.write(&output.out)?;
            print!("{}", report.table());
            eprintln!("wall time {:.3} s", start.elapsed().as_secs_f64());
            Ok(report.exit_code())
        }
        Command::Table { config, scenario, json } => {
            let (cfg, _, base) = load(&config)?;
            let mut any = false;
            for s in &cfg.scenarios {
                if s.refinement.is_none() || scenario.as_ref().is_some_and(|id| id != &s.id) {
                    continue;
                }
                any = true;
                let t = convergence_table(s, &base)?;
                if json {
                    println!("{}", serde_json::to_string(&t).expect("table serialises"));
                } else {
                    println!("{}", t.render());
                }
            }
            if !any {
                return Err(Error::Validation("no scenario with a refinement section".into()));
            }
            Ok(0)
        }
        Command::DumpMesh { config, output } => {
            let (cfg, _, base) = load(&config)?;
            write_all(&output.out, &dump_meshes(&cfg, &base)?)?;
            Ok(0)
        }
        Command::DumpVarifold { config, output } => {
            let (cfg, _, base) = load(&config)?;
            write_all(&output.out, &dump_varifolds(&cfg, &base)?)?;
            Ok(0)
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match execute(cli) {
        Ok(code) => ExitCode::from(code as u8),
        Err(e) => {
            eprintln!("isovar: {e}");
            ExitCode::from(exit_code_for(&e) as u8)
        }
    }
}
