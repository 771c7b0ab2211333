use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::Result;
use clap::{Parser, Subcommand};
use tomo_cli::{
    cmd_generate, cmd_rank_trap, cmd_reconstruct, cmd_validate, configure_threads, exit_code, read_json,
    ExperimentSpec, RankTrapSpec, ValidateSpec,
};

#[derive(Parser)]
#[command(name = "tomo", version, about = "State reconstruction experiments and fixed-point certificates")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(clap::Args)]
struct Common {
    /// JSON config file
    #[arg(long)]
    config: PathBuf,
    /// Override the master seed
    #[arg(long)]
    seed: Option<u64>,
    /// Override the output directory
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Subcommand)]
enum Command {
    /// Draw random states and write exact and noisy data with a manifest
    Generate(Common),
    /// Run the configured solvers on a generated dataset
    Reconstruct(Common),
    /// Factorized runs from every start rank against fixed-rank truths
    RankTrap(Common),
    /// Certificate for a state; exit 0 valid, 2 spurious, 3 not a fixed point
    Validate(Common),
}

fn experiment(c: &Common) -> Result<(ExperimentSpec, PathBuf)> {
    let mut spec: ExperimentSpec = read_json(&c.config)?;
    if let Some(s) = c.seed {
        spec.seed = s;
    }
    let out = c.out.clone().unwrap_or_else(|| spec.output_dir.clone());
    Ok((spec, out))
}

fn run(cli: Cli) -> Result<u8> {
    configure_threads()?;
    match cli.command {
        Command::Generate(c) => {
            let (spec, out) = experiment(&c)?;
            let m = cmd_generate(&spec, &out)?;
            println!("wrote {} instances to {}", m.instances.len(), out.display());
        }
        Command::Reconstruct(c) => {
            let (spec, out) = experiment(&c)?;
            let records = cmd_reconstruct(&spec, &out)?;
            let flagged = tomo_cli::reconstruct::guard_violations(&records);
            println!("wrote {} records to {}", records.len(), out.display());
            for r in flagged {
                eprintln!(
                    "warning: {} {} {} certified valid but {:.3e} from the reference",
                    r.instance,
                    r.data.name(),
                    r.solver,
                    r.trace_distance_oracle.unwrap_or(f64::NAN)
                );
            }
        }
        Command::RankTrap(c) => {
            let mut spec: RankTrapSpec = read_json(&c.config)?;
            if let Some(s) = c.seed {
                spec.seed = s;
            }
            let out = c.out.clone().unwrap_or_else(|| spec.output_dir.clone());
            let outcome = cmd_rank_trap(&spec, &out)?;
            println!("start_rank  runs  median_td    median_minQ  median_minQ_ker  valid  spurious  not_fixed");
            for s in &outcome.summary {
                println!(
                    "{:>10}  {:>4}  {:>10.3e}  {:>11.3e}  {:>15.3e}  {:>5}  {:>8}  {:>9}",
                    s.start_rank,
                    s.runs,
                    s.median_trace_distance,
                    s.median_min_eig_q,
                    s.median_min_eig_q_restricted,
                    s.valid,
                    s.spurious,
                    s.not_fixed_point
                );
            }
        }
        Command::Validate(c) => {
            let spec: ValidateSpec = read_json(&c.config)?;
            let base = c.config.parent().map(Path::to_path_buf).unwrap_or_default();
            let cert = cmd_validate(&spec, &base)?;
            let json = cert.to_json();
            if let Some(dir) = &c.out {
                std::fs::create_dir_all(dir)?;
                tomo_cli::write_atomic(&dir.join("certificate.json"), format!("{json}\n").as_bytes())?;
            }
            println!("{json}");
            return Ok(exit_code(cert.verdict));
        }
    }
    Ok(0)
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(cli) {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
    }
}
