//! `currep`: runs verification suites and tabulates spherical functions,
//! sampler output and kernels from a JSON scenario.

mod error;
mod scenario;
mod tables;
mod verify;

use std::fs::File;
use std::io::BufWriter;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use current_reps::Execution;

use error::{CliError, Result};
use scenario::Scenario;

#[derive(Parser)]
#[command(name = "currep", version, about = "Numerical checks for current-group representations")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the scenario's checks and write a JSON report.
    Verify(Common),
    /// Tabulate the spherical function over the scenario's currents.
    Spherical(Common),
    /// Dump sampled configurations and a summary.
    Sample(Common),
    /// Tabulate c, kappa and the multipliers on a grid.
    Kernels(Common),
}

#[derive(Args)]
struct Common {
    #[arg(long)]
    scenario: PathBuf,
    /// Overrides the sampler seed.
    #[arg(long)]
    seed: Option<u64>,
    /// Worker threads; results do not depend on it.
    #[arg(long)]
    jobs: Option<usize>,
    #[arg(long, default_value = ".")]
    out: PathBuf,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("currep: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}

fn run(command: Command) -> Result<()> {
    let (Command::Verify(c) | Command::Spherical(c) | Command::Sample(c) | Command::Kernels(c)) = &command;
    let mut scenario = Scenario::load(&c.scenario)?;
    if let Some(seed) = c.seed {
        scenario.sampler.seed = seed;
    }
    std::fs::create_dir_all(&c.out)?;
    let out = c.out.clone();
    with_jobs(c.jobs, move |exec| match command {
        Command::Verify(_) => cmd_verify(&scenario, exec, &out),
        Command::Spherical(_) => {
            tables::spherical(&scenario, exec, create(&out, &scenario.outputs.spherical)?)
        }
        Command::Sample(_) => {
            let summary = tables::sample(&scenario, exec, create(&out, &scenario.outputs.samples)?)?;
            write_json(&out, &scenario.outputs.samples_summary, &summary)
        }
        Command::Kernels(_) => tables::kernels(&scenario, create(&out, &scenario.outputs.kernels)?),
    })
}

fn cmd_verify(scenario: &Scenario, exec: Execution, out: &Path) -> Result<()> {
    let report = verify::run(scenario, exec);
    write_json(out, &scenario.outputs.report, &report)?;
    for c in report.checks.iter().filter(|c| !c.pass) {
        match (&c.residual, &c.error) {
            (Some(r), _) => eprintln!("FAIL {}: residual {r:e} > tolerance {:e}", c.check, c.tolerance),
            (None, e) => eprintln!("FAIL {}: {}", c.check, e.as_deref().unwrap_or("no residual")),
        }
    }
    if report.failed > 0 {
        return Err(CliError::ChecksFailed { failed: report.failed, total: report.checks.len() });
    }
    Ok(())
}

fn create(dir: &Path, name: &str) -> Result<BufWriter<File>> {
    Ok(BufWriter::new(File::create(dir.join(name))?))
}

fn write_json<T: serde::Serialize>(dir: &Path, name: &str, value: &T) -> Result<()> {
    let mut w = create(dir, name)?;
    serde_json::to_writer_pretty(&mut w, value)?;
    std::io::Write::write_all(&mut w, b"\n")?;
    Ok(())
}

/// `--jobs 1` runs sequentially; otherwise work goes to a pool of the given
/// size (or the global pool).
fn with_jobs<T: Send>(jobs: Option<usize>, f: impl FnOnce(Execution) -> Result<T> + Send) -> Result<T> {
    match jobs {
        Some(0) => Err(CliError::Schema("--jobs must be positive".into())),
        Some(1) => f(Execution::Sequential),
        #[cfg(feature = "parallel")]
        Some(n) => rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build()
            .map_err(|e| CliError::Io(std::io::Error::other(e)))?
            .install(|| f(Execution::Parallel)),
        _ => f(Execution::Parallel),
    }
}
