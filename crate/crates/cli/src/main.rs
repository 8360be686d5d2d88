use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::error::ErrorKind;
use clap::{Parser, Subcommand};

use entropic_clt_cli::plan::ExperimentPlan;
use entropic_clt_cli::verify::{run_suite, Suite};
use entropic_clt_cli::{
    inspect, parse_thread_cap, run, CliResult, EXIT_OK, EXIT_USAGE, THREADS_ENV,
};

#[derive(Parser)]
#[command(
    name = "entropic-clt",
    version,
    about = "Finite-n entropic CLT experiments on lattice laws"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Execute an experiment plan; writes a CSV and a JSON manifest.
    Run {
        #[arg(long)]
        plan: PathBuf,
    },
    /// Run an invariant suite: lemma31, prop31, prop32, decomposition, pinsker or dynamics.
    Verify { suite: String },
    /// Print moments, and optionally entropy and divergences, of a PMF in JSON.
    Pmf {
        file: PathBuf,
        #[arg(long)]
        entropy: bool,
        #[arg(long)]
        kl_gaussian: bool,
    },
}

fn dispatch(command: Command) -> CliResult<i32> {
    match command {
        Command::Run { plan } => {
            let plan = ExperimentPlan::from_file(&plan)?;
            let outcome = run::run(&plan)?;
            let e = &outcome.experiment;
            println!(
                "{}: {} rows, {} hard failures, {} diagnostics outside their bound",
                plan.name,
                e.records.len(),
                e.hard_failures(),
                e.diagnostic_failures
            );
            println!(
                "wrote {} and {}",
                outcome.csv.display(),
                outcome.manifest.display()
            );
            Ok(e.exit_code())
        }
        Command::Verify { suite } => {
            let suite: Suite = suite.parse()?;
            let report = run_suite(suite)?;
            let stdout = std::io::stdout();
            let mut lock = stdout.lock();
            report.write_to(&mut lock).and_then(|_| lock.flush()).ok();
            Ok(report.exit_code())
        }
        Command::Pmf {
            file,
            entropy,
            kl_gaussian,
        } => {
            let p = inspect::read_pmf(&file)?;
            let summary = inspect::summarize(&p, entropy, kl_gaussian)?;
            println!(
                "{}",
                serde_json::to_string_pretty(&summary).expect("summary serializes")
            );
            Ok(EXIT_OK)
        }
    }
}

fn configure_threads() -> CliResult<()> {
    if let Ok(value) = std::env::var(THREADS_ENV) {
        let n = parse_thread_cap(&value)?;
        // Fails only if a pool already exists, which cannot happen this early.
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .ok();
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => EXIT_OK,
                _ => EXIT_USAGE,
            };
            e.print().ok();
            return ExitCode::from(code as u8);
        }
    };
    let code = configure_threads()
        .and_then(|_| dispatch(cli.command))
        .unwrap_or_else(|e| {
            eprintln!("error: {e}");
            EXIT_USAGE
        });
    ExitCode::from(code as u8)
}
