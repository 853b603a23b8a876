//! `solenoid`: scenario-driven runner. `run` executes the task named in the
//! scenario file and writes a key-value summary (plus a CSV for
//! sequence-producing tasks); `validate` checks the schema and the model
//! invariants without running anything. Exit codes: 0 success, 1 malformed
//! input, 2 contract refusal.

mod report;
mod scenario;
mod tasks;
mod validate;

use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use solenoid_core::SolenoidError;

use report::Summary;
use scenario::Scenario;

#[derive(Parser)]
#[command(
    name = "solenoid",
    version,
    about = "Measured-solenoid calculator: current evaluation, homology classes, \
             and intersection pairings driven by scenario files"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Execute the scenario's task and write its report files.
    Run(CommonArgs),
    /// Check schema and model invariants without running the task.
    Validate(CommonArgs),
}

#[derive(Args)]
pub struct CommonArgs {
    /// Scenario file (JSON).
    pub file: PathBuf,
    /// Override the working transversal depth.
    #[arg(long)]
    pub depth: Option<usize>,
    /// Override the leafwise quadrature order.
    #[arg(long)]
    pub quad_order: Option<usize>,
    /// Override the random seed.
    #[arg(long)]
    pub seed: Option<u64>,
    /// Override the report directory.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let code = match &cli.command {
        Command::Run(args) => run(args),
        Command::Validate(args) => validate::run_validate(args),
    };
    ExitCode::from(code)
}

pub(crate) fn apply_overrides(sc: &mut Scenario, args: &CommonArgs) {
    if let Some(d) = args.depth {
        sc.depth = d;
    }
    if let Some(q) = args.quad_order {
        sc.quad_order = q;
    }
    if let Some(s) = args.seed {
        sc.seed = s;
    }
    if let Some(o) = &args.out {
        sc.out = o.clone();
    }
}

pub(crate) fn stem(path: &Path) -> String {
    path.file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| "scenario".into())
}

/// 1 for malformed input, 2 for a refusal diagnosed by the library.
fn exit_code(e: &SolenoidError) -> u8 {
    match e {
        SolenoidError::Immersion(_)
        | SolenoidError::NotInvariant { .. }
        | SolenoidError::NotUniquelyErgodic(_)
        | SolenoidError::Tangency { .. }
        | SolenoidError::NotNullTransverse { .. }
        | SolenoidError::RetriesExhausted { .. }
        | SolenoidError::Unsupported(_) => 2,
        _ => 1,
    }
}

fn run(args: &CommonArgs) -> u8 {
    let text = match fs::read_to_string(&args.file) {
        Ok(t) => t,
        Err(e) => {
            eprintln!("error: cannot read {}: {e}", args.file.display());
            return 1;
        }
    };
    let mut sc: Scenario = match serde_json::from_str(&text) {
        Ok(sc) => sc,
        Err(e) => {
            eprintln!("error: scenario schema: {e}");
            return 1;
        }
    };
    apply_overrides(&mut sc, args);
    if let Err(e) = fs::create_dir_all(&sc.out) {
        eprintln!("error: cannot create {}: {e}", sc.out.display());
        return 1;
    }
    let ambient = sc.ambient.build();
    let mut models = Vec::new();
    for (i, spec) in sc.models.iter().enumerate() {
        match spec.build(&ambient) {
            Ok(m) => models.push(m),
            Err(e) => {
                eprintln!("error: model[{i}]: {e}");
                return exit_code(&e);
            }
        }
    }
    let name = stem(&args.file);
    let summary_path = sc.out.join(format!("{name}.summary.txt"));
    match tasks::run_task(&sc, &models) {
        Ok(mut output) => {
            match &output.refusal {
                None => output.summary.push_str("status", "ok"),
                Some(msg) => {
                    output.summary.push_str("status", "refused");
                    output.summary.push_str("refusal", msg);
                }
            }
            if let Err(e) = output.summary.write(&summary_path) {
                eprintln!("error: cannot write {}: {e}", summary_path.display());
                return 1;
            }
            if let Some(csv) = &output.csv {
                if !csv.is_empty() {
                    let csv_path = sc.out.join(format!("{name}.csv"));
                    if let Err(e) = csv.write(&csv_path) {
                        eprintln!("error: cannot write {}: {e}", csv_path.display());
                        return 1;
                    }
                }
            }
            print!("{}", output.summary.render());
            match &output.refusal {
                Some(msg) => {
                    eprintln!("refused: {msg}");
                    2
                }
                None => 0,
            }
        }
        Err(e) => {
            let code = exit_code(&e);
            if code == 2 {
                // refusals still leave a record behind
                let mut summary = Summary::new(sc.task.name());
                summary.push_str("status", "refused");
                summary.push_str("refusal", &e.to_string());
                if let SolenoidError::NotNullTransverse {
                    mass_bound, depth, ..
                } = &e
                {
                    summary.push_f64("mass_bound", *mass_bound);
                    summary.push_usize("depth", *depth);
                }
                let _ = summary.write(&summary_path);
                print!("{}", summary.render());
            }
            eprintln!("error: {e}");
            code
        }
    }
}
