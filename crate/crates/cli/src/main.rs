use std::path::Path;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use opcontour_cli::run::{run_classify, run_solve, run_verify, RunOptions, RunReport};
use opcontour_cli::{schema, write_atomic};

#[derive(Parser)]
#[command(name = "opcontour", version, about = "Contour-integral operator calculus on model operators")]
struct Cli {
    #[command(subcommand)]
    verb: Verb,
    /// Worker threads.
    #[arg(long, global = true, env = "OPCONTOUR_THREADS")]
    threads: Option<usize>,
    /// Overrides the seed in the problem file.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Downgrade relaxed trace assumptions from failure to warning.
    #[arg(long, global = true)]
    allow_trace_warnings: bool,
}

#[derive(Subcommand)]
enum Verb {
    /// Run operator-class checks.
    Classify { file: String },
    /// Solve the Cauchy problem and write the solution.
    Solve { file: String },
    /// Run the invariant suite.
    Verify { file: String },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if let Some(n) = cli.threads {
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(n.max(1)).build_global() {
            eprintln!("warning: could not configure thread pool: {e}");
        }
    }
    let (verb, file) = match &cli.verb {
        Verb::Classify { file } => ("classify", file),
        Verb::Solve { file } => ("solve", file),
        Verb::Verify { file } => ("verify", file),
    };
    let mut problem = match schema::load(file) {
        Ok(p) => p,
        Err(e) => {
            println!("verb={verb}\nstatus=failed\nexit_code=2\nschema_error={e}");
            return ExitCode::from(2);
        }
    };
    if let Some(s) = cli.seed {
        problem.seed = s;
    }
    let opts = RunOptions { allow_trace_warnings: cli.allow_trace_warnings };
    let report: RunReport = match verb {
        "classify" => run_classify(&problem),
        "solve" => run_solve(&problem, opts),
        _ => run_verify(&problem),
    };
    for (stage, ms) in &report.timings {
        eprintln!("timing.{stage}_ms={ms}");
    }
    let text = report.render();
    let mut code = report.status.exit_code();
    match &problem.output.report {
        Some(path) => {
            if let Err(e) = write_atomic(Path::new(path), &text) {
                eprintln!("error: cannot write report {path}: {e}");
                code = 2;
            }
        }
        None => print!("{text}"),
    }
    if let (Some(path), Some(csv)) = (&problem.output.csv, &report.csv) {
        if let Err(e) = write_atomic(Path::new(path), csv) {
            eprintln!("error: cannot write csv {path}: {e}");
            code = 2;
        }
    }
    ExitCode::from(code as u8)
}
