use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use tractorlab::catalog::EXAMPLES;
use tractorlab::job::{CommandKind, CommandSpec, Globals, Job, JobSpec, MetricRef};
use tractorlab::Error;

#[derive(Parser)]
#[command(
    name = "tractorlab",
    version,
    about = "Conformal tractor and twistor-spinor checks on coordinate charts"
)]
struct Cli {
    #[command(subcommand)]
    command: Cmd,
}

#[derive(Clone, Copy, ValueEnum)]
enum Format {
    Json,
    Text,
}

#[derive(Subcommand)]
enum Cmd {
    /// Run a TOML job, or a list of commands on a metric file or example.
    Run {
        /// Job file.
        job: Option<PathBuf>,
        /// Metric file (instead of a job file).
        #[arg(long, conflicts_with_all = ["job", "example"])]
        metric: Option<PathBuf>,
        /// Catalog example (instead of a job file).
        #[arg(long, conflicts_with = "job")]
        example: Option<String>,
        /// Command to run with --metric/--example; repeatable.
        #[arg(long = "command", value_enum)]
        commands: Vec<CommandArg>,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        samples: Option<usize>,
        #[arg(long)]
        tol: Option<f64>,
        #[arg(long)]
        rk4_step: Option<f64>,
        #[arg(long)]
        fail_fast: bool,
        #[arg(long, value_enum, default_value = "json")]
        format: Format,
        /// Write the report here instead of stdout (overrides the job's `output`).
        #[arg(long)]
        output: Option<PathBuf>,
        /// Drop wall-clock timings from the JSON report.
        #[arg(long)]
        no_timing: bool,
    },
    /// Print the shipped example corpus.
    ListExamples {
        #[arg(long, value_enum, default_value = "text")]
        format: Format,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum CommandArg {
    Curvature,
    HolonomySample,
    TractorMetricity,
    CertifyParallelSpinor,
    Theorem1Pipeline,
    Theorem2Pipeline,
    Twistor,
}

impl From<CommandArg> for CommandKind {
    fn from(c: CommandArg) -> CommandKind {
        match c {
            CommandArg::Curvature => CommandKind::Curvature,
            CommandArg::HolonomySample => CommandKind::HolonomySample,
            CommandArg::TractorMetricity => CommandKind::TractorMetricity,
            CommandArg::CertifyParallelSpinor => CommandKind::CertifyParallelSpinor,
            CommandArg::Theorem1Pipeline => CommandKind::Theorem1Pipeline,
            CommandArg::Theorem2Pipeline => CommandKind::Theorem2Pipeline,
            CommandArg::Twistor => CommandKind::Twistor,
        }
    }
}

fn bare_command(name: CommandKind) -> CommandSpec {
    CommandSpec {
        name,
        samples: None,
        seed: None,
        tol: None,
        step: None,
        eps: None,
        base: None,
        expect: None,
        sigma: None,
    }
}

fn init_threads() {
    if let Some(n) = std::env::var("TRACTORLAB_THREADS")
        .ok()
        .and_then(|s| s.parse::<usize>().ok())
    {
        // only fails if a pool already exists
        let _ = rayon::ThreadPoolBuilder::new()
            .num_threads(n.max(1))
            .build_global();
    }
}

fn list_examples(format: Format) {
    match format {
        Format::Json => println!(
            "{}",
            serde_json::to_string_pretty(EXAMPLES).expect("serializes")
        ),
        Format::Text => {
            for e in EXAMPLES {
                println!(
                    "{:<15} ({},{})  {:<60} {}",
                    e.name,
                    e.signature.0,
                    e.signature.1,
                    e.description,
                    e.witnesses.join(", ")
                );
            }
        }
    }
}

fn main() -> ExitCode {
    init_threads();
    let cli = Cli::parse();
    let Cmd::Run {
        job,
        metric,
        example,
        commands,
        seed,
        samples,
        tol,
        rk4_step,
        fail_fast,
        format,
        output,
        no_timing,
    } = cli.command
    else {
        let Cmd::ListExamples { format } = cli.command else {
            unreachable!()
        };
        list_examples(format);
        return ExitCode::SUCCESS;
    };
    let loaded = match (job, metric, example) {
        (Some(path), None, None) => {
            if !commands.is_empty() {
                eprintln!("error: --command only applies with --metric or --example");
                return ExitCode::from(2);
            }
            Job::read(&path)
        }
        (None, m, e) => {
            let metric = match (m, e) {
                (Some(p), None) => MetricRef::File(p),
                (None, Some(name)) => MetricRef::Example(name),
                _ => {
                    eprintln!("error: give a job file, --metric or --example");
                    return ExitCode::from(2);
                }
            };
            let spec = JobSpec {
                metric,
                output: None,
                seed: None,
                samples: None,
                tol: None,
                rk4_step: None,
                commands: commands
                    .into_iter()
                    .map(|c| bare_command(c.into()))
                    .collect(),
            };
            Job::from_spec(spec, std::path::Path::new("."))
        }
        _ => unreachable!("clap enforces the conflicts"),
    };
    let job = match loaded {
        Ok(j) => j,
        Err(e) => {
            eprintln!("validation error: {e}");
            return ExitCode::from(2);
        }
    };
    let globals = Globals {
        seed,
        samples,
        tol,
        rk4_step,
        fail_fast,
    };
    let report = match job.run(&globals) {
        Ok(r) => r,
        Err(e @ (Error::Validation { .. } | Error::Constraint(_) | Error::Io(_))) => {
            eprintln!("validation error: {e}");
            return ExitCode::from(2);
        }
        Err(e) => {
            eprintln!("error loading metric: {e}");
            return ExitCode::from(2);
        }
    };
    let text = match format {
        Format::Json => report.to_json(!no_timing) + "\n",
        Format::Text => report.to_text(),
    };
    let target = output.or_else(|| job.spec.output.clone());
    match target {
        Some(path) => {
            if let Err(e) = std::fs::write(&path, &text) {
                eprintln!("error: {}: {e}", path.display());
                return ExitCode::from(2);
            }
        }
        None => {
            let _ = std::io::stdout().write_all(text.as_bytes());
        }
    }
    if report.passed {
        ExitCode::SUCCESS
    } else {
        ExitCode::from(1)
    }
}
