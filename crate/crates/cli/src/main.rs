use std::path::PathBuf;
use std::process::ExitCode;

use affinedim_cli::output::render_text;
use affinedim_cli::{commands, CliError, Outcome, RunOptions, SystemSpec};
use clap::{Parser, Subcommand};

#[derive(Parser)]
#[command(name = "affinedim", version, about = "Dimension theory experiments for affine iterated function systems")]
struct Args {
    #[command(subcommand)]
    command: Command,

    /// System spec (TOML).
    #[arg(long, global = true)]
    spec: Option<PathBuf>,

    /// Directory for report.json and CSV files.
    #[arg(long, global = true)]
    out: Option<PathBuf>,

    /// Overrides the seed in the spec.
    #[arg(long, global = true)]
    seed: Option<u64>,

    /// Worker threads (default: all cores).
    #[arg(long, global = true, env = "AFFINEDIM_THREADS")]
    threads: Option<usize>,

    /// Print the full report as JSON instead of a summary.
    #[arg(long, global = true)]
    json: bool,
}

#[derive(Subcommand, Clone, Copy)]
enum Command {
    /// Entropy, Lyapunov spectrum, measure pressure and dim_LY.
    Analyze,
    /// Random translations, point clouds and local dimension slopes.
    Simulate,
    /// Level sums of the singular value function, zero of pressure, s_infinity.
    Pressure,
    /// Checks the built-in worked examples.
    Examples,
}

fn run(args: &Args) -> Result<Outcome, CliError> {
    let mut builder = rayon::ThreadPoolBuilder::new();
    if let Some(n) = args.threads {
        if n == 0 {
            return Err(CliError::Usage("--threads must be at least 1".into()));
        }
        builder = builder.num_threads(n);
    }
    builder.build_global().map_err(|e| CliError::Usage(e.to_string()))?;
    let opts = RunOptions { seed: args.seed, threads: rayon::current_num_threads() };

    if let Command::Examples = args.command {
        return commands::examples(&opts);
    }
    let path = args.spec.as_ref().ok_or_else(|| CliError::Usage("--spec FILE is required".into()))?;
    let sys = SystemSpec::load(path)?;
    match args.command {
        Command::Analyze => commands::analyze(&sys, &opts),
        Command::Simulate => commands::simulate(&sys, &opts),
        Command::Pressure => commands::pressure(&sys, &opts),
        Command::Examples => unreachable!(),
    }
}

fn main() -> ExitCode {
    let args = Args::parse();
    let result = run(&args).and_then(|outcome| {
        if let Some(dir) = &args.out {
            outcome.write_to(dir)?;
        }
        if args.json {
            println!("{}", outcome.report.to_json()?);
        } else {
            print!("{}", render_text(&outcome.report));
        }
        match &outcome.report.examples {
            Some(e) if e.failures > 0 => Err(CliError::Regression(e.failures)),
            _ => Ok(()),
        }
    });
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("affinedim: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
