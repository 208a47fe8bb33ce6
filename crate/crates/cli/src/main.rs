use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use feyncoh_cli::config::{self, ExperimentConfig, Mode};
use feyncoh_cli::figures::{self, FigureOptions, FIGURE_IDS};
use feyncoh_cli::presets;
use feyncoh_cli::run::{self, RunError, RunOptions};

#[derive(Parser)]
#[command(name = "feyncoh", version, about = "Interference and coherence patterns from Feynman path sums")]
struct Cli {
    #[command(subcommand)]
    command: Command,
    /// Override the configuration seed.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Override the number of phase samples.
    #[arg(long, global = true)]
    samples: Option<usize>,
    /// Directory for the artifacts.
    #[arg(long, global = true)]
    out_dir: Option<PathBuf>,
    /// analytic, montecarlo or both.
    #[arg(long, global = true, value_parser = parse_mode)]
    mode: Option<Mode>,
}

#[derive(Subcommand)]
enum Command {
    /// Check a configuration file and report every problem.
    Validate { file: String },
    /// Run a configuration file (or a preset name) and write its artifacts.
    Run { file: String },
    /// Emit the data behind a figure.
    Reproduce { figure: String },
    /// List the bundled presets.
    ListPresets,
}

fn parse_mode(s: &str) -> Result<Mode, String> {
    Mode::from_name(s).ok_or_else(|| format!("expected one of: {}", Mode::NAMES.join(", ")))
}

/// Loads a file, falling back to a bundled preset of that name.
fn load(file: &str) -> Result<ExperimentConfig, RunError> {
    let path = PathBuf::from(file);
    if path.exists() {
        return config::parse_config(&path).map_err(RunError::Validation);
    }
    match presets::get(file) {
        Some(text) => config::parse_str(text).map_err(RunError::Validation),
        None => Err(RunError::Usage(format!("no such file or preset: {file}"))),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let threads = RunOptions::threads_from_env();
    let result = match &cli.command {
        Command::Validate { file } => load(file).map(|c| println!("{file}: valid {} configuration \"{}\"", c.experiment.name(), c.name)),
        Command::Run { file } => load(file).and_then(|cfg| {
            let opts = RunOptions { seed: cli.seed, samples: cli.samples, out_dir: cli.out_dir.clone(), mode: cli.mode, threads };
            let (out, dir) = run::run(&cfg, &opts)?;
            print!("{}", out.report_text());
            println!("artifacts written to {}", dir.display());
            Ok(())
        }),
        Command::Reproduce { figure } => {
            let opts = FigureOptions { seed: cli.seed.unwrap_or(0), runs: None, threads };
            figures::reproduce(figure, &opts).and_then(|fig| {
                let dir = cli.out_dir.clone().unwrap_or_else(|| PathBuf::from("out").join(&fig.id));
                figures::write_figure(&fig, &dir)?;
                print!("{}", fig.checks_text());
                println!("data written to {}", dir.display());
                if fig.passed() {
                    Ok(())
                } else {
                    Err(RunError::Numeric(format!("{} failed its shape checks", fig.id)))
                }
            })
        }
        Command::ListPresets => {
            for (name, text) in presets::PRESETS {
                println!("{name:<24} {}", presets::summary(text));
            }
            println!("\nfigures: {}", FIGURE_IDS.join(", "));
            Ok(())
        }
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprint!("{e}");
            if !matches!(e, RunError::Validation(_)) {
                eprintln!();
            }
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
