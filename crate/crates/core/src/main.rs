use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use maxreplace::cli::{self, RunOptions};

#[derive(Parser)]
#[command(name = "maxreplace", version, about = "Joint laws of maxima under random replacing and missing")]
struct Args {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run an experiment from a config file or a bundled preset name.
    Run {
        config: String,
        /// Seed; overrides the config and MAXREPLACE_SEED.
        #[arg(long)]
        seed: Option<u64>,
        /// Worker threads (results do not depend on this).
        #[arg(long, default_value_t = 0, hide_default_value = true)]
        workers: usize,
        /// Output directory; overrides `output.dir`.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// List bundled presets.
    Presets,
    /// Print the config text of a bundled preset.
    Show { name: String },
}

fn main() -> ExitCode {
    let args = Args::parse();
    match args.command {
        Command::Presets => {
            let presets = cli::list_presets();
            let width = presets.iter().map(|p| p.name.len()).max().unwrap_or(0);
            for p in presets {
                println!("{:width$}  {}", p.name, p.description);
            }
            ExitCode::SUCCESS
        }
        Command::Show { name } => match cli::preset_text(&name) {
            Some(text) => {
                print!("{text}");
                ExitCode::SUCCESS
            }
            None => {
                eprintln!("error: no preset named `{name}`");
                ExitCode::from(2)
            }
        },
        Command::Run {
            config,
            seed,
            workers,
            out,
        } => {
            let options = RunOptions {
                seed,
                workers,
                out,
                ..RunOptions::from_env()
            };
            let result = cli::load_config(&config).and_then(|c| cli::run_experiment(&c, &options));
            match result {
                Ok(summary) => {
                    println!("seed            {}", summary.seed);
                    println!("sup distance    {:.6}", summary.sup_distance);
                    println!("mc std error    {:.6}", summary.mc_standard_error);
                    println!("perturbed sup   {:.6}", summary.perturbed_marginal_sup);
                    println!("original sup    {:.6}", summary.original_marginal_sup);
                    println!("output          {}", summary.output_dir.display());
                    ExitCode::SUCCESS
                }
                Err(e) => {
                    eprintln!("error: {e}");
                    ExitCode::from(e.exit_code() as u8)
                }
            }
        }
    }
}
