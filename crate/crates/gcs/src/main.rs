use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use gcs::experiment::{self, Overrides};
use gcs::io::resolve_constellation;
use gcs::sweep::SweepOutput;
use gcs::{Error, Result};

/// Learn and evaluate geometrically shaped constellations.
#[derive(Debug, Parser)]
#[command(name = "gcs", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Train the constellation(s) of a scenario config.
    Train {
        config: PathBuf,
        /// Output directory (overrides `output_dir`).
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Run a test sweep from a config or a manifest.json.
    Test {
        input: PathBuf,
        #[command(flatten)]
        sweep: SweepArgs,
        /// Additional constellation to test (`qam:<M>` or a file); repeatable.
        #[arg(long = "constellation")]
        constellations: Vec<String>,
    },
    /// Train, then test against QAM with the `test.` keys of the config.
    Sweep {
        config: PathBuf,
        #[command(flatten)]
        sweep: SweepArgs,
        /// Additional baseline constellation; repeatable.
        #[arg(long = "constellation")]
        constellations: Vec<String>,
    },
    /// Print cardinality, mean power and moments of a constellation.
    Moments { constellation: String },
}

#[derive(Debug, Args)]
struct SweepArgs {
    #[arg(long)]
    out: Option<PathBuf>,
    /// 100 runs of 10^5 symbols per point instead of 10 of 10^4.
    #[arg(long)]
    paper_scale: bool,
    /// Number of BPS test phases.
    #[arg(long)]
    bps_phases: Option<usize>,
    /// BPS half window.
    #[arg(long)]
    bps_window: Option<usize>,
}

impl SweepArgs {
    fn overrides(self, constellations: Vec<String>) -> Overrides {
        Overrides {
            output_dir: self.out,
            paper_scale: self.paper_scale,
            bps_phases: self.bps_phases,
            bps_window: self.bps_window,
            constellations,
        }
    }
}

fn report(out: &SweepOutput) {
    for r in &out.results {
        println!("{}\t{:?}\t{:.4} ± {:.4}", r.constellation, r.point, r.mean, r.stderr);
    }
    println!("wrote {}", out.csv_path.display());
    println!("wrote {}", out.manifest_path.display());
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Train { config, out } => {
            let o = Overrides {
                output_dir: out,
                ..Overrides::default()
            };
            for t in experiment::train(&config, &o)? {
                println!(
                    "{}\tepochs {}\tfinal loss {:.5}\t{}",
                    t.job.name,
                    t.loss_history.len(),
                    t.loss_history.last().copied().unwrap_or(f64::NAN),
                    t.constellation_path.display()
                );
            }
        }
        Command::Test {
            input,
            sweep,
            constellations,
        } => report(&experiment::test(&input, &sweep.overrides(constellations))?),
        Command::Sweep {
            config,
            sweep,
            constellations,
        } => {
            let (trained, out) = experiment::sweep(&config, &sweep.overrides(constellations))?;
            for t in &trained {
                println!("trained {}", t.constellation_path.display());
            }
            report(&out);
        }
        Command::Moments { constellation } => {
            let c = resolve_constellation(&constellation)?;
            let m = c.moments()?;
            println!(
                "name={} M={} mean_power={} mu4={} mu6={}",
                c.name(),
                c.cardinality(),
                c.mean_power(),
                m.mu4,
                m.mu6
            );
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) if !e.use_stderr() => {
            // --help and --version
            let _ = e.print();
            return ExitCode::SUCCESS;
        }
        Err(e) => {
            let first = e.to_string().lines().next().unwrap_or("").trim_start_matches("error: ").to_string();
            let err = Error::Usage(first);
            eprintln!("{}", err.report_line());
            return ExitCode::from(err.exit_code() as u8);
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("{}", e.report_line());
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
