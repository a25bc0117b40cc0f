use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use holovlc::cgh::AnnealSchedule;
use holovlc::sweep::{self, RunConfig};
use holovlc::Error;

#[derive(Parser)]
#[command(
    name = "holovlc",
    version,
    about = "Indoor VLC channel and hologram beam simulator"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Receiver sweep with source selection, with and without the hologram beam
    Sweep(Common),
    /// Floor illuminance minima for a list of redirected fractions
    Illum {
        #[command(flatten)]
        common: Common,
        /// Fractions to evaluate besides the baseline; bare `--fractions` means none
        #[arg(long, value_delimiter = ',', num_args = 0.., default_values_t = vec![0.2, 0.3, 0.4])]
        fractions: Vec<f64>,
    },
    /// Anneal a phase hologram for the beam cell
    CghDesign {
        #[command(flatten)]
        common: Common,
        /// Cooling factor per stage
        #[arg(long)]
        cooling: Option<f64>,
        /// Proposals per temperature stage
        #[arg(long)]
        iterations: Option<usize>,
    },
    /// Dump a single impulse response
    Ir {
        #[command(flatten)]
        common: Common,
        /// Receiver y; the receiver x comes from the first --x value
        #[arg(long, default_value_t = 1.0)]
        y: f64,
        /// Transmitting luminaire; selected by probing when omitted
        #[arg(long)]
        luminaire: Option<u32>,
    },
}

#[derive(Args)]
struct Common {
    /// Scene JSON file (room A when omitted)
    #[arg(long)]
    scene: Option<PathBuf>,
    /// Highest reflection order (0, 1 or 2)
    #[arg(long, default_value_t = 2)]
    order: u8,
    /// Time bin width, seconds
    #[arg(long, default_value_t = 10e-12)]
    dt: f64,
    /// Enable the hologram beam
    #[arg(long, default_value_t = false)]
    cgh: bool,
    /// Design share of the selected luminaire's power in the beam
    #[arg(long, default_value_t = 0.3)]
    fraction: f64,
    /// Precomputed hologram CSV (with JSON sidecar)
    #[arg(long)]
    hologram: Option<PathBuf>,
    #[arg(long, default_value_t = 1)]
    seed: u64,
    /// Output directory
    #[arg(long, default_value = "out")]
    out: PathBuf,
    /// Receiver x values of the sweep lines
    #[arg(long, value_delimiter = ',', default_values_t = vec![1.0, 2.0])]
    x: Vec<f64>,
    /// Inclusive y range as start,end
    #[arg(long, value_delimiter = ',', allow_negative_numbers = true, default_values_t = vec![1.0, 7.0])]
    y_range: Vec<f64>,
    /// Receiver step along y, meters
    #[arg(long, default_value_t = 1.0)]
    step: f64,
}

impl Common {
    fn config(&self) -> Result<RunConfig, Error> {
        if self.y_range.len() != 2 {
            return Err(Error::Config(format!(
                "--y-range takes exactly two values, got {}",
                self.y_range.len()
            )));
        }
        Ok(RunConfig {
            scene: self.scene.clone(),
            x_values: self.x.clone(),
            y_range: (self.y_range[0], self.y_range[1]),
            step: self.step,
            order: self.order,
            dt: self.dt,
            cgh: self.cgh,
            fraction: self.fraction,
            hologram: self.hologram.clone(),
            seed: self.seed,
            out_dir: self.out.clone(),
            ..RunConfig::default()
        })
    }
}

fn run(cli: Cli) -> Result<(), Error> {
    match cli.command {
        Command::Sweep(common) => {
            let cfg = common.config()?;
            let res = sweep::run_sweep(&cfg)?;
            println!(
                "{} positions written to {}",
                res.positions.len(),
                cfg.out_dir.display()
            );
        }
        Command::Illum { common, fractions } => {
            let cfg = common.config()?;
            for r in sweep::run_illumination(&cfg, &fractions)? {
                println!(
                    "f = {:.2}  min = {:.1} lx  {}",
                    r.fraction,
                    r.min_lux,
                    if r.compliant {
                        "compliant"
                    } else {
                        "below 300 lx"
                    }
                );
            }
        }
        Command::CghDesign {
            common,
            cooling,
            iterations,
        } => {
            let mut cfg = common.config()?;
            let d = AnnealSchedule::default();
            cfg.schedule = AnnealSchedule {
                cooling: cooling.unwrap_or(d.cooling),
                iterations_per_stage: iterations.unwrap_or(d.iterations_per_stage),
                ..d
            };
            let r = sweep::run_cgh_design(&cfg)?;
            println!(
                "cf {:.6} -> {:.6}, in-window efficiency {:.4}",
                r.initial_cf, r.best_cf, r.efficiency
            );
        }
        Command::Ir {
            common,
            y,
            luminaire,
        } => {
            let cfg = common.config()?;
            let x = cfg.x_values.first().copied().unwrap_or(1.0);
            let r = sweep::run_ir(&cfg, x, y, luminaire)?;
            let m = &r.metrics;
            println!(
                "luminaire {}  Pr {:.4e} W  D {:.4e} s  BW {:.4e} Hz",
                r.luminaire_id, m.received_power_w, m.delay_spread_s, m.bandwidth_hz
            );
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(if e.is_config() { 2 } else { 3 })
        }
    }
}
