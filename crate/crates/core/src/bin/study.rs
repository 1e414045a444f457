//! Convergence-study driver.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use fatigue_core::inference::{Discretization, WidthScale};
use fatigue_core::model::MaterialParams;
use fatigue_core::study::{
    emit_failure_curve, run_discretization_study, run_grid, run_study, Manifest, Method, Profile, StudyConfig,
    DISCRETIZATION_ITERATIONS,
};
use fatigue_core::Error;

#[derive(Parser)]
#[command(name = "study", about = "Simulated fatigue-testing convergence studies")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// One (method, misspecification, width) cell.
    Run(RunArgs),
    /// Paired runs without and with rounding to multiples of ten.
    Discretization(RunArgs),
    /// Every method over the misspecification and width grid.
    Grid(RunArgs),
    /// Failure probability over a load range.
    FailureCurve(CurveArgs),
}

#[derive(Clone, Copy, ValueEnum)]
enum MethodArg {
    Staircase,
    Entropy,
    Map,
}

#[derive(Clone, Copy, ValueEnum)]
enum DiscArg {
    None,
    Ten,
}

#[derive(Clone, Copy, ValueEnum)]
enum ProfileArg {
    Paper,
    Ci,
}

#[derive(Clone, Copy, ValueEnum)]
enum WidthScaleArg {
    /// Width is the prior standard deviation of mu in N.
    Load,
    /// Width is 10^(std of log10 mu).
    Log10,
}

#[derive(Args)]
struct RunArgs {
    #[arg(long, value_enum, default_value = "entropy")]
    method: MethodArg,
    #[arg(long, default_value_t = 0.0, allow_hyphen_values = true)]
    misspec_pct: f64,
    #[arg(long, default_value_t = 10.0)]
    prior_width: f64,
    #[arg(long, value_enum, default_value = "load")]
    width_scale: WidthScaleArg,
    #[arg(long, value_enum, default_value = "none")]
    discretize: DiscArg,
    #[arg(long, value_enum, default_value = "ci")]
    profile: ProfileArg,
    #[arg(long)]
    runs: Option<usize>,
    #[arg(long)]
    iters: Option<usize>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    grid_points: Option<usize>,
    #[arg(long)]
    entropy_samples: Option<usize>,
    /// Abort instead of continuing when the posterior vanishes.
    #[arg(long)]
    strict: bool,
    #[arg(long, default_value = "study-out")]
    out: PathBuf,
}

#[derive(Args)]
struct CurveArgs {
    #[arg(long, default_value_t = 400.0)]
    mu: f64,
    #[arg(long, default_value_t = 1.071_519_305_237_606_2)]
    sigma: f64,
    #[arg(long, default_value_t = 300.0)]
    lo: f64,
    #[arg(long, default_value_t = 530.0)]
    hi: f64,
    #[arg(long, default_value_t = 231)]
    n: usize,
    /// Output file; standard output when omitted.
    #[arg(long)]
    out: Option<PathBuf>,
}

impl RunArgs {
    fn config(&self, default_iters: usize) -> StudyConfig {
        let method = match self.method {
            MethodArg::Staircase => Method::Staircase,
            MethodArg::Entropy => Method::Entropy,
            MethodArg::Map => Method::Map,
        };
        let profile = match self.profile {
            ProfileArg::Paper => Profile::Paper,
            ProfileArg::Ci => Profile::Ci,
        };
        let mut c = StudyConfig::new(method, profile);
        c.mean_misspec_pct = self.misspec_pct;
        c.prior_width = self.prior_width;
        c.width_scale = match self.width_scale {
            WidthScaleArg::Load => WidthScale::Load,
            WidthScaleArg::Log10 => WidthScale::Log10Exponent,
        };
        c.discretization = match self.discretize {
            DiscArg::None => Discretization::None,
            DiscArg::Ten => Discretization::MinusOne,
        };
        c.n_iterations = self.iters.unwrap_or(default_iters);
        c.n_runs = self.runs.unwrap_or(c.n_runs);
        c.grid_points = self.grid_points.unwrap_or(c.grid_points);
        c.entropy_samples = self.entropy_samples.unwrap_or(c.entropy_samples);
        c.seed = self.seed;
        c.allow_degenerate = !self.strict;
        c
    }
}

fn execute(cli: Cli) -> Result<(), Error> {
    match cli.command {
        Command::Run(a) => {
            let r = run_study(&a.config(fatigue_core::study::MISSPEC_ITERATIONS))?;
            let mut m = Manifest::default();
            let path = m.add(&a.out, &r)?;
            m.write(&a.out)?;
            println!(
                "{}: final mean residual {:.3} N, {} divergent runs, {:.1} s -> {}",
                r.config.cell_name(),
                r.final_mean(),
                r.divergent_runs(),
                r.wall_time_secs,
                path.display()
            );
        }
        Command::Discretization(a) => {
            let d = run_discretization_study(&a.config(DISCRETIZATION_ITERATIONS))?;
            let mut m = Manifest::default();
            m.add(&a.out, &d.undiscretized)?;
            m.add(&a.out, &d.discretized)?;
            m.write(&a.out)?;
            let stem = d.undiscretized.config.cell_name().replace("_none", "_paired");
            d.write_csv(std::fs::File::create(a.out.join(format!("{stem}.csv")))?)?;
            println!("final |none - ten| = {:.3} N (band +/- {:.3})", d.final_gap(), d.band_95.last().unwrap());
        }
        Command::Grid(a) => {
            let m = run_grid(&a.config(fatigue_core::study::MISSPEC_ITERATIONS), &a.out)?;
            for c in &m.cells {
                println!("{:<50} {:>10.3}", c.file, c.final_mean_residual);
            }
        }
        Command::FailureCurve(c) => {
            let params = MaterialParams::new(c.mu, c.sigma)?;
            match c.out {
                Some(p) => emit_failure_curve(&params, c.lo, c.hi, c.n, std::fs::File::create(p)?)?,
                None => emit_failure_curve(&params, c.lo, c.hi, c.n, std::io::stdout().lock())?,
            }
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("error")).init();
    match execute(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            match e {
                Error::Config(_) | Error::Domain(_) => ExitCode::from(2),
                Error::DegeneratePosterior(_) => ExitCode::from(3),
                _ => ExitCode::FAILURE,
            }
        }
    }
}
