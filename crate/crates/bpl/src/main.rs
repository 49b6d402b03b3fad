use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use bpl::commands::{self, Outcome, EXIT_ERROR, EXIT_OK};
use bpl::config::CommonFlags;
use bpl::demos::Overrides;
use bpl_core::verify::Level;

#[derive(Parser)]
#[command(
    name = "bpl",
    version,
    about = "Bayesian inversion demonstrations and their verification suite"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
#[allow(clippy::large_enum_variant)]
enum Command {
    /// Run one demonstration and write its report and tables.
    Demo {
        /// borel, hierarchical, misfit, transdim-uniform, transdim-gaussian, fig7 or units.
        name: String,
        #[command(flatten)]
        common: Common,
        #[command(flatten)]
        overrides: OverrideArgs,
    },
    /// Compare every closed form against its quadrature, Monte Carlo or chain route.
    Verify {
        #[arg(long, value_enum, default_value = "fast")]
        level: LevelArg,
        #[command(flatten)]
        common: Common,
        /// Multiplies the first Gaussian Bayes-factor constant (negative control).
        #[arg(long, hide = true)]
        corrupt_constant: Option<f64>,
    },
}

#[derive(Args)]
struct Common {
    /// JSON file with `seed`, `out`, `format` and a `params` block.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Output directory (default bpl-out/<demo>).
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
    /// Comma-separated list of json and csv.
    #[arg(long)]
    format: Option<String>,
}

#[derive(Args)]
struct OverrideArgs {
    /// borel: lower velocity bound of both rays [m/s].
    #[arg(long, allow_negative_numbers = true)]
    v_min: Option<f64>,
    /// borel: upper velocity bound of both rays [m/s].
    #[arg(long, allow_negative_numbers = true)]
    v_max: Option<f64>,
    /// borel: points on the conditioning curve.
    #[arg(long)]
    grid_points: Option<usize>,
    /// hierarchical: hyperprior weight of the first lambda atom.
    #[arg(long)]
    pi_lambda: Option<f64>,
    /// hierarchical: hyperprior weight of the first delta atom.
    #[arg(long)]
    pi_delta: Option<f64>,
    /// hierarchical, misfit: forward constant in d = k m.
    #[arg(long, allow_negative_numbers = true)]
    k: Option<f64>,
    /// misfit: comma-separated observed data.
    #[arg(long, allow_hyphen_values = true)]
    d_obs: Option<String>,
    /// misfit: standard deviation of the model prior.
    #[arg(long)]
    prior_sigma: Option<f64>,
    /// transdim-uniform: ray length [m].
    #[arg(long)]
    length: Option<f64>,
    /// transdim-uniform: lower slowness bound [s/m].
    #[arg(long, allow_negative_numbers = true)]
    s_min: Option<f64>,
    /// transdim-uniform: upper slowness bound [s/m].
    #[arg(long, allow_negative_numbers = true)]
    s_max: Option<f64>,
    /// transdim-uniform: Monte Carlo points.
    #[arg(long)]
    mc_points: Option<usize>,
    /// transdim-uniform, transdim-gaussian: reversible-jump steps (0 skips the chain).
    #[arg(long)]
    rj_steps: Option<usize>,
    /// transdim-gaussian: data prior standard deviation [s].
    #[arg(long)]
    sigma_d: Option<f64>,
    /// transdim-gaussian: slowness prior standard deviation [s/m].
    #[arg(long)]
    sigma_s: Option<f64>,
    /// fig7: sigma_d grid as min:max:n.
    #[arg(long)]
    sigma_d_grid: Option<String>,
    /// fig7: sigma_s grid as min:max:n.
    #[arg(long)]
    sigma_s_grid: Option<String>,
    /// units: slowness rescaling factor.
    #[arg(long)]
    scale: Option<f64>,
}

#[derive(Clone, Copy, ValueEnum)]
enum LevelArg {
    Fast,
    Full,
}

impl From<Common> for CommonFlags {
    fn from(c: Common) -> Self {
        Self {
            config: c.config,
            out: c.out,
            seed: c.seed,
            format: c.format,
        }
    }
}

impl From<OverrideArgs> for Overrides {
    fn from(o: OverrideArgs) -> Self {
        Self {
            v_min: o.v_min,
            v_max: o.v_max,
            grid_points: o.grid_points,
            pi_lambda: o.pi_lambda,
            pi_delta: o.pi_delta,
            k: o.k,
            d_obs: o.d_obs,
            prior_sigma: o.prior_sigma,
            length: o.length,
            s_min: o.s_min,
            s_max: o.s_max,
            mc_points: o.mc_points,
            rj_steps: o.rj_steps,
            sigma_d: o.sigma_d,
            sigma_s: o.sigma_s,
            sigma_d_grid: o.sigma_d_grid,
            sigma_s_grid: o.sigma_s_grid,
            scale: o.scale,
        }
    }
}

fn exit(code: i32) -> ExitCode {
    ExitCode::from(code as u8)
}

fn print_outcome(o: &Outcome) {
    for n in &o.notes {
        eprintln!("{n}");
    }
    for f in &o.failures {
        eprintln!("FAILED: {f}");
    }
    for f in &o.files {
        eprintln!("wrote {}", f.display());
    }
    eprintln!("{}", if o.verified { "verified" } else { "verification failed" });
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_ERROR } else { EXIT_OK };
            let _ = e.print();
            return exit(code);
        }
    };
    match commands::threads_from_env(std::env::var("BPL_THREADS").ok().as_deref()) {
        Ok(Some(n)) => {
            if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(n).build_global() {
                eprintln!("error: cannot start {n} worker threads: {e}");
                return exit(EXIT_ERROR);
            }
        }
        Ok(None) => {}
        Err(e) => {
            eprintln!("error: {e}");
            return exit(EXIT_ERROR);
        }
    }
    let result = match cli.command {
        Command::Demo {
            name,
            common,
            overrides,
        } => commands::demo(&name, &common.into(), &overrides.into()),
        Command::Verify {
            level,
            common,
            corrupt_constant,
        } => {
            let level = match level {
                LevelArg::Fast => Level::Fast,
                LevelArg::Full => Level::Full,
            };
            commands::verify(level, &common.into(), corrupt_constant)
        }
    };
    match result {
        Ok(o) => {
            print_outcome(&o);
            exit(o.exit_code())
        }
        Err(e) => {
            eprintln!("error: {e}");
            exit(EXIT_ERROR)
        }
    }
}
