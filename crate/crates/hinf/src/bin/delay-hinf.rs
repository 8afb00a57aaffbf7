use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use delay_hinf::core::levelset::{predict_gmax, PredictorOptions, DEFAULT_MAX_LEVELS};
use delay_hinf::core::oracles::{sweep_oracle, sweep_singular_values};
use delay_hinf::core::spectral::{choose_n_with, DEFAULT_DELTA, N_MAX};
use delay_hinf::core::{check_stability, HinfOptions, ScaledSystem};
use delay_hinf::io::load_system;
use delay_hinf::output::{result_json, write_cutoff_csv, write_sweep_csv, write_trace};
use delay_hinf::{bench, cached_cutoff, compute_hinf_par, CliError};

#[derive(Parser)]
#[command(name = "delay-hinf", version, about = "H-infinity norms of retarded time-delay systems")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Clone)]
struct NormArgs {
    /// Discretization parameter (1..=60); default 15 or chosen from --omega-c
    #[arg(long = "N")]
    n: Option<usize>,
    /// Required cut-off frequency (original units); picks the smallest adequate N
    #[arg(long = "omega-c")]
    omega_c: Option<f64>,
    /// Candidate critical frequency used to start the level search
    #[arg(long = "omega-t")]
    omega_t: Option<f64>,
    #[arg(long, default_value_t = 1e-6)]
    tol: f64,
    #[arg(long, default_value_t = DEFAULT_DELTA)]
    delta: f64,
}

#[derive(Subcommand)]
enum Command {
    /// Print the norm as JSON
    Norm {
        system: PathBuf,
        #[command(flatten)]
        args: NormArgs,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Singular values of G(jw) on a frequency grid, as CSV
    Svplot {
        system: PathBuf,
        #[arg(long = "omega-max", default_value_t = 100.0)]
        omega_max: f64,
        #[arg(long, default_value_t = 2000)]
        points: usize,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Per-level record of the level-set search, as JSON lines
    LevelsetTrace {
        system: PathBuf,
        #[command(flatten)]
        args: NormArgs,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Cut-off frequency for N = 1..nmax, as CSV
    CutoffTable {
        #[arg(long, default_value_t = DEFAULT_DELTA)]
        delta: f64,
        #[arg(long, default_value_t = 25)]
        nmax: usize,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Run every system file in a directory
    Bench {
        dir: PathBuf,
        #[command(flatten)]
        args: NormArgs,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

fn sink(out: Option<&Path>) -> Result<Box<dyn Write>, CliError> {
    Ok(match out {
        Some(p) => Box::new(BufWriter::new(
            File::create(p).map_err(|e| CliError::Io(p.display().to_string(), e))?,
        )),
        None => Box::new(io::stdout().lock()),
    })
}

fn io_err(e: io::Error) -> CliError {
    CliError::Io("output".into(), e)
}

impl NormArgs {
    fn options(&self) -> Result<HinfOptions, CliError> {
        if !(self.tol > 0.0 && self.tol <= 0.1) {
            return Err(CliError::Usage(format!("--tol {} must lie in (0, 0.1]", self.tol)));
        }
        if let Some(n) = self.n {
            if !(1..=N_MAX).contains(&n) {
                return Err(CliError::Usage(format!("--N {n} must lie in 1..={N_MAX}")));
            }
        }
        if !(self.delta > 0.0 && self.delta < 1.0) {
            return Err(CliError::Usage(format!("--delta {} must lie in (0, 1)", self.delta)));
        }
        Ok(HinfOptions {
            n: self.n,
            omega_c: self.omega_c,
            omega_t: self.omega_t,
            tol: self.tol,
            delta: self.delta,
            ..HinfOptions::default()
        })
    }
}

fn run(cli: Cli) -> Result<(), CliError> {
    match cli.command {
        Command::Norm { system, args, out } => {
            let sys = load_system(&system)?;
            let res = compute_hinf_par(&sys, &args.options()?)?;
            let mut w = sink(out.as_deref())?;
            writeln!(w, "{}", result_json(&res)).map_err(io_err)?;
            w.flush().map_err(io_err)
        }
        Command::Svplot { system, omega_max, points, out } => {
            let sys = load_system(&system)?;
            let sweep = sweep_oracle(&sys, omega_max, points)?;
            let all = sweep_singular_values(&sys, &sweep.grid)?;
            write_sweep_csv(sink(out.as_deref())?, &sweep, &all)
        }
        Command::LevelsetTrace { system, args, out } => {
            let sys = load_system(&system)?;
            let opts = args.options()?;
            let stab = check_stability(&sys, opts.n_stab);
            if !stab.is_stable(delay_hinf::core::system::STABILITY_MARGIN) {
                return Err(delay_hinf::core::Error::Unstable { root: stab.root }.into());
            }
            let scaled = ScaledSystem::from_system(&sys);
            let n = match opts.n {
                Some(n) => n,
                None => choose_n_with(
                    opts.omega_c.map(|w| scaled.to_scaled_frequency(w)),
                    opts.delta,
                    cached_cutoff,
                )?,
            };
            let popts = PredictorOptions {
                n,
                omega_t: opts.omega_t.map(|w| scaled.to_scaled_frequency(w)),
                tol: opts.tol,
                max_levels: DEFAULT_MAX_LEVELS,
            };
            let pred = predict_gmax(&scaled, &popts)?;
            let mut w = sink(out.as_deref())?;
            write_trace(&mut w, &pred.history, scaled.scale).map_err(io_err)?;
            w.flush().map_err(io_err)
        }
        Command::CutoffTable { delta, nmax, out } => {
            if !(delta > 0.0 && delta < 1.0) || nmax == 0 || nmax > N_MAX {
                return Err(CliError::Usage(format!(
                    "need 0 < --delta < 1 and 1 <= --nmax <= {N_MAX}"
                )));
            }
            let rows: Vec<(usize, f64)> = (1..=nmax).map(|n| (n, cached_cutoff(n, delta))).collect();
            write_cutoff_csv(sink(out.as_deref())?, &rows)
        }
        Command::Bench { dir, args, out } => {
            let rows = bench::run_bench(&dir, &args.options()?)?;
            let mut w = sink(out.as_deref())?;
            write!(w, "{}", bench::format_table(&rows)).map_err(io_err)?;
            w.flush().map_err(io_err)
        }
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            let msg = serde_json::json!({ "error": e.category(), "detail": e.to_string() });
            eprintln!("{msg}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
