//! File formats, output writers and the parallel driver around
//! [`delay_hinf_core`].

use std::collections::HashMap;
use std::sync::{Mutex, OnceLock};

use delay_hinf_core::corrector::compute_hinf_with;
use delay_hinf_core::spectral::{choose_n_with, cutoff_frequency};
use delay_hinf_core::{DelaySystem, Error, HinfOptions, HinfResult, ScaledSystem};
use rayon::prelude::*;

pub mod bench;
pub mod io;
pub mod output;

pub use delay_hinf_core as core;

pub const THREADS_ENV: &str = "DELAY_HINF_THREADS";

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("cannot read {0}: {1}")]
    Io(String, #[source] std::io::Error),
    #[error("malformed system file: {0}")]
    Parse(#[from] serde_json::Error),
    #[error("{0}")]
    Shape(String),
    #[error("{0}")]
    Usage(String),
    #[error(transparent)]
    Model(#[from] Error),
    #[error("csv output failed: {0}")]
    Csv(#[from] csv::Error),
}

impl CliError {
    pub fn category(&self) -> &'static str {
        match self {
            CliError::Io(..) | CliError::Csv(_) => "io",
            CliError::Parse(_) => "parse",
            CliError::Shape(_) => "dimension",
            CliError::Usage(_) => "usage",
            CliError::Model(e) => match e {
                Error::Dimension(_) => "dimension",
                Error::Value(_) | Error::DegenerateDelays => "value",
                Error::Unstable { .. } => "unstable",
                _ => "numerical",
            },
        }
    }

    /// 2 for bad input, 4 for an unstable system, 3 for numerical failures.
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Model(Error::Unstable { .. }) => 4,
            CliError::Model(e) if !e.is_input_error() => 3,
            _ => 2,
        }
    }
}

type CutoffKey = (usize, u64);

fn cutoff_cache() -> &'static Mutex<HashMap<CutoffKey, f64>> {
    static CACHE: OnceLock<Mutex<HashMap<CutoffKey, f64>>> = OnceLock::new();
    CACHE.get_or_init(|| Mutex::new(HashMap::new()))
}

/// Memoized cut-off frequency of `p_N`.
pub fn cached_cutoff(n: usize, delta: f64) -> f64 {
    let key = (n, delta.to_bits());
    if let Some(v) = cutoff_cache().lock().expect("cache lock").get(&key) {
        return *v;
    }
    let v = cutoff_frequency(n, delta);
    cutoff_cache().lock().expect("cache lock").insert(key, v);
    v
}

/// [`delay_hinf_core::compute_hinf`] with candidates corrected in parallel
/// and `N` chosen from the cached cut-off table.
pub fn compute_hinf_par(sys: &DelaySystem, opts: &HinfOptions) -> Result<HinfResult, CliError> {
    let mut opts = *opts;
    if opts.n.is_none() && opts.omega_c.is_some() {
        let scaled = ScaledSystem::from_system(sys);
        let target = opts.omega_c.map(|w| scaled.to_scaled_frequency(w));
        opts.n = Some(choose_n_with(target, opts.delta, cached_cutoff)?);
    }
    Ok(compute_hinf_with(sys, &opts, |starts, correct| {
        starts.par_iter().map(correct).collect()
    })?)
}

/// Thread pool honoring `DELAY_HINF_THREADS` (unset or 0: rayon's default).
pub fn thread_pool() -> rayon::ThreadPool {
    let threads = std::env::var(THREADS_ENV)
        .ok()
        .and_then(|v| v.trim().parse::<usize>().ok())
        .unwrap_or(0);
    rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build()
        .expect("thread pool")
}
