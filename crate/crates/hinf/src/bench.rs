//! Batch runs over a directory of system files.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use delay_hinf_core::spectral::{DEFAULT_N, N_MAX};
use delay_hinf_core::{HinfOptions, HinfResult, Warning};
use rayon::prelude::*;

use crate::io::load_system;
use crate::{compute_hinf_par, thread_pool, CliError};

#[derive(Debug, Clone)]
pub struct BenchRow {
    pub plant: String,
    pub n: usize,
    pub m: usize,
    pub n_used: usize,
    pub predicted: f64,
    pub corrected: f64,
    pub warnings: Vec<String>,
}

fn plant_name(path: &Path) -> String {
    path.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default()
}

fn has_cutoff_warning(res: &HinfResult) -> bool {
    res.warnings.iter().any(|w| matches!(w, Warning::CutOff { .. }))
}

/// With a fixed `N` in `opts` runs once; otherwise raises `N` from the
/// default until the cut-off warning disappears.
pub fn run_plant(path: &Path, opts: &HinfOptions) -> Result<BenchRow, CliError> {
    let sys = load_system(path)?;
    let mut res = compute_hinf_par(&sys, opts)?;
    if opts.n.is_none() && opts.omega_c.is_none() {
        let mut n = res.n.max(DEFAULT_N);
        while has_cutoff_warning(&res) && n < N_MAX {
            n += 1;
            res = compute_hinf_par(&sys, &HinfOptions { n: Some(n), ..*opts })?;
        }
    }
    Ok(BenchRow {
        plant: plant_name(path),
        n: sys.n(),
        m: sys.m(),
        n_used: res.n,
        predicted: res.predicted_norm,
        corrected: res.norm,
        warnings: res.warnings.iter().map(|w| w.to_string()).collect(),
    })
}

pub fn system_files(dir: &Path) -> Result<Vec<PathBuf>, CliError> {
    let entries = std::fs::read_dir(dir).map_err(|e| CliError::Io(dir.display().to_string(), e))?;
    let mut files: Vec<PathBuf> = entries
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.extension().is_some_and(|x| x == "json"))
        .collect();
    files.sort();
    Ok(files)
}

pub type BenchEntry = (String, Result<BenchRow, CliError>);

/// Runs every `*.json` file in `dir`, plants in parallel.
pub fn run_bench(dir: &Path, opts: &HinfOptions) -> Result<Vec<BenchEntry>, CliError> {
    let files = system_files(dir)?;
    Ok(thread_pool().install(|| files.par_iter().map(|p| (plant_name(p), run_plant(p, opts))).collect()))
}

pub fn format_table(rows: &[BenchEntry]) -> String {
    let mut s = String::new();
    let _ = writeln!(s, "{:<12} {:>8} {:>4} {:>12} {:>12}", "plant", "(n,m)", "N", "xi_pred", "xi_corr");
    for (plant, row) in rows {
        match row {
            Ok(r) => {
                let _ = writeln!(
                    s,
                    "{:<12} {:>8} {:>4} {:>12.4} {:>12.4}",
                    r.plant,
                    format!("({},{})", r.n, r.m),
                    r.n_used,
                    r.predicted,
                    r.corrected
                );
            }
            Err(e) => {
                let _ = writeln!(s, "{plant:<12} error: {e}");
            }
        }
    }
    s
}
