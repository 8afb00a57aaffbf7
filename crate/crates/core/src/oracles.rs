//! Reference computations: a dense frequency sweep of `sigma_1(G(jw))` and
//! the classical Hamiltonian bisection for delay-free systems.

use alloc::vec::Vec;

#[allow(unused_imports)]
use num_traits::Float;

use crate::error::{Error, Result};
use crate::levelset::axis_tolerance;
use crate::linalg::{self, RMat};
use crate::system::{eval_transfer, DelaySystem};

#[derive(Debug, Clone, PartialEq)]
pub struct SweepResult {
    pub grid: Vec<f64>,
    pub values: Vec<f64>,
    pub argmax: f64,
    pub max: f64,
}

/// Hybrid grid: `h = ceil(npoints / 2)` linear points `i / h` on `[0, 1)`
/// followed by `h + 1` log-spaced points on `[1, omega_max]`. Doubling
/// `npoints` (for even counts) yields a superset.
pub fn sweep_grid(omega_max: f64, npoints: usize) -> Vec<f64> {
    let h = npoints.div_ceil(2).max(1);
    if omega_max <= 1.0 {
        let total = 2 * h;
        return (0..=total).map(|i| omega_max * i as f64 / total as f64).collect();
    }
    let lmax = omega_max.log10();
    let mut grid: Vec<f64> = (0..h).map(|i| i as f64 / h as f64).collect();
    grid.extend((0..=h).map(|j| {
        if j == h {
            omega_max
        } else {
            10f64.powf(lmax * j as f64 / h as f64)
        }
    }));
    grid
}

/// All singular values of `G(jw)` (descending) at each grid frequency.
pub fn sweep_singular_values(sys: &DelaySystem, grid: &[f64]) -> Result<Vec<Vec<f64>>> {
    grid.iter()
        .map(|&w| Ok(linalg::singular_values(&eval_transfer(sys, w)?)))
        .collect()
}

/// Max of `sigma_1(G(jw))` over [`sweep_grid`]; a lower bound on the norm.
pub fn sweep_oracle(sys: &DelaySystem, omega_max: f64, npoints: usize) -> Result<SweepResult> {
    if !(omega_max > 0.0) || npoints < 2 {
        return Err(Error::Value("sweep needs omega_max > 0 and at least 2 points".into()));
    }
    let grid = sweep_grid(omega_max, npoints);
    let values: Vec<f64> = grid
        .iter()
        .map(|&w| Ok(linalg::sigma_max(&eval_transfer(sys, w)?)))
        .collect::<Result<_>>()?;
    let (k, max) = values
        .iter()
        .copied()
        .enumerate()
        .fold((0, f64::NEG_INFINITY), |acc, (i, v)| if v > acc.1 { (i, v) } else { acc });
    Ok(SweepResult { argmax: grid[k], grid, values, max })
}

/// The Hamiltonian matrix whose imaginary eigenvalues mark the frequencies
/// where `xi` is a singular value of `C (sI - A)^{-1} B + D`.
pub fn hamiltonian(a: &RMat, b: &RMat, c: &RMat, d: &RMat, xi: f64) -> Option<RMat> {
    let n = a.nrows();
    let nu = d.ncols();
    let ny = d.nrows();
    let r = RMat::identity(nu, nu) * (xi * xi) - d.transpose() * d;
    let rinv = r.try_inverse()?;
    let ah = a + b * &rinv * d.transpose() * c;
    let q = c.transpose() * (RMat::identity(ny, ny) + d * &rinv * d.transpose()) * c;
    let mut h = RMat::zeros(2 * n, 2 * n);
    h.view_mut((0, 0), (n, n)).copy_from(&ah);
    h.view_mut((0, n), (n, n)).copy_from(&(b * &rinv * b.transpose()));
    h.view_mut((n, 0), (n, n)).copy_from(&(-q));
    h.view_mut((n, n), (n, n)).copy_from(&(-ah.transpose()));
    Some(h)
}

fn has_axis_eigenvalue(sys: &DelaySystem, a: &RMat, xi: f64) -> Result<bool> {
    let h = match hamiltonian(a, sys.b(), sys.c(), sys.d(), xi) {
        Some(h) => h,
        // xi is a singular value of D: treat as a crossing level
        None => return Ok(true),
    };
    let tol = axis_tolerance(1);
    Ok(linalg::real_eigenvalues(&h)?
        .iter()
        .any(|z| z.re.abs() <= tol * z.im.abs().max(1.0)))
}

/// Bisection on `xi` for a delay-free system: the lower end always has
/// imaginary-axis eigenvalues, the upper end none. Stops at relative width
/// `tol` and returns the midpoint.
pub fn hamiltonian_oracle(sys: &DelaySystem, tol: f64) -> Result<f64> {
    if !sys.is_delay_free() {
        return Err(Error::Value("Hamiltonian oracle needs a delay-free system".into()));
    }
    if !(tol > 0.0) {
        return Err(Error::Value("tol must be positive".into()));
    }
    let mut a = sys.a()[0].clone();
    for ai in &sys.a()[1..] {
        a += ai;
    }
    if let Some(root) = linalg::real_eigenvalues(&a)?
        .into_iter()
        .max_by(|x, y| x.re.total_cmp(&y.re))
    {
        if root.re >= 0.0 {
            return Err(Error::Unstable { root });
        }
    }
    let g0 = linalg::sigma_max(&eval_transfer(sys, 0.0)?);
    let sigma_d = linalg::real_singular_values(sys.d()).first().copied().unwrap_or(0.0);
    let bound = g0.max(sigma_d);
    if bound == 0.0 {
        return Ok(0.0);
    }
    let mut lo = bound * (1.0 + tol);
    if !has_axis_eigenvalue(sys, &a, lo)? {
        return Ok(bound);
    }
    let mut hi = 2.0 * lo;
    while has_axis_eigenvalue(sys, &a, hi)? {
        lo = hi;
        hi *= 2.0;
        if hi > 1e15 {
            return Err(Error::NonFiniteGmax { xi: hi });
        }
    }
    while hi - lo > tol * lo {
        let mid = 0.5 * (lo + hi);
        if has_axis_eigenvalue(sys, &a, mid)? {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(0.5 * (lo + hi))
}
