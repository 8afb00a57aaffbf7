//! Gauss-Newton correction of predicted peaks and final result assembly.
//!
//! At a peak `(w, xi)` of a singular value curve, `lambda = jw` is a
//! non-semisimple eigenvalue of `H(lambda, xi)`. The unknowns
//! `(Re v1, Im v1, Re v2, Im v2, w, xi)` satisfy `4n + 3` real equations:
//! `H(jw, xi) v = 0`, a complex normalization against a frozen reference
//! vector, and the real Jordan condition `Im{v2^* K(w, xi) v1} = 0`.

use alloc::vec::Vec;
use core::fmt;

use nalgebra::DVector;

use crate::error::{Error, Result};
use crate::levelset::{
    axis_tolerance, blocks_nudged, build_h_blocks, eval_h, eval_h_dlambda, eval_h_dxi,
    imaginary_eigs, predict_gmax, HBlocks, Prediction, PredictorOptions, DEFAULT_TOL,
};
use crate::linalg::{self, c, CMat, CVec, RMat, C64};
use crate::spectral::{cheb_grid, choose_n, cutoff_frequency, diff_data, DiscretizedOperator, DEFAULT_DELTA};
use crate::system::{
    check_stability, eval_transfer, DelaySystem, ScaledSystem, StabilityEstimate, DEFAULT_N_STAB,
    STABILITY_MARGIN,
};

pub const DEFAULT_MAX_ITER: usize = 50;
pub const DEFAULT_RTOL: f64 = 1e-12;
const STEP_TOL: f64 = 1e-14;
const RANK_TOL: f64 = 1e-10;
const LARGE_CORRECTION: f64 = 0.1;
const MULTIPLICITY_TOL: f64 = 1e-9;
const CERTIFY_TOL: f64 = 1e-8;

/// One Gauss-Newton iterate.
#[derive(Debug, Clone, PartialEq)]
pub struct CorrectionPoint {
    pub omega: f64,
    pub xi: f64,
    pub v1: CVec,
    pub v2: CVec,
    /// Normalization reference `c` in `c^* v = 1`.
    pub reference: CVec,
    pub residual_norm: f64,
    pub iterations: usize,
    pub converged: bool,
}

impl CorrectionPoint {
    /// Starting point at `(omega, xi)` with `v` the smallest right singular
    /// vector of `H(j omega, xi)`.
    pub fn start(omega: f64, xi: f64, h: &CMat) -> Self {
        let (v1, v2) = init_nullvector(h);
        let mut reference = CVec::zeros(v1.len() + v2.len());
        reference.rows_mut(0, v1.len()).copy_from(&v1);
        reference.rows_mut(v1.len(), v2.len()).copy_from(&v2);
        CorrectionPoint {
            omega,
            xi,
            v1,
            v2,
            reference,
            residual_norm: f64::INFINITY,
            iterations: 0,
            converged: false,
        }
    }

    fn n(&self) -> usize {
        self.v1.len()
    }

    fn stacked(&self) -> CVec {
        let n = self.n();
        let mut v = CVec::zeros(2 * n);
        v.rows_mut(0, n).copy_from(&self.v1);
        v.rows_mut(n, n).copy_from(&self.v2);
        v
    }

    fn pack(&self) -> DVector<f64> {
        let n = self.n();
        let mut x = DVector::zeros(4 * n + 2);
        for k in 0..n {
            x[k] = self.v1[k].re;
            x[n + k] = self.v1[k].im;
            x[2 * n + k] = self.v2[k].re;
            x[3 * n + k] = self.v2[k].im;
        }
        x[4 * n] = self.omega;
        x[4 * n + 1] = self.xi;
        x
    }

    fn unpack(&mut self, x: &DVector<f64>) {
        let n = self.n();
        for k in 0..n {
            self.v1[k] = C64::new(x[k], x[n + k]);
            self.v2[k] = C64::new(x[2 * n + k], x[3 * n + k]);
        }
        self.omega = x[4 * n];
        self.xi = x[4 * n + 1];
    }
}

/// Smallest right singular vector of `h`, split into its top and bottom halves.
pub fn init_nullvector(h: &CMat) -> (CVec, CVec) {
    let (_, v) = linalg::smallest_singular_pair(h);
    let n = v.len() / 2;
    (v.rows(0, n).into_owned(), v.rows(n, v.len() - n).into_owned())
}

/// The matrix `K(w, xi)` of the Jordan condition and its derivatives in
/// `w` and `xi`.
fn jordan_matrices(blocks: &HBlocks, omega: f64, sys: &ScaledSystem) -> (CMat, CMat, CMat) {
    let s = &sys.sys;
    let n = s.n();
    let tau = s.tau();
    let mut k = CMat::identity(n, n);
    let mut k_omega = CMat::zeros(n, n);
    for (ai, t) in s.a()[1..].iter().zip(&tau[1..]) {
        let e = linalg::cis(-omega * t);
        let ac = linalg::to_complex(ai);
        k += &ac * (e * *t);
        k_omega += ac * (e * C64::new(0.0, -t * t));
    }
    let t0 = tau[0];
    let e0 = linalg::cis(omega * t0);
    let dtc = s.d().transpose() * s.c();
    let bdc = linalg::to_complex(&(s.b() * &blocks.dxi_inv * &dtc));
    k += &bdc * (e0 * t0);
    k_omega += bdc * (e0 * C64::new(0.0, t0 * t0));
    let e = &blocks.dxi_inv * &blocks.dxi_inv * (2.0 * blocks.xi);
    let k_xi = linalg::to_complex(&(s.b() * e * dtc)) * (e0 * t0);
    (k, k_omega, k_xi)
}

fn bilinear(u: &CVec, m: &CMat, v: &CVec) -> C64 {
    (u.adjoint() * m * v)[(0, 0)]
}

struct Linearization {
    r: DVector<f64>,
    j: Option<RMat>,
    h_norm: f64,
}

fn linearize(pt: &CorrectionPoint, sys: &ScaledSystem, want_jacobian: bool) -> Result<Linearization> {
    let n = pt.n();
    let blocks = build_h_blocks(sys, pt.xi)?;
    let lambda = C64::new(0.0, pt.omega);
    let h = eval_h(&blocks, lambda, sys);
    let v = pt.stacked();
    let hv = &h * &v;
    let cv = pt.reference.dotc(&v) - c(1.0);
    let (k, k_omega, k_xi) = jordan_matrices(&blocks, pt.omega, sys);
    let jordan = bilinear(&pt.v2, &k, &pt.v1);

    let rows = 4 * n + 3;
    let mut r = DVector::zeros(rows);
    for q in 0..2 * n {
        r[q] = hv[q].re;
        r[2 * n + q] = hv[q].im;
    }
    r[4 * n] = cv.re;
    r[4 * n + 1] = cv.im;
    r[4 * n + 2] = jordan.im;
    let h_norm = linalg::fro_norm(&h);
    if !want_jacobian {
        return Ok(Linearization { r, j: None, h_norm });
    }

    let mut j = RMat::zeros(rows, 4 * n + 2);
    let v2k = pt.v2.adjoint() * &k;
    let kv1 = &k * &pt.v1;
    for q in 0..2 * n {
        let (re_col, im_col) = if q < n { (q, n + q) } else { (n + q, 2 * n + q) };
        let cq = pt.reference[q].conj();
        for p in 0..2 * n {
            let hpq = h[(p, q)];
            j[(p, re_col)] = hpq.re;
            j[(2 * n + p, re_col)] = hpq.im;
            // d/d(Im v_q): j H e_q
            j[(p, im_col)] = -hpq.im;
            j[(2 * n + p, im_col)] = hpq.re;
        }
        j[(4 * n, re_col)] = cq.re;
        j[(4 * n + 1, re_col)] = cq.im;
        j[(4 * n, im_col)] = -cq.im;
        j[(4 * n + 1, im_col)] = cq.re;
        if q < n {
            let g = v2k[(0, q)];
            j[(4 * n + 2, re_col)] = g.im;
            j[(4 * n + 2, im_col)] = g.re;
        } else {
            let g = kv1[q - n];
            j[(4 * n + 2, re_col)] = g.im;
            j[(4 * n + 2, im_col)] = -g.re;
        }
    }
    let dh_omega = eval_h_dlambda(&blocks, lambda, sys) * &v * C64::new(0.0, 1.0);
    let dh_xi = eval_h_dxi(&blocks, lambda, sys) * &v;
    let (wc, xc) = (4 * n, 4 * n + 1);
    for p in 0..2 * n {
        j[(p, wc)] = dh_omega[p].re;
        j[(2 * n + p, wc)] = dh_omega[p].im;
        j[(p, xc)] = dh_xi[p].re;
        j[(2 * n + p, xc)] = dh_xi[p].im;
    }
    j[(4 * n + 2, wc)] = bilinear(&pt.v2, &k_omega, &pt.v1).im;
    j[(4 * n + 2, xc)] = bilinear(&pt.v2, &k_xi, &pt.v1).im;
    Ok(Linearization { r, j: Some(j), h_norm })
}

/// The `4n + 3` real residuals at `pt`.
pub fn residual(pt: &CorrectionPoint, sys: &ScaledSystem) -> Result<DVector<f64>> {
    Ok(linearize(pt, sys, false)?.r)
}

/// Analytic Jacobian of [`residual`] with respect to
/// `(Re v1, Im v1, Re v2, Im v2, w, xi)`.
pub fn jacobian(pt: &CorrectionPoint, sys: &ScaledSystem) -> Result<RMat> {
    Ok(linearize(pt, sys, true)?.j.expect("requested"))
}

/// Central-difference Jacobian of [`residual`] with step `h`.
pub fn jacobian_fd(pt: &CorrectionPoint, sys: &ScaledSystem, h: f64) -> Result<RMat> {
    let x0 = pt.pack();
    let mut j = RMat::zeros(4 * pt.n() + 3, x0.len());
    let mut work = pt.clone();
    for col in 0..x0.len() {
        let step = h * x0[col].abs().max(1.0);
        let mut xp = x0.clone();
        xp[col] += step;
        work.unpack(&xp);
        let rp = residual(&work, sys)?;
        let mut xm = x0.clone();
        xm[col] -= step;
        work.unpack(&xm);
        let rm = residual(&work, sys)?;
        j.set_column(col, &((rp - rm) / (2.0 * step)));
    }
    Ok(j)
}

/// Gauss-Newton on the residual system, solving each linearized step in
/// the least-squares sense by QR.
pub fn gauss_newton(
    pt0: &CorrectionPoint,
    sys: &ScaledSystem,
    max_iter: usize,
    rtol: f64,
) -> Result<CorrectionPoint> {
    let xi0 = pt0.xi;
    let mut pt = pt0.clone();
    let mut x = pt.pack();
    for it in 0..=max_iter {
        let lin = linearize(&pt, sys, true)?;
        let rnorm = lin.r.norm();
        pt.residual_norm = rnorm;
        pt.iterations = it;
        if rnorm <= rtol * (1.0 + lin.h_norm) {
            pt.converged = true;
            return Ok(pt);
        }
        if it == max_iter {
            break;
        }
        let j = lin.j.expect("requested");
        let sv = linalg::real_singular_values(&j);
        let ratio = sv.last().copied().unwrap_or(0.0) / sv[0].max(f64::MIN_POSITIVE);
        if ratio < RANK_TOL {
            return Err(Error::RankDeficient { ratio });
        }
        let step = linalg::lstsq_qr(&j, &(-&lin.r)).ok_or(Error::RankDeficient { ratio: 0.0 })?;
        x += &step;
        pt.unpack(&x);
        if !(pt.xi > 0.0 && pt.xi <= 10.0 * xi0) || !x.iter().all(|v| v.is_finite()) {
            return Err(Error::Divergence { xi: pt.xi });
        }
        if step.norm() <= STEP_TOL * (1.0 + x.norm()) {
            let lin = linearize(&pt, sys, false)?;
            pt.residual_norm = lin.r.norm();
            pt.iterations = it + 1;
            pt.converged = pt.residual_norm <= 1e-10 * (1.0 + lin.h_norm);
            if pt.converged {
                return Ok(pt);
            }
            return Err(Error::NoConvergence { iterations: it + 1, residual: pt.residual_norm });
        }
    }
    Err(Error::NoConvergence { iterations: max_iter, residual: pt.residual_norm })
}

/// Options for [`compute_hinf`]. Frequencies are in original units.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HinfOptions {
    pub n: Option<usize>,
    pub omega_c: Option<f64>,
    pub omega_t: Option<f64>,
    pub tol: f64,
    pub delta: f64,
    pub n_stab: usize,
    pub max_iter: usize,
    pub rtol: f64,
}

impl Default for HinfOptions {
    fn default() -> Self {
        HinfOptions {
            n: None,
            omega_c: None,
            omega_t: None,
            tol: DEFAULT_TOL,
            delta: DEFAULT_DELTA,
            n_stab: DEFAULT_N_STAB,
            max_iter: DEFAULT_MAX_ITER,
            rtol: DEFAULT_RTOL,
        }
    }
}

/// A corrected candidate (original frequency units).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CandidatePoint {
    pub omega: f64,
    pub xi: f64,
    pub iterations: usize,
    pub residual: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub enum Warning {
    LargeCorrection { predicted: f64, corrected: f64 },
    CutOff { omega: f64, omega_c: f64, n: usize },
    CandidateDropped { omega: f64, reason: Error },
    Multiplicity { omega: f64, xi: f64 },
    NotCertified { omega: f64, xi: f64 },
    StabilityUnderresolved { root: C64 },
}

impl fmt::Display for Warning {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Warning::LargeCorrection { predicted, corrected } => write!(
                f,
                "relative change larger than 10% between predicted norm {predicted:.6} and corrected norm {corrected:.6}"
            ),
            Warning::CutOff { omega, omega_c, n } => write!(
                f,
                "frequency {omega:.6} exceeds the cut-off frequency {omega_c:.6} of N = {n}; increase the cut-off frequency (larger N or --omega-c)"
            ),
            Warning::CandidateDropped { omega, reason } => {
                write!(f, "candidate at omega = {omega:.6} dropped: {reason}")
            }
            Warning::Multiplicity { omega, xi } => write!(
                f,
                "rank-deficient corrector near omega = {omega:.6}; singular value may not be simple, reporting predicted level {xi:.9}"
            ),
            Warning::NotCertified { omega, xi } => write!(
                f,
                "corrected point (omega = {omega:.6}, xi = {xi:.9}) is not a singular value of G; dropped"
            ),
            Warning::StabilityUnderresolved { root } => {
                write!(f, "stability estimate may be under-resolved (rightmost root {root})")
            }
        }
    }
}

#[derive(Debug, Clone)]
pub struct HinfResult {
    pub norm: f64,
    /// Peak frequency in original units (`inf` when the norm is `sigma_1(D)`
    /// approached at high frequency).
    pub peak_omega: f64,
    pub predicted_norm: f64,
    pub candidates: Vec<CandidatePoint>,
    pub warnings: Vec<Warning>,
    pub n: usize,
    pub scale: f64,
    pub stability: StabilityEstimate,
    pub prediction: Prediction,
}

/// Corrects a batch of starting points. Passed to [`compute_hinf_with`] so
/// callers can run the independent Gauss-Newton solves concurrently.
pub type CorrectFn<'a> = dyn Fn(&CorrectionPoint) -> Result<CorrectionPoint> + Sync + 'a;

/// [`compute_hinf_with`] correcting candidates one after another.
pub fn compute_hinf(sys: &DelaySystem, opts: &HinfOptions) -> Result<HinfResult> {
    compute_hinf_with(sys, opts, |starts, correct| starts.iter().map(correct).collect())
}

/// Prediction, correction of every crossing at the final level, and the
/// max over corrected candidates and endpoint values.
pub fn compute_hinf_with<M>(sys: &DelaySystem, opts: &HinfOptions, map: M) -> Result<HinfResult>
where
    M: FnOnce(&[CorrectionPoint], &CorrectFn<'_>) -> Vec<Result<CorrectionPoint>>,
{
    if !(opts.tol > 0.0 && opts.tol <= 0.1) {
        return Err(Error::Value(alloc::format!("tol = {} must lie in (0, 0.1]", opts.tol)));
    }
    let stability = check_stability(sys, opts.n_stab);
    if !stability.is_stable(STABILITY_MARGIN) {
        return Err(Error::Unstable { root: stability.root });
    }
    let mut warnings = Vec::new();
    if stability.maybe_underresolved {
        warnings.push(Warning::StabilityUnderresolved { root: stability.root });
    }
    let scaled = ScaledSystem::from_system(sys);
    let delay_free = sys.is_delay_free();
    let n = match opts.n {
        Some(n) if (1..=crate::spectral::N_MAX).contains(&n) => n,
        Some(n) => return Err(Error::Value(alloc::format!("N = {n} outside 1..=60"))),
        None => choose_n(opts.omega_c.map(|w| scaled.to_scaled_frequency(w)), opts.delta)?,
    };
    let popts = PredictorOptions {
        n,
        omega_t: opts.omega_t.map(|w| scaled.to_scaled_frequency(w)),
        tol: opts.tol,
        max_levels: crate::levelset::DEFAULT_MAX_LEVELS,
    };
    let prediction = predict_gmax(&scaled, &popts)?;

    // crossings at the final lower bound; fall back to the last level that had any
    let start_blocks = blocks_nudged(&scaled, prediction.xi_l, opts.tol)?;
    let dd = diff_data(&cheb_grid(n));
    let op = DiscretizedOperator::new(&dd, &scaled, &start_blocks);
    let mut freqs = imaginary_eigs(&op, axis_tolerance(n))?;
    if freqs.is_empty() {
        freqs = prediction.crossings.clone();
    }
    let starts: Vec<CorrectionPoint> = freqs
        .iter()
        .map(|&w| {
            let h = eval_h(&start_blocks, C64::new(0.0, w), &scaled);
            CorrectionPoint::start(w, start_blocks.xi, &h)
        })
        .collect();
    let correct = |p: &CorrectionPoint| gauss_newton(p, &scaled, opts.max_iter, opts.rtol);
    let outcomes = map(&starts, &correct);

    let mut candidates: Vec<CandidatePoint> = Vec::new();
    let s = &scaled.sys;
    candidates.push(CandidatePoint {
        omega: 0.0,
        xi: linalg::sigma_max(&eval_transfer(s, 0.0)?),
        iterations: 0,
        residual: 0.0,
    });
    let mut refined: Option<Prediction> = None;
    for (start, outcome) in starts.iter().zip(outcomes) {
        let w_orig = scaled.to_original_frequency(start.omega);
        match outcome {
            Ok(pt) => {
                let omega = pt.omega.abs();
                let certified = eval_transfer(s, omega)
                    .map(|g| {
                        let sv = linalg::singular_values(&g);
                        sv.iter().any(|x| (x - pt.xi).abs() <= CERTIFY_TOL * pt.xi)
                            || (sv.len() < s.n_u() && pt.xi.abs() <= CERTIFY_TOL)
                    })
                    .unwrap_or(false);
                if certified {
                    candidates.push(CandidatePoint {
                        omega,
                        xi: pt.xi,
                        iterations: pt.iterations,
                        residual: pt.residual_norm,
                    });
                } else {
                    warnings.push(Warning::NotCertified {
                        omega: scaled.to_original_frequency(omega),
                        xi: pt.xi,
                    });
                }
            }
            Err(Error::RankDeficient { .. }) => {
                if refined.is_none() {
                    let tight = PredictorOptions { tol: MULTIPLICITY_TOL, ..popts };
                    refined = Some(predict_gmax(&scaled, &tight)?);
                }
                let xi = refined.as_ref().expect("set above").xi_pred;
                candidates.push(CandidatePoint {
                    omega: start.omega,
                    xi,
                    iterations: 0,
                    residual: f64::NAN,
                });
                warnings.push(Warning::Multiplicity { omega: w_orig, xi });
            }
            Err(e @ (Error::NoConvergence { .. } | Error::Divergence { .. })) => {
                warnings.push(Warning::CandidateDropped { omega: w_orig, reason: e });
            }
            Err(e) => return Err(e),
        }
    }

    // merge near-identical frequencies, keeping the larger level
    candidates.sort_by(|a, b| a.omega.total_cmp(&b.omega));
    let mut merged: Vec<CandidatePoint> = Vec::with_capacity(candidates.len());
    for cand in candidates {
        match merged.last_mut() {
            Some(last) if (cand.omega - last.omega).abs() < 1e-6 * (1.0 + cand.omega) => {
                if cand.xi > last.xi {
                    *last = cand;
                }
            }
            _ => merged.push(cand),
        }
    }
    let best = *merged
        .iter()
        .max_by(|a, b| a.xi.total_cmp(&b.xi))
        .expect("the zero-frequency candidate is always present");
    let sigma_d = linalg::real_singular_values(s.d()).first().copied().unwrap_or(0.0);
    let (norm, peak_scaled) = if sigma_d > best.xi { (sigma_d, f64::INFINITY) } else { (best.xi, best.omega) };

    let predicted = prediction.xi_pred;
    if (norm - predicted).abs() > LARGE_CORRECTION * predicted {
        warnings.push(Warning::LargeCorrection { predicted, corrected: norm });
    }
    if !delay_free {
        let omega_c = cutoff_frequency(n, opts.delta);
        let highest = merged
            .iter()
            .map(|p| p.omega)
            .fold(prediction.max_crossing, f64::max);
        if highest > omega_c {
            warnings.push(Warning::CutOff {
                omega: scaled.to_original_frequency(highest),
                omega_c: scaled.to_original_frequency(omega_c),
                n,
            });
        }
    }
    let candidates = merged
        .into_iter()
        .map(|p| CandidatePoint { omega: scaled.to_original_frequency(p.omega), ..p })
        .collect();
    Ok(HinfResult {
        norm,
        peak_omega: scaled.to_original_frequency(peak_scaled),
        predicted_norm: predicted,
        candidates,
        warnings,
        n,
        scale: scaled.scale,
        stability,
        prediction,
    })
}
