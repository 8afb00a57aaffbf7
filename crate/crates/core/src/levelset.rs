//! Level sets of the singular value curves in the `(w, xi)` plane.
//!
//! Horizontal searches (fixed `xi`) read crossing frequencies off the
//! imaginary-axis eigenvalues of `L_xi^N`; vertical searches (fixed `w`)
//! read levels off the eigenvalues of `M_N(jw)`. [`predict_gmax`] alternates
//! the two until the level clears every curve.

use alloc::vec::Vec;

use nalgebra::SymmetricEigen;
#[allow(unused_imports)]
use num_traits::Float;

use crate::error::{Error, Result};
use crate::linalg::{self, c, CMat, RMat, C64};
use crate::spectral::{diff_data, cheb_grid, DiscretizedOperator, PnSolver};
use crate::system::{eval_transfer, ScaledSystem, RCOND_THRESHOLD};

/// Base relative tolerance for classifying an eigenvalue as imaginary.
pub const AXIS_TOL: f64 = 1e-7;
/// Crossing frequencies closer than this are merged.
pub const CROSSING_MERGE: f64 = 1e-8;
pub const DEFAULT_TOL: f64 = 1e-6;
pub const DEFAULT_MAX_LEVELS: usize = 50;
/// Levels beyond this are taken as evidence that `g_max(N)` is unbounded.
const LEVEL_GUARD: f64 = 1e12;

/// Axis tolerance for a discretization with parameter `n`, scaled with `n^2`
/// like the norm of the differentiation rows.
pub fn axis_tolerance(n: usize) -> f64 {
    AXIS_TOL * (n * n).max(1) as f64
}

/// The constant coefficient blocks of `H(lambda, xi)` at one level `xi`.
#[derive(Debug, Clone)]
pub struct HBlocks {
    pub xi: f64,
    /// `(D^T D - xi^2 I)^{-1}`.
    pub dxi_inv: RMat,
    pub m0: RMat,
    /// `diag(Ai, 0)` for `i = 1..m`.
    pub mi: Vec<RMat>,
    /// `diag(0, -Ai^T)` for `i = 1..m`.
    pub mneg: Vec<RMat>,
    pub n1: RMat,
    pub nneg: RMat,
}

impl HBlocks {
    /// Derivatives of `(M0, N1, N-1)` with respect to `xi`, using
    /// `d(D_xi^{-1})/d xi = 2 xi D_xi^{-2}`.
    pub fn xi_derivatives(&self, sys: &ScaledSystem) -> (RMat, RMat, RMat) {
        let e = &self.dxi_inv * &self.dxi_inv * (2.0 * self.xi);
        let (dm0, dn1, dnneg) = feedthrough_blocks(sys, &e);
        (dm0, dn1, dnneg)
    }
}

/// The `D_xi^{-1}`-dependent parts of `M0`, `N1`, `N-1` for a given
/// replacement `e` of `D_xi^{-1}` (the `A0`, `C^T C` terms are left out).
fn feedthrough_blocks(sys: &ScaledSystem, e: &RMat) -> (RMat, RMat, RMat) {
    let s = &sys.sys;
    let n = s.n();
    let (b, cm, d) = (s.b(), s.c(), s.d());
    let ctd = cm.transpose() * d;
    let mut m0 = RMat::zeros(2 * n, 2 * n);
    m0.view_mut((0, n), (n, n)).copy_from(&(-(b * e * b.transpose())));
    m0.view_mut((n, 0), (n, n)).copy_from(&(&ctd * e * ctd.transpose()));
    let mut n1 = RMat::zeros(2 * n, 2 * n);
    n1.view_mut((n, n), (n, n)).copy_from(&(&ctd * e * b.transpose()));
    let mut nneg = RMat::zeros(2 * n, 2 * n);
    nneg.view_mut((0, 0), (n, n)).copy_from(&(-(b * e * ctd.transpose())));
    (m0, n1, nneg)
}

/// Symmetric inverse of `D^T D - xi^2 I` through its eigendecomposition.
fn dxi_inverse(d: &RMat, xi: f64) -> Result<RMat> {
    let nu = d.ncols();
    let dxi = d.transpose() * d - RMat::identity(nu, nu) * (xi * xi);
    if nu == 0 {
        return Ok(dxi);
    }
    let eig = SymmetricEigen::new(dxi);
    let smin = eig.eigenvalues.iter().fold(f64::INFINITY, |a, x| a.min(x.abs()));
    if !(smin > 1e-12 * (xi * xi).max(1.0)) {
        return Err(Error::SingularDxi { xi });
    }
    let inv_diag = RMat::from_diagonal(&eig.eigenvalues.map(|x| 1.0 / x));
    Ok(&eig.eigenvectors * inv_diag * eig.eigenvectors.transpose())
}

pub fn build_h_blocks(sys: &ScaledSystem, xi: f64) -> Result<HBlocks> {
    if !(xi > 0.0) || !xi.is_finite() {
        return Err(Error::Value(alloc::format!("level xi = {xi} must be positive")));
    }
    let s = &sys.sys;
    let n = s.n();
    let dxi_inv = dxi_inverse(s.d(), xi)?;
    let (mut m0, n1, nneg) = feedthrough_blocks(sys, &dxi_inv);
    let a0 = &s.a()[0];
    m0.view_mut((0, 0), (n, n)).copy_from(a0);
    m0.view_mut((n, n), (n, n)).copy_from(&(-a0.transpose()));
    let ctc = s.c().transpose() * s.c();
    let lower = m0.view((n, 0), (n, n)).into_owned() - ctc;
    m0.view_mut((n, 0), (n, n)).copy_from(&lower);
    let mut mi = Vec::with_capacity(s.m());
    let mut mneg = Vec::with_capacity(s.m());
    for ai in &s.a()[1..] {
        let mut p = RMat::zeros(2 * n, 2 * n);
        p.view_mut((0, 0), (n, n)).copy_from(ai);
        mi.push(p);
        let mut q = RMat::zeros(2 * n, 2 * n);
        q.view_mut((n, n), (n, n)).copy_from(&(-ai.transpose()));
        mneg.push(q);
    }
    Ok(HBlocks { xi, dxi_inv, m0, mi, mneg, n1, nneg })
}

/// `lambda I - M0 - sum(Mi em_i + M-i ep_i) - (N1 em_0 + N-1 ep_0)` where
/// `em`, `ep` stand in for `exp(-lambda tau_i)`, `exp(lambda tau_i)`.
fn h_with_factors(blocks: &HBlocks, lambda: C64, em: &[C64], ep: &[C64]) -> CMat {
    let dim = blocks.m0.nrows();
    let mut h = CMat::from_diagonal_element(dim, dim, lambda) - linalg::to_complex(&blocks.m0);
    for (i, (mi, mn)) in blocks.mi.iter().zip(&blocks.mneg).enumerate() {
        h -= linalg::to_complex(mi) * em[i + 1] + linalg::to_complex(mn) * ep[i + 1];
    }
    h -= linalg::to_complex(&blocks.n1) * em[0] + linalg::to_complex(&blocks.nneg) * ep[0];
    h
}

fn exponential_factors(sys: &ScaledSystem, lambda: C64) -> (Vec<C64>, Vec<C64>) {
    let tau = sys.sys.tau();
    let em = tau.iter().map(|t| (-lambda * t).exp()).collect();
    let ep = tau.iter().map(|t| (lambda * t).exp()).collect();
    (em, ep)
}

/// `H(lambda, xi)`.
pub fn eval_h(blocks: &HBlocks, lambda: C64, sys: &ScaledSystem) -> CMat {
    let (em, ep) = exponential_factors(sys, lambda);
    h_with_factors(blocks, lambda, &em, &ep)
}

/// `dH/d lambda`.
pub fn eval_h_dlambda(blocks: &HBlocks, lambda: C64, sys: &ScaledSystem) -> CMat {
    let tau = sys.sys.tau();
    let dim = blocks.m0.nrows();
    let mut dh = CMat::identity(dim, dim);
    for (i, (mi, mn)) in blocks.mi.iter().zip(&blocks.mneg).enumerate() {
        let t = tau[i + 1];
        dh += linalg::to_complex(mi) * ((-lambda * t).exp() * t)
            - linalg::to_complex(mn) * ((lambda * t).exp() * t);
    }
    let t0 = tau[0];
    dh += linalg::to_complex(&blocks.n1) * ((-lambda * t0).exp() * t0)
        - linalg::to_complex(&blocks.nneg) * ((lambda * t0).exp() * t0);
    dh
}

/// `dH/d xi`.
pub fn eval_h_dxi(blocks: &HBlocks, lambda: C64, sys: &ScaledSystem) -> CMat {
    let (dm0, dn1, dnneg) = blocks.xi_derivatives(sys);
    let t0 = sys.sys.tau()[0];
    -(linalg::to_complex(&dm0)
        + linalg::to_complex(&dn1) * (-lambda * t0).exp()
        + linalg::to_complex(&dnneg) * (lambda * t0).exp())
}

/// `p_N(-tau_i; lambda)` and `p_N(tau_i; lambda)` for all delays, from one
/// collocation solve.
pub fn pn_factors(ps: &PnSolver, lambda: C64, sys: &ScaledSystem) -> Result<(Vec<C64>, Vec<C64>)> {
    let p = ps.solve(lambda)?;
    let tau = sys.sys.tau();
    Ok((
        tau.iter().map(|t| p.value(-t)).collect(),
        tau.iter().map(|t| p.value(*t)).collect(),
    ))
}

/// `H_N(lambda, xi)`: `H` with `exp(-+lambda tau_i)` replaced by `p_N(-+tau_i; lambda)`.
pub fn eval_hn(blocks: &HBlocks, lambda: C64, ps: &PnSolver, sys: &ScaledSystem) -> Result<CMat> {
    let (pm, pp) = pn_factors(ps, lambda, sys)?;
    Ok(h_with_factors(blocks, lambda, &pm, &pp))
}

/// `M_N(jw)` and `r_N(w)`; its eigenvalues `xi^2` are the levels of the
/// discretized curves at `w`.
#[derive(Debug, Clone)]
pub struct MNMatrix {
    pub omega: f64,
    pub value: CMat,
    pub r: f64,
    pub hermitian_flag: bool,
}

impl MNMatrix {
    pub fn eigenvalues(&self) -> Result<Vec<C64>> {
        if self.hermitian_flag {
            Ok(linalg::hermitian_eigenvalues(&self.value).into_iter().map(c).collect())
        } else {
            linalg::complex_eigenvalues(&self.value)
        }
    }

    /// Largest (near-)real eigenvalue.
    pub fn lambda1(&self) -> Result<Option<f64>> {
        Ok(self
            .eigenvalues()?
            .into_iter()
            .filter(|z| self.hermitian_flag || z.im.abs() <= 1e-8 * (1.0 + z.re.abs()))
            .map(|z| z.re)
            .reduce(f64::max))
    }
}

pub fn eval_mn(sys: &ScaledSystem, omega: f64, ps: &PnSolver) -> Result<MNMatrix> {
    let s = &sys.sys;
    let n = s.n();
    let nu = s.n_u();
    let lambda = C64::new(0.0, omega);
    let (pm, pp) = pn_factors(ps, lambda, sys)?;
    let mut res = CMat::from_diagonal_element(n, n, lambda) - linalg::to_complex(&s.a()[0]);
    for (ai, p) in s.a()[1..].iter().zip(&pm[1..]) {
        res -= linalg::to_complex(ai) * *p;
    }
    let lu = linalg::CheckedLu::new(&res);
    if lu.rcond < RCOND_THRESHOLD {
        return Err(Error::SingularResolvent { omega, rcond: lu.rcond });
    }
    let rb = lu
        .solve(&linalg::to_complex(s.b()))
        .ok_or(Error::SingularResolvent { omega, rcond: 0.0 })?;
    let y = linalg::to_complex(s.c()) * rb;
    let dtd = linalg::to_complex(&(s.d().transpose() * s.d()));
    let x = linalg::to_complex(&s.d().transpose()) * &y * pp[0];
    let r = 1.0 / pm[0].norm_sqr() - 1.0;
    let sqrt_r = if r >= 0.0 { c(r.sqrt()) } else { C64::new(0.0, (-r).sqrt()) };
    let mut value = CMat::zeros(2 * nu, 2 * nu);
    let top = &x + x.adjoint() + y.adjoint() * &y + &dtd;
    value.view_mut((0, 0), (nu, nu)).copy_from(&top);
    value.view_mut((0, nu), (nu, nu)).copy_from(&(x.adjoint() * sqrt_r));
    value.view_mut((nu, 0), (nu, nu)).copy_from(&(&x * sqrt_r));
    value.view_mut((nu, nu), (nu, nu)).copy_from(&dtd);
    Ok(MNMatrix { omega, value, r, hermitian_flag: r >= 0.0 })
}

/// Nonnegative imaginary parts of the eigenvalues of `L` lying on the
/// imaginary axis, merged and sorted.
pub fn imaginary_eigs(l: &DiscretizedOperator, tol_axis: f64) -> Result<Vec<f64>> {
    imaginary_parts_on_axis(&linalg::real_eigenvalues(&l.l)?, tol_axis)
}

pub(crate) fn imaginary_parts_on_axis(eigs: &[C64], tol_axis: f64) -> Result<Vec<f64>> {
    let mut w: Vec<f64> = eigs
        .iter()
        .filter(|z| z.im >= 0.0 && z.re.abs() <= tol_axis * z.im.abs().max(1.0))
        .map(|z| z.im)
        .collect();
    w.sort_by(|a, b| a.total_cmp(b));
    w.dedup_by(|b, a| (*b - *a).abs() <= CROSSING_MERGE);
    Ok(w)
}

/// One level of the criss-cross search.
#[derive(Debug, Clone, PartialEq)]
pub struct LevelRecord {
    pub xi: f64,
    pub crossings: Vec<f64>,
    pub midpoints: Vec<f64>,
    pub lambda1_values: Vec<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PredictorOptions {
    pub n: usize,
    /// Candidate critical frequency (scaled units).
    pub omega_t: Option<f64>,
    pub tol: f64,
    pub max_levels: usize,
}

impl PredictorOptions {
    pub fn new(n: usize) -> Self {
        PredictorOptions { n, omega_t: None, tol: DEFAULT_TOL, max_levels: DEFAULT_MAX_LEVELS }
    }
}

/// Outcome of the prediction step.
#[derive(Debug, Clone)]
pub struct Prediction {
    /// Estimate `(xi + xi_l) / 2` of `g_max(N)`.
    pub xi_pred: f64,
    /// Final lower bound.
    pub xi_l: f64,
    /// Last non-empty crossing set.
    pub crossings: Vec<f64>,
    pub history: Vec<LevelRecord>,
    /// Largest crossing frequency met at any level.
    pub max_crossing: f64,
    pub n: usize,
}

/// Midpoints between consecutive crossings: geometric means, arithmetic when
/// a pair contains 0, plus a probe beyond a lone final crossing.
pub fn midpoints(crossings: &[f64]) -> Vec<f64> {
    let mut mu: Vec<f64> = crossings
        .windows(2)
        .map(|w| if w[0] <= 0.0 { 0.5 * (w[0] + w[1]) } else { (w[0] * w[1]).sqrt() })
        .collect();
    if crossings.len() % 2 == 1 {
        if let Some(last) = crossings.last() {
            mu.push(if *last > 0.0 { 1.1 * last } else { 1.0 });
        }
    }
    mu
}

/// Builds the blocks at `xi`, nudging the level up by `(1 + 2 tol)` while
/// `D_xi` is singular.
pub(crate) fn blocks_nudged(sys: &ScaledSystem, mut xi: f64, tol: f64) -> Result<HBlocks> {
    for _ in 0..8 {
        match build_h_blocks(sys, xi) {
            Err(Error::SingularDxi { .. }) => xi *= 1.0 + 2.0 * tol,
            other => return other,
        }
    }
    build_h_blocks(sys, xi)
}

/// Criss-cross estimate of `g_max(N)`.
pub fn predict_gmax(sys: &ScaledSystem, opts: &PredictorOptions) -> Result<Prediction> {
    if !(opts.tol > 0.0) {
        return Err(Error::Value("tol must be positive".into()));
    }
    if opts.n == 0 {
        return Err(Error::Value("N must be positive".into()));
    }
    let tol = opts.tol;
    let s = &sys.sys;
    let ps = PnSolver::new(opts.n);
    let dd = diff_data(&cheb_grid(opts.n));
    let sigma_d = linalg::real_singular_values(s.d()).first().copied().unwrap_or(0.0);
    let g0 = linalg::sigma_max(&eval_transfer(s, 0.0)?);
    let mut xi_l = g0.max(sigma_d).max(tol);
    if let Some(wt) = opts.omega_t {
        if let Some(l1) = eval_mn(sys, wt, &ps)?.lambda1()? {
            xi_l = xi_l.max(l1.max(0.0).sqrt());
        }
    }
    let tol_axis = axis_tolerance(opts.n);
    let mut op: Option<DiscretizedOperator> = None;
    let mut history = Vec::new();
    let mut last_crossings = Vec::new();
    let mut max_crossing = 0.0_f64;
    for _ in 0..opts.max_levels {
        let blocks = blocks_nudged(sys, xi_l * (1.0 + 2.0 * tol), tol)?;
        let xi = blocks.xi;
        match op.as_mut() {
            Some(o) => o.set_level(&blocks),
            None => op = Some(DiscretizedOperator::new(&dd, sys, &blocks)),
        }
        let crossings = imaginary_eigs(op.as_ref().expect("assembled above"), tol_axis)?;
        if crossings.is_empty() {
            history.push(LevelRecord {
                xi,
                crossings,
                midpoints: Vec::new(),
                lambda1_values: Vec::new(),
            });
            return Ok(Prediction {
                xi_pred: 0.5 * (xi + xi_l),
                xi_l,
                crossings: last_crossings,
                history,
                max_crossing,
                n: opts.n,
            });
        }
        if xi > LEVEL_GUARD {
            return Err(Error::NonFiniteGmax { xi });
        }
        max_crossing = max_crossing.max(*crossings.last().expect("non-empty"));
        let mu = midpoints(&crossings);
        let mut lambda1_values = Vec::with_capacity(mu.len());
        let mut next = xi;
        for w in &mu {
            let l1 = match eval_mn(sys, *w, &ps) {
                Ok(mn) => mn.lambda1()?.unwrap_or(f64::NEG_INFINITY),
                Err(Error::SingularResolvent { .. }) | Err(Error::CollocationPole { .. }) => {
                    f64::NEG_INFINITY
                }
                Err(e) => return Err(e),
            };
            lambda1_values.push(l1);
            next = next.max(l1.max(sigma_d * sigma_d).sqrt());
        }
        history.push(LevelRecord { xi, crossings: crossings.clone(), midpoints: mu, lambda1_values });
        last_crossings = crossings;
        xi_l = next;
    }
    Err(Error::MaxIterations(opts.max_levels))
}
