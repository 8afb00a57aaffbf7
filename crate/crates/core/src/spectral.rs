//! Chebyshev collocation: grids, differentiation weights, the discretized
//! operator `L_xi^N`, the collocation polynomial `p_N(t; lambda)` and the
//! cut-off frequency rule used to pick `N`.

use alloc::vec;
use alloc::vec::Vec;
use core::f64::consts::PI;

use nalgebra::DVector;
#[allow(unused_imports)]
use num_traits::Float;

use crate::error::{Error, Result};
use crate::levelset::HBlocks;
use crate::linalg::{c, CMat, RMat, C64};
use crate::system::ScaledSystem;

/// Discretization degree used when neither `N` nor a cut-off target is given.
pub const DEFAULT_N: usize = 15;
/// Approximation tolerance defining the cut-off frequency.
pub const DEFAULT_DELTA: f64 = 0.1;
/// Largest `N` considered by [`choose_n`].
pub const N_MAX: usize = 60;

const CUTOFF_SAMPLES: usize = 200;
const CUTOFF_RATIO: f64 = 1.05;
const CUTOFF_START: f64 = 1e-2;
const CUTOFF_BISECTIONS: usize = 30;
const CUTOFF_CEILING: f64 = 1e7;

/// Barycentric weights of the Chebyshev-Lobatto points (`k` points).
pub fn chebyshev_lobatto_weights(k: usize) -> Vec<f64> {
    (0..k)
        .map(|j| {
            let s = if j % 2 == 0 { 1.0 } else { -1.0 };
            if j == 0 || j + 1 == k {
                0.5 * s
            } else {
                s
            }
        })
        .collect()
}

/// Differentiation matrix of the interpolant through `pts`; the diagonal
/// is the negative off-diagonal row sum so rows annihilate constants.
pub fn barycentric_diff_matrix(pts: &[f64], w: &[f64]) -> RMat {
    let k = pts.len();
    let mut d = RMat::zeros(k, k);
    for i in 0..k {
        let mut diag = 0.0;
        for j in 0..k {
            if i != j {
                let v = (w[j] / w[i]) / (pts[i] - pts[j]);
                d[(i, j)] = v;
                diag -= v;
            }
        }
        d[(i, i)] = diag;
    }
    d
}

/// Values `l_k(t)` of all Lagrange basis polynomials at `t`.
pub fn lagrange_row(pts: &[f64], w: &[f64], t: f64) -> Vec<f64> {
    if let Some(hit) = pts.iter().position(|p| *p == t) {
        let mut row = vec![0.0; pts.len()];
        row[hit] = 1.0;
        return row;
    }
    let terms: Vec<f64> = pts.iter().zip(w).map(|(p, wk)| wk / (t - p)).collect();
    let denom: f64 = terms.iter().sum();
    terms.into_iter().map(|q| q / denom).collect()
}

/// Symmetric mesh `theta_{N,i} = cos((N - i) pi / 2N)`, `i = -N..N`,
/// stored in increasing order (index `i + N`).
#[derive(Debug, Clone, PartialEq)]
pub struct ChebGrid {
    pub n: usize,
    pub theta: Vec<f64>,
}

impl ChebGrid {
    /// Number of nodes, `2N + 1`.
    pub fn len(&self) -> usize {
        self.theta.len()
    }

    pub fn is_empty(&self) -> bool {
        self.theta.is_empty()
    }

    /// Storage index of the middle node `theta = 0`.
    pub fn mid(&self) -> usize {
        self.n
    }

    /// `theta_{N,i}` for `i` in `-N..=N`.
    pub fn at(&self, i: isize) -> f64 {
        self.theta[(i + self.n as isize) as usize]
    }
}

pub fn cheb_grid(n: usize) -> ChebGrid {
    assert!(n >= 1, "N must be positive");
    // cos((N - i) pi / 2N) = sin(i pi / 2N); the positive half is mirrored
    let half: Vec<f64> = (1..=n)
        .map(|i| if i == n { 1.0 } else { (i as f64 * PI / (2 * n) as f64).sin() })
        .collect();
    let mut theta = Vec::with_capacity(2 * n + 1);
    theta.extend(half.iter().rev().map(|x| -x));
    theta.push(0.0);
    theta.extend(half.iter().copied());
    ChebGrid { n, theta }
}

/// Differentiation data on a [`ChebGrid`].
#[derive(Debug, Clone)]
pub struct DiffData {
    pub grid: ChebGrid,
    /// Barycentric interpolation weights.
    pub bary: Vec<f64>,
    /// Full `(2N+1) x (2N+1)` differentiation matrix; the rows `i != 0`
    /// are the `l'_{N,k}(theta_{N,i})` weights.
    pub dmat: RMat,
}

impl DiffData {
    /// The `(2N) x (2N+1)` block of derivative weights at nodes `i != 0`.
    pub fn dweights(&self) -> RMat {
        let mid = self.grid.mid();
        let rows: Vec<usize> = (0..self.grid.len()).filter(|&r| r != mid).collect();
        self.dmat.select_rows(rows.iter())
    }

    /// Derivative of the interpolant of `samples` at the nodes `i != 0`.
    pub fn differentiate(&self, samples: &[f64]) -> Vec<f64> {
        let v = DVector::from_column_slice(samples);
        (self.dweights() * v).iter().copied().collect()
    }

    /// Lagrange basis values at an arbitrary point.
    pub fn lagrange(&self, t: f64) -> Vec<f64> {
        lagrange_row(&self.grid.theta, &self.bary, t)
    }
}

pub fn diff_data(grid: &ChebGrid) -> DiffData {
    let bary = chebyshev_lobatto_weights(grid.len());
    let dmat = barycentric_diff_matrix(&grid.theta, &bary);
    DiffData { grid: grid.clone(), bary, dmat }
}

/// Chebyshev polynomials `T_0..T_{K-1}` and their derivatives at `x`.
fn chebyshev_values(x: f64, k: usize) -> (Vec<f64>, Vec<f64>) {
    let mut t = vec![0.0; k];
    let mut dt = vec![0.0; k];
    // T_j' = j U_{j-1}
    let mut u_prev = 0.0;
    let mut u_cur = 1.0;
    for j in 0..k {
        t[j] = match j {
            0 => 1.0,
            1 => x,
            _ => 2.0 * x * t[j - 1] - t[j - 2],
        };
        if j >= 1 {
            dt[j] = j as f64 * u_cur;
            let u_next = 2.0 * x * u_cur - u_prev;
            u_prev = u_cur;
            u_cur = u_next;
        }
    }
    (t, dt)
}

/// Solver for the coefficients of `p_N(.; lambda)` in the Chebyshev basis.
///
/// `T` is the basis Vandermonde on the grid, `U` its derivative with a zero
/// middle row. The middle equation `lambda T_0-row alpha = lambda` is divided
/// through by `lambda`, which leaves the system unchanged for `lambda != 0`
/// and makes `lambda = 0` give the constant polynomial.
#[derive(Debug, Clone)]
pub struct PnSolver {
    pub n: usize,
    pub grid: ChebGrid,
    pub t: RMat,
    pub u: RMat,
}

impl PnSolver {
    pub fn new(n: usize) -> Self {
        let grid = cheb_grid(n);
        let k = grid.len();
        let mut t = RMat::zeros(k, k);
        let mut u = RMat::zeros(k, k);
        for (i, x) in grid.theta.iter().enumerate() {
            let (ti, dti) = chebyshev_values(*x, k);
            for j in 0..k {
                t[(i, j)] = ti[j];
                if i != grid.mid() {
                    u[(i, j)] = dti[j];
                }
            }
        }
        PnSolver { n, grid, t, u }
    }

    /// Coefficients of `p_N(.; lambda)`.
    pub fn solve(&self, lambda: C64) -> Result<PnPoly> {
        let k = self.grid.len();
        let mid = self.grid.mid();
        let mut a = CMat::zeros(k, k);
        for i in 0..k {
            for j in 0..k {
                a[(i, j)] = if i == mid {
                    c(self.t[(i, j)])
                } else {
                    lambda * self.t[(i, j)] - self.u[(i, j)]
                };
            }
        }
        let mut rhs = nalgebra::DVector::<C64>::zeros(k);
        rhs[mid] = c(1.0);
        let lu = nalgebra::LU::new(a);
        // pivot growth ratio stands in for a condition estimate here
        let u = lu.u();
        let diag = (0..k).map(|i| u[(i, i)].norm());
        let (lo, hi) = diag.fold((f64::INFINITY, 0.0_f64), |(lo, hi), d| (lo.min(d), hi.max(d)));
        if !(lo > 1e-14 * hi) {
            return Err(Error::CollocationPole { lambda });
        }
        let alpha = lu.solve(&rhs).ok_or(Error::CollocationPole { lambda })?;
        Ok(PnPoly { coeffs: alpha.iter().copied().collect() })
    }

    /// `p_N(t; lambda)` at each of `points`.
    pub fn eval(&self, lambda: C64, points: &[f64]) -> Result<Vec<C64>> {
        let p = self.solve(lambda)?;
        Ok(points.iter().map(|t| p.value(*t)).collect())
    }
}

/// `p_N(.; lambda)` as a Chebyshev series.
#[derive(Debug, Clone, PartialEq)]
pub struct PnPoly {
    pub coeffs: Vec<C64>,
}

impl PnPoly {
    /// Clenshaw evaluation.
    pub fn value(&self, t: f64) -> C64 {
        clenshaw(&self.coeffs, t)
    }

    pub fn derivative(&self, t: f64) -> C64 {
        let k = self.coeffs.len();
        if k <= 1 {
            return c(0.0);
        }
        // c'_{j-1} = c'_{j+1} + 2 j c_j
        let mut d = vec![c(0.0); k + 1];
        for j in (1..k).rev() {
            d[j - 1] = d[j + 1] + self.coeffs[j] * (2 * j) as f64;
        }
        d[0] *= 0.5;
        d.truncate(k - 1);
        clenshaw(&d, t)
    }
}

fn clenshaw(coeffs: &[C64], t: f64) -> C64 {
    let mut b1 = c(0.0);
    let mut b2 = c(0.0);
    for a in coeffs.iter().skip(1).rev() {
        let b0 = *a + b1 * (2.0 * t) - b2;
        b2 = b1;
        b1 = b0;
    }
    match coeffs.first() {
        Some(a0) => *a0 + b1 * t - b2,
        None => c(0.0),
    }
}

/// `p_N(t; lambda)` at each point.
pub fn eval_pn(ps: &PnSolver, lambda: C64, points: &[f64]) -> Result<Vec<C64>> {
    ps.eval(lambda, points)
}

/// `max_t |exp(j w t) - p_N(t; j w)|` over 200 Chebyshev-spaced samples.
pub fn exponential_error(ps: &PnSolver, omega: f64) -> f64 {
    let lambda = C64::new(0.0, omega);
    let p = match ps.solve(lambda) {
        Ok(p) => p,
        Err(_) => return f64::INFINITY,
    };
    (0..CUTOFF_SAMPLES)
        .map(|k| (k as f64 * PI / (CUTOFF_SAMPLES - 1) as f64).cos())
        .map(|t| (C64::new(0.0, omega * t).exp() - p.value(t)).norm())
        .fold(0.0, f64::max)
}

/// Smallest `w >= 0` at which `p_N(.; jw)` misses `exp(jw .)` by `delta`:
/// geometric scan (ratio 1.05) followed by 30 bisection steps.
pub fn cutoff_frequency(n: usize, delta: f64) -> f64 {
    let ps = PnSolver::new(n);
    let exceeds = |w: f64| exponential_error(&ps, w) >= delta;
    let mut lo = 0.0;
    let mut hi = CUTOFF_START;
    while !exceeds(hi) {
        lo = hi;
        hi *= CUTOFF_RATIO;
        if hi > CUTOFF_CEILING {
            return f64::INFINITY;
        }
    }
    for _ in 0..CUTOFF_BISECTIONS {
        let mid = 0.5 * (lo + hi);
        if exceeds(mid) {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    hi
}

/// Smallest `N` whose cut-off frequency reaches `target`, taking cut-off
/// values from `table` (so callers can cache them). No target gives
/// [`DEFAULT_N`].
pub fn choose_n_with<F>(target: Option<f64>, delta: f64, mut table: F) -> Result<usize>
where
    F: FnMut(usize, f64) -> f64,
{
    let target = match target {
        None => return Ok(DEFAULT_N),
        Some(t) if !(t >= 0.0) => return Err(Error::Value("cut-off target must be >= 0".into())),
        Some(t) => t,
    };
    (1..=N_MAX)
        .find(|&n| table(n, delta) >= target)
        .ok_or(Error::UnreachableCutoff { target, n_max: N_MAX })
}

/// [`choose_n_with`] computing cut-off frequencies on demand.
pub fn choose_n(target: Option<f64>, delta: f64) -> Result<usize> {
    choose_n_with(target, delta, cutoff_frequency)
}

/// The matrix `L_xi^N`. Block rows `i != 0` hold `l'_{N,k}(theta_i) I_{2n}`
/// and never change; the middle block row carries all problem data and
/// is rewritten by [`DiscretizedOperator::set_level`].
#[derive(Debug, Clone)]
pub struct DiscretizedOperator {
    pub l: RMat,
    pub xi: f64,
    pub n: usize,
    block: usize,
    lag_minus: Vec<Vec<f64>>,
    lag_plus: Vec<Vec<f64>>,
}

impl DiscretizedOperator {
    pub fn new(dd: &DiffData, sys: &ScaledSystem, blocks: &HBlocks) -> Self {
        let k = dd.grid.len();
        let block = 2 * sys.sys.n();
        let dim = k * block;
        let mut l = RMat::zeros(dim, dim);
        let mid = dd.grid.mid();
        for i in (0..k).filter(|&i| i != mid) {
            for j in 0..k {
                let dij = dd.dmat[(i, j)];
                if dij != 0.0 {
                    for r in 0..block {
                        l[(i * block + r, j * block + r)] = dij;
                    }
                }
            }
        }
        let tau = sys.sys.tau();
        let lag_minus = tau.iter().map(|t| dd.lagrange(-t)).collect();
        let lag_plus = tau.iter().map(|t| dd.lagrange(*t)).collect();
        let mut op = DiscretizedOperator {
            l,
            xi: blocks.xi,
            n: dd.grid.n,
            block,
            lag_minus,
            lag_plus,
        };
        op.set_level(blocks);
        op
    }

    /// Rewrites the middle block row for the level of `blocks`.
    pub fn set_level(&mut self, blocks: &HBlocks) {
        let k = 2 * self.n + 1;
        let mid = self.n;
        let b = self.block;
        for col in 0..k {
            let mut a = if col == mid { blocks.m0.clone() } else { RMat::zeros(b, b) };
            for (j, (mj, mnj)) in blocks.mi.iter().zip(&blocks.mneg).enumerate() {
                let lm = self.lag_minus[j + 1][col];
                let lp = self.lag_plus[j + 1][col];
                if lm != 0.0 {
                    a += mj * lm;
                }
                if lp != 0.0 {
                    a += mnj * lp;
                }
            }
            let lm = self.lag_minus[0][col];
            let lp = self.lag_plus[0][col];
            if lm != 0.0 {
                a += &blocks.n1 * lm;
            }
            if lp != 0.0 {
                a += &blocks.nneg * lp;
            }
            self.l.view_mut((mid * b, col * b), (b, b)).copy_from(&a);
        }
        self.xi = blocks.xi;
    }

    pub fn dim(&self) -> usize {
        self.l.nrows()
    }

    /// Size of one block, `2n`.
    pub fn block(&self) -> usize {
        self.block
    }
}

pub fn assemble_l(blocks: &HBlocks, dd: &DiffData, sys: &ScaledSystem) -> DiscretizedOperator {
    DiscretizedOperator::new(dd, sys, blocks)
}
