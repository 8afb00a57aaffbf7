//! Delay systems, time rescaling, transfer evaluation and a stability guard.

use alloc::format;
use alloc::vec::Vec;

#[allow(unused_imports)]
use num_traits::Float;

use crate::error::{Error, Result};
use crate::linalg::{self, CMat, CheckedLu, RMat, C64};
use crate::spectral;

/// Resolvents with reciprocal condition below this are treated as singular.
pub const RCOND_THRESHOLD: f64 = 1e-14;
/// Rightmost roots with real part above `-STABILITY_MARGIN` are rejected.
pub const STABILITY_MARGIN: f64 = 1e-8;
pub const DEFAULT_N_STAB: usize = 20;

/// `x'(t) = A0 x(t) + sum_i Ai x(t - tau_i) + B u(t)`,
/// `y(t) = C x(t) + D u(t - tau_0)`.
///
/// `tau[0]` belongs to the feedthrough term, `tau[1..]` to the state delays.
#[derive(Debug, Clone, PartialEq)]
pub struct DelaySystem {
    a: Vec<RMat>,
    b: RMat,
    c: RMat,
    d: RMat,
    tau: Vec<f64>,
}

impl DelaySystem {
    pub fn new(a: Vec<RMat>, b: RMat, c: RMat, d: RMat, tau: Vec<f64>) -> Result<Self> {
        if a.is_empty() {
            return Err(Error::Dimension("at least A0 is required".into()));
        }
        let n = a[0].nrows();
        for (i, ai) in a.iter().enumerate() {
            if ai.nrows() != n || ai.ncols() != n {
                return Err(Error::Dimension(format!(
                    "A{i} is {}x{}, expected {n}x{n}",
                    ai.nrows(),
                    ai.ncols()
                )));
            }
        }
        if b.nrows() != n {
            return Err(Error::Dimension(format!("B has {} rows, expected {n}", b.nrows())));
        }
        if c.ncols() != n {
            return Err(Error::Dimension(format!("C has {} columns, expected {n}", c.ncols())));
        }
        if d.nrows() != c.nrows() || d.ncols() != b.ncols() {
            return Err(Error::Dimension(format!(
                "D is {}x{}, expected {}x{}",
                d.nrows(),
                d.ncols(),
                c.nrows(),
                b.ncols()
            )));
        }
        if tau.len() != a.len() {
            return Err(Error::Dimension(format!(
                "{} delays given for {} system matrices",
                tau.len(),
                a.len()
            )));
        }
        for (i, t) in tau.iter().enumerate() {
            if !t.is_finite() || *t < 0.0 {
                return Err(Error::Value(format!("tau[{i}] = {t} must be finite and >= 0")));
            }
        }
        let finite = a.iter().chain([&b, &c, &d]).all(|m| m.iter().all(|x| x.is_finite()));
        if !finite {
            return Err(Error::Value("system matrices must be finite".into()));
        }
        Ok(DelaySystem { a, b, c, d, tau })
    }

    /// State dimension.
    pub fn n(&self) -> usize {
        self.a[0].nrows()
    }

    /// Number of state delays.
    pub fn m(&self) -> usize {
        self.a.len() - 1
    }

    pub fn n_u(&self) -> usize {
        self.b.ncols()
    }

    pub fn n_y(&self) -> usize {
        self.c.nrows()
    }

    /// `A0..Am`.
    pub fn a(&self) -> &[RMat] {
        &self.a
    }

    pub fn b(&self) -> &RMat {
        &self.b
    }

    pub fn c(&self) -> &RMat {
        &self.c
    }

    pub fn d(&self) -> &RMat {
        &self.d
    }

    /// `tau_0..tau_m`.
    pub fn tau(&self) -> &[f64] {
        &self.tau
    }

    pub fn max_delay(&self) -> f64 {
        self.tau.iter().copied().fold(0.0, f64::max)
    }

    pub fn is_delay_free(&self) -> bool {
        self.tau.iter().all(|t| *t == 0.0)
    }

    /// Resolvent `lambda I - A0 - sum_i Ai exp(-lambda tau_i)` at complex `lambda`.
    pub fn characteristic_matrix(&self, lambda: C64) -> CMat {
        let n = self.n();
        let mut r = CMat::from_diagonal_element(n, n, lambda) - linalg::to_complex(&self.a[0]);
        for (ai, ti) in self.a[1..].iter().zip(&self.tau[1..]) {
            r -= linalg::to_complex(ai) * (-lambda * ti).exp();
        }
        r
    }
}

/// A system satisfying `max tau = 1` together with the time scale used to get
/// there. Original frequencies are `omega_scaled / scale`.
#[derive(Debug, Clone, PartialEq)]
pub struct ScaledSystem {
    pub sys: DelaySystem,
    pub scale: f64,
}

impl ScaledSystem {
    /// Rescales when the system has a delay; delay-free systems pass through
    /// with scale 1.
    pub fn from_system(sys: &DelaySystem) -> Self {
        rescale(sys).unwrap_or_else(|_| ScaledSystem { sys: sys.clone(), scale: 1.0 })
    }

    pub fn to_original_frequency(&self, omega_scaled: f64) -> f64 {
        omega_scaled / self.scale
    }

    pub fn to_scaled_frequency(&self, omega: f64) -> f64 {
        omega * self.scale
    }
}

/// Time dilation `t -> t / s` with `s = max tau`: delays divide by `s`,
/// `A0..Am` and `B` multiply by `s`, `C` and `D` are unchanged, so that
/// `G_scaled(j w s) = G(j w)`.
pub fn rescale(sys: &DelaySystem) -> Result<ScaledSystem> {
    let s = sys.max_delay();
    if s <= 0.0 {
        return Err(Error::DegenerateDelays);
    }
    let a = sys.a.iter().map(|m| m * s).collect();
    let tau = sys.tau.iter().map(|t| t / s).collect();
    let scaled = DelaySystem {
        a,
        b: &sys.b * s,
        c: sys.c.clone(),
        d: sys.d.clone(),
        tau,
    };
    Ok(ScaledSystem { sys: scaled, scale: s })
}

/// `G(jw)` by an LU solve on the resolvent.
pub fn eval_transfer(sys: &DelaySystem, omega: f64) -> Result<CMat> {
    let lambda = C64::new(0.0, omega);
    let res = sys.characteristic_matrix(lambda);
    let lu = CheckedLu::new(&res);
    if lu.rcond < RCOND_THRESHOLD {
        return Err(Error::SingularResolvent { omega, rcond: lu.rcond });
    }
    let x = lu
        .solve(&linalg::to_complex(&sys.b))
        .ok_or(Error::SingularResolvent { omega, rcond: 0.0 })?;
    let feed = linalg::to_complex(&sys.d) * (-lambda * sys.tau[0]).exp();
    Ok(linalg::to_complex(&sys.c) * x + feed)
}

/// Singular values of `G(jw)`, descending.
pub fn singular_values_at(sys: &DelaySystem, omega: f64) -> Result<Vec<f64>> {
    Ok(linalg::singular_values(&eval_transfer(sys, omega)?))
}

/// Rightmost characteristic root estimate of `x' = A0 x + sum Ai x(t - tau_i)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StabilityEstimate {
    pub root: C64,
    pub n_stab: usize,
    /// Set when the estimate moved noticeably between `n_stab` and `n_stab + 5`.
    pub maybe_underresolved: bool,
}

impl StabilityEstimate {
    pub fn is_stable(&self, margin: f64) -> bool {
        self.root.re <= -margin
    }
}

/// Rightmost eigenvalue of a Chebyshev collocation of the infinitesimal
/// generator on `[-max tau_i, 0]`, refined once to detect under-resolution.
pub fn check_stability(sys: &DelaySystem, n_stab: usize) -> StabilityEstimate {
    let n_stab = n_stab.max(1);
    let first = rightmost_generator_root(sys, n_stab);
    let second = rightmost_generator_root(sys, n_stab + 5);
    let (root, flag) = match (first, second) {
        (Ok(a), Ok(b)) => (a, (a - b).norm() > 1e-6 * a.norm().max(1.0)),
        (Ok(a), Err(_)) | (Err(_), Ok(a)) => (a, true),
        (Err(_), Err(_)) => (C64::new(f64::INFINITY, 0.0), true),
    };
    StabilityEstimate { root, n_stab, maybe_underresolved: flag }
}

fn rightmost_generator_root(sys: &DelaySystem, n_pts: usize) -> Result<C64> {
    let n = sys.n();
    let state_delays = &sys.tau[1..];
    let h = state_delays.iter().copied().fold(0.0, f64::max);
    let eigs = if h == 0.0 {
        let mut sum = sys.a[0].clone();
        for ai in &sys.a[1..] {
            sum += ai;
        }
        linalg::real_eigenvalues(&sum)?
    } else {
        // theta_j = (h/2)(cos(j pi / N) - 1), theta_0 = 0, theta_N = -h
        let pts: Vec<f64> = (0..=n_pts)
            .map(|j| {
                if j == 0 {
                    0.0
                } else if j == n_pts {
                    -h
                } else {
                    0.5 * h * ((j as f64 * core::f64::consts::PI / n_pts as f64).cos() - 1.0)
                }
            })
            .collect();
        let w = spectral::chebyshev_lobatto_weights(n_pts + 1);
        let dm = spectral::barycentric_diff_matrix(&pts, &w);
        let dim = (n_pts + 1) * n;
        let mut m = RMat::zeros(dim, dim);
        for j in 1..=n_pts {
            for k in 0..=n_pts {
                let djk = dm[(j, k)];
                for r in 0..n {
                    m[(j * n + r, k * n + r)] = djk;
                }
            }
        }
        let mut top = sys.a[0].clone();
        m.view_mut((0, 0), (n, n)).copy_from(&top);
        for (ai, ti) in sys.a[1..].iter().zip(state_delays) {
            let l = spectral::lagrange_row(&pts, &w, -ti);
            for (k, lk) in l.iter().enumerate() {
                if *lk != 0.0 {
                    top = m.view((0, k * n), (n, n)).into_owned() + ai * *lk;
                    m.view_mut((0, k * n), (n, n)).copy_from(&top);
                }
            }
        }
        linalg::real_eigenvalues(&m)?
    };
    eigs.into_iter()
        .max_by(|a, b| a.re.total_cmp(&b.re).then(a.im.total_cmp(&b.im)))
        .ok_or(Error::Eigensolver("empty spectrum"))
}
