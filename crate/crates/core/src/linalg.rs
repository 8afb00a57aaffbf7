//! Dense linear-algebra helpers on top of nalgebra.

use alloc::vec::Vec;

use nalgebra::{DMatrix, DVector, Hessenberg, Schur, SymmetricEigen, LU, QR, SVD};
use num_complex::Complex;
#[allow(unused_imports)]
use num_traits::Float;
use num_traits::Zero;

use crate::error::{Error, Result};

pub type C64 = Complex<f64>;
pub type RMat = DMatrix<f64>;
pub type CMat = DMatrix<C64>;
pub type CVec = DVector<C64>;

const MAX_QR_SWEEPS_PER_DIM: usize = 300;

/// Promotes a real matrix to a complex one.
pub fn to_complex(m: &RMat) -> CMat {
    m.map(|x| C64::new(x, 0.0))
}

pub fn max_abs(m: &CMat) -> f64 {
    m.iter().fold(0.0, |acc, z| acc.max(z.norm()))
}

/// Frobenius norm of a complex matrix.
pub fn fro_norm(m: &CMat) -> f64 {
    m.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
}

/// Parlett-Reinsch balancing: a diagonal similarity by powers of two that
/// equalizes row and column norms. Eigenvalues are unchanged exactly.
pub fn balance(m: &mut RMat) {
    let n = m.nrows();
    const RADIX: f64 = 2.0;
    let sqrdx = RADIX * RADIX;
    let mut done = false;
    while !done {
        done = true;
        for i in 0..n {
            let mut r = 0.0;
            let mut c = 0.0;
            for j in 0..n {
                if j != i {
                    c += m[(j, i)].abs();
                    r += m[(i, j)].abs();
                }
            }
            if c == 0.0 || r == 0.0 {
                continue;
            }
            let s = c + r;
            let mut g = r / RADIX;
            let mut f = 1.0;
            while c < g {
                f *= RADIX;
                c *= sqrdx;
            }
            g = r * RADIX;
            while c > g {
                f /= RADIX;
                c /= sqrdx;
            }
            if (c + r) / f < 0.95 * s {
                done = false;
                let g = 1.0 / f;
                for j in 0..n {
                    m[(i, j)] *= g;
                }
                for j in 0..n {
                    m[(j, i)] *= f;
                }
            }
        }
    }
}

/// All eigenvalues of a dense real nonsymmetric matrix (balanced Francis QR).
pub fn real_eigenvalues(m: &RMat) -> Result<Vec<C64>> {
    let n = m.nrows();
    if n == 0 {
        return Ok(Vec::new());
    }
    if !m.iter().all(|x| x.is_finite()) {
        return Err(Error::Eigensolver("non-finite matrix entry"));
    }
    let mut work = m.clone();
    balance(&mut work);
    let h = Hessenberg::new(work.clone()).h();
    if let Some(eigs) = hessenberg_qr(h) {
        return Ok(eigs);
    }
    Schur::try_new(work, f64::EPSILON, 30 * n)
        .map(|s| s.complex_eigenvalues().iter().copied().collect())
        .ok_or(Error::Eigensolver("real Schur iteration"))
}

const QR_ITERS_PER_EIG: usize = 120;

/// Double-shift QR on an upper Hessenberg matrix, eigenvalues only.
/// Exceptional shifts every ten stalled iterations break the cycles the
/// plain Francis shift can fall into.
fn hessenberg_qr(mut a: RMat) -> Option<Vec<C64>> {
    let n = a.nrows();
    let eps = f64::EPSILON;
    let mut out = alloc::vec![C64::zero(); n];
    let mut anorm = 0.0;
    for i in 0..n {
        for j in i.saturating_sub(1)..n {
            anorm += a[(i, j)].abs();
        }
    }
    if anorm == 0.0 {
        return Some(out);
    }
    let mut nn = n as isize - 1;
    let mut t = 0.0;
    let mut its = 0;
    while nn >= 0 {
        let u = nn as usize;
        let mut l = u;
        while l > 0 {
            let mut s = a[(l - 1, l - 1)].abs() + a[(l, l)].abs();
            if s == 0.0 {
                s = anorm;
            }
            if a[(l, l - 1)].abs() <= eps * s {
                a[(l, l - 1)] = 0.0;
                break;
            }
            l -= 1;
        }
        let mut x = a[(u, u)];
        if l == u {
            out[u] = C64::new(x + t, 0.0);
            nn -= 1;
            its = 0;
            continue;
        }
        let mut y = a[(u - 1, u - 1)];
        let mut w = a[(u, u - 1)] * a[(u - 1, u)];
        if l + 1 == u {
            let p = 0.5 * (y - x);
            let q = p * p + w;
            let z = q.abs().sqrt();
            x += t;
            if q >= 0.0 {
                let z = p + z.copysign(p);
                out[u - 1] = C64::new(x + z, 0.0);
                out[u] = if z != 0.0 { C64::new(x - w / z, 0.0) } else { C64::new(x + z, 0.0) };
            } else {
                out[u] = C64::new(x + p, -z);
                out[u - 1] = out[u].conj();
            }
            nn -= 2;
            its = 0;
            continue;
        }
        if its == QR_ITERS_PER_EIG {
            return None;
        }
        if its > 0 && its % 10 == 0 {
            t += x;
            for i in 0..=u {
                a[(i, i)] -= x;
            }
            let s = a[(u, u - 1)].abs() + a[(u - 1, u - 2)].abs();
            x = 0.75 * s;
            y = x;
            w = -0.4375 * s * s;
        }
        its += 1;
        let (mut p, mut q, mut r);
        let mut m = u - 2;
        loop {
            let z = a[(m, m)];
            let rr = x - z;
            let ss = y - z;
            p = (rr * ss - w) / a[(m + 1, m)] + a[(m, m + 1)];
            q = a[(m + 1, m + 1)] - z - rr - ss;
            r = a[(m + 2, m + 1)];
            let s = p.abs() + q.abs() + r.abs();
            p /= s;
            q /= s;
            r /= s;
            if m == l {
                break;
            }
            let uu = a[(m, m - 1)].abs() * (q.abs() + r.abs());
            let vv = p.abs() * (a[(m - 1, m - 1)].abs() + z.abs() + a[(m + 1, m + 1)].abs());
            if uu <= eps * vv {
                break;
            }
            m -= 1;
        }
        for i in m..u - 1 {
            a[(i + 2, i)] = 0.0;
            if i != m {
                a[(i + 2, i - 1)] = 0.0;
            }
        }
        for k in m..u {
            if k != m {
                p = a[(k, k - 1)];
                q = a[(k + 1, k - 1)];
                r = if k + 1 != u { a[(k + 2, k - 1)] } else { 0.0 };
                x = p.abs() + q.abs() + r.abs();
                if x != 0.0 {
                    p /= x;
                    q /= x;
                    r /= x;
                }
            }
            let s = (p * p + q * q + r * r).sqrt().copysign(p);
            if s == 0.0 {
                continue;
            }
            if k == m {
                if l != m {
                    a[(k, k - 1)] = -a[(k, k - 1)];
                }
            } else {
                a[(k, k - 1)] = -s * x;
            }
            p += s;
            x = p / s;
            y = q / s;
            let z = r / s;
            q /= p;
            r /= p;
            for j in k..=u {
                let mut pp = a[(k, j)] + q * a[(k + 1, j)];
                if k + 1 != u {
                    pp += r * a[(k + 2, j)];
                    a[(k + 2, j)] -= pp * z;
                }
                a[(k + 1, j)] -= pp * y;
                a[(k, j)] -= pp * x;
            }
            let mmin = u.min(k + 3);
            for i in l..=mmin {
                let mut pp = x * a[(i, k)] + y * a[(i, k + 1)];
                if k + 1 != u {
                    pp += z * a[(i, k + 2)];
                    a[(i, k + 2)] -= pp * r;
                }
                a[(i, k + 1)] -= pp * q;
                a[(i, k)] -= pp;
            }
        }
    }
    if out.iter().all(|z| z.re.is_finite() && z.im.is_finite()) {
        Some(out)
    } else {
        None
    }
}

/// All eigenvalues of a dense complex matrix.
pub fn complex_eigenvalues(m: &CMat) -> Result<Vec<C64>> {
    let n = m.nrows();
    if n == 0 {
        return Ok(Vec::new());
    }
    if n == 1 {
        return Ok(alloc::vec![m[(0, 0)]]);
    }
    let schur = Schur::try_new(m.clone(), f64::EPSILON, MAX_QR_SWEEPS_PER_DIM * n)
        .ok_or(Error::Eigensolver("complex Schur iteration"))?;
    let (_, t) = schur.unpack();
    Ok((0..n).map(|i| t[(i, i)]).collect())
}

/// Eigenvalues of the Hermitian part of `m`, ascending.
pub fn hermitian_eigenvalues(m: &CMat) -> Vec<f64> {
    let h = (m + m.adjoint()) * C64::new(0.5, 0.0);
    let mut ev: Vec<f64> = SymmetricEigen::new(h).eigenvalues.iter().copied().collect();
    ev.sort_by(|a, b| a.total_cmp(b));
    ev
}

/// Singular values, descending.
pub fn singular_values(m: &CMat) -> Vec<f64> {
    if m.nrows() == 0 || m.ncols() == 0 {
        return Vec::new();
    }
    let mut s: Vec<f64> = SVD::new(m.clone(), false, false)
        .singular_values
        .iter()
        .copied()
        .collect();
    s.sort_by(|a, b| b.total_cmp(a));
    s
}

pub fn real_singular_values(m: &RMat) -> Vec<f64> {
    singular_values(&to_complex(m))
}

/// Largest singular value (0 for empty matrices).
pub fn sigma_max(m: &CMat) -> f64 {
    singular_values(m).first().copied().unwrap_or(0.0)
}

/// Smallest singular value and the corresponding unit right singular vector.
pub fn smallest_singular_pair(m: &CMat) -> (f64, CVec) {
    let svd = SVD::new(m.clone(), false, true);
    let v_t = svd.v_t.expect("right singular vectors requested");
    let (k, s) = svd
        .singular_values
        .iter()
        .enumerate()
        .min_by(|a, b| a.1.total_cmp(b.1))
        .map(|(k, s)| (k, *s))
        .expect("non-empty matrix");
    // rows of v_t are v^H
    let v = v_t.row(k).adjoint().into_owned();
    (s, v)
}

/// 1-norm of a complex matrix.
pub fn one_norm(m: &CMat) -> f64 {
    (0..m.ncols())
        .map(|j| m.column(j).iter().map(|z| z.norm()).sum::<f64>())
        .fold(0.0, f64::max)
}

/// LU factorization with partial pivoting plus the reciprocal 1-norm
/// condition number. The inverse is formed only to measure `||A^{-1}||_1`.
pub struct CheckedLu {
    lu: LU<C64, nalgebra::Dyn, nalgebra::Dyn>,
    pub rcond: f64,
}

impl CheckedLu {
    pub fn new(a: &CMat) -> Self {
        let anorm = one_norm(a);
        let lu = LU::new(a.clone());
        let rcond = match lu.try_inverse() {
            Some(inv) if anorm > 0.0 => {
                let inorm = one_norm(&inv);
                if inorm.is_finite() {
                    1.0 / (anorm * inorm)
                } else {
                    0.0
                }
            }
            _ => 0.0,
        };
        CheckedLu { lu, rcond }
    }

    pub fn solve(&self, b: &CMat) -> Option<CMat> {
        self.lu.solve(b)
    }

    pub fn solve_vec(&self, b: &CVec) -> Option<CVec> {
        self.lu.solve(b)
    }
}

/// Least-squares solution of `J x = b` by Householder QR (`J` tall, full
/// column rank).
pub fn lstsq_qr(j: &RMat, b: &DVector<f64>) -> Option<DVector<f64>> {
    let qr = QR::new(j.clone());
    let mut rhs = b.clone();
    qr.q_tr_mul(&mut rhs);
    let ncols = j.ncols();
    let r = qr.r();
    let top = rhs.rows(0, ncols).into_owned();
    r.solve_upper_triangular(&top)
}

/// Eigenvector for an (approximate) eigenvalue by inverse iteration.
pub fn eigenvector_for(m: &RMat, lambda: C64) -> CVec {
    let n = m.nrows();
    let scale = 1.0 + lambda.norm();
    let shift = lambda + C64::new(1e-10 * scale, 1e-10 * scale);
    let mut a = to_complex(m);
    for i in 0..n {
        a[(i, i)] -= shift;
    }
    let lu = LU::new(a);
    let mut x = CVec::from_element(n, C64::new(1.0, 0.0));
    for _ in 0..4 {
        if let Some(y) = lu.solve(&x) {
            let nrm = y.norm();
            if nrm > 0.0 && nrm.is_finite() {
                x = y / C64::new(nrm, 0.0);
            }
        }
    }
    x
}

/// Greedy pairing of every eigenvalue with `-conj(lambda)`; returns the worst
/// pairing distance relative to `max(1, |lambda|)`.
pub fn hamiltonian_pairing_defect(eigs: &[C64]) -> f64 {
    let mut used = alloc::vec![false; eigs.len()];
    let mut worst = 0.0_f64;
    let mut order: Vec<usize> = (0..eigs.len()).collect();
    order.sort_by(|&a, &b| eigs[a].norm().total_cmp(&eigs[b].norm()));
    for &i in &order {
        if used[i] {
            continue;
        }
        let target = -eigs[i].conj();
        let scale = eigs[i].norm().max(1.0);
        // the eigenvalue may be its own partner (on the imaginary axis)
        let mut best = (i, (eigs[i] - target).norm());
        for (j, z) in eigs.iter().enumerate() {
            if j != i && !used[j] {
                let d = (z - target).norm();
                if d < best.1 {
                    best = (j, d);
                }
            }
        }
        used[i] = true;
        used[best.0] = true;
        worst = worst.max(best.1 / scale);
    }
    worst
}

#[inline]
pub fn cis(theta: f64) -> C64 {
    C64::new(theta.cos(), theta.sin())
}

#[inline]
pub fn c(re: f64) -> C64 {
    C64::new(re, 0.0)
}

pub fn is_zero_matrix(m: &RMat) -> bool {
    m.iter().all(|x| x.is_zero())
}
