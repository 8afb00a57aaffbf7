#![allow(dead_code)]

use delay_hinf_core::linalg::RMat;
use delay_hinf_core::DelaySystem;
use rand::rngs::StdRng;
use rand::{Rng, SeedableRng};

pub fn rng(seed: u64) -> StdRng {
    StdRng::seed_from_u64(seed)
}

pub fn random_matrix(rng: &mut StdRng, rows: usize, cols: usize, amp: f64) -> RMat {
    RMat::from_fn(rows, cols, |_, _| rng.gen_range(-amp..amp))
}

fn spectral_norm(m: &RMat) -> f64 {
    m.clone().svd(false, false).singular_values.max()
}

/// Random delay system that is stable for every choice of delays: the
/// logarithmic norm of `A0` is pushed below `-(sum ||Ai|| + 0.3)`.
pub fn random_stable(rng: &mut StdRng, n: usize, m: usize, nu: usize, ny: usize) -> DelaySystem {
    let r0 = random_matrix(rng, n, n, 1.0);
    let sym = (&r0 + r0.transpose()) * 0.5;
    let mu = sym.symmetric_eigenvalues().max();
    let mut a = Vec::with_capacity(m + 1);
    let delayed: Vec<RMat> = (0..m).map(|_| random_matrix(rng, n, n, 0.6)).collect();
    let shift = mu + delayed.iter().map(spectral_norm).sum::<f64>() + 0.3 + rng.gen_range(0.0..1.0);
    a.push(r0 - RMat::identity(n, n) * shift);
    a.extend(delayed);
    let b = random_matrix(rng, n, nu, 1.0);
    let c = random_matrix(rng, ny, n, 1.0);
    let d = random_matrix(rng, ny, nu, 0.3);
    let mut tau: Vec<f64> = (0..=m).map(|_| rng.gen_range(0.1..2.0)).collect();
    if rng.gen_bool(0.3) {
        tau[0] = 0.0;
    }
    DelaySystem::new(a, b, c, d, tau).unwrap()
}

/// Random Hurwitz system without delays.
pub fn random_delay_free(rng: &mut StdRng, n: usize, nu: usize, ny: usize) -> DelaySystem {
    let r0 = random_matrix(rng, n, n, 1.5);
    let sym = (&r0 + r0.transpose()) * 0.5;
    let mu = sym.symmetric_eigenvalues().max();
    let a0 = r0 - RMat::identity(n, n) * (mu + rng.gen_range(0.05..1.0));
    let b = random_matrix(rng, n, nu, 1.0);
    let c = random_matrix(rng, ny, n, 1.0);
    let d = random_matrix(rng, ny, nu, 0.3);
    DelaySystem::new(vec![a0], b, c, d, vec![0.0]).unwrap()
}

pub fn g12() -> DelaySystem {
    let a0 = RMat::from_row_slice(3, 3, &[108.0, 110.0, 18.0, -107.0, -109.0, -17.0, -217.0, -217.0, -37.0]);
    let a1 = RMat::from_row_slice(3, 3, &[46.5, 46.5, 1.5, -46.5, -46.5, -1.5, -93.0, -93.0, -3.0]);
    let a2 = RMat::from_row_slice(3, 3, &[-0.3, 0.3, -0.3, 0.3, -0.3, 0.3, 0.0, 0.0, 0.0]);
    let b = RMat::from_row_slice(3, 2, &[0.5, -90.0, -0.5, 90.0, 0.0, 180.0]);
    let c = RMat::from_row_slice(2, 3, &[1.0, -1.0, 1.0, 0.1833, 0.1833, 0.1833]);
    let d = RMat::from_row_slice(2, 2, &[0.4, 0.0, 0.0, 0.0]);
    DelaySystem::new(vec![a0, a1, a2], b, c, d, vec![0.5, 0.667, 1.0]).unwrap()
}

/// `G(s) = 1 / (s^2 + 0.2 s + 1)`.
pub fn resonance() -> DelaySystem {
    DelaySystem::new(
        vec![RMat::from_row_slice(2, 2, &[0.0, 1.0, -1.0, -0.2])],
        RMat::from_row_slice(2, 1, &[0.0, 1.0]),
        RMat::from_row_slice(1, 2, &[1.0, 0.0]),
        RMat::zeros(1, 1),
        vec![0.0],
    )
    .unwrap()
}
