#![allow(dead_code)]

use std::path::PathBuf;

use delay_hinf::core::linalg::RMat;
use delay_hinf::core::DelaySystem;
use delay_hinf::io::load_system;
use rand::rngs::StdRng;
use rand::{Rng, SeedableRng};

pub fn rng(seed: u64) -> StdRng {
    StdRng::seed_from_u64(seed)
}

pub fn systems_dir() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("systems")
}

pub fn g12_path() -> PathBuf {
    systems_dir().join("g12.json")
}

pub fn g12() -> DelaySystem {
    load_system(&g12_path()).unwrap()
}

pub fn random_matrix(rng: &mut StdRng, rows: usize, cols: usize, amp: f64) -> RMat {
    RMat::from_fn(rows, cols, |_, _| rng.gen_range(-amp..amp))
}

fn spectral_norm(m: &RMat) -> f64 {
    m.clone().svd(false, false).singular_values.max()
}

/// Stable for every choice of delays: the logarithmic norm of `A0` sits
/// below `-(sum ||Ai|| + 0.3)`.
pub fn random_stable(rng: &mut StdRng, n: usize, m: usize, nu: usize, ny: usize) -> DelaySystem {
    let r0 = random_matrix(rng, n, n, 1.0);
    let mu = ((&r0 + r0.transpose()) * 0.5).symmetric_eigenvalues().max();
    let delayed: Vec<RMat> = (0..m).map(|_| random_matrix(rng, n, n, 0.6)).collect();
    let shift = mu + delayed.iter().map(spectral_norm).sum::<f64>() + 0.3 + rng.gen_range(0.0..1.0);
    let mut a = vec![r0 - RMat::identity(n, n) * shift];
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

pub fn random_delay_free(rng: &mut StdRng, n: usize, nu: usize, ny: usize) -> DelaySystem {
    let r0 = random_matrix(rng, n, n, 1.5);
    let mu = ((&r0 + r0.transpose()) * 0.5).symmetric_eigenvalues().max();
    let a0 = r0 - RMat::identity(n, n) * (mu + rng.gen_range(0.05..1.0));
    let b = random_matrix(rng, n, nu, 1.0);
    let c = random_matrix(rng, ny, n, 1.0);
    let d = random_matrix(rng, ny, nu, 0.3);
    DelaySystem::new(vec![a0], b, c, d, vec![0.0]).unwrap()
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
