//! Three ways to read a point on a discretized singular value curve.

mod common;

use delay_hinf_core::levelset::build_h_blocks;
use delay_hinf_core::linalg::{self, C64};
use delay_hinf_core::spectral::{cheb_grid, diff_data, PnSolver};
use delay_hinf_core::{assemble_l, eval_hn, eval_mn, DelaySystem, ScaledSystem};

/// Points `(w, xi)` with `xi^2` a real eigenvalue of `M_N(jw)`, away from
/// the singular levels of `D`.
fn curve_points(scaled: &ScaledSystem, ps: &PnSolver, count: usize) -> Vec<(f64, f64)> {
    let sd = linalg::real_singular_values(scaled.sys.d());
    let mut pts = Vec::new();
    let mut k = 0;
    while pts.len() < count && k < 400 {
        let w = 0.05 + 0.37 * k as f64;
        k += 1;
        let mn = eval_mn(scaled, w, ps).unwrap();
        for z in mn.eigenvalues().unwrap() {
            if z.re > 1e-6 && z.im.abs() <= 1e-9 * z.re {
                let xi = z.re.sqrt();
                if sd.iter().all(|s| (s - xi).abs() > 1e-3 * xi) && pts.len() < count {
                    pts.push((w, xi));
                }
            }
        }
    }
    pts
}

fn check(sys: &DelaySystem, n: usize) {
    let scaled = ScaledSystem::from_system(sys);
    let ps = PnSolver::new(n);
    let dd = diff_data(&cheb_grid(n));
    let pts = curve_points(&scaled, &ps, 25);
    assert_eq!(pts.len(), 25);
    for (w, xi) in pts {
        let blocks = build_h_blocks(&scaled, xi).unwrap();
        let hn = eval_hn(&blocks, C64::new(0.0, w), &ps, &scaled).unwrap();
        let sv = linalg::singular_values(&hn);
        assert!(sv.last().unwrap() / sv[0] < 1e-6, "H_N not singular at ({w}, {xi})");
        let op = assemble_l(&blocks, &dd, &scaled);
        let eigs = linalg::real_eigenvalues(&op.l).unwrap();
        let dist = eigs.iter().map(|z| (z - C64::new(0.0, w)).norm()).fold(f64::INFINITY, f64::min);
        assert!(dist < 1e-6 * (1.0 + w), "L_xi^N misses jw at ({w}, {xi}): {dist:e}");
    }
}

#[test]
fn g12_points_agree() {
    check(&common::g12(), 12);
}

#[test]
fn random_systems_agree() {
    let mut r = common::rng(99);
    for _ in 0..3 {
        check(&common::random_stable(&mut r, 2, 2, 2, 2), 10);
    }
}
