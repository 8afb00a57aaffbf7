mod common;

use delay_hinf_core::corrector::{gauss_newton, jacobian, jacobian_fd, DEFAULT_MAX_ITER, DEFAULT_RTOL};
use delay_hinf_core::levelset::{axis_tolerance, build_h_blocks, eval_h, imaginary_eigs, PredictorOptions};
use delay_hinf_core::linalg::{self, CMat, CVec, C64};
use delay_hinf_core::spectral::{cheb_grid, diff_data};
use delay_hinf_core::{
    assemble_l, compute_hinf, init_nullvector, predict_gmax, residual, CorrectionPoint, HinfOptions,
    ScaledSystem,
};

/// Corrector starting point at the crossing of the G12 level set closest to the peak.
fn g12_start() -> (ScaledSystem, CorrectionPoint) {
    let scaled = ScaledSystem::from_system(&common::g12());
    let pred = predict_gmax(&scaled, &PredictorOptions::new(18)).unwrap();
    let blocks = build_h_blocks(&scaled, pred.xi_l * (1.0 + 2e-6)).unwrap();
    let w = pred.crossings[0];
    let h = eval_h(&blocks, C64::new(0.0, w), &scaled);
    (scaled, CorrectionPoint::start(w, blocks.xi, &h))
}

#[test]
fn nullvector_of_diagonal_matrix() {
    let mut h = CMat::identity(6, 6);
    h[(5, 5)] = C64::new(0.0, 0.0);
    let (v1, v2) = init_nullvector(&h);
    assert_eq!(v1.len(), 3);
    assert!(v1.norm() < 1e-14);
    assert!((v2[2].norm() - 1.0).abs() < 1e-14);
}

#[test]
fn nullvector_attains_smallest_singular_value() {
    let mut r = common::rng(7);
    let re = common::random_matrix(&mut r, 6, 6, 1.0);
    let im = common::random_matrix(&mut r, 6, 6, 1.0);
    let h = CMat::from_fn(6, 6, |i, j| C64::new(re[(i, j)], im[(i, j)]));
    let (v1, v2) = init_nullvector(&h);
    let v = CVec::from_iterator(6, v1.iter().chain(v2.iter()).copied());
    let smin = *linalg::singular_values(&h).last().unwrap();
    assert!(((&h * &v).norm() - smin * v.norm()).abs() < 1e-10);
}

#[test]
fn crossing_makes_h_nearly_singular() {
    let scaled = ScaledSystem::from_system(&common::g12());
    let pred = predict_gmax(&scaled, &PredictorOptions::new(18)).unwrap();
    let first = &pred.history[0];
    let blocks = build_h_blocks(&scaled, first.xi).unwrap();
    for w in &first.crossings {
        let h = eval_h(&blocks, C64::new(0.0, *w), &scaled);
        let sv = linalg::singular_values(&h);
        assert!(sv.last().unwrap() / sv[0] < 1e-4, "w = {w}: {sv:?}");
    }
}

#[test]
fn analytic_jacobian_matches_finite_differences() {
    let (scaled, pt) = g12_start();
    let ja = jacobian(&pt, &scaled).unwrap();
    let jf = jacobian_fd(&pt, &scaled, 1e-7).unwrap();
    let mut worst = 0.0f64;
    for (a, f) in ja.iter().zip(jf.iter()) {
        worst = worst.max((a - f).abs() / a.abs().max(f.abs()).max(1.0));
    }
    assert!(worst < 1e-5, "max relative deviation {worst:e}");
}

#[test]
fn converged_point_is_a_fixed_point() {
    let (scaled, pt) = g12_start();
    let done = gauss_newton(&pt, &scaled, DEFAULT_MAX_ITER, DEFAULT_RTOL).unwrap();
    assert!(done.converged);
    assert!((done.xi - 1.1696).abs() < 1e-3);
    let h = eval_h(&build_h_blocks(&scaled, done.xi).unwrap(), C64::new(0.0, done.omega), &scaled);
    assert!(done.residual_norm <= 1e-10 * (1.0 + linalg::fro_norm(&h)));
    let v_norm = (done.v1.norm_squared() + done.v2.norm_squared()).sqrt();
    assert!((0.5..=2.0).contains(&v_norm));
    let again = gauss_newton(&done, &scaled, DEFAULT_MAX_ITER, DEFAULT_RTOL).unwrap();
    assert!(again.iterations <= 1);
    assert!((again.xi - done.xi).abs() <= 1e-12 * done.xi);
    assert!((again.omega - done.omega).abs() <= 1e-12 * done.omega);
    assert!(residual(&again, &scaled).unwrap().norm() <= 1e-10 * (1.0 + linalg::fro_norm(&h)));
}

/// `[-v2^*, v1^*] dH/dlambda [v1; v2] = -2j Im{v2^* K v1}`.
#[test]
fn jordan_component_matches_bilinear_form() {
    let (scaled, pt) = g12_start();
    let done = gauss_newton(&pt, &scaled, DEFAULT_MAX_ITER, DEFAULT_RTOL).unwrap();
    for p in [&pt, &done] {
        let blocks = build_h_blocks(&scaled, p.xi).unwrap();
        let h = 1e-6;
        let lam = C64::new(0.0, p.omega);
        let dh = (eval_h(&blocks, lam + h, &scaled) - eval_h(&blocks, lam - h, &scaled)) / C64::new(2.0 * h, 0.0);
        let v = CVec::from_iterator(6, p.v1.iter().chain(p.v2.iter()).copied());
        let u = CVec::from_iterator(6, p.v2.iter().map(|z| -z).chain(p.v1.iter().copied()));
        let form = (u.adjoint() * dh * v)[(0, 0)];
        let jordan = residual(p, &scaled).unwrap()[14];
        assert!(form.re.abs() <= 1e-6 * form.norm().max(1.0), "form {form} should be imaginary");
        let via_form = (C64::new(0.0, 0.5) * form).re;
        assert!((via_form - jordan).abs() <= 1e-6 * jordan.abs().max(1.0), "{via_form} vs {jordan}");
    }
}

#[test]
fn delay_free_jordan_reduces_to_inner_product() {
    let sys = common::resonance();
    let scaled = ScaledSystem::from_system(&sys);
    let blocks = build_h_blocks(&scaled, 3.0).unwrap();
    let h = eval_h(&blocks, C64::new(0.0, 0.9), &scaled);
    let pt = CorrectionPoint::start(0.9, 3.0, &h);
    let r = residual(&pt, &scaled).unwrap();
    let z = pt.v2.dotc(&pt.v1);
    assert_eq!(r.len(), 11);
    assert!((r[10] - z.im).abs() < 1e-15);
}

#[test]
fn g12_norm_and_certification() {
    let sys = common::g12();
    let res = compute_hinf(&sys, &HinfOptions { n: Some(18), ..HinfOptions::default() }).unwrap();
    assert!((res.norm - 1.1696).abs() < 1e-3);
    let sv = linalg::singular_values(&delay_hinf_core::eval_transfer(&sys, res.peak_omega).unwrap());
    assert!(sv.iter().any(|s| (s - res.norm).abs() <= 1e-9 * res.norm));
    // first derivative vanishes at the peak
    let sigma = |w: f64| linalg::singular_values(&delay_hinf_core::eval_transfer(&sys, w).unwrap())[0];
    let h = 1e-4;
    let slope = (sigma(res.peak_omega + h) - sigma(res.peak_omega - h)) / (2.0 * h);
    assert!(slope.abs() < 1e-2 * h, "slope {slope:e}");
    assert!(sigma(res.peak_omega + h) <= res.norm + 1e-12);
    assert!(sigma(res.peak_omega - h) <= res.norm + 1e-12);
}

#[test]
fn corrector_never_undercuts_a_sweep() {
    let mut r = common::rng(11);
    for _ in 0..4 {
        let sys = common::random_stable(&mut r, 3, 2, 2, 2);
        let res = compute_hinf(&sys, &HinfOptions { n: Some(20), ..HinfOptions::default() }).unwrap();
        let best = (0..2000)
            .map(|k| 10f64.powf(-2.0 + 5.0 * k as f64 / 1999.0))
            .map(|w| linalg::singular_values(&delay_hinf_core::eval_transfer(&sys, w).unwrap())[0])
            .fold(0.0, f64::max);
        assert!(res.norm >= best - 1e-6, "{} < {best}", res.norm);
    }
}

#[test]
fn final_level_crossings_feed_the_corrector() {
    let scaled = ScaledSystem::from_system(&common::g12());
    let pred = predict_gmax(&scaled, &PredictorOptions::new(18)).unwrap();
    let blocks = build_h_blocks(&scaled, pred.xi_l).unwrap();
    let op = assemble_l(&blocks, &diff_data(&cheb_grid(18)), &scaled);
    let w = imaginary_eigs(&op, axis_tolerance(18)).unwrap();
    assert!(!w.is_empty());
    assert!(w.iter().all(|x| (x - 12.365).abs() < 0.2));
}
