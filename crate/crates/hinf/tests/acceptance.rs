//! One check per acceptance criterion. Every test prints a single
//! `PASS criterion k` or `FAIL criterion k` line before asserting.

mod common;

use std::time::Instant;

use delay_hinf::compute_hinf_par;
use delay_hinf::core::corrector::{jacobian, jacobian_fd};
use delay_hinf::core::linalg::{self, hamiltonian_pairing_defect};
use delay_hinf::core::{
    assemble_l, build_h_blocks, cheb_grid, cutoff_frequency, diff_data, eval_h, eval_hn, eval_mn,
    eval_transfer, hamiltonian_oracle, predict_gmax, sweep_oracle, CorrectionPoint, DelaySystem,
    HinfOptions, HinfResult, PnSolver, PredictorOptions, ScaledSystem, Warning, C64,
};

const G12_PREDICTED: f64 = 1.1626;
const G12_NORM: f64 = 1.1696;
const RESONANCE_PEAK: f64 = 5.025189076296061;

fn report(k: usize, ok: bool, detail: String) {
    println!("{} criterion {k}: {detail}", if ok { "PASS" } else { "FAIL" });
    assert!(ok, "criterion {k}: {detail}");
}

fn norm_with_n(sys: &DelaySystem, n: Option<usize>) -> HinfResult {
    compute_hinf_par(sys, &HinfOptions { n, ..HinfOptions::default() }).unwrap()
}

fn has_cutoff_warning(res: &HinfResult) -> bool {
    res.warnings.iter().any(|w| matches!(w, Warning::CutOff { .. }))
}

fn sigma1(sys: &DelaySystem, w: f64) -> f64 {
    linalg::singular_values(&eval_transfer(sys, w).unwrap())[0]
}

#[test]
fn criterion_1_g12_reproduction() {
    let t = Instant::now();
    let res = norm_with_n(&common::g12(), Some(18));
    let secs = t.elapsed().as_secs_f64();
    let pred_ok = (res.predicted_norm - G12_PREDICTED).abs() <= 1e-3;
    let corr_ok = (res.norm - G12_NORM).abs() <= 1e-3;
    report(
        1,
        pred_ok && corr_ok && secs < 10.0,
        format!(
            "N=18 predicted {:.6} (target {G12_PREDICTED} +- 1e-3: {}), corrected {:.6} (target {G12_NORM} +- 1e-3: {}), {secs:.2} s",
            res.predicted_norm,
            if pred_ok { "ok" } else { "off" },
            res.norm,
            if corr_ok { "ok" } else { "off" },
        ),
    );
}

#[test]
fn criterion_2_cutoff_warning() {
    let sys = common::g12();
    let default = norm_with_n(&sys, None);
    let fine = norm_with_n(&sys, Some(18));
    let warns_15 = default.n == 15 && has_cutoff_warning(&default);
    let quiet_18 = !has_cutoff_warning(&fine);
    let first = |r: &HinfResult| r.warnings.first().map(ToString::to_string).unwrap_or_default();
    report(
        2,
        warns_15 && quiet_18,
        format!(
            "N=15 warns: {warns_15}; N=18 free of warnings: {quiet_18} (N=18 warning: \"{}\"; N=15 norm {:.6})",
            first(&fine),
            default.norm
        ),
    );
}

#[test]
fn criterion_3_cutoff_table() {
    let t = Instant::now();
    let table: Vec<f64> = (1..=25).map(|n| cutoff_frequency(n, 0.1)).collect();
    let secs = t.elapsed().as_secs_f64();
    let monotone = table.windows(2).all(|w| w[1] >= w[0]);
    let ok = table[7] > 10.0 && monotone && secs < 30.0;
    report(3, ok, format!("omega_c(8) = {:.4}, nondecreasing for N=1..25: {monotone}, {secs:.2} s", table[7]));
}

#[test]
fn criterion_4_delay_free_oracle() {
    let mut r = common::rng(4);
    let mut worst = 0.0f64;
    for k in 0..20 {
        let sys = common::random_delay_free(&mut r, 1 + k % 6, 1 + k % 3, 1 + (k / 3) % 3);
        let h = hamiltonian_oracle(&sys, 1e-13).unwrap();
        let res = norm_with_n(&sys, None);
        worst = worst.max((res.norm - h).abs() / h);
    }
    let res = norm_with_n(&common::resonance(), None);
    let res_err = (res.norm - RESONANCE_PEAK).abs() / RESONANCE_PEAK;
    report(
        4,
        worst <= 1e-8 && res_err <= 1e-8,
        format!("20 random systems worst relative gap {worst:.2e}; resonance peak error {res_err:.2e}"),
    );
}

#[test]
fn criterion_5_sweep_lower_bound() {
    let mut systems = vec![common::g12()];
    let mut r = common::rng(5);
    for k in 0..10 {
        systems.push(common::random_stable(&mut r, 1 + k % 4, k % 4, 1 + k % 2, 1 + (k / 2) % 2));
    }
    let mut worst = f64::NEG_INFINITY;
    let mut g12_max = 0.0;
    for (i, sys) in systems.iter().enumerate() {
        let sweep = sweep_oracle(sys, 100.0, 5000).unwrap();
        let res = norm_with_n(sys, if i == 0 { Some(18) } else { None });
        worst = worst.max((sweep.max - res.norm) / res.norm);
        if i == 0 {
            g12_max = sweep.max;
        }
    }
    let g12_ok = (g12_max - G12_NORM).abs() <= 1e-3;
    report(
        5,
        worst <= 1e-6 && g12_ok,
        format!("largest relative excess of sweep over norm {worst:.2e}; G12 sweep max {g12_max:.6}"),
    );
}

/// Curve points `(w, xi)` from real eigenvalues `xi^2` of `M_N(jw)`.
fn curve_points(scaled: &ScaledSystem, ps: &PnSolver, count: usize) -> Vec<(f64, f64)> {
    let sd = linalg::real_singular_values(scaled.sys.d());
    let mut pts = Vec::new();
    let mut k = 0;
    while pts.len() < count && k < 400 {
        let w = 0.05 + 0.37 * k as f64;
        k += 1;
        for z in eval_mn(scaled, w, ps).unwrap().eigenvalues().unwrap() {
            if z.re > 1e-6 && z.im.abs() <= 1e-9 * z.re && pts.len() < count {
                let xi = z.re.sqrt();
                if sd.iter().all(|s| (s - xi).abs() > 1e-3 * xi) {
                    pts.push((w, xi));
                }
            }
        }
    }
    pts
}

#[test]
fn criterion_6_duality() {
    let mut systems = vec![(common::g12(), 15)];
    let mut r = common::rng(6);
    for _ in 0..3 {
        systems.push((common::random_stable(&mut r, 2, 2, 2, 2), 10));
    }
    let mut checked = 0;
    let mut worst_h = 0.0f64;
    let mut worst_l = 0.0f64;
    for (sys, n) in &systems {
        let scaled = ScaledSystem::from_system(sys);
        let ps = PnSolver::new(*n);
        let dd = diff_data(&cheb_grid(*n));
        let pts = curve_points(&scaled, &ps, 25);
        assert_eq!(pts.len(), 25);
        for (w, xi) in pts {
            let blocks = build_h_blocks(&scaled, xi).unwrap();
            let sv = linalg::singular_values(&eval_hn(&blocks, C64::new(0.0, w), &ps, &scaled).unwrap());
            worst_h = worst_h.max(sv.last().unwrap() / sv[0]);
            let eigs = linalg::real_eigenvalues(&assemble_l(&blocks, &dd, &scaled).l).unwrap();
            let dist = eigs.iter().map(|z| (z - C64::new(0.0, w)).norm()).fold(f64::INFINITY, f64::min);
            worst_l = worst_l.max(dist / (1.0 + w));
            checked += 1;
        }
    }
    report(
        6,
        worst_h <= 1e-6 && worst_l <= 1e-6,
        format!("{checked} points: worst relative sigma_min(H_N) {worst_h:.2e}, worst L_xi^N distance to jw {worst_l:.2e}"),
    );
}

#[test]
fn criterion_7_spectral_symmetry() {
    let mut r = common::rng(7);
    let mut worst = 0.0f64;
    for k in 0..10 {
        let sys = common::random_stable(&mut r, 1 + k % 3, 1 + k % 2, 1 + k % 2, 1);
        let scaled = ScaledSystem::from_system(&sys);
        let xi = linalg::real_singular_values(sys.d())[0] + 0.1 + 0.2 * k as f64;
        let n = 4 + k;
        let blocks = build_h_blocks(&scaled, xi).unwrap();
        let eigs = linalg::real_eigenvalues(&assemble_l(&blocks, &diff_data(&cheb_grid(n)), &scaled).l).unwrap();
        worst = worst.max(hamiltonian_pairing_defect(&eigs));
    }
    report(7, worst <= 1e-8, format!("worst -conj pairing defect over 10 pairs {worst:.2e}"));
}

#[test]
fn criterion_8_corrector_certification() {
    let mut systems = vec![(common::g12(), Some(18))];
    let mut r = common::rng(8);
    for _ in 0..3 {
        systems.push((common::random_stable(&mut r, 3, 1, 2, 2), None));
    }
    let mut points = 0;
    let mut worst_sv = 0.0f64;
    let mut worst_slope = 0.0f64;
    let h = 1e-4;
    for (sys, n) in &systems {
        let res = norm_with_n(sys, *n);
        for c in res.candidates.iter().filter(|c| c.iterations > 0) {
            let sv = linalg::singular_values(&eval_transfer(sys, c.omega).unwrap());
            let gap = sv.iter().map(|s| (s - c.xi).abs() / c.xi).fold(f64::INFINITY, f64::min);
            worst_sv = worst_sv.max(gap);
            let slope = (sigma1(sys, c.omega + h) - sigma1(sys, c.omega - h)) / (2.0 * h);
            worst_slope = worst_slope.max(slope.abs() / h);
            points += 1;
        }
    }

    let scaled = ScaledSystem::from_system(&common::g12());
    let pred = predict_gmax(&scaled, &PredictorOptions::new(18)).unwrap();
    let blocks = build_h_blocks(&scaled, pred.xi_l * (1.0 + 2e-6)).unwrap();
    let w = pred.crossings[0];
    let pt = CorrectionPoint::start(w, blocks.xi, &eval_h(&blocks, C64::new(0.0, w), &scaled));
    let ja = jacobian(&pt, &scaled).unwrap();
    let jf = jacobian_fd(&pt, &scaled, 1e-7).unwrap();
    let worst_j = ja
        .iter()
        .zip(jf.iter())
        .map(|(a, f)| (a - f).abs() / a.abs().max(f.abs()).max(1.0))
        .fold(0.0, f64::max);

    report(
        8,
        points > 0 && worst_sv <= 1e-9 && worst_slope <= 1e-2 && worst_j <= 1e-5,
        format!(
            "{points} corrected points: worst singular value gap {worst_sv:.2e}, worst central slope/h {worst_slope:.2e}; Jacobian vs finite differences {worst_j:.2e}"
        ),
    );
}
