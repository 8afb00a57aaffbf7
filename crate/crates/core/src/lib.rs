//! H-infinity norm computation for retarded time-delay systems.
//!
//! The transfer function
//!
//! ```text
//! G(jw) = C (jw I - A0 - sum_i Ai exp(-jw tau_i))^{-1} B + D exp(-jw tau_0)
//! ```
//!
//! is handled in two stages. A Chebyshev collocation of a derivative operator
//! with a nonlocal boundary condition turns the level-set test "does some
//! singular value of `G(jw)` equal `xi`" into a finite eigenvalue problem,
//! which a criss-cross search in the `(w, xi)` plane uses to predict the norm.
//! A Gauss-Newton solve on the nonlinear eigenvalue formulation then corrects
//! each predicted peak to full accuracy.
//!
//! The crate is `no_std` (it needs `alloc`). File formats, caching and the
//! command-line front end live in the `delay-hinf` companion crate.

#![no_std]

extern crate alloc;

#[cfg(test)]
extern crate std;

pub mod corrector;
pub mod error;
pub mod levelset;
pub mod linalg;
pub mod oracles;
pub mod spectral;
pub mod system;

pub use corrector::{
    compute_hinf, gauss_newton, init_nullvector, residual, CandidatePoint, CorrectionPoint,
    HinfOptions, HinfResult, Warning,
};
pub use error::{Error, Result};
pub use levelset::{
    build_h_blocks, eval_h, eval_hn, eval_mn, imaginary_eigs, predict_gmax, HBlocks, LevelRecord,
    MNMatrix, Prediction, PredictorOptions,
};
pub use linalg::C64;
pub use oracles::{hamiltonian_oracle, sweep_oracle, SweepResult};
pub use spectral::{
    assemble_l, cheb_grid, choose_n, cutoff_frequency, diff_data, ChebGrid, DiffData,
    DiscretizedOperator, PnSolver, DEFAULT_DELTA, DEFAULT_N,
};
pub use system::{check_stability, eval_transfer, rescale, DelaySystem, ScaledSystem, StabilityEstimate};
