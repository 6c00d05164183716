//! Chatterjee's rank correlation with m-out-of-n bootstrap inference.
//!
//! The crate computes ξₙ (with or without ties), approximates the sampling
//! law of `√m (ξ*ₘ - E[ξ*ₘ | data])` by subsampling without replacement,
//! picks `m` adaptively, and turns the resulting variance estimate into a
//! normal-theory confidence interval. [`simulation`] holds the models and
//! Monte Carlo machinery used to check coverage and accuracy.
//!
//! ```
//! use xiboot_core::{estimate, MSelectionRule, PairedSample};
//!
//! let xs: Vec<f64> = (0..200).map(|i| i as f64).collect();
//! let ys: Vec<f64> = xs.iter().map(|x| (x / 10.0).sin()).collect();
//! let sample = PairedSample::new(xs, ys).unwrap();
//! let e = estimate(&sample, &MSelectionRule::cluster(), 200, 0.95, 7).unwrap();
//! assert!(e.estimate.ci_low <= e.estimate.xi_n && e.estimate.xi_n <= e.estimate.ci_high);
//! ```

pub mod error;
pub mod metrics;
pub mod normal;
pub mod resampling;
pub mod seed;
pub mod selection;
pub mod simulation;
pub mod stats;

pub use error::{Error, Result};
pub use metrics::{kolmogorov_distance, kolmogorov_to_normal, wasserstein_p, EmpiricalDistribution};
pub use resampling::{
    bootstrap_distribution, bootstrap_variance, confidence_interval, draw_subsample,
    is_degenerate, BootstrapConfig, BootstrapDistribution, BootstrapEstimate, Resampler,
};
pub use selection::{
    candidate_ms, estimate, select_bickel_sakov, select_cluster, select_m, Estimate,
    MSelectionRule, SelectionTrace,
};
pub use simulation::{
    calibrate_truth, generate_sample, run_study, run_study_with, tau_from_rho, CalibrationResult,
    ModelSpec, RunEstimate, RunRecord, StudyConfig, StudyReport,
};
pub use stats::{compute_ranks, xi, xi_no_ties, xi_with_ties, PairedSample, RankProfile};
