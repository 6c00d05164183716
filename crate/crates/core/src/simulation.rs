//! Data-generating models, ground-truth calibration, and the Monte Carlo
//! study runner.

use rand::Rng;
use rand_distr::{ChiSquared, Distribution, Poisson, StandardNormal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::resampling::sample_variance;
use crate::selection::{estimate, MSelectionRule};
use crate::seed::{child_seed, rng_from_seed};
use crate::stats::{xi, PairedSample};

/// Redraws allowed when a generated sample has constant y.
const MAX_SAMPLE_REDRAWS: usize = 1000;

pub const DEFAULT_POISSON_LAMBDA: f64 = 2.0;
pub const DEFAULT_CALIBRATION_N: usize = 20_000;
pub const DEFAULT_CALIBRATION_M: usize = 5_000;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "model", rename_all = "snake_case")]
pub enum ModelSpec {
    /// Standard bivariate normal with correlation `rho`.
    Gaussian { rho: f64 },
    /// Bivariate t(ν) with scale matrix `[[1, rho], [rho, 1]]`.
    StudentT { nu: f64, rho: f64 },
    /// `X ~ Poisson(λ)`, `Y = τX + (1-τ)Z` with `Z` an independent copy of
    /// `X` and τ chosen so that `Corr(X, Y) = rho`.
    PoissonMixture { lambda: f64, rho: f64 },
}

impl ModelSpec {
    pub fn validate(&self) -> Result<()> {
        let open = |r: f64| r > -1.0 && r < 1.0;
        match *self {
            Self::Gaussian { rho } if !open(rho) => {
                Err(invalid(format!("rho must lie in (-1,1), got {rho}")))
            }
            Self::StudentT { nu, rho } => {
                if !(nu.is_finite() && nu > 0.0) {
                    return Err(invalid(format!("nu must be positive, got {nu}")));
                }
                if !open(rho) {
                    return Err(invalid(format!("rho must lie in (-1,1), got {rho}")));
                }
                Ok(())
            }
            Self::PoissonMixture { lambda, rho } => {
                if !(lambda.is_finite() && lambda > 0.0) {
                    return Err(invalid(format!("lambda must be positive, got {lambda}")));
                }
                tau_from_rho(rho).map(|_| ())
            }
            _ => Ok(()),
        }
    }
}

/// Mixing weight τ of the Poisson model giving correlation `rho`, i.e. the
/// solution in [0, 1) of `rho = τ / √(τ² + (1-τ)²)`.
pub fn tau_from_rho(rho: f64) -> Result<f64> {
    if !(0.0..1.0).contains(&rho) {
        return Err(invalid(format!("Poisson model needs rho in [0,1), got {rho}")));
    }
    if rho == 0.0 {
        return Ok(0.0);
    }
    let odds = rho / (1.0 - rho * rho).sqrt();
    Ok(odds / (1.0 + odds))
}

/// Draws `n` iid pairs from `model`.
pub fn generate_sample<R: Rng + ?Sized>(model: &ModelSpec, n: usize, rng: &mut R) -> Result<PairedSample> {
    model.validate()?;
    if n < 2 {
        return Err(invalid(format!("need n >= 2, got {n}")));
    }
    let mut xs = Vec::with_capacity(n);
    let mut ys = Vec::with_capacity(n);
    match *model {
        ModelSpec::Gaussian { rho } => {
            let c = (1.0 - rho * rho).sqrt();
            for _ in 0..n {
                let a: f64 = rng.sample(StandardNormal);
                let b: f64 = rng.sample(StandardNormal);
                xs.push(a);
                ys.push(rho * a + c * b);
            }
        }
        ModelSpec::StudentT { nu, rho } => {
            let c = (1.0 - rho * rho).sqrt();
            let chi = ChiSquared::new(nu).map_err(|e| invalid(e.to_string()))?;
            for _ in 0..n {
                let a: f64 = rng.sample(StandardNormal);
                let b: f64 = rng.sample(StandardNormal);
                let scale = (chi.sample(rng) / nu).sqrt();
                xs.push(a / scale);
                ys.push((rho * a + c * b) / scale);
            }
        }
        ModelSpec::PoissonMixture { lambda, rho } => {
            let tau = tau_from_rho(rho)?;
            let pois = Poisson::new(lambda).map_err(|e| invalid(e.to_string()))?;
            for _ in 0..n {
                let x: f64 = pois.sample(rng);
                let z: f64 = pois.sample(rng);
                xs.push(x);
                ys.push(tau * x + (1.0 - tau) * z);
            }
        }
    }
    PairedSample::new(xs, ys)
}

/// Like [`generate_sample`] but redraws constant-y samples.
pub fn generate_valid_sample<R: Rng + ?Sized>(
    model: &ModelSpec,
    n: usize,
    rng: &mut R,
) -> Result<PairedSample> {
    for _ in 0..=MAX_SAMPLE_REDRAWS {
        let s = generate_sample(model, n, rng)?;
        if !s.is_degenerate() {
            return Ok(s);
        }
    }
    Err(Error::DegeneracyExhausted {
        m: n,
        attempts: MAX_SAMPLE_REDRAWS + 1,
    })
}

/// Simulated ground truth for a model: ξ and the limiting variance σ².
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CalibrationResult {
    #[serde(flatten)]
    pub model: ModelSpec,
    pub xi_hat: f64,
    pub sigma_sq_hat: f64,
    pub n_cal: usize,
    pub m_cal: usize,
    pub xi_se: f64,
    pub sigma_sq_se: f64,
    pub seed: u64,
}

/// Estimates ξ and σ² from `m_cal` independent copies of ξₙ at `n = n_cal`:
/// ξ̂ is their mean, σ̂² is `n_cal` times their sample variance. Copy `k`
/// uses the stream `child_seed(seed, k)`.
pub fn calibrate_truth(model: &ModelSpec, n_cal: usize, m_cal: usize, seed: u64) -> Result<CalibrationResult> {
    model.validate()?;
    if n_cal < 2 || m_cal < 2 {
        return Err(invalid(format!(
            "calibration needs n_cal >= 2 and M_cal >= 2, got {n_cal} and {m_cal}"
        )));
    }
    let copies = (0..m_cal as u64)
        .into_par_iter()
        .map(|k| {
            let mut rng = rng_from_seed(child_seed(seed, k));
            let s = generate_valid_sample(model, n_cal, &mut rng)?;
            xi(&s, &mut rng)
        })
        .collect::<Result<Vec<f64>>>()?;
    let mean = copies.iter().sum::<f64>() / m_cal as f64;
    let var = sample_variance(&copies)?;
    let sigma_sq_hat = n_cal as f64 * var;
    Ok(CalibrationResult {
        model: *model,
        xi_hat: mean,
        sigma_sq_hat,
        n_cal,
        m_cal,
        xi_se: (var / m_cal as f64).sqrt(),
        sigma_sq_se: (2.0 / (m_cal as f64 - 1.0)).sqrt() * sigma_sq_hat,
        seed,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StudyConfig {
    pub model: ModelSpec,
    pub n: usize,
    /// Number of simulation runs M.
    pub runs: usize,
    /// Bootstrap replicates B per candidate m.
    pub replicates: usize,
    pub rule: MSelectionRule,
    pub level: f64,
    pub seed: u64,
}

impl StudyConfig {
    pub fn validate(&self) -> Result<()> {
        self.model.validate()?;
        self.rule.validate()?;
        if self.runs < 1 {
            return Err(invalid("a study needs at least one run"));
        }
        if !(self.level > 0.0 && self.level < 1.0) {
            return Err(invalid(format!("level must lie in (0,1), got {}", self.level)));
        }
        if self.n < 4 {
            return Err(invalid(format!("study sample size must be >= 4, got {}", self.n)));
        }
        Ok(())
    }
}

/// One simulation run.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RunRecord {
    pub run: usize,
    pub xi_n: f64,
    pub chosen_m: usize,
    pub sigma_star_sq: f64,
    pub ci_low: f64,
    pub ci_high: f64,
    pub covered: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunFailure {
    pub run: usize,
    pub error: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StudyReport {
    pub rmse: f64,
    pub rrmse: f64,
    pub coverage: f64,
    /// Binomial standard error of `coverage`.
    pub coverage_se: f64,
    pub mean_ci_length: f64,
    pub mean_sigma_star_sq: f64,
    /// Reference values the runs were scored against.
    pub truth_xi: f64,
    pub truth_sigma_sq: f64,
    pub records: Vec<RunRecord>,
    pub failures: Vec<RunFailure>,
}

impl StudyReport {
    /// Aggregates per-run records against the calibrated truth.
    pub fn from_records(
        records: Vec<RunRecord>,
        failures: Vec<RunFailure>,
        truth: &CalibrationResult,
    ) -> Result<Self> {
        if records.is_empty() {
            return Err(invalid("every study run failed"));
        }
        if truth.sigma_sq_hat.is_nan() || truth.sigma_sq_hat <= 0.0 {
            return Err(invalid("calibrated sigma^2 must be positive"));
        }
        let k = records.len() as f64;
        let mse = records
            .iter()
            .map(|r| (r.sigma_star_sq - truth.sigma_sq_hat).powi(2))
            .sum::<f64>()
            / k;
        let rmse = mse.sqrt();
        let coverage = records.iter().filter(|r| r.covered).count() as f64 / k;
        Ok(Self {
            rmse,
            rrmse: rmse / truth.sigma_sq_hat,
            coverage,
            coverage_se: (coverage * (1.0 - coverage) / k).sqrt(),
            mean_ci_length: records.iter().map(|r| r.ci_high - r.ci_low).sum::<f64>() / k,
            mean_sigma_star_sq: records.iter().map(|r| r.sigma_star_sq).sum::<f64>() / k,
            truth_xi: truth.xi_hat,
            truth_sigma_sq: truth.sigma_sq_hat,
            records,
            failures,
        })
    }
}

/// What a study needs from one run's variance estimator.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RunEstimate {
    pub xi_n: f64,
    pub sigma_star_sq: f64,
    pub ci_low: f64,
    pub ci_high: f64,
    pub chosen_m: usize,
}

/// Runs the study with the m-out-of-n bootstrap and `cfg.rule`.
pub fn run_study(cfg: &StudyConfig, truth: &CalibrationResult) -> Result<StudyReport> {
    let (rule, replicates, level) = (cfg.rule.clone(), cfg.replicates, cfg.level);
    run_study_with(cfg, truth, move |sample, seed| {
        let e = estimate(sample, &rule, replicates, level, seed)?;
        Ok(RunEstimate {
            xi_n: e.estimate.xi_n,
            sigma_star_sq: e.estimate.sigma_star_sq,
            ci_low: e.estimate.ci_low,
            ci_high: e.estimate.ci_high,
            chosen_m: e.trace.chosen_m,
        })
    })
}

/// Study loop with a pluggable per-run estimator. Run `r` draws its sample
/// from `child_seed(child_seed(seed, r), 0)` and hands the estimator
/// `child_seed(child_seed(seed, r), 1)`.
pub fn run_study_with<F>(cfg: &StudyConfig, truth: &CalibrationResult, estimator: F) -> Result<StudyReport>
where
    F: Fn(&PairedSample, u64) -> Result<RunEstimate> + Sync,
{
    cfg.validate()?;
    if truth.model != cfg.model {
        return Err(Error::ConfigMismatch(format!(
            "calibration is for {:?} but the study uses {:?}",
            truth.model, cfg.model
        )));
    }
    let outcomes: Vec<Result<RunRecord>> = (0..cfg.runs)
        .into_par_iter()
        .map(|run| {
            let run_seed = child_seed(cfg.seed, run as u64);
            let mut rng = rng_from_seed(child_seed(run_seed, 0));
            let sample = generate_valid_sample(&cfg.model, cfg.n, &mut rng)?;
            let e = estimator(&sample, child_seed(run_seed, 1))?;
            Ok(RunRecord {
                run,
                xi_n: e.xi_n,
                chosen_m: e.chosen_m,
                sigma_star_sq: e.sigma_star_sq,
                ci_low: e.ci_low,
                ci_high: e.ci_high,
                covered: e.ci_low <= truth.xi_hat && truth.xi_hat <= e.ci_high,
            })
        })
        .collect();
    let mut records = Vec::with_capacity(cfg.runs);
    let mut failures = Vec::new();
    for (run, outcome) in outcomes.into_iter().enumerate() {
        match outcome {
            Ok(r) => records.push(r),
            Err(e) => failures.push(RunFailure {
                run,
                error: e.to_string(),
            }),
        }
    }
    StudyReport::from_records(records, failures, truth)
}
