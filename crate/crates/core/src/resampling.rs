//! m-out-of-n bootstrap for ξₙ.
//!
//! Each replicate draws `m < n` pairs without replacement, recomputes ξ on
//! them and records `√m · ξ*`. The conditional mean `E[ξ* | data]` is
//! estimated by the mean over the same replicates, and the stored atoms are
//! centred by it. Replicate `b` owns the stream `child_seed(seed, b)`, so the
//! atoms do not depend on the number of worker threads.

use rand::seq::index;
use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::normal;
use crate::seed::{child_seed, rng_from_seed};
use crate::stats::{order_key, shuffle_tie_blocks, sorted_by_x, PairedSample, RankSums};

pub const DEFAULT_REPLICATES: usize = 2000;
pub const DEFAULT_MAX_DEGENERATE_RETRIES: usize = 1000;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct BootstrapConfig {
    /// Subsample size, `2 <= m < n`.
    pub m: usize,
    /// Number of bootstrap replicates B.
    pub replicates: usize,
    pub seed: u64,
    /// Redraws allowed per replicate when a subsample has constant y.
    pub max_degenerate_retries: usize,
}

impl BootstrapConfig {
    pub fn new(m: usize, replicates: usize, seed: u64) -> Self {
        Self {
            m,
            replicates,
            seed,
            max_degenerate_retries: DEFAULT_MAX_DEGENERATE_RETRIES,
        }
    }

    pub fn validate(&self, n: usize) -> Result<()> {
        if self.m < 2 || self.m >= n {
            return Err(invalid(format!(
                "subsample size m={} must satisfy 2 <= m < n={n}",
                self.m
            )));
        }
        if self.replicates < 2 {
            return Err(invalid(format!(
                "need at least 2 bootstrap replicates, got {}",
                self.replicates
            )));
        }
        Ok(())
    }
}

/// Conditional distribution of `T* = √m (ξ*ₘ - E[ξ*ₘ | data])`, one atom per
/// replicate.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BootstrapDistribution {
    atoms: Vec<f64>,
    m: usize,
    center: f64,
}

impl BootstrapDistribution {
    /// Builds the distribution from raw replicate values ξ*ₘ(b).
    pub fn from_replicates(m: usize, xi_star: &[f64]) -> Result<Self> {
        if xi_star.is_empty() {
            return Err(invalid("no bootstrap replicates"));
        }
        let center = xi_star.iter().sum::<f64>() / xi_star.len() as f64;
        let scale = (m as f64).sqrt();
        let atoms = xi_star.iter().map(|&v| scale * (v - center)).collect();
        Ok(Self { atoms, m, center })
    }

    /// Centred atoms `√m (ξ*ₘ(b) - center)`, in replicate order.
    pub fn atoms(&self) -> &[f64] {
        &self.atoms
    }

    pub fn m(&self) -> usize {
        self.m
    }

    /// Monte Carlo estimate of `E[ξ*ₘ | data]`.
    pub fn center(&self) -> f64 {
        self.center
    }

    pub fn replicates(&self) -> usize {
        self.atoms.len()
    }
}

/// Point estimate with its bootstrap variance and normal-theory interval.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BootstrapEstimate {
    pub xi_n: f64,
    pub sigma_star_sq: f64,
    pub ci_low: f64,
    pub ci_high: f64,
    pub level: f64,
    pub z: f64,
}

/// Uniform `m`-subset of `0..n` (in draw order). Allows `1 <= m <= n`.
pub fn subsample_indices<R: Rng + ?Sized>(n: usize, m: usize, rng: &mut R) -> Vec<usize> {
    index::sample(rng, n, m).into_vec()
}

/// Uniform `m`-subset of `0..n`, sorted ascending.
///
/// While `m^2 <= 2n`, draws `m` positions with replacement and starts over on
/// any repeat: conditioned on distinctness every subset is equally likely, and
/// fewer than e retries are expected. Larger `m` go through
/// [`subsample_indices`].
pub(crate) fn sorted_positions<R: Rng + ?Sized>(n: usize, m: usize, rng: &mut R) -> Vec<usize> {
    let mut pos = Vec::with_capacity(m);
    if m.saturating_mul(m) <= 2 * n {
        loop {
            pos.clear();
            pos.extend((0..m).map(|_| rng.random_range(0..n)));
            pos.sort_unstable();
            if pos.windows(2).all(|w| w[0] != w[1]) {
                return pos;
            }
        }
    }
    pos = subsample_indices(n, m, rng);
    pos.sort_unstable();
    pos
}

/// Draws `m` pairs uniformly without replacement.
pub fn draw_subsample<R: Rng + ?Sized>(
    sample: &PairedSample,
    m: usize,
    rng: &mut R,
) -> Result<PairedSample> {
    let n = sample.len();
    if m < 2 || m >= n {
        return Err(invalid(format!("subsample size m={m} must satisfy 2 <= m < n={n}")));
    }
    let (xs, ys) = (sample.xs(), sample.ys());
    let pairs = subsample_indices(n, m, rng).into_iter().map(|i| (xs[i], ys[i]));
    PairedSample::from_pairs(pairs)
}

/// True iff all y values are equal.
pub fn is_degenerate(sample: &PairedSample) -> bool {
    sample.is_degenerate()
}

/// A sample prepared for repeated subsampling: pairs are stored in x order
/// and y is replaced by order-preserving integer keys, so each replicate only
/// sorts `m` positions.
#[derive(Debug, Clone)]
pub struct Resampler {
    xs: Vec<f64>,
    keys: Vec<u64>,
    x_ties: bool,
}

impl Resampler {
    pub fn new(sample: &PairedSample) -> Result<Self> {
        if sample.is_degenerate() {
            return Err(Error::DegenerateSample);
        }
        // Replicates reshuffle tied x, so any fixed order works here.
        let order = sorted_by_x(sample.xs());
        let xs: Vec<f64> = order.iter().map(|&i| sample.xs()[i]).collect();
        let keys = order.iter().map(|&i| order_key(sample.ys()[i])).collect();
        let x_ties = xs.windows(2).any(|w| w[0] == w[1]);
        Ok(Self { xs, keys, x_ties })
    }

    pub fn len(&self) -> usize {
        self.xs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.xs.is_empty()
    }

    /// One value of ξ*ₘ from the stream `seed`.
    pub fn replicate(&self, m: usize, seed: u64, max_retries: usize) -> Result<f64> {
        let mut rng = rng_from_seed(seed);
        let attempts = max_retries + 1;
        for _ in 0..attempts {
            let mut pos = sorted_positions(self.len(), m, &mut rng);
            let first = self.keys[pos[0]];
            if pos.iter().all(|&p| self.keys[p] == first) {
                continue;
            }
            if self.x_ties {
                shuffle_tie_blocks(&mut pos, |p| self.xs[p], &mut rng);
            }
            let ordered: Vec<u64> = pos.iter().map(|&p| self.keys[p]).collect();
            return RankSums::from_keys(&ordered).xi();
        }
        Err(Error::DegeneracyExhausted { m, attempts })
    }

    /// All B replicates, evaluated in parallel and returned in replicate order.
    pub fn distribution(&self, cfg: &BootstrapConfig) -> Result<BootstrapDistribution> {
        cfg.validate(self.len())?;
        let xi_star = (0..cfg.replicates as u64)
            .into_par_iter()
            .map(|b| self.replicate(cfg.m, child_seed(cfg.seed, b), cfg.max_degenerate_retries))
            .collect::<Result<Vec<f64>>>()?;
        BootstrapDistribution::from_replicates(cfg.m, &xi_star)
    }
}

pub fn bootstrap_distribution(
    sample: &PairedSample,
    cfg: &BootstrapConfig,
) -> Result<BootstrapDistribution> {
    Resampler::new(sample)?.distribution(cfg)
}

/// Sample variance with the `len - 1` denominator.
pub fn sample_variance(values: &[f64]) -> Result<f64> {
    if values.len() < 2 {
        return Err(invalid(format!(
            "variance needs at least 2 values, got {}",
            values.len()
        )));
    }
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    let ss: f64 = values.iter().map(|v| (v - mean) * (v - mean)).sum();
    Ok(ss / (n - 1.0))
}

/// σ*²ₘ,ₙ: the sample variance of the atoms.
pub fn bootstrap_variance(dist: &BootstrapDistribution) -> Result<f64> {
    sample_variance(dist.atoms())
}

/// Interval `ξₙ ∓ z σ* / √n` with `z = Φ⁻¹((1 + level) / 2)`.
pub fn confidence_interval(
    xi_n: f64,
    sigma_star: f64,
    n: usize,
    level: f64,
) -> Result<BootstrapEstimate> {
    if !(level > 0.0 && level < 1.0) {
        return Err(invalid(format!("confidence level must lie in (0,1), got {level}")));
    }
    if n == 0 {
        return Err(invalid("sample size must be positive"));
    }
    if !(sigma_star.is_finite() && sigma_star >= 0.0) {
        return Err(invalid(format!("sigma_star must be finite and >= 0, got {sigma_star}")));
    }
    let z = normal::quantile(0.5 * (1.0 + level))?;
    let half = z * sigma_star / (n as f64).sqrt();
    Ok(BootstrapEstimate {
        xi_n,
        sigma_star_sq: sigma_star * sigma_star,
        ci_low: xi_n - half,
        ci_high: xi_n + half,
        level,
        z,
    })
}
