//! Choice of the subsample size m.
//!
//! * `FixedPower`: `m = ⌊n^γ⌋`.
//! * `BickelSakov`: candidates `m_j = ⌈q^j n⌉`; pick the smallest `j`
//!   minimising the Kolmogorov distance between the bootstrap laws at
//!   `m_j` and `m_{j+1}`.
//! * `Cluster`: candidates `⌊n^γ⌋` over a grid of exponents; pick the
//!   candidate whose law has the smallest total Kolmogorov distance to all
//!   other candidate laws.
//!
//! Candidate `j` is bootstrapped on the stream `child_seed(seed, j)`.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};
use crate::metrics::{kolmogorov_distance, EmpiricalDistribution};
use crate::resampling::{
    bootstrap_variance, confidence_interval, BootstrapConfig, BootstrapDistribution,
    BootstrapEstimate, Resampler, DEFAULT_MAX_DEGENERATE_RETRIES,
};
use crate::seed::{child_seed, rng_from_seed};
use crate::stats::{xi, PairedSample};

/// Default cluster grid: γ = 0.40, 0.45, …, 0.90.
pub fn default_cluster_gammas() -> Vec<f64> {
    (0..=10).map(|k| 0.40 + 0.05 * k as f64).collect()
}

pub const DEFAULT_BICKEL_SAKOV_Q: f64 = 0.5;
pub const DEFAULT_M_FLOOR: usize = 3;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "rule", rename_all = "kebab-case")]
pub enum MSelectionRule {
    FixedPower { gamma: f64 },
    BickelSakov { q: f64, m_floor: usize },
    Cluster { gammas: Vec<f64> },
}

impl MSelectionRule {
    pub fn cluster() -> Self {
        Self::Cluster {
            gammas: default_cluster_gammas(),
        }
    }

    pub fn bickel_sakov() -> Self {
        Self::BickelSakov {
            q: DEFAULT_BICKEL_SAKOV_Q,
            m_floor: DEFAULT_M_FLOOR,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let unit = |v: f64| v > 0.0 && v < 1.0;
        match self {
            Self::FixedPower { gamma } if !unit(*gamma) => {
                Err(invalid(format!("gamma must lie in (0,1), got {gamma}")))
            }
            Self::BickelSakov { q, .. } if !unit(*q) => {
                Err(invalid(format!("q must lie in (0,1), got {q}")))
            }
            Self::Cluster { gammas } => {
                if gammas.is_empty() {
                    return Err(invalid("cluster rule needs at least one gamma"));
                }
                if let Some(g) = gammas.iter().find(|&&g| !unit(g)) {
                    return Err(invalid(format!("gamma must lie in (0,1), got {g}")));
                }
                if gammas.windows(2).any(|w| w[0] >= w[1]) {
                    return Err(invalid("cluster gammas must be strictly increasing"));
                }
                Ok(())
            }
            _ => Ok(()),
        }
    }
}

/// `⌊n^γ⌋`, robust to `powf` landing a hair below an exact integer.
fn floor_power(n: usize, gamma: f64) -> usize {
    let v = (n as f64).powf(gamma);
    (v * (1.0 + 1e-12)).floor() as usize
}

fn clamp_m(m: usize, n: usize) -> usize {
    m.clamp(2, n - 1)
}

/// Candidate subsample sizes for `rule` at sample size `n`, in the order the
/// rule examines them.
pub fn candidate_ms(rule: &MSelectionRule, n: usize) -> Result<Vec<usize>> {
    rule.validate()?;
    if n < 4 {
        return Err(invalid(format!("m selection needs n >= 4, got {n}")));
    }
    let ms = match rule {
        MSelectionRule::FixedPower { gamma } => vec![clamp_m(floor_power(n, *gamma), n)],
        MSelectionRule::Cluster { gammas } => {
            let mut ms: Vec<usize> = gammas
                .iter()
                .map(|&g| clamp_m(floor_power(n, g), n))
                .collect();
            ms.sort_unstable();
            ms.dedup();
            ms
        }
        MSelectionRule::BickelSakov { q, m_floor } => {
            let mut ms = Vec::new();
            let mut scale = 1.0;
            loop {
                let raw = (scale * n as f64 - 1e-9).ceil().max(0.0) as usize;
                if raw <= *m_floor || raw < 2 {
                    break;
                }
                let m = raw.min(n - 1);
                if ms.last() != Some(&m) {
                    ms.push(m);
                }
                scale *= q;
            }
            ms
        }
    };
    if ms.is_empty() {
        return Err(invalid(format!("rule {rule:?} yields no candidate m for n={n}")));
    }
    Ok(ms)
}

/// Audit trail of an m selection.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SelectionTrace {
    pub candidates: Vec<BootstrapDistribution>,
    /// Kolmogorov distances; `None` where the rule did not evaluate a pair.
    pub pairwise_distances: Vec<Vec<Option<f64>>>,
    pub chosen_index: usize,
    pub chosen_m: usize,
    /// Set when y has ties and some candidate reaches `⌊√n⌋`, beyond the
    /// growth rate the bootstrap is known to be consistent for with discrete
    /// data.
    pub discrete_rate_warning: bool,
}

impl SelectionTrace {
    pub fn chosen(&self) -> &BootstrapDistribution {
        &self.candidates[self.chosen_index]
    }

    pub fn candidate_ms(&self) -> Vec<usize> {
        self.candidates.iter().map(BootstrapDistribution::m).collect()
    }
}

/// Smallest index attaining the minimum of `distances`.
pub fn smallest_minimizer(distances: &[f64]) -> usize {
    let mut best = 0;
    for (j, &d) in distances.iter().enumerate() {
        if d < distances[best] {
            best = j;
        }
    }
    best
}

/// Smallest row index attaining the minimum row sum.
pub fn min_row_sum_index(matrix: &[Vec<f64>]) -> usize {
    let sums: Vec<f64> = matrix.iter().map(|row| row.iter().sum()).collect();
    smallest_minimizer(&sums)
}

fn build_candidates(
    resampler: &Resampler,
    ms: &[usize],
    replicates: usize,
    seed: u64,
) -> Result<Vec<BootstrapDistribution>> {
    ms.par_iter()
        .enumerate()
        .map(|(j, &m)| {
            let cfg = BootstrapConfig {
                m,
                replicates,
                seed: child_seed(seed, j as u64),
                max_degenerate_retries: DEFAULT_MAX_DEGENERATE_RETRIES,
            };
            resampler.distribution(&cfg)
        })
        .collect()
}

fn empirical(candidates: &[BootstrapDistribution]) -> Result<Vec<EmpiricalDistribution>> {
    candidates.iter().map(EmpiricalDistribution::try_from).collect()
}

fn rate_warning(sample: &PairedSample, ms: &[usize]) -> bool {
    let root = floor_power(sample.len(), 0.5);
    sample.y_tie_count() > 0 && ms.iter().any(|&m| m >= root)
}

pub fn select_bickel_sakov(
    sample: &PairedSample,
    rule: &MSelectionRule,
    replicates: usize,
    seed: u64,
) -> Result<SelectionTrace> {
    if !matches!(rule, MSelectionRule::BickelSakov { .. }) {
        return Err(invalid("select_bickel_sakov needs a BickelSakov rule"));
    }
    let ms = candidate_ms(rule, sample.len())?;
    if ms.len() < 2 {
        return Err(invalid("Bickel-Sakov rule needs at least two candidates"));
    }
    let resampler = Resampler::new(sample)?;
    let candidates = build_candidates(&resampler, &ms, replicates, seed)?;
    let laws = empirical(&candidates)?;
    let consecutive: Vec<f64> = laws
        .windows(2)
        .map(|w| kolmogorov_distance(&w[0], &w[1]))
        .collect();
    let k = ms.len();
    let mut matrix = vec![vec![None; k]; k];
    for (j, &d) in consecutive.iter().enumerate() {
        matrix[j][j + 1] = Some(d);
        matrix[j + 1][j] = Some(d);
    }
    let chosen_index = smallest_minimizer(&consecutive);
    Ok(SelectionTrace {
        chosen_m: ms[chosen_index],
        discrete_rate_warning: rate_warning(sample, &ms),
        candidates,
        pairwise_distances: matrix,
        chosen_index,
    })
}

pub fn select_cluster(
    sample: &PairedSample,
    rule: &MSelectionRule,
    replicates: usize,
    seed: u64,
) -> Result<SelectionTrace> {
    let ms = candidate_ms(rule, sample.len())?;
    let resampler = Resampler::new(sample)?;
    let candidates = build_candidates(&resampler, &ms, replicates, seed)?;
    let laws = empirical(&candidates)?;
    let k = laws.len();
    let mut matrix = vec![vec![0.0; k]; k];
    for j in 0..k {
        for l in j + 1..k {
            let d = kolmogorov_distance(&laws[j], &laws[l]);
            matrix[j][l] = d;
            matrix[l][j] = d;
        }
    }
    let chosen_index = min_row_sum_index(&matrix);
    Ok(SelectionTrace {
        chosen_m: ms[chosen_index],
        discrete_rate_warning: rate_warning(sample, &ms),
        candidates,
        pairwise_distances: matrix
            .into_iter()
            .map(|row| row.into_iter().map(Some).collect())
            .collect(),
        chosen_index,
    })
}

/// Runs whichever selection `rule` describes. A fixed power is treated as a
/// single-candidate cluster.
pub fn select_m(
    sample: &PairedSample,
    rule: &MSelectionRule,
    replicates: usize,
    seed: u64,
) -> Result<SelectionTrace> {
    match rule {
        MSelectionRule::BickelSakov { .. } => select_bickel_sakov(sample, rule, replicates, seed),
        _ => select_cluster(sample, rule, replicates, seed),
    }
}

/// The complete estimate for one sample: ξₙ, the selected bootstrap law,
/// σ*² and the confidence interval.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Estimate {
    pub estimate: BootstrapEstimate,
    pub trace: SelectionTrace,
}

/// ξₙ uses stream `child_seed(seed, 0)`; selection uses `child_seed(seed, 1)`.
pub fn estimate(
    sample: &PairedSample,
    rule: &MSelectionRule,
    replicates: usize,
    level: f64,
    seed: u64,
) -> Result<Estimate> {
    let xi_n = xi(sample, &mut rng_from_seed(child_seed(seed, 0)))?;
    let trace = select_m(sample, rule, replicates, child_seed(seed, 1))?;
    let sigma_sq = bootstrap_variance(trace.chosen())?;
    let estimate = confidence_interval(xi_n, sigma_sq.sqrt(), sample.len(), level)?;
    Ok(Estimate { estimate, trace })
}
