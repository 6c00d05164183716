//! Chatterjee's rank correlation ξₙ and the rank bookkeeping behind it.
//!
//! Pairs are sorted by x (ties among equal x broken uniformly at random) and
//! the y values are ranked in that order. With `rank[i] = #{j : y(j) <= y(i)}`
//! and `at_or_above[i] = #{j : y(j) >= y(i)}`:
//!
//! * distinct y: `ξₙ = 1 - 3 Σ|rank[i+1] - rank[i]| / (n² - 1)`
//! * tied y:     `ξₙ = 1 - n Σ|rank[i+1] - rank[i]| / (2 Σ at_or_above[i] (n - at_or_above[i]))`
//!
//! Both sums are integers and are accumulated exactly in `u128`.

use rand::seq::SliceRandom;
use rand::Rng;
use serde::Serialize;

use crate::error::{invalid, Error, Result};

/// Observed `(x, y)` pairs.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PairedSample {
    xs: Vec<f64>,
    ys: Vec<f64>,
}

impl PairedSample {
    pub fn new(xs: Vec<f64>, ys: Vec<f64>) -> Result<Self> {
        if xs.len() != ys.len() {
            return Err(invalid(format!(
                "x and y lengths differ ({} vs {})",
                xs.len(),
                ys.len()
            )));
        }
        if xs.len() < 2 {
            return Err(invalid(format!("need at least 2 pairs, got {}", xs.len())));
        }
        if let Some(i) = xs
            .iter()
            .zip(&ys)
            .position(|(x, y)| !x.is_finite() || !y.is_finite())
        {
            return Err(invalid(format!("pair {i} is not finite")));
        }
        Ok(Self { xs, ys })
    }

    pub fn from_pairs<I: IntoIterator<Item = (f64, f64)>>(pairs: I) -> Result<Self> {
        let (xs, ys) = pairs.into_iter().unzip();
        Self::new(xs, ys)
    }

    pub fn len(&self) -> usize {
        self.xs.len()
    }

    // A valid sample always holds at least two pairs.
    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn xs(&self) -> &[f64] {
        &self.xs
    }

    pub fn ys(&self) -> &[f64] {
        &self.ys
    }

    pub fn pairs(&self) -> impl ExactSizeIterator<Item = (f64, f64)> + '_ {
        self.xs.iter().copied().zip(self.ys.iter().copied())
    }

    /// True when every y value is the same.
    pub fn is_degenerate(&self) -> bool {
        let first = self.ys[0];
        self.ys.iter().all(|&y| y == first)
    }

    /// Number of x values that repeat an earlier value (`n - #distinct`).
    pub fn x_tie_count(&self) -> usize {
        tie_count(&self.xs)
    }

    /// Number of y values that repeat an earlier value (`n - #distinct`).
    pub fn y_tie_count(&self) -> usize {
        tie_count(&self.ys)
    }
}

fn tie_count(values: &[f64]) -> usize {
    let mut sorted = values.to_vec();
    sorted.sort_unstable_by(f64::total_cmp);
    sorted.windows(2).filter(|w| w[0] == w[1]).count()
}

/// Ranks of the x-sorted sample.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RankProfile {
    /// `rank[i] = #{j : y(j) <= y(i)}` in x-sorted order.
    pub rank: Vec<usize>,
    /// `at_or_above[i] = #{j : y(j) >= y(i)}` in x-sorted order.
    pub at_or_above: Vec<usize>,
    /// Original indices in x-sorted order; records the tie-break drawn for
    /// equal x values.
    pub order: Vec<usize>,
    /// Whether any two y values coincide.
    pub y_ties: bool,
}

impl RankProfile {
    pub fn len(&self) -> usize {
        self.rank.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rank.is_empty()
    }

    /// `Σ |rank[i+1] - rank[i]|`.
    pub fn rank_variation(&self) -> u128 {
        self.rank
            .windows(2)
            .map(|w| w[0].abs_diff(w[1]) as u128)
            .sum()
    }

    /// `Σ at_or_above[i] (n - at_or_above[i])`.
    pub fn tie_normalizer(&self) -> u128 {
        let n = self.len() as u128;
        self.at_or_above
            .iter()
            .map(|&l| l as u128 * (n - l as u128))
            .sum()
    }
}

/// Indices of `xs` in ascending order, with each block of equal values
/// shuffled using `rng`. The generator is untouched when x has no ties.
pub fn order_by_x<R: Rng + ?Sized>(xs: &[f64], rng: &mut R) -> Vec<usize> {
    let mut order = sorted_by_x(xs);
    shuffle_tie_blocks(&mut order, |i| xs[i], rng);
    order
}

/// Indices of `xs` in ascending order; the order within ties is arbitrary
/// but deterministic.
pub(crate) fn sorted_by_x(xs: &[f64]) -> Vec<usize> {
    let mut keyed: Vec<(u64, u32)> = xs.iter().enumerate().map(|(i, &x)| (order_key(x), i as u32)).collect();
    keyed.sort_unstable();
    keyed.into_iter().map(|(_, i)| i as usize).collect()
}

/// Shuffles every maximal run of `order` whose keys compare equal.
pub(crate) fn shuffle_tie_blocks<T, K, R>(order: &mut [T], key: K, rng: &mut R)
where
    K: Fn(T) -> f64,
    T: Copy,
    R: Rng + ?Sized,
{
    let mut start = 0;
    while start < order.len() {
        let value = key(order[start]);
        let mut end = start + 1;
        while end < order.len() && key(order[end]) == value {
            end += 1;
        }
        if end - start > 1 {
            order[start..end].shuffle(rng);
        }
        start = end;
    }
}

/// Order-preserving integer image of a finite float: `a <= b` iff
/// `order_key(a) <= order_key(b)`, and `-0.0` maps with `0.0`.
pub(crate) fn order_key(v: f64) -> u64 {
    let bits = (v + 0.0).to_bits();
    if bits >> 63 == 1 {
        !bits
    } else {
        bits | 1 << 63
    }
}

/// Integer sufficient statistics of ξₙ for y keys listed in x order.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub(crate) struct RankSums {
    pub n: u128,
    pub variation: u128,
    pub normalizer: u128,
    pub ties: bool,
}

impl RankSums {
    pub(crate) fn from_keys<K: Ord + Copy>(keys: &[K]) -> Self {
        let n = keys.len();
        let mut sorted: Vec<(K, u32)> = keys.iter().enumerate().map(|(i, &k)| (k, i as u32)).collect();
        sorted.sort_unstable();
        // Within a block [start, end) of equal keys, r = end and l = n - start.
        let mut rank = vec![0u32; n];
        let mut normalizer = 0u128;
        let mut ties = false;
        let mut start = 0;
        while start < n {
            let mut end = start + 1;
            while end < n && sorted[end].0 == sorted[start].0 {
                end += 1;
            }
            ties |= end - start > 1;
            let above = (n - start) as u128;
            normalizer += (end - start) as u128 * above * (n as u128 - above);
            for &(_, i) in &sorted[start..end] {
                rank[i as usize] = end as u32;
            }
            start = end;
        }
        let variation = rank.windows(2).map(|w| w[0].abs_diff(w[1]) as u128).sum();
        Self {
            n: n as u128,
            variation,
            normalizer,
            ties,
        }
    }

    pub(crate) fn xi(&self) -> Result<f64> {
        if self.ties {
            if self.normalizer == 0 {
                return Err(Error::DegenerateSample);
            }
            Ok(1.0 - (self.n * self.variation) as f64 / (2 * self.normalizer) as f64)
        } else {
            Ok(1.0 - (3 * self.variation) as f64 / (self.n * self.n - 1) as f64)
        }
    }
}

/// Sorts by x (random tie-break) and computes both rank vectors.
pub fn compute_ranks<R: Rng + ?Sized>(sample: &PairedSample, rng: &mut R) -> RankProfile {
    let order = order_by_x(sample.xs(), rng);
    let ys = sample.ys();
    let mut sorted_y = ys.to_vec();
    sorted_y.sort_unstable_by(f64::total_cmp);
    let y_ties = sorted_y.windows(2).any(|w| w[0] == w[1]);
    let n = ys.len();
    let (rank, at_or_above) = order
        .iter()
        .map(|&i| {
            let y = ys[i];
            (
                sorted_y.partition_point(|&s| s <= y),
                n - sorted_y.partition_point(|&s| s < y),
            )
        })
        .unzip();
    RankProfile {
        rank,
        at_or_above,
        order,
        y_ties,
    }
}

/// ξₙ for samples without y ties.
pub fn xi_no_ties(profile: &RankProfile) -> f64 {
    let n = profile.len() as u128;
    1.0 - (3 * profile.rank_variation()) as f64 / (n * n - 1) as f64
}

/// ξₙ for samples that may contain y ties.
pub fn xi_with_ties(profile: &RankProfile) -> Result<f64> {
    let denom = 2 * profile.tie_normalizer();
    if denom == 0 {
        return Err(Error::DegenerateSample);
    }
    let n = profile.len() as u128;
    Ok(1.0 - (n * profile.rank_variation()) as f64 / denom as f64)
}

/// ξₙ of `sample`, choosing the tie-aware formula when y has ties.
pub fn xi<R: Rng + ?Sized>(sample: &PairedSample, rng: &mut R) -> Result<f64> {
    if sample.is_degenerate() {
        return Err(Error::DegenerateSample);
    }
    let order = order_by_x(sample.xs(), rng);
    let ys = sample.ys();
    let ordered: Vec<u64> = order.iter().map(|&i| order_key(ys[i])).collect();
    RankSums::from_keys(&ordered).xi()
}
