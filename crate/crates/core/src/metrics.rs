//! Distances between one-dimensional empirical distributions.

use serde::Serialize;

use crate::error::{invalid, Result};
use crate::normal;
use crate::resampling::BootstrapDistribution;

/// Equal-weight atoms, kept sorted.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EmpiricalDistribution {
    sorted: Vec<f64>,
}

impl EmpiricalDistribution {
    pub fn new(mut atoms: Vec<f64>) -> Result<Self> {
        if atoms.is_empty() {
            return Err(invalid("empirical distribution needs at least one atom"));
        }
        if atoms.iter().any(|a| !a.is_finite()) {
            return Err(invalid("empirical distribution atoms must be finite"));
        }
        atoms.sort_unstable_by(f64::total_cmp);
        Ok(Self { sorted: atoms })
    }

    pub fn from_slice(atoms: &[f64]) -> Result<Self> {
        Self::new(atoms.to_vec())
    }

    pub fn sorted_atoms(&self) -> &[f64] {
        &self.sorted
    }

    pub fn len(&self) -> usize {
        self.sorted.len()
    }

    pub fn is_empty(&self) -> bool {
        self.sorted.is_empty()
    }

    /// Right-continuous CDF.
    pub fn cdf(&self, x: f64) -> f64 {
        self.sorted.partition_point(|&a| a <= x) as f64 / self.len() as f64
    }
}

impl TryFrom<&BootstrapDistribution> for EmpiricalDistribution {
    type Error = crate::Error;

    fn try_from(dist: &BootstrapDistribution) -> Result<Self> {
        Self::from_slice(dist.atoms())
    }
}

/// `sup_x |F_a(x) - F_b(x)|` by a merge scan over both sorted atom lists.
///
/// Both CDFs are step functions, so the supremum is attained at a jump; at
/// each jump the right limits are compared and the left limits equal the
/// right limits of the previous jump.
pub fn kolmogorov_distance(a: &EmpiricalDistribution, b: &EmpiricalDistribution) -> f64 {
    let (xa, xb) = (a.sorted_atoms(), b.sorted_atoms());
    let (na, nb) = (xa.len() as f64, xb.len() as f64);
    let (mut i, mut j) = (0, 0);
    let mut sup = 0.0f64;
    while i < xa.len() || j < xb.len() {
        let v = match (xa.get(i), xb.get(j)) {
            (Some(&p), Some(&q)) => p.min(q),
            (Some(&p), None) => p,
            (None, Some(&q)) => q,
            (None, None) => unreachable!(),
        };
        while i < xa.len() && xa[i] <= v {
            i += 1;
        }
        while j < xb.len() && xb[j] <= v {
            j += 1;
        }
        sup = sup.max((i as f64 / na - j as f64 / nb).abs());
    }
    sup
}

/// `sup_x |F_a(x) - Φ(x / σ)|`, checking both one-sided limits of `F_a` at
/// every atom.
pub fn kolmogorov_to_normal(a: &EmpiricalDistribution, sigma: f64) -> Result<f64> {
    if !(sigma.is_finite() && sigma > 0.0) {
        return Err(invalid(format!("sigma must be positive and finite, got {sigma}")));
    }
    let xs = a.sorted_atoms();
    let n = xs.len() as f64;
    let mut sup = 0.0f64;
    let mut i = 0;
    while i < xs.len() {
        let v = xs[i];
        let below = i;
        while i < xs.len() && xs[i] == v {
            i += 1;
        }
        let phi = normal::cdf(v / sigma);
        sup = sup
            .max((below as f64 / n - phi).abs())
            .max((i as f64 / n - phi).abs());
    }
    Ok(sup)
}

/// Wasserstein distance of order `p`, the `L_p` distance between the two
/// quantile functions on (0, 1).
pub fn wasserstein_p(a: &EmpiricalDistribution, b: &EmpiricalDistribution, p: f64) -> Result<f64> {
    if !(p.is_finite() && p >= 1.0) {
        return Err(invalid(format!("Wasserstein order must be finite and >= 1, got {p}")));
    }
    let (xa, xb) = (a.sorted_atoms(), b.sorted_atoms());
    let cost = |u: f64, v: f64| (u - v).abs().powf(p);

    if xa.len() == xb.len() {
        let total: f64 = xa.iter().zip(xb).map(|(&u, &v)| cost(u, v)).sum();
        return Ok((total / xa.len() as f64).powf(1.0 / p));
    }

    // Quantile of `a` jumps at k / na, of `b` at k / nb. Walk the merged
    // breakpoints with integer cross-multiplication: (i+1)/na vs (j+1)/nb.
    let (na, nb) = (xa.len() as u128, xb.len() as u128);
    let denom = (na * nb) as f64;
    let (mut i, mut j) = (0usize, 0usize);
    let mut prev = 0u128; // position on the common grid 1/(na nb)
    let mut total = 0.0;
    while i < xa.len() && j < xb.len() {
        let end_a = (i as u128 + 1) * nb;
        let end_b = (j as u128 + 1) * na;
        let end = end_a.min(end_b);
        total += (end - prev) as f64 / denom * cost(xa[i], xb[j]);
        prev = end;
        if end_a == end {
            i += 1;
        }
        if end_b == end {
            j += 1;
        }
    }
    Ok(total.powf(1.0 / p))
}
