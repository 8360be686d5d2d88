//! Relative entropy, total variation and Pinsker's inequality on a shared lattice.

use std::f64::consts::{E, PI};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::gaussian::{quantize_covering, GaussianLaw};
use crate::lattice::LatticePmf;

/// KL, TV and the Pinsker slack of one comparison, with both entropies.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DivergenceReport {
    pub kl: f64,
    pub tv: f64,
    /// `sqrt(kl/2) - tv`.
    pub pinsker_slack: f64,
    pub entropy_p: f64,
    pub entropy_q: f64,
}

/// `Σ p ln(p/q)` in nats.
///
/// Summed as the nonnegative Bregman terms `p ln(p/q) - p + q` plus the mass of
/// `q` off the support of `p`, which keeps the result nonnegative and accurate
/// when `p` and `q` nearly agree.
pub fn kl_divergence(p: &LatticePmf, q: &LatticePmf) -> Result<f64> {
    let shift = p.alignment(q)?;
    let mut total = 0.0;
    let mut q_on_support = vec![false; q.len()];
    for (k, pk) in p.cells() {
        let kq = k - shift;
        let qk = q.prob_at(kq);
        if pk == 0.0 {
            continue;
        }
        if qk == 0.0 {
            return Err(Error::SupportViolation(p.point(k)));
        }
        q_on_support[(kq - q.k_min()) as usize] = true;
        let r = pk / qk;
        // p ln(p/q) - p + q = q (r ln r - r + 1)
        total += qk * (r * r.ln() - r + 1.0);
    }
    total += q
        .probs()
        .iter()
        .zip(&q_on_support)
        .filter(|(_, &on)| !on)
        .map(|(m, _)| m)
        .sum::<f64>();
    Ok(total.max(0.0))
}

/// `½ Σ |p - q|`, with cells missing from either support counted as zero.
pub fn tv_distance(p: &LatticePmf, q: &LatticePmf) -> Result<f64> {
    let shift = p.alignment(q)?;
    let lo = p.k_min().min(q.k_min() + shift);
    let hi = p.k_max().max(q.k_max() + shift);
    let sum: f64 = (lo..=hi)
        .map(|k| (p.prob_at(k) - q.prob_at(k - shift)).abs())
        .sum();
    Ok((0.5 * sum).clamp(0.0, 1.0))
}

/// KL, TV and the Pinsker slack `sqrt(kl/2) - tv` of `p` against `q`.
pub fn pinsker_check(p: &LatticePmf, q: &LatticePmf) -> Result<DivergenceReport> {
    let kl = kl_divergence(p, q)?;
    let tv = tv_distance(p, q)?;
    Ok(DivergenceReport {
        kl,
        tv,
        pinsker_slack: (0.5 * kl).sqrt() - tv,
        entropy_p: p.shannon_entropy(),
        entropy_q: q.shannon_entropy(),
    })
}

/// The Gaussian with the mean and variance of `p`, quantized on `p`'s lattice
/// over a window that covers `p`'s support.
pub fn matching_quantized_gaussian(p: &LatticePmf) -> Result<LatticePmf> {
    let var = p.variance();
    if var.is_nan() || var <= 0.0 {
        return Err(Error::DegenerateLaw);
    }
    let g = GaussianLaw::new(p.mean(), var)?;
    quantize_covering(&g, p.offset(), p.spacing(), p.k_min(), p.k_max())
}

/// Divergence report of `p` against its moment-matched quantized Gaussian.
pub fn kl_to_quantized_gaussian(p: &LatticePmf) -> Result<DivergenceReport> {
    let q = matching_quantized_gaussian(p)?;
    pinsker_check(p, &q)
}

/// `½ ln(2πe σ²) - h`: the relative entropy of a continuous law with
/// differential entropy `h` and variance `σ²` from its matching Gaussian.
pub fn kl_from_entropy_identity(differential_entropy: f64, sigma2: f64) -> Result<f64> {
    if !(sigma2 > 0.0 && sigma2.is_finite()) {
        return Err(Error::NonpositiveVariance(sigma2));
    }
    Ok(0.5 * (2.0 * PI * E * sigma2).ln() - differential_entropy)
}
