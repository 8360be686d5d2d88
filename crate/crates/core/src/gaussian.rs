//! Gaussian reference laws and their cell-integrated lattice quantizations.
//!
//! The quantization of `N(mu, sigma2)` on `{a + k*l}` assigns to the point
//! `a + k*l` the Gaussian mass of the half-open cell `[a + k*l, a + (k+1)*l)`.
//! [`rounding_law`] is the companion law with cells centred on the lattice
//! points, which is the exact law of [`crate::lattice::discretize`] applied to
//! a Gaussian variable.

use std::f64::consts::{E, PI, SQRT_2};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::lattice::LatticePmf;

/// Half-width of the quantization window in standard deviations.
pub const WINDOW_SIGMAS: f64 = 10.0;

/// Maximum Gaussian mass left outside the quantization window.
pub const TAIL_MASS: f64 = 1e-16;

/// `N(mu, sigma2)` with `sigma2 > 0`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GaussianLaw {
    mu: f64,
    sigma2: f64,
}

impl GaussianLaw {
    pub fn new(mu: f64, sigma2: f64) -> Result<Self> {
        if !(sigma2 > 0.0 && sigma2.is_finite()) || !mu.is_finite() {
            return Err(Error::NonpositiveVariance(sigma2));
        }
        Ok(GaussianLaw { mu, sigma2 })
    }

    pub fn standard() -> Self {
        GaussianLaw {
            mu: 0.0,
            sigma2: 1.0,
        }
    }

    pub fn mu(&self) -> f64 {
        self.mu
    }

    pub fn sigma2(&self) -> f64 {
        self.sigma2
    }

    pub fn sigma(&self) -> f64 {
        self.sigma2.sqrt()
    }

    /// Gaussian mass of `[lo, hi)`.
    pub fn interval_mass(&self, lo: f64, hi: f64) -> f64 {
        let s = self.sigma();
        std_normal_interval((lo - self.mu) / s, (hi - self.mu) / s)
    }

    /// Differential entropy `½ ln(2πe σ²)`.
    pub fn differential_entropy(&self) -> f64 {
        0.5 * (2.0 * PI * E * self.sigma2).ln()
    }
}

/// `log φ(x) = -(x² + ln 2π)/2`.
pub fn std_normal_logpdf(x: f64) -> f64 {
    -0.5 * (x * x + (2.0 * PI).ln())
}

/// Standard normal CDF.
pub fn std_normal_cdf(z: f64) -> f64 {
    if z < 0.0 {
        0.5 * libm::erfc(-z / SQRT_2)
    } else {
        1.0 - 0.5 * libm::erfc(z / SQRT_2)
    }
}

/// `Φ(z2) - Φ(z1)` for `z1 <= z2`, evaluated without cancellation in either tail.
///
/// Cells entirely in a tail subtract complementary error functions taken on
/// the far side; cells touching the body subtract error functions, which are
/// accurate near zero.
pub fn std_normal_interval(z1: f64, z2: f64) -> f64 {
    if z2 <= z1 {
        return 0.0;
    }
    const BODY: f64 = 0.5;
    let m = if z1 >= BODY {
        0.5 * (libm::erfc(z1 / SQRT_2) - libm::erfc(z2 / SQRT_2))
    } else if z2 <= -BODY {
        0.5 * (libm::erfc(-z2 / SQRT_2) - libm::erfc(-z1 / SQRT_2))
    } else {
        0.5 * (libm::erf(z2 / SQRT_2) - libm::erf(z1 / SQRT_2))
    };
    m.max(0.0)
}

/// Gaussian mass of the cell `[left, left + width)`.
///
/// `left` may be `-inf` and `width` may be `+inf`.
pub fn cell_mass(g: &GaussianLaw, left: f64, width: f64) -> f64 {
    let right = if width.is_infinite() {
        f64::INFINITY
    } else {
        left + width
    };
    g.interval_mass(left, right)
}

/// `½ ln(2πe σ²)`.
pub fn gaussian_differential_entropy(sigma2: f64) -> Result<f64> {
    Ok(GaussianLaw::new(0.0, sigma2)?.differential_entropy())
}

/// Cell-integrated quantization of `g` on `{offset + k*spacing}` over the
/// `mu ± 10σ` window, renormalized to unit mass.
pub fn quantize(g: &GaussianLaw, offset: f64, spacing: f64) -> Result<LatticePmf> {
    quantize_window(g, offset, spacing, None)
}

/// As [`quantize`], with the window widened to include indices `k_lo..=k_hi`.
pub fn quantize_covering(
    g: &GaussianLaw,
    offset: f64,
    spacing: f64,
    k_lo: i64,
    k_hi: i64,
) -> Result<LatticePmf> {
    quantize_window(g, offset, spacing, Some((k_lo, k_hi)))
}

/// Exact law of `discretize(X, offset, spacing)` for `X ~ g`: the point
/// `offset + k*spacing` carries the mass of the centred cell of width `spacing`.
pub fn rounding_law(g: &GaussianLaw, offset: f64, spacing: f64) -> Result<LatticePmf> {
    let shifted = quantize_window(g, offset - 0.5 * spacing, spacing, None)?;
    LatticePmf::new_keep_tails(offset, spacing, shifted.k_min(), shifted.probs().to_vec())
}

fn quantize_window(
    g: &GaussianLaw,
    offset: f64,
    spacing: f64,
    cover: Option<(i64, i64)>,
) -> Result<LatticePmf> {
    if !(spacing > 0.0 && spacing.is_finite()) {
        return Err(Error::InvalidPmf(format!(
            "spacing {spacing} must be positive"
        )));
    }
    let s = g.sigma();
    let mut k_lo = ((g.mu - WINDOW_SIGMAS * s - offset) / spacing).floor() as i64;
    let mut k_hi = ((g.mu + WINDOW_SIGMAS * s - offset) / spacing).ceil() as i64;
    let left_edge = |k: i64| offset + k as f64 * spacing;
    while g.interval_mass(f64::NEG_INFINITY, left_edge(k_lo)) >= TAIL_MASS {
        k_lo -= 1;
    }
    while g.interval_mass(left_edge(k_hi + 1), f64::INFINITY) >= TAIL_MASS {
        k_hi += 1;
    }
    if let Some((lo, hi)) = cover {
        k_lo = k_lo.min(lo);
        k_hi = k_hi.max(hi);
    }
    let mut probs: Vec<f64> = (k_lo..=k_hi)
        .map(|k| g.interval_mass(left_edge(k), left_edge(k + 1)))
        .collect();
    let total: f64 = probs.iter().sum();
    probs.iter_mut().for_each(|p| *p /= total);
    LatticePmf::new_keep_tails(offset, spacing, k_lo, probs)
}
