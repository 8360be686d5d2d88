//! Probability mass functions on a one-dimensional lattice `{a + k*l : k ∈ Z}`.
//!
//! [`LatticePmf`] stores the support densely between its first and last
//! nonzero cell. Edge cells carrying less than [`EDGE_TRIM`] are dropped when a
//! law is built through [`LatticePmf::new`] (or produced by convolution), and
//! the remaining masses are renormalized. Interior zeros are kept.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Allowed deviation of the total mass from one.
pub const MASS_TOLERANCE: f64 = 1e-9;

/// Edge masses below this value are trimmed.
pub const EDGE_TRIM: f64 = 1e-15;

/// Relative tolerance for deciding that two spacings are the same.
pub const SPACING_TOLERANCE: f64 = 1e-12;

/// Relative tolerance for lattice membership of a point.
pub const LATTICE_TOLERANCE: f64 = 1e-9;

/// A probability mass function on `{offset + k*spacing}`.
///
/// `probs[j]` is the mass of the point `offset + (k_min + j) * spacing`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawPmf")]
pub struct LatticePmf {
    offset: f64,
    spacing: f64,
    k_min: i64,
    probs: Vec<f64>,
}

#[derive(Deserialize)]
struct RawPmf {
    offset: f64,
    spacing: f64,
    k_min: i64,
    probs: Vec<f64>,
}

impl TryFrom<RawPmf> for LatticePmf {
    type Error = Error;

    // Deserialization never rewrites masses, so emitted JSON reads back bit-for-bit.
    fn try_from(raw: RawPmf) -> Result<Self> {
        let pmf = LatticePmf {
            offset: raw.offset,
            spacing: raw.spacing,
            k_min: raw.k_min,
            probs: raw.probs,
        };
        pmf.validate()?;
        Ok(pmf)
    }
}

impl LatticePmf {
    /// Builds a law from raw masses, trimming negligible edge cells.
    pub fn new(offset: f64, spacing: f64, k_min: i64, probs: Vec<f64>) -> Result<Self> {
        Self::build(offset, spacing, k_min, probs, EDGE_TRIM)
    }

    /// Like [`LatticePmf::new`] but only exact zeros are trimmed from the edges.
    pub(crate) fn new_keep_tails(
        offset: f64,
        spacing: f64,
        k_min: i64,
        probs: Vec<f64>,
    ) -> Result<Self> {
        Self::build(offset, spacing, k_min, probs, f64::MIN_POSITIVE)
    }

    fn build(offset: f64, spacing: f64, k_min: i64, probs: Vec<f64>, trim: f64) -> Result<Self> {
        check_lattice(offset, spacing)?;
        if let Some(bad) = probs.iter().find(|p| !p.is_finite() || **p < 0.0) {
            return Err(Error::InvalidPmf(format!(
                "mass {bad} is negative or not finite"
            )));
        }
        let total: f64 = probs.iter().sum();
        if (total - 1.0).abs() > MASS_TOLERANCE {
            return Err(Error::InvalidPmf(format!("total mass {total} is not 1")));
        }
        let first = probs.iter().position(|&p| p >= trim);
        let last = probs.iter().rposition(|&p| p >= trim);
        let (first, last) = match (first, last) {
            (Some(f), Some(l)) => (f, l),
            _ => return Err(Error::InvalidPmf("no cell carries mass".into())),
        };
        let trimmed = first > 0 || last + 1 < probs.len();
        let mut probs = if trimmed {
            probs[first..=last].to_vec()
        } else {
            probs
        };
        if trimmed {
            let kept: f64 = probs.iter().sum();
            probs.iter_mut().for_each(|p| *p /= kept);
        }
        Ok(LatticePmf {
            offset,
            spacing,
            k_min: k_min + first as i64,
            probs,
        })
    }

    fn validate(&self) -> Result<()> {
        check_lattice(self.offset, self.spacing)?;
        if self.probs.is_empty() {
            return Err(Error::InvalidPmf("empty support".into()));
        }
        if self.probs.iter().any(|p| !p.is_finite() || *p < 0.0) {
            return Err(Error::InvalidPmf("negative or non-finite mass".into()));
        }
        if self.probs[0] <= 0.0 || self.probs[self.probs.len() - 1] <= 0.0 {
            return Err(Error::InvalidPmf("support is not trimmed".into()));
        }
        let total: f64 = self.probs.iter().sum();
        if (total - 1.0).abs() > MASS_TOLERANCE {
            return Err(Error::InvalidPmf(format!("total mass {total} is not 1")));
        }
        Ok(())
    }

    /// Unit mass at the lattice point `x`.
    pub fn point_mass(x: f64, offset: f64, spacing: f64) -> Result<Self> {
        check_lattice(offset, spacing)?;
        let k = lattice_index(x, offset, spacing)?;
        Ok(LatticePmf {
            offset,
            spacing,
            k_min: k,
            probs: vec![1.0],
        })
    }

    /// `Bern(p)` on `{0, 1}`; the endpoints collapse to point masses.
    pub fn bernoulli(p: f64) -> Result<Self> {
        if !(0.0..=1.0).contains(&p) {
            return Err(Error::InvalidProbability(p));
        }
        if p == 0.0 {
            return Self::point_mass(0.0, 0.0, 1.0);
        }
        if p == 1.0 {
            return Self::point_mass(1.0, 0.0, 1.0);
        }
        Ok(LatticePmf {
            offset: 0.0,
            spacing: 1.0,
            k_min: 0,
            probs: vec![1.0 - p, p],
        })
    }

    /// Binomial law as the `n`-fold convolution of `Bern(p)`.
    pub fn binomial(n: usize, p: f64) -> Result<Self> {
        let step = Self::bernoulli(p)?;
        let mut law = Self::point_mass(0.0, 0.0, 1.0)?;
        for _ in 0..n {
            law = law.convolve(&step)?;
        }
        Ok(law)
    }

    /// Law of a sum of independent `Bern(p_i)`.
    pub fn poisson_binomial(ps: &[f64]) -> Result<Self> {
        let mut law = Self::point_mass(0.0, 0.0, 1.0)?;
        for &p in ps {
            law = law.convolve(&Self::bernoulli(p)?)?;
        }
        Ok(law)
    }

    pub fn offset(&self) -> f64 {
        self.offset
    }

    pub fn spacing(&self) -> f64 {
        self.spacing
    }

    pub fn k_min(&self) -> i64 {
        self.k_min
    }

    pub fn k_max(&self) -> i64 {
        self.k_min + self.probs.len() as i64 - 1
    }

    pub fn probs(&self) -> &[f64] {
        &self.probs
    }

    /// Number of cells in the stored support.
    pub fn len(&self) -> usize {
        self.probs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.probs.is_empty()
    }

    /// Coordinate of lattice index `k`.
    pub fn point(&self, k: i64) -> f64 {
        self.offset + k as f64 * self.spacing
    }

    /// Mass at lattice index `k` (zero outside the support).
    pub fn prob_at(&self, k: i64) -> f64 {
        if k < self.k_min || k > self.k_max() {
            0.0
        } else {
            self.probs[(k - self.k_min) as usize]
        }
    }

    /// `(index, mass)` pairs over the stored support.
    pub fn cells(&self) -> impl Iterator<Item = (i64, f64)> + '_ {
        self.probs
            .iter()
            .enumerate()
            .map(move |(j, &p)| (self.k_min + j as i64, p))
    }

    /// `(point, mass)` pairs over the stored support.
    pub fn atoms(&self) -> impl Iterator<Item = (f64, f64)> + '_ {
        self.cells().map(move |(k, p)| (self.point(k), p))
    }

    pub fn is_point_mass(&self) -> bool {
        self.probs.len() == 1
    }

    fn mean_index(&self) -> f64 {
        self.probs
            .iter()
            .enumerate()
            .map(|(j, p)| j as f64 * p)
            .sum()
    }

    pub fn mean(&self) -> f64 {
        self.offset + (self.k_min as f64 + self.mean_index()) * self.spacing
    }

    pub fn variance(&self) -> f64 {
        let m = self.mean_index();
        let v: f64 = self
            .probs
            .iter()
            .enumerate()
            .map(|(j, p)| {
                let d = j as f64 - m;
                d * d * p
            })
            .sum();
        v * self.spacing * self.spacing
    }

    /// Shannon entropy in nats.
    pub fn shannon_entropy(&self) -> f64 {
        -self
            .probs
            .iter()
            .filter(|&&p| p > 0.0)
            .map(|&p| p * p.ln())
            .sum::<f64>()
    }

    /// Law of `X + Y` for independent `X ~ self`, `Y ~ other`.
    ///
    /// Offsets add; the spacings must agree.
    pub fn convolve(&self, other: &LatticePmf) -> Result<LatticePmf> {
        if !same_spacing(self.spacing, other.spacing) {
            return Err(Error::SpacingMismatch(self.spacing, other.spacing));
        }
        let (long, short) = if self.len() >= other.len() {
            (self, other)
        } else {
            (other, self)
        };
        let mut out = vec![0.0; long.len() + short.len() - 1];
        for (i, &a) in short.probs.iter().enumerate() {
            if a == 0.0 {
                continue;
            }
            for (o, &b) in out[i..].iter_mut().zip(&long.probs) {
                *o += a * b;
            }
        }
        LatticePmf::new(
            self.offset + other.offset,
            self.spacing,
            self.k_min + other.k_min,
            out,
        )
    }

    /// The same masses on the lattice translated by `-mean`, so the law has mean zero.
    pub fn centered(&self) -> LatticePmf {
        let mut out = self.clone();
        out.offset -= self.mean();
        out
    }

    /// Image under `x -> factor * x` for `factor > 0`.
    pub fn rescaled(&self, factor: f64) -> Result<LatticePmf> {
        if !(factor > 0.0 && factor.is_finite()) {
            return Err(Error::InvalidPmf(format!(
                "scale factor {factor} must be positive"
            )));
        }
        let mut out = self.clone();
        out.offset *= factor;
        out.spacing *= factor;
        Ok(out)
    }

    /// Index shift `s` such that `other.point(k) == self.point(k + s)`.
    pub fn alignment(&self, other: &LatticePmf) -> Result<i64> {
        let mismatch = || Error::LatticeMismatch {
            offset_a: self.offset,
            spacing_a: self.spacing,
            offset_b: other.offset,
            spacing_b: other.spacing,
        };
        if !same_spacing(self.spacing, other.spacing) {
            return Err(mismatch());
        }
        let t = (other.offset - self.offset) / self.spacing;
        let s = t.round();
        if (t - s).abs() > LATTICE_TOLERANCE * t.abs().max(1.0) {
            return Err(mismatch());
        }
        Ok(s as i64)
    }
}

fn check_lattice(offset: f64, spacing: f64) -> Result<()> {
    if !(spacing > 0.0 && spacing.is_finite()) {
        return Err(Error::InvalidPmf(format!(
            "spacing {spacing} must be positive"
        )));
    }
    if !offset.is_finite() {
        return Err(Error::InvalidPmf(format!("offset {offset} is not finite")));
    }
    Ok(())
}

pub(crate) fn same_spacing(a: f64, b: f64) -> bool {
    (a - b).abs() <= SPACING_TOLERANCE * a.abs().max(b.abs())
}

/// Index `k` with `x == offset + k*spacing`, or `NonLatticePoint`.
pub fn lattice_index(x: f64, offset: f64, spacing: f64) -> Result<i64> {
    let t = (x - offset) / spacing;
    let k = t.round();
    if !t.is_finite() || (t - k).abs() > LATTICE_TOLERANCE * t.abs().max(1.0) {
        return Err(Error::NonLatticePoint { x, offset, spacing });
    }
    Ok(k as i64)
}

/// Nearest lattice index; ties go to the even index.
pub fn discretize_index(x: f64, offset: f64, spacing: f64) -> i64 {
    ((x - offset) / spacing).round_ties_even() as i64
}

/// Nearest lattice point `offset + spacing * round((x - offset)/spacing)`.
///
/// Ties round half to even, so `|x - discretize(x)| <= spacing/2`.
pub fn discretize(x: f64, offset: f64, spacing: f64) -> f64 {
    offset + spacing * ((x - offset) / spacing).round_ties_even()
}

/// Relative-frequency law of lattice-valued samples.
pub fn empirical_pmf(samples: &[f64], offset: f64, spacing: f64) -> Result<LatticePmf> {
    if samples.is_empty() {
        return Err(Error::EmptySample);
    }
    check_lattice(offset, spacing)?;
    let indices = samples
        .iter()
        .map(|&x| lattice_index(x, offset, spacing))
        .collect::<Result<Vec<_>>>()?;
    empirical_from_indices(&indices, offset, spacing)
}

/// Relative-frequency law of lattice indices.
pub fn empirical_from_indices(indices: &[i64], offset: f64, spacing: f64) -> Result<LatticePmf> {
    if indices.is_empty() {
        return Err(Error::EmptySample);
    }
    let mut counts: BTreeMap<i64, u64> = BTreeMap::new();
    for &k in indices {
        *counts.entry(k).or_default() += 1;
    }
    let lo = *counts.keys().next().expect("nonempty");
    let hi = *counts.keys().next_back().expect("nonempty");
    let total = indices.len() as f64;
    let mut probs = vec![0.0; (hi - lo + 1) as usize];
    for (k, c) in counts {
        probs[(k - lo) as usize] = c as f64 / total;
    }
    // Counts are exact, so no cell is trimmed away except genuine zeros.
    LatticePmf::new_keep_tails(offset, spacing, lo, probs)
}

/// Joint entropy of independent coordinates: the sum of marginal entropies.
pub fn product_entropy(components: &[LatticePmf]) -> f64 {
    components.iter().map(LatticePmf::shannon_entropy).sum()
}
