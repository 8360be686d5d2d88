//! Bernoulli-part decomposition `X = V + W·B` of integer-spaced lattice laws.
//!
//! For a law `p` with unit spacing, `W ∈ {0, 1}` selects between a pure
//! `V` and `V + B` with `B ~ Bern(½)` independent of `(V, W)`:
//!
//! ```text
//! P(V = k, W = 1) = min{p(k), p(k+1)}
//! P(V = k, W = 0) = p(k) - ½[P(V = k, W = 1) + P(V = k-1, W = 1)]
//! ```
//!
//! `q = P(W = 1)` is the total mass of the `W = 1` part. For a sum of
//! independent decomposed summands, `W⁽ⁿ⁾ = max W_i` has
//! `P(W⁽ⁿ⁾ = 1) = 1 - Π(1 - q_i)`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::lattice::{same_spacing, LatticePmf};

/// Largest number of summands for which [`conditional_moments_given_w1`]
/// enumerates all `2ⁿ` patterns of `W`.
pub const MAX_ENUMERATION: usize = 12;

/// Masses below this magnitude produced by cancellation are set to zero.
pub const CLAMP_TOLERANCE: f64 = 1e-15;

/// Joint law of `(V, W)` for one summand.
///
/// `joint_w0[j]` is `P(V = k_min + j, W = 0)` for `j < len`; `joint_w1[j]` is
/// `P(V = k_min + j, W = 1)` and has one entry fewer, since `V + B` must stay
/// inside the support.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BernoulliDecomposition {
    pub offset: f64,
    pub k_min: i64,
    pub joint_w0: Vec<f64>,
    pub joint_w1: Vec<f64>,
    /// `P(W = 1) = Σ joint_w1`.
    pub q: f64,
}

/// `P(W⁽ⁿ⁾ = 1)` and the moments of `S_n` given either value of `W⁽ⁿ⁾`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AggregateDecomposition {
    pub q_agg: f64,
    pub cond_mean_w1: f64,
    pub cond_var_w1: f64,
    /// `None` when `W⁽ⁿ⁾ = 0` has probability zero.
    pub cond_mean_w0: Option<f64>,
    pub cond_var_w0: Option<f64>,
    pub n: usize,
}

impl BernoulliDecomposition {
    pub fn k_max(&self) -> i64 {
        self.k_min + self.joint_w0.len() as i64 - 1
    }

    /// Law of `X` given `W = 1`, i.e. of `V + B` with `V ~ joint_w1 / q`.
    pub fn law_given_w1(&self) -> Option<LatticePmf> {
        if self.q <= 0.0 {
            return None;
        }
        let v: Vec<f64> = self.joint_w1.iter().map(|m| m / self.q).collect();
        let v = LatticePmf::new_keep_tails(self.offset, 1.0, self.k_min, v).ok()?;
        let b = LatticePmf::bernoulli(0.5).expect("valid");
        v.convolve(&b).ok()
    }

    /// Law of `X` given `W = 0`, i.e. of `V ~ joint_w0 / (1 - q)`.
    pub fn law_given_w0(&self) -> Option<LatticePmf> {
        let rest: f64 = self.joint_w0.iter().sum();
        if rest <= 0.0 {
            return None;
        }
        let v: Vec<f64> = self.joint_w0.iter().map(|m| m / rest).collect();
        LatticePmf::new_keep_tails(self.offset, 1.0, self.k_min, v).ok()
    }

    /// `Σ_k min{P(V = k-1, W = 1), P(V = k, W = 1)}`, the adjacent-minimum
    /// quantity sometimes quoted for `q`. It vanishes on `Bern(½)` and is
    /// reported for comparison only.
    pub fn adjacent_min_q(&self) -> f64 {
        self.joint_w1.windows(2).map(|w| w[0].min(w[1])).sum()
    }
}

/// Decomposes a unit-spacing law into its Bernoulli part.
pub fn bernoulli_part(p: &LatticePmf) -> Result<BernoulliDecomposition> {
    if !same_spacing(p.spacing(), 1.0) {
        return Err(Error::UnitSpacingRequired(p.spacing()));
    }
    let probs = p.probs();
    let w1: Vec<f64> = probs.windows(2).map(|w| w[0].min(w[1])).collect();
    let at = |j: isize| -> f64 {
        if j < 0 || j as usize >= w1.len() {
            0.0
        } else {
            w1[j as usize]
        }
    };
    let mut w0: Vec<f64> = probs
        .iter()
        .enumerate()
        .map(|(j, &pk)| pk - 0.5 * (at(j as isize) + at(j as isize - 1)))
        .collect();
    clamp_into_largest(&mut w0);
    let q = w1.iter().sum();
    Ok(BernoulliDecomposition {
        offset: p.offset(),
        k_min: p.k_min(),
        joint_w0: w0,
        joint_w1: w1,
        q,
    })
}

fn clamp_into_largest(masses: &mut [f64]) {
    let mut defect = 0.0;
    for m in masses.iter_mut() {
        if *m < 0.0 {
            debug_assert!(*m >= -CLAMP_TOLERANCE, "mass {m} below clamp tolerance");
            defect += *m;
            *m = 0.0;
        }
    }
    if defect != 0.0 {
        if let Some(top) = masses
            .iter_mut()
            .max_by(|a, b| a.partial_cmp(b).expect("finite"))
        {
            *top += defect;
        }
    }
}

/// Recovers `p(k) = P(V=k, W=0) + ½P(V=k, W=1) + ½P(V=k-1, W=1)`.
pub fn reconstruct(d: &BernoulliDecomposition) -> Result<LatticePmf> {
    let at = |j: isize| -> f64 {
        if j < 0 || j as usize >= d.joint_w1.len() {
            0.0
        } else {
            d.joint_w1[j as usize]
        }
    };
    let probs = d
        .joint_w0
        .iter()
        .enumerate()
        .map(|(j, &m)| m + 0.5 * at(j as isize) + 0.5 * at(j as isize - 1))
        .collect();
    LatticePmf::new_keep_tails(d.offset, 1.0, d.k_min, probs)
}

fn log_complement(qs: &[f64]) -> Result<Option<f64>> {
    let mut sum = 0.0;
    let mut absorbed = false;
    for &q in qs {
        if !(0.0..=1.0).contains(&q) {
            return Err(Error::InvalidProbability(q));
        }
        if q == 1.0 {
            absorbed = true;
        } else {
            sum += (-q).ln_1p();
        }
    }
    Ok(if absorbed { None } else { Some(sum) })
}

/// `1 - Π(1 - q_i)`, accumulated in log space.
pub fn aggregate_q(qs: &[f64]) -> Result<f64> {
    Ok(match log_complement(qs)? {
        None => 1.0,
        Some(s) => -s.exp_m1(),
    })
}

/// `Π(1 - q_i)`, accumulated in log space; exact zero when some `q_i = 1`.
pub fn aggregate_q_complement(qs: &[f64]) -> Result<f64> {
    Ok(match log_complement(qs)? {
        None => 0.0,
        Some(s) => s.exp(),
    })
}

/// Exact moments of `S_n = Σ X_i` given `W⁽ⁿ⁾ = max W_i`, by enumerating every
/// pattern of `(W_1, …, W_n)` and mixing the conditional sum laws.
///
/// `max_n` is capped at [`MAX_ENUMERATION`]. Fails with `DegenerateLaw` when
/// no summand has a Bernoulli part, so that `W⁽ⁿ⁾ = 1` is a null event.
pub fn conditional_moments_given_w1(
    pmfs: &[LatticePmf],
    max_n: usize,
) -> Result<AggregateDecomposition> {
    let cap = max_n.min(MAX_ENUMERATION);
    let n = pmfs.len();
    if n == 0 {
        return Err(Error::EmptySequence);
    }
    if n > cap {
        return Err(Error::EnumerationTooLarge { n, max: cap });
    }
    let parts = pmfs
        .iter()
        .map(bernoulli_part)
        .collect::<Result<Vec<_>>>()?;
    // Offsets are summed separately; the enumeration tracks indices only.
    let indexed = |l: LatticePmf| {
        LatticePmf::new_keep_tails(0.0, 1.0, l.k_min(), l.probs().to_vec()).expect("valid law")
    };
    let branches: Vec<[Option<(f64, LatticePmf)>; 2]> = parts
        .iter()
        .map(|d| {
            [
                d.law_given_w0().map(|l| (1.0 - d.q, indexed(l))),
                d.law_given_w1().map(|l| (d.q, indexed(l))),
            ]
        })
        .collect();
    let qs: Vec<f64> = parts.iter().map(|d| d.q).collect();
    let q_agg = aggregate_q(&qs)?;

    let offset: f64 = pmfs.iter().map(LatticePmf::offset).sum();
    let lo: i64 = pmfs.iter().map(LatticePmf::k_min).sum();
    let hi: i64 = pmfs.iter().map(LatticePmf::k_max).sum();
    let width = (hi - lo + 1) as usize;
    let mut mix = [vec![0.0; width], vec![0.0; width]];

    let start = LatticePmf::point_mass(0.0, 0.0, 1.0)?;
    enumerate(&branches, 0, 1.0, &start, false, lo, &mut mix)?;

    let moments = |m: &[f64]| -> Option<(f64, f64)> {
        let mass: f64 = m.iter().sum();
        if mass <= 0.0 {
            return None;
        }
        let mean_j: f64 = m.iter().enumerate().map(|(j, w)| j as f64 * w).sum::<f64>() / mass;
        let var: f64 = m
            .iter()
            .enumerate()
            .map(|(j, w)| (j as f64 - mean_j).powi(2) * w)
            .sum::<f64>()
            / mass;
        Some((offset + lo as f64 + mean_j, var))
    };
    let (cond_mean_w1, cond_var_w1) = moments(&mix[1]).ok_or(Error::DegenerateLaw)?;
    let w0 = moments(&mix[0]);
    Ok(AggregateDecomposition {
        q_agg,
        cond_mean_w1,
        cond_var_w1,
        cond_mean_w0: w0.map(|m| m.0),
        cond_var_w0: w0.map(|m| m.1),
        n,
    })
}

fn enumerate(
    branches: &[[Option<(f64, LatticePmf)>; 2]],
    i: usize,
    weight: f64,
    partial: &LatticePmf,
    any_w1: bool,
    lo: i64,
    mix: &mut [Vec<f64>; 2],
) -> Result<()> {
    if i == branches.len() {
        let slot = &mut mix[any_w1 as usize];
        for (k, m) in partial.cells() {
            slot[(k - lo) as usize] += weight * m;
        }
        return Ok(());
    }
    for (w, branch) in branches[i].iter().enumerate() {
        if let Some((pw, law)) = branch {
            if *pw <= 0.0 {
                continue;
            }
            let next = partial.convolve(law)?;
            enumerate(
                branches,
                i + 1,
                weight * pw,
                &next,
                any_w1 || w == 1,
                lo,
                mix,
            )?;
        }
    }
    Ok(())
}
