//! Finite-n entropy and relative-entropy bounds for lattice sums, evaluated on
//! exact laws.
//!
//! For a lattice law `p` with spacing `l` and standard deviation `s`, the
//! entropy gap is `H(p) + ln l - ½ ln(2πe s²)` and the residual is
//! `D(p ‖ q) + gap`, where `q` is the moment-matched quantized Gaussian. The
//! residual is bounded in absolute value by `l/s + l²/(2s²)`.

use std::f64::consts::{E, LN_2, PI};
use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::divergence::{kl_to_quantized_gaussian, tv_distance};
use crate::error::{Error, Result};
use crate::gaussian::{rounding_law, GaussianLaw};
use crate::lattice::{same_spacing, LatticePmf};

/// Floating-point slack allowed on every hard inequality.
pub const ARITH_SLACK: f64 = 1e-10;

/// Mass allowed outside the product box when computing multivariate TV.
pub const TV_BOX_DEFECT: f64 = 1e-9;

/// CSV header of [`EntropyGapRecord`] rows.
pub const CSV_HEADER: &str = "n,s_n,entropy,gap,kl,tv,bound,bound_name,pass";

/// Which inequality a record's `bound` column refers to.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum BoundKind {
    /// `|gap + kl| <= l/s + l²/(2s²)`.
    Lemma31,
    /// `|gap| <= 4/√n` and `kl <= 8/√n` for `Bin(n, ½)`.
    Prop31,
    /// `|gap| <= bound` and `kl <= 1/s + 1/(2s²) + bound`; diagnostic only.
    Prop32,
    /// Coordinate-wise residual bounds summed over independent coordinates.
    Theorem31,
}

impl BoundKind {
    pub fn label(self) -> &'static str {
        match self {
            BoundKind::Lemma31 => "lemma31",
            BoundKind::Prop31 => "prop31",
            BoundKind::Prop32 => "prop32",
            BoundKind::Theorem31 => "theorem31",
        }
    }

    /// Whether a failure of this bound is a hard error rather than a diagnostic.
    pub fn is_hard(self) -> bool {
        !matches!(self, BoundKind::Prop32)
    }

    /// Recomputes the pass flag from the numeric columns of a record.
    pub fn check(self, n: usize, s_n: f64, gap: f64, kl: f64, bound: f64) -> bool {
        match self {
            BoundKind::Lemma31 | BoundKind::Theorem31 => (gap + kl).abs() <= bound + ARITH_SLACK,
            BoundKind::Prop31 => {
                let root = (n as f64).sqrt();
                gap.abs() <= 4.0 / root + ARITH_SLACK && kl <= 8.0 / root + ARITH_SLACK
            }
            BoundKind::Prop32 => {
                gap.abs() <= bound + ARITH_SLACK
                    && kl <= 1.0 / s_n + 0.5 / (s_n * s_n) + bound + ARITH_SLACK
            }
        }
    }
}

impl std::str::FromStr for BoundKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "lemma31" => Ok(BoundKind::Lemma31),
            "prop31" => Ok(BoundKind::Prop31),
            "prop32" => Ok(BoundKind::Prop32),
            "theorem31" => Ok(BoundKind::Theorem31),
            other => Err(Error::ConfigInvalid(format!("unknown bound name {other}"))),
        }
    }
}

/// Entropy, divergences and the bound evaluated for one sum law.
///
/// `tv` compares `p` with the Gaussian of the same mean and variance
/// quantized on cells centred at the lattice points; `kl` uses the
/// cell-integrated quantization on `[a + kl, a + (k+1)l)` cells.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EntropyGapRecord {
    pub n: usize,
    pub s_n: f64,
    pub entropy: f64,
    pub gap: f64,
    pub kl: f64,
    pub tv: f64,
    pub bound_lemma31: f64,
    pub bound: f64,
    pub bound_name: BoundKind,
    pub pass: bool,
}

impl EntropyGapRecord {
    /// `D + gap`.
    pub fn residual(&self) -> f64 {
        self.kl + self.gap
    }

    /// Pass flag recomputed from `n, s_n, gap, kl, bound` alone.
    pub fn recheck(&self) -> bool {
        self.bound_name
            .check(self.n, self.s_n, self.gap, self.kl, self.bound)
    }

    fn with_bound(mut self, kind: BoundKind, bound: f64) -> Self {
        self.bound_name = kind;
        self.bound = bound;
        self.pass = self.recheck();
        self
    }
}

#[derive(Serialize, Deserialize)]
struct CsvRow {
    n: usize,
    s_n: f64,
    entropy: f64,
    gap: f64,
    kl: f64,
    tv: f64,
    bound: f64,
    bound_name: BoundKind,
    pass: bool,
}

/// Writes `records` as CSV with header [`CSV_HEADER`].
pub fn write_records_csv<W: Write>(records: &[EntropyGapRecord], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    let io = |e: csv::Error| Error::ConfigInvalid(format!("csv output failed: {e}"));
    for r in records {
        w.serialize(CsvRow {
            n: r.n,
            s_n: r.s_n,
            entropy: r.entropy,
            gap: r.gap,
            kl: r.kl,
            tv: r.tv,
            bound: r.bound,
            bound_name: r.bound_name,
            pass: r.pass,
        })
        .map_err(io)?;
    }
    if records.is_empty() {
        w.write_record(CSV_HEADER.split(',')).map_err(io)?;
    }
    w.flush()
        .map_err(|e| Error::ConfigInvalid(format!("csv output failed: {e}")))
}

/// One CSV row read back: `(n, s_n, gap, kl, bound, bound_name, pass)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RowCheck {
    pub n: usize,
    pub s_n: f64,
    pub gap: f64,
    pub kl: f64,
    pub bound: f64,
    pub bound_name: BoundKind,
    pub pass: bool,
}

impl RowCheck {
    pub fn recheck(&self) -> bool {
        self.bound_name
            .check(self.n, self.s_n, self.gap, self.kl, self.bound)
    }
}

/// Parses CSV produced by [`write_records_csv`].
pub fn read_records_csv<R: std::io::Read>(input: R) -> Result<Vec<RowCheck>> {
    let mut r = csv::Reader::from_reader(input);
    r.deserialize::<CsvRow>()
        .map(|row| {
            let row = row.map_err(|e| Error::ConfigInvalid(format!("bad csv row: {e}")))?;
            Ok(RowCheck {
                n: row.n,
                s_n: row.s_n,
                gap: row.gap,
                kl: row.kl,
                bound: row.bound,
                bound_name: row.bound_name,
                pass: row.pass,
            })
        })
        .collect()
}

/// `l/s + l²/(2s²)`.
pub fn lemma31_bound(spacing: f64, s: f64) -> f64 {
    let r = spacing / s;
    r + 0.5 * r * r
}

/// `H + ln l - ½ ln(2πe s²)`.
pub fn entropy_gap(entropy: f64, spacing: f64, sigma2: f64) -> f64 {
    entropy + spacing.ln() - 0.5 * (2.0 * PI * E * sigma2).ln()
}

/// Law of the Gaussian with the mean and variance of `p`, rounded to the
/// nearest point of `p`'s lattice.
pub fn centred_reference(p: &LatticePmf) -> Result<LatticePmf> {
    let g = GaussianLaw::new(p.mean(), p.variance()).map_err(|_| Error::DegenerateLaw)?;
    rounding_law(&g, p.offset(), p.spacing())
}

/// Residual record of a sum law of `n` summands.
pub fn lemma31_residual(p_sum: &LatticePmf, n: usize) -> Result<EntropyGapRecord> {
    let report = kl_to_quantized_gaussian(p_sum)?;
    let var = p_sum.variance();
    let s = var.sqrt();
    let l = p_sum.spacing();
    let bound = lemma31_bound(l, s);
    let tv = tv_distance(p_sum, &centred_reference(p_sum)?)?;
    let rec = EntropyGapRecord {
        n,
        s_n: s,
        entropy: report.entropy_p,
        gap: entropy_gap(report.entropy_p, l, var),
        kl: report.kl,
        tv,
        bound_lemma31: bound,
        bound,
        bound_name: BoundKind::Lemma31,
        pass: false,
    };
    Ok(rec.with_bound(BoundKind::Lemma31, bound))
}

/// Differential entropy of the density that spreads each atom of `p`
/// uniformly over a cell of width `width`: `H(p) + ln width`.
pub fn smoothed_differential_entropy(p: &LatticePmf, width: f64) -> f64 {
    -p.probs()
        .iter()
        .filter(|&&m| m > 0.0)
        .map(|&m| m * (m / width).ln())
        .sum::<f64>()
}

/// Comparison of the discrete standardized KL with that of its uniformly
/// smoothed version.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SmoothedGap {
    /// `D(S') - D(S' + (l/s)U)`.
    pub difference: f64,
    /// `l/s + 13l²/(24s²)`.
    pub bound: f64,
    /// Differential entropy of `S' + (l/s)U`.
    pub smoothed_entropy: f64,
    /// Relative entropy of `S' + (l/s)U` from its matching Gaussian.
    pub smoothed_kl: f64,
    pub pass: bool,
}

/// Smoothing the standardized sum `S' = (S - ES)/s` by independent uniform
/// noise of width `l/s` gives a piecewise-constant density with variance
/// `1 + l²/(12s²)`; its relative entropy from the Gaussian follows in closed
/// form, and is compared with the discrete `D(S')`.
pub fn lemma31_smoothed_gap(p_sum: &LatticePmf) -> Result<SmoothedGap> {
    let report = kl_to_quantized_gaussian(p_sum)?;
    let s = p_sum.variance().sqrt();
    let width = p_sum.spacing() / s;
    let h = smoothed_differential_entropy(p_sum, width);
    let smoothed_var = 1.0 + width * width / 12.0;
    let smoothed_kl = 0.5 * (2.0 * PI * E * smoothed_var).ln() - h;
    let difference = report.kl - smoothed_kl;
    let bound = width + 13.0 * width * width / 24.0;
    Ok(SmoothedGap {
        difference,
        bound,
        smoothed_entropy: h,
        smoothed_kl,
        pass: difference.abs() <= bound + ARITH_SLACK,
    })
}

/// Fair-coin record for the exact `Bin(n, ½)` law.
pub fn prop31_check(n: usize) -> Result<EntropyGapRecord> {
    if n < 2 {
        return Err(Error::ConfigInvalid(format!("n = {n} must be at least 2")));
    }
    prop31_record(&LatticePmf::binomial(n, 0.5)?, n)
}

fn prop31_record(law: &LatticePmf, n: usize) -> Result<EntropyGapRecord> {
    let rec = lemma31_residual(law, n)?;
    Ok(rec.with_bound(BoundKind::Prop31, 4.0 / (n as f64).sqrt()))
}

/// Fair-coin records for `n = 2..=n_max`, building each binomial by one
/// convolution from the previous one.
pub fn prop31_sweep(n_max: usize) -> Result<Vec<EntropyGapRecord>> {
    let step = LatticePmf::bernoulli(0.5)?;
    let mut law = step.clone();
    let mut out = Vec::with_capacity(n_max.saturating_sub(1));
    for n in 2..=n_max {
        law = law.convolve(&step)?;
        out.push(prop31_record(&law, n)?);
    }
    Ok(out)
}

/// Success probabilities and the exponents of a heterogeneous-coin evaluation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Prop32Params {
    pub ps: Vec<f64>,
    #[serde(default = "default_exponent")]
    pub alpha: f64,
    #[serde(default = "default_exponent")]
    pub beta: f64,
}

fn default_exponent() -> f64 {
    0.25
}

impl Prop32Params {
    pub fn new(ps: Vec<f64>) -> Self {
        Prop32Params {
            ps,
            alpha: default_exponent(),
            beta: default_exponent(),
        }
    }

    fn validate(&self) -> Result<(f64, f64)> {
        if self.ps.is_empty() {
            return Err(Error::EmptySequence);
        }
        if let Some(&bad) = self.ps.iter().find(|p| !(0.0..=1.0).contains(*p)) {
            return Err(Error::InvalidProbability(bad));
        }
        for (name, v) in [("alpha", self.alpha), ("beta", self.beta)] {
            if !(v > 0.0 && v < 0.5) {
                return Err(Error::ConfigInvalid(format!(
                    "{name} = {v} must lie in (0, 1/2)"
                )));
            }
        }
        let sum_p: f64 = self.ps.iter().sum();
        let s2: f64 = self.ps.iter().map(|p| p * (1.0 - p)).sum();
        if s2.is_nan() || s2 <= 0.0 {
            return Err(Error::DegenerateLaw);
        }
        Ok((sum_p, s2))
    }
}

/// `r(n) = 2 exp(s^{2α+1} / (2Σp))`; `saturated` marks overflow to `+inf`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RValue {
    pub value: f64,
    pub saturated: bool,
}

pub fn prop32_r(params: &Prop32Params) -> Result<RValue> {
    let (sum_p, s2) = params.validate()?;
    let s = s2.sqrt();
    let value = 2.0 * (s.powf(2.0 * params.alpha + 1.0) / (2.0 * sum_p)).exp();
    Ok(RValue {
        value,
        saturated: value.is_infinite(),
    })
}

/// Heterogeneous-coin bound evaluated for a Poisson-binomial sum.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Prop32Report {
    /// Record with `bound` = the entropy-gap bound.
    pub record: EntropyGapRecord,
    pub r: RValue,
    /// `2 exp(-r + ln n + ln r)`, zero when `r` saturates.
    pub exp_term: f64,
    pub gap_bound: f64,
    pub kl_bound: f64,
    pub gap_pass: bool,
    pub kl_pass: bool,
    /// `ln n · Σp / (Σp(1-p))^{2β+1}`.
    pub growth_ratio: f64,
}

pub fn prop32_check(params: &Prop32Params) -> Result<Prop32Report> {
    let (sum_p, s2) = params.validate()?;
    let r = prop32_r(params)?;
    let n = params.ps.len();
    let s = s2.sqrt();
    let exp_term = if r.saturated {
        0.0
    } else {
        (LN_2 - r.value + (n as f64).ln() + r.value.ln()).exp()
    };
    let gap_bound = (1.0 / (24.0 * s)).min(exp_term);
    let kl_bound = 1.0 / s + 0.5 / s2 + gap_bound;
    let law = LatticePmf::poisson_binomial(&params.ps)?;
    let record = lemma31_residual(&law, n)?.with_bound(BoundKind::Prop32, gap_bound);
    Ok(Prop32Report {
        record,
        r,
        exp_term,
        gap_bound,
        kl_bound,
        gap_pass: record.gap.abs() <= gap_bound + ARITH_SLACK,
        kl_pass: record.kl <= kl_bound + ARITH_SLACK,
        growth_ratio: (n as f64).ln() * sum_p / s2.powf(2.0 * params.beta + 1.0),
    })
}

/// Record for a sum of independent coordinates, one marginal sum law per
/// coordinate with lattice spacings `spacings`.
///
/// `gap`, `kl`, `entropy` and the bound add over coordinates. `s_n` is the
/// geometric mean of the coordinate standard deviations, so that
/// `d ln s_n = ½ ln det Σ`. `tv` is the distance between the product law and
/// the product of centred Gaussian references over a box holding all but
/// [`TV_BOX_DEFECT`] of either law's mass.
pub fn theorem31_diagnostics(
    n: usize,
    marginal_sums: &[LatticePmf],
    spacings: &[f64],
) -> Result<EntropyGapRecord> {
    let d = marginal_sums.len();
    if d == 0 || spacings.len() != d {
        return Err(Error::DimensionMismatch {
            expected: d.max(1),
            got: spacings.len(),
        });
    }
    let mut entropy = 0.0;
    let mut gap = 0.0;
    let mut kl = 0.0;
    let mut bound = 0.0;
    let mut log_s = 0.0;
    let mut refs = Vec::with_capacity(d);
    for (p, &l) in marginal_sums.iter().zip(spacings) {
        if !same_spacing(p.spacing(), l) {
            return Err(Error::SpacingMismatch(p.spacing(), l));
        }
        let report = kl_to_quantized_gaussian(p)?;
        let var = p.variance();
        entropy += report.entropy_p;
        gap += entropy_gap(report.entropy_p, l, var);
        kl += report.kl;
        bound += lemma31_bound(l, var.sqrt());
        log_s += 0.5 * var.ln();
        refs.push(centred_reference(p)?);
    }
    let tv = product_tv(marginal_sums, &refs)?;
    let rec = EntropyGapRecord {
        n,
        s_n: (log_s / d as f64).exp(),
        entropy,
        gap,
        kl,
        tv,
        bound_lemma31: bound,
        bound,
        bound_name: BoundKind::Theorem31,
        pass: false,
    };
    Ok(rec.with_bound(BoundKind::Theorem31, bound))
}

/// Aligned index window of `p` and `q` leaving at most `defect` of each
/// law's mass outside on either side.
fn box_window(p: &LatticePmf, q: &LatticePmf, defect: f64) -> Result<(i64, i64, i64)> {
    let shift = p.alignment(q)?;
    let cut = |law: &LatticePmf, off: i64| -> (i64, i64) {
        let probs = law.probs();
        let mut lo = 0;
        let mut acc = 0.0;
        while lo + 1 < probs.len() && acc + probs[lo] <= defect {
            acc += probs[lo];
            lo += 1;
        }
        let mut hi = probs.len() - 1;
        acc = 0.0;
        while hi > lo && acc + probs[hi] <= defect {
            acc += probs[hi];
            hi -= 1;
        }
        (law.k_min() + lo as i64 + off, law.k_min() + hi as i64 + off)
    };
    let (plo, phi) = cut(p, 0);
    let (qlo, qhi) = cut(q, shift);
    Ok((plo.min(qlo), phi.max(qhi), shift))
}

fn product_tv(ps: &[LatticePmf], qs: &[LatticePmf]) -> Result<f64> {
    if ps.len() == 1 {
        return tv_distance(&ps[0], &qs[0]);
    }
    let defect = TV_BOX_DEFECT / (2.0 * ps.len() as f64);
    let windows = ps
        .iter()
        .zip(qs)
        .map(|(p, q)| {
            let (lo, hi, shift) = box_window(p, q, defect)?;
            let pv: Vec<f64> = (lo..=hi).map(|k| p.prob_at(k)).collect();
            let qv: Vec<f64> = (lo..=hi).map(|k| q.prob_at(k - shift)).collect();
            Ok((pv, qv))
        })
        .collect::<Result<Vec<_>>>()?;
    fn walk(w: &[(Vec<f64>, Vec<f64>)], pa: f64, qa: f64) -> f64 {
        match w.split_first() {
            None => (pa - qa).abs(),
            Some(((pv, qv), rest)) => pv
                .iter()
                .zip(qv)
                .map(|(p, q)| walk(rest, pa * p, qa * q))
                .sum(),
        }
    }
    Ok((0.5 * walk(&windows, 1.0, 1.0)).clamp(0.0, 1.0))
}

/// `n l²/4 + π l`.
pub fn corollary31_bound(n: usize, spacing: f64) -> f64 {
    n as f64 * spacing * spacing / 4.0 + PI * spacing
}

/// Variance gap between discretized and continuous frequency sums, checked
/// against [`corollary31_bound`] with additive `slack`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct VarianceGapCheck {
    pub n: usize,
    pub spacing: f64,
    pub gap: f64,
    pub bound: f64,
    pub slack: f64,
    pub pass: bool,
}

pub fn corollary31_variance_gap(
    n: usize,
    spacing: f64,
    var_discrete: f64,
    var_continuous: f64,
    slack: f64,
) -> Result<VarianceGapCheck> {
    if !(spacing > 0.0 && spacing.is_finite()) {
        return Err(Error::ConfigInvalid(format!(
            "spacing {spacing} must be positive"
        )));
    }
    let gap = var_discrete - var_continuous;
    let bound = corollary31_bound(n, spacing);
    Ok(VarianceGapCheck {
        n,
        spacing,
        gap,
        bound,
        slack,
        pass: gap <= bound + slack,
    })
}
