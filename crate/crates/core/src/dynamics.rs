//! Perturbed integrable flow in action-angle coordinates,
//!
//! ```text
//! θ_t = θ₀ + ∫₀ᵗ ω(I_s) ds + η_t,    I_t = I₀ + ξ_t,
//! ```
//!
//! driven by independent Wiener or finite-activity Lévy noises `η` and `ξ`,
//! and the lattice discretizations `ω̂_n = discretize(θ_n / n)` of the
//! frequency samples.
//!
//! Every path owns a ChaCha8 stream seeded from `(seed, path index)`, so
//! results do not depend on how paths are scheduled across threads.

use std::io::Write;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal, Poisson, StandardNormal, Uniform};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::gaussian::{rounding_law, GaussianLaw};
use crate::lattice::{discretize, discretize_index, empirical_from_indices, LatticePmf};

/// Frequency map `ω`, applied to each coordinate of the action.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "name", content = "params", rename_all = "lowercase")]
pub enum FrequencyMap {
    /// `ω(I) = c`.
    Constant { c: f64 },
    /// `ω(I) = c + ε sin(I)`.
    Sine { c: f64, epsilon: f64 },
    /// `ω(I) = scale / (1 + exp(-(slope I + bias)))`.
    Logistic { scale: f64, slope: f64, bias: f64 },
}

impl FrequencyMap {
    pub fn eval(&self, i: f64) -> f64 {
        match *self {
            FrequencyMap::Constant { c } => c,
            FrequencyMap::Sine { c, epsilon } => c + epsilon * i.sin(),
            FrequencyMap::Logistic { scale, slope, bias } => {
                scale / (1.0 + (-(slope * i + bias)).exp())
            }
        }
    }

    /// `sup |ω|`.
    pub fn sup_norm(&self) -> f64 {
        match *self {
            FrequencyMap::Constant { c } => c.abs(),
            FrequencyMap::Sine { c, epsilon } => c.abs() + epsilon.abs(),
            FrequencyMap::Logistic { scale, .. } => scale.abs(),
        }
    }

    pub fn constant_value(&self) -> Option<f64> {
        match *self {
            FrequencyMap::Constant { c } => Some(c),
            _ => None,
        }
    }

    fn validate(&self) -> Result<()> {
        let ok = match *self {
            FrequencyMap::Constant { c } => c.is_finite(),
            FrequencyMap::Sine { c, epsilon } => c.is_finite() && epsilon.is_finite(),
            FrequencyMap::Logistic { scale, slope, bias } => {
                scale.is_finite() && slope.is_finite() && bias.is_finite()
            }
        };
        if ok {
            Ok(())
        } else {
            Err(Error::ConfigInvalid(format!(
                "non-finite frequency map parameters: {self:?}"
            )))
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum NoiseKind {
    Wiener,
    Levy,
}

/// Jump-size law of the compound-Poisson part. All three are symmetric.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum JumpLaw {
    /// Uniform on `(-b, b)`.
    Uniform { b: f64 },
    /// `N(0, sigma2)`.
    Gaussian { sigma2: f64 },
    /// `±c` with probability ½ each.
    TwoPoint { c: f64 },
}

impl JumpLaw {
    /// `E[Z²]`.
    pub fn second_moment(&self) -> f64 {
        match *self {
            JumpLaw::Uniform { b } => b * b / 3.0,
            JumpLaw::Gaussian { sigma2 } => sigma2,
            JumpLaw::TwoPoint { c } => c * c,
        }
    }

    /// `E[Z 1{|Z| < 1}]`, the small-jump compensator per unit intensity.
    pub fn small_jump_mean(&self) -> f64 {
        // Symmetric laws have zero truncated mean.
        0.0
    }

    fn validate(&self) -> Result<()> {
        let ok = match *self {
            JumpLaw::Uniform { b } => b > 0.0 && b.is_finite(),
            JumpLaw::Gaussian { sigma2 } => sigma2 > 0.0 && sigma2.is_finite(),
            JumpLaw::TwoPoint { c } => c.is_finite(),
        };
        if ok {
            Ok(())
        } else {
            Err(Error::ConfigInvalid(format!("invalid jump law {self:?}")))
        }
    }
}

/// Noise process: `ζ W_t` (Wiener) or `γ t + ζ W_t + compound Poisson` (Lévy).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NoiseSpec {
    pub kind: NoiseKind,
    #[serde(default)]
    pub gamma: f64,
    #[serde(default = "one")]
    pub zeta: f64,
    #[serde(default)]
    pub jump_rate: f64,
    #[serde(default)]
    pub jump_law: Option<JumpLaw>,
}

fn one() -> f64 {
    1.0
}

impl NoiseSpec {
    pub fn wiener(zeta: f64) -> Self {
        NoiseSpec {
            kind: NoiseKind::Wiener,
            gamma: 0.0,
            zeta,
            jump_rate: 0.0,
            jump_law: None,
        }
    }

    pub fn levy(gamma: f64, zeta: f64, jump_rate: f64, jump_law: JumpLaw) -> Self {
        NoiseSpec {
            kind: NoiseKind::Levy,
            gamma,
            zeta,
            jump_rate,
            jump_law: Some(jump_law),
        }
    }

    /// `λ E[Z²]`, the second moment of the Lévy measure.
    pub fn jump_second_moment(&self) -> f64 {
        match (self.kind, self.jump_law) {
            (NoiseKind::Levy, Some(law)) => self.jump_rate * law.second_moment(),
            _ => 0.0,
        }
    }

    /// Variance per unit time, `ζ² + λ E[Z²]`.
    pub fn variance_rate(&self) -> f64 {
        self.zeta * self.zeta + self.jump_second_moment()
    }

    /// Mean per unit time, `γ + λ E[Z 1{|Z| >= 1}]`.
    pub fn mean_rate(&self) -> f64 {
        // Symmetric jump laws have zero large-jump mean as well.
        match self.kind {
            NoiseKind::Wiener => 0.0,
            NoiseKind::Levy => self.gamma,
        }
    }

    pub fn is_silent(&self) -> bool {
        self.zeta == 0.0 && self.jump_second_moment() == 0.0 && self.mean_rate() == 0.0
    }

    fn validate(&self) -> Result<()> {
        if !(self.zeta >= 0.0 && self.zeta.is_finite()) {
            return Err(Error::ConfigInvalid(format!(
                "zeta = {} must be >= 0",
                self.zeta
            )));
        }
        if !(self.jump_rate >= 0.0 && self.jump_rate.is_finite()) {
            return Err(Error::ConfigInvalid(format!(
                "jump_rate = {} must be >= 0",
                self.jump_rate
            )));
        }
        if !self.gamma.is_finite() {
            return Err(Error::ConfigInvalid("gamma must be finite".into()));
        }
        match self.kind {
            NoiseKind::Wiener => {
                if self.gamma != 0.0 || self.jump_rate != 0.0 || self.jump_law.is_some() {
                    return Err(Error::ConfigInvalid(
                        "a wiener noise takes only zeta; use kind = levy for drift or jumps".into(),
                    ));
                }
            }
            NoiseKind::Levy => {
                if let Some(law) = self.jump_law {
                    law.validate()?;
                } else if self.jump_rate > 0.0 {
                    return Err(Error::ConfigInvalid(
                        "jump_rate > 0 needs a jump_law".into(),
                    ));
                }
            }
        }
        Ok(())
    }
}

/// Increment sampler for one noise at one step size.
#[derive(Debug, Clone)]
struct Increment {
    drift: f64,
    scale: f64,
    jumps: Option<(Poisson<f64>, JumpLaw)>,
}

impl Increment {
    fn new(spec: &NoiseSpec, dt: f64) -> Result<Self> {
        let mut drift = 0.0;
        let mut jumps = None;
        if spec.kind == NoiseKind::Levy {
            drift = spec.gamma * dt;
            if let (Some(law), true) = (spec.jump_law, spec.jump_rate > 0.0) {
                drift -= spec.jump_rate * dt * law.small_jump_mean();
                let poisson = Poisson::new(spec.jump_rate * dt)
                    .map_err(|e| Error::ConfigInvalid(format!("jump intensity: {e}")))?;
                jumps = Some((poisson, law));
            }
        }
        Ok(Increment {
            drift,
            scale: spec.zeta * dt.sqrt(),
            jumps,
        })
    }

    fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        let g: f64 = StandardNormal.sample(rng);
        let mut x = self.drift + self.scale * g;
        if let Some((poisson, law)) = &self.jumps {
            let k = poisson.sample(rng) as u64;
            for _ in 0..k {
                x += sample_jump(law, rng);
            }
        }
        x
    }
}

fn sample_jump<R: Rng + ?Sized>(law: &JumpLaw, rng: &mut R) -> f64 {
    match *law {
        JumpLaw::Uniform { b } => Uniform::new(-b, b).expect("b > 0").sample(rng),
        JumpLaw::Gaussian { sigma2 } => Normal::new(0.0, sigma2.sqrt())
            .expect("sigma2 > 0")
            .sample(rng),
        JumpLaw::TwoPoint { c } => {
            if rng.random::<bool>() {
                c
            } else {
                -c
            }
        }
    }
}

/// One increment `γ dt + ζ √dt G + Σ_{j≤K} Z_j - λ dt E[Z 1{|Z|<1}]` of a Lévy
/// noise, with `K ~ Poisson(λ dt)`.
pub fn levy_increment<R: Rng + ?Sized>(spec: &NoiseSpec, dt: f64, rng: &mut R) -> Result<f64> {
    if spec.kind != NoiseKind::Levy {
        return Err(Error::WrongKind { expected: "levy" });
    }
    noise_increment(spec, dt, rng)
}

/// One increment over `dt` of either noise kind.
pub fn noise_increment<R: Rng + ?Sized>(spec: &NoiseSpec, dt: f64, rng: &mut R) -> Result<f64> {
    if !(dt > 0.0 && dt.is_finite()) {
        return Err(Error::ConfigInvalid(format!("dt = {dt} must be positive")));
    }
    spec.validate()?;
    Ok(Increment::new(spec, dt)?.sample(rng))
}

fn default_dt() -> f64 {
    1.0 / 64.0
}

/// Full system description, as read from JSON.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SystemConfig {
    pub dim: usize,
    pub omega: FrequencyMap,
    pub theta0: Vec<f64>,
    pub i0: Vec<f64>,
    pub eta: NoiseSpec,
    pub xi: NoiseSpec,
    #[serde(default = "default_dt")]
    pub dt: f64,
    #[serde(default)]
    pub seed: u64,
}

impl SystemConfig {
    pub fn from_json_str(s: &str) -> Result<Self> {
        let cfg: SystemConfig =
            serde_json::from_str(s).map_err(|e| Error::ConfigInvalid(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        if self.dim == 0 {
            return Err(Error::ConfigInvalid("dim must be at least 1".into()));
        }
        for v in [&self.theta0, &self.i0] {
            if v.len() != self.dim {
                return Err(Error::DimensionMismatch {
                    expected: self.dim,
                    got: v.len(),
                });
            }
        }
        if !(self.dt > 0.0 && self.dt <= 1.0) {
            return Err(Error::ConfigInvalid(format!(
                "dt = {} must lie in (0, 1]",
                self.dt
            )));
        }
        self.omega.validate()?;
        self.eta.validate()?;
        self.xi.validate()
    }

    /// Number of quadrature sub-steps per unit time.
    pub fn substeps(&self) -> usize {
        (1.0 / self.dt).ceil() as usize
    }
}

/// Angle lift and action at integer times `1..=horizon`.
#[derive(Debug, Clone, PartialEq)]
pub struct Path {
    pub theta: Vec<Vec<f64>>,
    pub action: Vec<Vec<f64>>,
}

/// `θ_n / n` and its discretization for one path.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FrequencySample {
    pub n: usize,
    pub value: Vec<f64>,
    pub discretized: Vec<f64>,
    pub path_seed: u64,
}

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Seed of the RNG stream of path `index` under master seed `seed`.
pub fn path_seed(seed: u64, index: u64) -> u64 {
    splitmix64(splitmix64(seed) ^ index.wrapping_mul(0xD1B5_4A32_D192_ED03))
}

struct Stepper {
    omega: FrequencyMap,
    eta_unit: Increment,
    xi_unit: Increment,
    xi_sub: Increment,
    substeps: usize,
    h: f64,
}

impl Stepper {
    fn new(cfg: &SystemConfig) -> Result<Self> {
        cfg.validate()?;
        let substeps = cfg.substeps();
        let h = 1.0 / substeps as f64;
        Ok(Stepper {
            omega: cfg.omega,
            eta_unit: Increment::new(&cfg.eta, 1.0)?,
            xi_unit: Increment::new(&cfg.xi, 1.0)?,
            xi_sub: Increment::new(&cfg.xi, h)?,
            substeps,
            h,
        })
    }

    /// Advances one unit of time. `drift` accumulates `∫ ω(I) ds` and `noise`
    /// accumulates `η`.
    fn unit_step<R: Rng + ?Sized>(
        &self,
        rng: &mut R,
        drift: &mut f64,
        noise: &mut f64,
        action: &mut f64,
    ) {
        match self.omega.constant_value() {
            Some(_) => *action += self.xi_unit.sample(rng),
            None => {
                for _ in 0..self.substeps {
                    *drift += self.omega.eval(*action) * self.h;
                    *action += self.xi_sub.sample(rng);
                }
            }
        }
        *noise += self.eta_unit.sample(rng);
    }

    fn theta(&self, theta0: f64, t: usize, drift: f64, noise: f64) -> f64 {
        match self.omega.constant_value() {
            Some(c) => theta0 + c * t as f64 + noise,
            None => theta0 + drift + noise,
        }
    }
}

/// Simulates path `index` of the system up to `⌊horizon⌋`.
pub fn simulate_path_indexed(cfg: &SystemConfig, horizon: f64, index: u64) -> Result<Path> {
    if !(horizon >= 1.0 && horizon.is_finite()) {
        return Err(Error::InvalidHorizon(horizon));
    }
    let steps = horizon.floor() as usize;
    let stepper = Stepper::new(cfg)?;
    let mut rng = ChaCha8Rng::seed_from_u64(path_seed(cfg.seed, index));
    let d = cfg.dim;
    let mut theta = vec![Vec::with_capacity(d); steps];
    let mut action = vec![Vec::with_capacity(d); steps];
    for j in 0..d {
        let (mut drift, mut noise, mut i) = (0.0, 0.0, cfg.i0[j]);
        for t in 0..steps {
            stepper.unit_step(&mut rng, &mut drift, &mut noise, &mut i);
            theta[t].push(stepper.theta(cfg.theta0[j], t + 1, drift, noise));
            action[t].push(i);
        }
    }
    Ok(Path { theta, action })
}

/// Simulates path 0 of the system.
pub fn simulate_path(cfg: &SystemConfig, horizon: f64) -> Result<Path> {
    simulate_path_indexed(cfg, horizon, 0)
}

/// `θ_n` per coordinate for path `index`. Constant frequency maps need
/// no quadrature, so `η_n` is drawn as a single increment over `[0, n]`.
fn theta_at(
    cfg: &SystemConfig,
    stepper: &Stepper,
    n: usize,
    index: u64,
) -> Result<(Vec<f64>, u64)> {
    let seed = path_seed(cfg.seed, index);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let out = match cfg.omega.constant_value() {
        Some(c) => {
            let eta_n = Increment::new(&cfg.eta, n as f64)?;
            (0..cfg.dim)
                .map(|j| cfg.theta0[j] + c * n as f64 + eta_n.sample(&mut rng))
                .collect()
        }
        None => (0..cfg.dim)
            .map(|j| {
                let (mut drift, mut noise, mut i) = (0.0, 0.0, cfg.i0[j]);
                for _ in 0..n {
                    stepper.unit_step(&mut rng, &mut drift, &mut noise, &mut i);
                }
                stepper.theta(cfg.theta0[j], n, drift, noise)
            })
            .collect(),
    };
    Ok((out, seed))
}

fn check_lattice(cfg: &SystemConfig, lattice: &[(f64, f64)]) -> Result<()> {
    if lattice.len() != cfg.dim {
        return Err(Error::DimensionMismatch {
            expected: cfg.dim,
            got: lattice.len(),
        });
    }
    if let Some(&(_, l)) = lattice
        .iter()
        .find(|(a, l)| !(*l > 0.0 && l.is_finite()) || !a.is_finite())
    {
        return Err(Error::ConfigInvalid(format!(
            "lattice spacing {l} must be positive"
        )));
    }
    Ok(())
}

/// `count` independent samples of `θ_n / n` (paths `0..count`) and their
/// discretizations on `lattice[j] = (offset, spacing)`.
pub fn frequency_samples(
    cfg: &SystemConfig,
    n: usize,
    count: usize,
    lattice: &[(f64, f64)],
) -> Result<Vec<FrequencySample>> {
    if n == 0 {
        return Err(Error::InvalidHorizon(0.0));
    }
    check_lattice(cfg, lattice)?;
    let stepper = Stepper::new(cfg)?;
    (0..count as u64)
        .into_par_iter()
        .map(|index| {
            let (theta, seed) = theta_at(cfg, &stepper, n, index)?;
            let value: Vec<f64> = theta.iter().map(|t| t / n as f64).collect();
            let discretized = value
                .iter()
                .zip(lattice)
                .map(|(&v, &(a, l))| discretize(v, a, l))
                .collect();
            Ok(FrequencySample {
                n,
                value,
                discretized,
                path_seed: seed,
            })
        })
        .collect()
}

/// Writes samples as CSV with columns `path,n,coord,value,discretized`.
pub fn write_sample_dump<W: Write>(samples: &[FrequencySample], out: W) -> Result<()> {
    #[derive(Serialize)]
    struct Row {
        path: usize,
        n: usize,
        coord: usize,
        value: f64,
        discretized: f64,
    }
    let io = |e: csv::Error| Error::ConfigInvalid(format!("csv output failed: {e}"));
    let mut w = csv::Writer::from_writer(out);
    for (path, s) in samples.iter().enumerate() {
        for (coord, (&value, &discretized)) in s.value.iter().zip(&s.discretized).enumerate() {
            w.serialize(Row {
                path,
                n: s.n,
                coord,
                value,
                discretized,
            })
            .map_err(io)?;
        }
    }
    w.flush()
        .map_err(|e| Error::ConfigInvalid(format!("csv output failed: {e}")))
}

/// Sample mean, unbiased variance and the standard error of that variance.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MomentEstimate {
    pub mean: f64,
    pub variance: f64,
    pub variance_se: f64,
}

pub fn moment_estimate(xs: &[f64]) -> MomentEstimate {
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    let (m2, m4) = xs.iter().fold((0.0, 0.0), |(a, b), &x| {
        let d2 = (x - mean) * (x - mean);
        (a + d2, b + d2 * d2)
    });
    let (m2, m4) = (m2 / n, m4 / n);
    MomentEstimate {
        mean,
        variance: if n > 1.0 { m2 * n / (n - 1.0) } else { 0.0 },
        variance_se: ((m4 - m2 * m2).max(0.0) / n).sqrt(),
    }
}

/// Empirical `Var(θ_n / n)` per coordinate against the variance bound of the
/// angle noise's kind.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VarianceBoundReport {
    pub n: usize,
    pub count: usize,
    pub kind: NoiseKind,
    pub empirical_var: Vec<f64>,
    pub se: Vec<f64>,
    pub bound: Vec<f64>,
    /// `empirical_var <= bound + 3 se` in every coordinate.
    pub pass: bool,
}

/// Variance bound per coordinate.
///
/// Wiener: `3(θ₀/n)² + 3M² + 3ζ²/n`. Lévy: `M² + ζ²/n + λE[Z²]/n`.
pub fn variance_bound(cfg: &SystemConfig, n: usize) -> Vec<f64> {
    let m = cfg.omega.sup_norm();
    let nf = n as f64;
    let z2 = cfg.eta.zeta * cfg.eta.zeta;
    cfg.theta0
        .iter()
        .map(|&t0| match cfg.eta.kind {
            NoiseKind::Wiener => 3.0 * (t0 / nf).powi(2) + 3.0 * m * m + 3.0 * z2 / nf,
            NoiseKind::Levy => m * m + z2 / nf + cfg.eta.jump_second_moment() / nf,
        })
        .collect()
}

pub fn variance_bound_check(
    cfg: &SystemConfig,
    n: usize,
    count: usize,
) -> Result<VarianceBoundReport> {
    if count < 2 {
        return Err(Error::ConfigInvalid("count must be at least 2".into()));
    }
    let lattice = vec![(0.0, 1.0); cfg.dim];
    let samples = frequency_samples(cfg, n, count, &lattice)?;
    let bound = variance_bound(cfg, n);
    let mut empirical_var = Vec::with_capacity(cfg.dim);
    let mut se = Vec::with_capacity(cfg.dim);
    for j in 0..cfg.dim {
        let xs: Vec<f64> = samples.iter().map(|s| s.value[j]).collect();
        let est = moment_estimate(&xs);
        empirical_var.push(est.variance);
        se.push(est.variance_se);
    }
    let pass = (0..cfg.dim).all(|j| empirical_var[j] <= bound[j] + 3.0 * se[j]);
    Ok(VarianceBoundReport {
        n,
        count,
        kind: cfg.eta.kind,
        empirical_var,
        se,
        bound,
        pass,
    })
}

/// How the summands of `S_n = Σ_{k≤n} ω̂_k` are drawn.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SumMode {
    /// Each `ω̂_k` comes from its own independent path of horizon `k`.
    IndependentPaths,
    /// All `ω̂_k` come from one path; the summands are dependent. Diagnostic only.
    SinglePath,
}

/// Empirical law of `S_n` per coordinate.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SumLaw {
    pub n: usize,
    pub mode: SumMode,
    pub marginals: Vec<LatticePmf>,
    /// Sample estimate of `Var(Σ_{k≤n} θ_k / k)` per coordinate.
    pub continuous_var: Vec<f64>,
    pub continuous_var_se: Vec<f64>,
    /// Sample estimate of `Var(S_n)` per coordinate.
    pub discrete_var: Vec<f64>,
    pub discrete_var_se: Vec<f64>,
}

/// `1, 2, 4, …` up to and including `n_max`.
pub fn log_schedule(n_max: usize) -> Vec<usize> {
    let mut out: Vec<usize> = std::iter::successors(Some(1usize), |&n| n.checked_mul(2))
        .take_while(|&n| n <= n_max)
        .collect();
    if out.last() != Some(&n_max) && n_max > 0 {
        out.push(n_max);
    }
    out
}

/// Empirical laws of `S_n = Σ_{k≤n} ω̂_k` for each `n` in `schedule`, from
/// `count` replicates. `S_n` lives on `{n a + k l}`.
pub fn discretized_sum_experiment(
    cfg: &SystemConfig,
    schedule: &[usize],
    lattice: &[(f64, f64)],
    count: usize,
    mode: SumMode,
) -> Result<Vec<SumLaw>> {
    check_lattice(cfg, lattice)?;
    if count == 0
        || schedule.is_empty()
        || schedule.windows(2).any(|w| w[0] >= w[1])
        || schedule[0] == 0
    {
        return Err(Error::ConfigInvalid(
            "schedule must be nonempty, positive and strictly increasing; count >= 1".into(),
        ));
    }
    let n_max = *schedule.last().expect("nonempty");
    let d = cfg.dim;
    let stepper = Stepper::new(cfg)?;
    // Per replicate: for each scheduled n and coordinate, (index sum, continuous sum).
    let replicates: Vec<Vec<(i64, f64)>> = (0..count as u64)
        .into_par_iter()
        .map(|r| -> Result<Vec<(i64, f64)>> {
            let mut idx = vec![0i64; d];
            let mut cont = vec![0.0; d];
            let mut out = Vec::with_capacity(schedule.len() * d);
            let mut next = 0;
            let single = match mode {
                SumMode::SinglePath => Some(simulate_path_indexed(cfg, n_max as f64, r)?),
                SumMode::IndependentPaths => None,
            };
            for k in 1..=n_max {
                let theta = match &single {
                    Some(path) => path.theta[k - 1].clone(),
                    None => theta_at(cfg, &stepper, k, r * n_max as u64 + (k as u64 - 1))?.0,
                };
                for j in 0..d {
                    let v = theta[j] / k as f64;
                    let (a, l) = lattice[j];
                    idx[j] += discretize_index(v, a, l);
                    cont[j] += v;
                }
                if schedule[next] == k {
                    for j in 0..d {
                        out.push((idx[j], cont[j]));
                    }
                    next += 1;
                }
            }
            Ok(out)
        })
        .collect::<Result<_>>()?;

    schedule
        .iter()
        .enumerate()
        .map(|(s, &n)| {
            let mut marginals = Vec::with_capacity(d);
            let mut law = SumLaw {
                n,
                mode,
                marginals: Vec::new(),
                continuous_var: Vec::with_capacity(d),
                continuous_var_se: Vec::with_capacity(d),
                discrete_var: Vec::with_capacity(d),
                discrete_var_se: Vec::with_capacity(d),
            };
            for (j, &(a, l)) in lattice.iter().enumerate() {
                let indices: Vec<i64> = replicates.iter().map(|rep| rep[s * d + j].0).collect();
                let cont: Vec<f64> = replicates.iter().map(|rep| rep[s * d + j].1).collect();
                let disc: Vec<f64> = indices
                    .iter()
                    .map(|&k| n as f64 * a + k as f64 * l)
                    .collect();
                let ce = moment_estimate(&cont);
                let de = moment_estimate(&disc);
                law.continuous_var.push(ce.variance);
                law.continuous_var_se.push(ce.variance_se);
                law.discrete_var.push(de.variance);
                law.discrete_var_se.push(de.variance_se);
                marginals.push(empirical_from_indices(&indices, n as f64 * a, l)?);
            }
            law.marginals = marginals;
            Ok(law)
        })
        .collect()
}

/// Exact law of `θ_n / n` per coordinate, when it is Gaussian: constant `ω`
/// and an angle noise without jumps.
pub fn exact_frequency_gaussian(cfg: &SystemConfig, n: usize) -> Result<Option<Vec<GaussianLaw>>> {
    let c = match cfg.omega.constant_value() {
        Some(c) => c,
        None => {
            return Err(Error::ConfigInvalid(
                "exact laws need a constant frequency map".into(),
            ))
        }
    };
    if cfg.eta.jump_second_moment() > 0.0 {
        return Err(Error::ConfigInvalid(
            "exact laws need an angle noise without jumps".into(),
        ));
    }
    let nf = n as f64;
    let var = cfg.eta.zeta * cfg.eta.zeta / nf;
    if var == 0.0 {
        return Ok(None);
    }
    cfg.theta0
        .iter()
        .map(|&t0| GaussianLaw::new(t0 / nf + c + cfg.eta.mean_rate(), var))
        .collect::<Result<Vec<_>>>()
        .map(Some)
}

/// Exact law of `ω̂_n` per coordinate, under the conditions of
/// [`exact_frequency_gaussian`].
pub fn exact_discretized_law(
    cfg: &SystemConfig,
    n: usize,
    lattice: &[(f64, f64)],
) -> Result<Vec<LatticePmf>> {
    check_lattice(cfg, lattice)?;
    match exact_frequency_gaussian(cfg, n)? {
        Some(gs) => gs
            .iter()
            .zip(lattice)
            .map(|(g, &(a, l))| rounding_law(g, a, l))
            .collect(),
        None => {
            let c = cfg.omega.constant_value().expect("checked");
            let nf = n as f64;
            cfg.theta0
                .iter()
                .zip(lattice)
                .map(|(&t0, &(a, l))| {
                    LatticePmf::point_mass(
                        discretize(t0 / nf + c + cfg.eta.mean_rate(), a, l),
                        a,
                        l,
                    )
                })
                .collect()
        }
    }
}

/// Exact law of `S_n = Σ_{k≤n} ω̂_k` for independent summands, per coordinate.
pub fn exact_discretized_sum_law(
    cfg: &SystemConfig,
    n: usize,
    lattice: &[(f64, f64)],
) -> Result<Vec<LatticePmf>> {
    let mut sums = exact_discretized_law(cfg, 1, lattice)?;
    for k in 2..=n {
        let step = exact_discretized_law(cfg, k, lattice)?;
        sums = sums
            .iter()
            .zip(&step)
            .map(|(s, x)| s.convolve(x))
            .collect::<Result<_>>()?;
    }
    Ok(sums)
}

/// Exact `Var(Σ_{k≤n} θ_k / k)` per coordinate for independent summands:
/// `Σ_k rate/k`, with `rate` the angle noise's variance per unit time.
pub fn exact_continuous_sum_variance(cfg: &SystemConfig, n: usize) -> Vec<f64> {
    let harmonic: f64 = (1..=n).map(|k| 1.0 / k as f64).sum();
    vec![cfg.eta.variance_rate() * harmonic; cfg.dim]
}

/// Correlations between the increments over `[0, 1]` and `[1, 2]` of the
/// simulated angle noise and action noise, over `count` paths.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IncrementCorrelation {
    pub count: usize,
    pub eta: Vec<f64>,
    pub xi: Vec<f64>,
    /// `3 / √count`.
    pub threshold: f64,
    pub pass: bool,
}

fn correlation(pairs: &[(f64, f64)]) -> f64 {
    let n = pairs.len() as f64;
    let (mx, my) = pairs
        .iter()
        .fold((0.0, 0.0), |(a, b), &(x, y)| (a + x / n, b + y / n));
    let (mut sxy, mut sxx, mut syy) = (0.0, 0.0, 0.0);
    for &(x, y) in pairs {
        sxy += (x - mx) * (y - my);
        sxx += (x - mx) * (x - mx);
        syy += (y - my) * (y - my);
    }
    if sxx == 0.0 || syy == 0.0 {
        0.0
    } else {
        sxy / (sxx * syy).sqrt()
    }
}

pub fn increment_correlation_check(
    cfg: &SystemConfig,
    count: usize,
) -> Result<IncrementCorrelation> {
    // With ω ≡ 0 the angle increments are exactly the η increments.
    let flat = SystemConfig {
        omega: FrequencyMap::Constant { c: 0.0 },
        ..cfg.clone()
    };
    let paths = (0..count as u64)
        .into_par_iter()
        .map(|i| {
            Ok((
                simulate_path_indexed(cfg, 2.0, i)?,
                simulate_path_indexed(&flat, 2.0, i)?,
            ))
        })
        .collect::<Result<Vec<_>>>()?;
    let d = cfg.dim;
    let mut eta = Vec::with_capacity(d);
    let mut xi = Vec::with_capacity(d);
    for j in 0..d {
        let xi_pairs: Vec<(f64, f64)> = paths
            .iter()
            .map(|(p, _)| (p.action[0][j] - cfg.i0[j], p.action[1][j] - p.action[0][j]))
            .collect();
        let eta_pairs: Vec<(f64, f64)> = paths
            .iter()
            .map(|(_, f)| {
                (
                    f.theta[0][j] - flat.theta0[j],
                    f.theta[1][j] - f.theta[0][j],
                )
            })
            .collect();
        xi.push(correlation(&xi_pairs));
        eta.push(correlation(&eta_pairs));
    }
    let threshold = 3.0 / (count as f64).sqrt();
    let pass = eta.iter().chain(&xi).all(|r| r.abs() <= threshold);
    Ok(IncrementCorrelation {
        count,
        eta,
        xi,
        threshold,
        pass,
    })
}

/// The three built-in frequency maps, with sup norms `|c|`, `|c| + |ε|` and
/// `|scale|`.
pub fn builtin_maps() -> [FrequencyMap; 3] {
    [
        FrequencyMap::Constant { c: 1.0 },
        FrequencyMap::Sine {
            c: 1.0,
            epsilon: 0.5,
        },
        FrequencyMap::Logistic {
            scale: 2.0,
            slope: 1.0,
            bias: 0.0,
        },
    ]
}
