//! Seeded random lattice laws used by property sweeps and verification suites.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Exp1};

use crate::lattice::LatticePmf;

/// Random law on `len` consecutive cells starting at index `k_min`, with
/// Dirichlet(1, …, 1) masses. Every cell carries positive mass.
pub fn random_pmf<R: Rng + ?Sized>(
    rng: &mut R,
    len: usize,
    k_min: i64,
    offset: f64,
    spacing: f64,
) -> LatticePmf {
    let len = len.max(1);
    loop {
        let w: Vec<f64> = (0..len)
            .map(|_| {
                let e: f64 = Exp1.sample(rng);
                e
            })
            .collect();
        let total: f64 = w.iter().sum();
        let probs: Vec<f64> = w.iter().map(|x| x / total).collect();
        // Masses below the edge trim would shrink the support; redraw instead.
        if probs.iter().all(|&p| p > 1e-12) {
            return LatticePmf::new(offset, spacing, k_min, probs).expect("valid by construction");
        }
    }
}

/// Random law on the integers with support length drawn from `lens`.
pub fn random_unit_pmf<R: Rng + ?Sized>(
    rng: &mut R,
    lens: std::ops::RangeInclusive<usize>,
) -> LatticePmf {
    let len = rng.random_range(lens);
    let k_min = rng.random_range(-5..=5);
    random_pmf(rng, len, k_min, 0.0, 1.0)
}

/// Random Bernoulli success probabilities strictly inside `(0, 1)`.
pub fn random_ps<R: Rng + ?Sized>(rng: &mut R, n: usize) -> Vec<f64> {
    (0..n).map(|_| rng.random_range(0.05..0.95)).collect()
}

/// Centred sum laws for residual sweeps: fair and biased binomials,
/// Poisson-binomials and self-convolutions of random unit-lattice laws, each
/// rescaled to spacings ½, 1 and 2.
pub fn sum_law_corpus(seed: u64) -> Vec<(String, LatticePmf)> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut base: Vec<(String, LatticePmf)> = Vec::new();
    for n in [1usize, 2, 3, 5, 8, 13, 21, 50, 100, 256, 500] {
        base.push((
            format!("bin({n},1/2)"),
            LatticePmf::binomial(n, 0.5).expect("valid p"),
        ));
    }
    for (n, p) in [(10usize, 0.1), (40, 0.9), (200, 0.3)] {
        base.push((
            format!("bin({n},{p})"),
            LatticePmf::binomial(n, p).expect("valid p"),
        ));
    }
    for n in [2usize, 4, 10, 30, 100, 300] {
        for rep in 0..2 {
            let ps = random_ps(&mut rng, n);
            let law = LatticePmf::poisson_binomial(&ps).expect("valid ps");
            base.push((format!("pbin(n={n},#{rep})"), law));
        }
    }
    for m in [4usize, 8, 16, 32, 64] {
        for rep in 0..3 {
            let step = random_unit_pmf(&mut rng, 2..=6);
            let mut law = step.clone();
            for _ in 1..m {
                law = law.convolve(&step).expect("same lattice");
            }
            base.push((format!("unit^{m}(#{rep})"), law));
        }
    }
    let mut corpus = Vec::with_capacity(3 * base.len());
    for (name, law) in base {
        let c = law.centered();
        for l in [0.5, 1.0, 2.0] {
            corpus.push((
                format!("{name} l={l}"),
                c.rescaled(l).expect("positive factor"),
            ));
        }
    }
    corpus
}
