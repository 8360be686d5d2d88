//! Checks against oracles computed independently of the library routines.

use std::f64::consts::PI;

use entropic_clt::bounds::{lemma31_smoothed_gap, prop32_check, Prop32Params};
use entropic_clt::divergence::kl_to_quantized_gaussian;
use entropic_clt::gaussian::{quantize, GaussianLaw};
use entropic_clt::lattice::LatticePmf;

/// Gaussian mass of `[a, b)` by composite Simpson quadrature of the density.
fn simpson(mu: f64, s: f64, a: f64, b: f64) -> f64 {
    let n = 200;
    let h = (b - a) / n as f64;
    let f = |x: f64| (-0.5 * ((x - mu) / s).powi(2)).exp() / (s * (2.0 * PI).sqrt());
    let mut acc = f(a) + f(b);
    for i in 1..n {
        acc += if i % 2 == 1 { 4.0 } else { 2.0 } * f(a + i as f64 * h);
    }
    acc * h / 3.0
}

/// Binomial masses from log-factorials rather than convolution.
fn binomial_masses(n: usize) -> Vec<f64> {
    let lf: Vec<f64> = std::iter::once(0.0)
        .chain((1..=n).scan(0.0, |acc, k| {
            *acc += (k as f64).ln();
            Some(*acc)
        }))
        .collect();
    (0..=n)
        .map(|k| (lf[n] - lf[k] - lf[n - k] - n as f64 * std::f64::consts::LN_2).exp())
        .collect()
}

#[test]
fn binomial_kl_matches_direct_summation() {
    for n in [4usize, 16, 64, 256] {
        let masses = binomial_masses(n);
        let mu = n as f64 / 2.0;
        let s = (n as f64 / 4.0).sqrt();
        let mut z = 0.0;
        let qs: Vec<f64> = (0..=n)
            .map(|k| {
                let q = simpson(mu, s, k as f64, k as f64 + 1.0);
                z += q;
                q
            })
            .collect();
        // The library renormalizes the reference over the ±10σ window; the mass
        // outside 0..=n that it keeps is included here by normalizing over a wide range.
        let outside: f64 = (-(10 * n as i64)..0)
            .chain(n as i64 + 1..=(11 * n as i64))
            .map(|k| simpson(mu, s, k as f64, k as f64 + 1.0))
            .sum();
        let total = z + outside;
        let kl: f64 = masses
            .iter()
            .zip(&qs)
            .filter(|(p, _)| **p > 1e-15)
            .map(|(p, q)| p * (p / (q / total)).ln())
            .sum();
        let p = LatticePmf::binomial(n, 0.5).unwrap();
        let got = kl_to_quantized_gaussian(&p).unwrap().kl;
        assert!((got - kl).abs() < 1e-9, "n = {n}: {got} vs {kl}");
        assert!(got <= 8.0 / (n as f64).sqrt());
    }
}

#[test]
fn binomial_entropy_matches_log_factorial_oracle() {
    for n in [2usize, 10, 100, 1000] {
        let h: f64 = binomial_masses(n)
            .iter()
            .filter(|&&p| p > 0.0)
            .map(|p| -p * p.ln())
            .sum();
        let got = LatticePmf::binomial(n, 0.5).unwrap().shannon_entropy();
        // Log-factorials near ln(n!) cancel, costing about eps * ln(n!) per mass.
        let tol = 1e-12_f64.max(1e-14 * n as f64 * (n as f64).ln());
        assert!((got - h).abs() < tol, "n = {n}: {got} vs {h}");
    }
}

#[test]
fn riemann_entropy_of_fine_quantization() {
    let g = GaussianLaw::new(0.4, 2.0).unwrap();
    let l = 0.01;
    let q = quantize(&g, 0.1, l).unwrap();
    let brute: f64 = q
        .cells()
        .map(|(k, _)| {
            let m = simpson(
                0.4,
                2f64.sqrt(),
                0.1 + k as f64 * l,
                0.1 + (k + 1) as f64 * l,
            );
            if m > 0.0 {
                -m * m.ln()
            } else {
                0.0
            }
        })
        .sum();
    assert!((q.shannon_entropy() - brute).abs() < 1e-8);
    assert!((q.shannon_entropy() + l.ln() - g.differential_entropy()).abs() < 1e-4);
}

#[test]
fn smoothed_gap_of_fair_coin_sums() {
    for n in [16usize, 64] {
        let p = LatticePmf::binomial(n, 0.5).unwrap().centered();
        let g = lemma31_smoothed_gap(&p).unwrap();
        let s = (n as f64).sqrt() / 2.0;
        assert!((g.bound - (1.0 / s + 13.0 / (24.0 * s * s))).abs() < 1e-12);
        assert!(g.difference.abs() <= g.bound);
        // Closed form of the smoothed entropy: H + ln(1/s).
        assert!((g.smoothed_entropy - (p.shannon_entropy() - s.ln())).abs() < 1e-12);
    }
}

#[test]
fn prop32_heterogeneous_diagnostics() {
    let n = 64;
    let ps: Vec<f64> = (1..=n).map(|i| 0.3 + 0.4 * (i as f64 / n as f64)).collect();
    let rep = prop32_check(&Prop32Params::new(ps.clone())).unwrap();
    let s2: f64 = ps.iter().map(|p| p * (1.0 - p)).sum();
    assert!((rep.record.s_n - s2.sqrt()).abs() < 1e-10);
    assert!(rep.r.value > 2.0 && !rep.r.saturated);
    assert!(rep.growth_ratio > 0.0);
    assert!((rep.kl_bound - (1.0 / s2.sqrt() + 0.5 / s2 + rep.gap_bound)).abs() < 1e-15);
    assert_eq!(rep.record.pass, rep.gap_pass && rep.kl_pass);
}
