//! Acceptance suite: one PASS/FAIL line per criterion, with detail lines
//! below it. Exits nonzero if any criterion fails.

use std::f64::consts::{E, PI};
use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use entropic_clt::bounds::corollary31_variance_gap;
use entropic_clt::bounds::{
    entropy_gap, lemma31_residual, prop31_sweep, theorem31_diagnostics, ARITH_SLACK,
};
use entropic_clt::corpus::{random_pmf, random_ps, random_unit_pmf, sum_law_corpus};
use entropic_clt::decomposition::{
    aggregate_q, aggregate_q_complement, bernoulli_part, conditional_moments_given_w1, reconstruct,
};
use entropic_clt::divergence::{kl_to_quantized_gaussian, pinsker_check, tv_distance};
use entropic_clt::dynamics::{
    builtin_maps, discretized_sum_experiment, exact_continuous_sum_variance, exact_discretized_law,
    exact_discretized_sum_law, frequency_samples, variance_bound_check, FrequencyMap, JumpLaw,
    NoiseSpec, SumMode, SystemConfig,
};
use entropic_clt::lattice::{empirical_pmf, product_entropy, LatticePmf};

/// Tolerances pinned for the suite.
const RECONSTRUCT_TOL: f64 = 1e-12;
const AGGREGATE_REL_TOL: f64 = 1e-12;
const TOTAL_MOMENT_TOL: f64 = 1e-10;
const PINSKER_TOL: f64 = 1e-12;
const ADDITIVITY_TOL: f64 = 1e-12;
const DECAY_RATIO: f64 = 0.10;
const TV_EXACT: f64 = 0.03;
const SE_MULT: f64 = 3.0;
const MC_PATHS: usize = 100_000;

struct Outcome {
    pass: bool,
    details: Vec<String>,
}

impl Outcome {
    fn new() -> Self {
        Outcome {
            pass: true,
            details: Vec::new(),
        }
    }

    fn check(&mut self, ok: bool, line: String) {
        self.pass &= ok;
        self.details
            .push(format!("{} {line}", if ok { "ok  " } else { "FAIL" }));
    }

    fn note(&mut self, line: String) {
        self.details.push(format!("     {line}"));
    }
}

fn binomial_half_exact_bounds() -> Outcome {
    let mut out = Outcome::new();
    let recs = prop31_sweep(2048).expect("sweep");
    let failures: Vec<usize> = recs.iter().filter(|r| !r.pass).map(|r| r.n).collect();
    let worst_gap = recs
        .iter()
        .map(|r| r.gap.abs() * (r.n as f64).sqrt() / 4.0)
        .fold(0.0, f64::max);
    let worst_kl = recs
        .iter()
        .map(|r| r.kl * (r.n as f64).sqrt() / 8.0)
        .fold(0.0, f64::max);
    out.check(
        failures.is_empty() && recs.len() == 2047,
        format!(
            "{} of {} n in [2, 2048] satisfy both bounds (failures: {failures:?})",
            recs.len() - failures.len(),
            recs.len()
        ),
    );
    out.note(format!(
        "max |gap|/(4/sqrt n) = {worst_gap:.4e}, max kl/(8/sqrt n) = {worst_kl:.4e}"
    ));
    out
}

fn lemma_residuals() -> Outcome {
    let mut out = Outcome::new();
    let corpus = sum_law_corpus(31);
    let mut worst = (0.0, String::new());
    let mut failures = Vec::new();
    for (name, law) in &corpus {
        let r = lemma31_residual(law, 0).expect("residual");
        let ratio = r.residual().abs() / r.bound;
        if ratio > worst.0 {
            worst = (ratio, name.clone());
        }
        if r.residual().abs() > r.bound + ARITH_SLACK {
            failures.push(name.clone());
        }
    }
    out.check(
        failures.is_empty() && corpus.len() >= 100,
        format!(
            "{} centered sum laws, |D + gap| <= l/s + l^2/(2s^2) for all (failures: {failures:?})",
            corpus.len()
        ),
    );
    out.note(format!(
        "largest |residual|/bound = {:.4} at {}",
        worst.0, worst.1
    ));
    out
}

fn decomposition_round_trip() -> Outcome {
    let mut out = Outcome::new();
    let mut rng = ChaCha8Rng::seed_from_u64(23);
    let mut worst: f64 = 0.0;
    let mut mass_defect: f64 = 0.0;
    for _ in 0..300 {
        let p = random_unit_pmf(&mut rng, 1..=30);
        let d = bernoulli_part(&p).unwrap();
        let back = reconstruct(&d).unwrap();
        for k in p.k_min()..=p.k_max() {
            worst = worst.max((back.prob_at(k) - p.prob_at(k)).abs());
        }
        let total: f64 = d.joint_w0.iter().chain(&d.joint_w1).sum();
        mass_defect = mass_defect.max((total - 1.0).abs());
    }
    out.check(
        worst < RECONSTRUCT_TOL,
        format!("300 random laws: max cell error {worst:.3e} < {RECONSTRUCT_TOL:e}"),
    );
    out.note(format!("max |total joint mass - 1| = {mass_defect:.3e}"));
    let q = bernoulli_part(&LatticePmf::bernoulli(0.5).unwrap())
        .unwrap()
        .q;
    out.check(q == 0.5, format!("q(Bern(1/2)) = {q}"));
    out
}

fn aggregation_identities() -> Outcome {
    let mut out = Outcome::new();
    let mut rng = ChaCha8Rng::seed_from_u64(32);
    let mut worst: f64 = 0.0;
    let mut worst_abs: f64 = 0.0;
    for _ in 0..500 {
        let n = rng.random_range(1..=200);
        let qs: Vec<f64> = (0..n).map(|_| rng.random_range(0.0..0.99)).collect();
        let direct: f64 = qs.iter().map(|q| 1.0 - q).product();
        let comp = aggregate_q_complement(&qs).unwrap();
        let agg = aggregate_q(&qs).unwrap();
        worst = worst.max((comp - direct).abs() / direct);
        // 1 - q_agg cannot resolve products below one ulp of 1.
        worst_abs = worst_abs.max(((1.0 - agg) - direct).abs());
    }
    out.check(
        worst < AGGREGATE_REL_TOL,
        format!("complement vs prod(1 - q_i) over 500 sequences: max relative error {worst:.3e}"),
    );
    out.check(
        worst_abs <= f64::EPSILON,
        format!(
            "1 - q_agg vs prod(1 - q_i): max absolute error {worst_abs:.3e} <= machine epsilon"
        ),
    );
    let c: f64 = 0.1;
    let exact = (1.0 - c).powi(100);
    let rel = ((1.0 - aggregate_q(&vec![c; 100]).unwrap()) - exact).abs() / exact;
    out.check(
        rel < AGGREGATE_REL_TOL,
        format!("constant q = 0.1, n = 100: relative error {rel:.3e}"),
    );

    let mut worst_mean: f64 = 0.0;
    let mut worst_second: f64 = 0.0;
    let mut worst_var_ratio = (f64::INFINITY, 0.0f64);
    for trial in 0..40 {
        let n = 1 + trial % 8;
        let pmfs: Vec<LatticePmf> = (0..n).map(|_| random_unit_pmf(&mut rng, 2..=5)).collect();
        let a = conditional_moments_given_w1(&pmfs, 8).unwrap();
        let mut sum = LatticePmf::point_mass(0.0, 0.0, 1.0).unwrap();
        for p in &pmfs {
            sum = sum.convolve(p).unwrap();
        }
        let (m0, v0) = (a.cond_mean_w0.unwrap_or(0.0), a.cond_var_w0.unwrap_or(0.0));
        let mixed_mean = a.q_agg * a.cond_mean_w1 + (1.0 - a.q_agg) * m0;
        let second = sum.variance() + sum.mean().powi(2);
        let mixed_second =
            a.q_agg * (a.cond_var_w1 + a.cond_mean_w1.powi(2)) + (1.0 - a.q_agg) * (v0 + m0 * m0);
        worst_mean = worst_mean.max((mixed_mean - sum.mean()).abs());
        worst_second = worst_second.max((mixed_second - second).abs() / second.max(1.0));
        let zeta2: f64 = pmfs.iter().map(LatticePmf::variance).sum();
        let r = a.cond_var_w1 / zeta2;
        worst_var_ratio = (worst_var_ratio.0.min(r), worst_var_ratio.1.max(r));
    }
    out.check(
        worst_mean < TOTAL_MOMENT_TOL && worst_second < TOTAL_MOMENT_TOL,
        format!("40 enumerations (n <= 8): total-mean error {worst_mean:.3e}, total-second-moment error {worst_second:.3e}"),
    );
    out.note(format!(
        "Var(S | W=1)/sum zeta^2 ranged over [{:.3}, {:.3}]",
        worst_var_ratio.0, worst_var_ratio.1
    ));
    out
}

fn pinsker_pairs() -> Outcome {
    let mut out = Outcome::new();
    let mut rng = ChaCha8Rng::seed_from_u64(21);
    let mut worst = f64::INFINITY;
    for _ in 0..500 {
        let l = [0.5, 1.0, 2.0][rng.random_range(0..3)];
        let q_len = rng.random_range(1..=25);
        let q = random_pmf(&mut rng, q_len, -3, 0.25, l);
        let p_len = rng.random_range(1..=q_len);
        let p_start = rng.random_range(0..=(q_len - p_len)) as i64 - 3;
        let p = random_pmf(&mut rng, p_len, p_start, 0.25, l);
        let r = pinsker_check(&p, &q).unwrap();
        worst = worst.min(r.pinsker_slack);
    }
    out.check(
        worst >= -PINSKER_TOL,
        format!("500 random pairs: min sqrt(kl/2) - tv = {worst:.4e}"),
    );
    out
}

fn binomial_decay() -> Outcome {
    let mut out = Outcome::new();
    let recs = prop31_sweep(1024).expect("sweep");
    let at = |n: usize| recs[n - 2];
    let (a, b) = (at(16), at(1024));
    let ratios = [
        ("|gap|", b.gap.abs() / a.gap.abs(), a.gap, b.gap),
        ("kl", b.kl / a.kl, a.kl, b.kl),
        ("tv", b.tv / a.tv, a.tv, b.tv),
    ];
    for (name, ratio, v16, v1024) in ratios {
        out.check(
            ratio < DECAY_RATIO,
            format!("{name}: n=16 {v16:.4e}, n=1024 {v1024:.4e}, ratio {ratio:.4} < {DECAY_RATIO}"),
        );
    }
    let left = |n: usize| {
        let p = LatticePmf::binomial(n, 0.5).unwrap();
        kl_to_quantized_gaussian(&p).unwrap().tv
    };
    let (l16, l1024) = (left(16), left(1024));
    out.note(format!(
        "tv against [a+kl, a+(k+1)l) cells: n=16 {l16:.4e}, n=1024 {l1024:.4e}, ratio {:.4} (decays like l/s)",
        l1024 / l16
    ));
    let kl_ok = recs
        .iter()
        .all(|r| r.kl <= 8.0 / (r.n as f64).sqrt() + ARITH_SLACK);
    out.check(kl_ok, "kl <= 8/sqrt(n) for every n in [2, 1024]".into());

    let p = LatticePmf::binomial(64, 0.5).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(64);
    let other = LatticePmf::poisson_binomial(&random_ps(&mut rng, 64)).unwrap();
    let one_p = theorem31_diagnostics(64, std::slice::from_ref(&p), &[1.0]).unwrap();
    let one_o = theorem31_diagnostics(64, std::slice::from_ref(&other), &[1.0]).unwrap();
    let iid = theorem31_diagnostics(64, &[p.clone(), p.clone()], &[1.0, 1.0]).unwrap();
    let mixed = theorem31_diagnostics(64, &[p.clone(), other.clone()], &[1.0, 1.0]).unwrap();
    let errs = [
        (iid.gap - 2.0 * one_p.gap).abs(),
        (iid.kl - 2.0 * one_p.kl).abs(),
        (mixed.gap - one_p.gap - one_o.gap).abs(),
        (mixed.kl - one_p.kl - one_o.kl).abs(),
        (mixed.entropy - product_entropy(&[p, other])).abs(),
    ];
    let worst = errs.iter().cloned().fold(0.0, f64::max);
    out.check(
        worst <= ADDITIVITY_TOL,
        format!("d = 2 additivity of gap, kl and entropy: max error {worst:.3e}"),
    );
    out
}

fn wiener_levy_configs() -> Vec<(String, SystemConfig)> {
    let levy = NoiseSpec::levy(0.0, 1.0, 0.5, JumpLaw::TwoPoint { c: 1.0 });
    let levy_xi = NoiseSpec::levy(0.1, 0.5, 1.0, JumpLaw::Uniform { b: 1.5 });
    let mut out = Vec::new();
    for (i, omega) in builtin_maps().into_iter().enumerate() {
        for (kind, eta, xi) in [
            ("wiener", NoiseSpec::wiener(1.0), NoiseSpec::wiener(1.0)),
            ("levy", levy, levy_xi),
        ] {
            out.push((
                format!("{omega:?} / {kind}"),
                SystemConfig {
                    dim: 1,
                    omega,
                    theta0: vec![2.0],
                    i0: vec![0.3],
                    eta,
                    xi,
                    dt: 1.0 / 64.0,
                    seed: 700 + i as u64,
                },
            ));
        }
    }
    out
}

fn dynamics_bounds() -> Outcome {
    let mut out = Outcome::new();
    let n = 10;
    for (name, cfg) in wiener_levy_configs() {
        let r = variance_bound_check(&cfg, n, MC_PATHS).unwrap();
        out.check(
            r.pass,
            format!(
                "{name}: Var(theta_n/n) = {:.4} (se {:.1e}) <= bound {:.4} + {SE_MULT} se",
                r.empirical_var[0], r.se[0], r.bound[0]
            ),
        );
    }
    let cfg = SystemConfig {
        dim: 1,
        omega: FrequencyMap::Constant { c: 0.0 },
        theta0: vec![0.0],
        i0: vec![0.0],
        eta: NoiseSpec::wiener(1.0),
        xi: NoiseSpec::wiener(1.0),
        dt: 1.0 / 64.0,
        seed: 404,
    };
    let (n, lattice) = (4, (0.0, 0.1));
    let samples = frequency_samples(&cfg, n, MC_PATHS, &[lattice]).unwrap();
    let values: Vec<f64> = samples.iter().map(|s| s.discretized[0]).collect();
    let emp = empirical_pmf(&values, lattice.0, lattice.1).unwrap();
    let exact = exact_discretized_law(&cfg, n, &[lattice])
        .unwrap()
        .remove(0);
    let tv = tv_distance(&emp, &exact).unwrap();
    let cells = emp.len() as f64;
    let sampling = 5.0 * (cells / MC_PATHS as f64).sqrt();
    out.check(
        tv <= TV_EXACT && tv <= sampling,
        format!("noise-only n = {n}, l = {}: tv(empirical, exact) = {tv:.4e} <= {TV_EXACT} and <= 5 sqrt(cells/count) = {sampling:.4e}", lattice.1),
    );
    out
}

fn corollary_sweep() -> Outcome {
    let mut out = Outcome::new();
    let n = 16;
    let cfg = SystemConfig {
        dim: 1,
        omega: FrequencyMap::Constant { c: 0.0 },
        theta0: vec![0.0],
        i0: vec![0.0],
        eta: NoiseSpec::wiener(1.0),
        xi: NoiseSpec::wiener(1.0),
        dt: 1.0 / 64.0,
        seed: 808,
    };
    let s2 = exact_continuous_sum_variance(&cfg, n)[0];
    let mut gaps = Vec::new();
    for l in [0.5, 0.1, 0.02] {
        let laws = discretized_sum_experiment(
            &cfg,
            &[n],
            &[(0.0, l)],
            MC_PATHS,
            SumMode::IndependentPaths,
        )
        .unwrap();
        let law = &laws[0];
        let slack = SE_MULT * (law.discrete_var_se[0] + law.continuous_var_se[0]);
        let v = corollary31_variance_gap(n, l, law.discrete_var[0], law.continuous_var[0], slack)
            .unwrap();
        out.check(
            v.pass,
            format!(
                "l = {l}: variance gap {:.4e} <= n l^2/4 + pi l = {:.4e} + {slack:.2e}",
                v.gap, v.bound
            ),
        );
        let exact = exact_discretized_sum_law(&cfg, n, &[(0.0, l)])
            .unwrap()
            .remove(0);
        let gap = entropy_gap(exact.shannon_entropy(), l, s2);
        let mc = entropy_gap(law.marginals[0].shannon_entropy(), l, s2);
        out.note(format!(
            "l = {l}: H + ln l - 1/2 ln(2 pi e s^2) = {gap:.4e} exact, {mc:.4e} Monte Carlo"
        ));
        gaps.push(gap);
    }
    let decreasing = gaps.windows(2).all(|w| w[1].abs() < w[0].abs());
    out.check(
        decreasing,
        format!(
            "|corrected entropy gap| decreases with l: {:.3e} > {:.3e} > {:.3e}",
            gaps[0].abs(),
            gaps[1].abs(),
            gaps[2].abs()
        ),
    );
    out.note(format!(
        "s^2 = H_{n} = {s2:.6}, 1/2 ln(2 pi e s^2) = {:.6}",
        0.5 * (2.0 * PI * E * s2).ln()
    ));
    out
}

type Criterion = (&'static str, fn() -> Outcome);

fn main() {
    let criteria: [Criterion; 8] = [
        (
            "1 exact Bin(n,1/2) entropy and KL bounds, n in [2, 2048]",
            binomial_half_exact_bounds,
        ),
        (
            "2 entropy-KL residual bound over centered sum laws",
            lemma_residuals,
        ),
        ("3 Bernoulli-part round trip", decomposition_round_trip),
        (
            "4 aggregation and conditional moments",
            aggregation_identities,
        ),
        ("5 Pinsker slack over random pairs", pinsker_pairs),
        (
            "6 desk-scale convergence of Bin(n,1/2) sums",
            binomial_decay,
        ),
        (
            "7 dynamics variance bounds and noise-only law",
            dynamics_bounds,
        ),
        (
            "8 spacing sweep: variance gap and corrected entropy gap",
            corollary_sweep,
        ),
    ];
    let mut all = true;
    for (name, run) in criteria {
        let start = Instant::now();
        let outcome = run();
        let secs = start.elapsed().as_secs_f64();
        all &= outcome.pass;
        println!(
            "{} criterion {name} ({secs:.1} s)",
            if outcome.pass { "PASS" } else { "FAIL" }
        );
        for line in outcome.details {
            println!("    {line}");
        }
    }
    if !all {
        std::process::exit(1);
    }
}
