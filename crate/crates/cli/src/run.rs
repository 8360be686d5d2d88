//! Executes an [`ExperimentPlan`] and writes its CSV and manifest.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::PathBuf;
use std::time::{Instant, SystemTime, UNIX_EPOCH};

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;
use serde_json::{json, Value};

use entropic_clt::bounds::{
    corollary31_variance_gap, entropy_gap, lemma31_residual, prop31_check, prop32_check,
    theorem31_diagnostics, write_records_csv, Prop32Params, VarianceGapCheck,
};
use entropic_clt::corpus::{random_ps, random_unit_pmf};
use entropic_clt::decomposition::{
    aggregate_q, aggregate_q_complement, bernoulli_part, reconstruct,
};
use entropic_clt::dynamics::{
    discretized_sum_experiment, exact_continuous_sum_variance, exact_discretized_sum_law, SumLaw,
    SumMode, SystemConfig,
};
use entropic_clt::{EntropyGapRecord, LatticePmf};

use crate::plan::{ExperimentPlan, Mode};
use crate::{CliError, CliResult, EXIT_ASSERTION, EXIT_OK};

/// Standard errors of slack allowed on Monte Carlo variance gaps.
pub const SE_SLACK: f64 = 3.0;

/// Rows and mode-specific report of an executed plan, before anything is written.
#[derive(Debug, Clone, PartialEq)]
pub struct Experiment {
    pub records: Vec<EntropyGapRecord>,
    pub report: Value,
    /// Failed checks that do not affect the exit status, such as Monte Carlo
    /// variance gaps and heterogeneous-bound rows.
    pub diagnostic_failures: usize,
}

impl Experiment {
    pub fn hard_failures(&self) -> usize {
        self.records
            .iter()
            .filter(|r| r.bound_name.is_hard() && !r.pass)
            .count()
    }

    pub fn exit_code(&self) -> i32 {
        if self.hard_failures() == 0 {
            EXIT_OK
        } else {
            EXIT_ASSERTION
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunOutcome {
    pub experiment: Experiment,
    pub csv: PathBuf,
    pub manifest: PathBuf,
}

#[derive(Serialize)]
struct Manifest<'a> {
    plan: &'a ExperimentPlan,
    library_version: &'static str,
    cli_version: &'static str,
    csv: String,
    rows: usize,
    hard_failures: usize,
    diagnostic_failures: usize,
    report: &'a Value,
    /// Everything that changes between identical runs lives here.
    run: RunInfo,
}

#[derive(Serialize)]
struct RunInfo {
    started_unix_s: f64,
    wall_time_s: f64,
    threads: usize,
}

/// Computes the rows of `plan` without touching the filesystem.
pub fn execute(plan: &ExperimentPlan) -> CliResult<Experiment> {
    plan.validate()?;
    match plan.mode {
        Mode::Binomial => binomial(plan),
        Mode::PoissonBinomial => poisson_binomial(plan),
        Mode::Decomposition => decomposition(plan),
        Mode::Hamiltonian => hamiltonian(plan),
        Mode::CorollaryLSweep => corollary_sweep(plan),
    }
}

/// Executes `plan`, writes its CSV to `plan.output` and the manifest next to it.
pub fn run(plan: &ExperimentPlan) -> CliResult<RunOutcome> {
    let started = SystemTime::now()
        .duration_since(UNIX_EPOCH)
        .map(|d| d.as_secs_f64())
        .unwrap_or(0.0);
    let clock = Instant::now();
    let experiment = execute(plan)?;
    let wall_time_s = clock.elapsed().as_secs_f64();

    let csv = plan.output.clone();
    let file = File::create(&csv).map_err(|e| CliError::io(&csv, e))?;
    let mut out = BufWriter::new(file);
    write_records_csv(&experiment.records, &mut out)?;
    out.flush().map_err(|e| CliError::io(&csv, e))?;

    let manifest_path = plan.manifest_path();
    let manifest = Manifest {
        plan,
        library_version: entropic_clt::VERSION,
        cli_version: env!("CARGO_PKG_VERSION"),
        csv: csv.display().to_string(),
        rows: experiment.records.len(),
        hard_failures: experiment.hard_failures(),
        diagnostic_failures: experiment.diagnostic_failures,
        report: &experiment.report,
        run: RunInfo {
            started_unix_s: started,
            wall_time_s,
            threads: rayon::current_num_threads(),
        },
    };
    let text = serde_json::to_string_pretty(&manifest).expect("manifest serializes");
    std::fs::write(&manifest_path, text + "\n").map_err(|e| CliError::io(&manifest_path, e))?;
    Ok(RunOutcome {
        experiment,
        csv,
        manifest: manifest_path,
    })
}

fn binomial(plan: &ExperimentPlan) -> CliResult<Experiment> {
    let records = plan
        .n_schedule
        .par_iter()
        .map(|&n| prop31_check(n))
        .collect::<entropic_clt::Result<Vec<_>>>()?;
    Ok(Experiment {
        records,
        report: json!({ "law": "binomial(n, 1/2)" }),
        diagnostic_failures: 0,
    })
}

fn poisson_binomial(plan: &ExperimentPlan) -> CliResult<Experiment> {
    let n_max = *plan.n_schedule.last().expect("validated nonempty");
    let ps = match &plan.ps {
        Some(ps) => ps.clone(),
        None => random_ps(&mut ChaCha8Rng::seed_from_u64(plan.seed), n_max),
    };
    let per_n = plan
        .n_schedule
        .par_iter()
        .map(|&n| -> CliResult<_> {
            let head = &ps[..n];
            let law = LatticePmf::poisson_binomial(head)?;
            let residual = lemma31_residual(&law, n)?;
            let mut params = Prop32Params::new(head.to_vec());
            params.alpha = plan.alpha.unwrap_or(params.alpha);
            params.beta = plan.beta.unwrap_or(params.beta);
            let rep = prop32_check(&params)?;
            let entry = json!({
                "n": n,
                "r": rep.r,
                "exp_term": rep.exp_term,
                "gap_bound": rep.gap_bound,
                "kl_bound": rep.kl_bound,
                "gap_pass": rep.gap_pass,
                "kl_pass": rep.kl_pass,
                "growth_ratio": rep.growth_ratio,
            });
            Ok((residual, rep.record, entry))
        })
        .collect::<CliResult<Vec<_>>>()?;
    let mut records = Vec::with_capacity(2 * per_n.len());
    let mut entries = Vec::with_capacity(per_n.len());
    let mut diagnostic_failures = 0;
    for (residual, prop32, entry) in per_n {
        records.push(residual);
        diagnostic_failures += usize::from(!prop32.pass);
        records.push(prop32);
        entries.push(entry);
    }
    Ok(Experiment {
        records,
        report: json!({ "ps_source": if plan.ps.is_some() { "plan" } else { "seed" }, "prop32": entries }),
        diagnostic_failures,
    })
}

fn decomposition(plan: &ExperimentPlan) -> CliResult<Experiment> {
    let n_max = *plan.n_schedule.last().expect("validated nonempty");
    let mut rng = ChaCha8Rng::seed_from_u64(plan.seed);
    let mut law = LatticePmf::point_mass(0.0, 0.0, 1.0)?;
    let mut qs = Vec::with_capacity(n_max);
    let mut worst: f64 = 0.0;
    let mut records = Vec::with_capacity(plan.n_schedule.len());
    let mut entries = Vec::with_capacity(plan.n_schedule.len());
    let mut next = plan.n_schedule.iter().peekable();
    for i in 1..=n_max {
        let step = random_unit_pmf(&mut rng, 2..=6);
        let d = bernoulli_part(&step)?;
        let back = reconstruct(&d)?;
        for k in step.k_min()..=step.k_max() {
            worst = worst.max((back.prob_at(k) - step.prob_at(k)).abs());
        }
        qs.push(d.q);
        law = law.convolve(&step)?;
        if next.peek() == Some(&&i) {
            next.next();
            let scaled = law.centered().rescaled(plan.lattice.spacing)?;
            records.push(lemma31_residual(&scaled, i)?);
            entries.push(json!({
                "n": i,
                "q_agg": aggregate_q(&qs)?,
                "prod_one_minus_q": aggregate_q_complement(&qs)?,
                "min_q": qs.iter().cloned().fold(f64::INFINITY, f64::min),
                "max_reconstruction_error": worst,
            }));
        }
    }
    Ok(Experiment {
        records,
        report: json!({ "spacing": plan.lattice.spacing, "sums": entries }),
        diagnostic_failures: 0,
    })
}

/// Residual row of a sum law: the one-coordinate residual, or the summed
/// bound over independent coordinates.
fn sum_record(n: usize, marginals: &[LatticePmf], spacings: &[f64]) -> CliResult<EntropyGapRecord> {
    Ok(if marginals.len() == 1 {
        lemma31_residual(&marginals[0], n)?
    } else {
        theorem31_diagnostics(n, marginals, spacings)?
    })
}

fn variance_gaps(law: &SumLaw, spacings: &[f64]) -> CliResult<Vec<VarianceGapCheck>> {
    spacings
        .iter()
        .enumerate()
        .map(|(j, &l)| {
            let slack = SE_SLACK * (law.discrete_var_se[j] + law.continuous_var_se[j]);
            Ok(corollary31_variance_gap(
                law.n,
                l,
                law.discrete_var[j],
                law.continuous_var[j],
                slack,
            )?)
        })
        .collect()
}

/// Runs the sum experiment of `cfg` on one set of per-coordinate spacings.
fn sum_rows(
    plan: &ExperimentPlan,
    cfg: &SystemConfig,
    spacings: &[f64],
) -> CliResult<(Vec<EntropyGapRecord>, Vec<Value>, usize)> {
    let lattice: Vec<(f64, f64)> = spacings.iter().map(|&l| (plan.lattice.offset, l)).collect();
    let mode = plan.sum_mode.unwrap_or(SumMode::IndependentPaths);
    let laws = discretized_sum_experiment(cfg, &plan.n_schedule, &lattice, plan.mc_count, mode)?;
    let mut records = Vec::with_capacity(laws.len());
    let mut entries = Vec::with_capacity(laws.len());
    let mut failures = 0;
    for law in &laws {
        records.push(sum_record(law.n, &law.marginals, spacings)?);
        let gaps = variance_gaps(law, spacings)?;
        failures += gaps.iter().filter(|g| !g.pass).count();
        let mc_entropy_gap: Vec<f64> = law
            .marginals
            .iter()
            .zip(spacings)
            .zip(&law.continuous_var)
            .map(|((m, &l), &v)| entropy_gap(m.shannon_entropy(), l, v))
            .collect();
        // Exact laws exist for constant frequency maps and jump-free angle noise.
        let exact_entropy_gap = exact_discretized_sum_law(cfg, law.n, &lattice)
            .ok()
            .map(|exact| {
                let s2 = exact_continuous_sum_variance(cfg, law.n);
                exact
                    .iter()
                    .zip(spacings)
                    .zip(&s2)
                    .map(|((m, &l), &v)| entropy_gap(m.shannon_entropy(), l, v))
                    .collect::<Vec<f64>>()
            });
        entries.push(json!({
            "n": law.n,
            "spacings": spacings,
            "discrete_var": law.discrete_var,
            "discrete_var_se": law.discrete_var_se,
            "continuous_var": law.continuous_var,
            "continuous_var_se": law.continuous_var_se,
            "variance_gap": gaps,
            "entropy_gap_mc": mc_entropy_gap,
            "entropy_gap_exact": exact_entropy_gap,
        }));
    }
    Ok((records, entries, failures))
}

fn hamiltonian(plan: &ExperimentPlan) -> CliResult<Experiment> {
    let cfg = plan.system_config()?;
    let spacings = plan
        .spacings
        .clone()
        .unwrap_or_else(|| vec![plan.lattice.spacing; cfg.dim]);
    let (records, entries, diagnostic_failures) = sum_rows(plan, &cfg, &spacings)?;
    Ok(Experiment {
        records,
        report: json!({ "system": cfg, "sums": entries }),
        diagnostic_failures,
    })
}

fn corollary_sweep(plan: &ExperimentPlan) -> CliResult<Experiment> {
    let cfg = plan.system_config()?;
    let sweep = plan.spacings.as_deref().expect("validated sweep");
    let mut records = Vec::new();
    let mut entries = Vec::new();
    let mut diagnostic_failures = 0;
    for &l in sweep {
        let (r, e, f) = sum_rows(plan, &cfg, &vec![l; cfg.dim])?;
        records.extend(r);
        entries.extend(e);
        diagnostic_failures += f;
    }
    Ok(Experiment {
        records,
        report: json!({ "system": cfg, "sweep": entries }),
        diagnostic_failures,
    })
}
