//! Monte Carlo experiments and machine-readable reports.
//!
//! Every trial draws from its own stream `(master_seed, trial_index)` and
//! results are aggregated from counts, so a report does not depend on how
//! many threads ran the trials.

use std::fs::File;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::time::Instant;

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::attacks::{
    epr_attack_session, fixed_half_count_bound, naive_acceptance_oracle, naive_cheat_session,
    naive_index_pass_probability, CheatStrategy,
};
use crate::epr::{closed_form_correlation, commitment_state, Bit, CommitmentStateKind};
use crate::error::{Error, Result};
use crate::protocol::{
    alice_commit, measure_pair, run_honest_session_with, BasisEntry, ConstraintFamily, FamilyWeights,
};
use crate::quantum::{branch_sum_correlation, cos_deg, mixture_density, MatrixParts, MeasurementAxis, Outcome};
use crate::rng;
use crate::stats::{binomial_se, chi_square_homogeneity, wilson_interval, ChiSquareTest, Z_95};

/// Exact mixtures must agree entrywise to this tolerance.
pub const EXACT_MIXTURE_TOL: f64 = 1e-12;

/// Closed-form and Born-rule correlations must agree to this tolerance.
pub const CORRELATION_TOL: f64 = 1e-10;

/// Samples per random stream in the indistinguishability sampler.
const SAMPLE_CHUNK: u64 = 4096;

/// Which experiment to run, with its experiment-specific parameters.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ExperimentKind {
    /// Honest sessions. Without a fixed `lambda` each trial draws its bit.
    Honest {
        lambda: Option<Bit>,
    },
    NaiveCheat {
        committed_bit: Bit,
        claimed_bit: Bit,
    },
    EprAttack {
        claimed_bit: Bit,
    },
    /// `trials` is the number of samples per committed bit and family.
    Indistinguishability,
    /// A `grid_steps`⁴ grid over (θ₁, φ₁, θ₂, φ₂).
    CorrelationTable {
        grid_steps: usize,
    },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExperimentConfig {
    pub experiment: ExperimentKind,
    pub n: usize,
    pub trials: u64,
    pub family_weights: FamilyWeights,
    pub master_seed: u64,
    /// Report destination.
    #[serde(skip)]
    pub output: Option<PathBuf>,
    /// Per-trial CSV destination.
    #[serde(skip)]
    pub csv: Option<PathBuf>,
    /// Worker threads; `Some(1)` runs serially, `None` uses the global pool.
    #[serde(skip)]
    pub threads: Option<usize>,
    /// Omit wall-clock timing so reports can be compared byte for byte.
    #[serde(skip)]
    pub stable_output: bool,
}

impl ExperimentConfig {
    pub fn new(
        experiment: ExperimentKind,
        n: usize,
        trials: u64,
        family_weights: FamilyWeights,
        master_seed: u64,
    ) -> Self {
        ExperimentConfig {
            experiment,
            n,
            trials,
            family_weights,
            master_seed,
            output: None,
            csv: None,
            threads: None,
            stable_output: false,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.trials == 0 {
            return Err(Error::InvalidParameter("trials must be at least 1".into()));
        }
        if self.n == 0 {
            return Err(Error::InvalidParameter(
                "security parameter n must be at least 1".into(),
            ));
        }
        if self.threads == Some(0) {
            return Err(Error::InvalidParameter("thread count must be at least 1".into()));
        }
        FamilyWeights::new(self.family_weights.as_array())?;
        match self.experiment {
            ExperimentKind::NaiveCheat {
                committed_bit,
                claimed_bit,
            } => {
                CheatStrategy::naive(committed_bit, claimed_bit)?;
            }
            ExperimentKind::CorrelationTable { grid_steps: 0 } => {
                return Err(Error::InvalidParameter(
                    "correlation grid needs at least one step".into(),
                ));
            }
            _ => {}
        }
        Ok(())
    }

    fn strategy(&self) -> Option<CheatStrategy> {
        match self.experiment {
            ExperimentKind::NaiveCheat {
                committed_bit,
                claimed_bit,
            } => Some(CheatStrategy::NaiveSubstitution {
                committed_bit,
                claimed_bit,
            }),
            ExperimentKind::EprAttack { claimed_bit } => Some(CheatStrategy::epr(claimed_bit)),
            _ => None,
        }
    }
}

/// Runs `job` for every index in `0..count`, serially or on a pool, and
/// returns results in index order.
fn run_indexed<T, F>(count: u64, threads: Option<usize>, job: F) -> Result<Vec<T>>
where
    T: Send,
    F: Fn(u64) -> Result<T> + Sync + Send,
{
    match threads {
        Some(1) => (0..count).map(job).collect(),
        Some(k) => rayon::ThreadPoolBuilder::new()
            .num_threads(k)
            .build()
            .map_err(|e| Error::InvalidParameter(format!("cannot start {k} worker threads: {e}")))?
            .install(|| (0..count).into_par_iter().map(&job).collect()),
        None => (0..count).into_par_iter().map(job).collect(),
    }
}

/// One CSV row.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct TrialRow {
    pub trial_index: u64,
    pub accepted: bool,
    pub checked_count: usize,
    #[serde(skip)]
    pub failures: usize,
}

/// Outcome of a batch of attack sessions.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CheatEstimate {
    pub strategy: CheatStrategy,
    pub n: usize,
    pub successes: u64,
    pub trials: u64,
    pub rate: f64,
    pub wilson_95_interval: (f64, f64),
    pub analytic_oracle: f64,
    pub oracle_in_interval: bool,
    /// Distance between `rate` and the oracle in binomial standard errors.
    pub oracle_deviation_se: f64,
    /// `(1/2)^(n/2)`.
    pub paper_bound: f64,
    /// Per-index pass probability by family, F1..F6.
    pub family_pass_probability: [f64; 6],
    pub oracle_derivation: String,
    pub mean_checked_count: f64,
    pub total_failures: u64,
}

fn cheat_rows(config: &ExperimentConfig, strategy: CheatStrategy) -> Result<Vec<TrialRow>> {
    strategy.validate()?;
    let weights = config.family_weights;
    run_indexed(config.trials, config.threads, |trial_index| {
        let mut r = rng::stream(config.master_seed, trial_index);
        let result = match strategy {
            CheatStrategy::NaiveSubstitution { .. } => naive_cheat_session(config.n, &weights, strategy, &mut r)?,
            CheatStrategy::EprDelayedChoice { claimed_bit } => {
                epr_attack_session(config.n, &weights, claimed_bit, &mut r)?
            }
        };
        Ok(TrialRow {
            trial_index,
            accepted: result.accepted(),
            checked_count: result.checked_count(),
            failures: result.verdict().failures.len(),
        })
    })
}

fn summarize_cheat(config: &ExperimentConfig, strategy: CheatStrategy, rows: &[TrialRow]) -> CheatEstimate {
    let trials = rows.len() as u64;
    let successes = rows.iter().filter(|r| r.accepted).count() as u64;
    let rate = successes as f64 / trials as f64;
    let interval = wilson_interval(successes, trials, Z_95);
    let n = config.n;
    let (analytic_oracle, family_pass_probability, oracle_derivation) = match strategy {
        CheatStrategy::NaiveSubstitution {
            committed_bit,
            claimed_bit,
        } => {
            let per_family = ConstraintFamily::ALL.map(|f| naive_index_pass_probability(f, committed_bit, claimed_bit));
            let oracle = naive_acceptance_oracle(n, &config.family_weights, committed_bit, claimed_bit);
            let per_index = oracle.powf(1.0 / n as f64);
            let derivation = format!(
                "Indices are independent. An index passes if its family does not certify the claimed bit, \
                 if the guessed kind makes no prediction there, or if Bob's product matches the prediction, \
                 which happens with probability (1 + s*E)/2 for prediction s and the committed state's \
                 closed-form correlation E, averaged over the committed kinds and (midpoint rule, {} points) \
                 over the free polar angle. Per-index pass probability q = sum_f w_f P(pass|f) = {per_index:.12}; \
                 acceptance = q^n = {oracle:.12}. With weight only on F1 and F4 the committed state shows no \
                 correlation at the checked family, so q = 1/2 + 1/2 * 1/2 = 3/4 and q^n = \
                 sum_K C(n,K) (1/2)^n (1/2)^K over the binomial checked count K. The figure (1/2)^(n/2) = \
                 {:.12} instead fixes K = n/2.",
                crate::attacks::POLAR_QUADRATURE_POINTS,
                fixed_half_count_bound(n),
            );
            (oracle, per_family, derivation)
        }
        CheatStrategy::EprDelayedChoice { .. } => (
            1.0,
            [1.0; 6],
            "Alice's measurement of the retained particle leaves Bob's pair in exactly the state she names, \
             so every tested product matches: acceptance probability 1."
                .to_string(),
        ),
    };
    let se = binomial_se(analytic_oracle, trials);
    let oracle_deviation_se = if se > 0.0 {
        (rate - analytic_oracle).abs() / se
    } else if rate == analytic_oracle {
        0.0
    } else {
        f64::INFINITY
    };
    CheatEstimate {
        strategy,
        n,
        successes,
        trials,
        rate,
        wilson_95_interval: interval,
        analytic_oracle,
        oracle_in_interval: interval.0 <= analytic_oracle && analytic_oracle <= interval.1,
        oracle_deviation_se,
        paper_bound: fixed_half_count_bound(n),
        family_pass_probability,
        oracle_derivation,
        mean_checked_count: rows.iter().map(|r| r.checked_count as f64).sum::<f64>() / trials as f64,
        total_failures: rows.iter().map(|r| r.failures as u64).sum(),
    }
}

/// Runs `config.trials` attack sessions and compares the acceptance rate
/// with the analytic oracle and the fixed-count bound.
pub fn estimate_cheat_success(config: &ExperimentConfig, strategy: CheatStrategy) -> Result<CheatEstimate> {
    config.validate()?;
    let rows = cheat_rows(config, strategy)?;
    Ok(summarize_cheat(config, strategy, &rows))
}

/// Aggregate of honest sessions.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct HonestSummary {
    pub n: usize,
    pub trials: u64,
    pub accepted: u64,
    pub all_accepted: bool,
    pub sessions_with_bit_one: u64,
    pub mean_checked_fraction: f64,
    /// Sample standard error of the per-session checked fraction.
    pub checked_fraction_se: f64,
}

fn honest_rows(config: &ExperimentConfig, lambda: Option<Bit>) -> Result<(Vec<TrialRow>, u64)> {
    let rows = run_indexed(config.trials, config.threads, |trial_index| {
        let mut r = rng::stream(config.master_seed, trial_index);
        let bit = lambda.unwrap_or_else(|| Bit::from(r.random::<bool>()));
        let s = run_honest_session_with(bit, config.n, &config.family_weights, &mut r)?;
        Ok((
            TrialRow {
                trial_index,
                accepted: s.verdict.accepted,
                checked_count: s.verdict.checked_count,
                failures: s.verdict.failures.len(),
            },
            bit,
        ))
    })?;
    let ones = rows.iter().filter(|(_, b)| *b == Bit::One).count() as u64;
    Ok((rows.into_iter().map(|(r, _)| r).collect(), ones))
}

fn summarize_honest(config: &ExperimentConfig, rows: &[TrialRow], ones: u64) -> HonestSummary {
    let trials = rows.len() as u64;
    let accepted = rows.iter().filter(|r| r.accepted).count() as u64;
    let fractions: Vec<f64> = rows.iter().map(|r| r.checked_count as f64 / config.n as f64).collect();
    let mean = fractions.iter().sum::<f64>() / trials as f64;
    let var = if trials > 1 {
        fractions.iter().map(|f| (f - mean).powi(2)).sum::<f64>() / (trials - 1) as f64
    } else {
        0.0
    };
    HonestSummary {
        n: config.n,
        trials,
        accepted,
        all_accepted: accepted == trials,
        sessions_with_bit_one: ones,
        mean_checked_fraction: mean,
        checked_fraction_se: (var / trials as f64).sqrt(),
    }
}

/// Runs honest sessions and reports acceptance and checked-count statistics.
pub fn honest_summary(config: &ExperimentConfig) -> Result<HonestSummary> {
    config.validate()?;
    let lambda = match config.experiment {
        ExperimentKind::Honest { lambda } => lambda,
        _ => None,
    };
    let (rows, ones) = honest_rows(config, lambda)?;
    Ok(summarize_honest(config, &rows, ones))
}

/// Exact comparison of the two commitment mixtures.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExactMixtureComparison {
    pub bit_one_mixture: MatrixParts,
    pub bit_zero_mixture: MatrixParts,
    pub max_abs_diff: f64,
    pub within_tolerance: bool,
}

/// Sampled outcome statistics for one family at fixed axes.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FamilySampleComparison {
    pub family: ConstraintFamily,
    pub theta1: f64,
    pub phi1: f64,
    pub theta2: f64,
    pub phi2: f64,
    pub samples_per_bit: u64,
    /// Joint counts in the order (+1,+1), (+1,−1), (−1,+1), (−1,−1).
    pub counts_bit_zero: [u64; 4],
    pub counts_bit_one: [u64; 4],
    pub chi_square: ChiSquareTest,
    pub p_plus_bit_zero: f64,
    pub p_plus_bit_one: f64,
    /// `(1 + cosθ₁cosθ₂)/2`.
    pub expected_p_plus: f64,
    pub standard_error: f64,
    /// Largest distance of either empirical p(+1) from the expectation, in standard errors.
    pub max_deviation_se: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct IndistinguishabilityReport {
    pub exact: ExactMixtureComparison,
    pub families: Vec<FamilySampleComparison>,
    pub min_p_value: f64,
}

/// Axes used for each family in the sampled comparison.
pub fn representative_entry(family: ConstraintFamily) -> BasisEntry {
    BasisEntry::from_parameters(family, 60.0, 30.0).expect("representative angles satisfy every family")
}

fn exact_comparison() -> Result<ExactMixtureComparison> {
    let mixture = |bit| {
        let states: Vec<_> = CommitmentStateKind::for_bit(bit)
            .iter()
            .map(|k| (commitment_state(*k), 0.5))
            .collect();
        mixture_density(&states)
    };
    let one = mixture(Bit::One)?;
    let zero = mixture(Bit::Zero)?;
    let max_abs_diff = one.max_abs_diff(&zero);
    Ok(ExactMixtureComparison {
        bit_one_mixture: one.to_parts(),
        bit_zero_mixture: zero.to_parts(),
        max_abs_diff,
        within_tolerance: max_abs_diff < EXACT_MIXTURE_TOL,
    })
}

fn pair_index(m1: Outcome, m2: Outcome) -> usize {
    2 * m1.index() + m2.index()
}

/// Exact mixture equality plus sampled outcome statistics per family for
/// both committed bits. `config.trials` samples per (family, bit).
pub fn indistinguishability_report(config: &ExperimentConfig) -> Result<IndistinguishabilityReport> {
    config.validate()?;
    let exact = exact_comparison()?;
    let chunks = config.trials.div_ceil(SAMPLE_CHUNK);
    let tasks = 12 * chunks;
    let partial = run_indexed(tasks, config.threads, |task| {
        let (cell, chunk) = (task / chunks, task % chunks);
        let family = ConstraintFamily::ALL[(cell / 2) as usize];
        let bit = if cell % 2 == 0 { Bit::Zero } else { Bit::One };
        let entry = representative_entry(family);
        let mut r = rng::stream(config.master_seed, (cell << 40) | chunk);
        let samples = SAMPLE_CHUNK.min(config.trials - chunk * SAMPLE_CHUNK);
        let mut counts = [0u64; 4];
        for _ in 0..samples {
            let (_, channel) = alice_commit(bit, 1, &mut r)?;
            let (pair, _) = measure_pair(&channel[0], &entry, &mut r)?;
            counts[pair_index(pair.m1, pair.m2)] += 1;
        }
        Ok((cell as usize, counts))
    })?;
    let mut totals = [[0u64; 4]; 12];
    for (cell, counts) in partial {
        totals[cell].iter_mut().zip(counts).for_each(|(t, c)| *t += c);
    }

    let n = config.trials;
    let families: Vec<_> = ConstraintFamily::ALL
        .iter()
        .map(|&family| {
            let entry = representative_entry(family);
            let zero = totals[2 * family.index()];
            let one = totals[2 * family.index() + 1];
            let p_plus = |c: [u64; 4]| (c[0] + c[3]) as f64 / n as f64;
            let expected = (1.0 + cos_deg(entry.a().theta()) * cos_deg(entry.b().theta())) / 2.0;
            let se = binomial_se(expected, n);
            let deviation = |p: f64| if se > 0.0 { (p - expected).abs() / se } else { 0.0 };
            FamilySampleComparison {
                family,
                theta1: entry.a().theta(),
                phi1: entry.a().phi(),
                theta2: entry.b().theta(),
                phi2: entry.b().phi(),
                samples_per_bit: n,
                counts_bit_zero: zero,
                counts_bit_one: one,
                chi_square: chi_square_homogeneity(&[zero.to_vec(), one.to_vec()]),
                p_plus_bit_zero: p_plus(zero),
                p_plus_bit_one: p_plus(one),
                expected_p_plus: expected,
                standard_error: se,
                max_deviation_se: deviation(p_plus(zero)).max(deviation(p_plus(one))),
            }
        })
        .collect();
    let min_p_value = families.iter().map(|f| f.chi_square.p_value).fold(1.0, f64::min);
    Ok(IndistinguishabilityReport {
        exact,
        families,
        min_p_value,
    })
}

/// Polar and azimuthal sample points, in degrees.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AxisGrid {
    pub thetas: Vec<f64>,
    pub phis: Vec<f64>,
}

impl AxisGrid {
    pub fn new(thetas: Vec<f64>, phis: Vec<f64>) -> Result<Self> {
        if thetas.is_empty() || phis.is_empty() {
            return Err(Error::InvalidParameter("axis grid must be nonempty".into()));
        }
        for &t in &thetas {
            for &p in &phis {
                MeasurementAxis::new(t, p)?;
            }
        }
        Ok(AxisGrid { thetas, phis })
    }

    /// `steps` polar angles spanning [0°, 180°] and `steps` azimuths
    /// evenly spaced over [0°, 360°).
    pub fn uniform(steps: usize) -> Result<Self> {
        if steps == 0 {
            return Err(Error::InvalidParameter("axis grid must be nonempty".into()));
        }
        let thetas = if steps == 1 {
            vec![0.0]
        } else {
            (0..steps).map(|k| 180.0 * k as f64 / (steps - 1) as f64).collect()
        };
        let phis = (0..steps).map(|k| 360.0 * k as f64 / steps as f64).collect();
        Self::new(thetas, phis)
    }

    pub fn axes(&self) -> Vec<MeasurementAxis> {
        self.thetas
            .iter()
            .flat_map(|&t| {
                self.phis
                    .iter()
                    .map(move |&p| MeasurementAxis::new(t, p).expect("validated grid"))
            })
            .collect()
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CorrelationRow {
    pub kind: CommitmentStateKind,
    pub theta1: f64,
    pub phi1: f64,
    pub theta2: f64,
    pub phi2: f64,
    pub closed_form: f64,
    pub born_rule: f64,
    pub abs_diff: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CorrelationTable {
    pub rows: Vec<CorrelationRow>,
    pub max_abs_diff: f64,
    pub within_tolerance: bool,
}

/// Closed-form against projector-branch correlations for every kind and
/// every pair of grid axes.
pub fn correlation_table(grid: &AxisGrid) -> Result<CorrelationTable> {
    let axes = grid.axes();
    let mut rows = Vec::with_capacity(4 * axes.len() * axes.len());
    for kind in CommitmentStateKind::ALL {
        let state = commitment_state(kind);
        for a in &axes {
            for b in &axes {
                let closed_form = closed_form_correlation(kind, a, b).value;
                let born_rule = branch_sum_correlation(&state, a, b)?;
                rows.push(CorrelationRow {
                    kind,
                    theta1: a.theta(),
                    phi1: a.phi(),
                    theta2: b.theta(),
                    phi2: b.phi(),
                    closed_form,
                    born_rule,
                    abs_diff: (closed_form - born_rule).abs(),
                });
            }
        }
    }
    let max_abs_diff = rows.iter().map(|r| r.abs_diff).fold(0.0, f64::max);
    Ok(CorrelationTable {
        rows,
        max_abs_diff,
        within_tolerance: max_abs_diff < CORRELATION_TOL,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize)]
#[serde(untagged)]
pub enum ExperimentResults {
    Honest(HonestSummary),
    Cheat(CheatEstimate),
    Indistinguishability(IndistinguishabilityReport),
    CorrelationTable(CorrelationTable),
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct BuildInfo {
    pub name: &'static str,
    pub version: &'static str,
}

impl BuildInfo {
    pub fn current() -> Self {
        BuildInfo {
            name: env!("CARGO_PKG_NAME"),
            version: env!("CARGO_PKG_VERSION"),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Report {
    pub config: ExperimentConfig,
    pub results: ExperimentResults,
    /// Wall-clock time; `null` under stable output.
    pub runtime_ms: Option<u64>,
    pub build_info: BuildInfo,
}

impl Report {
    pub fn to_json(&self) -> Result<String> {
        let mut text = serde_json::to_string_pretty(self)?;
        text.push('\n');
        Ok(text)
    }
}

fn create(path: &Path) -> Result<File> {
    File::create(path).map_err(|source| Error::Io {
        path: path.to_owned(),
        source,
    })
}

fn write_csv(file: File, path: &Path, rows: &[TrialRow]) -> Result<()> {
    let mut w = csv::Writer::from_writer(file);
    for row in rows {
        w.serialize(row)?;
    }
    w.flush().map_err(|source| Error::Io {
        path: path.to_owned(),
        source,
    })
}

/// Runs the configured experiment, writes the report (and per-trial CSV
/// where applicable) to the configured paths, and returns the report.
pub fn run_experiment(config: &ExperimentConfig) -> Result<Report> {
    config.validate()?;
    let report_file = config
        .output
        .as_deref()
        .map(|p| create(p).map(|f| (f, p)))
        .transpose()?;
    let csv_file = config.csv.as_deref().map(|p| create(p).map(|f| (f, p))).transpose()?;

    let start = Instant::now();
    let (results, rows) = match config.experiment {
        ExperimentKind::Honest { lambda } => {
            let (rows, ones) = honest_rows(config, lambda)?;
            (
                ExperimentResults::Honest(summarize_honest(config, &rows, ones)),
                Some(rows),
            )
        }
        ExperimentKind::NaiveCheat { .. } | ExperimentKind::EprAttack { .. } => {
            let strategy = config.strategy().expect("cheat experiments carry a strategy");
            let rows = cheat_rows(config, strategy)?;
            (
                ExperimentResults::Cheat(summarize_cheat(config, strategy, &rows)),
                Some(rows),
            )
        }
        ExperimentKind::Indistinguishability => (
            ExperimentResults::Indistinguishability(indistinguishability_report(config)?),
            None,
        ),
        ExperimentKind::CorrelationTable { grid_steps } => (
            ExperimentResults::CorrelationTable(correlation_table(&AxisGrid::uniform(grid_steps)?)?),
            None,
        ),
    };
    let runtime_ms = (!config.stable_output).then(|| start.elapsed().as_millis() as u64);
    let report = Report {
        config: config.clone(),
        results,
        runtime_ms,
        build_info: BuildInfo::current(),
    };

    if let Some((mut file, path)) = report_file {
        file.write_all(report.to_json()?.as_bytes())
            .map_err(|source| Error::Io {
                path: path.to_owned(),
                source,
            })?;
    }
    if let Some((file, path)) = csv_file {
        write_csv(file, path, rows.as_deref().unwrap_or_default())?;
    }
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn config(kind: ExperimentKind, n: usize, trials: u64) -> ExperimentConfig {
        ExperimentConfig::new(kind, n, trials, FamilyWeights::uniform(), 5)
    }

    #[test]
    fn config_validation() {
        assert!(config(ExperimentKind::Honest { lambda: None }, 0, 10)
            .validate()
            .is_err());
        assert!(config(ExperimentKind::Honest { lambda: None }, 3, 0)
            .validate()
            .is_err());
        let same = ExperimentKind::NaiveCheat {
            committed_bit: Bit::One,
            claimed_bit: Bit::One,
        };
        assert!(config(same, 3, 10).validate().is_err());
        assert!(config(ExperimentKind::CorrelationTable { grid_steps: 0 }, 1, 1)
            .validate()
            .is_err());
    }

    #[test]
    fn honest_experiment_accepts_everything() {
        let report = run_experiment(&config(ExperimentKind::Honest { lambda: None }, 20, 100)).unwrap();
        let ExperimentResults::Honest(s) = report.results else {
            panic!("wrong results")
        };
        assert_eq!(s.accepted, 100);
        assert!(s.all_accepted);
    }

    #[test]
    fn epr_estimate_is_certain() {
        let c = config(ExperimentKind::EprAttack { claimed_bit: Bit::Zero }, 8, 200);
        let e = estimate_cheat_success(&c, CheatStrategy::epr(Bit::Zero)).unwrap();
        assert_eq!(e.rate, 1.0);
        assert_eq!(e.total_failures, 0);
        assert_eq!(e.oracle_deviation_se, 0.0);
    }

    #[test]
    fn grid_shapes() {
        let g = AxisGrid::uniform(5).unwrap();
        assert_eq!(g.thetas, vec![0.0, 45.0, 90.0, 135.0, 180.0]);
        assert_eq!(g.phis, vec![0.0, 72.0, 144.0, 216.0, 288.0]);
        assert!(AxisGrid::new(vec![], vec![0.0]).is_err());
        assert!(AxisGrid::new(vec![200.0], vec![0.0]).is_err());
    }

    #[test]
    fn correlation_table_at_poles_and_f4() {
        let grid = AxisGrid::new(vec![0.0, 90.0], vec![0.0, 45.0]).unwrap();
        let table = correlation_table(&grid).unwrap();
        assert!(table.within_tolerance);
        for row in table
            .rows
            .iter()
            .filter(|r| r.theta1 == 0.0 && r.theta2 == 0.0 && r.phi1 == 0.0 && r.phi2 == 0.0)
        {
            assert!((row.closed_form - 1.0).abs() < 1e-15);
        }
        // θ = θ' = 90°, φ + φ' = 90°.
        let f4 = |kind| {
            table
                .rows
                .iter()
                .find(|r| r.kind == kind && r.theta1 == 90.0 && r.theta2 == 90.0 && r.phi1 == 45.0 && r.phi2 == 45.0)
                .unwrap()
                .born_rule
        };
        assert!((f4(CommitmentStateKind::PsiPlus) - 1.0).abs() < 1e-12);
        assert!((f4(CommitmentStateKind::PsiMinus) + 1.0).abs() < 1e-12);
    }

    #[test]
    fn representative_entries_are_valid() {
        for f in ConstraintFamily::ALL {
            let e = representative_entry(f);
            assert_eq!(e.family(), f);
        }
        let f2 = representative_entry(ConstraintFamily::F2);
        assert_eq!((f2.a().theta(), f2.b().theta()), (60.0, 60.0));
    }

    #[test]
    fn unwritable_output_names_path() {
        let mut c = config(ExperimentKind::Honest { lambda: None }, 2, 1);
        c.output = Some(PathBuf::from("/nonexistent-dir/report.json"));
        let err = run_experiment(&c).unwrap_err();
        assert!(matches!(err, Error::Io { .. }));
        assert!(err.to_string().contains("/nonexistent-dir/report.json"));
    }
}
