//! `eprbc`: run EPR bit commitment sessions, attacks and experiments.
//!
//! Exit status: 0 on success or acceptance, 1 when Bob rejects (or a stored
//! transcript does not re-verify), 2 on usage, input or I/O errors.

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use eprbc::attacks::{epr_attack_session, naive_cheat_session, CheatStrategy};
use eprbc::epr::Bit;
use eprbc::harness::{run_experiment, ExperimentConfig, ExperimentKind, ExperimentResults, Report};
use eprbc::protocol::{run_honest_session, FamilyWeights, Verdict};
use eprbc::transcript::Transcript;
use eprbc::{rng, Error};

const ACCEPT: u8 = 0;
const REJECT: u8 = 1;
const USAGE: u8 = 2;

#[derive(Parser)]
#[command(
    name = "eprbc",
    version,
    about = "Simulate an EPR-pair quantum bit commitment protocol, its honest sessions and its attacks",
    after_help = "All measurement angles are in degrees: polar angle θ in [0, 180] from the z axis, \
                  azimuth φ in [0, 360) from the x axis.\n\
                  Exit status: 0 accepted/success, 1 rejected, 2 usage or I/O error."
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run one honest commit/open session (or, with --trials, a batch of them)
    Session(SessionArgs),
    /// Estimate how often a naive bit-substituting Alice is accepted
    Cheat(CheatArgs),
    /// Run the delayed-choice EPR attack and report its acceptance rate
    Attack(AttackArgs),
    /// Check that Bob's pre-opening statistics do not depend on the committed bit
    Indist(IndistArgs),
    /// Compare closed-form and Born-rule spin correlations on an axis grid
    CorrTable(CorrArgs),
    /// Re-run Bob's verification on a stored transcript
    VerifyTranscript(VerifyArgs),
}

#[derive(Args)]
struct RunArgs {
    /// Master seed; every random draw derives from it
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Write the JSON report (or transcript) to this path
    #[arg(long, value_name = "PATH")]
    output: Option<PathBuf>,
    /// Leave wall-clock timing out of reports so reruns are byte-identical
    #[arg(long)]
    stable_output: bool,
    /// Worker threads for batched trials (1 runs serially; default: all cores)
    #[arg(long, value_name = "INT", value_parser = clap::value_parser!(u64).range(1..))]
    threads: Option<u64>,
}

#[derive(Args)]
struct FamilyArg {
    /// Bob's family weights: a preset (uniform | f1f4) or six comma-separated weights for F1..F6
    #[arg(long, value_name = "PRESET|w1,...,w6", default_value = "uniform", value_parser = parse_families)]
    families: FamilyWeights,
}

#[derive(Args)]
struct SessionArgs {
    /// Bit Alice commits to
    #[arg(long, value_parser = parse_bit)]
    lambda: Bit,
    /// Security parameter: number of EPR pairs
    #[arg(long, value_parser = clap::value_parser!(u64).range(1..))]
    n: u64,
    /// Run this many independent sessions and write an aggregate report instead of a transcript
    #[arg(long, value_parser = clap::value_parser!(u64).range(1..))]
    trials: Option<u64>,
    /// Per-trial CSV (trial_index, accepted, checked_count) for batched runs
    #[arg(long, value_name = "PATH")]
    csv: Option<PathBuf>,
    #[command(flatten)]
    families: FamilyArg,
    #[command(flatten)]
    run: RunArgs,
}

#[derive(Args)]
struct CheatArgs {
    /// Security parameter: number of EPR pairs per session
    #[arg(long, value_parser = clap::value_parser!(u64).range(1..))]
    n: u64,
    /// Number of independent sessions
    #[arg(long, default_value_t = 1000, value_parser = clap::value_parser!(u64).range(1..))]
    trials: u64,
    /// Bit Alice actually commits to
    #[arg(long, value_parser = parse_bit)]
    committed_bit: Option<Bit>,
    /// Bit Alice claims at opening (default: the other bit)
    #[arg(long, value_parser = parse_bit)]
    claimed_bit: Option<Bit>,
    /// Per-trial CSV (trial_index, accepted, checked_count)
    #[arg(long, value_name = "PATH")]
    csv: Option<PathBuf>,
    /// Also write the transcript of trial 0 to this path
    #[arg(long, value_name = "PATH")]
    transcript: Option<PathBuf>,
    #[command(flatten)]
    families: FamilyArg,
    #[command(flatten)]
    run: RunArgs,
}

#[derive(Args)]
struct AttackArgs {
    /// Bit Alice pretends to have committed to
    #[arg(long, value_parser = parse_bit)]
    claimed_bit: Bit,
    /// Security parameter: number of EPR pairs per session
    #[arg(long, value_parser = clap::value_parser!(u64).range(1..))]
    n: u64,
    /// Number of independent sessions
    #[arg(long, default_value_t = 1000, value_parser = clap::value_parser!(u64).range(1..))]
    trials: u64,
    /// Per-trial CSV (trial_index, accepted, checked_count)
    #[arg(long, value_name = "PATH")]
    csv: Option<PathBuf>,
    /// Also write the transcript of trial 0 to this path
    #[arg(long, value_name = "PATH")]
    transcript: Option<PathBuf>,
    #[command(flatten)]
    families: FamilyArg,
    #[command(flatten)]
    run: RunArgs,
}

#[derive(Args)]
struct IndistArgs {
    /// Samples per committed bit and family
    #[arg(long, default_value_t = 100_000, value_parser = clap::value_parser!(u64).range(1..))]
    trials: u64,
    #[command(flatten)]
    run: RunArgs,
}

#[derive(Args)]
struct CorrArgs {
    /// Points per angle: polar angles span 0–180°, azimuths are spaced evenly over 0–360°
    #[arg(long, default_value_t = 5, value_parser = clap::value_parser!(u64).range(1..))]
    grid: u64,
    #[command(flatten)]
    run: RunArgs,
}

#[derive(Args)]
struct VerifyArgs {
    /// Transcript JSON file
    path: PathBuf,
}

fn parse_bit(s: &str) -> Result<Bit, String> {
    match s {
        "0" => Ok(Bit::Zero),
        "1" => Ok(Bit::One),
        _ => Err(format!("expected 0 or 1, got {s:?}")),
    }
}

fn parse_families(s: &str) -> Result<FamilyWeights, String> {
    FamilyWeights::parse(s).map_err(|e| e.to_string())
}

fn experiment(kind: ExperimentKind, n: u64, trials: u64, weights: FamilyWeights, run: &RunArgs) -> ExperimentConfig {
    let mut config = ExperimentConfig::new(kind, n as usize, trials, weights, run.seed);
    config.output = run.output.clone();
    config.stable_output = run.stable_output;
    config.threads = run.threads.map(|t| t as usize);
    config
}

fn print_verdict(verdict: &Verdict, n: usize) {
    println!(
        "accepted={} checked={}/{} failures={}",
        verdict.accepted,
        verdict.checked_count,
        n,
        verdict.failures.len()
    );
    for f in &verdict.failures {
        match f.expected_product {
            Some(expected) => println!(
                "  failure at index {}: expected product {expected}, observed {}",
                f.index, f.observed_product
            ),
            None => println!(
                "  failure at index {}: revealed kind does not encode the claimed bit",
                f.index
            ),
        }
    }
}

fn print_report(report: &Report) {
    match &report.results {
        ExperimentResults::Honest(s) => println!(
            "trials={} accepted={} all_accepted={} mean_checked_fraction={:.6} (se {:.6})",
            s.trials, s.accepted, s.all_accepted, s.mean_checked_fraction, s.checked_fraction_se
        ),
        ExperimentResults::Cheat(e) => {
            println!(
                "rate={:.6} successes={}/{} wilson95=[{:.6}, {:.6}]",
                e.rate, e.successes, e.trials, e.wilson_95_interval.0, e.wilson_95_interval.1
            );
            print!(
                "oracle={:.6} oracle_in_interval={}",
                e.analytic_oracle, e.oracle_in_interval
            );
            if let CheatStrategy::NaiveSubstitution { .. } = e.strategy {
                print!(" paper_bound={:.6}", e.paper_bound);
            }
            println!(" failures={}", e.total_failures);
        }
        ExperimentResults::Indistinguishability(r) => {
            println!(
                "exact mixture max |diff| = {:e} (within tolerance: {})",
                r.exact.max_abs_diff, r.exact.within_tolerance
            );
            for f in &r.families {
                println!(
                    "{}: chi2={:.4} dof={} p={:.4}  p(+1) bit0={:.5} bit1={:.5} expected={:.5} max_dev={:.2} se",
                    f.family,
                    f.chi_square.statistic,
                    f.chi_square.degrees_of_freedom,
                    f.chi_square.p_value,
                    f.p_plus_bit_zero,
                    f.p_plus_bit_one,
                    f.expected_p_plus,
                    f.max_deviation_se
                );
            }
        }
        ExperimentResults::CorrelationTable(t) => println!(
            "rows={} max |closed-form - Born| = {:e} (within tolerance: {})",
            t.rows.len(),
            t.max_abs_diff,
            t.within_tolerance
        ),
    }
}

fn write_first_transcript(
    path: &Path,
    n: usize,
    weights: FamilyWeights,
    seed: u64,
    strategy: CheatStrategy,
) -> Result<(), Error> {
    let mut r = rng::stream(seed, 0);
    let result = match strategy {
        CheatStrategy::NaiveSubstitution { .. } => naive_cheat_session(n, &weights, strategy, &mut r)?,
        CheatStrategy::EprDelayedChoice { claimed_bit } => epr_attack_session(n, &weights, claimed_bit, &mut r)?,
    };
    Transcript::from_session(seed, weights, &result.record, Some(strategy)).write(path)
}

fn run(command: Command) -> Result<u8, Error> {
    match command {
        Command::Session(args) => {
            let weights = args.families.families;
            if let Some(trials) = args.trials {
                let mut config = experiment(
                    ExperimentKind::Honest {
                        lambda: Some(args.lambda),
                    },
                    args.n,
                    trials,
                    weights,
                    &args.run,
                );
                config.csv = args.csv;
                let report = run_experiment(&config)?;
                print_report(&report);
                let ExperimentResults::Honest(s) = &report.results else {
                    unreachable!()
                };
                return Ok(if s.all_accepted { ACCEPT } else { REJECT });
            }
            let transcript = run_honest_session(args.lambda, args.n as usize, &weights, args.run.seed)?;
            print_verdict(&transcript.verdict, transcript.n);
            if let Some(path) = &args.run.output {
                transcript.write(path)?;
            }
            Ok(if transcript.verdict.accepted { ACCEPT } else { REJECT })
        }
        Command::Cheat(args) => {
            let committed = args
                .committed_bit
                .unwrap_or_else(|| args.claimed_bit.map_or(Bit::Zero, Bit::flipped));
            let claimed = args.claimed_bit.unwrap_or(committed.flipped());
            let strategy = CheatStrategy::naive(committed, claimed)?;
            let weights = args.families.families;
            let mut config = experiment(
                ExperimentKind::NaiveCheat {
                    committed_bit: committed,
                    claimed_bit: claimed,
                },
                args.n,
                args.trials,
                weights,
                &args.run,
            );
            config.csv = args.csv;
            let report = run_experiment(&config)?;
            if let Some(path) = &args.transcript {
                write_first_transcript(path, config.n, weights, config.master_seed, strategy)?;
            }
            print_report(&report);
            Ok(ACCEPT)
        }
        Command::Attack(args) => {
            let weights = args.families.families;
            let mut config = experiment(
                ExperimentKind::EprAttack {
                    claimed_bit: args.claimed_bit,
                },
                args.n,
                args.trials,
                weights,
                &args.run,
            );
            config.csv = args.csv;
            let report = run_experiment(&config)?;
            if let Some(path) = &args.transcript {
                write_first_transcript(
                    path,
                    config.n,
                    weights,
                    config.master_seed,
                    CheatStrategy::epr(args.claimed_bit),
                )?;
            }
            print_report(&report);
            Ok(ACCEPT)
        }
        Command::Indist(args) => {
            let config = experiment(
                ExperimentKind::Indistinguishability,
                1,
                args.trials,
                FamilyWeights::uniform(),
                &args.run,
            );
            let report = run_experiment(&config)?;
            print_report(&report);
            Ok(ACCEPT)
        }
        Command::CorrTable(args) => {
            let config = experiment(
                ExperimentKind::CorrelationTable {
                    grid_steps: args.grid as usize,
                },
                1,
                1,
                FamilyWeights::uniform(),
                &args.run,
            );
            let report = run_experiment(&config)?;
            print_report(&report);
            Ok(ACCEPT)
        }
        Command::VerifyTranscript(args) => {
            let transcript = Transcript::read(&args.path)?;
            let check = transcript.check()?;
            print_verdict(&check.recomputed, transcript.n);
            println!("matches_stored={}", check.matches_stored);
            Ok(if check.passed() { ACCEPT } else { REJECT })
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli.command) {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(USAGE)
        }
    }
}
