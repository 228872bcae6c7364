//! Cheating-Alice strategies.
//!
//! * Naive substitution: Alice commits honestly to one bit and later claims
//!   the other, guessing a kind for every index without knowing Bob's results.
//! * Delayed choice: Alice sends particles 1–2 of a GHZ triple and keeps the
//!   third. At opening she measures it along x (to claim bit 1) or y (to
//!   claim bit 0), which steers every pair Bob holds into a state of the
//!   claimed kind. Bob's checks then pass with certainty.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::epr::{closed_form_correlation, ghz_state, Bit, CommitmentStateKind};
use crate::error::{Error, Result};
use crate::protocol::{
    alice_commit, bob_measure, bob_measure_collapsing, bob_verify, expected_product, generate_basis_vector, BasisEntry,
    ConstraintFamily, FamilyWeights, RevealMessage, SessionRecord, Verdict,
};
use crate::quantum::{measure_qubit, MeasurementAxis, Outcome, StateVector};

/// Midpoint-rule resolution for averaging over the free polar angle.
pub const POLAR_QUADRATURE_POINTS: usize = 10_000;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum CheatStrategy {
    NaiveSubstitution { committed_bit: Bit, claimed_bit: Bit },
    EprDelayedChoice { claimed_bit: Bit },
}

impl CheatStrategy {
    /// Substitution strategy; the two bits must differ.
    pub fn naive(committed_bit: Bit, claimed_bit: Bit) -> Result<Self> {
        let s = CheatStrategy::NaiveSubstitution {
            committed_bit,
            claimed_bit,
        };
        s.validate()?;
        Ok(s)
    }

    pub fn epr(claimed_bit: Bit) -> Self {
        CheatStrategy::EprDelayedChoice { claimed_bit }
    }

    pub fn validate(&self) -> Result<()> {
        match self {
            CheatStrategy::NaiveSubstitution {
                committed_bit,
                claimed_bit,
            } if committed_bit == claimed_bit => Err(Error::InvalidParameter(format!(
                "naive substitution needs different committed and claimed bits (both are {claimed_bit})"
            ))),
            _ => Ok(()),
        }
    }

    pub fn claimed_bit(&self) -> Bit {
        match *self {
            CheatStrategy::NaiveSubstitution { claimed_bit, .. } | CheatStrategy::EprDelayedChoice { claimed_bit } => {
                claimed_bit
            }
        }
    }
}

/// A finished attack session.
#[derive(Clone, Debug, PartialEq)]
pub struct AttackSessionResult {
    pub strategy: CheatStrategy,
    pub record: SessionRecord,
}

impl AttackSessionResult {
    pub fn accepted(&self) -> bool {
        self.record.verdict.accepted
    }

    pub fn checked_count(&self) -> usize {
        self.record.verdict.checked_count
    }

    pub fn verdict(&self) -> &Verdict {
        &self.record.verdict
    }
}

/// Honest commitment to `committed_bit`, then an opening that claims
/// `claimed_bit` with uniformly guessed kinds.
pub fn naive_cheat_session<R: Rng + ?Sized>(
    n: usize,
    weights: &FamilyWeights,
    strategy: CheatStrategy,
    rng: &mut R,
) -> Result<AttackSessionResult> {
    let CheatStrategy::NaiveSubstitution {
        committed_bit,
        claimed_bit,
    } = strategy
    else {
        return Err(Error::InvalidParameter(
            "naive_cheat_session needs a naive substitution strategy".into(),
        ));
    };
    strategy.validate()?;
    let (commitment, channel) = alice_commit(committed_bit, n, rng)?;
    let basis = generate_basis_vector(n, weights, rng)?;
    let outcomes = bob_measure(&channel, &basis, rng)?;
    let choices = CommitmentStateKind::for_bit(claimed_bit);
    let kinds = (0..n).map(|_| choices[usize::from(rng.random::<bool>())]).collect();
    let reveal = RevealMessage {
        lambda: claimed_bit,
        kinds,
    };
    let verdict = bob_verify(&reveal, &basis, &outcomes)?;
    Ok(AttackSessionResult {
        strategy,
        record: SessionRecord {
            commitment: Some(commitment),
            basis,
            outcomes,
            reveal,
            verdict,
        },
    })
}

/// Alice's opening move for one retained particle: measure qubit 3 along x
/// (claiming bit 1) or y (claiming bit 0) and name the kind the pair was
/// steered into.
///
/// x: +1 → |Φ⟩, −1 → |Φ'⟩. y: +1 → |Ψ'⟩, −1 → |Ψ⟩.
pub fn delayed_choice_claim<R: Rng + ?Sized>(
    state: &StateVector,
    claimed_bit: Bit,
    rng: &mut R,
) -> Result<(CommitmentStateKind, Outcome)> {
    if state.qubit_count() != 3 {
        return Err(Error::QubitCount(state.qubit_count()));
    }
    let axis = match claimed_bit {
        Bit::One => MeasurementAxis::X,
        Bit::Zero => MeasurementAxis::Y,
    };
    let (outcome, _) = measure_qubit(state, 3, &axis, rng)?;
    Ok((steered_kind(claimed_bit, outcome), outcome))
}

/// Kind of the pair after Alice's qubit-3 result in the basis for `claimed_bit`.
pub fn steered_kind(claimed_bit: Bit, outcome: Outcome) -> CommitmentStateKind {
    use CommitmentStateKind::*;
    match (claimed_bit, outcome) {
        (Bit::One, Outcome::Plus) => PhiPlus,
        (Bit::One, Outcome::Minus) => PhiMinus,
        (Bit::Zero, Outcome::Plus) => PsiMinus,
        (Bit::Zero, Outcome::Minus) => PsiPlus,
    }
}

/// The delayed-choice attack end to end. Bob measures first; Alice decides
/// what to claim only at opening.
pub fn epr_attack_session<R: Rng + ?Sized>(
    n: usize,
    weights: &FamilyWeights,
    claimed_bit: Bit,
    rng: &mut R,
) -> Result<AttackSessionResult> {
    let basis = generate_basis_vector(n, weights, rng)?;
    let channel = vec![ghz_state(); n];
    let (outcomes, shared) = bob_measure_collapsing(channel, &basis, rng)?;
    let kinds = shared
        .iter()
        .map(|s| delayed_choice_claim(s, claimed_bit, rng).map(|(k, _)| k))
        .collect::<Result<_>>()?;
    let reveal = RevealMessage {
        lambda: claimed_bit,
        kinds,
    };
    let verdict = bob_verify(&reveal, &basis, &outcomes)?;
    Ok(AttackSessionResult {
        strategy: CheatStrategy::epr(claimed_bit),
        record: SessionRecord {
            commitment: None,
            basis,
            outcomes,
            reveal,
            verdict,
        },
    })
}

/// Probability that one index passes Bob's check when Alice committed to
/// `committed_bit` and claims `claimed_bit` with a uniformly guessed kind,
/// given the index's family. Uses the closed-form correlations and averages
/// free polar angles with a midpoint rule.
pub fn naive_index_pass_probability(family: ConstraintFamily, committed_bit: Bit, claimed_bit: Bit) -> f64 {
    if family.certified_bit() != claimed_bit {
        return 1.0;
    }
    let thetas: Vec<f64> = if family.has_free_polar() {
        let step = 180.0 / POLAR_QUADRATURE_POINTS as f64;
        (0..POLAR_QUADRATURE_POINTS).map(|k| (k as f64 + 0.5) * step).collect()
    } else {
        vec![90.0]
    };
    let mut total = 0.0;
    for claimed in CommitmentStateKind::for_bit(claimed_bit) {
        let Some(expected) = expected_product(claimed, family) else {
            total += 0.5;
            continue;
        };
        let sign = f64::from(expected.value());
        for actual in CommitmentStateKind::for_bit(committed_bit) {
            let mean: f64 = thetas
                .iter()
                .map(|&theta| {
                    let entry = BasisEntry::from_parameters(family, theta, 0.0).expect("valid quadrature angle");
                    (1.0 + sign * closed_form_correlation(actual, entry.a(), entry.b()).value) / 2.0
                })
                .sum::<f64>()
                / thetas.len() as f64;
            total += 0.25 * mean;
        }
    }
    total
}

/// Exact acceptance probability of a naive substitution over `n` independent
/// indices.
pub fn naive_acceptance_oracle(n: usize, weights: &FamilyWeights, committed_bit: Bit, claimed_bit: Bit) -> f64 {
    let per_index: f64 = ConstraintFamily::ALL
        .iter()
        .filter(|f| weights.get(**f) > 0.0)
        .map(|f| weights.get(*f) * naive_index_pass_probability(*f, committed_bit, claimed_bit))
        .sum();
    per_index.powi(n as i32)
}

/// `(1/2)^(n/2)`: the bound obtained by assuming exactly half the indices are
/// checked and each passes with probability 1/2.
pub fn fixed_half_count_bound(n: usize) -> f64 {
    0.5f64.powf(n as f64 / 2.0)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::epr::commitment_state;
    use crate::quantum::{basis_expansion, sequence_probability};
    use crate::rng;
    use ConstraintFamily::*;

    #[test]
    fn strategy_validation() {
        assert!(CheatStrategy::naive(Bit::One, Bit::One).is_err());
        assert!(CheatStrategy::naive(Bit::Zero, Bit::One).is_ok());
        let mut r = rng::from_seed(1);
        assert!(naive_cheat_session(3, &FamilyWeights::uniform(), CheatStrategy::epr(Bit::One), &mut r).is_err());
        let bad = CheatStrategy::NaiveSubstitution {
            committed_bit: Bit::Zero,
            claimed_bit: Bit::Zero,
        };
        assert!(naive_cheat_session(3, &FamilyWeights::uniform(), bad, &mut r).is_err());
    }

    #[test]
    fn strategy_serde() {
        let s = CheatStrategy::naive(Bit::Zero, Bit::One).unwrap();
        let text = serde_json::to_string(&s).unwrap();
        assert_eq!(
            text,
            r#"{"type":"naive_substitution","committed_bit":0,"claimed_bit":1}"#
        );
        assert_eq!(serde_json::from_str::<CheatStrategy>(&text).unwrap(), s);
    }

    #[test]
    fn claim_mapping_on_fresh_ghz() {
        let mut r = rng::from_seed(2);
        for _ in 0..200 {
            let (k, o) = delayed_choice_claim(&ghz_state(), Bit::One, &mut r).unwrap();
            assert_eq!(
                k,
                if o == Outcome::Plus {
                    CommitmentStateKind::PhiPlus
                } else {
                    CommitmentStateKind::PhiMinus
                }
            );
            let (k, o) = delayed_choice_claim(&ghz_state(), Bit::Zero, &mut r).unwrap();
            assert_eq!(
                k,
                if o == Outcome::Plus {
                    CommitmentStateKind::PsiMinus
                } else {
                    CommitmentStateKind::PsiPlus
                }
            );
        }
        assert!(delayed_choice_claim(&commitment_state(CommitmentStateKind::PhiPlus), Bit::One, &mut r).is_err());
    }

    #[test]
    fn claim_marginals_are_uniform() {
        // Qubit 3 of the GHZ state is maximally mixed along any axis.
        for axis in [MeasurementAxis::X, MeasurementAxis::Y] {
            let p = sequence_probability(&ghz_state(), &[(3, axis, Outcome::Plus)]).unwrap();
            assert!((p - 0.5).abs() < 1e-15);
        }
        let mut r = rng::from_seed(3);
        let trials = 10_000;
        let plus = (0..trials)
            .filter(|_| delayed_choice_claim(&ghz_state(), Bit::Zero, &mut r).unwrap().1 == Outcome::Plus)
            .count();
        assert!((plus as f64 - 5000.0).abs() < 4.0 * 50.0, "{plus}");
    }

    #[test]
    fn f1_branch_enumeration() {
        // Every branch (m1, m2, Alice's x result) with nonzero weight pairs
        // Bob's product with the product her claimed kind demands at F1.
        let entry = BasisEntry::from_parameters(F1, 0.0, 37.0).unwrap();
        let mut total = 0.0;
        for m1 in Outcome::BOTH {
            for m2 in Outcome::BOTH {
                for alice in Outcome::BOTH {
                    let p = sequence_probability(
                        &ghz_state(),
                        &[(1, *entry.a(), m1), (2, *entry.b(), m2), (3, MeasurementAxis::X, alice)],
                    )
                    .unwrap();
                    total += p;
                    let claimed = steered_kind(Bit::One, alice);
                    let expected = expected_product(claimed, F1).unwrap();
                    if expected != m1.times(m2) {
                        assert!(p < 1e-15, "inconsistent branch has probability {p}");
                    }
                }
            }
        }
        assert!((total - 1.0).abs() < 1e-12);
    }

    #[test]
    fn epr_attack_small_runs_accept() {
        let mut r = rng::from_seed(4);
        for claimed in [Bit::Zero, Bit::One] {
            for _ in 0..50 {
                let s = epr_attack_session(12, &FamilyWeights::uniform(), claimed, &mut r).unwrap();
                assert!(s.accepted(), "{:?}", s.verdict());
                assert!(s.record.commitment.is_none());
            }
        }
    }

    #[test]
    fn pass_probabilities() {
        let committed = Bit::Zero;
        let claimed = Bit::One;
        assert_eq!(naive_index_pass_probability(F4, committed, claimed), 1.0);
        assert!((naive_index_pass_probability(F1, committed, claimed) - 0.5).abs() < 1e-15);
        // Half the claims are untested at F2; the other half pass with mean (1+cos²θ)/2 = 3/4.
        assert!((naive_index_pass_probability(F2, committed, claimed) - 0.875).abs() < 1e-4);
        assert!((naive_index_pass_probability(F3, committed, claimed) - 0.875).abs() < 1e-4);
        assert!((naive_index_pass_probability(F5, Bit::One, Bit::Zero) - 0.875).abs() < 1e-4);
    }

    #[test]
    fn oracle_matches_binomial_sum() {
        // Σ_K C(n,K) (1/2)^n (1/2)^K over the binomial checked count.
        for n in [1usize, 2, 5, 10, 16] {
            let mut binom = 1.0f64;
            let mut sum = 0.0;
            for k in 0..=n {
                if k > 0 {
                    binom = binom * (n - k + 1) as f64 / k as f64;
                }
                sum += binom * 0.5f64.powi(n as i32) * 0.5f64.powi(k as i32);
            }
            let oracle = naive_acceptance_oracle(n, &FamilyWeights::f1_f4(), Bit::Zero, Bit::One);
            assert!((oracle - sum).abs() < 1e-14, "n={n}: {oracle} vs {sum}");
        }
        assert!((naive_acceptance_oracle(2, &FamilyWeights::f1_f4(), Bit::One, Bit::Zero) - 0.5625).abs() < 1e-15);
        assert!((fixed_half_count_bound(10) - 0.03125).abs() < 1e-15);
    }

    #[test]
    fn alice_first_or_last_gives_same_joint_distribution() {
        let entry = BasisEntry::from_parameters(F5, 63.0, 200.0).unwrap();
        for axis in [MeasurementAxis::X, MeasurementAxis::Y] {
            for m1 in Outcome::BOTH {
                for m2 in Outcome::BOTH {
                    for alice in Outcome::BOTH {
                        let after = sequence_probability(
                            &ghz_state(),
                            &[(1, *entry.a(), m1), (2, *entry.b(), m2), (3, axis, alice)],
                        )
                        .unwrap();
                        let before = sequence_probability(
                            &ghz_state(),
                            &[(3, axis, alice), (1, *entry.a(), m1), (2, *entry.b(), m2)],
                        )
                        .unwrap();
                        assert!((after - before).abs() < 1e-12);
                    }
                }
            }
        }
        // The x/y kets used by Alice are orthonormal.
        let (p, m) = basis_expansion(&MeasurementAxis::Y);
        assert!(p.inner(&m).norm() < 1e-15);
    }
}
