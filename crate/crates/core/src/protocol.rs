//! The honest commit/open protocol between Alice (sender) and Bob (receiver).
//!
//! Commit: Alice sends `n` pairs, each drawn uniformly from the two states
//! encoding her bit. Bob picks a secret axis pair per index from one of six
//! constraint families and measures both particles.
//!
//! Open: Alice reveals the bit and the state kind of every pair. Bob checks
//! the product `m1·m2` at the indices where the revealed kind predicts it
//! with certainty.

use std::fmt;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::epr::{commitment_state, Bit, CommitmentStateKind};
use crate::error::{Error, Result};
use crate::quantum::{measure_qubit, normalize_degrees, MeasurementAxis, Outcome, StateVector};
use crate::rng::{self, SimRng};

/// Tolerance, in degrees, for family relations on freshly generated entries.
pub const RELATION_TOL_DEG: f64 = 1e-9;

/// Tolerance on family weights summing to one.
pub const WEIGHT_SUM_TOL: f64 = 1e-9;

/// Bob's six axis-pair relations.
///
/// F1–F3 have azimuth sum 0° and certify bit 1; F4–F6 have azimuth sum 90°
/// and certify bit 0.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum ConstraintFamily {
    /// θ = θ' = 90°, φ + φ' = 0°
    F1,
    /// θ = θ', φ + φ' = 0°
    F2,
    /// θ + θ' = 180°, φ + φ' = 0°
    F3,
    /// θ = θ' = 90°, φ + φ' = 90°
    F4,
    /// θ = θ', φ + φ' = 90°
    F5,
    /// θ + θ' = 180°, φ + φ' = 90°
    F6,
}

/// Constraint between the two polar angles of a family.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum PolarRelation {
    /// Both at 90°.
    Equatorial,
    Equal,
    Supplementary,
}

impl ConstraintFamily {
    pub const ALL: [ConstraintFamily; 6] = [
        ConstraintFamily::F1,
        ConstraintFamily::F2,
        ConstraintFamily::F3,
        ConstraintFamily::F4,
        ConstraintFamily::F5,
        ConstraintFamily::F6,
    ];

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn name(self) -> &'static str {
        ["F1", "F2", "F3", "F4", "F5", "F6"][self.index()]
    }

    pub fn from_name(name: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|f| f.name() == name)
    }

    /// Required value of `φ + φ'` modulo 360.
    pub fn azimuth_sum(self) -> f64 {
        match self {
            ConstraintFamily::F1 | ConstraintFamily::F2 | ConstraintFamily::F3 => 0.0,
            _ => 90.0,
        }
    }

    /// The revealed bit for which Bob inspects indices of this family.
    pub fn certified_bit(self) -> Bit {
        if self.azimuth_sum() == 0.0 {
            Bit::One
        } else {
            Bit::Zero
        }
    }

    pub fn polar_relation(self) -> PolarRelation {
        match self {
            ConstraintFamily::F1 | ConstraintFamily::F4 => PolarRelation::Equatorial,
            ConstraintFamily::F2 | ConstraintFamily::F5 => PolarRelation::Equal,
            ConstraintFamily::F3 | ConstraintFamily::F6 => PolarRelation::Supplementary,
        }
    }

    /// Whether the polar angle is a free parameter.
    pub fn has_free_polar(self) -> bool {
        self.polar_relation() != PolarRelation::Equatorial
    }
}

impl fmt::Display for ConstraintFamily {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// Probability of Bob choosing each family, in F1..F6 order.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "[f64; 6]", into = "[f64; 6]")]
pub struct FamilyWeights([f64; 6]);

impl FamilyWeights {
    pub fn new(weights: [f64; 6]) -> Result<Self> {
        if let Some(w) = weights.iter().find(|w| !w.is_finite() || **w < 0.0) {
            return Err(Error::InvalidWeights(format!(
                "family weight {w} is negative or not finite"
            )));
        }
        let total: f64 = weights.iter().sum();
        if (total - 1.0).abs() > WEIGHT_SUM_TOL {
            return Err(Error::InvalidWeights(format!(
                "family weights sum to {total}, expected 1"
            )));
        }
        Ok(FamilyWeights(weights))
    }

    /// Equal weight on all six families.
    pub fn uniform() -> Self {
        FamilyWeights([1.0 / 6.0; 6])
    }

    /// Half on F1, half on F4.
    pub fn f1_f4() -> Self {
        FamilyWeights([0.5, 0.0, 0.0, 0.5, 0.0, 0.0])
    }

    /// Accepts `uniform`, `f1f4`, or six comma-separated weights.
    pub fn parse(text: &str) -> Result<Self> {
        match text.trim() {
            "uniform" => return Ok(Self::uniform()),
            "f1f4" => return Ok(Self::f1_f4()),
            _ => {}
        }
        let parts: Vec<&str> = text.split(',').map(str::trim).collect();
        if parts.len() != 6 {
            return Err(Error::InvalidWeights(format!(
                "expected a preset (uniform, f1f4) or six comma-separated weights, got {text:?}"
            )));
        }
        let mut weights = [0.0; 6];
        for (w, p) in weights.iter_mut().zip(&parts) {
            *w = p
                .parse()
                .map_err(|_| Error::InvalidWeights(format!("{p:?} is not a number")))?;
        }
        Self::new(weights)
    }

    pub fn get(&self, family: ConstraintFamily) -> f64 {
        self.0[family.index()]
    }

    pub fn as_array(&self) -> [f64; 6] {
        self.0
    }

    /// Draws a family by weight.
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> ConstraintFamily {
        let total: f64 = self.0.iter().sum();
        let u = rng.random::<f64>() * total;
        let mut cumulative = 0.0;
        let mut last = ConstraintFamily::F1;
        for family in ConstraintFamily::ALL {
            let w = self.get(family);
            if w <= 0.0 {
                continue;
            }
            cumulative += w;
            last = family;
            if u < cumulative {
                return family;
            }
        }
        last
    }
}

impl TryFrom<[f64; 6]> for FamilyWeights {
    type Error = Error;

    fn try_from(w: [f64; 6]) -> Result<Self> {
        FamilyWeights::new(w)
    }
}

impl From<FamilyWeights> for [f64; 6] {
    fn from(w: FamilyWeights) -> [f64; 6] {
        w.0
    }
}

/// One index of Bob's secret vector: the family and the two axes.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct BasisEntry {
    family: ConstraintFamily,
    a: MeasurementAxis,
    b: MeasurementAxis,
}

fn angular_gap(x: f64, y: f64) -> f64 {
    let d = (x - y).rem_euclid(360.0);
    d.min(360.0 - d)
}

impl BasisEntry {
    /// Validates the family relations within [`RELATION_TOL_DEG`].
    pub fn new(family: ConstraintFamily, a: MeasurementAxis, b: MeasurementAxis) -> Result<Self> {
        Self::with_tolerance(family, a, b, RELATION_TOL_DEG)
    }

    /// Validates the family relations within `tol` degrees.
    pub fn with_tolerance(family: ConstraintFamily, a: MeasurementAxis, b: MeasurementAxis, tol: f64) -> Result<Self> {
        let violation = |detail: String| Error::FamilyRelation {
            family: family.to_string(),
            detail,
        };
        let (t1, t2) = (a.theta(), b.theta());
        let polar_ok = match family.polar_relation() {
            PolarRelation::Equatorial => (t1 - 90.0).abs() <= tol && (t2 - 90.0).abs() <= tol,
            PolarRelation::Equal => (t1 - t2).abs() <= tol,
            PolarRelation::Supplementary => (t1 + t2 - 180.0).abs() <= tol,
        };
        if !polar_ok {
            return Err(violation(format!(
                "polar angles {t1}° and {t2}° violate {:?}",
                family.polar_relation()
            )));
        }
        let gap = angular_gap(a.phi() + b.phi(), family.azimuth_sum());
        if gap > tol {
            return Err(violation(format!(
                "azimuths {}° + {}° differ from {}° by {gap}°",
                a.phi(),
                b.phi(),
                family.azimuth_sum()
            )));
        }
        Ok(BasisEntry { family, a, b })
    }

    /// Builds the entry with first-particle angles `(theta, phi)`; the
    /// second particle's angles follow from the family. `theta` is ignored
    /// for the equatorial families.
    pub fn from_parameters(family: ConstraintFamily, theta: f64, phi: f64) -> Result<Self> {
        let (t1, t2) = match family.polar_relation() {
            PolarRelation::Equatorial => (90.0, 90.0),
            PolarRelation::Equal => (theta, theta),
            PolarRelation::Supplementary => (theta, 180.0 - theta),
        };
        let phi = normalize_degrees(phi);
        let a = MeasurementAxis::new(t1, phi)?;
        let b = MeasurementAxis::new(t2, normalize_degrees(family.azimuth_sum() - phi))?;
        Self::new(family, a, b)
    }

    /// Draws the free parameters: θ uniform on [0°, 180°], φ uniform on [0°, 360°).
    pub fn sample<R: Rng + ?Sized>(family: ConstraintFamily, rng: &mut R) -> Result<Self> {
        let theta = if family.has_free_polar() {
            rng.random_range(0.0..=180.0)
        } else {
            90.0
        };
        let phi = rng.random_range(0.0..360.0);
        Self::from_parameters(family, theta, phi)
    }

    pub fn family(&self) -> ConstraintFamily {
        self.family
    }

    /// Axis for particle 1.
    pub fn a(&self) -> &MeasurementAxis {
        &self.a
    }

    /// Axis for particle 2.
    pub fn b(&self) -> &MeasurementAxis {
        &self.b
    }
}

/// Bob's secret vector B.
#[derive(Clone, Debug, PartialEq)]
pub struct BasisVector {
    pub entries: Vec<BasisEntry>,
}

impl BasisVector {
    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }
}

fn require_positive(n: usize) -> Result<()> {
    if n == 0 {
        return Err(Error::InvalidParameter(
            "security parameter n must be at least 1".into(),
        ));
    }
    Ok(())
}

/// Each index draws a family by `weights`, then its free parameters uniformly.
pub fn generate_basis_vector<R: Rng + ?Sized>(n: usize, weights: &FamilyWeights, rng: &mut R) -> Result<BasisVector> {
    require_positive(n)?;
    let entries = (0..n)
        .map(|_| BasisEntry::sample(weights.sample(rng), rng))
        .collect::<Result<_>>()?;
    Ok(BasisVector { entries })
}

/// Alice's private record of what she sent.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CommitmentRecord {
    pub lambda: Bit,
    pub kinds: Vec<CommitmentStateKind>,
}

/// Commits to `lambda` with `n` pairs, each uniformly one of the two kinds
/// encoding it. Returns the record and the quantum channel contents.
pub fn alice_commit<R: Rng + ?Sized>(
    lambda: Bit,
    n: usize,
    rng: &mut R,
) -> Result<(CommitmentRecord, Vec<StateVector>)> {
    require_positive(n)?;
    let choices = CommitmentStateKind::for_bit(lambda);
    let kinds: Vec<_> = (0..n).map(|_| choices[usize::from(rng.random::<bool>())]).collect();
    let channel = kinds.iter().map(|k| commitment_state(*k)).collect();
    Ok((CommitmentRecord { lambda, kinds }, channel))
}

/// Bob's results at one index.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct OutcomePair {
    pub m1: Outcome,
    pub m2: Outcome,
}

impl OutcomePair {
    pub fn product(&self) -> Outcome {
        self.m1.times(self.m2)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct OutcomeRecord {
    pub outcomes: Vec<OutcomePair>,
}

/// Measures particle 1 along `entry.a()` and then particle 2 along
/// `entry.b()`. Works for states with extra qubits held elsewhere.
pub fn measure_pair<R: Rng + ?Sized>(
    state: &StateVector,
    entry: &BasisEntry,
    rng: &mut R,
) -> Result<(OutcomePair, StateVector)> {
    let (m1, state) = measure_qubit(state, 1, entry.a(), rng)?;
    let (m2, state) = measure_qubit(&state, 2, entry.b(), rng)?;
    Ok((OutcomePair { m1, m2 }, state))
}

/// Measures every pair in order and returns the post-measurement states,
/// which matter when a third party still holds entangled particles.
pub fn bob_measure_collapsing<R: Rng + ?Sized>(
    channel: Vec<StateVector>,
    basis: &BasisVector,
    rng: &mut R,
) -> Result<(OutcomeRecord, Vec<StateVector>)> {
    if channel.len() != basis.len() {
        return Err(Error::LengthMismatch {
            what: "channel",
            expected: basis.len(),
            got: channel.len(),
        });
    }
    let mut outcomes = Vec::with_capacity(channel.len());
    let mut collapsed = Vec::with_capacity(channel.len());
    for (state, entry) in channel.iter().zip(&basis.entries) {
        let (pair, post) = measure_pair(state, entry, rng)?;
        outcomes.push(pair);
        collapsed.push(post);
    }
    Ok((OutcomeRecord { outcomes }, collapsed))
}

pub fn bob_measure<R: Rng + ?Sized>(
    channel: &[StateVector],
    basis: &BasisVector,
    rng: &mut R,
) -> Result<OutcomeRecord> {
    Ok(bob_measure_collapsing(channel.to_vec(), basis, rng)?.0)
}

/// What Alice sends when opening.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RevealMessage {
    pub lambda: Bit,
    pub kinds: Vec<CommitmentStateKind>,
}

/// Opens the commitment verbatim.
pub fn alice_reveal(record: &CommitmentRecord) -> RevealMessage {
    RevealMessage {
        lambda: record.lambda,
        kinds: record.kinds.clone(),
    }
}

/// The product Bob demands when `kind` is revealed at an index of `family`,
/// or `None` if the index is not tested for that kind.
pub fn expected_product(kind: CommitmentStateKind, family: ConstraintFamily) -> Option<Outcome> {
    use CommitmentStateKind::*;
    use ConstraintFamily::*;
    match (kind, family) {
        (PhiPlus, F1 | F2) | (PsiPlus, F4 | F5) => Some(Outcome::Plus),
        (PhiMinus, F1 | F3) | (PsiMinus, F4 | F6) => Some(Outcome::Minus),
        _ => None,
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FailureReason {
    /// The observed product contradicts the revealed kind.
    ProductMismatch,
    /// The revealed kind does not encode the revealed bit.
    KindMismatch,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Failure {
    pub index: usize,
    pub reason: FailureReason,
    pub expected_product: Option<Outcome>,
    pub observed_product: Outcome,
}

/// Bob's decision on an opening.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Verdict {
    pub accepted: bool,
    /// Indices whose family certifies the revealed bit.
    pub checked_count: usize,
    pub failures: Vec<Failure>,
}

/// Checks an opening against Bob's secret basis and outcomes.
pub fn bob_verify(reveal: &RevealMessage, basis: &BasisVector, outcomes: &OutcomeRecord) -> Result<Verdict> {
    let n = basis.len();
    if reveal.kinds.len() != n {
        return Err(Error::LengthMismatch {
            what: "revealed kinds",
            expected: n,
            got: reveal.kinds.len(),
        });
    }
    if outcomes.outcomes.len() != n {
        return Err(Error::LengthMismatch {
            what: "outcomes",
            expected: n,
            got: outcomes.outcomes.len(),
        });
    }
    let mut checked_count = 0;
    let mut failures = Vec::new();
    for (index, ((kind, entry), pair)) in reveal
        .kinds
        .iter()
        .zip(&basis.entries)
        .zip(&outcomes.outcomes)
        .enumerate()
    {
        let observed_product = pair.product();
        if kind.bit() != reveal.lambda {
            failures.push(Failure {
                index,
                reason: FailureReason::KindMismatch,
                expected_product: None,
                observed_product,
            });
            continue;
        }
        if entry.family().certified_bit() != reveal.lambda {
            continue;
        }
        checked_count += 1;
        if let Some(expected) = expected_product(*kind, entry.family()) {
            if expected != observed_product {
                failures.push(Failure {
                    index,
                    reason: FailureReason::ProductMismatch,
                    expected_product: Some(expected),
                    observed_product,
                });
            }
        }
    }
    Ok(Verdict {
        accepted: failures.is_empty(),
        checked_count,
        failures,
    })
}

/// Everything produced by one session. `commitment` is absent when Alice
/// never committed to definite states.
#[derive(Clone, Debug, PartialEq)]
pub struct SessionRecord {
    pub commitment: Option<CommitmentRecord>,
    pub basis: BasisVector,
    pub outcomes: OutcomeRecord,
    pub reveal: RevealMessage,
    pub verdict: Verdict,
}

/// Commit, measure, reveal and verify with an honest Alice.
pub fn run_honest_session_with<R: Rng + ?Sized>(
    lambda: Bit,
    n: usize,
    weights: &FamilyWeights,
    rng: &mut R,
) -> Result<SessionRecord> {
    let (commitment, channel) = alice_commit(lambda, n, rng)?;
    let basis = generate_basis_vector(n, weights, rng)?;
    let outcomes = bob_measure(&channel, &basis, rng)?;
    let reveal = alice_reveal(&commitment);
    let verdict = bob_verify(&reveal, &basis, &outcomes)?;
    Ok(SessionRecord {
        commitment: Some(commitment),
        basis,
        outcomes,
        reveal,
        verdict,
    })
}

/// Runs an honest session on stream 0 of `seed` and records it.
pub fn run_honest_session(
    lambda: Bit,
    n: usize,
    weights: &FamilyWeights,
    seed: u64,
) -> Result<crate::transcript::Transcript> {
    let mut rng: SimRng = rng::from_seed(seed);
    let record = run_honest_session_with(lambda, n, weights, &mut rng)?;
    Ok(crate::transcript::Transcript::from_session(
        seed, *weights, &record, None,
    ))
}
