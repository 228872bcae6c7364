//! JSON session transcripts.
//!
//! A transcript flattens Bob's basis, his outcomes and Alice's opening into
//! one row per index, alongside the verdict. Angles are stored in degrees
//! rounded to 12 significant digits; outcomes are the integers +1 and -1.
//!
//! Reading a transcript validates the whole document and reports every
//! violation with its field path, then [`Transcript::recompute_verdict`]
//! re-runs Bob's check from the stored rows.

use std::path::Path;

use serde::{Deserialize, Serialize, Serializer};
use serde_json::{Map, Value};

use crate::attacks::CheatStrategy;
use crate::epr::{Bit, CommitmentStateKind};
use crate::error::{Error, Result};
use crate::protocol::{
    bob_verify, expected_product, BasisEntry, BasisVector, CommitmentRecord, ConstraintFamily, Failure, FamilyWeights,
    OutcomePair, OutcomeRecord, RevealMessage, SessionRecord, Verdict,
};
use crate::quantum::{MeasurementAxis, Outcome};

pub const PROTOCOL_VERSION: u32 = 1;

/// Relation tolerance for stored angles, which carry 12 significant digits.
pub const STORED_RELATION_TOL_DEG: f64 = 1e-8;

/// Rounds to 12 significant digits.
pub fn round_significant(x: f64) -> f64 {
    if x == 0.0 || !x.is_finite() {
        return x;
    }
    format!("{x:.11e}").parse().unwrap_or(x)
}

fn serialize_angle<S: Serializer>(x: &f64, s: S) -> std::result::Result<S::Ok, S::Error> {
    s.serialize_f64(round_significant(*x))
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TranscriptEntry {
    pub index: usize,
    pub family: ConstraintFamily,
    #[serde(serialize_with = "serialize_angle")]
    pub theta1: f64,
    #[serde(serialize_with = "serialize_angle")]
    pub phi1: f64,
    #[serde(serialize_with = "serialize_angle")]
    pub theta2: f64,
    #[serde(serialize_with = "serialize_angle")]
    pub phi2: f64,
    pub kind_revealed: CommitmentStateKind,
    pub m1: Outcome,
    pub m2: Outcome,
    /// The family certifies the claimed bit.
    pub checked: bool,
    pub expected_product: Option<Outcome>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Transcript {
    pub protocol_version: u32,
    pub seed: u64,
    pub n: usize,
    pub family_weights: FamilyWeights,
    pub lambda_claimed: Bit,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub strategy: Option<CheatStrategy>,
    /// Alice's private record, when she committed to definite states.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub commitment: Option<CommitmentRecord>,
    pub entries: Vec<TranscriptEntry>,
    pub verdict: Verdict,
}

/// Result of re-checking a stored transcript.
#[derive(Clone, Debug, PartialEq)]
pub struct TranscriptCheck {
    pub recomputed: Verdict,
    /// Recomputed verdict and per-row annotations agree with the stored ones.
    pub matches_stored: bool,
}

impl TranscriptCheck {
    pub fn passed(&self) -> bool {
        self.matches_stored && self.recomputed.accepted
    }
}

impl Transcript {
    pub fn from_session(
        seed: u64,
        family_weights: FamilyWeights,
        record: &SessionRecord,
        strategy: Option<CheatStrategy>,
    ) -> Self {
        let lambda = record.reveal.lambda;
        let entries = record
            .basis
            .entries
            .iter()
            .zip(&record.outcomes.outcomes)
            .zip(&record.reveal.kinds)
            .enumerate()
            .map(|(index, ((entry, pair), kind))| row(index, entry, pair, *kind, lambda))
            .collect();
        Transcript {
            protocol_version: PROTOCOL_VERSION,
            seed,
            n: record.basis.len(),
            family_weights,
            lambda_claimed: lambda,
            strategy,
            commitment: record.commitment.clone(),
            entries,
            verdict: record.verdict.clone(),
        }
    }

    pub fn to_json(&self) -> Result<String> {
        let mut text = serde_json::to_string_pretty(self)?;
        text.push('\n');
        Ok(text)
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_json()?).map_err(|source| Error::Io {
            path: path.to_owned(),
            source,
        })
    }

    pub fn read(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|source| Error::Io {
            path: path.to_owned(),
            source,
        })?;
        Self::from_json(&text)
    }

    /// Parses and validates a transcript document.
    pub fn from_json(text: &str) -> Result<Self> {
        let value: Value = serde_json::from_str(text).map_err(|e| Error::Schema(vec![format!("$: {e}")]))?;
        let mut v = Validator::default();
        let transcript = v.transcript(&value);
        match transcript {
            Some(t) if v.errors.is_empty() => Ok(t),
            _ => Err(Error::Schema(v.errors)),
        }
    }

    fn basis(&self) -> Result<BasisVector> {
        let entries = self
            .entries
            .iter()
            .map(|e| {
                BasisEntry::with_tolerance(
                    e.family,
                    MeasurementAxis::new(e.theta1, e.phi1)?,
                    MeasurementAxis::new(e.theta2, e.phi2)?,
                    STORED_RELATION_TOL_DEG,
                )
            })
            .collect::<Result<_>>()?;
        Ok(BasisVector { entries })
    }

    /// Re-runs Bob's verification on the stored rows.
    pub fn recompute_verdict(&self) -> Result<Verdict> {
        let reveal = RevealMessage {
            lambda: self.lambda_claimed,
            kinds: self.entries.iter().map(|e| e.kind_revealed).collect(),
        };
        let outcomes = OutcomeRecord {
            outcomes: self
                .entries
                .iter()
                .map(|e| OutcomePair { m1: e.m1, m2: e.m2 })
                .collect(),
        };
        bob_verify(&reveal, &self.basis()?, &outcomes)
    }

    /// Recomputes the verdict and compares it with what was stored.
    pub fn check(&self) -> Result<TranscriptCheck> {
        let recomputed = self.recompute_verdict()?;
        let rows_match = self.entries.iter().enumerate().all(|(i, e)| {
            let expected = row_annotations(e.family, e.kind_revealed, self.lambda_claimed);
            (e.checked, e.expected_product) == expected && e.index == i
        });
        let matches_stored = rows_match && recomputed == self.verdict;
        Ok(TranscriptCheck {
            recomputed,
            matches_stored,
        })
    }
}

fn row_annotations(family: ConstraintFamily, kind: CommitmentStateKind, lambda: Bit) -> (bool, Option<Outcome>) {
    let checked = family.certified_bit() == lambda && kind.bit() == lambda;
    (checked, if checked { expected_product(kind, family) } else { None })
}

fn row(
    index: usize,
    entry: &BasisEntry,
    pair: &OutcomePair,
    kind: CommitmentStateKind,
    lambda: Bit,
) -> TranscriptEntry {
    let (checked, expected_product) = row_annotations(entry.family(), kind, lambda);
    TranscriptEntry {
        index,
        family: entry.family(),
        theta1: entry.a().theta(),
        phi1: entry.a().phi(),
        theta2: entry.b().theta(),
        phi2: entry.b().phi(),
        kind_revealed: kind,
        m1: pair.m1,
        m2: pair.m2,
        checked,
        expected_product,
    }
}

/// Walks a parsed document and collects every schema violation.
#[derive(Default)]
struct Validator {
    errors: Vec<String>,
}

impl Validator {
    fn fail(&mut self, path: &str, msg: impl AsRef<str>) {
        self.errors.push(format!("{path}: {}", msg.as_ref()));
    }

    fn field<'v>(&mut self, obj: &'v Map<String, Value>, path: &str, key: &str) -> Option<&'v Value> {
        let v = obj.get(key);
        if v.is_none() {
            self.fail(&format!("{path}.{key}"), "missing field");
        }
        v
    }

    fn uint(&mut self, obj: &Map<String, Value>, path: &str, key: &str) -> Option<u64> {
        let v = self.field(obj, path, key)?;
        let out = v.as_u64();
        if out.is_none() {
            self.fail(
                &format!("{path}.{key}"),
                format!("expected a nonnegative integer, got {v}"),
            );
        }
        out
    }

    fn float(&mut self, obj: &Map<String, Value>, path: &str, key: &str) -> Option<f64> {
        let v = self.field(obj, path, key)?;
        let out = v.as_f64();
        if out.is_none() {
            self.fail(&format!("{path}.{key}"), format!("expected a number, got {v}"));
        }
        out
    }

    fn boolean(&mut self, obj: &Map<String, Value>, path: &str, key: &str) -> Option<bool> {
        let v = self.field(obj, path, key)?;
        let out = v.as_bool();
        if out.is_none() {
            self.fail(&format!("{path}.{key}"), format!("expected true or false, got {v}"));
        }
        out
    }

    fn outcome_value(&mut self, v: &Value, path: &str) -> Option<Outcome> {
        let out = v.as_i64().and_then(Outcome::from_value);
        if out.is_none() {
            self.fail(path, format!("expected +1 or -1, got {v}"));
        }
        out
    }

    fn outcome(&mut self, obj: &Map<String, Value>, path: &str, key: &str) -> Option<Outcome> {
        let v = self.field(obj, path, key)?;
        self.outcome_value(v, &format!("{path}.{key}"))
    }

    fn bit(&mut self, obj: &Map<String, Value>, path: &str, key: &str) -> Option<Bit> {
        let v = self.field(obj, path, key)?;
        let out = v
            .as_u64()
            .and_then(|b| u8::try_from(b).ok())
            .and_then(|b| Bit::try_from(b).ok());
        if out.is_none() {
            self.fail(&format!("{path}.{key}"), format!("expected 0 or 1, got {v}"));
        }
        out
    }

    fn object<'v>(&mut self, v: &'v Value, path: &str) -> Option<&'v Map<String, Value>> {
        let out = v.as_object();
        if out.is_none() {
            self.fail(path, "expected an object");
        }
        out
    }

    fn typed<T: serde::de::DeserializeOwned>(&mut self, v: &Value, path: &str) -> Option<T> {
        match serde_json::from_value(v.clone()) {
            Ok(t) => Some(t),
            Err(e) => {
                self.fail(path, e.to_string());
                None
            }
        }
    }

    fn transcript(&mut self, value: &Value) -> Option<Transcript> {
        let root = self.object(value, "$")?;
        let version = self.uint(root, "$", "protocol_version");
        if let Some(v) = version {
            if v != u64::from(PROTOCOL_VERSION) {
                self.fail("$.protocol_version", format!("unsupported version {v}"));
            }
        }
        let seed = self.uint(root, "$", "seed");
        let n = self.uint(root, "$", "n");
        if n == Some(0) {
            self.fail("$.n", "must be at least 1");
        }
        let weights = self.field(root, "$", "family_weights").and_then(|v| {
            let raw: Option<[f64; 6]> = self.typed(v, "$.family_weights");
            raw.and_then(|w| match FamilyWeights::new(w) {
                Ok(w) => Some(w),
                Err(e) => {
                    self.fail("$.family_weights", e.to_string());
                    None
                }
            })
        });
        let lambda = self.bit(root, "$", "lambda_claimed");
        let strategy = match root.get("strategy") {
            None | Some(Value::Null) => Some(None),
            Some(v) => self.typed::<CheatStrategy>(v, "$.strategy").map(Some),
        };
        let commitment = match root.get("commitment") {
            None | Some(Value::Null) => Some(None),
            Some(v) => self.typed::<CommitmentRecord>(v, "$.commitment").map(Some),
        };

        let entries = self.field(root, "$", "entries").and_then(|v| {
            let Some(list) = v.as_array() else {
                self.fail("$.entries", "expected an array");
                return None;
            };
            if let Some(n) = n {
                if list.len() as u64 != n {
                    self.fail("$.entries", format!("has {} rows but n is {n}", list.len()));
                }
            }
            let rows: Vec<_> = list.iter().enumerate().map(|(i, e)| self.entry(e, i)).collect();
            rows.into_iter().collect::<Option<Vec<_>>>()
        });

        let verdict = self.field(root, "$", "verdict").and_then(|v| {
            let obj = self.object(v, "$.verdict")?;
            let accepted = self.boolean(obj, "$.verdict", "accepted");
            let checked_count = self.uint(obj, "$.verdict", "checked_count");
            let failures = self
                .field(obj, "$.verdict", "failures")
                .and_then(|f| self.typed::<Vec<Failure>>(f, "$.verdict.failures"));
            Some(Verdict {
                accepted: accepted?,
                checked_count: checked_count? as usize,
                failures: failures?,
            })
        });

        Some(Transcript {
            protocol_version: version? as u32,
            seed: seed?,
            n: n? as usize,
            family_weights: weights?,
            lambda_claimed: lambda?,
            strategy: strategy?,
            commitment: commitment?,
            entries: entries?,
            verdict: verdict?,
        })
    }

    fn entry(&mut self, value: &Value, i: usize) -> Option<TranscriptEntry> {
        let path = format!("$.entries[{i}]");
        let obj = self.object(value, &path)?;
        let index = self.uint(obj, &path, "index");
        if let Some(index) = index {
            if index != i as u64 {
                self.fail(&format!("{path}.index"), format!("expected {i}, got {index}"));
            }
        }
        let family = self.field(obj, &path, "family").and_then(|v| {
            let f = v.as_str().and_then(ConstraintFamily::from_name);
            if f.is_none() {
                self.fail(&format!("{path}.family"), format!("expected one of F1..F6, got {v}"));
            }
            f
        });
        let theta1 = self.float(obj, &path, "theta1");
        let phi1 = self.float(obj, &path, "phi1");
        let theta2 = self.float(obj, &path, "theta2");
        let phi2 = self.float(obj, &path, "phi2");
        let kind = self.field(obj, &path, "kind_revealed").and_then(|v| {
            let k = v.as_str().and_then(CommitmentStateKind::from_name);
            if k.is_none() {
                self.fail(&format!("{path}.kind_revealed"), format!("unknown state kind {v}"));
            }
            k
        });
        let m1 = self.outcome(obj, &path, "m1");
        let m2 = self.outcome(obj, &path, "m2");
        let checked = self.boolean(obj, &path, "checked");
        let expected = match obj.get("expected_product") {
            None | Some(Value::Null) => Some(None),
            Some(v) => self.outcome_value(v, &format!("{path}.expected_product")).map(Some),
        };

        let (theta1, phi1, theta2, phi2, family) = (theta1?, phi1?, theta2?, phi2?, family?);
        let axes = MeasurementAxis::new(theta1, phi1).and_then(|a| Ok((a, MeasurementAxis::new(theta2, phi2)?)));
        match axes.and_then(|(a, b)| BasisEntry::with_tolerance(family, a, b, STORED_RELATION_TOL_DEG)) {
            Ok(_) => {}
            Err(e) => self.fail(&path, e.to_string()),
        }
        Some(TranscriptEntry {
            index: index? as usize,
            family,
            theta1,
            phi1,
            theta2,
            phi2,
            kind_revealed: kind?,
            m1: m1?,
            m2: m2?,
            checked: checked?,
            expected_product: expected?,
        })
    }
}
