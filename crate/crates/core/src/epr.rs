//! The four two-particle commitment states, the three-particle attack state,
//! and closed-form correlation formulas for the commitment states.
//!
//! The closed forms are evaluated from the axis angles alone and never touch
//! amplitudes, so they serve as an independent check on the Born-rule route
//! in [`crate::quantum`].

use std::f64::consts::FRAC_1_SQRT_2;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::quantum::{self, basis_expansion, cos_deg, sin_deg, MeasurementAxis, StateVector, C64};

/// A committed bit value.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(try_from = "u8", into = "u8")]
pub enum Bit {
    Zero,
    One,
}

impl Bit {
    pub fn value(self) -> u8 {
        match self {
            Bit::Zero => 0,
            Bit::One => 1,
        }
    }

    pub fn flipped(self) -> Bit {
        match self {
            Bit::Zero => Bit::One,
            Bit::One => Bit::Zero,
        }
    }
}

impl TryFrom<u8> for Bit {
    type Error = String;

    fn try_from(v: u8) -> Result<Self, String> {
        match v {
            0 => Ok(Bit::Zero),
            1 => Ok(Bit::One),
            _ => Err(format!("bit must be 0 or 1, got {v}")),
        }
    }
}

impl From<Bit> for u8 {
    fn from(b: Bit) -> u8 {
        b.value()
    }
}

impl From<bool> for Bit {
    fn from(b: bool) -> Bit {
        if b {
            Bit::One
        } else {
            Bit::Zero
        }
    }
}

impl fmt::Display for Bit {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.value())
    }
}

/// The four states Alice may send.
///
/// |Φ⟩ and |Φ'⟩ encode bit 1; |Ψ⟩ and |Ψ'⟩ encode bit 0.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CommitmentStateKind {
    /// (|↑↑⟩ + |↓↓⟩)/√2
    PhiPlus,
    /// (|↑↑⟩ − |↓↓⟩)/√2
    PhiMinus,
    /// (|↑↑⟩ + i|↓↓⟩)/√2
    PsiPlus,
    /// (|↑↑⟩ − i|↓↓⟩)/√2
    PsiMinus,
}

impl CommitmentStateKind {
    pub const ALL: [CommitmentStateKind; 4] = [
        CommitmentStateKind::PhiPlus,
        CommitmentStateKind::PhiMinus,
        CommitmentStateKind::PsiPlus,
        CommitmentStateKind::PsiMinus,
    ];

    /// The bit this state encodes.
    pub fn bit(self) -> Bit {
        match self {
            CommitmentStateKind::PhiPlus | CommitmentStateKind::PhiMinus => Bit::One,
            CommitmentStateKind::PsiPlus | CommitmentStateKind::PsiMinus => Bit::Zero,
        }
    }

    /// The two kinds encoding `bit`.
    pub fn for_bit(bit: Bit) -> [CommitmentStateKind; 2] {
        match bit {
            Bit::One => [CommitmentStateKind::PhiPlus, CommitmentStateKind::PhiMinus],
            Bit::Zero => [CommitmentStateKind::PsiPlus, CommitmentStateKind::PsiMinus],
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            CommitmentStateKind::PhiPlus => "phi_plus",
            CommitmentStateKind::PhiMinus => "phi_minus",
            CommitmentStateKind::PsiPlus => "psi_plus",
            CommitmentStateKind::PsiMinus => "psi_minus",
        }
    }

    pub fn from_name(name: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|k| k.name() == name)
    }

    /// Relative amplitude of |↓↓⟩ against |↑↑⟩.
    fn relative_phase(self) -> C64 {
        match self {
            CommitmentStateKind::PhiPlus => C64::new(1.0, 0.0),
            CommitmentStateKind::PhiMinus => C64::new(-1.0, 0.0),
            CommitmentStateKind::PsiPlus => C64::new(0.0, 1.0),
            CommitmentStateKind::PsiMinus => C64::new(0.0, -1.0),
        }
    }
}

impl fmt::Display for CommitmentStateKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// The normalized two-particle vector for `kind`.
pub fn commitment_state(kind: CommitmentStateKind) -> StateVector {
    let s = C64::new(FRAC_1_SQRT_2, 0.0);
    let zero = C64::new(0.0, 0.0);
    StateVector::new(vec![s, zero, zero, s * kind.relative_phase()]).expect("commitment states are normalized")
}

/// Expected spin product and the resulting product-outcome probabilities.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct CorrelationResult {
    pub value: f64,
    pub p_plus: f64,
    pub p_minus: f64,
}

impl CorrelationResult {
    pub fn from_value(value: f64) -> Self {
        CorrelationResult {
            value,
            p_plus: (1.0 + value) / 2.0,
            p_minus: (1.0 - value) / 2.0,
        }
    }
}

/// `E(a, b) = cosθ₁cosθ₂ ± sinθ₁sinθ₂·cos(φ₁+φ₂)` for the Φ pair and
/// `cosθ₁cosθ₂ ± sinθ₁sinθ₂·sin(φ₁+φ₂)` for the Ψ pair.
pub fn closed_form_correlation(
    kind: CommitmentStateKind,
    a: &MeasurementAxis,
    b: &MeasurementAxis,
) -> CorrelationResult {
    let polar = cos_deg(a.theta()) * cos_deg(b.theta());
    let transverse = sin_deg(a.theta()) * sin_deg(b.theta());
    let azimuth = a.phi() + b.phi();
    let value = match kind {
        CommitmentStateKind::PhiPlus => polar + transverse * cos_deg(azimuth),
        CommitmentStateKind::PhiMinus => polar - transverse * cos_deg(azimuth),
        CommitmentStateKind::PsiPlus => polar + transverse * sin_deg(azimuth),
        CommitmentStateKind::PsiMinus => polar - transverse * sin_deg(azimuth),
    };
    CorrelationResult::from_value(value)
}

/// (|↑↑↑⟩ + |↓↓↓⟩)/√2. Alice keeps qubit 3.
pub fn ghz_state() -> StateVector {
    let s = C64::new(FRAC_1_SQRT_2, 0.0);
    let mut amplitudes = vec![C64::new(0.0, 0.0); 8];
    amplitudes[0] = s;
    amplitudes[7] = s;
    StateVector::new(amplitudes).expect("GHZ state is normalized")
}

/// Distances between the GHZ state and its rebuilt expansions over Alice's
/// particle, each minimized over one global phase.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct GhzResiduals {
    /// `(1/√2)[|Φ⟩|x⟩ − |Φ'⟩|−x⟩]`
    pub x_residual: f64,
    /// `((1+i)/2)[|Ψ'⟩|y⟩ − |Ψ⟩|−y⟩]`
    pub y_residual: f64,
    /// `½|↑↑⟩(|x⟩ − |−x⟩) + ½|↓↓⟩(|x⟩ + |−x⟩)`
    pub expansion_residual: f64,
}

fn combine(terms: &[(C64, &StateVector, &StateVector)]) -> Vec<C64> {
    let mut out = vec![C64::new(0.0, 0.0); 8];
    for (coefficient, pair, third) in terms {
        for (o, v) in out.iter_mut().zip(quantum::kron(pair.amplitudes(), third.amplitudes())) {
            *o += coefficient * v;
        }
    }
    out
}

/// Rebuilds the GHZ state from its x- and y-basis expansions of the third
/// particle and reports how far each reconstruction lands from it.
pub fn ghz_decomposition_residual() -> GhzResiduals {
    use CommitmentStateKind::*;

    let target = ghz_state();
    let (x, minus_x) = basis_expansion(&MeasurementAxis::X);
    let (y, minus_y) = basis_expansion(&MeasurementAxis::Y);
    let r = C64::new(FRAC_1_SQRT_2, 0.0);
    let half = C64::new(0.5, 0.0);
    let one_plus_i_half = C64::new(0.5, 0.5);
    let up_up = StateVector::basis(2, 0).expect("valid basis index");
    let down_down = StateVector::basis(2, 3).expect("valid basis index");

    let x_form = combine(&[
        (r, &commitment_state(PhiPlus), &x),
        (-r, &commitment_state(PhiMinus), &minus_x),
    ]);
    let y_form = combine(&[
        (one_plus_i_half, &commitment_state(PsiMinus), &y),
        (-one_plus_i_half, &commitment_state(PsiPlus), &minus_y),
    ]);
    let expanded = combine(&[
        (half, &up_up, &x),
        (-half, &up_up, &minus_x),
        (half, &down_down, &x),
        (half, &down_down, &minus_x),
    ]);

    GhzResiduals {
        x_residual: quantum::phase_aligned_distance(target.amplitudes(), &x_form),
        y_residual: quantum::phase_aligned_distance(target.amplitudes(), &y_form),
        expansion_residual: quantum::phase_aligned_distance(target.amplitudes(), &expanded),
    }
}
