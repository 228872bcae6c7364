//! Dense state-vector engine for one to three spin-1/2 particles.
//!
//! Basis ordering: qubit 1 is the most significant bit of the basis index and
//! spin-up (|↑⟩) is bit value 0, so a two-qubit vector is ordered
//! |↑↑⟩, |↑↓⟩, |↓↑⟩, |↓↓⟩.
//!
//! Spin directions are given in degrees (polar angle from z, azimuth from x).
//! The eigenkets along a direction use the half-angle phase convention
//!
//! ```text
//! |+⟩ = cos(θ/2) e^{-iφ/2} |↑⟩ + sin(θ/2) e^{iφ/2} |↓⟩
//! |−⟩ = −sin(θ/2) e^{-iφ/2} |↑⟩ + cos(θ/2) e^{iφ/2} |↓⟩
//! ```
//!
//! which differs from the common `cos(θ/2)|↑⟩ + e^{iφ} sin(θ/2)|↓⟩` textbook
//! form only by a global phase. Nothing downstream depends on global phase.

use std::fmt;

use nalgebra::DMatrix;
use num_complex::Complex64;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// A complex probability amplitude.
pub type C64 = Complex64;

/// Construction-time numerical tolerance (normalization, hermiticity).
pub const CONSTRUCTION_TOL: f64 = 1e-12;

/// Smallest branch probability that may be renormalized after a collapse.
pub const MIN_BRANCH_PROBABILITY: f64 = 1e-14;

const ZERO: C64 = C64::new(0.0, 0.0);

/// Cosine of an angle in degrees, exact at multiples of 30° and 45°.
pub fn cos_deg(degrees: f64) -> f64 {
    let r = degrees.rem_euclid(360.0);
    if r.fract() == 0.0 {
        let half_sqrt3 = 0.75f64.sqrt();
        let s = std::f64::consts::FRAC_1_SQRT_2;
        match r as u32 {
            0 => return 1.0,
            30 | 330 => return half_sqrt3,
            45 | 315 => return s,
            60 | 300 => return 0.5,
            90 | 270 => return 0.0,
            120 | 240 => return -0.5,
            135 | 225 => return -s,
            150 | 210 => return -half_sqrt3,
            180 => return -1.0,
            _ => {}
        }
    }
    r.to_radians().cos()
}

/// Sine of an angle in degrees, exact at multiples of 30° and 45°.
pub fn sin_deg(degrees: f64) -> f64 {
    cos_deg(degrees - 90.0)
}

/// Reduces an azimuth to `[0, 360)`.
pub fn normalize_degrees(degrees: f64) -> f64 {
    let r = degrees.rem_euclid(360.0);
    if r >= 360.0 {
        0.0
    } else {
        r
    }
}

/// A spin measurement direction.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawAxis", into = "RawAxis")]
pub struct MeasurementAxis {
    theta: f64,
    phi: f64,
}

#[derive(Serialize, Deserialize)]
struct RawAxis {
    theta: f64,
    phi: f64,
}

impl TryFrom<RawAxis> for MeasurementAxis {
    type Error = Error;

    fn try_from(raw: RawAxis) -> Result<Self> {
        MeasurementAxis::new(raw.theta, raw.phi)
    }
}

impl From<MeasurementAxis> for RawAxis {
    fn from(axis: MeasurementAxis) -> Self {
        RawAxis {
            theta: axis.theta,
            phi: axis.phi,
        }
    }
}

impl MeasurementAxis {
    /// +z, the computational basis.
    pub const Z: MeasurementAxis = MeasurementAxis { theta: 0.0, phi: 0.0 };
    /// +x.
    pub const X: MeasurementAxis = MeasurementAxis { theta: 90.0, phi: 0.0 };
    /// +y.
    pub const Y: MeasurementAxis = MeasurementAxis { theta: 90.0, phi: 90.0 };

    /// `theta` must lie in `[0, 180]`; `phi` is reduced modulo 360.
    pub fn new(theta: f64, phi: f64) -> Result<Self> {
        if !theta.is_finite() || !phi.is_finite() || !(0.0..=180.0).contains(&theta) {
            return Err(Error::InvalidAxis { theta, phi });
        }
        Ok(MeasurementAxis {
            theta,
            phi: normalize_degrees(phi),
        })
    }

    /// Polar angle in degrees.
    pub fn theta(&self) -> f64 {
        self.theta
    }

    /// Azimuthal angle in degrees, in `[0, 360)`.
    pub fn phi(&self) -> f64 {
        self.phi
    }

    /// Unit direction vector `(x, y, z)`.
    pub fn direction(&self) -> [f64; 3] {
        let st = sin_deg(self.theta);
        [st * cos_deg(self.phi), st * sin_deg(self.phi), cos_deg(self.theta)]
    }
}

impl fmt::Display for MeasurementAxis {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "(θ={}°, φ={}°)", self.theta, self.phi)
    }
}

/// A ±1 spin measurement result.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(try_from = "i8", into = "i8")]
pub enum Outcome {
    Plus,
    Minus,
}

impl Outcome {
    pub const BOTH: [Outcome; 2] = [Outcome::Plus, Outcome::Minus];

    pub fn value(self) -> i8 {
        match self {
            Outcome::Plus => 1,
            Outcome::Minus => -1,
        }
    }

    pub fn from_value(value: i64) -> Option<Self> {
        match value {
            1 => Some(Outcome::Plus),
            -1 => Some(Outcome::Minus),
            _ => None,
        }
    }

    /// Product of two spin results.
    pub fn times(self, other: Outcome) -> Outcome {
        if self == other {
            Outcome::Plus
        } else {
            Outcome::Minus
        }
    }

    /// Position in `[plus, minus]` tables.
    pub fn index(self) -> usize {
        match self {
            Outcome::Plus => 0,
            Outcome::Minus => 1,
        }
    }
}

impl TryFrom<i8> for Outcome {
    type Error = String;

    fn try_from(v: i8) -> std::result::Result<Self, String> {
        Outcome::from_value(v.into()).ok_or_else(|| format!("outcome must be +1 or -1, got {v}"))
    }
}

impl From<Outcome> for i8 {
    fn from(o: Outcome) -> i8 {
        o.value()
    }
}

impl fmt::Display for Outcome {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Outcome::Plus => "+1",
            Outcome::Minus => "-1",
        })
    }
}

/// Normalized pure state of 1, 2 or 3 qubits.
#[derive(Clone, Debug, PartialEq)]
pub struct StateVector {
    qubits: usize,
    amplitudes: Vec<C64>,
}

impl StateVector {
    /// Validates length, finiteness and normalization (within 1e-12).
    pub fn new(amplitudes: Vec<C64>) -> Result<Self> {
        let qubits = match amplitudes.len() {
            2 => 1,
            4 => 2,
            8 => 3,
            n => {
                return Err(Error::AmplitudeCount {
                    qubits: (n.max(1) as f64).log2().ceil() as usize,
                    expected: n.next_power_of_two().max(2),
                    got: n,
                })
            }
        };
        if let Some(index) = amplitudes.iter().position(|a| !a.re.is_finite() || !a.im.is_finite()) {
            return Err(Error::NonFinite { index });
        }
        let norm_sqr = norm_sqr(&amplitudes);
        if (norm_sqr - 1.0).abs() > CONSTRUCTION_TOL {
            return Err(Error::NotNormalized { norm_sqr });
        }
        Ok(StateVector { qubits, amplitudes })
    }

    /// Scales `amplitudes` to unit norm before validating.
    pub fn normalized(mut amplitudes: Vec<C64>) -> Result<Self> {
        let n = norm_sqr(&amplitudes).sqrt();
        if !n.is_finite() || n <= MIN_BRANCH_PROBABILITY {
            return Err(Error::NotNormalized { norm_sqr: n * n });
        }
        amplitudes.iter_mut().for_each(|a| *a /= n);
        StateVector::new(amplitudes)
    }

    /// Computational basis state `index` of `qubits` qubits.
    pub fn basis(qubits: usize, index: usize) -> Result<Self> {
        if !(1..=3).contains(&qubits) {
            return Err(Error::QubitCount(qubits));
        }
        let dim = 1 << qubits;
        if index >= dim {
            return Err(Error::InvalidParameter(format!(
                "basis index {index} out of range for {qubits} qubit(s)"
            )));
        }
        let mut amplitudes = vec![ZERO; dim];
        amplitudes[index] = C64::new(1.0, 0.0);
        Ok(StateVector { qubits, amplitudes })
    }

    /// |↑⟩
    pub fn up() -> Self {
        StateVector {
            qubits: 1,
            amplitudes: vec![C64::new(1.0, 0.0), ZERO],
        }
    }

    /// |↓⟩
    pub fn down() -> Self {
        StateVector {
            qubits: 1,
            amplitudes: vec![ZERO, C64::new(1.0, 0.0)],
        }
    }

    pub fn qubit_count(&self) -> usize {
        self.qubits
    }

    pub fn amplitudes(&self) -> &[C64] {
        &self.amplitudes
    }

    pub fn norm_sqr(&self) -> f64 {
        norm_sqr(&self.amplitudes)
    }

    /// `self ⊗ other`, with `self` holding the leading qubits.
    pub fn tensor(&self, other: &StateVector) -> Result<StateVector> {
        let qubits = self.qubits + other.qubits;
        if qubits > 3 {
            return Err(Error::QubitCount(qubits));
        }
        Ok(StateVector {
            qubits,
            amplitudes: kron(&self.amplitudes, &other.amplitudes),
        })
    }

    /// ⟨self|other⟩
    pub fn inner(&self, other: &StateVector) -> C64 {
        inner(&self.amplitudes, &other.amplitudes)
    }

    /// Equality up to a global phase: `1 − |⟨self|other⟩| ≤ tol`.
    pub fn equal_up_to_phase(&self, other: &StateVector, tol: f64) -> bool {
        self.qubits == other.qubits && 1.0 - self.inner(other).norm() <= tol
    }

    fn check_qubit(&self, qubit_index: usize) -> Result<usize> {
        if qubit_index == 0 || qubit_index > self.qubits {
            return Err(Error::QubitIndex {
                index: qubit_index,
                qubit_count: self.qubits,
            });
        }
        Ok(self.qubits - qubit_index)
    }

    /// Applies the projector onto `outcome` of `axis` at `qubit_index`
    /// without renormalizing. Returns the branch probability and the
    /// projected amplitudes.
    pub fn project(&self, qubit_index: usize, axis: &MeasurementAxis, outcome: Outcome) -> Result<(f64, Vec<C64>)> {
        let shift = self.check_qubit(qubit_index)?;
        let ket = axis_ket(axis, outcome);
        Ok(project_amplitudes(&self.amplitudes, shift, &ket))
    }

    /// Born probability of `outcome` for a spin measurement of one qubit.
    pub fn outcome_probability(&self, qubit_index: usize, axis: &MeasurementAxis, outcome: Outcome) -> Result<f64> {
        Ok(self.project(qubit_index, axis, outcome)?.0)
    }
}

fn norm_sqr(amplitudes: &[C64]) -> f64 {
    amplitudes.iter().map(|a| a.norm_sqr()).sum()
}

/// Kronecker product of two amplitude vectors.
pub fn kron(a: &[C64], b: &[C64]) -> Vec<C64> {
    a.iter().flat_map(|x| b.iter().map(move |y| x * y)).collect()
}

/// ⟨a|b⟩ for raw amplitude vectors of equal length.
pub fn inner(a: &[C64], b: &[C64]) -> C64 {
    assert_eq!(a.len(), b.len(), "inner product of vectors with different dimensions");
    a.iter().zip(b).map(|(x, y)| x.conj() * y).sum()
}

/// `min over α of ‖a − e^{iα} b‖`, computed by aligning `b` to `a` with the
/// optimal phase and taking the direct difference norm.
pub fn phase_aligned_distance(a: &[C64], b: &[C64]) -> f64 {
    let overlap = inner(b, a);
    let phase = if overlap.norm() > 0.0 {
        overlap / overlap.norm()
    } else {
        C64::new(1.0, 0.0)
    };
    a.iter()
        .zip(b)
        .map(|(x, y)| (x - phase * y).norm_sqr())
        .sum::<f64>()
        .sqrt()
}

fn project_amplitudes(amplitudes: &[C64], shift: usize, ket: &[C64; 2]) -> (f64, Vec<C64>) {
    let mask = 1usize << shift;
    let mut out = vec![ZERO; amplitudes.len()];
    let mut probability = 0.0;
    for i0 in (0..amplitudes.len()).filter(|i| i & mask == 0) {
        let i1 = i0 | mask;
        let c = ket[0].conj() * amplitudes[i0] + ket[1].conj() * amplitudes[i1];
        out[i0] = ket[0] * c;
        out[i1] = ket[1] * c;
        probability += c.norm_sqr();
    }
    (probability, out)
}

fn axis_ket(axis: &MeasurementAxis, outcome: Outcome) -> [C64; 2] {
    let (c, s) = (cos_deg(axis.theta / 2.0), sin_deg(axis.theta / 2.0));
    let half_phi = axis.phi / 2.0;
    let down_phase = C64::new(cos_deg(half_phi), sin_deg(half_phi));
    let up_phase = down_phase.conj();
    match outcome {
        Outcome::Plus => [up_phase * c, down_phase * s],
        Outcome::Minus => [up_phase * -s, down_phase * c],
    }
}

/// The spin-up and spin-down kets along `axis`, `(|+⟩, |−⟩)`.
///
/// These invert the expansion
/// `|↑⟩ = e^{iφ/2}[cos(θ/2)|+⟩ − sin(θ/2)|−⟩]`,
/// `|↓⟩ = e^{−iφ/2}[sin(θ/2)|+⟩ + cos(θ/2)|−⟩]`.
pub fn basis_expansion(axis: &MeasurementAxis) -> (StateVector, StateVector) {
    let ket = |o| StateVector {
        qubits: 1,
        amplitudes: axis_ket(axis, o).to_vec(),
    };
    (ket(Outcome::Plus), ket(Outcome::Minus))
}

/// A 2×2 complex matrix acting on one qubit.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Observable2x2 {
    entries: [[C64; 2]; 2],
}

impl Observable2x2 {
    pub fn new(entries: [[C64; 2]; 2]) -> Self {
        Observable2x2 { entries }
    }

    pub fn entries(&self) -> &[[C64; 2]; 2] {
        &self.entries
    }

    pub fn is_hermitian(&self, tol: f64) -> bool {
        let m = &self.entries;
        m[0][0].im.abs() <= tol && m[1][1].im.abs() <= tol && (m[0][1] - m[1][0].conj()).norm() <= tol
    }

    /// Eigenvalues (descending) of the Hermitian part.
    pub fn eigenvalues(&self) -> [f64; 2] {
        let m = &self.entries;
        let (a, d) = (m[0][0].re, m[1][1].re);
        let mean = (a + d) / 2.0;
        let radius = (((a - d) / 2.0).powi(2) + m[0][1].norm_sqr()).sqrt();
        [mean + radius, mean - radius]
    }

    pub fn apply(&self, v: [C64; 2]) -> [C64; 2] {
        let m = &self.entries;
        [m[0][0] * v[0] + m[0][1] * v[1], m[1][0] * v[0] + m[1][1] * v[1]]
    }
}

/// `(+1)|+⟩⟨+| + (−1)|−⟩⟨−|` for the kets along `axis`.
pub fn spin_observable(axis: &MeasurementAxis) -> Observable2x2 {
    let plus = axis_ket(axis, Outcome::Plus);
    let minus = axis_ket(axis, Outcome::Minus);
    let mut entries = [[ZERO; 2]; 2];
    for (r, row) in entries.iter_mut().enumerate() {
        for (c, e) in row.iter_mut().enumerate() {
            *e = plus[r] * plus[c].conj() - minus[r] * minus[c].conj();
        }
    }
    Observable2x2 { entries }
}

/// Born-rule measurement of one qubit along `axis`.
///
/// Returns the outcome and the renormalized post-measurement state.
pub fn measure_qubit<R: Rng + ?Sized>(
    state: &StateVector,
    qubit_index: usize,
    axis: &MeasurementAxis,
    rng: &mut R,
) -> Result<(Outcome, StateVector)> {
    let (p_plus, plus) = state.project(qubit_index, axis, Outcome::Plus)?;
    let (p_minus, minus) = state.project(qubit_index, axis, Outcome::Minus)?;
    let u: f64 = rng.random();
    let (outcome, probability, mut amplitudes) = if u * (p_plus + p_minus) < p_plus {
        (Outcome::Plus, p_plus, plus)
    } else {
        (Outcome::Minus, p_minus, minus)
    };
    if probability < MIN_BRANCH_PROBABILITY {
        return Err(Error::Invariant(format!(
            "sampled measurement branch has probability {probability:e}"
        )));
    }
    let scale = probability.sqrt();
    amplitudes.iter_mut().for_each(|a| *a /= scale);
    Ok((
        outcome,
        StateVector {
            qubits: state.qubits,
            amplitudes,
        },
    ))
}

/// `‖P_k ⋯ P_1 ψ‖²` for a sequence of single-qubit projectors applied in
/// order. Each step is `(qubit_index, axis, outcome)`.
pub fn sequence_probability(state: &StateVector, steps: &[(usize, MeasurementAxis, Outcome)]) -> Result<f64> {
    let mut amplitudes = state.amplitudes.clone();
    for (qubit, axis, outcome) in steps {
        let shift = state.check_qubit(*qubit)?;
        amplitudes = project_amplitudes(&amplitudes, shift, &axis_ket(axis, *outcome)).1;
    }
    Ok(norm_sqr(&amplitudes))
}

/// Joint outcome probabilities of measuring qubit `first.0` along `first.1`
/// and then qubit `second.0` along `second.1`, indexed `[m1][m2]` with
/// `Outcome::index` (plus first).
pub fn joint_distribution(
    state: &StateVector,
    first: (usize, MeasurementAxis),
    second: (usize, MeasurementAxis),
) -> Result<[[f64; 2]; 2]> {
    let mut table = [[0.0; 2]; 2];
    for m1 in Outcome::BOTH {
        for m2 in Outcome::BOTH {
            table[m1.index()][m2.index()] =
                sequence_probability(state, &[(first.0, first.1, m1), (second.0, second.1, m2)])?;
        }
    }
    Ok(table)
}

/// `Σ m1·m2·p(m1, m2)` over the four projector branches on qubits 1 and 2.
pub fn branch_sum_correlation(state: &StateVector, a: &MeasurementAxis, b: &MeasurementAxis) -> Result<f64> {
    let table = joint_distribution(state, (1, *a), (2, *b))?;
    let mut sum = 0.0;
    for m1 in Outcome::BOTH {
        for m2 in Outcome::BOTH {
            sum += f64::from(m1.times(m2).value()) * table[m1.index()][m2.index()];
        }
    }
    Ok(sum)
}

/// `⟨ψ|σ_a ⊗ σ_b|ψ⟩` for a two-qubit state.
pub fn expectation_product(state: &StateVector, a: &MeasurementAxis, b: &MeasurementAxis) -> Result<f64> {
    if state.qubits != 2 {
        return Err(Error::QubitCount(state.qubits));
    }
    let sa = spin_observable(a);
    let sb = spin_observable(b);
    let psi = &state.amplitudes;
    let mut value = ZERO;
    for i in 0..2 {
        for j in 0..2 {
            let mut acc = ZERO;
            for k in 0..2 {
                for l in 0..2 {
                    acc += sa.entries[i][k] * sb.entries[j][l] * psi[2 * k + l];
                }
            }
            value += psi[2 * i + j].conj() * acc;
        }
    }
    if value.im.abs() >= CONSTRUCTION_TOL {
        return Err(Error::Invariant(format!(
            "expectation of a Hermitian operator has imaginary part {:e}",
            value.im
        )));
    }
    Ok(value.re)
}

/// Density matrix over 1–3 qubits, stored row-major.
#[derive(Clone, Debug, PartialEq)]
pub struct DensityMatrix {
    qubits: usize,
    dim: usize,
    entries: Vec<C64>,
}

impl DensityMatrix {
    /// `|ψ⟩⟨ψ|`
    pub fn pure(state: &StateVector) -> Self {
        let dim = state.amplitudes.len();
        let a = &state.amplitudes;
        let entries = (0..dim * dim).map(|k| a[k / dim] * a[k % dim].conj()).collect();
        DensityMatrix {
            qubits: state.qubits,
            dim,
            entries,
        }
    }

    pub fn qubit_count(&self) -> usize {
        self.qubits
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn get(&self, row: usize, col: usize) -> C64 {
        self.entries[row * self.dim + col]
    }

    pub fn trace(&self) -> C64 {
        (0..self.dim).map(|i| self.get(i, i)).sum()
    }

    pub fn is_hermitian(&self, tol: f64) -> bool {
        (0..self.dim).all(|r| (0..self.dim).all(|c| (self.get(r, c) - self.get(c, r).conj()).norm() <= tol))
    }

    /// Largest entrywise modulus of `self − other`.
    pub fn max_abs_diff(&self, other: &DensityMatrix) -> f64 {
        assert_eq!(
            self.dim, other.dim,
            "comparing density matrices of different dimensions"
        );
        self.entries
            .iter()
            .zip(&other.entries)
            .map(|(a, b)| (a - b).norm())
            .fold(0.0, f64::max)
    }

    /// Eigenvalues of the Hermitian matrix, ascending.
    pub fn eigenvalues(&self) -> Vec<f64> {
        let m = DMatrix::from_fn(self.dim, self.dim, |r, c| self.get(r, c));
        let mut values: Vec<f64> = m.symmetric_eigenvalues().iter().copied().collect();
        values.sort_by(f64::total_cmp);
        values
    }

    /// Traces out qubit `qubit_index` (1-based).
    pub fn partial_trace(&self, qubit_index: usize) -> Result<DensityMatrix> {
        if self.qubits < 2 {
            return Err(Error::QubitCount(self.qubits));
        }
        if qubit_index == 0 || qubit_index > self.qubits {
            return Err(Error::QubitIndex {
                index: qubit_index,
                qubit_count: self.qubits,
            });
        }
        let shift = self.qubits - qubit_index;
        let low = (1usize << shift) - 1;
        let expand = |reduced: usize, bit: usize| ((reduced & !low) << 1) | (bit << shift) | (reduced & low);
        let dim = self.dim / 2;
        let mut entries = vec![ZERO; dim * dim];
        for r in 0..dim {
            for c in 0..dim {
                entries[r * dim + c] = (0..2).map(|b| self.get(expand(r, b), expand(c, b))).sum();
            }
        }
        Ok(DensityMatrix {
            qubits: self.qubits - 1,
            dim,
            entries,
        })
    }

    /// Real and imaginary parts as nested rows, for reports.
    pub fn to_parts(&self) -> MatrixParts {
        let rows = |f: fn(&C64) -> f64| {
            (0..self.dim)
                .map(|r| (0..self.dim).map(|c| f(&self.get(r, c))).collect())
                .collect()
        };
        MatrixParts {
            re: rows(|z| z.re),
            im: rows(|z| z.im),
        }
    }
}

/// Serializable split of a complex matrix.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MatrixParts {
    pub re: Vec<Vec<f64>>,
    pub im: Vec<Vec<f64>>,
}

/// `Σ wᵢ |ψᵢ⟩⟨ψᵢ|`. Weights must be nonnegative and sum to 1 within 1e-12.
pub fn mixture_density(states: &[(StateVector, f64)]) -> Result<DensityMatrix> {
    let Some((first, _)) = states.first() else {
        return Err(Error::InvalidWeights("mixture needs at least one state".into()));
    };
    if let Some((_, w)) = states.iter().find(|(_, w)| !w.is_finite() || *w < 0.0) {
        return Err(Error::InvalidWeights(format!("weight {w} is negative or not finite")));
    }
    let total: f64 = states.iter().map(|(_, w)| w).sum();
    if (total - 1.0).abs() > CONSTRUCTION_TOL {
        return Err(Error::InvalidWeights(format!("weights sum to {total}, expected 1")));
    }
    if let Some((s, _)) = states.iter().find(|(s, _)| s.qubits != first.qubits) {
        return Err(Error::QubitCount(s.qubits));
    }
    let dim = first.amplitudes.len();
    let mut entries = vec![ZERO; dim * dim];
    for (state, weight) in states {
        for (e, p) in entries.iter_mut().zip(DensityMatrix::pure(state).entries) {
            *e += p * *weight;
        }
    }
    Ok(DensityMatrix {
        qubits: first.qubits,
        dim,
        entries,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng;
    use std::f64::consts::FRAC_1_SQRT_2;

    fn c(re: f64, im: f64) -> C64 {
        C64::new(re, im)
    }

    fn phi_plus() -> StateVector {
        StateVector::new(vec![c(FRAC_1_SQRT_2, 0.0), ZERO, ZERO, c(FRAC_1_SQRT_2, 0.0)]).unwrap()
    }

    #[test]
    fn axis_validation() {
        assert!(MeasurementAxis::new(-1.0, 0.0).is_err());
        assert!(MeasurementAxis::new(180.5, 0.0).is_err());
        assert!(MeasurementAxis::new(f64::NAN, 0.0).is_err());
        assert_eq!(MeasurementAxis::new(10.0, 370.0).unwrap().phi(), 10.0);
        assert_eq!(MeasurementAxis::new(10.0, -90.0).unwrap().phi(), 270.0);
        assert_eq!(MeasurementAxis::new(10.0, 360.0).unwrap().phi(), 0.0);
    }

    #[test]
    fn exact_special_angles() {
        assert_eq!(cos_deg(90.0), 0.0);
        assert_eq!(sin_deg(180.0), 0.0);
        assert_eq!(cos_deg(-90.0), 0.0);
        assert_eq!(sin_deg(45.0), FRAC_1_SQRT_2);
        assert_eq!(cos_deg(60.0), 0.5);
        assert!((cos_deg(17.0) - 17f64.to_radians().cos()).abs() < 1e-15);
    }

    #[test]
    fn state_construction_checks() {
        assert!(matches!(
            StateVector::new(vec![c(1.0, 0.0); 3]),
            Err(Error::AmplitudeCount { .. })
        ));
        assert!(matches!(
            StateVector::new(vec![c(1.0, 0.0), c(1.0, 0.0)]),
            Err(Error::NotNormalized { .. })
        ));
        assert!(matches!(
            StateVector::new(vec![c(f64::NAN, 0.0), ZERO]),
            Err(Error::NonFinite { index: 0 })
        ));
        assert!(StateVector::basis(4, 0).is_err());
        let s = StateVector::normalized(vec![c(3.0, 0.0), c(0.0, 4.0)]).unwrap();
        assert!((s.norm_sqr() - 1.0).abs() < 1e-15);
    }

    #[test]
    fn z_observable_is_diagonal() {
        let m = spin_observable(&MeasurementAxis::Z);
        assert_eq!(m.entries(), &[[c(1.0, 0.0), ZERO], [ZERO, c(-1.0, 0.0)]]);
    }

    #[test]
    fn x_observable_is_pauli_x() {
        let m = spin_observable(&MeasurementAxis::X);
        let e = m.entries();
        for (got, want) in [(e[0][0], 0.0), (e[0][1], 1.0), (e[1][0], 1.0), (e[1][1], 0.0)] {
            assert!((got - c(want, 0.0)).norm() < 1e-15, "{got} vs {want}");
        }
    }

    #[test]
    fn y_observable_eigenvectors_match_y_kets() {
        let m = spin_observable(&MeasurementAxis::Y);
        let e = m.entries();
        assert!((e[0][1] - c(0.0, -1.0)).norm() < 1e-15);
        assert!((e[1][0] - c(0.0, 1.0)).norm() < 1e-15);
        // |y⟩ ∝ (|↑⟩ + i|↓⟩)/√2 and |−y⟩ ∝ (|↑⟩ − i|↓⟩)/√2.
        let y = StateVector::new(vec![c(FRAC_1_SQRT_2, 0.0), c(0.0, FRAC_1_SQRT_2)]).unwrap();
        let my = StateVector::new(vec![c(FRAC_1_SQRT_2, 0.0), c(0.0, -FRAC_1_SQRT_2)]).unwrap();
        let (plus, minus) = basis_expansion(&MeasurementAxis::Y);
        assert!(plus.equal_up_to_phase(&y, 1e-12));
        assert!(minus.equal_up_to_phase(&my, 1e-12));
        let applied = m.apply([y.amplitudes()[0], y.amplitudes()[1]]);
        assert!((applied[0] - y.amplitudes()[0]).norm() < 1e-15);
        assert!((applied[1] - y.amplitudes()[1]).norm() < 1e-15);
    }

    #[test]
    fn z_expansion_is_computational_basis() {
        let (plus, minus) = basis_expansion(&MeasurementAxis::Z);
        assert_eq!(plus, StateVector::up());
        assert_eq!(minus, StateVector::down());
    }

    #[test]
    fn x_expansion_coefficients() {
        // ⟨±x|↑⟩ must be (1/√2, −1/√2) and ⟨±x|↓⟩ (1/√2, 1/√2).
        let (x, mx) = basis_expansion(&MeasurementAxis::X);
        let up = StateVector::up();
        let down = StateVector::down();
        assert!((x.inner(&up) - c(FRAC_1_SQRT_2, 0.0)).norm() < 1e-15);
        assert!((mx.inner(&up) - c(-FRAC_1_SQRT_2, 0.0)).norm() < 1e-15);
        assert!((x.inner(&down) - c(FRAC_1_SQRT_2, 0.0)).norm() < 1e-15);
        assert!((mx.inner(&down) - c(FRAC_1_SQRT_2, 0.0)).norm() < 1e-15);
    }

    #[test]
    fn y_expansion_coefficients() {
        // |↑⟩ = (1+i)/2 (|y⟩ − |−y⟩), |↓⟩ = (1−i)/2 (|y⟩ + |−y⟩).
        let (y, my) = basis_expansion(&MeasurementAxis::Y);
        let up = StateVector::up();
        let down = StateVector::down();
        assert!((y.inner(&up) - c(0.5, 0.5)).norm() < 1e-15);
        assert!((my.inner(&up) - c(-0.5, -0.5)).norm() < 1e-15);
        assert!((y.inner(&down) - c(0.5, -0.5)).norm() < 1e-15);
        assert!((my.inner(&down) - c(0.5, -0.5)).norm() < 1e-15);
    }

    #[test]
    fn eigenstate_measurement_is_deterministic() {
        let mut r = rng::from_seed(1);
        for _ in 0..100 {
            let (o, s) = measure_qubit(&StateVector::up(), 1, &MeasurementAxis::Z, &mut r).unwrap();
            assert_eq!(o, Outcome::Plus);
            assert_eq!(s, StateVector::up());
        }
    }

    #[test]
    fn bell_state_z_collapse() {
        let up_up = StateVector::basis(2, 0).unwrap();
        let down_down = StateVector::basis(2, 3).unwrap();
        let mut r = rng::from_seed(2);
        let mut plus = 0;
        for _ in 0..2000 {
            let (o, s) = measure_qubit(&phi_plus(), 1, &MeasurementAxis::Z, &mut r).unwrap();
            match o {
                Outcome::Plus => {
                    plus += 1;
                    assert!(s.equal_up_to_phase(&up_up, 1e-12));
                }
                Outcome::Minus => assert!(s.equal_up_to_phase(&down_down, 1e-12)),
            }
        }
        // 4 standard errors of Bin(2000, 1/2) is ~89.
        assert!((plus as i64 - 1000).abs() < 90, "plus count {plus}");
    }

    #[test]
    fn bell_state_x_x_product_is_plus_one() {
        let table = joint_distribution(&phi_plus(), (1, MeasurementAxis::X), (2, MeasurementAxis::X)).unwrap();
        assert!((table[0][0] - 0.5).abs() < 1e-15);
        assert!((table[1][1] - 0.5).abs() < 1e-15);
        assert!(table[0][1].abs() < 1e-15 && table[1][0].abs() < 1e-15);

        let mut r = rng::from_seed(3);
        for _ in 0..500 {
            let (m1, s) = measure_qubit(&phi_plus(), 1, &MeasurementAxis::X, &mut r).unwrap();
            let (m2, _) = measure_qubit(&s, 2, &MeasurementAxis::X, &mut r).unwrap();
            assert_eq!(m1.times(m2), Outcome::Plus);
        }
    }

    #[test]
    fn repeated_measurement_agrees() {
        let axis = MeasurementAxis::new(37.0, 211.0).unwrap();
        let mut r = rng::from_seed(4);
        for _ in 0..200 {
            let (o1, s) = measure_qubit(&phi_plus(), 2, &axis, &mut r).unwrap();
            let (o2, _) = measure_qubit(&s, 2, &axis, &mut r).unwrap();
            assert_eq!(o1, o2);
        }
    }

    #[test]
    fn bad_qubit_index() {
        let mut r = rng::from_seed(5);
        assert!(matches!(
            measure_qubit(&phi_plus(), 3, &MeasurementAxis::Z, &mut r),
            Err(Error::QubitIndex {
                index: 3,
                qubit_count: 2
            })
        ));
        assert!(measure_qubit(&phi_plus(), 0, &MeasurementAxis::Z, &mut r).is_err());
    }

    #[test]
    fn expectation_examples() {
        let z = MeasurementAxis::Z;
        assert!((expectation_product(&phi_plus(), &z, &z).unwrap() - 1.0).abs() < 1e-12);
        let a = MeasurementAxis::new(90.0, 30.0).unwrap();
        let b = MeasurementAxis::new(90.0, 330.0).unwrap();
        assert!((expectation_product(&phi_plus(), &a, &b).unwrap() - 1.0).abs() < 1e-12);
        let psi_minus = StateVector::new(vec![c(FRAC_1_SQRT_2, 0.0), ZERO, ZERO, c(0.0, -FRAC_1_SQRT_2)]).unwrap();
        let d = MeasurementAxis::new(90.0, 45.0).unwrap();
        assert!((expectation_product(&psi_minus, &d, &d).unwrap() + 1.0).abs() < 1e-12);
        assert!(expectation_product(&StateVector::up(), &z, &z).is_err());
    }

    #[test]
    fn mixture_examples() {
        let rho = mixture_density(&[(phi_plus(), 1.0)]).unwrap();
        assert!((rho.trace() - c(1.0, 0.0)).norm() < 1e-12);
        assert!((rho.get(0, 3) - c(0.5, 0.0)).norm() < 1e-15);

        let s = FRAC_1_SQRT_2;
        let phi_minus = StateVector::new(vec![c(s, 0.0), ZERO, ZERO, c(-s, 0.0)]).unwrap();
        let psi_plus = StateVector::new(vec![c(s, 0.0), ZERO, ZERO, c(0.0, s)]).unwrap();
        let psi_minus = StateVector::new(vec![c(s, 0.0), ZERO, ZERO, c(0.0, -s)]).unwrap();
        let phis = mixture_density(&[(phi_plus(), 0.5), (phi_minus, 0.5)]).unwrap();
        let psis = mixture_density(&[(psi_plus, 0.5), (psi_minus, 0.5)]).unwrap();

        let mut expected = DensityMatrix::pure(&StateVector::basis(2, 0).unwrap());
        expected.entries[0] = c(0.5, 0.0);
        expected.entries[15] = c(0.5, 0.0);
        assert!(phis.max_abs_diff(&expected) < 1e-15);
        assert!(psis.max_abs_diff(&expected) < 1e-15);
        assert!(phis.eigenvalues().iter().all(|&e| e > -1e-10));
    }

    #[test]
    fn mixture_rejects_bad_weights() {
        assert!(matches!(
            mixture_density(&[(phi_plus(), 0.7)]),
            Err(Error::InvalidWeights(_))
        ));
        assert!(matches!(
            mixture_density(&[(phi_plus(), 1.5), (phi_plus(), -0.5)]),
            Err(Error::InvalidWeights(_))
        ));
        assert!(mixture_density(&[]).is_err());
        assert!(mixture_density(&[(phi_plus(), 0.5), (StateVector::up(), 0.5)]).is_err());
    }

    #[test]
    fn partial_trace_of_bell_state() {
        let rho = DensityMatrix::pure(&phi_plus());
        for q in [1, 2] {
            let reduced = rho.partial_trace(q).unwrap();
            assert_eq!(reduced.dim(), 2);
            assert!((reduced.get(0, 0) - c(0.5, 0.0)).norm() < 1e-15);
            assert!((reduced.get(1, 1) - c(0.5, 0.0)).norm() < 1e-15);
            assert!(reduced.get(0, 1).norm() < 1e-15);
        }
        assert!(DensityMatrix::pure(&StateVector::up()).partial_trace(1).is_err());
    }

    #[test]
    fn outcome_serde() {
        assert_eq!(serde_json::to_string(&Outcome::Minus).unwrap(), "-1");
        assert_eq!(serde_json::from_str::<Outcome>("1").unwrap(), Outcome::Plus);
        assert!(serde_json::from_str::<Outcome>("0").is_err());
    }
}
