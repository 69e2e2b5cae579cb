//! Truth tables, the three classical fidelities, and the parallelism
//! criterion built on them.
//!
//! Labels are two-bit values `a b` packed as `(a << 1) | b`, with `a`
//! belonging to qubit one (the control). Bit 0 stands for eigenvalue +1 in
//! whatever basis the row or column refers to, so the ZZ table is the usual
//! computational-basis truth table.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::algebra::{eigenstate, ket_product, projector, trace_product, Mat4, Pauli, Sign, StateVector2, SuperOperator};
use crate::error::{Error, Result};

/// Tolerance on trace preservation before probabilities are trusted.
pub const TP_TOL: f64 = 1e-9;

/// Sums within this distance of 2 count as equal to 2, so exact-threshold
/// channels (L1, L2, L3, the mixture at p_E = 1/3) do not pass on rounding
/// noise.
pub const CRITERION_TOL: f64 = 1e-12;

/// Default spread allowed between fidelities before the single-parameter
/// mixture model is declared inapplicable.
pub const DEFAULT_EQUALITY_TOL: f64 = 0.01;

pub const LABELS: [u8; 4] = [0b00, 0b01, 0b10, 0b11];

pub fn label_bits(label: u8) -> (u8, u8) {
    ((label >> 1) & 1, label & 1)
}

pub fn label_string(label: u8) -> String {
    let (a, b) = label_bits(label);
    format!("{a}{b}")
}

pub fn parse_label(s: &str) -> Option<u8> {
    match s {
        "00" => Some(0),
        "01" => Some(1),
        "10" => Some(2),
        "11" => Some(3),
        _ => None,
    }
}

/// Parity of a label as the product of its ±1 eigenvalues.
fn eigen_parity(label: u8) -> i8 {
    let (a, b) = label_bits(label);
    if a ^ b == 0 {
        1
    } else {
        -1
    }
}

/// Preparation bases `k ⊗ l` and measurement bases `i ⊗ j` of one
/// truth-table experiment.
#[derive(Copy, Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct BasisSetting {
    pub input_basis: [Pauli; 2],
    pub output_basis: [Pauli; 2],
}

impl BasisSetting {
    pub const ZZ: BasisSetting = BasisSetting {
        input_basis: [Pauli::Z, Pauli::Z],
        output_basis: [Pauli::Z, Pauli::Z],
    };
    pub const XX: BasisSetting = BasisSetting {
        input_basis: [Pauli::X, Pauli::X],
        output_basis: [Pauli::X, Pauli::X],
    };
    pub const XZ_TO_YY: BasisSetting = BasisSetting {
        input_basis: [Pauli::X, Pauli::Z],
        output_basis: [Pauli::Y, Pauli::Y],
    };

    /// The three canonical settings, in F1, F2, F3 order.
    pub const CANONICAL: [BasisSetting; 3] = [Self::ZZ, Self::XX, Self::XZ_TO_YY];

    pub fn new(input_basis: [Pauli; 2], output_basis: [Pauli; 2]) -> Self {
        BasisSetting {
            input_basis,
            output_basis,
        }
    }

    fn has_identity(&self) -> bool {
        self.input_basis.contains(&Pauli::I) || self.output_basis.contains(&Pauli::I)
    }
}

impl fmt::Display for BasisSetting {
    /// Written as `ij|kl`: output bases, then input bases.
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{}{}|{}{}",
            self.output_basis[0], self.output_basis[1], self.input_basis[0], self.input_basis[1]
        )
    }
}

/// Conditional outcome probabilities `P(out | in)` for one setting; row is
/// the input label, column the outcome label.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ProbabilityTable {
    pub setting: BasisSetting,
    pub probs: [[f64; 4]; 4],
}

impl ProbabilityTable {
    pub fn new(setting: BasisSetting, probs: [[f64; 4]; 4]) -> Result<Self> {
        for (i, row) in probs.iter().enumerate() {
            if let Some(p) = row.iter().find(|p| !(-1e-10..=1.0 + 1e-10).contains(*p)) {
                return Err(Error::InvalidTable(format!(
                    "entry {p} in row {} is not a probability",
                    label_string(i as u8)
                )));
            }
            let sum: f64 = row.iter().sum();
            if (sum - 1.0).abs() > 1e-9 {
                return Err(Error::InvalidTable(format!(
                    "row {} sums to {sum}",
                    label_string(i as u8)
                )));
            }
        }
        Ok(ProbabilityTable { setting, probs })
    }

    pub fn get(&self, input: u8, outcome: u8) -> f64 {
        self.probs[input as usize][outcome as usize]
    }

    pub fn row(&self, input: u8) -> &[f64; 4] {
        &self.probs[input as usize]
    }
}

/// Which of the three classical logical operations a fidelity refers to.
#[derive(Copy, Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum FidelityKind {
    F1,
    F2,
    F3,
}

impl FidelityKind {
    pub const ALL: [FidelityKind; 3] = [FidelityKind::F1, FidelityKind::F2, FidelityKind::F3];

    pub fn setting(self) -> BasisSetting {
        match self {
            FidelityKind::F1 => BasisSetting::ZZ,
            FidelityKind::F2 => BasisSetting::XX,
            FidelityKind::F3 => BasisSetting::XZ_TO_YY,
        }
    }

    /// Whether `outcome` counts as a correct output for `input`.
    pub fn accepts(self, input: u8, outcome: u8) -> bool {
        let (a, b) = label_bits(input);
        match self {
            // CNOT in the computational basis: (a, b) → (a, a ⊕ b).
            FidelityKind::F1 => outcome == ((a << 1) | (a ^ b)),
            // CNOT in the X basis with the roles swapped: (a, b) → (a ⊕ b, b).
            FidelityKind::F2 => outcome == (((a ^ b) << 1) | b),
            // Only the correlation is defined: ⟨Y⊗Y⟩(out) = −⟨X⊗Z⟩(in).
            FidelityKind::F3 => eigen_parity(outcome) == -eigen_parity(input),
        }
    }

    pub fn accepted_outcomes(self, input: u8) -> Vec<u8> {
        LABELS.into_iter().filter(|&o| self.accepts(input, o)).collect()
    }
}

impl fmt::Display for FidelityKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{self:?}")
    }
}

fn input_state<K>(setting: &BasisSetting, label: u8, ket: &K) -> Mat4
where
    K: Fn(Pauli, Sign) -> StateVector2,
{
    let (a, b) = label_bits(label);
    let psi = ket_product(
        &ket(setting.input_basis[0], Sign::from_bit(a)),
        &ket(setting.input_basis[1], Sign::from_bit(b)),
    );
    projector(&psi)
}

fn outcome_projector<K>(setting: &BasisSetting, label: u8, ket: &K) -> Mat4
where
    K: Fn(Pauli, Sign) -> StateVector2,
{
    let (a, b) = label_bits(label);
    let psi = ket_product(
        &ket(setting.output_basis[0], Sign::from_bit(a)),
        &ket(setting.output_basis[1], Sign::from_bit(b)),
    );
    projector(&psi)
}

/// Raw table with caller-supplied eigenstate kets; no validation.
pub(crate) fn raw_table_with<K>(s: &SuperOperator, setting: &BasisSetting, ket: K) -> [[f64; 4]; 4]
where
    K: Fn(Pauli, Sign) -> StateVector2,
{
    let mut probs = [[0.0; 4]; 4];
    for input in LABELS {
        let out = s.apply(&input_state(setting, input, &ket));
        for outcome in LABELS {
            probs[input as usize][outcome as usize] =
                trace_product(&outcome_projector(setting, outcome, &ket), &out);
        }
    }
    probs
}

fn standard_ket(b: Pauli, s: Sign) -> StateVector2 {
    eigenstate(b, s).expect("identity basis rejected before table evaluation")
}

pub fn truth_table(s: &SuperOperator, setting: BasisSetting) -> Result<ProbabilityTable> {
    if setting.has_identity() {
        return Err(Error::IdentityBasis);
    }
    s.require_tp(TP_TOL)?;
    ProbabilityTable::new(setting, raw_table_with(s, &setting, standard_ket))
}

/// Average probability of a correct output over the four inputs.
pub fn fidelity(kind: FidelityKind, table: &ProbabilityTable) -> Result<f64> {
    let expected = kind.setting();
    if table.setting != expected {
        return Err(Error::SettingMismatch {
            expected: expected.to_string(),
            found: table.setting.to_string(),
        });
    }
    let total: f64 = LABELS
        .into_iter()
        .flat_map(|i| kind.accepted_outcomes(i).into_iter().map(move |o| (i, o)))
        .map(|(i, o)| table.get(i, o))
        .sum();
    Ok(total / 4.0)
}

pub fn fidelity_f1(table: &ProbabilityTable) -> Result<f64> {
    fidelity(FidelityKind::F1, table)
}

pub fn fidelity_f2(table: &ProbabilityTable) -> Result<f64> {
    fidelity(FidelityKind::F2, table)
}

pub fn fidelity_f3(table: &ProbabilityTable) -> Result<f64> {
    fidelity(FidelityKind::F3, table)
}

/// The three classical fidelities with the quantities derived from them.
#[derive(Copy, Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FidelityTriple {
    #[serde(rename = "F1")]
    pub f1: f64,
    #[serde(rename = "F2")]
    pub f2: f64,
    #[serde(rename = "F3")]
    pub f3: f64,
}

impl FidelityTriple {
    /// Accepts values in `[0, 1]` up to rounding noise of 1e-9.
    pub fn new(f1: f64, f2: f64, f3: f64) -> Result<Self> {
        for (name, value) in [("F1", f1), ("F2", f2), ("F3", f3)] {
            if !value.is_finite() || !(-1e-9..=1.0 + 1e-9).contains(&value) {
                return Err(Error::OutOfRange { name, value });
            }
        }
        Ok(FidelityTriple { f1, f2, f3 })
    }

    pub fn get(&self, kind: FidelityKind) -> f64 {
        match kind {
            FidelityKind::F1 => self.f1,
            FidelityKind::F2 => self.f2,
            FidelityKind::F3 => self.f3,
        }
    }

    pub fn sum(&self) -> f64 {
        self.f1 + self.f2 + self.f3
    }

    pub fn mean(&self) -> f64 {
        self.sum() / 3.0
    }

    /// Effective number of local operations performed in parallel,
    /// `2(F1 + F2 + F3) − 3`.
    pub fn parallelism_number(&self) -> f64 {
        2.0 * self.sum() - 3.0
    }

    /// Strict: a sum of exactly 2 does not certify parallelism.
    pub fn criterion_met(&self) -> bool {
        criterion_from_sum(self.sum())
    }

    pub fn concurrence_bound(&self) -> f64 {
        self.sum() - 2.0
    }

    pub fn max_spread(&self) -> f64 {
        let v = [self.f1, self.f2, self.f3];
        let max = v.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let min = v.iter().copied().fold(f64::INFINITY, f64::min);
        max - min
    }
}

/// `sum > 2`, with sums inside [`CRITERION_TOL`] of 2 treated as equal.
pub fn criterion_from_sum(sum: f64) -> bool {
    sum > 2.0 + CRITERION_TOL
}

/// The three canonical tables plus their fidelities.
#[derive(Clone, Debug)]
pub struct ChannelEvaluation {
    pub tables: [ProbabilityTable; 3],
    pub fidelities: FidelityTriple,
}

pub fn evaluate_tables(tables: [ProbabilityTable; 3]) -> Result<ChannelEvaluation> {
    let fidelities = FidelityTriple::new(
        fidelity_f1(&tables[0])?,
        fidelity_f2(&tables[1])?,
        fidelity_f3(&tables[2])?,
    )?;
    Ok(ChannelEvaluation { tables, fidelities })
}

pub fn evaluate_channel_full(s: &SuperOperator) -> Result<ChannelEvaluation> {
    s.require_tp(TP_TOL)?;
    let tables = [
        truth_table(s, BasisSetting::ZZ)?,
        truth_table(s, BasisSetting::XX)?,
        truth_table(s, BasisSetting::XZ_TO_YY)?,
    ];
    evaluate_tables(tables)
}

pub fn evaluate_channel(s: &SuperOperator) -> Result<FidelityTriple> {
    Ok(evaluate_channel_full(s)?.fidelities)
}

/// Outcome of fitting the single-parameter mixture `p_E·E_CNOT + (1−p_E)·D`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct WernerEstimate {
    pub value: Option<f64>,
    pub reason: Option<String>,
    pub equality_tol: f64,
}

impl WernerEstimate {
    pub fn value(&self) -> Option<f64> {
        self.value
    }
}

/// `p_E = 2F − 1` when the three fidelities agree within `equality_tol`.
pub fn p_e_estimate(f: &FidelityTriple, equality_tol: f64) -> WernerEstimate {
    let spread = f.max_spread();
    if spread <= equality_tol {
        WernerEstimate {
            value: Some(2.0 * f.mean() - 1.0),
            reason: None,
            equality_tol,
        }
    } else {
        WernerEstimate {
            value: None,
            reason: Some(format!(
                "fidelities differ by {spread:.6} > {equality_tol}; the single-parameter mixture model does not apply"
            )),
            equality_tol,
        }
    }
}

/// One measured probability needed for the fidelities.
#[derive(Copy, Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct PlanEntry {
    pub fidelity: FidelityKind,
    pub setting: BasisSetting,
    pub input: u8,
    pub outcome: u8,
}

/// The 16 probabilities (12 prepared inputs) that determine F1, F2 and F3.
pub fn measurement_plan() -> Vec<PlanEntry> {
    FidelityKind::ALL
        .into_iter()
        .flat_map(|kind| {
            LABELS.into_iter().flat_map(move |input| {
                kind.accepted_outcomes(input).into_iter().map(move |outcome| PlanEntry {
                    fidelity: kind,
                    setting: kind.setting(),
                    input,
                    outcome,
                })
            })
        })
        .collect()
}
