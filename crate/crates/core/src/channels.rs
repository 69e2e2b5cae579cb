//! The controlled-NOT channel, its dephasing counterpart, the three
//! conditional local operations, and the signed expansion that ties them
//! together.
//!
//! ```text
//! E_CNOT = L1 + L2 + L3 - 2 D
//! ```
//!
//! Re-weighting the expansion by measured truth-table fidelities gives the
//! noisy-gate estimate built by [`reconstruct_from_fidelities`].

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::algebra::{
    linear_combination, pauli_pair, superop_from_spec, Mat2, Mat4, Pauli, SuperOperator,
    WeightedKrausSpec, C64,
};
use crate::error::{Error, Result};
use crate::fidelity::FidelityTriple;

#[derive(Copy, Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum ChannelName {
    #[serde(rename = "CNOT")]
    Cnot,
    #[serde(rename = "DEPHASE")]
    Dephase,
    L1,
    L2,
    L3,
}

impl ChannelName {
    pub const ALL: [ChannelName; 5] = [
        ChannelName::Cnot,
        ChannelName::Dephase,
        ChannelName::L1,
        ChannelName::L2,
        ChannelName::L3,
    ];
}

impl fmt::Display for ChannelName {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            ChannelName::Cnot => "CNOT",
            ChannelName::Dephase => "DEPHASE",
            ChannelName::L1 => "L1",
            ChannelName::L2 => "L2",
            ChannelName::L3 => "L3",
        })
    }
}

impl FromStr for ChannelName {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_uppercase().as_str() {
            "CNOT" => Ok(ChannelName::Cnot),
            "DEPHASE" | "D" => Ok(ChannelName::Dephase),
            "L1" => Ok(ChannelName::L1),
            "L2" => Ok(ChannelName::L2),
            "L3" => Ok(ChannelName::L3),
            _ => Err(Error::UnknownChannel(s.to_string())),
        }
    }
}

#[derive(Clone, Debug)]
pub struct NamedChannel {
    pub name: ChannelName,
    pub spec: WeightedKrausSpec,
    pub superop: SuperOperator,
}

fn half(m: Mat4) -> Mat4 {
    m * C64::new(0.5, 0.0)
}

/// `½(I⊗I + I⊗X + Z⊗I − Z⊗X)`.
pub fn cnot_unitary() -> Mat4 {
    use Pauli::{I, X, Z};
    half(pauli_pair(I, I) + pauli_pair(I, X) + pauli_pair(Z, I) - pauli_pair(Z, X))
}

/// `exp(iθP) = cos θ · I + i sin θ · P` for a Pauli `P`.
fn pauli_rotation(p: Pauli, theta: f64) -> Mat2 {
    Mat2::identity() * C64::new(theta.cos(), 0.0) + p.matrix() * C64::new(0.0, theta.sin())
}

/// `exp(±iπZ/4) ⊗ exp(±iπX/4)`, the correlated quarter rotations of L3.
pub fn correlated_rotation(sign: f64) -> Mat4 {
    let theta = sign * std::f64::consts::FRAC_PI_4;
    crate::algebra::kron2(&pauli_rotation(Pauli::Z, theta), &pauli_rotation(Pauli::X, theta))
}

fn kraus_spec(name: ChannelName) -> WeightedKrausSpec {
    use Pauli::{I, X, Z};
    let ii = pauli_pair(I, I);
    let ix = pauli_pair(I, X);
    let zi = pauli_pair(Z, I);
    let zx = pauli_pair(Z, X);
    match name {
        ChannelName::Cnot => WeightedKrausSpec::unitary(cnot_unitary()),
        ChannelName::Dephase => WeightedKrausSpec::new().with_term(0.25, vec![ii, ix, zi, zx]),
        // Measure Z on qubit one, flip qubit two on Z = -1.
        ChannelName::L1 => WeightedKrausSpec::new().with_term(1.0, vec![half(ii + zi), half(ix - zx)]),
        // Measure X on qubit two, apply Z to qubit one on X = -1.
        ChannelName::L2 => WeightedKrausSpec::new().with_term(1.0, vec![half(ii + ix), half(zi - zx)]),
        ChannelName::L3 => WeightedKrausSpec::new()
            .with_term(0.5, vec![correlated_rotation(1.0)])
            .with_term(0.5, vec![correlated_rotation(-1.0)]),
    }
}

pub fn channel(name: ChannelName) -> NamedChannel {
    let spec = kraus_spec(name);
    let superop = superop_from_spec(&spec);
    NamedChannel { name, spec, superop }
}

pub fn superop(name: ChannelName) -> SuperOperator {
    channel(name).superop
}

/// Weights of the expansion `c1 L1 + c2 L2 + c3 L3 + cD D`.
#[derive(Copy, Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExpansionCoefficients {
    #[serde(rename = "L1")]
    pub l1: f64,
    #[serde(rename = "L2")]
    pub l2: f64,
    #[serde(rename = "L3")]
    pub l3: f64,
    #[serde(rename = "D")]
    pub dephase: f64,
}

impl ExpansionCoefficients {
    /// The exact expansion of the ideal gate: `(1, 1, 1, -2)`.
    pub const IDEAL: ExpansionCoefficients = ExpansionCoefficients {
        l1: 1.0,
        l2: 1.0,
        l3: 1.0,
        dephase: -2.0,
    };

    /// `c_i = 2F_i − 1`, `cD = 2(2 − F1 − F2 − F3)`.
    pub fn from_fidelities(f: &FidelityTriple) -> Self {
        ExpansionCoefficients {
            l1: 2.0 * f.f1 - 1.0,
            l2: 2.0 * f.f2 - 1.0,
            l3: 2.0 * f.f3 - 1.0,
            dephase: 2.0 * (2.0 - f.f1 - f.f2 - f.f3),
        }
    }

    pub fn total(&self) -> f64 {
        self.l1 + self.l2 + self.l3 + self.dephase
    }

    pub fn superoperator(&self) -> SuperOperator {
        let l1 = superop(ChannelName::L1);
        let l2 = superop(ChannelName::L2);
        let l3 = superop(ChannelName::L3);
        let d = superop(ChannelName::Dephase);
        linear_combination(&[(self.l1, &l1), (self.l2, &l2), (self.l3, &l3), (self.dephase, &d)])
    }
}

/// Result of checking the expansion identity.
#[derive(Copy, Clone, Debug, PartialEq)]
pub struct ExpansionCheck {
    pub residual: f64,
    pub passed: bool,
}

/// Max entrywise deviation between the CNOT map and the weighted expansion.
pub fn expansion_residual(coeffs: &ExpansionCoefficients) -> f64 {
    superop(ChannelName::Cnot).max_abs_diff(&coeffs.superoperator())
}

pub fn verify_expansion(tol: f64) -> ExpansionCheck {
    let residual = expansion_residual(&ExpansionCoefficients::IDEAL);
    ExpansionCheck {
        residual,
        passed: residual < tol,
    }
}

fn check_unit(name: &'static str, value: f64) -> Result<()> {
    if !(0.0..=1.0).contains(&value) {
        return Err(Error::OutOfRange { name, value });
    }
    Ok(())
}

/// Noisy-gate estimate from measured fidelities. Always trace preserving;
/// complete positivity is not guaranteed and must be checked by the caller.
pub fn reconstruct_from_fidelities(f: &FidelityTriple) -> Result<SuperOperator> {
    check_unit("F1", f.f1)?;
    check_unit("F2", f.f2)?;
    check_unit("F3", f.f3)?;
    Ok(ExpansionCoefficients::from_fidelities(f).superoperator())
}

/// `p_E · E_CNOT + (1 − p_E) · D`.
pub fn werner_mixture(p_e: f64) -> Result<SuperOperator> {
    check_unit("p_E", p_e)?;
    let cnot = superop(ChannelName::Cnot);
    let d = superop(ChannelName::Dephase);
    Ok(linear_combination(&[(p_e, &cnot), (1.0 - p_e, &d)]))
}
