//! Entanglement generated from X⊗Z product inputs: averaged output
//! correlations, the two concurrence lower bounds, and an exact concurrence
//! oracle used to check them.

use nalgebra::linalg::SymmetricEigen;
use serde::{Deserialize, Serialize};

use crate::algebra::{
    pauli_pair, product_state, trace_product, DensityMatrix, Mat4, Pauli, Sign, SuperOperator, C64,
    PHYSICAL_TOL,
};
use crate::error::Result;
use crate::fidelity::{self, FidelityTriple, LABELS, TP_TOL};

/// Mean absolute ⟨Z⊗Z⟩, ⟨X⊗X⟩, ⟨Y⊗Y⟩ over the four X⊗Z inputs.
#[derive(Copy, Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CorrelationTriple {
    pub zz: f64,
    pub xx: f64,
    pub yy: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ConcurrenceReport {
    pub bound_from_correlations: f64,
    pub bound_from_fidelities: f64,
    /// Exact concurrence of the output for inputs 00, 01, 10, 11 (X⊗Z basis).
    pub oracle_per_input: [f64; 4],
}

fn xz_input(label: u8) -> DensityMatrix {
    let (a, b) = fidelity::label_bits(label);
    product_state(Pauli::X, Sign::from_bit(a), Pauli::Z, Sign::from_bit(b))
        .expect("X and Z have eigenstates")
}

/// Outputs of `s` on the four X⊗Z eigenstate inputs, in label order.
pub fn xz_outputs(s: &SuperOperator) -> [Mat4; 4] {
    LABELS.map(|l| s.apply(xz_input(l).matrix()))
}

pub fn output_correlations(s: &SuperOperator) -> Result<CorrelationTriple> {
    s.require_tp(TP_TOL)?;
    let zz = pauli_pair(Pauli::Z, Pauli::Z);
    let xx = pauli_pair(Pauli::X, Pauli::X);
    let yy = pauli_pair(Pauli::Y, Pauli::Y);
    let outs = xz_outputs(s);
    let mean_abs = |op: &Mat4| outs.iter().map(|o| trace_product(op, o).abs()).sum::<f64>() / 4.0;
    Ok(CorrelationTriple {
        zz: mean_abs(&zz),
        xx: mean_abs(&xx),
        yy: mean_abs(&yy),
    })
}

/// `½(xx + yy + zz − 1)`; negative values certify nothing.
pub fn bound_from_correlations(c: &CorrelationTriple) -> f64 {
    0.5 * (c.xx + c.yy + c.zz - 1.0)
}

/// `F1 + F2 + F3 − 2`.
pub fn bound_from_fidelities(f: &FidelityTriple) -> f64 {
    f.concurrence_bound()
}

/// Hermitian square root of a positive semidefinite matrix. Eigenvalues
/// down to -1e-10 are rounding noise and clamp to zero.
fn psd_sqrt(m: &Mat4) -> Mat4 {
    let h = (m + m.adjoint()) * C64::new(0.5, 0.0);
    let eig = SymmetricEigen::new(h);
    let roots = eig.eigenvalues.map(|l| {
        debug_assert!(l >= -1e-10, "eigenvalue {l} of a density matrix");
        C64::new(l.max(0.0).sqrt(), 0.0)
    });
    eig.eigenvectors * Mat4::from_diagonal(&roots) * eig.eigenvectors.adjoint()
}

/// Wootters concurrence `max(0, λ1 − λ2 − λ3 − λ4)`.
///
/// The λ_i, the square roots of the eigenvalues of `ρ ρ̃` with
/// `ρ̃ = (Y⊗Y) ρ* (Y⊗Y)`, are obtained as the singular values of `√ρ √ρ̃`.
/// This avoids a non-Hermitian eigensolver and keeps the vanishing λ_i of
/// pure states at rounding level instead of at its square root.
pub fn wootters_concurrence(rho: &DensityMatrix) -> f64 {
    let yy = pauli_pair(Pauli::Y, Pauli::Y);
    let root = psd_sqrt(rho.matrix());
    let root_tilde = yy * root.conjugate() * yy;
    let mut lambdas: Vec<f64> = (root * root_tilde)
        .singular_values()
        .iter()
        .copied()
        .collect();
    lambdas.sort_by(|a, b| b.total_cmp(a));
    (lambdas[0] - lambdas[1] - lambdas[2] - lambdas[3]).max(0.0)
}

/// Both bounds plus the exact concurrence of each X⊗Z output. Refuses maps
/// that are not completely positive, since their outputs need not be states.
pub fn concurrence_report(s: &SuperOperator) -> Result<ConcurrenceReport> {
    s.require_tp(TP_TOL)?;
    s.require_cp(PHYSICAL_TOL)?;
    let fids = fidelity::evaluate_channel(s)?;
    let corr = output_correlations(s)?;
    let mut oracle = [0.0; 4];
    for (slot, out) in oracle.iter_mut().zip(xz_outputs(s)) {
        let rho = DensityMatrix::validate_with(out, 1e-9)?;
        *slot = wootters_concurrence(&rho);
    }
    Ok(ConcurrenceReport {
        bound_from_correlations: bound_from_correlations(&corr),
        bound_from_fidelities: bound_from_fidelities(&fids),
        oracle_per_input: oracle,
    })
}

/// How a channel's correlations relate to its fidelities.
#[derive(Clone, Debug, PartialEq)]
pub struct CorrelationRelations {
    pub correlations: CorrelationTriple,
    pub fidelities: FidelityTriple,
    /// Correct-output probability of each XZ input in the F3 table.
    pub per_input_f3: [f64; 4],
}

impl CorrelationRelations {
    pub fn zz_holds(&self, tol: f64) -> bool {
        self.correlations.zz >= 2.0 * self.fidelities.f1 - 1.0 - tol
    }

    pub fn xx_holds(&self, tol: f64) -> bool {
        self.correlations.xx >= 2.0 * self.fidelities.f2 - 1.0 - tol
    }

    /// `yy = 2F3 − 1` is only guaranteed when every per-input F3 term is at
    /// least ½; `None` when that precondition fails.
    pub fn yy_equality(&self, tol: f64) -> Option<bool> {
        if self.per_input_f3.iter().any(|&p| p < 0.5) {
            return None;
        }
        Some((self.correlations.yy - (2.0 * self.fidelities.f3 - 1.0)).abs() <= tol)
    }
}

pub fn correlation_relations(s: &SuperOperator) -> Result<CorrelationRelations> {
    let eval = fidelity::evaluate_channel_full(s)?;
    let f3_table = &eval.tables[2];
    let per_input_f3 = LABELS.map(|i| {
        fidelity::FidelityKind::F3
            .accepted_outcomes(i)
            .into_iter()
            .map(|o| f3_table.get(i, o))
            .sum()
    });
    let rel = CorrelationRelations {
        correlations: output_correlations(s)?,
        fidelities: eval.fidelities,
        per_input_f3,
    };
    if rel.yy_equality(1e-9).is_none() {
        log::debug!(
            "per-input F3 terms {:?} include a value below 1/2; yy = 2F3-1 not guaranteed",
            rel.per_input_f3
        );
    }
    Ok(rel)
}
