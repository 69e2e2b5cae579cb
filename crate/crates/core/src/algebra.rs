//! Exact two-qubit quantum algebra.
//!
//! Everything here is hard-wired to two qubits: single-qubit operators are
//! 2×2, states and Kraus operators are 4×4, and superoperators are 16×16
//! matrices acting on column-stacked density matrices. In the tensor product
//! the left factor is always "system one" (the control qubit of the CNOT).
//!
//! Vectorization convention: entry `(r, c)` of a 4×4 matrix sits at index
//! `c * 4 + r` of its 16-vector. This is also nalgebra's column-major storage
//! order, so `vec` and `unvec` are plain copies.

use std::fmt;
use std::ops::{Add, Mul, Neg, Sub};
use std::str::FromStr;

use nalgebra::{DMatrix, Matrix2, Matrix4, SMatrix, SVector, Vector2, Vector4};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub type C64 = Complex64;
pub type Mat2 = Matrix2<C64>;
pub type Mat4 = Matrix4<C64>;
pub type Mat16 = SMatrix<C64, 16, 16>;
pub type Vec16 = SVector<C64, 16>;

/// Tolerance for physicality checks (Hermiticity, trace, positivity).
pub const PHYSICAL_TOL: f64 = 1e-10;
/// Tolerance for exact algebraic identities.
pub const IDENTITY_TOL: f64 = 1e-12;

const ZERO: C64 = C64::new(0.0, 0.0);
const ONE: C64 = C64::new(1.0, 0.0);
const I_UNIT: C64 = C64::new(0.0, 1.0);

/// Single-qubit Pauli operator label.
#[derive(Copy, Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Pauli {
    I,
    X,
    Y,
    Z,
}

impl Pauli {
    pub const ALL: [Pauli; 4] = [Pauli::I, Pauli::X, Pauli::Y, Pauli::Z];

    /// Matrix in the computational basis, with `Z = diag(+1, -1)` and
    /// `Y = iXZ`, so that `Y|0⟩ = i|1⟩`.
    pub fn matrix(self) -> Mat2 {
        match self {
            Pauli::I => Mat2::identity(),
            Pauli::X => Mat2::new(ZERO, ONE, ONE, ZERO),
            Pauli::Y => Mat2::new(ZERO, -I_UNIT, I_UNIT, ZERO),
            Pauli::Z => Mat2::new(ONE, ZERO, ZERO, -ONE),
        }
    }
}

impl fmt::Display for Pauli {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let c = match self {
            Pauli::I => "I",
            Pauli::X => "X",
            Pauli::Y => "Y",
            Pauli::Z => "Z",
        };
        f.write_str(c)
    }
}

impl FromStr for Pauli {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        match s {
            "I" => Ok(Pauli::I),
            "X" => Ok(Pauli::X),
            "Y" => Ok(Pauli::Y),
            "Z" => Ok(Pauli::Z),
            other => Err(format!("`{other}` is not a Pauli label")),
        }
    }
}

pub fn pauli_matrix(label: Pauli) -> Mat2 {
    label.matrix()
}

/// Eigenvalue sign of a single-qubit basis state. Logical bit 0 is `Plus`.
#[derive(Copy, Clone, Debug, PartialEq, Eq, Hash)]
pub enum Sign {
    Plus,
    Minus,
}

impl Sign {
    pub fn value(self) -> f64 {
        match self {
            Sign::Plus => 1.0,
            Sign::Minus => -1.0,
        }
    }

    pub fn from_bit(bit: u8) -> Sign {
        if bit & 1 == 0 {
            Sign::Plus
        } else {
            Sign::Minus
        }
    }

    pub fn bit(self) -> u8 {
        match self {
            Sign::Plus => 0,
            Sign::Minus => 1,
        }
    }
}

/// Normalized single-qubit pure state.
#[derive(Clone, Debug, PartialEq)]
pub struct StateVector2(Vector2<C64>);

impl StateVector2 {
    /// Normalizes `v`, which must be nonzero.
    pub fn new(v: Vector2<C64>) -> Self {
        let n = v.norm();
        StateVector2(v / C64::new(n, 0.0))
    }

    pub fn amplitudes(&self) -> &Vector2<C64> {
        &self.0
    }

    /// Multiplies by a global phase; used to check phase-independence.
    pub fn with_phase(&self, phase: C64) -> StateVector2 {
        StateVector2(self.0 * phase)
    }
}

/// Eigenstate of `basis` with eigenvalue `sign`, with fixed global phases:
/// `|Z=+1⟩ = (1,0)`, `|Z=-1⟩ = (0,1)`, `|X=±1⟩ = (1,±1)/√2`,
/// `|Y=±1⟩ = (1,±i)/√2`.
pub fn eigenstate(basis: Pauli, sign: Sign) -> Result<StateVector2> {
    let h = std::f64::consts::FRAC_1_SQRT_2;
    let s = sign.value();
    let v = match basis {
        Pauli::I => return Err(Error::IdentityBasis),
        Pauli::Z => match sign {
            Sign::Plus => Vector2::new(ONE, ZERO),
            Sign::Minus => Vector2::new(ZERO, ONE),
        },
        Pauli::X => Vector2::new(C64::new(h, 0.0), C64::new(s * h, 0.0)),
        Pauli::Y => Vector2::new(C64::new(h, 0.0), C64::new(0.0, s * h)),
    };
    Ok(StateVector2(v))
}

/// Kronecker product of arbitrary square matrices; the left factor is the
/// more significant index.
pub fn tensor(a: &DMatrix<C64>, b: &DMatrix<C64>) -> DMatrix<C64> {
    a.kronecker(b)
}

pub fn kron2(a: &Mat2, b: &Mat2) -> Mat4 {
    Mat4::from_fn(|r, c| a[(r / 2, c / 2)] * b[(r % 2, c % 2)])
}

pub(crate) fn kron4(a: &Mat4, b: &Mat4) -> Mat16 {
    Mat16::from_fn(|r, c| a[(r / 4, c / 4)] * b[(r % 4, c % 4)])
}

/// `p1 ⊗ p2` as a 4×4 matrix.
pub fn pauli_pair(p1: Pauli, p2: Pauli) -> Mat4 {
    kron2(&p1.matrix(), &p2.matrix())
}

pub fn ket_product(a: &StateVector2, b: &StateVector2) -> Vector4<C64> {
    let (a, b) = (a.amplitudes(), b.amplitudes());
    Vector4::from_fn(|i, _| a[i / 2] * b[i % 2])
}

pub fn projector(psi: &Vector4<C64>) -> Mat4 {
    psi * psi.adjoint()
}

pub fn max_abs_diff<const R: usize, const C: usize>(
    a: &SMatrix<C64, R, C>,
    b: &SMatrix<C64, R, C>,
) -> f64 {
    a.iter()
        .zip(b.iter())
        .map(|(x, y)| (x - y).norm())
        .fold(0.0, f64::max)
}

pub fn hermiticity_defect<const D: usize>(m: &SMatrix<C64, D, D>) -> f64 {
    max_abs_diff(m, &m.adjoint())
}

/// Ascending eigenvalues of the Hermitian part of `m`.
pub fn hermitian_eigenvalues<const D: usize>(m: &SMatrix<C64, D, D>) -> Vec<f64> {
    let h = DMatrix::from_fn(D, D, |r, c| (m[(r, c)] + m[(c, r)].conj()) * 0.5);
    let mut ev: Vec<f64> = h.symmetric_eigenvalues().iter().copied().collect();
    ev.sort_by(f64::total_cmp);
    ev
}

/// A validated two-qubit density matrix: Hermitian, unit trace and positive
/// semidefinite, each within [`PHYSICAL_TOL`].
#[derive(Clone, Debug, PartialEq)]
pub struct DensityMatrix(Mat4);

impl DensityMatrix {
    pub fn new(m: Mat4) -> Result<Self> {
        Self::validate_with(m, PHYSICAL_TOL)
    }

    pub fn validate_with(m: Mat4, tol: f64) -> Result<Self> {
        let herm = hermiticity_defect(&m);
        if herm > tol {
            return Err(Error::NotHermitian(herm));
        }
        let tr = m.trace();
        if (tr - ONE).norm() > tol {
            return Err(Error::TraceNotOne(tr.re));
        }
        let min = hermitian_eigenvalues(&m)[0];
        if min < -tol {
            return Err(Error::NotPositive(min));
        }
        Ok(DensityMatrix(m))
    }

    pub fn pure(psi: &Vector4<C64>) -> Result<Self> {
        let norm = psi.norm();
        Self::new(projector(&(psi / C64::new(norm, 0.0))))
    }

    pub fn maximally_mixed() -> Self {
        DensityMatrix(Mat4::identity() * C64::new(0.25, 0.0))
    }

    pub fn matrix(&self) -> &Mat4 {
        &self.0
    }

    pub fn into_matrix(self) -> Mat4 {
        self.0
    }
}

/// Projector onto `eigenstate(b1, s1) ⊗ eigenstate(b2, s2)`.
pub fn product_state(b1: Pauli, s1: Sign, b2: Pauli, s2: Sign) -> Result<DensityMatrix> {
    let psi = ket_product(&eigenstate(b1, s1)?, &eigenstate(b2, s2)?);
    Ok(DensityMatrix(projector(&psi)))
}

/// `tr(op · rho)` for a Hermitian observable.
pub fn expectation(rho: &DensityMatrix, op: &Mat4) -> Result<f64> {
    let herm = hermiticity_defect(op);
    if herm > PHYSICAL_TOL {
        return Err(Error::NotHermitian(herm));
    }
    Ok(trace_product(op, rho.matrix()))
}

/// Real part of `tr(a · b)` with no validation; for maps that may produce
/// non-physical intermediates.
pub fn trace_product(a: &Mat4, b: &Mat4) -> f64 {
    (a * b).trace().re
}

pub fn vec(m: &Mat4) -> Vec16 {
    Vec16::from_column_slice(m.as_slice())
}

pub fn unvec(v: &Vec16) -> Mat4 {
    Mat4::from_column_slice(v.as_slice())
}

/// One weighted group of Kraus operators: `weight · Σ_k K ρ K†`.
#[derive(Clone, Debug, PartialEq)]
pub struct KrausTerm {
    pub weight: f64,
    pub ops: Vec<Mat4>,
}

/// A signed sum of Kraus groups. With nonnegative weights and
/// `Σ weight·Σ K†K = I` it describes a CPTP channel.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct WeightedKrausSpec {
    pub terms: Vec<KrausTerm>,
}

impl WeightedKrausSpec {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn unitary(u: Mat4) -> Self {
        Self::new().with_term(1.0, vec![u])
    }

    pub fn with_term(mut self, weight: f64, ops: Vec<Mat4>) -> Self {
        self.terms.push(KrausTerm { weight, ops });
        self
    }

    pub fn kraus_count(&self) -> usize {
        self.terms.iter().map(|t| t.ops.len()).sum()
    }

    /// Applies the Kraus form directly, without building the 16×16 map.
    pub fn apply_direct(&self, rho: &Mat4) -> Mat4 {
        let mut out = Mat4::zeros();
        for term in &self.terms {
            let w = C64::new(term.weight, 0.0);
            for k in &term.ops {
                out += k * rho * k.adjoint() * w;
            }
        }
        out
    }

    /// Precomposes every Kraus operator with `first`, i.e. the channel
    /// `ρ ↦ Σ K (first ρ first†) K†`.
    pub fn after_unitary(&self, first: &Mat4) -> Self {
        WeightedKrausSpec {
            terms: self
                .terms
                .iter()
                .map(|t| KrausTerm {
                    weight: t.weight,
                    ops: t.ops.iter().map(|k| k * first).collect(),
                })
                .collect(),
        }
    }
}

/// Linear map on column-stacked 4×4 matrices.
#[derive(Clone, Debug, PartialEq)]
pub struct SuperOperator {
    map: Mat16,
}

impl SuperOperator {
    pub fn from_matrix(map: Mat16) -> Self {
        SuperOperator { map }
    }

    pub fn identity() -> Self {
        SuperOperator {
            map: Mat16::identity(),
        }
    }

    pub fn zero() -> Self {
        SuperOperator {
            map: Mat16::zeros(),
        }
    }

    pub fn matrix(&self) -> &Mat16 {
        &self.map
    }

    /// Applies the map. The result is a bare matrix: signed combinations of
    /// channels may produce non-physical outputs.
    pub fn apply(&self, rho: &Mat4) -> Mat4 {
        unvec(&(self.map * vec(rho)))
    }

    /// Applies the map and validates the output as a density matrix.
    pub fn apply_state(&self, rho: &DensityMatrix) -> Result<DensityMatrix> {
        DensityMatrix::new(self.apply(rho.matrix()))
    }

    /// `other ∘ self`: first `self`, then `other`.
    pub fn then(&self, other: &SuperOperator) -> SuperOperator {
        SuperOperator {
            map: other.map * self.map,
        }
    }

    pub fn scale(&self, w: f64) -> SuperOperator {
        SuperOperator {
            map: self.map * C64::new(w, 0.0),
        }
    }

    pub fn max_abs_diff(&self, other: &SuperOperator) -> f64 {
        max_abs_diff(&self.map, &other.map)
    }

    /// Choi matrix `Σ_ij |i⟩⟨j| ⊗ S(|i⟩⟨j|)`, input factor first.
    pub fn choi(&self) -> Mat16 {
        // S(|i⟩⟨j|)[k, l] lives in row l*4+k, column j*4+i of the map.
        Mat16::from_fn(|row, col| {
            let (i, k) = (row / 4, row % 4);
            let (j, l) = (col / 4, col % 4);
            self.map[(l * 4 + k, j * 4 + i)]
        })
    }

    pub fn min_choi_eigenvalue(&self) -> f64 {
        hermitian_eigenvalues(&self.choi())[0]
    }

    pub fn is_cp(&self, tol: f64) -> bool {
        self.min_choi_eigenvalue() >= -tol
    }

    /// Largest entrywise deviation of `Tr_out(Choi)` from the identity.
    pub fn trace_preservation_defect(&self) -> f64 {
        let choi = self.choi();
        let mut worst = 0.0f64;
        for i in 0..4 {
            for j in 0..4 {
                let partial: C64 = (0..4).map(|k| choi[(i * 4 + k, j * 4 + k)]).sum();
                let target = if i == j { ONE } else { ZERO };
                worst = worst.max((partial - target).norm());
            }
        }
        worst
    }

    pub fn is_tp(&self, tol: f64) -> bool {
        self.trace_preservation_defect() <= tol
    }

    pub fn require_tp(&self, tol: f64) -> Result<()> {
        let d = self.trace_preservation_defect();
        if d > tol {
            return Err(Error::NotTracePreserving(d));
        }
        Ok(())
    }

    pub fn require_cp(&self, tol: f64) -> Result<()> {
        let min = self.min_choi_eigenvalue();
        if min < -tol {
            return Err(Error::NotCompletelyPositive(min));
        }
        Ok(())
    }
}

impl Add for &SuperOperator {
    type Output = SuperOperator;
    fn add(self, rhs: &SuperOperator) -> SuperOperator {
        SuperOperator {
            map: self.map + rhs.map,
        }
    }
}

impl Sub for &SuperOperator {
    type Output = SuperOperator;
    fn sub(self, rhs: &SuperOperator) -> SuperOperator {
        SuperOperator {
            map: self.map - rhs.map,
        }
    }
}

impl Mul<&SuperOperator> for f64 {
    type Output = SuperOperator;
    fn mul(self, rhs: &SuperOperator) -> SuperOperator {
        rhs.scale(self)
    }
}

impl Neg for &SuperOperator {
    type Output = SuperOperator;
    fn neg(self) -> SuperOperator {
        self.scale(-1.0)
    }
}

/// `Σ w_i S_i`.
pub fn linear_combination(terms: &[(f64, &SuperOperator)]) -> SuperOperator {
    terms
        .iter()
        .fold(SuperOperator::zero(), |acc, (w, s)| &acc + &s.scale(*w))
}

/// Realizes a weighted Kraus specification as a 16×16 map. Each `K ρ K†`
/// contributes `conj(K) ⊗ K` in the column-stacked convention.
pub fn superop_from_spec(spec: &WeightedKrausSpec) -> SuperOperator {
    let mut map = Mat16::zeros();
    for term in &spec.terms {
        let w = C64::new(term.weight, 0.0);
        for k in &term.ops {
            map += kron4(&k.conjugate(), k) * w;
        }
    }
    SuperOperator { map }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::random;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn basis_projector(i: usize) -> Mat4 {
        let mut m = Mat4::zeros();
        m[(i, i)] = ONE;
        m
    }

    #[test]
    fn pauli_conventions() {
        assert_eq!(Pauli::Z.matrix(), Mat2::new(ONE, ZERO, ZERO, -ONE));
        assert_eq!(Pauli::I.matrix(), Mat2::identity());
        let xy = Pauli::X.matrix() * Pauli::Y.matrix();
        assert!(max_abs_diff(&xy, &(Pauli::Z.matrix() * I_UNIT)) < IDENTITY_TOL);
        let y0 = Pauli::Y.matrix() * Vector2::new(ONE, ZERO);
        assert_eq!(y0, Vector2::new(ZERO, I_UNIT));
        for p in Pauli::ALL {
            let m = p.matrix();
            assert!(hermiticity_defect(&m) < IDENTITY_TOL);
            assert!(max_abs_diff(&(m * m), &Mat2::identity()) < IDENTITY_TOL);
            if p != Pauli::I {
                assert!(m.trace().norm() < IDENTITY_TOL);
            }
        }
    }

    #[test]
    fn tensor_products() {
        assert_eq!(pauli_pair(Pauli::I, Pauli::I), Mat4::identity());
        assert_eq!(pauli_pair(Pauli::Z, Pauli::X)[(0, 1)], ONE);
        let lhs = pauli_pair(Pauli::Z, Pauli::I) * pauli_pair(Pauli::I, Pauli::X);
        assert_eq!(lhs, pauli_pair(Pauli::Z, Pauli::X));

        let z = DMatrix::from_fn(2, 2, |r, c| Pauli::Z.matrix()[(r, c)]);
        let x = DMatrix::from_fn(2, 2, |r, c| Pauli::X.matrix()[(r, c)]);
        let zx = tensor(&z, &x);
        assert_eq!(zx.nrows(), 4);
        for r in 0..4 {
            for c in 0..4 {
                assert_eq!(zx[(r, c)], pauli_pair(Pauli::Z, Pauli::X)[(r, c)]);
            }
        }
    }

    #[test]
    fn eigenstates_satisfy_eigen_equation() {
        for b in [Pauli::X, Pauli::Y, Pauli::Z] {
            for s in [Sign::Plus, Sign::Minus] {
                let v = eigenstate(b, s).unwrap();
                let bv = b.matrix() * v.amplitudes();
                let sv = v.amplitudes() * C64::new(s.value(), 0.0);
                assert!((bv - sv).norm() < IDENTITY_TOL);
                assert!((v.amplitudes().norm() - 1.0).abs() < IDENTITY_TOL);
            }
        }
        let zp = eigenstate(Pauli::Z, Sign::Plus).unwrap();
        assert_eq!(zp.amplitudes(), &Vector2::new(ONE, ZERO));
        let xm = eigenstate(Pauli::X, Sign::Minus).unwrap();
        let h = std::f64::consts::FRAC_1_SQRT_2;
        assert_eq!(xm.amplitudes(), &Vector2::new(C64::new(h, 0.0), C64::new(-h, 0.0)));
        assert!(matches!(eigenstate(Pauli::I, Sign::Plus), Err(Error::IdentityBasis)));
    }

    #[test]
    fn product_states() {
        let rho = product_state(Pauli::Z, Sign::Plus, Pauli::Z, Sign::Plus).unwrap();
        assert_eq!(rho.matrix(), &basis_projector(0));

        // |X=+1⟩|Z=+1⟩ = (|00⟩ + |10⟩)/√2: entries 1/2 on indices {0, 2}.
        let rho = product_state(Pauli::X, Sign::Plus, Pauli::Z, Sign::Plus).unwrap();
        for r in 0..4 {
            for c in 0..4 {
                let expected = if [0, 2].contains(&r) && [0, 2].contains(&c) { 0.5 } else { 0.0 };
                assert!((rho.matrix()[(r, c)] - C64::new(expected, 0.0)).norm() < IDENTITY_TOL);
            }
        }

        let bases = [Pauli::X, Pauli::Y, Pauli::Z];
        let mut n = 0;
        for b1 in bases {
            for b2 in bases {
                for s1 in [Sign::Plus, Sign::Minus] {
                    for s2 in [Sign::Plus, Sign::Minus] {
                        let rho = product_state(b1, s1, b2, s2).unwrap();
                        assert!((rho.matrix().trace() - ONE).norm() < IDENTITY_TOL);
                        let ev = hermitian_eigenvalues(rho.matrix());
                        assert!((ev[3] - 1.0).abs() < 1e-10);
                        assert!(ev[..3].iter().all(|e| e.abs() < 1e-10));
                        n += 1;
                    }
                }
            }
        }
        // 9 basis pairs × 4 sign pairs
        assert_eq!(n, 36);
        assert!(product_state(Pauli::I, Sign::Plus, Pauli::Z, Sign::Plus).is_err());
    }

    #[test]
    fn expectation_values() {
        let rho = product_state(Pauli::Z, Sign::Plus, Pauli::Z, Sign::Plus).unwrap();
        assert_eq!(expectation(&rho, &pauli_pair(Pauli::Z, Pauli::Z)).unwrap(), 1.0);

        let mixed = DensityMatrix::maximally_mixed();
        for p in Pauli::ALL {
            for q in Pauli::ALL {
                if (p, q) != (Pauli::I, Pauli::I) {
                    assert!(expectation(&mixed, &pauli_pair(p, q)).unwrap().abs() < IDENTITY_TOL);
                }
            }
        }

        let h = std::f64::consts::FRAC_1_SQRT_2;
        let phi_plus = Vector4::new(C64::new(h, 0.0), ZERO, ZERO, C64::new(h, 0.0));
        let bell = DensityMatrix::pure(&phi_plus).unwrap();
        let xx = expectation(&bell, &pauli_pair(Pauli::X, Pauli::X)).unwrap();
        assert!((xx - 1.0).abs() < IDENTITY_TOL);

        let mut non_herm = Mat4::zeros();
        non_herm[(0, 1)] = ONE;
        assert!(matches!(expectation(&bell, &non_herm), Err(Error::NotHermitian(_))));
    }

    #[test]
    fn density_matrix_validation() {
        assert!(matches!(
            DensityMatrix::new(Mat4::identity()),
            Err(Error::TraceNotOne(_))
        ));
        let mut m = basis_projector(0) * C64::new(1.5, 0.0);
        m[(1, 1)] = C64::new(-0.5, 0.0);
        assert!(matches!(DensityMatrix::new(m), Err(Error::NotPositive(_))));
        let mut m = basis_projector(0);
        m[(0, 1)] = ONE;
        assert!(matches!(DensityMatrix::new(m), Err(Error::NotHermitian(_))));
    }

    #[test]
    fn superop_from_simple_specs() {
        let id = superop_from_spec(&WeightedKrausSpec::unitary(Mat4::identity()));
        assert_eq!(id, SuperOperator::identity());

        let flip = superop_from_spec(&WeightedKrausSpec::unitary(pauli_pair(Pauli::X, Pauli::I)));
        // |00⟩⟨00| → |10⟩⟨10|
        assert_eq!(flip.apply(&basis_projector(0)), basis_projector(2));

        let ops = vec![pauli_pair(Pauli::Z, Pauli::Y), pauli_pair(Pauli::X, Pauli::I)];
        let zero = superop_from_spec(
            &WeightedKrausSpec::new()
                .with_term(1.0, ops.clone())
                .with_term(-1.0, ops),
        );
        assert!(zero.max_abs_diff(&SuperOperator::zero()) < IDENTITY_TOL);
    }

    #[test]
    fn superop_matches_direct_kraus_sum() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let a = random::random_unitary(&mut rng);
        let b = random::random_unitary(&mut rng);
        let spec = WeightedKrausSpec::new()
            .with_term(0.3, vec![a])
            .with_term(-1.2, vec![b, a * b]);
        let s = superop_from_spec(&spec);
        for _ in 0..20 {
            let rho = random::random_density(&mut rng);
            let d = max_abs_diff(&s.apply(rho.matrix()), &spec.apply_direct(rho.matrix()));
            assert!(d < IDENTITY_TOL, "{d}");
        }
    }

    #[test]
    fn identity_map_choi_and_checks() {
        let id = SuperOperator::identity();
        let choi = id.choi();
        let ev = hermitian_eigenvalues(&choi);
        assert!((ev[15] - 4.0).abs() < 1e-10);
        assert!(ev[..15].iter().all(|e| e.abs() < 1e-10));
        assert!(id.is_cp(PHYSICAL_TOL));
        assert!(id.is_tp(PHYSICAL_TOL));
        let rho = random::random_density(&mut ChaCha8Rng::seed_from_u64(1));
        assert_eq!(id.apply(rho.matrix()), *rho.matrix());

        // Transpose is positive but not completely positive.
        let transpose = SuperOperator::from_matrix(Mat16::from_fn(|r, c| {
            let (rr, rc) = (r % 4, r / 4);
            let (cr, cc) = (c % 4, c / 4);
            if rr == cc && rc == cr { ONE } else { ZERO }
        }));
        assert!(transpose.is_tp(PHYSICAL_TOL));
        assert!(!transpose.is_cp(PHYSICAL_TOL));
        assert!((transpose.min_choi_eigenvalue() + 1.0).abs() < 1e-10);

        let half = SuperOperator::identity().scale(0.5);
        assert!(!half.is_tp(PHYSICAL_TOL));
        assert!(matches!(half.require_tp(1e-9), Err(Error::NotTracePreserving(_))));
    }

    #[test]
    fn apply_is_linear() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let s = random::random_cptp(&mut rng);
        let r1 = random::random_density(&mut rng);
        let r2 = random::random_density(&mut rng);
        let (a, b) = (C64::new(0.3, 0.0), C64::new(-1.7, 0.0));
        let lhs = s.apply(&(r1.matrix() * a + r2.matrix() * b));
        let rhs = s.apply(r1.matrix()) * a + s.apply(r2.matrix()) * b;
        assert!(max_abs_diff(&lhs, &rhs) < IDENTITY_TOL);
    }

    #[test]
    fn choi_is_linear() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for _ in 0..20 {
            let s1 = random::random_cptp(&mut rng);
            let s2 = random::random_cptp(&mut rng);
            let (a, b) = (0.7, -2.3);
            let lhs = linear_combination(&[(a, &s1), (b, &s2)]).choi();
            let rhs = s1.choi() * C64::new(a, 0.0) + s2.choi() * C64::new(b, 0.0);
            assert!(max_abs_diff(&lhs, &rhs) < IDENTITY_TOL);
        }
    }

    #[test]
    fn unitary_round_trip() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let u = random::random_unitary(&mut rng);
        let s = superop_from_spec(&WeightedKrausSpec::unitary(u));
        for _ in 0..100 {
            let rho = random::random_density(&mut rng);
            let direct = u * rho.matrix() * u.adjoint();
            assert!(max_abs_diff(&s.apply(rho.matrix()), &direct) < IDENTITY_TOL);
        }
    }

    #[test]
    fn cptp_maps_preserve_density_matrices() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        for _ in 0..200 {
            let s = random::random_cptp(&mut rng);
            assert!(s.is_cp(PHYSICAL_TOL) && s.is_tp(PHYSICAL_TOL));
            let rho = random::random_density(&mut rng);
            let out = s.apply(rho.matrix());
            DensityMatrix::validate_with(out, 1e-9).unwrap();
            assert!(hermiticity_defect(&out) < PHYSICAL_TOL);
        }
    }

    #[test]
    fn composition_order() {
        let x1 = superop_from_spec(&WeightedKrausSpec::unitary(pauli_pair(Pauli::X, Pauli::I)));
        let h = std::f64::consts::FRAC_1_SQRT_2;
        let had = Mat2::new(
            C64::new(h, 0.0),
            C64::new(h, 0.0),
            C64::new(h, 0.0),
            C64::new(-h, 0.0),
        );
        let h1 = superop_from_spec(&WeightedKrausSpec::unitary(kron2(&had, &Mat2::identity())));
        let composed = x1.then(&h1);
        let direct = superop_from_spec(
            &WeightedKrausSpec::unitary(kron2(&had, &Mat2::identity()))
                .after_unitary(&pauli_pair(Pauli::X, Pauli::I)),
        );
        assert!(composed.max_abs_diff(&direct) < IDENTITY_TOL);
    }
}
