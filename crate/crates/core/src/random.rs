//! Random states and channels for property tests and diagnostics.

use nalgebra::DMatrix;
use rand::Rng;
use rand_distr::StandardNormal;

use crate::algebra::{superop_from_spec, DensityMatrix, Mat4, SuperOperator, WeightedKrausSpec, C64};

fn gaussian<R: Rng + ?Sized>(rng: &mut R) -> C64 {
    C64::new(rng.sample(StandardNormal), rng.sample(StandardNormal))
}

/// Haar-random isometry from the QR decomposition of a complex Gaussian
/// matrix, with the phases of R's diagonal absorbed into Q.
fn haar_isometry<R: Rng + ?Sized>(rng: &mut R, rows: usize, cols: usize) -> DMatrix<C64> {
    let g = DMatrix::from_fn(rows, cols, |_, _| gaussian(rng));
    let qr = g.qr();
    let mut q = qr.q();
    let r = qr.r();
    for j in 0..cols {
        let d = r[(j, j)];
        let phase = if d.norm() > 0.0 { d / d.norm() } else { C64::new(1.0, 0.0) };
        for i in 0..rows {
            q[(i, j)] *= phase;
        }
    }
    q
}

/// `G G† / tr(G G†)` with `G` a 4×4 matrix of standard complex Gaussians.
pub fn random_density<R: Rng + ?Sized>(rng: &mut R) -> DensityMatrix {
    let g = Mat4::from_fn(|_, _| gaussian(rng));
    let m = g * g.adjoint();
    let tr = m.trace();
    DensityMatrix::new(m / tr).expect("Gaussian Wishart matrix is a valid state")
}

pub fn random_unitary<R: Rng + ?Sized>(rng: &mut R) -> Mat4 {
    let q = haar_isometry(rng, 4, 4);
    Mat4::from_fn(|r, c| q[(r, c)])
}

/// Kraus operators `K_e = (I ⊗ ⟨e|) V` of a Haar-random Stinespring
/// isometry `V: C⁴ → C⁴ ⊗ C⁴_env`.
pub fn random_kraus<R: Rng + ?Sized>(rng: &mut R) -> Vec<Mat4> {
    let v = haar_isometry(rng, 16, 4);
    (0..4)
        .map(|e| Mat4::from_fn(|a, b| v[(a * 4 + e, b)]))
        .collect()
}

pub fn random_cptp<R: Rng + ?Sized>(rng: &mut R) -> SuperOperator {
    superop_from_spec(&WeightedKrausSpec::new().with_term(1.0, random_kraus(rng)))
}

/// Uniformly random global phase.
pub fn random_phase<R: Rng + ?Sized>(rng: &mut R) -> C64 {
    C64::from_polar(1.0, rng.random_range(0.0..std::f64::consts::TAU))
}
