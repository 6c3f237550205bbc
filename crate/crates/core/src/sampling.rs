//! Seeded random states, vectors and unitaries.

use rand::Rng;
use rand_distr::StandardNormal;

use crate::linalg::{self, c, CMatrix, C64};
use crate::qstate::PureState;

/// Rotation-invariant complex Gaussian vector (not normalized).
pub fn gaussian_vector<R: Rng + ?Sized>(dim: usize, rng: &mut R) -> Vec<C64> {
    (0..dim)
        .map(|_| c(rng.sample(StandardNormal), rng.sample(StandardNormal)))
        .collect()
}

pub fn random_unit_vector<R: Rng + ?Sized>(dim: usize, rng: &mut R) -> Vec<C64> {
    loop {
        let v = gaussian_vector(dim, rng);
        if linalg::norm(&v) > 1e-6 {
            return linalg::normalized(&v);
        }
    }
}

/// Haar-distributed pure state on the given dimensions.
pub fn random_pure_state<R: Rng + ?Sized>(dims: &[usize], rng: &mut R) -> PureState {
    let total = dims.iter().product();
    loop {
        if let Ok(psi) = PureState::from_unnormalized(dims.to_vec(), gaussian_vector(total, rng)) {
            return psi;
        }
    }
}

/// Orthonormalizes the columns of a Gaussian matrix (modified Gram-Schmidt).
pub fn random_unitary<R: Rng + ?Sized>(dim: usize, rng: &mut R) -> CMatrix {
    let mut cols: Vec<Vec<C64>> = Vec::with_capacity(dim);
    while cols.len() < dim {
        let mut v = gaussian_vector(dim, rng);
        for q in &cols {
            let ov = linalg::inner(q, &v);
            for (x, y) in v.iter_mut().zip(q) {
                *x -= ov * y;
            }
        }
        if linalg::norm(&v) > 1e-6 {
            cols.push(linalg::normalized(&v));
        }
    }
    CMatrix::from_fn(dim, dim, |i, j| cols[j][i])
}

/// Random probability vector with entries bounded away from zero.
pub fn random_probabilities<R: Rng + ?Sized>(n: usize, rng: &mut R) -> Vec<f64> {
    let raw: Vec<f64> = (0..n).map(|_| rng.gen_range(0.1..1.0)).collect();
    let s: f64 = raw.iter().sum();
    raw.into_iter().map(|x| x / s).collect()
}
