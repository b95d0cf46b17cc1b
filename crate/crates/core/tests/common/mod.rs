//! Dense reference implementations shared by the integration tests.
#![allow(dead_code)]

use anderson_core::Hamiltonian;
use nalgebra::{DMatrix, DVector, SymmetricEigen};
use num_complex::Complex64;

pub fn dense(h: &Hamiltonian) -> DMatrix<f64> {
    let rows = h.to_dense();
    DMatrix::from_fn(h.len(), h.len(), |i, j| rows[i][j])
}

/// Eigenvalues ascending, with eigenvectors as matching columns.
pub fn dense_spectrum(h: &Hamiltonian) -> (Vec<f64>, DMatrix<f64>) {
    let eig = SymmetricEigen::new(dense(h));
    let mut order: Vec<usize> = (0..h.len()).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
    let values = order.iter().map(|&k| eig.eigenvalues[k]).collect();
    let vectors = DMatrix::from_fn(h.len(), h.len(), |i, c| eig.eigenvectors[(i, order[c])]);
    (values, vectors)
}

/// `exp(-iHt) ψ` through the dense eigendecomposition.
pub fn exact_evolution(h: &Hamiltonian, psi: &[Complex64], t: f64) -> Vec<Complex64> {
    let (values, vectors) = dense_spectrum(h);
    let v = vectors.map(|x| Complex64::new(x, 0.0));
    let coeffs = v.transpose() * DVector::from_column_slice(psi);
    let phased = DVector::from_fn(values.len(), |k, _| {
        coeffs[k] * Complex64::new(0.0, -values[k] * t).exp()
    });
    (v * phased).iter().copied().collect()
}

/// `ψ` after `steps` applications of the Cayley map `(1 + iHdt/2)⁻¹(1 - iHdt/2)`.
pub fn cayley_evolution(h: &Hamiltonian, psi: &[Complex64], dt: f64, steps: usize) -> Vec<Complex64> {
    let n = h.len();
    let hd = dense(h).map(|x| Complex64::new(x, 0.0));
    let half = Complex64::new(0.0, 0.5 * dt);
    let id = DMatrix::<Complex64>::identity(n, n);
    let u = (&id + &hd * half).lu().solve(&(&id - &hd * half)).expect("Cayley matrix is invertible");
    let mut v = DVector::from_column_slice(psi);
    for _ in 0..steps {
        v = &u * v;
    }
    v.iter().copied().collect()
}

pub fn max_diff(a: &[Complex64], b: &[Complex64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).norm()).fold(0.0, f64::max)
}
