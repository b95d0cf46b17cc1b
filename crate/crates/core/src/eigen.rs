//! Low-lying eigenpairs of the Anderson Hamiltonian in O(N) per iteration.
//!
//! Eigenvalues are bracketed by bisection on an inertia count. For an open chain that
//! count is the classic Sturm sequence of the `LDLᵀ` factorization of `H - σ`. A ring is
//! split into its first `N-1` sites (an open chain `T`) and the last site; by Haynsworth's
//! inertia additivity the number of negative eigenvalues of `H - σ` is the count for
//! `T - σ` plus one if the Schur complement `h_NN - σ - bᵀ (T - σ)⁻¹ b` is negative. Both
//! pieces come out of the same `LDLᵀ` sweep.
//!
//! Eigenvectors follow from inverse iteration at the converged shift, solving with
//! [`CyclicLu`] so the corner coupling costs a Sherman–Morrison correction only.

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::lattice::{GaussianStream, Hamiltonian};
use crate::state::State;
use crate::tridiag::{CyclicLu, ZeroPivot};

pub const MAX_INVERSE_ITERATIONS: usize = 200;
pub const MAX_BISECTION_STEPS: usize = 200;
/// Absolute width at which eigenvalue bisection stops.
pub const BISECTION_WIDTH: f64 = 1e-12;
/// Residual target, relative to [`Hamiltonian::scale`], for returned eigenpairs.
pub const RESIDUAL_TOLERANCE: f64 = 1e-10;

/// Eigenvalues closer than this (relative to the scale) have their vectors
/// explicitly orthogonalized against each other.
const CLUSTER_TOLERANCE: f64 = 1e-3;

#[derive(Clone, Debug)]
pub struct EigenPair {
    pub energy: f64,
    pub state: State,
}

impl EigenPair {
    /// `‖H ψ - E ψ‖₂` for this pair.
    pub fn residual(&self, h: &Hamiltonian) -> f64 {
        let psi = self.state.real_parts();
        let h_psi = h.apply_real(&psi).expect("state length matches hamiltonian");
        h_psi
            .iter()
            .zip(&psi)
            .map(|(a, b)| (a - self.energy * b).powi(2))
            .sum::<f64>()
            .sqrt()
    }
}

/// Number of eigenvalues of `h` strictly below `sigma`.
pub fn count_below(h: &Hamiltonian, sigma: f64) -> usize {
    let diag = h.potentials();
    let off = h.chain_offdiag();
    let n = diag.len();
    let pivmin = pivot_floor(h);

    match h.corner() {
        None => {
            let mut count = 0;
            let mut q = diag[0] - sigma;
            for i in 0..n {
                if i > 0 {
                    q = diag[i] - sigma - off[i - 1] * off[i - 1] / q;
                }
                if q.abs() < pivmin {
                    q = -pivmin;
                }
                if q < 0.0 {
                    count += 1;
                }
            }
            count
        }
        Some(corner) => {
            // T = sites 0..n-1, b couples them to site n-1.
            let m = n - 1;
            let mut count = 0;
            let mut schur = diag[m] - sigma;
            let mut q = 0.0;
            let mut w = 0.0;
            for i in 0..m {
                let b = if i == 0 {
                    corner
                } else if i == m - 1 {
                    off[m - 1]
                } else {
                    0.0
                };
                if i == 0 {
                    q = diag[0] - sigma;
                    w = b;
                } else {
                    let l = off[i - 1] / q;
                    q = diag[i] - sigma - off[i - 1] * l;
                    w = b - l * w;
                }
                if q.abs() < pivmin {
                    q = -pivmin;
                }
                if q < 0.0 {
                    count += 1;
                }
                schur -= w * w / q;
            }
            if schur < 0.0 {
                count += 1;
            }
            count
        }
    }
}

fn pivot_floor(h: &Hamiltonian) -> f64 {
    let s = f64::EPSILON * h.scale();
    s * s
}

/// Gershgorin enclosure of the spectrum.
fn spectral_bounds(h: &Hamiltonian) -> (f64, f64) {
    let reach = 2.0 * h.hopping();
    let v = h.potentials();
    let lo = v.iter().cloned().fold(f64::INFINITY, f64::min) - reach;
    let hi = v.iter().cloned().fold(f64::NEG_INFINITY, f64::max) + reach;
    let pad = 1e-12 * h.scale();
    (lo - pad, hi + pad)
}

/// The `index`-th smallest eigenvalue (0-based) by bisection.
pub fn bisect_eigenvalue(h: &Hamiltonian, index: usize) -> Result<f64> {
    if index >= h.len() {
        return Err(Error::Index(format!(
            "eigenvalue index {index} outside spectrum of size {}",
            h.len()
        )));
    }
    let (mut lo, mut hi) = spectral_bounds(h);
    for _ in 0..MAX_BISECTION_STEPS {
        let mid = 0.5 * (lo + hi);
        if hi - lo <= BISECTION_WIDTH || mid <= lo || mid >= hi {
            return Ok(mid);
        }
        if count_below(h, mid) > index {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    Ok(0.5 * (lo + hi))
}

/// Minimal-energy eigenpair.
///
/// The state is real; its largest-magnitude amplitude is positive (lowest site on ties).
pub fn ground_state(h: &Hamiltonian) -> Result<EigenPair> {
    let energy = bisect_eigenvalue(h, 0)?;
    // Perron–Frobenius: the ground state of -t·adjacency + V has one sign, so a flat
    // start vector always overlaps it.
    let start = vec![1.0; h.len()];
    inverse_iteration(h, energy, start, &[])
}

/// The `k` lowest eigenpairs, energies nondecreasing, vectors orthonormal.
///
/// Inside a degenerate cluster any orthonormal basis may come back.
pub fn lowest_k(h: &Hamiltonian, k: usize) -> Result<Vec<EigenPair>> {
    let n = h.len();
    if k == 0 || k > n {
        return Err(Error::Index(format!("k = {k} must lie in 1..={n}")));
    }
    let scale = h.scale();
    let mut pairs: Vec<EigenPair> = Vec::with_capacity(k);
    let mut stream = GaussianStream::new(0x005e_ed1e_550f_e16e);
    for index in 0..k {
        let shift = bisect_eigenvalue(h, index)?;
        let cluster: Vec<Vec<f64>> = pairs
            .iter()
            .filter(|p| (p.energy - shift).abs() <= CLUSTER_TOLERANCE * scale)
            .map(|p| p.state.real_parts())
            .collect();
        let start = if index == 0 {
            vec![1.0; n]
        } else {
            (0..n).map(|_| stream.next_normal()).collect()
        };
        pairs.push(inverse_iteration(h, shift, start, &cluster)?);
    }
    Ok(pairs)
}

fn inverse_iteration(
    h: &Hamiltonian,
    shift: f64,
    start: Vec<f64>,
    orthogonal_to: &[Vec<f64>],
) -> Result<EigenPair> {
    let (mut energy, mut x) = iterate_with_cut(h, shift, start, orthogonal_to)?;

    // On a ring the Sherman-Morrison update cancels large terms at the cut, leaving
    // noise of order eps·|z| there when the state lives far away. Re-cutting the ring at
    // the localization center and polishing once removes it.
    if h.corner().is_some() {
        let n = h.len();
        let center = argmax_abs(&x);
        if center != 0 {
            let rotate = |v: &[f64]| -> Vec<f64> { (0..n).map(|i| v[(i + center) % n]).collect() };
            let rotated_h = h.rotated(center);
            let rotated_basis: Vec<Vec<f64>> = orthogonal_to.iter().map(|q| rotate(q)).collect();
            let (e, y) = iterate_with_cut(&rotated_h, shift, rotate(&x), &rotated_basis)?;
            energy = e;
            for (i, yi) in y.into_iter().enumerate() {
                x[(i + center) % n] = yi;
            }
        }
    }

    fix_sign(&mut x);
    let amps = x.into_iter().map(|v| Complex64::new(v, 0.0)).collect();
    Ok(EigenPair {
        energy,
        state: State::from_normalized_unchecked(amps),
    })
}

fn iterate_with_cut(
    h: &Hamiltonian,
    shift: f64,
    start: Vec<f64>,
    orthogonal_to: &[Vec<f64>],
) -> Result<(f64, Vec<f64>)> {
    let scale = h.scale();
    let off = h.chain_offdiag();
    let corner = h.corner();
    let eps_pivot = f64::EPSILON * scale;

    // Nudge the shift if the factorization hits an exact breakdown.
    let mut factor = None;
    for attempt in 0..4 {
        let sigma = shift - attempt as f64 * 8.0 * f64::EPSILON * scale;
        let diag: Vec<f64> = h.potentials().iter().map(|v| v - sigma).collect();
        // γ < 0 makes the split T' = (H - σ) + (PSD rank one).
        let gamma = corner.map(|c| -diag[0].abs().max(c.abs()));
        match CyclicLu::factor(&diag, &off, corner, gamma, ZeroPivot::Perturb(eps_pivot)) {
            Ok(lu) => {
                factor = Some(lu);
                break;
            }
            Err(Error::Numerical(_)) => continue,
            Err(e) => return Err(e),
        }
    }
    let lu = factor.ok_or_else(|| {
        Error::Numerical(format!("inverse iteration could not factor H - {shift}"))
    })?;

    let mut x = start;
    project_out(&mut x, orthogonal_to);
    normalize_real(&mut x)?;

    let mut last_residual = f64::INFINITY;
    for iteration in 1..=MAX_INVERSE_ITERATIONS {
        lu.solve_in_place(&mut x);
        if x.iter().any(|v| !v.is_finite()) {
            return Err(Error::Numerical(format!(
                "inverse iteration overflowed at step {iteration}"
            )));
        }
        project_out(&mut x, orthogonal_to);
        normalize_real(&mut x)?;

        let hx = h.apply_real(&x)?;
        let energy: f64 = hx.iter().zip(&x).map(|(a, b)| a * b).sum();
        let residual = hx
            .iter()
            .zip(&x)
            .map(|(a, b)| (a - energy * b).powi(2))
            .sum::<f64>()
            .sqrt();
        last_residual = residual;
        if residual <= RESIDUAL_TOLERANCE * scale {
            return Ok((energy, x));
        }
    }
    Err(Error::Convergence {
        iterations: MAX_INVERSE_ITERATIONS,
        residual: last_residual,
        context: format!("inverse iteration at shift {shift:.15e}"),
    })
}

fn project_out(x: &mut [f64], basis: &[Vec<f64>]) {
    // twice is enough
    for _ in 0..2 {
        for q in basis {
            let dot: f64 = x.iter().zip(q).map(|(a, b)| a * b).sum();
            for (xi, qi) in x.iter_mut().zip(q) {
                *xi -= dot * qi;
            }
        }
    }
}

fn normalize_real(x: &mut [f64]) -> Result<()> {
    let scale = x.iter().fold(0.0_f64, |m, v| m.max(v.abs()));
    if scale == 0.0 || !scale.is_finite() {
        return Err(Error::Numerical("inverse iteration produced a null vector".into()));
    }
    for v in x.iter_mut() {
        *v /= scale;
    }
    let norm = x.iter().map(|v| v * v).sum::<f64>().sqrt();
    for v in x.iter_mut() {
        *v /= norm;
    }
    Ok(())
}

fn argmax_abs(x: &[f64]) -> usize {
    let mut best = 0;
    for (i, v) in x.iter().enumerate() {
        if v.abs() > x[best].abs() {
            best = i;
        }
    }
    best
}

/// Largest-|amplitude| entry made positive; first index wins ties.
fn fix_sign(x: &mut [f64]) {
    let best = argmax_abs(x);
    if x[best] < 0.0 {
        for v in x.iter_mut() {
            *v = -*v;
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lattice::{Boundary, DisorderConfig};
    use std::f64::consts::PI;

    fn free(n: usize, boundary: Boundary) -> Hamiltonian {
        Hamiltonian::new(vec![0.0; n], 1.0, boundary).unwrap()
    }

    #[test]
    fn counts_on_free_ring() {
        // Ring spectrum: -2 cos(2πk/N).
        let n = 10;
        let h = free(n, Boundary::Periodic);
        let mut spectrum: Vec<f64> = (0..n)
            .map(|k| -2.0 * (2.0 * PI * k as f64 / n as f64).cos())
            .collect();
        spectrum.sort_by(|a, b| a.partial_cmp(b).unwrap());
        for sigma in [-2.5, -1.9, -1.0, -0.5, 0.1, 0.7, 1.2, 1.9, 2.5] {
            let expected = spectrum.iter().filter(|&&e| e < sigma).count();
            assert_eq!(count_below(&h, sigma), expected, "sigma {sigma}");
        }
    }

    #[test]
    fn free_ring_ground_state_is_uniform() {
        for n in [3, 4, 17, 64] {
            let g = ground_state(&free(n, Boundary::Periodic)).unwrap();
            assert!((g.energy + 2.0).abs() < 1e-12);
            let u = 1.0 / (n as f64).sqrt();
            for a in g.state.amplitudes() {
                assert!((a.re - u).abs() < 1e-10);
            }
        }
    }

    #[test]
    fn free_open_chain_closed_form() {
        let n = 100;
        let g = ground_state(&free(n, Boundary::Open)).unwrap();
        let k = PI / (n as f64 + 1.0);
        assert!((g.energy + 2.0 * k.cos()).abs() < 1e-12);
        let norm = (2.0 / (n as f64 + 1.0)).sqrt();
        for (i, a) in g.state.amplitudes().iter().enumerate() {
            let expected = norm * ((i as f64 + 1.0) * k).sin();
            assert!((a.re - expected).abs() < 1e-8);
        }
    }

    #[test]
    fn lowest_k_free_open_chain() {
        let pairs = lowest_k(&free(5, Boundary::Open), 5).unwrap();
        for (m, p) in pairs.iter().enumerate() {
            let expected = -2.0 * ((m as f64 + 1.0) * PI / 6.0).cos();
            assert!((p.energy - expected).abs() < 1e-12);
        }
    }

    #[test]
    fn degenerate_ring_levels_are_orthonormal() {
        let n = 12;
        let h = free(n, Boundary::Periodic);
        let pairs = lowest_k(&h, 5).unwrap();
        for i in 0..5 {
            for j in 0..5 {
                let dot: f64 = pairs[i]
                    .state
                    .real_parts()
                    .iter()
                    .zip(pairs[j].state.real_parts())
                    .map(|(a, b)| a * b)
                    .sum();
                let expected = if i == j { 1.0 } else { 0.0 };
                assert!((dot - expected).abs() < 1e-8, "({i},{j}) {dot}");
            }
            assert!(pairs[i].residual(&h) < 1e-8 * h.scale());
        }
        assert!((pairs[1].energy - pairs[2].energy).abs() < 1e-12);
    }

    #[test]
    fn k_out_of_range() {
        let h = free(4, Boundary::Open);
        assert!(lowest_k(&h, 0).is_err());
        assert!(lowest_k(&h, 5).is_err());
    }

    #[test]
    fn two_site_ring() {
        let h = free(2, Boundary::Periodic);
        let g = ground_state(&h).unwrap();
        assert!((g.energy + 2.0).abs() < 1e-12);
    }

    #[test]
    fn disordered_pair_residuals() {
        for boundary in [Boundary::Open, Boundary::Periodic] {
            let cfg = DisorderConfig::new(400)
                .with_strength(0.7)
                .with_seed(3)
                .with_boundary(boundary);
            let h = Hamiltonian::from_config(&cfg).unwrap();
            let g = ground_state(&h).unwrap();
            assert!(g.residual(&h) <= 1e-8 * h.scale());
            assert!((g.state.norm() - 1.0).abs() < 1e-12);
        }
    }
}
