//! Banded solvers shared by the eigensolver and the propagator.
//!
//! [`TriLu`] is Gaussian elimination with partial pivoting on a tridiagonal matrix, stored
//! the way LAPACK's `?gttrf` stores it (one extra superdiagonal of fill-in). [`CyclicLu`]
//! adds the two corner elements of a periodic chain through a Sherman–Morrison rank-one
//! correction, so a ring still costs O(N) per solve.

use std::ops::{Add, Div, Mul, Neg, Sub};

use num_complex::Complex64;

use crate::error::{Error, Result};

/// Scalars the solvers run over: `f64` for eigenvectors, `Complex64` for time stepping.
pub trait Scalar:
    Copy
    + PartialEq
    + Add<Output = Self>
    + Sub<Output = Self>
    + Mul<Output = Self>
    + Div<Output = Self>
    + Neg<Output = Self>
    + std::fmt::Debug
{
    fn zero() -> Self;
    fn one() -> Self;
    fn modulus(self) -> f64;
    fn from_real(x: f64) -> Self;
}

impl Scalar for f64 {
    fn zero() -> Self {
        0.0
    }
    fn one() -> Self {
        1.0
    }
    fn modulus(self) -> f64 {
        self.abs()
    }
    fn from_real(x: f64) -> Self {
        x
    }
}

impl Scalar for Complex64 {
    fn zero() -> Self {
        Complex64::new(0.0, 0.0)
    }
    fn one() -> Self {
        Complex64::new(1.0, 0.0)
    }
    fn modulus(self) -> f64 {
        self.norm()
    }
    fn from_real(x: f64) -> Self {
        Complex64::new(x, 0.0)
    }
}

/// What to do when elimination meets an exactly zero pivot.
#[derive(Clone, Copy, Debug)]
pub enum ZeroPivot {
    Fail,
    /// Replace the pivot by this magnitude. Inverse iteration wants this.
    Perturb(f64),
}

/// Pivoted LU factors of a tridiagonal matrix.
#[derive(Clone, Debug)]
pub struct TriLu<T: Scalar> {
    dl: Vec<T>,
    d: Vec<T>,
    du: Vec<T>,
    du2: Vec<T>,
    swapped: Vec<bool>,
}

impl<T: Scalar> TriLu<T> {
    /// Factor the matrix with subdiagonal `sub`, diagonal `diag` and superdiagonal `sup`.
    pub fn factor(sub: &[T], diag: &[T], sup: &[T], zero_pivot: ZeroPivot) -> Result<Self> {
        let n = diag.len();
        if n == 0 || sub.len() + 1 != n || sup.len() + 1 != n {
            return Err(Error::Dimension {
                expected: n.saturating_sub(1),
                got: sub.len().max(sup.len()),
            });
        }
        let mut dl = sub.to_vec();
        let mut d = diag.to_vec();
        let mut du = sup.to_vec();
        let mut du2 = vec![T::zero(); n.saturating_sub(2)];
        let mut swapped = vec![false; n.saturating_sub(1)];

        for i in 0..n - 1 {
            if d[i].modulus() >= dl[i].modulus() {
                // no row interchange
                if d[i] == T::zero() {
                    d[i] = Self::fix_pivot(zero_pivot, i)?;
                }
                let fact = dl[i] / d[i];
                dl[i] = fact;
                d[i + 1] = d[i + 1] - fact * du[i];
            } else {
                let fact = d[i] / dl[i];
                d[i] = dl[i];
                dl[i] = fact;
                let temp = du[i];
                du[i] = d[i + 1];
                d[i + 1] = temp - fact * d[i + 1];
                if i + 2 < n {
                    du2[i] = du[i + 1];
                    du[i + 1] = -fact * du[i + 1];
                }
                swapped[i] = true;
            }
        }
        if d[n - 1] == T::zero() {
            d[n - 1] = Self::fix_pivot(zero_pivot, n - 1)?;
        }
        Ok(Self {
            dl,
            d,
            du,
            du2,
            swapped,
        })
    }

    fn fix_pivot(zero_pivot: ZeroPivot, row: usize) -> Result<T> {
        match zero_pivot {
            ZeroPivot::Fail => Err(Error::Numerical(format!(
                "zero pivot in tridiagonal elimination at row {row}"
            ))),
            ZeroPivot::Perturb(eps) => Ok(T::from_real(eps)),
        }
    }

    pub fn len(&self) -> usize {
        self.d.len()
    }

    pub fn is_empty(&self) -> bool {
        self.d.is_empty()
    }

    /// Overwrite `b` with the solution of `A x = b`.
    pub fn solve_in_place(&self, b: &mut [T]) {
        let n = self.d.len();
        debug_assert_eq!(b.len(), n);
        // L y = P b
        for i in 0..n - 1 {
            if self.swapped[i] {
                let temp = b[i];
                b[i] = b[i + 1];
                b[i + 1] = temp - self.dl[i] * b[i];
            } else {
                b[i + 1] = b[i + 1] - self.dl[i] * b[i];
            }
        }
        // U x = y
        b[n - 1] = b[n - 1] / self.d[n - 1];
        if n > 1 {
            b[n - 2] = (b[n - 2] - self.du[n - 2] * b[n - 1]) / self.d[n - 2];
        }
        for i in (0..n.saturating_sub(2)).rev() {
            b[i] = (b[i] - self.du[i] * b[i + 1] - self.du2[i] * b[i + 2]) / self.d[i];
        }
    }
}

/// Factors of a symmetric-pattern tridiagonal matrix with optional corner coupling
/// `A[0][N-1] = A[N-1][0] = corner`.
#[derive(Clone, Debug)]
pub struct CyclicLu<T: Scalar> {
    lu: TriLu<T>,
    // Sherman–Morrison data; absent for an open chain.
    correction: Option<RankOne<T>>,
}

#[derive(Clone, Debug)]
struct RankOne<T: Scalar> {
    // v = e_0 + tail * e_{N-1}
    tail: T,
    // z = T'^{-1} u
    z: Vec<T>,
    // 1 + v·z
    denom: T,
}

impl<T: Scalar> CyclicLu<T> {
    /// `diag` has length N, `off` length N-1 (used for both sub- and superdiagonal).
    ///
    /// `gamma` is the free Sherman–Morrison parameter; `None` picks `-diag[0]`, or
    /// `-|corner|` when the diagonal entry vanishes.
    pub fn factor(
        diag: &[T],
        off: &[T],
        corner: Option<T>,
        gamma: Option<T>,
        zero_pivot: ZeroPivot,
    ) -> Result<Self> {
        let n = diag.len();
        let corner = match corner {
            Some(c) if n >= 3 => c,
            _ => {
                return Ok(Self {
                    lu: TriLu::factor(off, diag, off, zero_pivot)?,
                    correction: None,
                })
            }
        };
        let gamma = gamma.unwrap_or_else(|| {
            if diag[0] != T::zero() {
                -diag[0]
            } else {
                T::from_real(-corner.modulus())
            }
        });
        if gamma == T::zero() {
            return Err(Error::Numerical("Sherman-Morrison parameter is zero".into()));
        }
        // A = T' + u vᵀ with u = γ e_0 + c e_{N-1}, v = e_0 + (c/γ) e_{N-1}.
        let tail = corner / gamma;
        let mut modified = diag.to_vec();
        modified[0] = modified[0] - gamma;
        modified[n - 1] = modified[n - 1] - corner * tail;
        let lu = TriLu::factor(off, &modified, off, zero_pivot)?;

        let mut z = vec![T::zero(); n];
        z[0] = gamma;
        z[n - 1] = corner;
        lu.solve_in_place(&mut z);
        let denom = T::one() + z[0] + tail * z[n - 1];
        if denom == T::zero() {
            return Err(Error::Numerical(
                "Sherman-Morrison denominator vanished".into(),
            ));
        }
        Ok(Self {
            lu,
            correction: Some(RankOne { tail, z, denom }),
        })
    }

    pub fn len(&self) -> usize {
        self.lu.len()
    }

    pub fn is_empty(&self) -> bool {
        self.lu.is_empty()
    }

    pub fn solve_in_place(&self, b: &mut [T]) {
        self.lu.solve_in_place(b);
        if let Some(rank_one) = &self.correction {
            let n = b.len();
            let factor = (b[0] + rank_one.tail * b[n - 1]) / rank_one.denom;
            for (x, zi) in b.iter_mut().zip(&rank_one.z) {
                *x = *x - factor * *zi;
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn dense_mul(diag: &[f64], off: &[f64], corner: Option<f64>, x: &[f64]) -> Vec<f64> {
        let n = diag.len();
        let mut y = vec![0.0; n];
        for i in 0..n {
            y[i] += diag[i] * x[i];
            if i + 1 < n {
                y[i] += off[i] * x[i + 1];
                y[i + 1] += off[i] * x[i];
            }
        }
        if let Some(c) = corner {
            y[0] += c * x[n - 1];
            y[n - 1] += c * x[0];
        }
        y
    }

    #[test]
    fn pivoted_solve_handles_zero_diagonal() {
        // Diagonal zeros force row interchanges.
        let diag = [0.0, 0.0, 0.0, 0.0, 0.0];
        let off = [1.0, -2.0, 0.5, 3.0];
        let lu = TriLu::factor(&off, &diag, &off, ZeroPivot::Fail);
        // The 5x5 zero-diagonal path matrix is singular (odd N), so expect an error.
        assert!(lu.is_err());

        let diag = [0.0, 0.0, 0.0, 0.0];
        let off = [1.0, -2.0, 0.5];
        let lu = TriLu::factor(&off, &diag, &off, ZeroPivot::Fail).unwrap();
        let x = [1.0, 2.0, -1.0, 0.25];
        let mut b = dense_mul(&diag, &off, None, &x);
        lu.solve_in_place(&mut b);
        for (a, e) in b.iter().zip(&x) {
            assert!((a - e).abs() < 1e-13);
        }
    }

    #[test]
    fn cyclic_solve_matches_dense_product() {
        let diag = [2.5, -0.3, 1.1, 0.7, -1.9, 0.2];
        let off = [-1.0; 5];
        let x = [0.3, -1.2, 2.0, 0.5, -0.7, 1.4];
        let b = dense_mul(&diag, &off, Some(-1.0), &x);
        let lu = CyclicLu::factor(&diag, &off, Some(-1.0), None, ZeroPivot::Fail).unwrap();
        let mut sol = b.clone();
        lu.solve_in_place(&mut sol);
        for (a, e) in sol.iter().zip(&x) {
            assert!((a - e).abs() < 1e-12, "{a} vs {e}");
        }
    }

    #[test]
    fn complex_cyclic_solve() {
        let n = 7;
        let dt = 0.05;
        let diag: Vec<Complex64> = (0..n)
            .map(|i| Complex64::new(1.0, 0.5 * dt * (i as f64 * 0.37).sin()))
            .collect();
        let off = vec![Complex64::new(0.0, -0.5 * dt); n - 1];
        let corner = Complex64::new(0.0, -0.5 * dt);
        let x: Vec<Complex64> = (0..n)
            .map(|i| Complex64::new(i as f64, 1.0 - i as f64 * 0.5))
            .collect();
        let mut b = vec![Complex64::new(0.0, 0.0); n];
        for i in 0..n {
            b[i] += diag[i] * x[i];
            if i + 1 < n {
                b[i] += off[i] * x[i + 1];
                b[i + 1] += off[i] * x[i];
            }
        }
        b[0] += corner * x[n - 1];
        b[n - 1] += corner * x[0];
        let lu = CyclicLu::factor(&diag, &off, Some(corner), None, ZeroPivot::Fail).unwrap();
        lu.solve_in_place(&mut b);
        for (a, e) in b.iter().zip(&x) {
            assert!((a - e).norm() < 1e-12);
        }
    }
}
