use num_complex::Complex64;

use crate::error::{Error, Result};

/// Tolerance on `Σ|ψ_i|²` accepted by [`State::new_strict`].
pub const NORM_TOLERANCE: f64 = 1e-10;

/// Normalized one-particle amplitude vector `ψ_i` over the lattice sites.
///
/// Sites are indexed from 0.
#[derive(Clone, Debug, PartialEq)]
pub struct State {
    amplitudes: Vec<Complex64>,
}

impl State {
    /// Rescales `amplitudes` to unit norm. Fails on an empty or all-zero vector.
    pub fn normalize(mut amplitudes: Vec<Complex64>) -> Result<Self> {
        if amplitudes.is_empty() {
            return Err(Error::InvalidConfig("state must have at least one site".into()));
        }
        let norm = l2_norm(&amplitudes);
        if !(norm > 0.0 && norm.is_finite()) {
            return Err(Error::InvalidConfig(format!(
                "cannot normalize a state of norm {norm}"
            )));
        }
        for a in &mut amplitudes {
            *a /= norm;
        }
        Ok(Self { amplitudes })
    }

    /// Accepts `amplitudes` only if already normalized to [`NORM_TOLERANCE`].
    pub fn new_strict(amplitudes: Vec<Complex64>) -> Result<Self> {
        if amplitudes.is_empty() {
            return Err(Error::InvalidConfig("state must have at least one site".into()));
        }
        let norm_sq: f64 = amplitudes.iter().map(|a| a.norm_sqr()).sum();
        if (norm_sq - 1.0).abs() > NORM_TOLERANCE {
            return Err(Error::InvalidConfig(format!(
                "state is not normalized: sum |psi|^2 = {norm_sq}"
            )));
        }
        Ok(Self { amplitudes })
    }

    pub fn from_real(amplitudes: &[f64]) -> Result<Self> {
        Self::normalize(amplitudes.iter().map(|&x| Complex64::new(x, 0.0)).collect())
    }

    /// Particle on a single site: `c†_site |0⟩`.
    pub fn delta(size: usize, site: usize) -> Result<Self> {
        if site >= size {
            return Err(Error::Index(format!("site {site} outside lattice of {size}")));
        }
        let mut amplitudes = vec![Complex64::new(0.0, 0.0); size];
        amplitudes[site] = Complex64::new(1.0, 0.0);
        Ok(Self { amplitudes })
    }

    /// Equal-weight superposition over all sites (the W state).
    pub fn w_state(size: usize) -> Result<Self> {
        if size == 0 {
            return Err(Error::InvalidConfig("state must have at least one site".into()));
        }
        let a = Complex64::new(1.0 / (size as f64).sqrt(), 0.0);
        Ok(Self {
            amplitudes: vec![a; size],
        })
    }

    /// Skips the norm check. Callers guarantee unit norm up to rounding.
    pub(crate) fn from_normalized_unchecked(amplitudes: Vec<Complex64>) -> Self {
        Self { amplitudes }
    }

    pub fn len(&self) -> usize {
        self.amplitudes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.amplitudes.is_empty()
    }

    pub fn amplitudes(&self) -> &[Complex64] {
        &self.amplitudes
    }

    pub fn into_amplitudes(self) -> Vec<Complex64> {
        self.amplitudes
    }

    pub fn moduli(&self) -> Vec<f64> {
        self.amplitudes.iter().map(|a| a.norm()).collect()
    }

    /// Real parts; exact for eigenstates.
    pub fn real_parts(&self) -> Vec<f64> {
        self.amplitudes.iter().map(|a| a.re).collect()
    }

    pub fn norm(&self) -> f64 {
        l2_norm(&self.amplitudes)
    }
}

pub(crate) fn l2_norm(v: &[Complex64]) -> f64 {
    // scaled accumulation, immune to overflow for huge intermediate iterates
    let scale = v.iter().fold(0.0_f64, |m, a| m.max(a.re.abs()).max(a.im.abs()));
    if scale == 0.0 || !scale.is_finite() {
        return scale;
    }
    let sum: f64 = v
        .iter()
        .map(|a| {
            let (re, im) = (a.re / scale, a.im / scale);
            re * re + im * im
        })
        .sum();
    scale * sum.sqrt()
}
