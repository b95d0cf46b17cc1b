//! Localization center, localization length and participation ratio of a state.
//!
//! The length comes from the envelope `|ψ_i| ≈ |ψ_{i₀}| exp(-|i - i₀| / ξ)`: an ordinary
//! least-squares line through `ln|ψ_i|` against the distance to the center, both sides
//! folded together, gives slope `-1/ξ`.

use crate::error::{Error, Result};
use crate::fitting::linear_fit;
use crate::lattice::Boundary;
use crate::state::State;

/// Amplitudes at or below this are left out of the envelope regression.
pub const AMPLITUDE_FLOOR: f64 = 1e-12;
/// Fewest usable sites required on at least one side of the center.
pub const MIN_SIDE_SITES: usize = 8;

#[derive(Clone, Debug, PartialEq)]
pub struct LocalizationReport {
    pub center: usize,
    pub length: f64,
    pub fit_r2: f64,
    pub participation_ratio: f64,
}

/// Site of largest `|ψ_i|`, lowest index on ties.
pub fn localization_center(state: &State) -> usize {
    let mut best = 0;
    let mut best_mod = f64::NEG_INFINITY;
    for (i, a) in state.amplitudes().iter().enumerate() {
        let m = a.norm();
        if m > best_mod {
            best = i;
            best_mod = m;
        }
    }
    best
}

/// `1 / Σ|ψ_i|⁴`: 1 for a single site, N for the uniform state.
pub fn participation_ratio(state: &State) -> f64 {
    let ipr: f64 = state.amplitudes().iter().map(|a| a.norm_sqr().powi(2)).sum();
    1.0 / ipr
}

/// Lattice distance between two sites; the shorter arc on a ring.
pub fn site_distance(i: usize, j: usize, size: usize, boundary: Boundary) -> usize {
    let d = i.abs_diff(j);
    match boundary {
        Boundary::Open => d,
        Boundary::Periodic => d.min(size - d),
    }
}

/// Every site other than `center` paired with its signed offset from it, sorted by
/// offset. On a ring offsets run over `-⌊(N-1)/2⌋ ..= ⌊N/2⌋`, so each site appears once.
pub fn signed_offsets(center: usize, size: usize, boundary: Boundary) -> Vec<(isize, usize)> {
    match boundary {
        Boundary::Open => (0..size)
            .filter(|&s| s != center)
            .map(|s| (s as isize - center as isize, s))
            .collect(),
        Boundary::Periodic => {
            let n = size as isize;
            let lo = -((n - 1) / 2);
            let hi = n / 2;
            (lo..=hi)
                .filter(|&j| j != 0)
                .map(|j| (j, (center as isize + j).rem_euclid(n) as usize))
                .collect()
        }
    }
}

/// Exponential-envelope fit around the localization center.
pub fn localization_length(state: &State, boundary: Boundary) -> Result<LocalizationReport> {
    let center = localization_center(state);
    let n = state.len();
    let amps = state.amplitudes();

    let mut xs = Vec::with_capacity(n);
    let mut ys = Vec::with_capacity(n);
    let (mut left, mut right) = (0usize, 0usize);
    if amps[center].norm() > AMPLITUDE_FLOOR {
        xs.push(0.0);
        ys.push(amps[center].norm().ln());
    }
    for (offset, site) in signed_offsets(center, n, boundary) {
        let m = amps[site].norm();
        if m > AMPLITUDE_FLOOR {
            xs.push(offset.unsigned_abs() as f64);
            ys.push(m.ln());
            if offset < 0 {
                left += 1;
            } else {
                right += 1;
            }
        }
    }
    if left.max(right) < MIN_SIDE_SITES {
        return Err(Error::InsufficientData(format!(
            "{} usable sites left and {} right of center {center}; need {MIN_SIDE_SITES} on one side",
            left, right
        )));
    }
    let fit = linear_fit(&xs, &ys)?;
    let slope = fit.get("slope").expect("linear fit has a slope");
    if slope >= 0.0 {
        return Err(Error::NonpositiveSlope { slope });
    }
    Ok(LocalizationReport {
        center,
        length: -1.0 / slope,
        fit_r2: fit.r2.clamp(0.0, 1.0),
        participation_ratio: participation_ratio(state),
    })
}
