//! Small-lattice invariant suite, each check against its own brute-force reference.
//!
//! Everything here runs in well under a second and needs no input data.

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use num_complex::Complex64;

use crate::dynamics::{evolve_record, CrankNicolson, InitialState, PropagatorConfig};
use crate::eigen::ground_state;
use crate::ensemble::{run_sweep, Observable, SweepConfig};
use crate::entanglement::{average_concurrence, nn_profile};
use crate::error::Result;
use crate::fitting::fit_exp_single;
use crate::lattice::{Boundary, DisorderConfig, GaussianStream, Hamiltonian};
use crate::output::{read_table, sweep_table, write_table};
use crate::state::State;

#[derive(Clone, Debug, PartialEq)]
pub struct Check {
    pub name: &'static str,
    pub passed: bool,
    pub detail: String,
}

impl Check {
    fn from_error(name: &'static str, worst: Result<f64>, tolerance: f64) -> Self {
        match worst {
            Ok(err) => Check {
                name,
                passed: err <= tolerance,
                detail: format!("max error {err:.3e} (tolerance {tolerance:.0e})"),
            },
            Err(e) => Check {
                name,
                passed: false,
                detail: e.to_string(),
            },
        }
    }
}

pub fn run_all() -> Vec<Check> {
    vec![
        Check::from_error("concurrence-closed-form", closed_form_error(), 1e-12),
        Check::from_error("clean-ring-baseline", clean_ring_error(), 1e-10),
        Check::from_error("ground-state-oracle", ground_state_error(), 1e-8),
        Check::from_error("crank-nicolson-oracle", cayley_error(), 1e-10),
        Check::from_error("norm-conservation", norm_drift(), 1e-10),
        Check::from_error("w-state-invariance", w_state_drift(), 1e-10),
        Check::from_error("fit-roundtrip", fit_roundtrip_error(), 1e-6),
        Check::from_error("sweep-determinism", sweep_mismatch(), 0.0),
    ]
}

fn random_state(n: usize, stream: &mut GaussianStream) -> Result<State> {
    let amps = (0..n)
        .map(|_| Complex64::new(stream.next_normal(), stream.next_normal()))
        .collect();
    State::normalize(amps)
}

fn closed_form_error() -> Result<f64> {
    let mut stream = GaussianStream::new(11);
    let mut worst = 0.0_f64;
    for n in 2..=32 {
        for _ in 0..5 {
            let s = random_state(n, &mut stream)?;
            let m = s.moduli();
            let mut sum = 0.0;
            for i in 0..n {
                for j in i + 1..n {
                    sum += 2.0 * m[i] * m[j];
                }
            }
            let pairs = (n * (n - 1) / 2) as f64;
            let reference = sum / pairs;
            worst = worst.max((average_concurrence(&s) - reference).abs() / reference);
        }
    }
    Ok(worst)
}

fn clean_ring_error() -> Result<f64> {
    let mut worst = 0.0_f64;
    for n in [16, 64] {
        let h = Hamiltonian::from_config(&DisorderConfig::new(n))?;
        let g = ground_state(&h)?;
        let expected = 2.0 / n as f64;
        worst = worst.max((average_concurrence(&g.state) - expected).abs());
        for c in nn_profile(&g.state, Boundary::Periodic) {
            worst = worst.max((c - expected).abs());
        }
    }
    Ok(worst)
}

fn dense(h: &Hamiltonian) -> DMatrix<f64> {
    let rows = h.to_dense();
    DMatrix::from_fn(h.len(), h.len(), |i, j| rows[i][j])
}

fn ground_state_error() -> Result<f64> {
    let mut worst = 0.0_f64;
    for boundary in [Boundary::Open, Boundary::Periodic] {
        for r in 0..20u64 {
            let n = 4 + (r as usize % 5) * 5;
            let cfg = DisorderConfig::new(n)
                .with_strength(0.2 + 0.1 * r as f64)
                .with_seed(100 + r)
                .with_boundary(boundary);
            let h = Hamiltonian::from_config(&cfg)?;
            let g = ground_state(&h)?;
            let eig = SymmetricEigen::new(dense(&h));
            let k = eig.eigenvalues.imin();
            let v = eig.eigenvectors.column(k);
            let overlap: f64 = g.state.real_parts().iter().zip(v.iter()).map(|(a, b)| a * b).sum();
            worst = worst
                .max((g.energy - eig.eigenvalues[k]).abs())
                .max(1.0 - overlap.abs());
        }
    }
    Ok(worst)
}

fn cayley_error() -> Result<f64> {
    let n = 12;
    let dt = 0.05;
    let mut worst = 0.0_f64;
    for boundary in [Boundary::Open, Boundary::Periodic] {
        let cfg = DisorderConfig::new(n)
            .with_strength(0.8)
            .with_seed(7)
            .with_boundary(boundary);
        let h = Hamiltonian::from_config(&cfg)?;
        let hd = dense(&h).map(|x| Complex64::new(x, 0.0));
        let half = Complex64::new(0.0, 0.5 * dt);
        let id = DMatrix::<Complex64>::identity(n, n);
        let lhs = &id + &hd * half;
        let rhs = &id - &hd * half;
        let u = lhs
            .lu()
            .solve(&rhs)
            .ok_or_else(|| crate::Error::Numerical("singular Cayley matrix".into()))?;

        let cn = CrankNicolson::new(&h, dt)?;
        let start = State::delta(n, n / 2)?;
        let mut psi = start.amplitudes().to_vec();
        let mut scratch = psi.clone();
        let mut reference = DVector::from_column_slice(&psi);
        for _ in 0..50 {
            cn.step_in_place(&mut psi, &mut scratch);
            reference = &u * reference;
        }
        for (a, b) in psi.iter().zip(reference.iter()) {
            worst = worst.max((a - b).norm());
        }
    }
    Ok(worst)
}

fn norm_drift() -> Result<f64> {
    let cfg = DisorderConfig::new(32).with_strength(1.0).with_seed(3);
    let h = Hamiltonian::from_config(&cfg)?;
    let cn = CrankNicolson::new(&h, 0.1)?;
    let mut psi = State::delta(32, 5)?.into_amplitudes();
    let mut scratch = psi.clone();
    for _ in 0..1000 {
        cn.step_in_place(&mut psi, &mut scratch);
    }
    let norm: f64 = psi.iter().map(|a| a.norm_sqr()).sum::<f64>().sqrt();
    Ok((norm - 1.0).abs())
}

fn w_state_drift() -> Result<f64> {
    let h = Hamiltonian::from_config(&DisorderConfig::new(24))?;
    let prop = PropagatorConfig {
        dt: 0.05,
        total_time: 10.0,
        record_stride: 10,
        snapshot_stride: None,
    };
    let samples = evolve_record(&h, &InitialState::WState, &prop)?;
    let c0 = samples[0].avg_concurrence;
    Ok(samples
        .iter()
        .map(|s| (s.avg_concurrence - c0).abs())
        .fold(0.0, f64::max))
}

fn fit_roundtrip_error() -> Result<f64> {
    let xs: Vec<f64> = (0..30).map(|i| i as f64 * 0.5).collect();
    let ys: Vec<f64> = xs.iter().map(|x| 2.0 * (-x / 3.0).exp() + 0.25).collect();
    let fit = fit_exp_single(&xs, &ys)?;
    let rel = |name, truth: f64| (fit.get(name).unwrap_or(f64::NAN) - truth).abs() / truth;
    Ok(rel("B", 2.0).max(rel("D", 3.0)).max(rel("A", 0.25)))
}

fn sweep_mismatch() -> Result<f64> {
    let cfg = SweepConfig::new(
        DisorderConfig::new(24).with_seed(99),
        vec![0.0, 0.5, 1.0],
        4,
        Observable::AvgConcurrence,
    );
    let mut bodies = Vec::new();
    for workers in [1, 2] {
        let res = run_sweep(&cfg, Some(workers))?;
        let mut buf = Vec::new();
        write_table(&mut buf, None, &sweep_table(&res, "mean_avg_concurrence")).map_err(|source| {
            crate::Error::Io {
                path: "<memory>".into(),
                source,
            }
        })?;
        bodies.push(read_table(buf.as_slice(), "<memory>")?.body());
    }
    Ok(if bodies[0] == bodies[1] { 0.0 } else { 1.0 })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn every_check_passes() {
        for check in run_all() {
            assert!(check.passed, "{}: {}", check.name, check.detail);
        }
    }
}
