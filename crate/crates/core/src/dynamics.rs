//! Crank–Nicolson propagation of `i dψ/dt = H ψ`.
//!
//! One step solves `(1 + i dt/2 H) ψ' = (1 - i dt/2 H) ψ`. The left operator is factored
//! once per `(H, dt)`; a ring adds the Sherman–Morrison correction of [`CyclicLu`].

use num_complex::Complex64;

use crate::entanglement::average_concurrence;
use crate::error::{Error, Result};
use crate::lattice::{Boundary, Hamiltonian};
use crate::state::State;
use crate::tridiag::{CyclicLu, ZeroPivot};

pub const MAX_DT: f64 = 0.1;

#[derive(Clone, Debug, PartialEq)]
pub struct PropagatorConfig {
    pub dt: f64,
    pub total_time: f64,
    /// Steps between recorded samples.
    pub record_stride: usize,
    /// Keep a state snapshot every this many records; `None` keeps none.
    pub snapshot_stride: Option<usize>,
}

impl Default for PropagatorConfig {
    fn default() -> Self {
        Self {
            dt: 0.05,
            total_time: 400.0,
            record_stride: 20,
            snapshot_stride: None,
        }
    }
}

impl PropagatorConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.dt > 0.0 && self.dt <= MAX_DT) {
            return Err(Error::InvalidConfig(format!(
                "dt must lie in (0, {MAX_DT}], got {}",
                self.dt
            )));
        }
        if !(self.total_time >= self.dt && self.total_time.is_finite()) {
            return Err(Error::InvalidConfig(format!(
                "total time {} must be finite and at least dt = {}",
                self.total_time, self.dt
            )));
        }
        if self.record_stride == 0 {
            return Err(Error::InvalidConfig("record stride must be positive".into()));
        }
        if self.snapshot_stride == Some(0) {
            return Err(Error::InvalidConfig("snapshot stride must be positive".into()));
        }
        Ok(())
    }

    pub fn steps(&self) -> usize {
        (self.total_time / self.dt).round() as usize
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum InitialState {
    /// Particle on one site (0-based).
    Delta(usize),
    WState,
    Custom(State),
}

impl InitialState {
    /// Particle in the middle of the chain, site `N/2`.
    pub fn central_delta(size: usize) -> Self {
        InitialState::Delta(size / 2)
    }

    pub fn build(&self, size: usize) -> Result<State> {
        match self {
            InitialState::Delta(site) => State::delta(size, *site),
            InitialState::WState => State::w_state(size),
            InitialState::Custom(s) => {
                if s.len() != size {
                    return Err(Error::Dimension {
                        expected: size,
                        got: s.len(),
                    });
                }
                State::new_strict(s.amplitudes().to_vec())
            }
        }
    }

    pub fn label(&self) -> String {
        match self {
            InitialState::Delta(site) => format!("delta:{site}"),
            InitialState::WState => "w".into(),
            InitialState::Custom(_) => "custom".into(),
        }
    }
}

/// Factored Crank–Nicolson stepper for one Hamiltonian and time step.
#[derive(Clone, Debug)]
pub struct CrankNicolson {
    potentials: Vec<f64>,
    hopping: f64,
    periodic: bool,
    half_dt: f64,
    lhs: CyclicLu<Complex64>,
}

impl CrankNicolson {
    pub fn new(h: &Hamiltonian, dt: f64) -> Result<Self> {
        if !(dt > 0.0 && dt.is_finite()) {
            return Err(Error::InvalidConfig(format!("dt must be positive, got {dt}")));
        }
        let half_dt = 0.5 * dt;
        let i_half = Complex64::new(0.0, half_dt);
        let diag: Vec<Complex64> = h
            .potentials()
            .iter()
            .map(|&v| Complex64::new(1.0, 0.0) + i_half * v)
            .collect();
        let off: Vec<Complex64> = h.chain_offdiag().iter().map(|&e| i_half * e).collect();
        let corner = h.corner().map(|c| i_half * c);
        let lhs = CyclicLu::factor(&diag, &off, corner, None, ZeroPivot::Fail)?;
        Ok(Self {
            potentials: h.potentials().to_vec(),
            hopping: h.hopping(),
            periodic: h.boundary() == Boundary::Periodic,
            half_dt,
            lhs,
        })
    }

    pub fn len(&self) -> usize {
        self.potentials.len()
    }

    pub fn is_empty(&self) -> bool {
        self.potentials.is_empty()
    }

    /// Advance `psi` by one step. `scratch` must have the same length.
    pub fn step_in_place(&self, psi: &mut [Complex64], scratch: &mut [Complex64]) {
        let n = psi.len();
        debug_assert_eq!(n, self.len());
        let t = self.hopping;
        let minus_i_half = Complex64::new(0.0, -self.half_dt);
        let zero = Complex64::new(0.0, 0.0);
        for i in 0..n {
            let left = if i > 0 {
                psi[i - 1]
            } else if self.periodic {
                psi[n - 1]
            } else {
                zero
            };
            let right = if i + 1 < n {
                psi[i + 1]
            } else if self.periodic {
                psi[0]
            } else {
                zero
            };
            let h_psi = psi[i] * self.potentials[i] - (left + right) * t;
            scratch[i] = psi[i] + minus_i_half * h_psi;
        }
        self.lhs.solve_in_place(scratch);
        psi.copy_from_slice(scratch);
    }
}

/// One Crank–Nicolson step of length `dt`.
pub fn step(h: &Hamiltonian, state: &State, dt: f64) -> Result<State> {
    if state.len() != h.len() {
        return Err(Error::Dimension {
            expected: h.len(),
            got: state.len(),
        });
    }
    let cn = CrankNicolson::new(h, dt)?;
    let mut psi = state.amplitudes().to_vec();
    let mut scratch = vec![Complex64::new(0.0, 0.0); psi.len()];
    cn.step_in_place(&mut psi, &mut scratch);
    check_finite(&psi, 1)?;
    Ok(State::from_normalized_unchecked(psi))
}

fn check_finite(psi: &[Complex64], step: usize) -> Result<()> {
    if psi.iter().any(|a| !a.re.is_finite() || !a.im.is_finite()) {
        return Err(Error::Numerical(format!(
            "non-finite amplitude after step {step}"
        )));
    }
    Ok(())
}

#[derive(Clone, Debug, PartialEq)]
pub struct Sample {
    pub time: f64,
    pub avg_concurrence: f64,
    pub snapshot: Option<State>,
}

/// Evolve from `init` and record `⟨C⟩` every `record_stride` steps, time zero included.
pub fn evolve_record(
    h: &Hamiltonian,
    init: &InitialState,
    cfg: &PropagatorConfig,
) -> Result<Vec<Sample>> {
    cfg.validate()?;
    let start = init.build(h.len())?;
    let cn = CrankNicolson::new(h, cfg.dt)?;
    let steps = cfg.steps();
    let mut samples = Vec::with_capacity(steps / cfg.record_stride + 1);

    let mut psi = start.into_amplitudes();
    let mut scratch = vec![Complex64::new(0.0, 0.0); psi.len()];
    let record = |k: usize, psi: &[Complex64], samples: &mut Vec<Sample>| {
        let state = State::from_normalized_unchecked(psi.to_vec());
        let record_index = samples.len();
        let keep = cfg
            .snapshot_stride
            .is_some_and(|stride| record_index.is_multiple_of(stride));
        samples.push(Sample {
            time: k as f64 * cfg.dt,
            avg_concurrence: average_concurrence(&state),
            snapshot: keep.then_some(state),
        });
    };

    record(0, &psi, &mut samples);
    for k in 1..=steps {
        cn.step_in_place(&mut psi, &mut scratch);
        if k % cfg.record_stride == 0 {
            check_finite(&psi, k)?;
            record(k, &psi, &mut samples);
        }
    }
    Ok(samples)
}

/// `⟨ψ|H|ψ⟩`.
pub fn energy_expectation(h: &Hamiltonian, state: &State) -> Result<f64> {
    let h_psi = h.apply(state.amplitudes())?;
    Ok(state
        .amplitudes()
        .iter()
        .zip(&h_psi)
        .map(|(a, b)| (a.conj() * b).re)
        .sum())
}
