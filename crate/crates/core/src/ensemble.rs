//! Disorder-averaged sweeps over the disorder strength.
//!
//! A sweep is a grid of cells `(λ_k, r)`; every cell regenerates its own Hamiltonian from
//! a [`child_seed`] of the master seed and evaluates one observable. Cells run on a rayon pool
//! and come back in grid order, and the reduction is a plain serial loop over that order,
//! so results are bit-identical for any number of workers.

use log::warn;
use rayon::prelude::*;

use crate::dynamics::{evolve_record, InitialState, PropagatorConfig};
use crate::eigen::ground_state;
use crate::entanglement::{average_concurrence, center_pair, center_profile, nn_profile};
use crate::error::{Error, Result};
use crate::fitting::{find_interior_max, fit_exp_single, FitResult, Peak};
use crate::lattice::{Boundary, DisorderConfig, Hamiltonian};
use crate::localization::localization_length;

#[derive(Clone, Debug, PartialEq)]
pub enum Observable {
    /// `⟨C⟩` of the ground state.
    AvgConcurrence,
    /// Nearest-neighbour concurrence per bond.
    NnProfile,
    /// `C_{i₀, i₀+j}` for each listed offset `j`.
    CenterPair(Vec<isize>),
    /// `C_{i₀, i₀+j}` for every offset on the lattice.
    CenterProfile,
    /// Columns `xi`, `xi_sq`, `participation_ratio`.
    LocalizationLength,
    /// `⟨C⟩(t)` from the given initial state.
    Dynamics {
        propagator: PropagatorConfig,
        init: InitialState,
    },
}

impl Observable {
    pub fn name(&self) -> &'static str {
        match self {
            Observable::AvgConcurrence => "avg-concurrence",
            Observable::NnProfile => "nn-profile",
            Observable::CenterPair(_) => "center-pair",
            Observable::CenterProfile => "center-profile",
            Observable::LocalizationLength => "localization-length",
            Observable::Dynamics { .. } => "dynamics",
        }
    }
}

/// How cell seeds depend on the λ index.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Default)]
pub enum Seeding {
    /// Realization `r` uses `child_seed(master, 0, r)` at every λ, so each column of the
    /// grid scales one fixed disorder pattern `ε`. Curves in λ are then smooth and the
    /// differences between neighbouring λ carry no sampling noise of their own.
    #[default]
    SharedAcrossLambda,
    /// Every cell draws `child_seed(master, k, r)`, independent across λ.
    PerCell,
}

#[derive(Clone, Debug, PartialEq)]
pub struct SweepConfig {
    /// Lattice recipe; `seed` is the master seed and `strength` is ignored.
    pub base: DisorderConfig,
    pub lambdas: Vec<f64>,
    pub realizations: usize,
    pub observable: Observable,
    pub seeding: Seeding,
}

impl SweepConfig {
    pub fn new(
        base: DisorderConfig,
        lambdas: Vec<f64>,
        realizations: usize,
        observable: Observable,
    ) -> Self {
        Self {
            base,
            lambdas,
            realizations,
            observable,
            seeding: Seeding::default(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.base.validate()?;
        if self.lambdas.is_empty() {
            return Err(Error::InvalidConfig("lambda grid is empty".into()));
        }
        if self.lambdas.iter().any(|l| !(l.is_finite() && *l >= 0.0)) {
            return Err(Error::InvalidConfig(
                "lambdas must be finite and nonnegative".into(),
            ));
        }
        if self.lambdas.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::InvalidConfig(
                "lambdas must be strictly increasing".into(),
            ));
        }
        if self.realizations == 0 {
            return Err(Error::InvalidConfig("need at least one realization".into()));
        }
        match &self.observable {
            Observable::CenterPair(offsets) if offsets.is_empty() || offsets.contains(&0) => {
                Err(Error::InvalidConfig("center-pair offsets must be nonzero".into()))
            }
            Observable::Dynamics { propagator, init } => {
                propagator.validate()?;
                init.build(self.base.size).map(|_| ())
            }
            _ => Ok(()),
        }
    }

    /// Disorder recipe of cell `(lambda_index, realization)`.
    pub fn cell_config(&self, lambda_index: usize, realization: usize) -> DisorderConfig {
        let k = match self.seeding {
            Seeding::SharedAcrossLambda => 0,
            Seeding::PerCell => lambda_index as u64,
        };
        DisorderConfig {
            strength: self.lambdas[lambda_index],
            seed: child_seed(self.base.seed, k, realization as u64),
            ..self.base.clone()
        }
    }

    /// Values along the column axis, and its name.
    pub fn columns(&self) -> (&'static str, Vec<f64>) {
        let n = self.base.size;
        match &self.observable {
            Observable::AvgConcurrence => ("observable", vec![0.0]),
            Observable::NnProfile => {
                let bonds = match self.base.boundary {
                    Boundary::Open => n - 1,
                    Boundary::Periodic => n,
                };
                ("bond", (0..bonds).map(|b| b as f64).collect())
            }
            Observable::CenterPair(offsets) => {
                ("offset", offsets.iter().map(|&j| j as f64).collect())
            }
            Observable::CenterProfile => (
                "offset",
                profile_offsets(n, self.base.boundary)
                    .into_iter()
                    .map(|j| j as f64)
                    .collect(),
            ),
            Observable::LocalizationLength => ("component", vec![0.0, 1.0, 2.0]),
            Observable::Dynamics { propagator, .. } => {
                let records = propagator.steps() / propagator.record_stride + 1;
                (
                    "time",
                    (0..records)
                        .map(|k| (k * propagator.record_stride) as f64 * propagator.dt)
                        .collect(),
                )
            }
        }
    }
}

fn profile_offsets(n: usize, boundary: Boundary) -> Vec<isize> {
    let n = n as isize;
    match boundary {
        Boundary::Open => (-(n - 1)..=(n - 1)).filter(|&j| j != 0).collect(),
        Boundary::Periodic => (-((n - 1) / 2)..=(n / 2)).filter(|&j| j != 0).collect(),
    }
}

/// Frozen 64-bit mix of `(master, lambda_index, realization)`.
///
/// SplitMix64 finalizer applied in a chain; changing it changes every published sweep.
pub fn child_seed(master: u64, lambda_index: u64, realization: u64) -> u64 {
    fn mix(mut z: u64) -> u64 {
        z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
        z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
        z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
        z ^ (z >> 31)
    }
    mix(mix(mix(master) ^ lambda_index) ^ realization)
}

#[derive(Clone, Debug, PartialEq)]
pub struct CellFailure {
    pub lambda_index: usize,
    pub realization: usize,
    pub message: String,
}

#[derive(Clone, Debug, PartialEq)]
pub struct SweepResult {
    pub lambdas: Vec<f64>,
    pub column_name: &'static str,
    pub columns: Vec<f64>,
    /// `mean[k][c]`: mean over realizations at `lambdas[k]`, column `c`.
    pub mean: Vec<Vec<f64>>,
    /// Standard error of the mean, `s / √n`; zero when `n = 1`.
    pub stderr: Vec<Vec<f64>>,
    /// Realizations that contributed to each entry.
    pub counts: Vec<Vec<usize>>,
    pub realizations: usize,
    pub failures: Vec<CellFailure>,
    pub config: SweepConfig,
}

impl SweepResult {
    /// First column as a function of λ.
    pub fn scalar_curve(&self) -> Vec<f64> {
        self.mean.iter().map(|row| row[0]).collect()
    }
}

type CellValues = Vec<Option<f64>>;

/// Evaluate one cell: build its Hamiltonian and measure the observable.
pub fn evaluate_cell(config: &DisorderConfig, observable: &Observable) -> Result<CellValues> {
    let h = Hamiltonian::from_config(config)?;
    if let Observable::Dynamics { propagator, init } = observable {
        let samples = evolve_record(&h, init, propagator)?;
        return Ok(samples.iter().map(|s| Some(s.avg_concurrence)).collect());
    }
    let ground = ground_state(&h)?;
    let state = &ground.state;
    let boundary = config.boundary;
    Ok(match observable {
        Observable::AvgConcurrence => vec![Some(average_concurrence(state))],
        Observable::NnProfile => nn_profile(state, boundary).into_iter().map(Some).collect(),
        Observable::CenterPair(offsets) => offsets
            .iter()
            .map(|&j| center_pair(state, boundary, j))
            .collect(),
        Observable::CenterProfile => {
            let offsets = profile_offsets(config.size, boundary);
            let mut out = vec![None; offsets.len()];
            // profile_offsets is sorted, as is center_profile's output
            for (j, c) in center_profile(state, boundary) {
                if let Ok(pos) = offsets.binary_search(&j) {
                    out[pos] = Some(c);
                }
            }
            out
        }
        Observable::LocalizationLength => {
            let report = localization_length(state, boundary)?;
            vec![
                Some(report.length),
                Some(report.length * report.length),
                Some(report.participation_ratio),
            ]
        }
        Observable::Dynamics { .. } => unreachable!("handled above"),
    })
}

/// Run `f` on a pool of `workers` threads, or on rayon's global pool for `None`.
pub fn with_workers<T: Send>(workers: Option<usize>, f: impl FnOnce() -> T + Send) -> Result<T> {
    match workers {
        None => Ok(f()),
        Some(k) => {
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(k.max(1))
                .build()
                .map_err(|e| Error::InvalidConfig(format!("cannot build worker pool: {e}")))?;
            Ok(pool.install(f))
        }
    }
}

/// Disorder-averaged sweep of `cfg.observable` over the λ grid.
pub fn run_sweep(cfg: &SweepConfig, workers: Option<usize>) -> Result<SweepResult> {
    run_sweep_with(cfg, workers, evaluate_cell)
}

/// [`run_sweep`] with a replaceable per-cell evaluator.
pub fn run_sweep_with<F>(cfg: &SweepConfig, workers: Option<usize>, eval: F) -> Result<SweepResult>
where
    F: Fn(&DisorderConfig, &Observable) -> Result<CellValues> + Sync,
{
    cfg.validate()?;
    let (column_name, columns) = cfg.columns();
    let width = columns.len();
    let cells: Vec<(usize, usize)> = (0..cfg.lambdas.len())
        .flat_map(|k| (0..cfg.realizations).map(move |r| (k, r)))
        .collect();

    let outcomes: Vec<Result<CellValues>> = with_workers(workers, || {
        cells
            .par_iter()
            .map(|&(k, r)| eval(&cfg.cell_config(k, r), &cfg.observable))
            .collect()
    })?;

    let mut mean = Vec::with_capacity(cfg.lambdas.len());
    let mut stderr = Vec::with_capacity(cfg.lambdas.len());
    let mut counts = Vec::with_capacity(cfg.lambdas.len());
    let mut failures = Vec::new();

    for (k, row) in outcomes.chunks(cfg.realizations).enumerate() {
        let mut values: Vec<Vec<f64>> = vec![Vec::with_capacity(cfg.realizations); width];
        let mut successes = 0;
        for (r, outcome) in row.iter().enumerate() {
            match outcome {
                Ok(v) if v.len() == width => {
                    successes += 1;
                    for (c, x) in v.iter().enumerate() {
                        if let Some(x) = x {
                            values[c].push(*x);
                        }
                    }
                }
                Ok(v) => failures.push(CellFailure {
                    lambda_index: k,
                    realization: r,
                    message: format!("observable returned {} values, expected {width}", v.len()),
                }),
                Err(e) => failures.push(CellFailure {
                    lambda_index: k,
                    realization: r,
                    message: e.to_string(),
                }),
            }
        }
        if successes == 0 {
            let first = failures
                .iter()
                .find(|f| f.lambda_index == k)
                .map(|f| f.message.clone())
                .unwrap_or_default();
            let err = Error::Numerical(format!(
                "every realization failed at lambda = {} (first: {first})",
                cfg.lambdas[k]
            ));
            return Err(err);
        }
        let (m, s, n): (Vec<f64>, Vec<f64>, Vec<usize>) = values
            .iter()
            .map(|v| {
                let (m, s) = mean_and_stderr(v);
                (m, s, v.len())
            })
            .fold((vec![], vec![], vec![]), |(mut a, mut b, mut c), (m, s, n)| {
                a.push(m);
                b.push(s);
                c.push(n);
                (a, b, c)
            });
        mean.push(m);
        stderr.push(s);
        counts.push(n);
    }
    if !failures.is_empty() {
        warn!(
            "{} of {} cells failed and were excluded",
            failures.len(),
            cells.len()
        );
    }

    Ok(SweepResult {
        lambdas: cfg.lambdas.clone(),
        column_name,
        columns,
        mean,
        stderr,
        counts,
        realizations: cfg.realizations,
        failures,
        config: cfg.clone(),
    })
}

/// Sample mean and standard error of the mean, summed in slice order.
pub fn mean_and_stderr(values: &[f64]) -> (f64, f64) {
    let n = values.len();
    if n == 0 {
        return (f64::NAN, f64::NAN);
    }
    let mean = values.iter().sum::<f64>() / n as f64;
    if n == 1 {
        return (mean, 0.0);
    }
    let var = values.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1) as f64;
    (mean, (var / n as f64).sqrt())
}

/// Average of the two sides of a signed-offset profile at each distance `|j|`.
///
/// Distances with a missing (NaN) side use the other side alone; distances with neither
/// are skipped. Output is sorted by distance.
pub fn fold_profile(offsets: &[isize], values: &[f64]) -> Vec<(usize, f64)> {
    let max = offsets.iter().map(|j| j.unsigned_abs()).max().unwrap_or(0);
    let mut sums = vec![(0.0, 0usize); max + 1];
    for (&j, &v) in offsets.iter().zip(values) {
        if v.is_finite() {
            let slot = &mut sums[j.unsigned_abs()];
            slot.0 += v;
            slot.1 += 1;
        }
    }
    sums.into_iter()
        .enumerate()
        .filter(|&(d, (_, n))| d > 0 && n > 0)
        .map(|(d, (s, n))| (d, s / n as f64))
        .collect()
}

/// `C = B e^{-d/D} + A` through a folded profile, over the leading run of distances
/// whose value exceeds `floor`.
pub fn decay_fit(offsets: &[isize], values: &[f64], floor: f64) -> Result<FitResult> {
    let folded: Vec<(usize, f64)> = fold_profile(offsets, values)
        .into_iter()
        .take_while(|&(_, v)| v > floor)
        .collect();
    let xs: Vec<f64> = folded.iter().map(|&(d, _)| d as f64).collect();
    let ys: Vec<f64> = folded.iter().map(|&(_, v)| v).collect();
    fit_exp_single(&xs, &ys)
}

#[derive(Clone, Debug, PartialEq)]
pub struct CriticalPoint {
    pub offset: isize,
    pub lambda_c: f64,
    pub peak_value: f64,
    pub is_interior: bool,
}

#[derive(Clone, Debug)]
pub struct CriticalLambdaResult {
    pub points: Vec<CriticalPoint>,
    /// `λ_c = B e^{-j/D} + A` over the offsets; `None` with fewer than four offsets
    /// or when the fit is degenerate.
    pub fit: Option<FitResult>,
    pub curves: SweepResult,
}

/// Peak location of each column of an ensemble-mean curve `C_j(λ)`.
pub fn critical_points(offsets: &[isize], lambdas: &[f64], curves: &[Vec<f64>]) -> Result<Vec<CriticalPoint>> {
    offsets
        .iter()
        .enumerate()
        .map(|(c, &offset)| {
            let ys: Vec<f64> = curves.iter().map(|row| row[c]).collect();
            let peak = if lambdas.len() >= 5 {
                find_interior_max(lambdas, &ys)?
            } else {
                discrete_peak(lambdas, &ys)
            };
            Ok(CriticalPoint {
                offset,
                lambda_c: peak.x,
                peak_value: peak.y,
                is_interior: peak.is_interior,
            })
        })
        .collect()
}

fn discrete_peak(xs: &[f64], ys: &[f64]) -> Peak {
    let mut k = 0;
    for (i, &y) in ys.iter().enumerate() {
        if y > ys[k] {
            k = i;
        }
    }
    Peak {
        x: xs[k],
        y: ys[k],
        is_interior: k != 0 && k + 1 != xs.len(),
    }
}

/// Disorder strength maximizing the mean `C_{i₀, i₀+j}` for each offset `j`, plus a
/// single-exponential fit of `λ_c` against `j`.
pub fn run_critical_lambda(
    base: &DisorderConfig,
    offsets: &[isize],
    lambdas: &[f64],
    realizations: usize,
    workers: Option<usize>,
) -> Result<CriticalLambdaResult> {
    if offsets.iter().any(|&j| j < 1) {
        return Err(Error::InvalidConfig("critical-lambda offsets must be >= 1".into()));
    }
    let cfg = SweepConfig::new(
        base.clone(),
        lambdas.to_vec(),
        realizations,
        Observable::CenterPair(offsets.to_vec()),
    );
    let curves = run_sweep(&cfg, workers)?;
    let points = critical_points(offsets, lambdas, &curves.mean)?;
    let fit = if points.len() >= 4 {
        let xs: Vec<f64> = points.iter().map(|p| p.offset as f64).collect();
        let ys: Vec<f64> = points.iter().map(|p| p.lambda_c).collect();
        fit_exp_single(&xs, &ys).ok()
    } else {
        None
    };
    Ok(CriticalLambdaResult {
        points,
        fit,
        curves,
    })
}
