//! Least-squares fits: straight lines, `B e^{-x/D} + A`, `B₁e^{-x/D₁} + B₂e^{-x/D₂}`, and
//! a three-point parabolic peak finder.
//!
//! The exponential models are solved by Levenberg–Marquardt on internally rescaled data
//! (`x / max|x|`, `y / max|y|`), so the gradient tolerance means the same thing whether
//! the data are concurrences of order 1e-3 or distances of order 1e3.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};

pub const LM_MAX_ITERATIONS: usize = 500;
pub const LM_INITIAL_DAMPING: f64 = 1e-3;
pub const LM_DAMPING_FACTOR: f64 = 10.0;
pub const LM_GRADIENT_TOLERANCE: f64 = 1e-10;
const LM_MAX_DAMPING: f64 = 1e20;

/// Decay lengths, in units of the x-span, tried as starting points for the double fit.
const DOUBLE_EXP_SEEDS: [f64; 7] = [0.01, 0.03, 0.1, 0.3, 1.0, 3.0, 10.0];

#[derive(Clone, Debug, PartialEq)]
pub struct FitResult {
    pub params: Vec<(&'static str, f64)>,
    /// `‖y - f(x)‖₂` in the units of the input data.
    pub residual_norm: f64,
    pub r2: f64,
    pub converged: bool,
    pub iterations: usize,
}

impl FitResult {
    pub fn get(&self, name: &str) -> Option<f64> {
        self.params.iter().find(|(k, _)| *k == name).map(|&(_, v)| v)
    }
}

fn check_lengths(xs: &[f64], ys: &[f64]) -> Result<()> {
    if xs.len() != ys.len() {
        return Err(Error::Dimension {
            expected: xs.len(),
            got: ys.len(),
        });
    }
    if xs.iter().chain(ys).any(|v| !v.is_finite()) {
        return Err(Error::DegenerateInput("non-finite data point".into()));
    }
    Ok(())
}

fn r_squared(ys: &[f64], ss_res: f64) -> f64 {
    let mean = ys.iter().sum::<f64>() / ys.len() as f64;
    let ss_tot: f64 = ys.iter().map(|y| (y - mean).powi(2)).sum();
    if ss_tot == 0.0 {
        if ss_res == 0.0 {
            1.0
        } else {
            0.0
        }
    } else {
        1.0 - ss_res / ss_tot
    }
}

/// Ordinary least squares `y = slope·x + intercept`.
pub fn linear_fit(xs: &[f64], ys: &[f64]) -> Result<FitResult> {
    check_lengths(xs, ys)?;
    if xs.len() < 2 {
        return Err(Error::DegenerateInput("linear fit needs at least 2 points".into()));
    }
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    if sxx == 0.0 {
        return Err(Error::DegenerateInput("all x values are equal".into()));
    }
    let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let ss_res: f64 = xs
        .iter()
        .zip(ys)
        .map(|(x, y)| (y - slope * x - intercept).powi(2))
        .sum();
    Ok(FitResult {
        params: vec![("slope", slope), ("intercept", intercept)],
        residual_norm: ss_res.sqrt(),
        r2: r_squared(ys, ss_res),
        converged: true,
        iterations: 1,
    })
}

/// A model for [`levenberg_marquardt`]: value and gradient with respect to the parameters.
trait Model {
    fn eval(&self, x: f64, p: &[f64], grad: &mut [f64]) -> f64;
    fn admissible(&self, p: &[f64]) -> bool;
}

struct SingleExp;

impl Model for SingleExp {
    // p = [B, D, A]
    fn eval(&self, x: f64, p: &[f64], grad: &mut [f64]) -> f64 {
        let e = (-x / p[1]).exp();
        grad[0] = e;
        grad[1] = p[0] * e * x / (p[1] * p[1]);
        grad[2] = 1.0;
        p[0] * e + p[2]
    }

    fn admissible(&self, p: &[f64]) -> bool {
        p.iter().all(|v| v.is_finite()) && p[1] > 0.0
    }
}

struct DoubleExp;

impl Model for DoubleExp {
    // p = [B1, D1, B2, D2]
    fn eval(&self, x: f64, p: &[f64], grad: &mut [f64]) -> f64 {
        let e1 = (-x / p[1]).exp();
        let e2 = (-x / p[3]).exp();
        grad[0] = e1;
        grad[1] = p[0] * e1 * x / (p[1] * p[1]);
        grad[2] = e2;
        grad[3] = p[2] * e2 * x / (p[3] * p[3]);
        p[0] * e1 + p[2] * e2
    }

    fn admissible(&self, p: &[f64]) -> bool {
        p.iter().all(|v| v.is_finite()) && p[1] > 0.0 && p[3] > 0.0
    }
}

#[derive(Debug, Clone)]
struct LmOutcome {
    params: Vec<f64>,
    cost: f64,
    iterations: usize,
    converged: bool,
}

fn residuals_and_jacobian(
    model: &dyn Model,
    xs: &[f64],
    ys: &[f64],
    p: &[f64],
) -> (DVector<f64>, DMatrix<f64>) {
    let m = xs.len();
    let k = p.len();
    let mut r = DVector::zeros(m);
    let mut jac = DMatrix::zeros(m, k);
    let mut grad = vec![0.0; k];
    for (row, (&x, &y)) in xs.iter().zip(ys).enumerate() {
        let f = model.eval(x, p, &mut grad);
        r[row] = y - f;
        for (col, g) in grad.iter().enumerate() {
            jac[(row, col)] = *g;
        }
    }
    (r, jac)
}

fn cost_of(model: &dyn Model, xs: &[f64], ys: &[f64], p: &[f64]) -> f64 {
    let mut grad = vec![0.0; p.len()];
    xs.iter()
        .zip(ys)
        .map(|(&x, &y)| (y - model.eval(x, p, &mut grad)).powi(2))
        .sum()
}

/// Marquardt-scaled damped Gauss–Newton: solve `(JᵀJ + μ diag(JᵀJ)) δ = Jᵀr`,
/// divide μ by 10 on an accepted step and multiply by 10 on a rejected one.
fn levenberg_marquardt(model: &dyn Model, xs: &[f64], ys: &[f64], start: &[f64]) -> LmOutcome {
    let mut p = start.to_vec();
    let mut cost = cost_of(model, xs, ys, &p);
    let mut damping = LM_INITIAL_DAMPING;
    let k = p.len();

    for iteration in 0..LM_MAX_ITERATIONS {
        let (r, jac) = residuals_and_jacobian(model, xs, ys, &p);
        let gradient = jac.transpose() * &r;
        if gradient.amax() <= LM_GRADIENT_TOLERANCE {
            return LmOutcome {
                params: p,
                cost,
                iterations: iteration,
                converged: true,
            };
        }
        let normal = jac.transpose() * &jac;
        let mut accepted = false;
        while damping <= LM_MAX_DAMPING {
            let mut lhs = normal.clone();
            for i in 0..k {
                let d = normal[(i, i)].max(1e-30);
                lhs[(i, i)] += damping * d;
            }
            let step = match lhs.lu().solve(&gradient) {
                Some(s) => s,
                None => {
                    damping *= LM_DAMPING_FACTOR;
                    continue;
                }
            };
            let trial: Vec<f64> = p.iter().zip(step.iter()).map(|(a, b)| a + b).collect();
            if model.admissible(&trial) {
                let trial_cost = cost_of(model, xs, ys, &trial);
                if trial_cost.is_finite() && trial_cost < cost {
                    p = trial;
                    cost = trial_cost;
                    damping /= LM_DAMPING_FACTOR;
                    accepted = true;
                    break;
                }
            }
            damping *= LM_DAMPING_FACTOR;
        }
        if !accepted {
            // No downhill step at any damping: we sit at a minimum to working precision.
            let (r, jac) = residuals_and_jacobian(model, xs, ys, &p);
            let g = (jac.transpose() * r).amax();
            return LmOutcome {
                params: p,
                cost,
                iterations: iteration + 1,
                converged: g <= LM_GRADIENT_TOLERANCE,
            };
        }
    }
    let (r, jac) = residuals_and_jacobian(model, xs, ys, &p);
    let g = (jac.transpose() * r).amax();
    LmOutcome {
        params: p,
        cost,
        iterations: LM_MAX_ITERATIONS,
        converged: g <= LM_GRADIENT_TOLERANCE,
    }
}

struct Scaled {
    xs: Vec<f64>,
    ys: Vec<f64>,
    x_scale: f64,
    y_scale: f64,
}

fn rescale(xs: &[f64], ys: &[f64]) -> Scaled {
    let x_scale = xs.iter().fold(0.0_f64, |m, v| m.max(v.abs()));
    let y_scale = ys.iter().fold(0.0_f64, |m, v| m.max(v.abs()));
    let x_scale = if x_scale > 0.0 { x_scale } else { 1.0 };
    let y_scale = if y_scale > 0.0 { y_scale } else { 1.0 };
    Scaled {
        xs: xs.iter().map(|x| x / x_scale).collect(),
        ys: ys.iter().map(|y| y / y_scale).collect(),
        x_scale,
        y_scale,
    }
}

/// `y = B e^{-x/D} + A`, Levenberg–Marquardt from a log-linear start.
pub fn fit_exp_single(xs: &[f64], ys: &[f64]) -> Result<FitResult> {
    check_lengths(xs, ys)?;
    if xs.len() < 4 {
        return Err(Error::DegenerateInput(
            "single-exponential fit needs at least 4 points".into(),
        ));
    }
    let y_min = ys.iter().cloned().fold(f64::INFINITY, f64::min);
    let y_max = ys.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    if y_min == y_max {
        return Err(Error::DegenerateInput("all y values are equal".into()));
    }
    let s = rescale(xs, ys);
    let start = single_exp_start(&s.xs, &s.ys);
    let out = levenberg_marquardt(&SingleExp, &s.xs, &s.ys, &start);

    let b = out.params[0] * s.y_scale;
    let d = out.params[1] * s.x_scale;
    let a = out.params[2] * s.y_scale;
    let ss_res = out.cost * s.y_scale * s.y_scale;
    Ok(FitResult {
        params: vec![("B", b), ("D", d), ("A", a)],
        residual_norm: ss_res.sqrt(),
        r2: r_squared(ys, ss_res),
        converged: out.converged,
        iterations: out.iterations,
    })
}

fn single_exp_start(xs: &[f64], ys: &[f64]) -> Vec<f64> {
    let a0 = ys.iter().cloned().fold(f64::INFINITY, f64::min);
    let (lx, ly): (Vec<f64>, Vec<f64>) = xs
        .iter()
        .zip(ys)
        .filter(|(_, &y)| y - a0 > 0.0)
        .map(|(&x, &y)| (x, (y - a0).ln()))
        .unzip();
    let span = {
        let lo = xs.iter().cloned().fold(f64::INFINITY, f64::min);
        let hi = xs.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        (hi - lo).max(f64::MIN_POSITIVE)
    };
    if let Ok(fit) = linear_fit(&lx, &ly) {
        let slope = fit.get("slope").unwrap_or(0.0);
        let intercept = fit.get("intercept").unwrap_or(0.0);
        if slope < 0.0 && intercept.is_finite() {
            return vec![intercept.exp(), -1.0 / slope, a0];
        }
    }
    let y_first = ys[0];
    vec![y_first - a0, span, a0]
}

/// `y = B₁e^{-x/D₁} + B₂e^{-x/D₂}`, best of a grid of Levenberg–Marquardt starts.
///
/// Reported parameters always satisfy `D₁ ≤ D₂`.
pub fn fit_exp_double(xs: &[f64], ys: &[f64]) -> Result<FitResult> {
    check_lengths(xs, ys)?;
    if xs.len() < 6 {
        return Err(Error::DegenerateInput(
            "double-exponential fit needs at least 6 points".into(),
        ));
    }
    let s = rescale(xs, ys);
    let span = {
        let lo = s.xs.iter().cloned().fold(f64::INFINITY, f64::min);
        let hi = s.xs.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        hi - lo
    };
    if span <= 0.0 {
        return Err(Error::DegenerateInput("all x values are equal".into()));
    }

    let mut best: Option<LmOutcome> = None;
    for (i, &d1) in DOUBLE_EXP_SEEDS.iter().enumerate() {
        for &d2 in &DOUBLE_EXP_SEEDS[i + 1..] {
            let (d1, d2) = (d1 * span, d2 * span);
            let (b1, b2) = amplitudes_for(&s.xs, &s.ys, d1, d2);
            let start = [b1, d1, b2, d2];
            if !DoubleExp.admissible(&start) {
                continue;
            }
            let out = levenberg_marquardt(&DoubleExp, &s.xs, &s.ys, &start);
            if !out.cost.is_finite() {
                continue;
            }
            let better = match &best {
                None => true,
                Some(b) => out.cost < b.cost,
            };
            if better {
                best = Some(out);
            }
        }
    }
    let out = best.unwrap_or_else(|| LmOutcome {
        params: vec![0.0, span, 0.0, span],
        cost: cost_of(&DoubleExp, &s.xs, &s.ys, &[0.0, span, 0.0, span]),
        iterations: 0,
        converged: false,
    });

    let mut b1 = out.params[0] * s.y_scale;
    let mut d1 = out.params[1] * s.x_scale;
    let mut b2 = out.params[2] * s.y_scale;
    let mut d2 = out.params[3] * s.x_scale;
    if d1 > d2 {
        std::mem::swap(&mut b1, &mut b2);
        std::mem::swap(&mut d1, &mut d2);
    }
    let ss_res = out.cost * s.y_scale * s.y_scale;
    Ok(FitResult {
        params: vec![("B1", b1), ("D1", d1), ("B2", b2), ("D2", d2)],
        residual_norm: ss_res.sqrt(),
        r2: r_squared(ys, ss_res),
        converged: out.converged,
        iterations: out.iterations,
    })
}

// Linear least squares for the two amplitudes at fixed decay lengths.
fn amplitudes_for(xs: &[f64], ys: &[f64], d1: f64, d2: f64) -> (f64, f64) {
    let (mut s11, mut s12, mut s22, mut r1, mut r2) = (0.0, 0.0, 0.0, 0.0, 0.0);
    for (&x, &y) in xs.iter().zip(ys) {
        let e1 = (-x / d1).exp();
        let e2 = (-x / d2).exp();
        s11 += e1 * e1;
        s12 += e1 * e2;
        s22 += e2 * e2;
        r1 += e1 * y;
        r2 += e2 * y;
    }
    let det = s11 * s22 - s12 * s12;
    if det.abs() <= 1e-14 * s11 * s22 {
        let b = if s11 + s22 > 0.0 { (r1 + r2) / (s11 + s22 + 2.0 * s12) } else { 0.0 };
        return (b, b);
    }
    ((r1 * s22 - r2 * s12) / det, (s11 * r2 - s12 * r1) / det)
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Peak {
    pub x: f64,
    pub y: f64,
    pub is_interior: bool,
}

/// Maximum of the parabola through the discrete argmax and its two neighbours.
///
/// An argmax at either end is returned as is with `is_interior = false`.
pub fn find_interior_max(xs: &[f64], ys: &[f64]) -> Result<Peak> {
    check_lengths(xs, ys)?;
    if xs.len() < 5 {
        return Err(Error::DegenerateInput(
            "peak location needs at least 5 points".into(),
        ));
    }
    if xs.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::DegenerateInput("x values must be strictly increasing".into()));
    }
    let mut k = 0;
    for (i, &y) in ys.iter().enumerate() {
        if y > ys[k] {
            k = i;
        }
    }
    if k == 0 || k == xs.len() - 1 {
        return Ok(Peak {
            x: xs[k],
            y: ys[k],
            is_interior: false,
        });
    }
    let (x0, x1, x2) = (xs[k - 1], xs[k], xs[k + 1]);
    let (y0, y1, y2) = (ys[k - 1], ys[k], ys[k + 1]);
    let f01 = (y1 - y0) / (x1 - x0);
    let f12 = (y2 - y1) / (x2 - x1);
    let curvature = (f12 - f01) / (x2 - x0);
    if curvature >= 0.0 {
        return Ok(Peak {
            x: x1,
            y: y1,
            is_interior: true,
        });
    }
    // Newton form: p(x) = y0 + f01 (x - x0) + curvature (x - x0)(x - x1)
    let x_star = (0.5 * (x0 + x1) - f01 / (2.0 * curvature)).clamp(x0, x2);
    let y_star = y0 + f01 * (x_star - x0) + curvature * (x_star - x0) * (x_star - x1);
    Ok(Peak {
        x: x_star,
        y: y_star,
        is_interior: true,
    })
}
