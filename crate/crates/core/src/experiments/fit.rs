//! Damped Gauss–Newton (Levenberg–Marquardt) fits of decay models.
//!
//! Each model is seeded by a coarse grid over physically bounded ranges
//! (T2 and τ log-spaced in [1 µs, 1 s], κ in [0, 10⁴ s⁻¹], 50 points per
//! axis) before refinement. Time constants are refined in log space so they
//! stay positive.

use std::fmt;
use std::str::FromStr;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use super::{decayed_signal, residual_model, SweepRow};
use crate::{Error, Result};

const GRID: usize = 50;
const TAU_RANGE: (f64, f64) = (1e-6, 1.0);
const KAPPA_MAX: f64 = 1e4;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DecayModel {
    /// s_T2(θ, t); parameter T2.
    Eq6,
    /// (1 − κt)·s_T2(θ, t); parameters T2, κ.
    #[serde(rename = "s_r")]
    Sr,
    /// c + a·e^{−t/τ}.
    Exp,
    /// c + a·e^{−(t/τ)²}.
    Gaussian,
    /// c + b·t.
    Linear,
}

impl DecayModel {
    pub const ALL: [DecayModel; 5] =
        [DecayModel::Eq6, DecayModel::Sr, DecayModel::Exp, DecayModel::Gaussian, DecayModel::Linear];

    pub fn name(self) -> &'static str {
        match self {
            DecayModel::Eq6 => "eq6",
            DecayModel::Sr => "s_r",
            DecayModel::Exp => "exp",
            DecayModel::Gaussian => "gaussian",
            DecayModel::Linear => "linear",
        }
    }

    pub fn parameter_names(self) -> &'static [&'static str] {
        match self {
            DecayModel::Eq6 => &["t2"],
            DecayModel::Sr => &["t2", "kappa"],
            DecayModel::Exp | DecayModel::Gaussian => &["amplitude", "tau", "offset"],
            DecayModel::Linear => &["intercept", "slope"],
        }
    }

    /// Model value at (θ, t) for physical parameters `p`.
    pub fn eval(self, p: &[f64], theta: f64, t: f64) -> f64 {
        match self {
            DecayModel::Eq6 => decayed_signal(theta, t, p[0]),
            DecayModel::Sr => residual_model(theta, t, p[0], p[1]),
            DecayModel::Exp => p[2] + p[0] * (-t / p[1]).exp(),
            DecayModel::Gaussian => p[2] + p[0] * (-(t / p[1]).powi(2)).exp(),
            DecayModel::Linear => p[0] + p[1] * t,
        }
    }

    fn log_scaled(self) -> &'static [bool] {
        match self {
            DecayModel::Eq6 => &[true],
            DecayModel::Sr => &[true, false],
            DecayModel::Exp | DecayModel::Gaussian => &[false, true, false],
            DecayModel::Linear => &[false, false],
        }
    }

    fn to_internal(self, p: &[f64]) -> Vec<f64> {
        p.iter().zip(self.log_scaled()).map(|(&v, &log)| if log { v.ln() } else { v }).collect()
    }

    fn to_physical(self, x: &[f64]) -> Vec<f64> {
        let mut p: Vec<f64> = x.iter().zip(self.log_scaled()).map(|(&v, &log)| if log { v.exp() } else { v }).collect();
        if self == DecayModel::Sr {
            p[1] = p[1].max(0.0);
        }
        p
    }
}

impl fmt::Display for DecayModel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for DecayModel {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "eq6" => Ok(DecayModel::Eq6),
            "s_r" | "sr" => Ok(DecayModel::Sr),
            "exp" => Ok(DecayModel::Exp),
            "gaussian" => Ok(DecayModel::Gaussian),
            "linear" => Ok(DecayModel::Linear),
            other => Err(Error::InvalidParameter(format!("unknown fit model '{other}'"))),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct FitOptions {
    /// Physical starting point; skips the grid search.
    pub initial: Option<Vec<f64>>,
    pub max_iter: usize,
    /// Relative cost change at which the iteration stops.
    pub tol: f64,
}

impl Default for FitOptions {
    fn default() -> Self {
        Self { initial: None, max_iter: 200, tol: 1e-14 }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FitParameter {
    pub name: String,
    pub value: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FitResult {
    pub model: DecayModel,
    pub parameters: Vec<FitParameter>,
    /// Euclidean norm of the residual vector.
    pub residual_norm: f64,
    pub converged: bool,
    pub iterations: usize,
}

impl FitResult {
    pub fn get(&self, name: &str) -> Option<f64> {
        self.parameters.iter().find(|p| p.name == name).map(|p| p.value)
    }

    pub fn values(&self) -> Vec<f64> {
        self.parameters.iter().map(|p| p.value).collect()
    }
}

struct Problem<'a> {
    model: DecayModel,
    rows: &'a [SweepRow],
}

impl Problem<'_> {
    fn residuals(&self, x: &[f64]) -> DVector<f64> {
        let p = self.model.to_physical(x);
        DVector::from_iterator(self.rows.len(), self.rows.iter().map(|r| self.model.eval(&p, r.theta, r.time) - r.signal))
    }

    fn cost(&self, x: &[f64]) -> f64 {
        let c = self.residuals(x).norm_squared();
        if c.is_finite() {
            c
        } else {
            f64::INFINITY
        }
    }

    fn jacobian(&self, x: &[f64]) -> DMatrix<f64> {
        let mut j = DMatrix::zeros(self.rows.len(), x.len());
        for k in 0..x.len() {
            let h = 1e-6 * x[k].abs().max(1e-3);
            let mut hi = x.to_vec();
            let mut lo = x.to_vec();
            hi[k] += h;
            lo[k] -= h;
            let d = (self.residuals(&hi) - self.residuals(&lo)) / (2.0 * h);
            j.set_column(k, &d);
        }
        j
    }
}

/// Closed-form c + a·g(t) for fixed g.
fn linear_amplitudes(rows: &[SweepRow], g: impl Fn(f64) -> f64) -> Option<(f64, f64)> {
    let n = rows.len() as f64;
    let (mut sg, mut sgg, mut sy, mut sgy) = (0.0, 0.0, 0.0, 0.0);
    for r in rows {
        let v = g(r.time);
        sg += v;
        sgg += v * v;
        sy += r.signal;
        sgy += v * r.signal;
    }
    let det = n * sgg - sg * sg;
    if det.abs() < 1e-300 {
        return None;
    }
    let a = (n * sgy - sg * sy) / det;
    Some((a, (sy - a * sg) / n))
}

fn log_grid() -> impl Iterator<Item = f64> {
    let (lo, hi) = (TAU_RANGE.0.ln(), TAU_RANGE.1.ln());
    (0..GRID).map(move |k| (lo + (hi - lo) * k as f64 / (GRID - 1) as f64).exp())
}

fn grid_seed(problem: &Problem) -> Vec<f64> {
    let model = problem.model;
    let rows = problem.rows;
    let candidates: Vec<Vec<f64>> = match model {
        DecayModel::Eq6 => log_grid().map(|t2| vec![t2]).collect(),
        DecayModel::Sr => log_grid()
            .flat_map(|t2| (0..GRID).map(move |k| vec![t2, KAPPA_MAX * k as f64 / (GRID - 1) as f64]))
            .collect(),
        DecayModel::Exp | DecayModel::Gaussian => log_grid()
            .filter_map(|tau| {
                let g = move |t: f64| if model == DecayModel::Exp { (-t / tau).exp() } else { (-(t / tau).powi(2)).exp() };
                linear_amplitudes(rows, g).map(|(a, c)| vec![a, tau, c])
            })
            .collect(),
        DecayModel::Linear => {
            let (b, c) = linear_amplitudes(rows, |t| t).unwrap_or((0.0, 0.0));
            vec![vec![c, b]]
        }
    };
    candidates
        .into_iter()
        .map(|p| model.to_internal(&p))
        .min_by(|a, b| problem.cost(a).total_cmp(&problem.cost(b)))
        .unwrap_or_else(|| vec![0.0; model.parameter_names().len()])
}

/// Least-squares fit of `model` to (θ, t, signal) rows.
///
/// Returns the best point found; `converged` is false when the iteration
/// limit was reached first.
pub fn fit_decay(rows: &[SweepRow], model: DecayModel, options: &FitOptions) -> Result<FitResult> {
    let n_params = model.parameter_names().len();
    if rows.len() < 2 * n_params {
        return Err(Error::InvalidParameter(format!(
            "{} needs at least {} data points, got {}",
            model,
            2 * n_params,
            rows.len()
        )));
    }
    if rows.iter().any(|r| !(r.theta.is_finite() && r.time.is_finite() && r.signal.is_finite())) {
        return Err(Error::InvalidParameter("fit data must be finite".into()));
    }
    let problem = Problem { model, rows };
    let mut x = match &options.initial {
        Some(p) if p.len() == n_params => model.to_internal(p),
        Some(p) => {
            return Err(Error::InvalidParameter(format!("{model} takes {n_params} parameters, {} given", p.len())))
        }
        None => grid_seed(&problem),
    };
    let mut cost = problem.cost(&x);
    let mut lambda = 1e-3;
    let mut converged = false;
    let mut iterations = 0;
    while iterations < options.max_iter {
        iterations += 1;
        let j = problem.jacobian(&x);
        let r = problem.residuals(&x);
        let jtj = j.transpose() * &j;
        let g = j.transpose() * r;
        if g.amax() <= 1e-300 || cost <= 1e-300 {
            converged = true;
            break;
        }
        let mut improved = false;
        while lambda < 1e16 {
            let mut a = jtj.clone();
            for k in 0..n_params {
                a[(k, k)] += lambda * jtj[(k, k)].max(1e-12);
            }
            let Some(step) = a.cholesky().map(|ch| ch.solve(&(-&g))) else {
                lambda *= 4.0;
                continue;
            };
            let trial: Vec<f64> = x.iter().zip(step.iter()).map(|(a, b)| a + b).collect();
            let trial = model.to_internal(&model.to_physical(&trial));
            let trial_cost = problem.cost(&trial);
            if trial_cost < cost {
                let change = (cost - trial_cost) / cost.max(1e-300);
                let small_step = step.iter().zip(&x).all(|(s, v)| s.abs() <= 1e-12 * (v.abs() + 1e-12));
                x = trial;
                cost = trial_cost;
                lambda = (lambda / 3.0).max(1e-12);
                improved = true;
                if change < options.tol || small_step {
                    converged = true;
                }
                break;
            }
            lambda *= 4.0;
        }
        if !improved {
            // no descent direction left: a stationary point
            converged = true;
        }
        if converged {
            break;
        }
    }
    let values = model.to_physical(&x);
    Ok(FitResult {
        model,
        parameters: model
            .parameter_names()
            .iter()
            .zip(values)
            .map(|(n, value)| FitParameter { name: n.to_string(), value })
            .collect(),
        residual_norm: cost.sqrt(),
        converged,
        iterations,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rows(model: DecayModel, p: &[f64], times: &[f64], theta: impl Fn(usize) -> f64) -> Vec<SweepRow> {
        times
            .iter()
            .enumerate()
            .map(|(k, &t)| SweepRow { theta: theta(k), time: t, signal: model.eval(p, theta(k), t), stderr: None })
            .collect()
    }

    #[test]
    fn linear_is_exact() {
        let times: Vec<f64> = (0..20).map(|k| k as f64 * 1e-5).collect();
        let data = rows(DecayModel::Linear, &[0.9, -250.0], &times, |_| 0.0);
        let fit = fit_decay(&data, DecayModel::Linear, &FitOptions::default()).unwrap();
        assert!((fit.values()[0] - 0.9).abs() < 1e-9 && (fit.values()[1] + 250.0).abs() < 1e-9);
        assert!(fit.converged);
    }

    #[test]
    fn too_few_points() {
        let data = rows(DecayModel::Exp, &[0.5, 1e-4, 0.5], &[0.0, 1e-5, 2e-5, 3e-5, 4e-5], |_| 0.0);
        assert!(fit_decay(&data, DecayModel::Exp, &FitOptions::default()).is_err());
    }

    #[test]
    fn model_names_round_trip() {
        for m in DecayModel::ALL {
            assert_eq!(m.name().parse::<DecayModel>().unwrap(), m);
            let json = serde_json::to_string(&m).unwrap();
            assert_eq!(json, format!("\"{}\"", m.name()));
        }
    }
}
