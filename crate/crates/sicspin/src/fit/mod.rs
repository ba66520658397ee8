//! Weighted nonlinear least-squares engine (Levenberg–Marquardt).
//!
//! Damping schedule: lambda starts at 1e-3, multiplied by 10 on a rejected
//! step and divided by 10 on an accepted one. Convergence when the relative
//! cost change of an accepted step drops below 1e-10 or the step norm below
//! 1e-12, with a 200-iteration cap. Parameter bounds are enforced by clamping
//! trial steps, which is predictable but makes covariance-based uncertainties
//! unreliable near an active bound. Uncertainties come from the inverse
//! Gauss–Newton normal matrix scaled by the reduced chi-square.

pub mod model;
pub mod synth;

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;
use thiserror::Error;

pub use model::{model_by_key, registry, FnModel, Model, MODEL_KEYS};
pub use synth::{synthesize, Noise};

use crate::par;
use crate::trace::Trace;

#[derive(Debug, Error)]
pub enum FitError {
    #[error("trace has {have} points but the model needs at least {need} (free parameters + 1)")]
    TooFewPoints { have: usize, need: usize },
    #[error("expected {expected} parameters for model `{model}`, got {got}")]
    WrongParamCount {
        model: String,
        expected: usize,
        got: usize,
    },
    #[error("initial value {value} of `{param}` lies outside its bounds [{lo}, {hi}]")]
    InitOutOfBounds {
        param: String,
        value: f64,
        lo: f64,
        hi: f64,
    },
    #[error("bounds for `{param}` are invalid (need lo <= hi, not NaN)")]
    BadBounds { param: String },
    #[error("model is not finite at the initial parameters")]
    NonFiniteAtInit,
    #[error("non-finite model value while probing parameter `{param}`")]
    NonFiniteModel { param: String },
    #[error("multi-start requires at least one start")]
    NoStarts,
}

/// Levenberg–Marquardt settings.
#[derive(Debug, Clone, Copy)]
pub struct FitOptions {
    pub max_iterations: usize,
    pub lambda_init: f64,
    /// Relative cost-change threshold on accepted steps.
    pub cost_tol: f64,
    /// Step-norm threshold.
    pub step_tol: f64,
}

impl Default for FitOptions {
    fn default() -> Self {
        Self {
            max_iterations: 200,
            lambda_init: 1e-3,
            cost_tol: 1e-10,
            step_tol: 1e-12,
        }
    }
}

/// Outcome of a least-squares fit.
#[derive(Debug, Clone, Serialize)]
pub struct FitResult {
    pub model: String,
    pub param_names: Vec<String>,
    pub params: Vec<f64>,
    /// 1-sigma per parameter; None when the normal matrix is singular at the
    /// solution.
    pub uncertainties: Option<Vec<f64>>,
    pub chi2_reduced: f64,
    pub n_iterations: usize,
    pub converged: bool,
    /// Weighted cost after each accepted step, starting from the initial cost.
    pub cost_trace: Vec<f64>,
    pub warnings: Vec<String>,
}

impl FitResult {
    pub fn final_cost(&self) -> f64 {
        *self.cost_trace.last().expect("cost trace is never empty")
    }

    /// Parameter value by name.
    pub fn param(&self, name: &str) -> Option<f64> {
        self.param_names
            .iter()
            .position(|n| n == name)
            .map(|i| self.params[i])
    }
}

/// Forward finite-difference Jacobian of the model over a grid, with step
/// `h_i = sqrt(machine epsilon) * max(1, |p_i|)`. Rows index grid points,
/// columns parameters.
pub fn jacobian(
    model: &dyn Model,
    params: &[f64],
    x: &[f64],
) -> Result<DMatrix<f64>, FitError> {
    let names = model.param_names();
    if names.len() != params.len() {
        return Err(FitError::WrongParamCount {
            model: model.name().to_owned(),
            expected: names.len(),
            got: params.len(),
        });
    }
    let base: Vec<f64> = x.iter().map(|&xi| model.eval(xi, params)).collect();
    if base.iter().any(|v| !v.is_finite()) {
        return Err(FitError::NonFiniteAtInit);
    }
    let mut jac = DMatrix::zeros(x.len(), params.len());
    let mut probe = params.to_vec();
    for j in 0..params.len() {
        let h = f64::EPSILON.sqrt() * params[j].abs().max(1.0);
        probe[j] = params[j] + h;
        for (i, &xi) in x.iter().enumerate() {
            let value = model.eval(xi, &probe);
            if !value.is_finite() {
                return Err(FitError::NonFiniteModel {
                    param: names[j].clone(),
                });
            }
            jac[(i, j)] = (value - base[i]) / h;
        }
        probe[j] = params[j];
    }
    Ok(jac)
}

struct Problem<'a> {
    model: &'a dyn Model,
    x: &'a [f64],
    y: &'a [f64],
    inv_sigma: Vec<f64>,
}

impl<'a> Problem<'a> {
    /// Weighted residuals and cost; None when the model went non-finite.
    fn residuals(&self, params: &[f64]) -> Option<(DVector<f64>, f64)> {
        let mut r = DVector::zeros(self.x.len());
        for i in 0..self.x.len() {
            let f = self.model.eval(self.x[i], params);
            if !f.is_finite() {
                return None;
            }
            r[i] = (self.y[i] - f) * self.inv_sigma[i];
        }
        let cost = r.iter().map(|v| v * v).sum();
        Some((r, cost))
    }

    fn weighted_jacobian(&self, params: &[f64]) -> Result<DMatrix<f64>, FitError> {
        let mut jac = jacobian(self.model, params, self.x)?;
        for i in 0..self.x.len() {
            for j in 0..params.len() {
                jac[(i, j)] *= self.inv_sigma[i];
            }
        }
        Ok(jac)
    }
}

fn clamp_to_bounds(params: &mut [f64], bounds: &[(f64, f64)]) {
    for (p, &(lo, hi)) in params.iter_mut().zip(bounds) {
        *p = p.clamp(lo, hi);
    }
}

fn validate_inputs(
    trace: &Trace,
    model: &dyn Model,
    init: &[f64],
    bounds: Option<&[(f64, f64)]>,
) -> Result<Vec<(f64, f64)>, FitError> {
    let names = model.param_names();
    let k = names.len();
    if init.len() != k {
        return Err(FitError::WrongParamCount {
            model: model.name().to_owned(),
            expected: k,
            got: init.len(),
        });
    }
    if trace.len() < k + 1 {
        return Err(FitError::TooFewPoints {
            have: trace.len(),
            need: k + 1,
        });
    }
    let bounds: Vec<(f64, f64)> = match bounds {
        Some(b) => {
            if b.len() != k {
                return Err(FitError::WrongParamCount {
                    model: model.name().to_owned(),
                    expected: k,
                    got: b.len(),
                });
            }
            b.to_vec()
        }
        None => vec![(f64::NEG_INFINITY, f64::INFINITY); k],
    };
    for (j, &(lo, hi)) in bounds.iter().enumerate() {
        if lo.is_nan() || hi.is_nan() || lo > hi {
            return Err(FitError::BadBounds {
                param: names[j].clone(),
            });
        }
        if init[j] < lo || init[j] > hi {
            return Err(FitError::InitOutOfBounds {
                param: names[j].clone(),
                value: init[j],
                lo,
                hi,
            });
        }
    }
    Ok(bounds)
}

/// Weighted Levenberg–Marquardt fit of `model` to `trace`.
///
/// `init` is ordered per `model.param_names()`. Missing `y_err` means unit
/// weights. Non-convergence within the iteration cap is not an error: the
/// result carries `converged = false` with the best parameters seen.
pub fn fit(
    trace: &Trace,
    model: &dyn Model,
    init: &[f64],
    bounds: Option<&[(f64, f64)]>,
    options: &FitOptions,
) -> Result<FitResult, FitError> {
    let bounds = validate_inputs(trace, model, init, bounds)?;
    let names = model.param_names();
    let n = trace.len();
    let k = names.len();

    let inv_sigma: Vec<f64> = match &trace.y_err {
        Some(errs) => errs.iter().map(|&e| 1.0 / e).collect(),
        None => vec![1.0; n],
    };
    let problem = Problem {
        model,
        x: &trace.x,
        y: &trace.y,
        inv_sigma,
    };

    let mut params = init.to_vec();
    let (_, mut cost) = problem.residuals(&params).ok_or(FitError::NonFiniteAtInit)?;
    let mut lambda = options.lambda_init;
    let mut cost_trace = vec![cost];
    let mut converged = false;
    let mut n_iterations = 0;

    for _ in 0..options.max_iterations {
        n_iterations += 1;

        let jac = problem.weighted_jacobian(&params)?;
        let (r, _) = problem
            .residuals(&params)
            .expect("current parameters were already evaluated");
        let normal = jac.transpose() * &jac;
        let gradient = jac.transpose() * r;

        // Marquardt scaling: damp along the normal-matrix diagonal.
        let mut damped = normal.clone();
        for j in 0..k {
            damped[(j, j)] += lambda * normal[(j, j)].max(1e-12);
        }
        let step = match damped.lu().solve(&gradient) {
            Some(s) => s,
            None => {
                lambda *= 10.0;
                if lambda > 1e14 {
                    break;
                }
                continue;
            }
        };

        if step.norm() < options.step_tol {
            converged = true;
            break;
        }

        let mut trial: Vec<f64> = params
            .iter()
            .zip(step.iter())
            .map(|(p, s)| p + s)
            .collect();
        clamp_to_bounds(&mut trial, &bounds);

        match problem.residuals(&trial) {
            Some((_, trial_cost)) if trial_cost <= cost => {
                let improvement = cost - trial_cost;
                params = trial;
                cost = trial_cost;
                lambda = (lambda / 10.0).max(1e-14);
                cost_trace.push(cost);
                if improvement <= options.cost_tol * cost_trace[cost_trace.len() - 2].max(1e-300)
                    || cost <= 1e-18 * n as f64
                {
                    converged = true;
                    break;
                }
            }
            _ => {
                lambda *= 10.0;
                if lambda > 1e14 {
                    break;
                }
            }
        }
    }

    let dof = (n - k).max(1);
    let chi2_reduced = cost / dof as f64;

    let mut warnings = Vec::new();
    let uncertainties = match problem.weighted_jacobian(&params) {
        Ok(jac) => {
            let normal = jac.transpose() * &jac;
            match normal.try_inverse() {
                Some(cov) => Some(
                    (0..k)
                        .map(|j| (cov[(j, j)].max(0.0) * chi2_reduced).sqrt())
                        .collect(),
                ),
                None => {
                    warnings
                        .push("uncertainties unavailable: normal matrix is singular".to_owned());
                    None
                }
            }
        }
        Err(_) => {
            warnings.push(
                "uncertainties unavailable: model not finite near the solution".to_owned(),
            );
            None
        }
    };

    for (j, name) in names.iter().enumerate() {
        let (lo, hi) = bounds[j];
        let at_bound = params[j] == lo || params[j] == hi;
        if at_bound && (lo.is_finite() || hi.is_finite()) {
            warnings.push(format!(
                "parameter `{name}` sits on a bound; its uncertainty estimate is unreliable"
            ));
        }
    }
    warnings.extend(model.diagnostics(&params));

    Ok(FitResult {
        model: model.name().to_owned(),
        param_names: names,
        params,
        uncertainties,
        chi2_reduced,
        n_iterations,
        converged,
        cost_trace,
        warnings,
    })
}

/// Multi-start fit for multi-modal models (the Rabi beating model in
/// particular): `n_starts` inits, the given one plus deterministic +-20%
/// perturbations, fitted independently (in parallel with the `parallel`
/// feature). Lowest final cost wins; ties break toward the smaller parameter
/// norm, then the earlier start.
pub fn fit_multi_start(
    trace: &Trace,
    model: &dyn Model,
    init: &[f64],
    bounds: Option<&[(f64, f64)]>,
    options: &FitOptions,
    n_starts: usize,
    seed: u64,
) -> Result<FitResult, FitError> {
    if n_starts == 0 {
        return Err(FitError::NoStarts);
    }
    let checked_bounds = validate_inputs(trace, model, init, bounds)?;

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut starts = vec![init.to_vec()];
    for _ in 1..n_starts {
        let mut perturbed: Vec<f64> = init
            .iter()
            .map(|&p| {
                let u: f64 = rng.gen_range(-1.0..1.0);
                if p == 0.0 {
                    0.2 * u
                } else {
                    p * (1.0 + 0.2 * u)
                }
            })
            .collect();
        clamp_to_bounds(&mut perturbed, &checked_bounds);
        starts.push(perturbed);
    }

    let results = par::map_collect(&starts, |start| {
        fit(trace, model, start, Some(&checked_bounds), options)
    });

    let mut best: Option<FitResult> = None;
    let mut first_err: Option<FitError> = None;
    for outcome in results {
        match outcome {
            Ok(candidate) => {
                let replace = match &best {
                    None => true,
                    Some(current) => {
                        let (c_new, c_old) = (candidate.final_cost(), current.final_cost());
                        let tie = (c_new - c_old).abs() <= 1e-12 * c_old.max(1.0);
                        if tie {
                            norm2(&candidate.params) < norm2(&current.params)
                        } else {
                            c_new < c_old
                        }
                    }
                };
                if replace {
                    best = Some(candidate);
                }
            }
            Err(e) => {
                if first_err.is_none() {
                    first_err = Some(e);
                }
            }
        }
    }
    best.ok_or_else(|| first_err.expect("no results without an error"))
}

fn norm2(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}
