//! Fit-model definitions and the model registry.
//!
//! Registry keys: `g2`, `saturation`, `ramsey`, `echo`, `t1`, `rabi-beating`.
//! Each model exposes named parameters, heuristic starting values derived
//! from the trace, and default bounds that keep timescales and exponents in
//! their valid domain during fitting.

use crate::dynamics::{
    hahn_echo_model, rabi_beating_model, ramsey_model, t1_model, DecayEnvelope, RabiBeatParams,
};
use crate::photon::{g2_model, saturation_model, G2Params, SaturationParams};
use crate::trace::Trace;

/// A parametric curve `y = f(x; params)` with named parameters. Models must
/// be pure: identical inputs give identical outputs.
pub trait Model: Sync {
    fn name(&self) -> &str;
    fn param_names(&self) -> Vec<String>;
    fn eval(&self, x: f64, params: &[f64]) -> f64;

    /// Heuristic starting values derived from the data.
    fn default_init(&self, trace: &Trace) -> Vec<f64>;

    /// Default box constraints per parameter.
    fn default_bounds(&self) -> Vec<(f64, f64)> {
        vec![(f64::NEG_INFINITY, f64::INFINITY); self.param_names().len()]
    }

    /// Physicality checks on fitted parameters; returned strings become
    /// fit warnings.
    fn diagnostics(&self, _params: &[f64]) -> Vec<String> {
        Vec::new()
    }
}

/// Registry keys of the bundled models.
pub const MODEL_KEYS: [&str; 6] = ["g2", "saturation", "ramsey", "echo", "t1", "rabi-beating"];

/// Look up a bundled model by registry key.
pub fn model_by_key(key: &str) -> Option<Box<dyn Model + Send>> {
    match key {
        "g2" => Some(Box::new(G2Model)),
        "saturation" => Some(Box::new(SaturationModel)),
        "ramsey" => Some(Box::new(RamseyModel)),
        "echo" => Some(Box::new(EchoModel)),
        "t1" => Some(Box::new(T1Model)),
        "rabi-beating" => Some(Box::new(RabiBeatingModel)),
        _ => None,
    }
}

/// All bundled models in registry order.
pub fn registry() -> Vec<Box<dyn Model + Send>> {
    MODEL_KEYS
        .iter()
        .map(|k| model_by_key(k).expect("bundled key"))
        .collect()
}

fn stats(trace: &Trace) -> (f64, f64, f64, f64, f64) {
    let y_min = trace.y.iter().cloned().fold(f64::INFINITY, f64::min);
    let y_max = trace.y.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let y_mean = trace.y.iter().sum::<f64>() / trace.len() as f64;
    let x_min = trace.x[0];
    let x_max = trace.x[trace.len() - 1];
    (y_min, y_max, y_mean, x_min, x_max)
}

const POSITIVE: (f64, f64) = (1e-9, f64::INFINITY);

/// Antibunching model over delay in ns; params `tau0, a, b, t1, t2`.
pub struct G2Model;

impl Model for G2Model {
    fn name(&self) -> &str {
        "g2"
    }

    fn param_names(&self) -> Vec<String> {
        ["tau0", "a", "b", "t1", "t2"].map(String::from).to_vec()
    }

    fn eval(&self, x: f64, p: &[f64]) -> f64 {
        g2_model(
            x,
            &G2Params {
                tau0_ns: p[0],
                a: p[1],
                b: p[2],
                t1_ns: p[3],
                t2_ns: p[4],
            },
        )
    }

    fn default_init(&self, trace: &Trace) -> Vec<f64> {
        let (y_min, y_max, _, x_min, x_max) = stats(trace);
        let span = (x_max - x_min).max(1.0);
        let dip_idx = trace
            .y
            .iter()
            .enumerate()
            .min_by(|a, b| a.1.total_cmp(b.1))
            .map(|(i, _)| i)
            .unwrap_or(0);
        let dip_x = trace.x[dip_idx];
        // Far baseline is 1; the bunching hump sets b and the dip floor
        // y_min = b - a sets a.
        let b = (y_max - 1.0).max(0.02);
        let a = (b - y_min).max(0.02);
        // Antibunching time from the half-recovery point of the dip.
        let half = 0.5 * (y_min + 1.0);
        let mut t1 = span / 20.0;
        for i in dip_idx..trace.len() {
            if trace.y[i] >= half {
                t1 = ((trace.x[i] - dip_x) / std::f64::consts::LN_2).max(span / 200.0);
                break;
            }
        }
        vec![dip_x, a, b, t1, span / 4.0]
    }

    fn default_bounds(&self) -> Vec<(f64, f64)> {
        vec![
            (f64::NEG_INFINITY, f64::INFINITY),
            (f64::NEG_INFINITY, f64::INFINITY),
            (f64::NEG_INFINITY, f64::INFINITY),
            POSITIVE,
            POSITIVE,
        ]
    }

    fn diagnostics(&self, p: &[f64]) -> Vec<String> {
        let g2_zero = p[2] - p[1];
        if g2_zero < 0.0 {
            vec![format!(
                "unphysical-fit: g2(tau0) = {g2_zero:.4} is negative"
            )]
        } else {
            Vec::new()
        }
    }
}

/// Fluorescence saturation over power in mW; params `i_sat, p_sat`.
pub struct SaturationModel;

impl Model for SaturationModel {
    fn name(&self) -> &str {
        "saturation"
    }

    fn param_names(&self) -> Vec<String> {
        ["i_sat", "p_sat"].map(String::from).to_vec()
    }

    fn eval(&self, x: f64, p: &[f64]) -> f64 {
        saturation_model(
            x,
            &SaturationParams {
                i_sat_kcps: p[0],
                p_sat_mw: p[1],
            },
        )
    }

    fn default_init(&self, trace: &Trace) -> Vec<f64> {
        let (_, y_max, _, _, x_max) = stats(trace);
        vec![1.2 * y_max.max(1e-6), (x_max / 3.0).max(1e-3)]
    }

    fn default_bounds(&self) -> Vec<(f64, f64)> {
        vec![POSITIVE, POSITIVE]
    }
}

/// Ramsey decay over time in us; params `baseline, amplitude, t2_star, n`.
/// Nuclear-spin modulation terms are available through
/// [`crate::dynamics::ramsey_model`] but are not free parameters here.
pub struct RamseyModel;

impl Model for RamseyModel {
    fn name(&self) -> &str {
        "ramsey"
    }

    fn param_names(&self) -> Vec<String> {
        ["baseline", "amplitude", "t2_star", "n"]
            .map(String::from)
            .to_vec()
    }

    fn eval(&self, x: f64, p: &[f64]) -> f64 {
        ramsey_model(
            x,
            p[0],
            p[1],
            &DecayEnvelope {
                timescale_us: p[2],
                stretch_n: p[3],
            },
            &[],
        )
    }

    fn default_init(&self, trace: &Trace) -> Vec<f64> {
        decay_init(trace)
    }

    fn default_bounds(&self) -> Vec<(f64, f64)> {
        decay_bounds()
    }
}

/// Hahn-echo decay over time in us; params `baseline, amplitude, t2, n`.
pub struct EchoModel;

impl Model for EchoModel {
    fn name(&self) -> &str {
        "echo"
    }

    fn param_names(&self) -> Vec<String> {
        ["baseline", "amplitude", "t2", "n"]
            .map(String::from)
            .to_vec()
    }

    fn eval(&self, x: f64, p: &[f64]) -> f64 {
        hahn_echo_model(
            x,
            p[0],
            p[1],
            &DecayEnvelope {
                timescale_us: p[2],
                stretch_n: p[3],
            },
        )
    }

    fn default_init(&self, trace: &Trace) -> Vec<f64> {
        decay_init(trace)
    }

    fn default_bounds(&self) -> Vec<(f64, f64)> {
        decay_bounds()
    }
}

/// Spin-lattice relaxation over time in us; params `baseline, amplitude, t1`.
pub struct T1Model;

impl Model for T1Model {
    fn name(&self) -> &str {
        "t1"
    }

    fn param_names(&self) -> Vec<String> {
        ["baseline", "amplitude", "t1"].map(String::from).to_vec()
    }

    fn eval(&self, x: f64, p: &[f64]) -> f64 {
        t1_model(x, p[0], p[1], p[2])
    }

    fn default_init(&self, trace: &Trace) -> Vec<f64> {
        let mut init = decay_init(trace);
        init.pop();
        init
    }

    fn default_bounds(&self) -> Vec<(f64, f64)> {
        let mut bounds = decay_bounds();
        bounds.pop();
        bounds
    }
}

fn decay_init(trace: &Trace) -> Vec<f64> {
    let (_, _, y_mean, x_min, x_max) = stats(trace);
    let baseline = *trace.y.last().expect("non-empty trace");
    let amplitude = trace.y[0] - baseline;
    let amplitude = if amplitude.abs() < 1e-12 {
        y_mean.abs().max(0.1)
    } else {
        amplitude
    };
    vec![baseline, amplitude, ((x_max - x_min) / 3.0).max(1e-6), 1.0]
}

fn decay_bounds() -> Vec<(f64, f64)> {
    vec![
        (f64::NEG_INFINITY, f64::INFINITY),
        (f64::NEG_INFINITY, f64::INFINITY),
        POSITIVE,
        (0.05, 20.0),
    ]
}

/// Triple-cosine decaying Rabi beating over time in us; params
/// `a, b, tau, n, omega1, omega2, omega3, phi1, phi2, phi3`.
pub struct RabiBeatingModel;

impl Model for RabiBeatingModel {
    fn name(&self) -> &str {
        "rabi-beating"
    }

    fn param_names(&self) -> Vec<String> {
        [
            "a", "b", "tau", "n", "omega1", "omega2", "omega3", "phi1", "phi2", "phi3",
        ]
        .map(String::from)
        .to_vec()
    }

    fn eval(&self, x: f64, p: &[f64]) -> f64 {
        rabi_beating_model(
            x,
            &RabiBeatParams {
                baseline: p[0],
                amplitude: p[1],
                envelope: Some(DecayEnvelope {
                    timescale_us: p[2],
                    stretch_n: p[3],
                }),
                omegas_mhz: [p[4], p[5], p[6]],
                phases_rad: [p[7], p[8], p[9]],
            },
        )
    }

    fn default_init(&self, trace: &Trace) -> Vec<f64> {
        let (y_min, y_max, y_mean, x_min, x_max) = stats(trace);
        let span = (x_max - x_min).max(1e-6);
        // Aim for a handful of oscillation periods across the window.
        let base = 5.0 / span;
        vec![
            y_mean,
            ((y_max - y_min) / 2.0).max(1e-3),
            span / 2.0,
            1.0,
            0.8 * base,
            base,
            1.25 * base,
            0.0,
            0.0,
            0.0,
        ]
    }

    fn default_bounds(&self) -> Vec<(f64, f64)> {
        let pi = std::f64::consts::PI;
        vec![
            (f64::NEG_INFINITY, f64::INFINITY),
            (f64::NEG_INFINITY, f64::INFINITY),
            POSITIVE,
            (0.05, 20.0),
            POSITIVE,
            POSITIVE,
            POSITIVE,
            (-2.0 * pi, 2.0 * pi),
            (-2.0 * pi, 2.0 * pi),
            (-2.0 * pi, 2.0 * pi),
        ]
    }
}

/// Adapter turning a closure into a [`Model`], mainly for tests and ad-hoc
/// fits.
pub struct FnModel<F> {
    name: String,
    params: Vec<String>,
    f: F,
}

impl<F: Fn(f64, &[f64]) -> f64 + Sync> FnModel<F> {
    pub fn new(name: &str, params: &[&str], f: F) -> Self {
        Self {
            name: name.to_owned(),
            params: params.iter().map(|s| (*s).to_owned()).collect(),
            f,
        }
    }
}

impl<F: Fn(f64, &[f64]) -> f64 + Sync> Model for FnModel<F> {
    fn name(&self) -> &str {
        &self.name
    }

    fn param_names(&self) -> Vec<String> {
        self.params.clone()
    }

    fn eval(&self, x: f64, params: &[f64]) -> f64 {
        (self.f)(x, params)
    }

    fn default_init(&self, _trace: &Trace) -> Vec<f64> {
        vec![1.0; self.params.len()]
    }
}
