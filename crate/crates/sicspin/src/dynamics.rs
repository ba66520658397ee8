//! Time-domain pulse-sequence models: Rabi beating, Ramsey, Hahn echo and
//! T1 relaxation, as forward simulators and fit-model definitions.
//!
//! Times are in microseconds and frequencies in MHz throughout. All models
//! are deterministic pure functions: identical inputs give bitwise-identical
//! outputs.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::odmr::{DefectPopulation, OdmrError};
use crate::spin::{build_hamiltonian, eigensolve, transition_set, DefectField};
use crate::trace::Trace;

#[derive(Debug, Error)]
pub enum DynamicsError {
    #[error("decay timescale must be positive, got {0}")]
    BadTimescale(f64),
    #[error("stretch exponent must be positive, got {0}")]
    BadStretch(f64),
    #[error("beating frequencies must be positive, got {0}")]
    BadOmega(f64),
    #[error("time grid must be non-empty, finite, non-negative and strictly increasing")]
    BadTimeGrid,
    #[error("drive amplitude must be finite and non-negative, got {0}")]
    BadDrive(f64),
    #[error(transparent)]
    Odmr(#[from] OdmrError),
}

/// Stretched-exponential decay envelope `exp[-(t/timescale)^n]`.
///
/// Carries T2*, T2 or T1 depending on the experiment, plus the stretch
/// exponent n.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DecayEnvelope {
    /// Decay timescale in microseconds.
    pub timescale_us: f64,
    /// Stretch exponent n > 0.
    pub stretch_n: f64,
}

impl DecayEnvelope {
    pub fn new(timescale_us: f64, stretch_n: f64) -> Result<Self, DynamicsError> {
        if !(timescale_us.is_finite() && timescale_us > 0.0) {
            return Err(DynamicsError::BadTimescale(timescale_us));
        }
        if !(stretch_n.is_finite() && stretch_n > 0.0) {
            return Err(DynamicsError::BadStretch(stretch_n));
        }
        Ok(Self {
            timescale_us,
            stretch_n,
        })
    }

    /// Plain exponential (n = 1).
    pub fn exponential(timescale_us: f64) -> Result<Self, DynamicsError> {
        Self::new(timescale_us, 1.0)
    }

    pub fn eval(&self, t_us: f64) -> f64 {
        (-(t_us / self.timescale_us).powf(self.stretch_n)).exp()
    }
}

/// Parameters of the triple-cosine exponentially decaying Rabi beating fit:
/// `a + b * exp[-(t/tau)^n] * cos(2 pi W1 t + p1) * cos(2 pi W2 t + p2) * cos(2 pi W3 t + p3)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RabiBeatParams {
    pub baseline: f64,
    pub amplitude: f64,
    /// None evaluates the undamped product (envelope identically 1).
    pub envelope: Option<DecayEnvelope>,
    /// The three beating frequencies in MHz, all positive.
    pub omegas_mhz: [f64; 3],
    /// Phase offsets in radians.
    pub phases_rad: [f64; 3],
}

impl RabiBeatParams {
    pub fn new(
        baseline: f64,
        amplitude: f64,
        envelope: Option<DecayEnvelope>,
        omegas_mhz: [f64; 3],
        phases_rad: [f64; 3],
    ) -> Result<Self, DynamicsError> {
        for &w in &omegas_mhz {
            if !(w.is_finite() && w > 0.0) {
                return Err(DynamicsError::BadOmega(w));
            }
        }
        Ok(Self {
            baseline,
            amplitude,
            envelope,
            omegas_mhz,
            phases_rad,
        })
    }
}

/// Evaluate the triple-cosine Rabi beating model at time `t_us`.
pub fn rabi_beating_model(t_us: f64, p: &RabiBeatParams) -> f64 {
    let env = p.envelope.map_or(1.0, |e| e.eval(t_us));
    let product: f64 = (0..3)
        .map(|i| (2.0 * std::f64::consts::PI * p.omegas_mhz[i] * t_us + p.phases_rad[i]).cos())
        .product();
    p.baseline + p.amplitude * env * product
}

/// Ramsey free-induction model:
/// `baseline + amplitude * exp[-(t/T2*)^n] * prod_i cos(2 pi f_i t + phi_i)`.
///
/// `mods` lists nuclear-modulation (frequency MHz, phase rad) pairs; empty
/// for a bare decay.
pub fn ramsey_model(
    t_us: f64,
    baseline: f64,
    amplitude: f64,
    env: &DecayEnvelope,
    mods: &[(f64, f64)],
) -> f64 {
    let product: f64 = mods
        .iter()
        .map(|&(f, phi)| (2.0 * std::f64::consts::PI * f * t_us + phi).cos())
        .product();
    baseline + amplitude * env.eval(t_us) * product
}

/// Hahn-echo decay: `baseline + amplitude * exp[-(t/T2)^n]`.
pub fn hahn_echo_model(t_us: f64, baseline: f64, amplitude: f64, env: &DecayEnvelope) -> f64 {
    baseline + amplitude * env.eval(t_us)
}

/// Spin-lattice relaxation: `baseline + amplitude * exp(-t/T1)`.
pub fn t1_model(t_us: f64, baseline: f64, amplitude: f64, t1_us: f64) -> f64 {
    baseline + amplitude * (-t_us / t1_us).exp()
}

/// Which ground-to-excited branch the drive addresses.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Branch {
    Low,
    High,
}

/// Result of an ensemble Rabi simulation.
#[derive(Debug, Clone)]
pub struct EnsembleRabi {
    /// Signal vs time (us).
    pub trace: Trace,
    /// Rabi frequency of each orientation (MHz), in population order.
    pub rabi_freqs_mhz: Vec<f64>,
    /// True when two orientations share a Rabi frequency within 1e-9
    /// relative; their beating terms collapse into one.
    pub collapsed: bool,
}

/// Physical ensemble Rabi signal: a weighted sum of per-orientation cosines
/// under a common decay envelope,
/// `signal(t) = sum_o w_o cos(2 pi Omega_o t) * env(t)`,
/// with `Omega_o = drive_amplitude * sqrt(amp_o)` taken from the transition
/// amplitudes at zero field.
///
/// Note the triple-cosine fit model ([`rabi_beating_model`]) multiplies the
/// cosines instead of summing them; both forms are provided.
pub fn simulate_ensemble_rabi(
    pop: &DefectPopulation,
    mw_pol_lab: [f64; 3],
    drive_amplitude_mhz: f64,
    branch: Branch,
    times_us: &[f64],
    env: &DecayEnvelope,
) -> Result<EnsembleRabi, DynamicsError> {
    if !(drive_amplitude_mhz.is_finite() && drive_amplitude_mhz >= 0.0) {
        return Err(DynamicsError::BadDrive(drive_amplitude_mhz));
    }
    let grid_ok = !times_us.is_empty()
        && times_us.iter().all(|t| t.is_finite() && *t >= 0.0)
        && times_us.windows(2).all(|w| w[0] < w[1]);
    if !grid_ok {
        return Err(DynamicsError::BadTimeGrid);
    }

    let mut rabi_freqs = Vec::with_capacity(pop.orientations.len());
    let mut weights = Vec::with_capacity(pop.orientations.len());
    for &(orientation, weight) in &pop.orientations {
        let pol_defect = orientation.lab_vector_to_defect(mw_pol_lab);
        let levels = eigensolve(&build_hamiltonian(&pop.zfs, &DefectField([0.0; 3])))
            .map_err(OdmrError::from)?;
        let ts = transition_set(&levels, pol_defect).map_err(OdmrError::from)?;
        let amp = match branch {
            Branch::Low => ts.amp_low,
            Branch::High => ts.amp_high,
        };
        rabi_freqs.push(drive_amplitude_mhz * amp.sqrt());
        weights.push(weight);
    }

    let mut collapsed = false;
    for i in 0..rabi_freqs.len() {
        for j in (i + 1)..rabi_freqs.len() {
            let scale = rabi_freqs[i].abs().max(rabi_freqs[j].abs()).max(1e-300);
            if (rabi_freqs[i] - rabi_freqs[j]).abs() <= 1e-9 * scale {
                collapsed = true;
            }
        }
    }

    let signal: Vec<f64> = times_us
        .iter()
        .map(|&t| {
            let sum: f64 = rabi_freqs
                .iter()
                .zip(&weights)
                .map(|(&omega, &w)| w * (2.0 * std::f64::consts::PI * omega * t).cos())
                .sum();
            sum * env.eval(t)
        })
        .collect();

    let trace = Trace::new(times_us.to_vec(), signal, None)
        .expect("validated time grid")
        .with_units("us", "signal");
    Ok(EnsembleRabi {
        trace,
        rabi_freqs_mhz: rabi_freqs,
        collapsed,
    })
}
