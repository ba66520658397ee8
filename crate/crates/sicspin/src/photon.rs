//! Photon-statistics models: second-order autocorrelation g2(tau) and
//! fluorescence saturation, plus the single-emitter criterion.

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum PhotonError {
    #[error("decay times t1, t2 must be positive, got ({t1}, {t2}) ns")]
    BadDecayTimes { t1: f64, t2: f64 },
    #[error("saturation parameters must be positive, got i_sat = {i_sat}, p_sat = {p_sat}")]
    BadSaturation { i_sat: f64, p_sat: f64 },
}

/// Parameters of the antibunching model
/// `g2(tau) = 1 - (1+a) exp(-|tau - tau0|/t1) + b exp(-|tau - tau0|/t2)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct G2Params {
    /// Zero-point delay offset (ns).
    pub tau0_ns: f64,
    pub a: f64,
    pub b: f64,
    /// Antibunching timescale (ns).
    pub t1_ns: f64,
    /// Bunching timescale (ns).
    pub t2_ns: f64,
}

impl G2Params {
    pub fn new(tau0_ns: f64, a: f64, b: f64, t1_ns: f64, t2_ns: f64) -> Result<Self, PhotonError> {
        if !(t1_ns > 0.0 && t2_ns > 0.0) {
            return Err(PhotonError::BadDecayTimes {
                t1: t1_ns,
                t2: t2_ns,
            });
        }
        Ok(Self {
            tau0_ns,
            a,
            b,
            t1_ns,
            t2_ns,
        })
    }
}

/// Evaluate the antibunching model at delay `tau_ns`.
pub fn g2_model(tau_ns: f64, p: &G2Params) -> f64 {
    let dt = (tau_ns - p.tau0_ns).abs();
    1.0 - (1.0 + p.a) * (-dt / p.t1_ns).exp() + p.b * (-dt / p.t2_ns).exp()
}

/// Single-photon emitter criterion: g2(0) strictly below 0.5.
pub fn is_single_emitter(g2_at_zero: f64) -> bool {
    g2_at_zero < 0.5
}

/// Fluorescence saturation parameters.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SaturationParams {
    /// Saturation count rate (kcps).
    pub i_sat_kcps: f64,
    /// Saturation power (mW).
    pub p_sat_mw: f64,
}

impl SaturationParams {
    pub fn new(i_sat_kcps: f64, p_sat_mw: f64) -> Result<Self, PhotonError> {
        if !(i_sat_kcps > 0.0 && p_sat_mw > 0.0) {
            return Err(PhotonError::BadSaturation {
                i_sat: i_sat_kcps,
                p_sat: p_sat_mw,
            });
        }
        Ok(Self {
            i_sat_kcps,
            p_sat_mw,
        })
    }
}

/// Two-level saturation law `I(P) = I_sat * P / (P + P_sat)` in kcps.
pub fn saturation_model(power_mw: f64, p: &SaturationParams) -> f64 {
    p.i_sat_kcps * power_mw / (power_mw + p.p_sat_mw)
}
