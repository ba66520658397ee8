//! Continuous-wave ODMR spectrum synthesis and magnetic-field sweeps.
//!
//! Spectra follow the dip convention: baseline 1, resonances subtract
//! `contrast * amplitude * weight * lineshape(f - f_k)` with a unit-peak
//! lineshape. Contrast is an input per population; optical pumping and power
//! broadening are not modeled.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::par;
use crate::spin::{
    build_hamiltonian, eigensolve, lab_to_defect_frame, transition_set, DefectOrientation,
    LabField, SpinError, TransitionSet, ZfsParams,
};

#[derive(Debug, Error)]
pub enum OdmrError {
    #[error("invalid spectrum config: {0}")]
    InvalidConfig(String),
    #[error("orientation weights must be non-negative and sum to 1 within 1e-9 (sum = {sum})")]
    BadWeights { sum: f64 },
    #[error("population needs at least one orientation")]
    NoOrientations,
    #[error("contrast must lie in [0, 1], got {0}")]
    BadContrast(f64),
    #[error("field magnitudes must be finite, non-negative and ascending")]
    BadMagnitudes,
    #[error(transparent)]
    Spin(#[from] SpinError),
}

/// Spectral line profile. Lorentzian is the default; both use the FWHM from
/// the config and have unit peak height.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum LineShape {
    #[default]
    Lorentzian,
    Gaussian,
}

impl LineShape {
    /// Profile value at detuning `delta` for full width at half maximum `fwhm`.
    pub fn eval(&self, delta: f64, fwhm: f64) -> f64 {
        match self {
            LineShape::Lorentzian => {
                let half = fwhm / 2.0;
                half * half / (delta * delta + half * half)
            }
            LineShape::Gaussian => {
                let x = delta / fwhm;
                (-4.0 * std::f64::consts::LN_2 * x * x).exp()
            }
        }
    }
}

/// Frequency grid and lineshape settings for a synthesized spectrum.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SpectrumConfig {
    pub f_min_mhz: f64,
    pub f_max_mhz: f64,
    pub n_points: usize,
    pub linewidth_fwhm_mhz: f64,
    /// Global multiplier on all dip depths, in (0, 1].
    pub contrast_scale: f64,
    pub lineshape: LineShape,
}

impl SpectrumConfig {
    pub const DEFAULT_FWHM_MHZ: f64 = 10.0;

    pub fn new(f_min_mhz: f64, f_max_mhz: f64, n_points: usize) -> Result<Self, OdmrError> {
        let cfg = SpectrumConfig {
            f_min_mhz,
            f_max_mhz,
            n_points,
            linewidth_fwhm_mhz: Self::DEFAULT_FWHM_MHZ,
            contrast_scale: 1.0,
            lineshape: LineShape::Lorentzian,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<(), OdmrError> {
        if !(self.f_min_mhz.is_finite() && self.f_max_mhz.is_finite())
            || self.f_min_mhz >= self.f_max_mhz
        {
            return Err(OdmrError::InvalidConfig(format!(
                "need f_min < f_max, got ({}, {})",
                self.f_min_mhz, self.f_max_mhz
            )));
        }
        if self.n_points < 2 {
            return Err(OdmrError::InvalidConfig(format!(
                "need at least 2 grid points, got {}",
                self.n_points
            )));
        }
        if self.linewidth_fwhm_mhz.is_nan() || self.linewidth_fwhm_mhz <= 0.0 {
            return Err(OdmrError::InvalidConfig(format!(
                "linewidth FWHM must be positive, got {}",
                self.linewidth_fwhm_mhz
            )));
        }
        if self.contrast_scale.is_nan() || self.contrast_scale <= 0.0 || self.contrast_scale > 1.0 {
            return Err(OdmrError::InvalidConfig(format!(
                "contrast scale must lie in (0, 1], got {}",
                self.contrast_scale
            )));
        }
        Ok(())
    }

    pub fn grid(&self) -> Vec<f64> {
        let step = (self.f_max_mhz - self.f_min_mhz) / (self.n_points - 1) as f64;
        (0..self.n_points)
            .map(|i| self.f_min_mhz + step * i as f64)
            .collect()
    }
}

/// A synthesized ODMR spectrum: fluorescence signal vs microwave frequency,
/// normalized to 1 off resonance.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OdmrSpectrum {
    pub freqs_mhz: Vec<f64>,
    pub signal: Vec<f64>,
}

impl OdmrSpectrum {
    /// Frequency of the deepest point.
    pub fn min_signal_freq(&self) -> f64 {
        let mut best = 0;
        for i in 1..self.signal.len() {
            if self.signal[i] < self.signal[best] {
                best = i;
            }
        }
        self.freqs_mhz[best]
    }
}

/// One defect species with its orientation ensemble and ODMR dip depth.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct DefectPopulation {
    pub zfs: ZfsParams,
    /// (orientation, weight) pairs; weights sum to 1 within 1e-9.
    pub orientations: Vec<(DefectOrientation, f64)>,
    /// Per-transition dip depth (fraction of baseline), e.g. 0.20 for 20%.
    pub contrast: f64,
}

impl DefectPopulation {
    pub fn new(
        zfs: ZfsParams,
        orientations: Vec<(DefectOrientation, f64)>,
        contrast: f64,
    ) -> Result<Self, OdmrError> {
        if orientations.is_empty() {
            return Err(OdmrError::NoOrientations);
        }
        if orientations.iter().any(|&(_, w)| !(w.is_finite() && w >= 0.0)) {
            return Err(OdmrError::BadWeights { sum: f64::NAN });
        }
        let sum: f64 = orientations.iter().map(|&(_, w)| w).sum();
        if (sum - 1.0).abs() > 1e-9 {
            return Err(OdmrError::BadWeights { sum });
        }
        if !(0.0..=1.0).contains(&contrast) {
            return Err(OdmrError::BadContrast(contrast));
        }
        Ok(Self {
            zfs,
            orientations,
            contrast,
        })
    }

    /// Single c-axis-oriented defect.
    pub fn c_axis(zfs: ZfsParams, contrast: f64) -> Result<Self, OdmrError> {
        Self::new(zfs, vec![(DefectOrientation::C_AXIS, 1.0)], contrast)
    }

    /// Equal-weight ensemble over the three basal orientations.
    pub fn basal_ensemble(zfs: ZfsParams, contrast: f64) -> Result<Self, OdmrError> {
        let w = 1.0 / 3.0;
        Self::new(
            zfs,
            DefectOrientation::basal_set()
                .into_iter()
                .map(|o| (o, w))
                .collect(),
            contrast,
        )
    }

    /// Transition sets of every orientation at the given lab field, in
    /// population order.
    pub fn transitions(
        &self,
        b_lab: &LabField,
        mw_pol_lab: [f64; 3],
    ) -> Result<Vec<(f64, TransitionSet)>, OdmrError> {
        self.orientations
            .iter()
            .map(|&(orientation, weight)| {
                let b_defect = lab_to_defect_frame(b_lab, &orientation);
                let pol_defect = orientation.lab_vector_to_defect(mw_pol_lab);
                let levels = eigensolve(&build_hamiltonian(&self.zfs, &b_defect))?;
                let ts = transition_set(&levels, pol_defect)?;
                Ok((weight, ts))
            })
            .collect()
    }
}

/// Synthesize a cw ODMR spectrum for a defect population at one lab field.
///
/// `signal(f) = 1 - sum_k contrast * contrast_scale * w_k * A_k * L(f - f_k)`
/// over all orientations' transitions.
pub fn simulate_spectrum(
    pop: &DefectPopulation,
    b_lab: &LabField,
    mw_pol_lab: [f64; 3],
    cfg: &SpectrumConfig,
) -> Result<OdmrSpectrum, OdmrError> {
    cfg.validate()?;
    let transitions = pop.transitions(b_lab, mw_pol_lab)?;
    let freqs = cfg.grid();
    // Accumulate the dip sum first so contrast scaling stays exactly linear,
    // then subtract from the unit baseline.
    let mut dip = vec![0.0; freqs.len()];
    for (weight, ts) in &transitions {
        for &(f_k, a_k) in &[(ts.f_low, ts.amp_low), (ts.f_high, ts.amp_high)] {
            let depth = pop.contrast * cfg.contrast_scale * weight * a_k;
            if depth == 0.0 {
                continue;
            }
            for (i, &f) in freqs.iter().enumerate() {
                dip[i] += depth * cfg.lineshape.eval(f - f_k, cfg.linewidth_fwhm_mhz);
            }
        }
    }
    let signal = dip.iter().map(|&d| 1.0 - d).collect();
    Ok(OdmrSpectrum {
        freqs_mhz: freqs,
        signal,
    })
}

/// Sweep the field magnitude along a fixed lab direction, producing one
/// spectrum per magnitude. Field points are independent and evaluated in
/// parallel when the `parallel` feature is on; output order always follows
/// the input order.
pub fn field_sweep(
    pop: &DefectPopulation,
    direction: [f64; 3],
    magnitudes_gauss: &[f64],
    mw_pol_lab: [f64; 3],
    cfg: &SpectrumConfig,
) -> Result<Vec<(f64, OdmrSpectrum)>, OdmrError> {
    cfg.validate()?;
    let norm = (direction[0].powi(2) + direction[1].powi(2) + direction[2].powi(2)).sqrt();
    if !(norm.is_finite() && norm > 0.0) {
        return Err(OdmrError::InvalidConfig(
            "sweep direction must be a nonzero vector".into(),
        ));
    }
    let dir = direction.map(|c| c / norm);
    let ascending = magnitudes_gauss.windows(2).all(|w| w[0] < w[1]);
    if magnitudes_gauss.is_empty()
        || !ascending
        || magnitudes_gauss.iter().any(|&m| !(m.is_finite() && m >= 0.0))
    {
        return Err(OdmrError::BadMagnitudes);
    }

    let results = par::map_collect(magnitudes_gauss, |&mag| {
        let b = LabField([dir[0] * mag, dir[1] * mag, dir[2] * mag]);
        simulate_spectrum(pop, &b, mw_pol_lab, cfg).map(|s| (mag, s))
    });
    results.into_iter().collect()
}
