//! S=1 spin Hamiltonian construction and diagonalization.
//!
//! The Hamiltonian of a single defect in its own frame is
//!
//! ```text
//! H = D (Sz^2 - S(S+1)/3) + E (Sx^2 - Sy^2) + g mu_B B . S
//! ```
//!
//! with D, E the zero-field splitting parameters (MHz), g the electron
//! g-factor, and B in Gauss. Matrices are written in the m_s = {+1, 0, -1}
//! basis. All operations are pure functions; every value here is immutable
//! after construction and safe to share across threads.

pub mod eigen;

use nalgebra::{Matrix3, Vector3};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use eigen::{CMatrix3, CVector3};

use crate::constants::{gyromagnetic_mhz_per_g, DEFAULT_G_FACTOR};

/// Polar angle of the ideal tetrahedral bond direction, arccos(-1/3) degrees.
/// Basal-oriented defects use this with azimuths {0, 120, 240}.
pub const BASAL_POLAR_DEG: f64 = 109.47122063449069;

/// Two excited-branch frequencies closer than this (MHz) count as degenerate.
pub const DEGENERACY_TOL_MHZ: f64 = 1e-6;

#[derive(Debug, Error)]
pub enum SpinError {
    #[error("matrix is not Hermitian: relative asymmetry {asymmetry:.3e} exceeds 1e-9")]
    NotHermitian { asymmetry: f64 },
    #[error("matrix contains non-finite entries")]
    NonFiniteMatrix,
    #[error("polarization must be a unit vector within 1e-9 (norm = {norm})")]
    PolarizationNotNormalized { norm: f64 },
    #[error("resonances must satisfy 0 < f_low <= f_high, got ({f_low}, {f_high}) MHz")]
    InvalidResonances { f_low: f64, f_high: f64 },
    #[error("orientation out of range: polar {polar} deg (0..=180), azimuth {azimuth} deg (0..360)")]
    InvalidOrientation { polar: f64, azimuth: f64 },
    #[error("{0} must be finite")]
    NonFinite(&'static str),
    #[error("{0}")]
    InvalidParameter(String),
}

/// Zero-field splitting parameters and g-factor of one defect species.
///
/// E is stored non-negative; with the low/high branch labels carrying the
/// physical content, a sign flip of E only relabels the branch states.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ZfsParams {
    /// Axial zero-field splitting D (MHz).
    pub d_mhz: f64,
    /// Transverse zero-field splitting E (MHz), non-negative.
    pub e_mhz: f64,
    /// Electron g-factor.
    pub g_factor: f64,
}

impl ZfsParams {
    pub fn new(d_mhz: f64, e_mhz: f64, g_factor: f64) -> Result<Self, SpinError> {
        if !d_mhz.is_finite() || !e_mhz.is_finite() {
            return Err(SpinError::NonFinite("zero-field splitting"));
        }
        if !g_factor.is_finite() || g_factor <= 0.0 {
            return Err(SpinError::InvalidParameter(format!(
                "g-factor must be positive and finite, got {g_factor}"
            )));
        }
        Ok(Self {
            d_mhz,
            e_mhz: e_mhz.abs(),
            g_factor,
        })
    }

    /// Constructor with the default electron g-factor.
    pub fn with_default_g(d_mhz: f64, e_mhz: f64) -> Result<Self, SpinError> {
        Self::new(d_mhz, e_mhz, DEFAULT_G_FACTOR)
    }

    /// gamma = g mu_B / h in MHz/G.
    pub fn gamma_mhz_per_g(&self) -> f64 {
        gyromagnetic_mhz_per_g(self.g_factor)
    }
}

/// Magnetic field vector in the lab frame (Gauss). The lab z-axis is the
/// crystal c-axis.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LabField(pub [f64; 3]);

/// Magnetic field vector in a defect frame (Gauss), z along the defect axis.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DefectField(pub [f64; 3]);

impl LabField {
    pub const ZERO: LabField = LabField([0.0; 3]);

    /// Field of magnitude `mag` Gauss along the (polar, azimuth) direction
    /// in degrees.
    pub fn from_spherical(mag: f64, polar_deg: f64, azimuth_deg: f64) -> Self {
        let theta = polar_deg.to_radians();
        let phi = azimuth_deg.to_radians();
        LabField([
            mag * theta.sin() * phi.cos(),
            mag * theta.sin() * phi.sin(),
            mag * theta.cos(),
        ])
    }

    pub fn norm(&self) -> f64 {
        let [x, y, z] = self.0;
        (x * x + y * y + z * z).sqrt()
    }
}

impl DefectField {
    pub fn norm(&self) -> f64 {
        let [x, y, z] = self.0;
        (x * x + y * y + z * z).sqrt()
    }
}

/// Direction of a defect's quantization axis in the lab frame.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DefectOrientation {
    polar_deg: f64,
    azimuth_deg: f64,
}

impl DefectOrientation {
    /// Defect axis along the crystal c-axis.
    pub const C_AXIS: DefectOrientation = DefectOrientation {
        polar_deg: 0.0,
        azimuth_deg: 0.0,
    };

    pub fn new(polar_deg: f64, azimuth_deg: f64) -> Result<Self, SpinError> {
        let valid = polar_deg.is_finite()
            && azimuth_deg.is_finite()
            && (0.0..=180.0).contains(&polar_deg)
            && (0.0..360.0).contains(&azimuth_deg);
        if !valid {
            return Err(SpinError::InvalidOrientation {
                polar: polar_deg,
                azimuth: azimuth_deg,
            });
        }
        Ok(Self {
            polar_deg,
            azimuth_deg,
        })
    }

    /// The three equivalent basal-plane orientations at the tetrahedral
    /// polar angle with azimuths 0, 120 and 240 degrees.
    pub fn basal_set() -> [DefectOrientation; 3] {
        [0.0, 120.0, 240.0].map(|az| DefectOrientation {
            polar_deg: BASAL_POLAR_DEG,
            azimuth_deg: az,
        })
    }

    pub fn polar_deg(&self) -> f64 {
        self.polar_deg
    }

    pub fn azimuth_deg(&self) -> f64 {
        self.azimuth_deg
    }

    /// Rotate a lab-frame vector into this defect's frame. The defect frame
    /// axes expressed in lab coordinates are the columns of Rz(az)*Ry(polar),
    /// so the components transform by the transpose.
    pub fn lab_vector_to_defect(&self, v: [f64; 3]) -> [f64; 3] {
        let theta = self.polar_deg.to_radians();
        let phi = self.azimuth_deg.to_radians();
        let (st, ct) = (theta.sin(), theta.cos());
        let (sp, cp) = (phi.sin(), phi.cos());
        let x_axis = [cp * ct, sp * ct, -st];
        let y_axis = [-sp, cp, 0.0];
        let z_axis = [cp * st, sp * st, ct];
        [dot3(x_axis, v), dot3(y_axis, v), dot3(z_axis, v)]
    }
}

fn dot3(a: [f64; 3], b: [f64; 3]) -> f64 {
    a[0] * b[0] + a[1] * b[1] + a[2] * b[2]
}

/// Rotate a lab-frame magnetic field into the defect frame. Norm-preserving.
pub fn lab_to_defect_frame(b: &LabField, orientation: &DefectOrientation) -> DefectField {
    DefectField(orientation.lab_vector_to_defect(b.0))
}

fn c(re: f64) -> Complex64 {
    Complex64::new(re, 0.0)
}

/// Spin-1 Sx operator in the m_s = {+1, 0, -1} basis.
pub fn spin_x() -> CMatrix3 {
    let s = c(1.0 / 2.0_f64.sqrt());
    let z = c(0.0);
    Matrix3::new(z, s, z, s, z, s, z, s, z)
}

/// Spin-1 Sy operator in the m_s = {+1, 0, -1} basis.
pub fn spin_y() -> CMatrix3 {
    let s = 1.0 / 2.0_f64.sqrt();
    let mi = Complex64::new(0.0, -s);
    let pi = Complex64::new(0.0, s);
    let z = c(0.0);
    Matrix3::new(z, mi, z, pi, z, mi, z, pi, z)
}

/// Spin-1 Sz operator in the m_s = {+1, 0, -1} basis.
pub fn spin_z() -> CMatrix3 {
    Matrix3::from_diagonal(&Vector3::new(c(1.0), c(0.0), c(-1.0)))
}

/// Construct the S=1 spin Hamiltonian (MHz) for a field given in the defect
/// frame. The result is Hermitian and traceless.
pub fn build_hamiltonian(zfs: &ZfsParams, b: &DefectField) -> CMatrix3 {
    let sx = spin_x();
    let sy = spin_y();
    let sz = spin_z();
    let gamma = zfs.gamma_mhz_per_g();
    let [bx, by, bz] = b.0;

    let d_term = (sz * sz - CMatrix3::identity() * c(2.0 / 3.0)) * c(zfs.d_mhz);
    let e_term = (sx * sx - sy * sy) * c(zfs.e_mhz);
    let zeeman = (sx * c(bx) + sy * c(by) + sz * c(bz)) * c(gamma);
    d_term + e_term + zeeman
}

/// Eigenvalues and eigenvectors of the spin Hamiltonian, with the
/// |0>-like state tagged.
#[derive(Debug, Clone)]
pub struct SpinLevels {
    /// Eigenvalues in MHz, ascending.
    pub energies: [f64; 3],
    /// Orthonormal eigenvectors in the m_s = {+1, 0, -1} basis, matching
    /// `energies` by index.
    pub states: [CVector3; 3],
    /// Index of the state with maximal |<m=0|psi>|^2.
    pub ground_index: usize,
}

impl SpinLevels {
    /// Squared overlap of state `i` with |m_s = 0>.
    pub fn m0_overlap(&self, i: usize) -> f64 {
        self.states[i][1].norm_sqr()
    }
}

/// Diagonalize a 3x3 Hermitian matrix into [`SpinLevels`].
///
/// The ground index is the state maximizing |<m=0|psi>|^2; overlap ties
/// closer than 1e-9 resolve toward the lowest-energy candidate.
pub fn eigensolve(h: &CMatrix3) -> Result<SpinLevels, SpinError> {
    if h.iter().any(|x| !x.re.is_finite() || !x.im.is_finite()) {
        return Err(SpinError::NonFiniteMatrix);
    }
    let scale = eigen::max_abs(h);
    if scale > 0.0 {
        let asym = (h - h.adjoint())
            .iter()
            .map(|x| x.norm())
            .fold(0.0, f64::max)
            / scale;
        if asym > 1e-9 {
            return Err(SpinError::NotHermitian { asymmetry: asym });
        }
    }
    // Work on the exactly Hermitian part so rounding in the input cannot
    // leak imaginary eigenvalue components.
    let sym = (h + h.adjoint()) * c(0.5);
    let (energies, states) = eigen::eigh3(&sym);

    let mut ground_index = 0;
    let mut best = states[0][1].norm_sqr();
    for (i, state) in states.iter().enumerate().skip(1) {
        let overlap = state[1].norm_sqr();
        if overlap > best + 1e-9 {
            best = overlap;
            ground_index = i;
        }
    }
    Ok(SpinLevels {
        energies,
        states,
        ground_index,
    })
}

/// The two ground-to-excited transitions: frequencies and microwave drive
/// weights for a given drive polarization.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct TransitionSet {
    /// Lower transition frequency (MHz).
    pub f_low: f64,
    /// Higher transition frequency (MHz).
    pub f_high: f64,
    /// Drive weight |<psi_low| p.S |psi_ground>|^2 of the lower branch.
    pub amp_low: f64,
    /// Drive weight of the higher branch.
    pub amp_high: f64,
    /// True when both excited levels sit within 1e-6 MHz; the frequencies
    /// are then reported at their shared value and the physical line weight
    /// is the amplitude sum.
    pub degenerate: bool,
}

/// Transition frequencies and drive amplitudes from the ground-like state.
///
/// `polarization` is the microwave field direction in the defect frame and
/// must be a unit vector within 1e-9.
pub fn transition_set(
    levels: &SpinLevels,
    polarization: [f64; 3],
) -> Result<TransitionSet, SpinError> {
    let norm = dot3(polarization, polarization).sqrt();
    if !norm.is_finite() || (norm - 1.0).abs() > 1e-9 {
        return Err(SpinError::PolarizationNotNormalized { norm });
    }
    let [px, py, pz] = polarization;
    let drive = spin_x() * c(px) + spin_y() * c(py) + spin_z() * c(pz);

    let g = levels.ground_index;
    let excited: Vec<usize> = (0..3).filter(|&i| i != g).collect();
    let ground = levels.states[g];
    let driven = drive * ground;

    let mut pairs: Vec<(f64, f64)> = excited
        .iter()
        .map(|&i| {
            let freq = levels.energies[i] - levels.energies[g];
            let amp = levels.states[i].dotc(&driven).norm_sqr();
            (freq, amp)
        })
        .collect();
    pairs.sort_by(|a, b| a.0.total_cmp(&b.0));

    let (mut f_low, amp_low) = pairs[0];
    let (mut f_high, amp_high) = pairs[1];
    let degenerate = (f_high - f_low).abs() < DEGENERACY_TOL_MHZ;
    if degenerate {
        let shared = 0.5 * (f_low + f_high);
        f_low = shared;
        f_high = shared;
    }
    Ok(TransitionSet {
        f_low,
        f_high,
        amp_low,
        amp_high,
        degenerate,
    })
}

/// Invert the zero-field eigenproblem: D = (f_low + f_high)/2,
/// E = (f_high - f_low)/2. Uses the default g-factor.
pub fn resonances_to_zfs(f_low: f64, f_high: f64) -> Result<ZfsParams, SpinError> {
    if !(f_low.is_finite() && f_high.is_finite()) || f_low <= 0.0 || f_low > f_high {
        return Err(SpinError::InvalidResonances { f_low, f_high });
    }
    ZfsParams::with_default_g(0.5 * (f_low + f_high), 0.5 * (f_high - f_low))
}
