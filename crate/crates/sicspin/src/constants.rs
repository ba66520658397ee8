//! Physical constants used across the crate.

/// Bohr magneton over Planck constant, in MHz per Gauss.
pub const MU_B_MHZ_PER_G: f64 = 1.3996245;

/// Default electron g-factor for divacancy-like centers.
pub const DEFAULT_G_FACTOR: f64 = 2.0028;

/// hc in eV·nm, for zero-phonon-line wavelength/energy conversion.
pub const HC_EV_NM: f64 = 1239.8419843;

/// Gyromagnetic ratio gamma = g * mu_B / h in MHz/G.
pub fn gyromagnetic_mhz_per_g(g_factor: f64) -> f64 {
    g_factor * MU_B_MHZ_PER_G
}
