//! Built-in database of PL1–PL8' defect signatures and species
//! identification.
//!
//! Room-temperature zero-field resonances are the primary matching key;
//! cryogenic splittings are used only for queries tagged cryogenic.
//! Wavelengths are canonical for the zero-phonon lines; where a record also
//! carries a literature energy value that disagrees with hc/lambda, the
//! discrepancy is kept and annotated instead of being reconciled.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::constants::HC_EV_NM;
use crate::photon::SaturationParams;

#[derive(Debug, Error)]
pub enum CatalogError {
    #[error("identify needs at least one resonance or a zero-phonon wavelength")]
    EmptyQuery,
    #[error("tolerances must be positive, got tol_freq = {tol_freq}, tol_zpl = {tol_zpl}")]
    BadTolerance { tol_freq: f64, tol_zpl: f64 },
    #[error("census input must be non-empty")]
    EmptyCensus,
    #[error("wavelength/energy must be positive, got {0}")]
    NonPositive(f64),
    #[error("override file is not valid TOML: {0}")]
    BadOverrideFile(String),
    #[error("record `{name}` must list at least one resonance or a ZPL")]
    EmptyRecord { name: String },
    #[error("record `{name}` resonances must be sorted ascending")]
    UnsortedResonances { name: String },
}

/// Qualitative temperature trend of the ODMR contrast on cooling.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum TempTrend {
    ContrastDropsCold,
    ContrastRisesCold,
    ContrastStable,
    MixedBranches,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum OrientationClass {
    CAxis,
    Basal,
}

/// One catalog row: the measured signature of a defect species.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct DefectRecord {
    pub name: String,
    pub orientation_class: OrientationClass,
    /// Room-temperature zero-field resonances (MHz), ascending.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub resonances_mhz: Vec<f64>,
    /// Cryogenic zero-field splittings (MHz), ascending.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub zfs_cryo_mhz: Option<Vec<f64>>,
    /// Zero-phonon line wavelength (nm); canonical optical signature.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub zpl_nm: Option<f64>,
    /// Literature zero-phonon line energy (eV); may disagree with
    /// hc/zpl_nm, see `annotations`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub zpl_ev: Option<f64>,
    /// Room-temperature ODMR contrast as a fraction.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub room_t_contrast: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub saturation: Option<SaturationParams>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub t2_star_us: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub t2_us: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub t1_us: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub temp_trend: Option<TempTrend>,
    /// True for the modified-divacancy family (PL5, PL6, PL7', PL8').
    #[serde(default)]
    pub modified_divacancy: bool,
    /// Documented inconsistencies in the source values.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub annotations: Vec<String>,
}

impl DefectRecord {
    fn validate(&self) -> Result<(), CatalogError> {
        if self.resonances_mhz.is_empty() && self.zpl_nm.is_none() {
            return Err(CatalogError::EmptyRecord {
                name: self.name.clone(),
            });
        }
        let sorted = |v: &[f64]| v.windows(2).all(|w| w[0] <= w[1]);
        if !sorted(&self.resonances_mhz)
            || self.zfs_cryo_mhz.as_deref().is_some_and(|v| !sorted(v))
        {
            return Err(CatalogError::UnsortedResonances {
                name: self.name.clone(),
            });
        }
        Ok(())
    }
}

/// Convert a zero-phonon wavelength (nm) to energy (eV).
pub fn nm_to_ev(wavelength_nm: f64) -> Result<f64, CatalogError> {
    if !(wavelength_nm.is_finite() && wavelength_nm > 0.0) {
        return Err(CatalogError::NonPositive(wavelength_nm));
    }
    Ok(HC_EV_NM / wavelength_nm)
}

/// Convert an energy (eV) to wavelength (nm). Exact inverse of [`nm_to_ev`].
pub fn ev_to_nm(energy_ev: f64) -> Result<f64, CatalogError> {
    if !(energy_ev.is_finite() && energy_ev > 0.0) {
        return Err(CatalogError::NonPositive(energy_ev));
    }
    Ok(HC_EV_NM / energy_ev)
}

const ZPL_EV_NOTE: &str =
    "literature eV value disagrees with hc/lambda of the stored wavelength; \
     wavelength is canonical";

/// The built-in species catalog.
pub fn builtin_catalog() -> Vec<DefectRecord> {
    let sat = |i, p| SaturationParams::new(i, p).expect("builtin saturation values");
    vec![
        DefectRecord {
            name: "PL1".into(),
            orientation_class: OrientationClass::CAxis,
            resonances_mhz: vec![1323.5],
            zfs_cryo_mhz: None,
            zpl_nm: None,
            zpl_ev: None,
            room_t_contrast: None,
            saturation: None,
            t2_star_us: None,
            t2_us: None,
            t1_us: None,
            temp_trend: None,
            modified_divacancy: false,
            annotations: vec![],
        },
        DefectRecord {
            name: "PL3".into(),
            orientation_class: OrientationClass::Basal,
            resonances_mhz: vec![],
            zfs_cryo_mhz: None,
            zpl_nm: Some(1108.0),
            zpl_ev: None,
            room_t_contrast: None,
            saturation: None,
            t2_star_us: None,
            t2_us: None,
            t1_us: None,
            temp_trend: None,
            modified_divacancy: false,
            annotations: vec!["optical reference row; no room-temperature resonances stored".into()],
        },
        DefectRecord {
            name: "PL4".into(),
            orientation_class: OrientationClass::CAxis,
            resonances_mhz: vec![],
            zfs_cryo_mhz: None,
            zpl_nm: Some(1078.0),
            zpl_ev: None,
            room_t_contrast: None,
            saturation: None,
            t2_star_us: None,
            t2_us: None,
            t1_us: None,
            temp_trend: None,
            modified_divacancy: false,
            annotations: vec!["optical reference row; no room-temperature resonances stored".into()],
        },
        DefectRecord {
            name: "PL5".into(),
            orientation_class: OrientationClass::Basal,
            resonances_mhz: vec![1342.6, 1375.3],
            zfs_cryo_mhz: Some(vec![1356.5, 1387.7]),
            zpl_nm: Some(1042.2),
            zpl_ev: Some(1.1947),
            room_t_contrast: Some(0.20),
            saturation: Some(sat(70.4, 1.93)),
            t2_star_us: Some(1.82),
            t2_us: Some(31.6),
            t1_us: Some(186.6),
            temp_trend: Some(TempTrend::MixedBranches),
            modified_divacancy: true,
            annotations: vec![
                "source lists E = 16.6 MHz, but the resonance pair implies \
                 E = (1375.3 - 1342.6)/2 = 16.35 MHz; resonances are primary"
                    .into(),
                ZPL_EV_NOTE.into(),
            ],
        },
        DefectRecord {
            name: "PL6".into(),
            orientation_class: OrientationClass::CAxis,
            resonances_mhz: vec![1350.8],
            zfs_cryo_mhz: Some(vec![1365.3]),
            zpl_nm: Some(1037.8),
            zpl_ev: Some(1.1899),
            room_t_contrast: Some(0.25),
            saturation: Some(sat(225.8, 2.36)),
            t2_star_us: Some(1.92),
            t2_us: Some(33.4),
            t1_us: Some(204.1),
            temp_trend: Some(TempTrend::ContrastStable),
            modified_divacancy: true,
            annotations: vec![ZPL_EV_NOTE.into()],
        },
        DefectRecord {
            name: "PL7'".into(),
            orientation_class: OrientationClass::Basal,
            resonances_mhz: vec![1135.5, 1333.0],
            zfs_cryo_mhz: None,
            zpl_nm: Some(1106.2),
            zpl_ev: Some(1.1513),
            room_t_contrast: None,
            saturation: Some(sat(31.7, 2.33)),
            t2_star_us: None,
            t2_us: None,
            t1_us: None,
            temp_trend: Some(TempTrend::ContrastDropsCold),
            modified_divacancy: true,
            annotations: vec![ZPL_EV_NOTE.into()],
        },
        DefectRecord {
            name: "PL8'".into(),
            orientation_class: OrientationClass::CAxis,
            resonances_mhz: vec![1315.7],
            zfs_cryo_mhz: None,
            zpl_nm: Some(1077.1),
            zpl_ev: Some(1.1208),
            room_t_contrast: Some(0.05),
            saturation: Some(sat(106.6, 1.66)),
            t2_star_us: None,
            t2_us: None,
            t1_us: None,
            temp_trend: Some(TempTrend::ContrastRisesCold),
            modified_divacancy: true,
            annotations: vec![
                "single observed resonance; transverse splitting not established".into(),
                ZPL_EV_NOTE.into(),
            ],
        },
    ]
}

/// Override file: `[[defect]]` entries with the same field names as
/// [`DefectRecord`]; absent fields are omitted.
#[derive(Debug, Deserialize)]
struct OverrideFile {
    #[serde(default)]
    defect: Vec<DefectRecord>,
}

/// Merge an override TOML document into the built-in catalog. A record whose
/// name matches a built-in one replaces it; new names are appended. The
/// merged catalog is sorted by name.
pub fn merged_catalog(override_toml: Option<&str>) -> Result<Vec<DefectRecord>, CatalogError> {
    let mut records = builtin_catalog();
    if let Some(text) = override_toml {
        let parsed: OverrideFile =
            toml::from_str(text).map_err(|e| CatalogError::BadOverrideFile(e.to_string()))?;
        for record in parsed.defect {
            record.validate()?;
            match records.iter_mut().find(|r| r.name == record.name) {
                Some(existing) => *existing = record,
                None => records.push(record),
            }
        }
    }
    records.sort_by(|a, b| a.name.cmp(&b.name));
    Ok(records)
}

/// Options for species identification.
#[derive(Debug, Clone, Copy)]
pub struct IdentifyOptions {
    /// Frequency tolerance (MHz); roughly the room-temperature linewidth.
    pub tol_freq_mhz: f64,
    /// ZPL tolerance (nm); roughly the spectrometer resolution.
    pub tol_zpl_nm: f64,
    /// Match against cryogenic splittings where available.
    pub cryo: bool,
}

impl Default for IdentifyOptions {
    fn default() -> Self {
        Self {
            tol_freq_mhz: 5.0,
            tol_zpl_nm: 2.0,
            cryo: false,
        }
    }
}

/// Which catalog features contributed to a match score.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum MatchedOn {
    Resonances,
    Zpl,
    Both,
}

#[derive(Debug, Clone, Serialize)]
pub struct MatchCandidate {
    pub name: String,
    pub score: f64,
    pub matched_on: MatchedOn,
}

/// Ranked identification result.
#[derive(Debug, Clone, Serialize)]
pub struct MatchResult {
    /// Candidates with descending score; ties broken alphabetically.
    pub ranked: Vec<MatchCandidate>,
    /// True when even the best score is below exp(-9): no plausible match.
    pub low_confidence: bool,
}

impl MatchResult {
    pub fn best(&self) -> Option<&MatchCandidate> {
        self.ranked.first()
    }
}

/// Identify a species from measured resonances and/or a ZPL wavelength.
///
/// Each query feature contributes `exp(-(delta/tol)^2)` against the closest
/// catalog feature of the same kind; catalog features with no query
/// counterpart do not penalize.
pub fn identify(
    catalog: &[DefectRecord],
    resonances_mhz: &[f64],
    zpl_nm: Option<f64>,
    options: &IdentifyOptions,
) -> Result<MatchResult, CatalogError> {
    if resonances_mhz.is_empty() && zpl_nm.is_none() {
        return Err(CatalogError::EmptyQuery);
    }
    let positive = |v: f64| v.is_finite() && v > 0.0;
    if !positive(options.tol_freq_mhz) || !positive(options.tol_zpl_nm) {
        return Err(CatalogError::BadTolerance {
            tol_freq: options.tol_freq_mhz,
            tol_zpl: options.tol_zpl_nm,
        });
    }

    let mut ranked: Vec<MatchCandidate> = catalog
        .iter()
        .map(|record| {
            let reference: &[f64] = if options.cryo {
                record
                    .zfs_cryo_mhz
                    .as_deref()
                    .unwrap_or(&record.resonances_mhz)
            } else {
                &record.resonances_mhz
            };

            let mut score = 0.0;
            let mut used_resonances = false;
            if !reference.is_empty() {
                for &f in resonances_mhz {
                    let delta = reference
                        .iter()
                        .map(|&r| (r - f).abs())
                        .fold(f64::INFINITY, f64::min);
                    score += (-(delta / options.tol_freq_mhz).powi(2)).exp();
                    used_resonances = true;
                }
            }
            let mut used_zpl = false;
            if let (Some(q), Some(r)) = (zpl_nm, record.zpl_nm) {
                score += (-((q - r) / options.tol_zpl_nm).powi(2)).exp();
                used_zpl = true;
            }
            let matched_on = match (used_resonances, used_zpl) {
                (true, true) => MatchedOn::Both,
                (false, _) => MatchedOn::Zpl,
                (_, false) => MatchedOn::Resonances,
            };
            MatchCandidate {
                name: record.name.clone(),
                score,
                matched_on,
            }
        })
        .collect();

    ranked.sort_by(|a, b| b.score.total_cmp(&a.score).then(a.name.cmp(&b.name)));
    let low_confidence = ranked.first().is_none_or(|c| c.score < (-9.0f64).exp());
    Ok(MatchResult {
        ranked,
        low_confidence,
    })
}

/// Census over a list of species labels.
#[derive(Debug, Clone, Serialize)]
pub struct Census {
    /// (species, fraction) in descending fraction, ties alphabetical;
    /// unknown labels are pooled under "other". Fractions sum to 1.
    pub fractions: Vec<(String, f64)>,
    /// Fraction of emitters belonging to the modified-divacancy family.
    pub modified_fraction: f64,
    pub total: usize,
    pub warnings: Vec<String>,
}

/// Count species labels against the catalog, reporting per-species fractions
/// and the modified-divacancy fraction.
pub fn census(catalog: &[DefectRecord], labels: &[String]) -> Result<Census, CatalogError> {
    if labels.is_empty() {
        return Err(CatalogError::EmptyCensus);
    }
    let mut counts: Vec<(String, usize)> = Vec::new();
    let mut modified = 0usize;
    let mut warnings = Vec::new();

    for label in labels {
        match catalog.iter().find(|r| &r.name == label) {
            Some(record) => {
                if record.modified_divacancy {
                    modified += 1;
                }
                bump(&mut counts, &record.name);
            }
            None => {
                if !warnings.iter().any(|w: &String| w.contains(label.as_str())) {
                    warnings.push(format!("unknown species label `{label}` counted as other"));
                }
                bump(&mut counts, "other");
            }
        }
    }

    let total = labels.len();
    let mut fractions: Vec<(String, f64)> = counts
        .into_iter()
        .map(|(name, n)| (name, n as f64 / total as f64))
        .collect();
    fractions.sort_by(|a, b| b.1.total_cmp(&a.1).then(a.0.cmp(&b.0)));

    Ok(Census {
        fractions,
        modified_fraction: modified as f64 / total as f64,
        total,
        warnings,
    })
}

fn bump(counts: &mut Vec<(String, usize)>, name: &str) {
    match counts.iter_mut().find(|(n, _)| n == name) {
        Some((_, c)) => *c += 1,
        None => counts.push((name.to_owned(), 1)),
    }
}
