//! Subcommand definitions and handlers.
//!
//! Exit codes: 0 on success, 2 on any input error, 3 when a fit stops
//! without meeting its convergence criterion. Diagnostics go to stderr;
//! the result document is the only stdout output.

use std::collections::BTreeMap;
use std::fmt;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use serde_json::{json, Value};

use sicspin::catalog::{self, IdentifyOptions};
use sicspin::constants::DEFAULT_G_FACTOR;
use sicspin::dynamics::{simulate_ensemble_rabi, Branch, DecayEnvelope};
use sicspin::fit::{self, model_by_key, FitOptions, Model};
use sicspin::odmr::{field_sweep, simulate_spectrum, DefectPopulation, LineShape, SpectrumConfig};
use sicspin::spin::{resonances_to_zfs, DefectOrientation, LabField, ZfsParams};
use sicspin::trace::{parse_trace_csv, trace_to_csv, Trace};

use crate::output::{self, Inputs};

pub const EXIT_OK: i32 = 0;
pub const EXIT_INPUT_ERROR: i32 = 2;
pub const EXIT_NON_CONVERGENCE: i32 = 3;

#[derive(Debug)]
pub struct CliError(String);

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

impl<E: std::error::Error> From<E> for CliError {
    fn from(e: E) -> Self {
        CliError(e.to_string())
    }
}

fn bad_input(msg: impl Into<String>) -> CliError {
    CliError(msg.into())
}

#[derive(Parser)]
#[command(
    name = "sicspin",
    version,
    about = "Simulate, fit and identify S=1 spin-defect color centers in 4H-SiC"
)]
pub struct Cli {
    /// Seed for all synthetic noise.
    #[arg(long, global = true, default_value_t = 0)]
    pub seed: u64,
    /// Write curve CSV output here (used as a filename prefix by sweep-field).
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand)]
pub enum Command {
    /// Synthesize a cw ODMR spectrum at a fixed magnetic field.
    SimulateOdmr(SimulateOdmrArgs),
    /// Synthesize ODMR spectra over a sweep of field magnitudes.
    SweepField(SweepFieldArgs),
    /// Simulate an ensemble Rabi oscillation with orientation beating.
    SimulateRabi(SimulateRabiArgs),
    /// Fit a registered model to a CSV trace.
    Fit(FitArgs),
    /// Identify a defect species from measured signatures.
    Identify(IdentifyArgs),
    /// Print the active (built-in plus override) defect catalog.
    Catalog(CatalogArgs),
}

/// Defect selection shared by the simulation commands: either a catalog
/// species or explicit Hamiltonian parameters.
#[derive(Args)]
pub struct SpeciesArgs {
    /// Catalog species name, e.g. PL5, PL6, "PL7'".
    #[arg(long, conflicts_with = "d")]
    species: Option<String>,
    /// Axial zero-field splitting D in MHz (alternative to --species).
    #[arg(long)]
    d: Option<f64>,
    /// Transverse zero-field splitting E in MHz.
    #[arg(long, default_value_t = 0.0)]
    e: f64,
    /// Electron g-factor.
    #[arg(long, default_value_t = DEFAULT_G_FACTOR)]
    g: f64,
    /// Orientation: "c-axis", "basal", or "polar,azimuth" in degrees.
    #[arg(long)]
    orientation: Option<String>,
    /// ODMR dip depth as a fraction.
    #[arg(long)]
    contrast: Option<f64>,
    /// Catalog override TOML file (merged by name).
    #[arg(long = "override", value_name = "FILE")]
    override_path: Option<PathBuf>,
}

#[derive(Args)]
pub struct SpectrumArgs {
    /// Lower edge of the frequency grid (MHz); derived from the transitions
    /// when omitted.
    #[arg(long)]
    f_min: Option<f64>,
    /// Upper edge of the frequency grid (MHz).
    #[arg(long)]
    f_max: Option<f64>,
    #[arg(long, default_value_t = 2001)]
    points: usize,
    /// Line full width at half maximum (MHz).
    #[arg(long, default_value_t = SpectrumConfig::DEFAULT_FWHM_MHZ)]
    linewidth: f64,
    #[arg(long, value_parser = parse_lineshape, default_value = "lorentzian")]
    lineshape: LineShape,
    /// Global multiplier on dip depths, in (0, 1].
    #[arg(long, default_value_t = 1.0)]
    contrast_scale: f64,
    /// Microwave polarization direction in the lab frame, "x,y,z".
    #[arg(long, default_value = "1,0,0")]
    mw_pol: String,
}

#[derive(Args)]
pub struct SimulateOdmrArgs {
    #[command(flatten)]
    species: SpeciesArgs,
    #[command(flatten)]
    spectrum: SpectrumArgs,
    /// Static field as "magnitude,polar,azimuth" (Gauss, degrees).
    #[arg(long, default_value = "0,0,0")]
    b_field: String,
    /// Additive Gaussian noise sigma on the signal (uses --seed).
    #[arg(long, default_value_t = 0.0)]
    noise: f64,
}

#[derive(Args)]
pub struct SweepFieldArgs {
    #[command(flatten)]
    species: SpeciesArgs,
    #[command(flatten)]
    spectrum: SpectrumArgs,
    /// Sweep direction as "polar,azimuth" in degrees.
    #[arg(long, default_value = "0,0")]
    direction: String,
    #[arg(long, default_value_t = 0.0)]
    b_min: f64,
    /// Largest field magnitude (Gauss).
    #[arg(long)]
    b_max: f64,
    #[arg(long, default_value_t = 10)]
    b_steps: usize,
}

#[derive(Args)]
pub struct SimulateRabiArgs {
    #[command(flatten)]
    species: SpeciesArgs,
    /// Microwave polarization direction in the lab frame, "x,y,z".
    #[arg(long, default_value = "1,0,0")]
    mw_pol: String,
    /// Bare drive amplitude (MHz).
    #[arg(long)]
    drive: f64,
    /// Which transition branch the drive addresses.
    #[arg(long, value_parser = parse_branch, default_value = "high")]
    branch: Branch,
    /// End of the time grid (us).
    #[arg(long)]
    t_max: f64,
    #[arg(long, default_value_t = 1000)]
    points: usize,
    /// Decay timescale (us); defaults to t_max / 2.
    #[arg(long)]
    tau: Option<f64>,
    /// Stretch exponent of the decay envelope.
    #[arg(long, default_value_t = 1.0)]
    stretch: f64,
    /// Additive Gaussian noise sigma on the signal (uses --seed).
    #[arg(long, default_value_t = 0.0)]
    noise: f64,
}

#[derive(Args)]
pub struct FitArgs {
    /// Model registry key: g2, saturation, ramsey, echo, t1, rabi-beating.
    #[arg(long)]
    model: String,
    /// Input trace CSV.
    #[arg(long)]
    input: PathBuf,
    /// Initial value override, repeatable: --init k=v.
    #[arg(long = "init", value_name = "K=V")]
    init: Vec<String>,
    /// Bounds override, repeatable: --bounds k=lo:hi (inf allowed).
    #[arg(long = "bounds", value_name = "K=LO:HI")]
    bounds: Vec<String>,
    #[arg(long, default_value_t = 200)]
    max_iter: usize,
    /// Number of perturbed starts; defaults to 8 for rabi-beating, else 1.
    #[arg(long)]
    multi_start: Option<usize>,
}

#[derive(Args)]
pub struct IdentifyArgs {
    /// Measured zero-field resonances, comma separated (MHz).
    #[arg(long)]
    resonances: Option<String>,
    /// Measured zero-phonon line (nm).
    #[arg(long)]
    zpl: Option<f64>,
    /// Frequency match tolerance (MHz).
    #[arg(long, default_value_t = 5.0)]
    tol_freq: f64,
    /// ZPL match tolerance (nm).
    #[arg(long, default_value_t = 2.0)]
    tol_zpl: f64,
    /// Match against cryogenic splittings where available.
    #[arg(long)]
    cryo: bool,
    #[arg(long = "override", value_name = "FILE")]
    override_path: Option<PathBuf>,
}

#[derive(Args)]
pub struct CatalogArgs {
    #[arg(long = "override", value_name = "FILE")]
    override_path: Option<PathBuf>,
}

pub fn run(cli: Cli) -> i32 {
    let outcome = match &cli.command {
        Command::SimulateOdmr(args) => simulate_odmr(args, cli.seed, cli.out.as_deref()),
        Command::SweepField(args) => sweep_field(args, cli.out.as_deref()),
        Command::SimulateRabi(args) => simulate_rabi(args, cli.seed, cli.out.as_deref()),
        Command::Fit(args) => run_fit(args, cli.seed, cli.out.as_deref()),
        Command::Identify(args) => identify(args),
        Command::Catalog(args) => print_catalog(args),
    };
    match outcome {
        Ok((doc, code)) => {
            output::print_document(&doc);
            code
        }
        Err(e) => {
            eprintln!("error: {e}");
            EXIT_INPUT_ERROR
        }
    }
}

fn parse_lineshape(s: &str) -> Result<LineShape, String> {
    match s {
        "lorentzian" => Ok(LineShape::Lorentzian),
        "gaussian" => Ok(LineShape::Gaussian),
        other => Err(format!("unknown lineshape `{other}`")),
    }
}

fn parse_branch(s: &str) -> Result<Branch, String> {
    match s {
        "low" => Ok(Branch::Low),
        "high" => Ok(Branch::High),
        other => Err(format!("branch must be `low` or `high`, got `{other}`")),
    }
}

fn parse_numbers(s: &str, expected: usize, what: &str) -> Result<Vec<f64>, CliError> {
    let values: Result<Vec<f64>, _> = s.split(',').map(|c| c.trim().parse::<f64>()).collect();
    let values = values.map_err(|_| bad_input(format!("could not parse {what} from `{s}`")))?;
    if values.len() != expected {
        return Err(bad_input(format!(
            "{what} needs {expected} comma-separated numbers, got {} in `{s}`",
            values.len()
        )));
    }
    Ok(values)
}

fn parse_unit_vector(s: &str, what: &str) -> Result<[f64; 3], CliError> {
    let v = parse_numbers(s, 3, what)?;
    let norm = (v[0] * v[0] + v[1] * v[1] + v[2] * v[2]).sqrt();
    if !(norm.is_finite() && norm > 0.0) {
        return Err(bad_input(format!("{what} must be a nonzero vector")));
    }
    Ok([v[0] / norm, v[1] / norm, v[2] / norm])
}

fn parse_b_field(s: &str) -> Result<(LabField, f64, f64, f64), CliError> {
    let v = parse_numbers(s, 3, "--b-field (magnitude,polar,azimuth)")?;
    if v[0] < 0.0 {
        return Err(bad_input("field magnitude must be non-negative"));
    }
    Ok((LabField::from_spherical(v[0], v[1], v[2]), v[0], v[1], v[2]))
}

fn read_override(path: Option<&Path>) -> Result<Vec<catalog::DefectRecord>, CliError> {
    let text = match path {
        Some(p) => Some(
            std::fs::read_to_string(p)
                .map_err(|e| bad_input(format!("cannot read override file {}: {e}", p.display())))?,
        ),
        None => None,
    };
    Ok(catalog::merged_catalog(text.as_deref())?)
}

/// Normalize species names: case-insensitive, unicode prime accepted.
fn find_record<'a>(
    records: &'a [catalog::DefectRecord],
    name: &str,
) -> Option<&'a catalog::DefectRecord> {
    let canon = |s: &str| s.to_lowercase().replace('\u{2032}', "'");
    let wanted = canon(name);
    records.iter().find(|r| canon(&r.name) == wanted)
}

impl SpeciesArgs {
    fn resolve(&self) -> Result<(DefectPopulation, Inputs), CliError> {
        let mut inputs = Inputs::new();
        let (zfs, orientation_hint, contrast) = match (&self.species, self.d) {
            (Some(name), None) => {
                let records = read_override(self.override_path.as_deref())?;
                let record = find_record(&records, name)
                    .ok_or_else(|| bad_input(format!("unknown species `{name}`")))?;
                let zfs = match record.resonances_mhz.as_slice() {
                    [] => {
                        return Err(bad_input(format!(
                            "species `{}` has no room-temperature resonances to simulate",
                            record.name
                        )))
                    }
                    [single] => ZfsParams::new(*single, 0.0, self.g)?,
                    [low, .., high] => {
                        let base = resonances_to_zfs(*low, *high)?;
                        ZfsParams::new(base.d_mhz, base.e_mhz, self.g)?
                    }
                };
                let class = match record.orientation_class {
                    catalog::OrientationClass::CAxis => "c-axis",
                    catalog::OrientationClass::Basal => "basal",
                };
                inputs.insert("species".into(), json!(record.name));
                let contrast = self
                    .contrast
                    .or(record.room_t_contrast)
                    .unwrap_or(0.2);
                (zfs, class.to_owned(), contrast)
            }
            (None, Some(d)) => {
                let zfs = ZfsParams::new(d, self.e, self.g)?;
                let hint = self.orientation.clone().unwrap_or_else(|| "c-axis".into());
                (zfs, hint, self.contrast.unwrap_or(0.2))
            }
            _ => {
                return Err(bad_input(
                    "specify either --species or explicit --d (with optional --e)",
                ))
            }
        };

        // An explicit --orientation wins over the catalog class.
        let orientation_spec = self.orientation.clone().unwrap_or(orientation_hint);
        let orientations: Vec<(DefectOrientation, f64)> = match orientation_spec.as_str() {
            "c-axis" => vec![(DefectOrientation::C_AXIS, 1.0)],
            "basal" => DefectOrientation::basal_set()
                .into_iter()
                .map(|o| (o, 1.0 / 3.0))
                .collect(),
            other => {
                let v = parse_numbers(other, 2, "--orientation (polar,azimuth)")?;
                vec![(DefectOrientation::new(v[0], v[1])?, 1.0)]
            }
        };

        inputs.insert("d_mhz".into(), json!(zfs.d_mhz));
        inputs.insert("e_mhz".into(), json!(zfs.e_mhz));
        inputs.insert("g_factor".into(), json!(zfs.g_factor));
        inputs.insert("orientation".into(), json!(orientation_spec));
        inputs.insert("contrast".into(), json!(contrast));

        let pop = DefectPopulation::new(zfs, orientations, contrast)?;
        Ok((pop, inputs))
    }
}

impl SpectrumArgs {
    fn config(&self, pop: &DefectPopulation, fields: &[LabField]) -> Result<(SpectrumConfig, [f64; 3]), CliError> {
        let pol = parse_unit_vector(&self.mw_pol, "--mw-pol")?;
        let (f_min, f_max) = match (self.f_min, self.f_max) {
            (Some(lo), Some(hi)) => (lo, hi),
            _ => {
                let mut lo = f64::INFINITY;
                let mut hi = f64::NEG_INFINITY;
                for b in fields {
                    for (_, ts) in pop.transitions(b, pol)? {
                        lo = lo.min(ts.f_low);
                        hi = hi.max(ts.f_high);
                    }
                }
                let pad = 10.0 * self.linewidth;
                (self.f_min.unwrap_or(lo - pad), self.f_max.unwrap_or(hi + pad))
            }
        };
        let cfg = SpectrumConfig {
            f_min_mhz: f_min,
            f_max_mhz: f_max,
            n_points: self.points,
            linewidth_fwhm_mhz: self.linewidth,
            contrast_scale: self.contrast_scale,
            lineshape: self.lineshape,
        };
        cfg.validate()?;
        Ok((cfg, pol))
    }

    fn describe(&self, inputs: &mut Inputs, cfg: &SpectrumConfig, pol: [f64; 3]) {
        inputs.insert("f_min_mhz".into(), json!(cfg.f_min_mhz));
        inputs.insert("f_max_mhz".into(), json!(cfg.f_max_mhz));
        inputs.insert("n_points".into(), json!(cfg.n_points));
        inputs.insert("linewidth_fwhm_mhz".into(), json!(cfg.linewidth_fwhm_mhz));
        inputs.insert("contrast_scale".into(), json!(cfg.contrast_scale));
        inputs.insert(
            "lineshape".into(),
            json!(match cfg.lineshape {
                LineShape::Lorentzian => "lorentzian",
                LineShape::Gaussian => "gaussian",
            }),
        );
        inputs.insert("mw_pol".into(), json!(pol));
    }
}

fn apply_noise(values: &mut [f64], sigma: f64, seed: u64) {
    if sigma <= 0.0 {
        return;
    }
    use rand::SeedableRng;
    use rand_distr::Distribution;
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
    let normal = rand_distr::Normal::new(0.0, sigma).expect("finite sigma");
    for v in values.iter_mut() {
        *v += normal.sample(&mut rng);
    }
}

fn write_text(path: &Path, text: &str) -> Result<(), CliError> {
    std::fs::write(path, text)
        .map_err(|e| bad_input(format!("cannot write {}: {e}", path.display())))
}

type CommandResult = Result<(Value, i32), CliError>;

fn simulate_odmr(args: &SimulateOdmrArgs, seed: u64, out: Option<&Path>) -> CommandResult {
    let (pop, mut inputs) = args.species.resolve()?;
    let (b, mag, polar, azimuth) = parse_b_field(&args.b_field)?;
    let (cfg, pol) = args.spectrum.config(&pop, &[b])?;
    args.spectrum.describe(&mut inputs, &cfg, pol);
    inputs.insert("b_field_gauss".into(), json!([mag, polar, azimuth]));
    inputs.insert("noise_sigma".into(), json!(args.noise));
    inputs.insert("seed".into(), json!(seed));

    let mut spectrum = simulate_spectrum(&pop, &b, pol, &cfg)?;
    apply_noise(&mut spectrum.signal, args.noise, seed);

    let mut warnings = Vec::new();
    if let Some(path) = out {
        let trace = Trace::new(spectrum.freqs_mhz.clone(), spectrum.signal.clone(), None)
            .map_err(|e| bad_input(format!("spectrum not expressible as a trace: {e}")))?
            .with_units("MHz", "signal");
        write_text(path, &trace_to_csv(&trace))?;
        inputs.insert("out".into(), json!(path.display().to_string()));
    }
    if args.noise > 0.0 {
        warnings.push("synthetic noise applied to the signal".to_owned());
    }

    let doc = output::document(
        "simulate-odmr",
        inputs,
        vec![("spectrum", output::spectrum_value(&spectrum))],
        warnings,
    );
    Ok((doc, EXIT_OK))
}

fn sweep_field(args: &SweepFieldArgs, out: Option<&Path>) -> CommandResult {
    let (pop, mut inputs) = args.species.resolve()?;
    let dir = parse_numbers(&args.direction, 2, "--direction (polar,azimuth)")?;
    if args.b_steps < 1 {
        return Err(bad_input("--b-steps must be at least 1"));
    }
    if !(args.b_max >= args.b_min && args.b_min >= 0.0) {
        return Err(bad_input("need 0 <= --b-min <= --b-max"));
    }
    let magnitudes: Vec<f64> = if args.b_steps == 1 {
        vec![args.b_min]
    } else {
        let step = (args.b_max - args.b_min) / (args.b_steps - 1) as f64;
        (0..args.b_steps)
            .map(|i| args.b_min + step * i as f64)
            .collect()
    };

    let direction_vec = LabField::from_spherical(1.0, dir[0], dir[1]).0;
    let probe_fields: Vec<LabField> = [magnitudes[0], *magnitudes.last().expect("non-empty")]
        .iter()
        .map(|&m| LabField([direction_vec[0] * m, direction_vec[1] * m, direction_vec[2] * m]))
        .collect();
    let (cfg, pol) = args.spectrum.config(&pop, &probe_fields)?;
    args.spectrum.describe(&mut inputs, &cfg, pol);
    inputs.insert("direction_deg".into(), json!([dir[0], dir[1]]));
    inputs.insert("magnitudes_gauss".into(), json!(magnitudes));

    let sweep = field_sweep(&pop, direction_vec, &magnitudes, pol, &cfg)?;

    let mut points = Vec::new();
    for (idx, (mag, spectrum)) in sweep.iter().enumerate() {
        let b = LabField([
            direction_vec[0] * mag,
            direction_vec[1] * mag,
            direction_vec[2] * mag,
        ]);
        let transitions: Vec<Value> = pop
            .transitions(&b, pol)?
            .iter()
            .map(|(w, ts)| {
                json!({
                    "weight": w,
                    "f_low_mhz": ts.f_low,
                    "f_high_mhz": ts.f_high,
                    "amp_low": ts.amp_low,
                    "amp_high": ts.amp_high,
                    "degenerate": ts.degenerate,
                })
            })
            .collect();
        let mut point = serde_json::Map::new();
        point.insert("b_gauss".into(), json!(mag));
        point.insert("transitions".into(), json!(transitions));
        if let Some(prefix) = out {
            let path = sweep_csv_path(prefix, idx);
            let trace = Trace::new(spectrum.freqs_mhz.clone(), spectrum.signal.clone(), None)
                .map_err(|e| bad_input(format!("spectrum not expressible as a trace: {e}")))?
                .with_units("MHz", "signal");
            let csv = format!("# b_gauss: {mag}\n{}", trace_to_csv(&trace));
            write_text(&path, &csv)?;
            point.insert("csv".into(), json!(path.display().to_string()));
        }
        points.push(Value::Object(point));
    }

    let doc = output::document("sweep-field", inputs, vec![("spectrum", json!({ "sweep": points }))], vec![]);
    Ok((doc, EXIT_OK))
}

fn sweep_csv_path(prefix: &Path, index: usize) -> PathBuf {
    let stem = prefix
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| "sweep".to_owned());
    let ext = prefix
        .extension()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| "csv".to_owned());
    prefix.with_file_name(format!("{stem}_{index:03}.{ext}"))
}

fn simulate_rabi(args: &SimulateRabiArgs, seed: u64, out: Option<&Path>) -> CommandResult {
    let (pop, mut inputs) = args.species.resolve()?;
    let pol = parse_unit_vector(&args.mw_pol, "--mw-pol")?;
    if args.points < 2 {
        return Err(bad_input("--points must be at least 2"));
    }
    if args.t_max.is_nan() || args.t_max <= 0.0 {
        return Err(bad_input("--t-max must be positive"));
    }
    let times: Vec<f64> = (0..args.points)
        .map(|i| args.t_max * i as f64 / (args.points - 1) as f64)
        .collect();
    let tau = args.tau.unwrap_or(args.t_max / 2.0);
    let env = DecayEnvelope::new(tau, args.stretch)?;

    inputs.insert("mw_pol".into(), json!(pol));
    inputs.insert("drive_mhz".into(), json!(args.drive));
    inputs.insert(
        "branch".into(),
        json!(match args.branch {
            Branch::Low => "low",
            Branch::High => "high",
        }),
    );
    inputs.insert("t_max_us".into(), json!(args.t_max));
    inputs.insert("points".into(), json!(args.points));
    inputs.insert("tau_us".into(), json!(tau));
    inputs.insert("stretch_n".into(), json!(args.stretch));
    inputs.insert("noise_sigma".into(), json!(args.noise));
    inputs.insert("seed".into(), json!(seed));

    let mut result = simulate_ensemble_rabi(&pop, pol, args.drive, args.branch, &times, &env)?;
    apply_noise(&mut result.trace.y, args.noise, seed);

    let mut warnings = Vec::new();
    if result.collapsed {
        warnings.push(
            "rabi frequencies are degenerate across orientations; beating collapses".to_owned(),
        );
    }
    if args.noise > 0.0 {
        warnings.push("synthetic noise applied to the signal".to_owned());
    }
    if let Some(path) = out {
        write_text(path, &trace_to_csv(&result.trace))?;
        inputs.insert("out".into(), json!(path.display().to_string()));
    }

    let doc = output::document(
        "simulate-rabi",
        inputs,
        vec![
            ("trace", output::trace_value(&result.trace)),
            ("rabi_freqs_mhz", json!(result.rabi_freqs_mhz)),
        ],
        warnings,
    );
    Ok((doc, EXIT_OK))
}

fn parse_named_values(pairs: &[String], names: &[String]) -> Result<Vec<(usize, f64)>, CliError> {
    pairs
        .iter()
        .map(|pair| {
            let (key, value) = pair
                .split_once('=')
                .ok_or_else(|| bad_input(format!("expected k=v, got `{pair}`")))?;
            let idx = names
                .iter()
                .position(|n| n == key.trim())
                .ok_or_else(|| bad_input(format!("unknown parameter `{}`", key.trim())))?;
            let parsed: f64 = value
                .trim()
                .parse()
                .map_err(|_| bad_input(format!("could not parse value in `{pair}`")))?;
            Ok((idx, parsed))
        })
        .collect()
}

fn parse_bound(value: &str) -> Result<f64, CliError> {
    match value.trim() {
        "inf" | "+inf" => Ok(f64::INFINITY),
        "-inf" => Ok(f64::NEG_INFINITY),
        v => v
            .parse()
            .map_err(|_| bad_input(format!("could not parse bound `{v}`"))),
    }
}

fn run_fit(args: &FitArgs, seed: u64, out: Option<&Path>) -> CommandResult {
    let model = model_by_key(&args.model)
        .ok_or_else(|| bad_input(format!("unknown model `{}`; choose one of {:?}", args.model, fit::MODEL_KEYS)))?;
    let model: &dyn Model = model.as_ref();

    let text = std::fs::read_to_string(&args.input)
        .map_err(|e| bad_input(format!("cannot read {}: {e}", args.input.display())))?;
    let trace = parse_trace_csv(&text)?;

    let names = model.param_names();
    let mut bounds = model.default_bounds();
    for spec in &args.bounds {
        let (key, range) = spec
            .split_once('=')
            .ok_or_else(|| bad_input(format!("expected k=lo:hi, got `{spec}`")))?;
        let idx = names
            .iter()
            .position(|n| n == key.trim())
            .ok_or_else(|| bad_input(format!("unknown parameter `{}`", key.trim())))?;
        let (lo, hi) = range
            .split_once(':')
            .ok_or_else(|| bad_input(format!("expected lo:hi in `{spec}`")))?;
        bounds[idx] = (parse_bound(lo)?, parse_bound(hi)?);
    }
    // Heuristic defaults are clamped into the requested box; explicit --init
    // values are taken as given and validated by the engine.
    let mut init = model.default_init(&trace);
    for (value, &(lo, hi)) in init.iter_mut().zip(&bounds) {
        *value = value.clamp(lo, hi);
    }
    for (idx, value) in parse_named_values(&args.init, &names)? {
        init[idx] = value;
    }

    let options = FitOptions {
        max_iterations: args.max_iter,
        ..FitOptions::default()
    };
    let n_starts = args
        .multi_start
        .unwrap_or(if args.model == "rabi-beating" { 8 } else { 1 });

    let result = if n_starts > 1 {
        fit::fit_multi_start(&trace, model, &init, Some(&bounds), &options, n_starts, seed)?
    } else {
        fit::fit(&trace, model, &init, Some(&bounds), &options)?
    };

    let mut inputs = Inputs::new();
    inputs.insert("model".into(), json!(args.model));
    inputs.insert("input".into(), json!(args.input.display().to_string()));
    inputs.insert("n_points".into(), json!(trace.len()));
    inputs.insert("init".into(), json!(names.iter().map(String::as_str).zip(init.iter().copied()).collect::<BTreeMap<_, _>>()));
    inputs.insert("max_iterations".into(), json!(args.max_iter));
    inputs.insert("multi_start".into(), json!(n_starts));
    inputs.insert("seed".into(), json!(seed));

    if let Some(path) = out {
        let fitted: Vec<f64> = trace.x.iter().map(|&x| model.eval(x, &result.params)).collect();
        let fitted_trace = Trace::new(trace.x.clone(), fitted, None)
            .map_err(|e| bad_input(format!("fitted curve not expressible as a trace: {e}")))?;
        let fitted_trace = match (&trace.x_unit, &trace.y_unit) {
            (Some(xu), Some(yu)) => fitted_trace.with_units(xu.clone(), yu.clone()),
            _ => fitted_trace,
        };
        write_text(path, &trace_to_csv(&fitted_trace))?;
        inputs.insert("out".into(), json!(path.display().to_string()));
    }

    let (params, uncertainties) = output::fit_values(&result);
    let doc = output::document(
        "fit",
        inputs,
        vec![
            ("params", params),
            ("uncertainties", uncertainties),
            ("chi2_reduced", json!(result.chi2_reduced)),
            ("n_iterations", json!(result.n_iterations)),
            ("converged", json!(result.converged)),
        ],
        result.warnings.clone(),
    );
    let code = if result.converged { EXIT_OK } else { EXIT_NON_CONVERGENCE };
    Ok((doc, code))
}

fn identify(args: &IdentifyArgs) -> CommandResult {
    let records = read_override(args.override_path.as_deref())?;
    let resonances: Vec<f64> = match &args.resonances {
        Some(text) => text
            .split(',')
            .map(|c| c.trim().parse::<f64>())
            .collect::<Result<_, _>>()
            .map_err(|_| bad_input(format!("could not parse --resonances `{text}`")))?,
        None => Vec::new(),
    };
    let options = IdentifyOptions {
        tol_freq_mhz: args.tol_freq,
        tol_zpl_nm: args.tol_zpl,
        cryo: args.cryo,
    };
    let result = catalog::identify(&records, &resonances, args.zpl, &options)?;

    let mut inputs = Inputs::new();
    inputs.insert("resonances_mhz".into(), json!(resonances));
    inputs.insert("zpl_nm".into(), json!(args.zpl));
    inputs.insert("tol_freq_mhz".into(), json!(args.tol_freq));
    inputs.insert("tol_zpl_nm".into(), json!(args.tol_zpl));
    inputs.insert("cryo".into(), json!(args.cryo));

    let mut warnings = Vec::new();
    if result.low_confidence {
        warnings.push("low confidence: no catalog species is a plausible match".to_owned());
    }
    let doc = output::document(
        "identify",
        inputs,
        vec![
            ("matches", serde_json::to_value(&result.ranked).expect("serializable")),
            ("low_confidence", json!(result.low_confidence)),
        ],
        warnings,
    );
    Ok((doc, EXIT_OK))
}

fn print_catalog(args: &CatalogArgs) -> CommandResult {
    let records = read_override(args.override_path.as_deref())?;
    let mut inputs = Inputs::new();
    inputs.insert(
        "override".into(),
        json!(args.override_path.as_ref().map(|p| p.display().to_string())),
    );
    inputs.insert("n_records".into(), json!(records.len()));
    let doc = output::document(
        "catalog",
        inputs,
        vec![("catalog", serde_json::to_value(&records).expect("serializable"))],
        vec![],
    );
    Ok((doc, EXIT_OK))
}
