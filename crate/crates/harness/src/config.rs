//! Run configuration: TOML in, fully materialized config and fingerprint out.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use spinbus_core::donors::{DonorSpecies, FieldProfile, MechanicalMode, ProfileKind};
use spinbus_core::gates::GateSettings;
use spinbus_core::models::{DecayRates, SystemSpec, MECHANICAL_LINEWIDTH, QUBIT_INV_T1, QUBIT_INV_T2};
use spinbus_core::spectra::{shift_grid, Branch, SpectrumSettings, ThresholdSettings};

use crate::error::{HarnessError, Result};

/// One sweep axis: an inclusive linear range or an explicit list.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Axis {
    Range { start: f64, stop: f64, points: usize },
    Values { values: Vec<f64> },
}

impl Axis {
    pub fn values(&self) -> Vec<f64> {
        match self {
            Axis::Values { values } => values.clone(),
            Axis::Range { start, stop, points: 1 } if start == stop => vec![*start],
            Axis::Range { start, stop, points } => {
                let n = *points;
                (0..n)
                    .map(|k| {
                        if k + 1 == n {
                            *stop
                        } else {
                            start + (stop - start) * k as f64 / (n - 1) as f64
                        }
                    })
                    .collect()
            }
        }
    }

    fn check(&self, name: &str, out: &mut Vec<String>) {
        match self {
            Axis::Range { start, stop, points } => {
                if *points == 0 {
                    out.push(format!("{name}: range needs at least one point"));
                }
                if !start.is_finite() || !stop.is_finite() {
                    out.push(format!("{name}: range ends must be finite"));
                }
                if *points == 1 && start != stop {
                    out.push(format!("{name}: a one-point range needs start == stop"));
                }
            }
            Axis::Values { values } => {
                if values.is_empty() {
                    out.push(format!("{name}: value list is empty"));
                }
                if values.iter().any(|v| !v.is_finite()) {
                    out.push(format!("{name}: values must be finite"));
                }
            }
        }
    }

    fn check_all(&self, name: &str, out: &mut Vec<String>, what: &str, ok: impl Fn(f64) -> bool) {
        if self.values().into_iter().any(|v| v.is_finite() && !ok(v)) {
            out.push(format!("{name}: every value must be {what}"));
        }
    }
}

/// Qubit and mechanical damping, converted to jump rates at each point's
/// thermal occupation.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Calibration {
    /// Mechanical linewidth [Hz].
    pub kappa: f64,
    pub inv_t1: f64,
    pub inv_t2: f64,
}

impl Default for Calibration {
    fn default() -> Self {
        Self {
            kappa: MECHANICAL_LINEWIDTH,
            inv_t1: QUBIT_INV_T1,
            inv_t2: QUBIT_INV_T2,
        }
    }
}

impl Calibration {
    pub fn rates(&self, n_th: f64) -> spinbus_core::Result<DecayRates> {
        DecayRates::calibrated(self.kappa, n_th, self.inv_t1, self.inv_t2)
    }
}

/// Single-qubit readout template for threshold maps.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReadoutTemplate {
    pub omega_m: f64,
    pub n_fock: usize,
    #[serde(default)]
    pub gamma_e_b0: f64,
    #[serde(default)]
    pub calibration: Calibration,
}

/// Symmetric two-qubit bus template; couplings and detunings come from the sweep.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BusTemplate {
    pub omega_m: f64,
    pub n_fock: usize,
    #[serde(default)]
    pub n_th: f64,
    #[serde(default)]
    pub calibration: Calibration,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EigenMap {
    pub system: SystemSpec,
    pub omega_r: Axis,
    pub delta_nu: Axis,
    #[serde(default = "upper")]
    pub branch: Branch,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ShiftSweep {
    pub system: SystemSpec,
    pub lambda: Axis,
    /// Also fit the shift from the full open-system spectrum.
    #[serde(default)]
    pub simulated: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ThresholdMap {
    pub readout: ReadoutTemplate,
    /// `ω_m − Ω_R` [Hz].
    pub detuning: Axis,
    pub delta_nu: Axis,
    pub n_th: Axis,
    #[serde(default)]
    pub threshold: ThresholdSettings,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GateSweep {
    pub bus: BusTemplate,
    pub lambda: Axis,
    /// `ω_m − Ω_R` [Hz]; exclusive with `ratio`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub detuning: Option<Axis>,
    /// `(ω_m − Ω_R)/λ`; exclusive with `detuning`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub ratio: Option<Axis>,
    #[serde(default = "full_noise")]
    pub gamma_pct: f64,
    #[serde(default)]
    pub settings: GateSettings,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GatePair {
    pub lambda: f64,
    pub detuning: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GammaSweep {
    pub bus: BusTemplate,
    pub points: Vec<GatePair>,
    pub gamma_pct: Axis,
    #[serde(default)]
    pub settings: GateSettings,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum SpeciesSource {
    File { file: PathBuf },
    Inline(DonorSpecies),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum ProfileSource {
    File { kind: ProfileKind, file: PathBuf },
    Inline {
        kind: ProfileKind,
        distance: Vec<f64>,
        value: Vec<f64>,
    },
}

impl ProfileSource {
    pub fn profile(&self) -> Result<FieldProfile> {
        match self {
            ProfileSource::Inline { kind, distance, value } => {
                Ok(FieldProfile::new(*kind, distance.clone(), value.clone(), "")?)
            }
            ProfileSource::File { .. } => Err(HarnessError::Precondition("profile file not materialized".into())),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DonorCoupling {
    pub species: SpeciesSource,
    pub mode: MechanicalMode,
    pub profile: ProfileSource,
    /// Donor distance from the source [m].
    pub distance: Axis,
    /// ESR drive frequency selecting the bias field [Hz].
    pub frequency: f64,
    /// Index of the resonance, counted from the lowest field.
    #[serde(default)]
    pub line: usize,
    /// Upper end of the resonance search [T].
    #[serde(default = "two_tesla")]
    pub b_max: f64,
    #[serde(default = "one")]
    pub ensemble: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpectrumRun {
    pub system: SystemSpec,
    #[serde(default = "upper")]
    pub branch: Branch,
    /// Defaults to the readout search window around `ω_m`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub freqs: Option<Axis>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Experiment {
    EigenMap(EigenMap),
    ShiftSweep(ShiftSweep),
    ThresholdMap(ThresholdMap),
    GateSweep(GateSweep),
    GammaSweep(GammaSweep),
    DonorCoupling(DonorCoupling),
    Spectrum(SpectrumRun),
}

impl Experiment {
    pub fn kind(&self) -> &'static str {
        match self {
            Experiment::EigenMap(_) => "eigen-map",
            Experiment::ShiftSweep(_) => "shift-sweep",
            Experiment::ThresholdMap(_) => "threshold-map",
            Experiment::GateSweep(_) => "gate-sweep",
            Experiment::GammaSweep(_) => "gamma-sweep",
            Experiment::DonorCoupling(_) => "donor-coupling",
            Experiment::Spectrum(_) => "spectrum",
        }
    }
}

pub const DEFAULT_TIMEOUT_S: f64 = 600.0;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunSettings {
    #[serde(default)]
    pub seed: u64,
    /// Per-point wall-clock limit [s].
    #[serde(default = "default_timeout")]
    pub timeout_s: f64,
    #[serde(default = "one_usize")]
    pub workers: usize,
    #[serde(default = "default_out")]
    pub out: PathBuf,
}

impl Default for RunSettings {
    fn default() -> Self {
        Self {
            seed: 0,
            timeout_s: DEFAULT_TIMEOUT_S,
            workers: 1,
            out: default_out(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunConfig {
    #[serde(default)]
    pub run: RunSettings,
    pub experiment: Experiment,
}

fn upper() -> Branch {
    Branch::Up
}
fn full_noise() -> f64 {
    100.0
}
fn two_tesla() -> f64 {
    2.0
}
fn one() -> u64 {
    1
}
fn one_usize() -> usize {
    1
}
fn default_timeout() -> f64 {
    DEFAULT_TIMEOUT_S
}
fn default_out() -> PathBuf {
    PathBuf::from("results")
}

/// Part of the config that determines the numbers: everything but the
/// worker count and output directory.
#[derive(Serialize)]
struct Canonical<'a> {
    run: CanonicalRun,
    experiment: &'a Experiment,
}

#[derive(Serialize)]
struct CanonicalRun {
    seed: u64,
    timeout_s: f64,
}

impl RunConfig {
    /// Parse, resolve file references relative to `base`, fill defaults and
    /// validate.
    pub fn from_toml(text: &str, base: &Path) -> Result<Self> {
        let raw: toml::Table = toml::from_str(text).map_err(|e| HarnessError::Validation(vec![e.to_string()]))?;
        let mut config: RunConfig = toml::Value::Table(raw.clone())
            .try_into()
            .map_err(|e: toml::de::Error| HarnessError::Validation(vec![e.to_string()]))?;
        let mut problems = Vec::new();
        let resolved = toml::Value::try_from(&config).expect("config serializes");
        unknown_keys(&toml::Value::Table(raw), &resolved, "", &mut problems);
        config.materialize(base)?;
        problems.extend(config.violations());
        if problems.is_empty() {
            Ok(config)
        } else {
            Err(HarnessError::Validation(problems))
        }
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| HarnessError::io(path, e))?;
        let base = path.parent().unwrap_or(Path::new("."));
        if path.extension().is_some_and(|e| e == "csv") {
            let embedded = crate::table::embedded_config(&text)
                .ok_or_else(|| HarnessError::Validation(vec![format!("{}: no embedded config", path.display())]))?;
            return Self::from_toml(&embedded, base);
        }
        Self::from_toml(&text, base)
    }

    /// Replace file references by their contents and fill derived defaults.
    fn materialize(&mut self, base: &Path) -> Result<()> {
        match &mut self.experiment {
            Experiment::DonorCoupling(d) => {
                if let SpeciesSource::File { file } = &d.species {
                    let species = DonorSpecies::load(base.join(file)).map_err(|e| {
                        HarnessError::Validation(vec![format!("species file {}: {e}", file.display())])
                    })?;
                    d.species = SpeciesSource::Inline(species);
                }
                if let ProfileSource::File { kind, file } = &d.profile {
                    let p = spinbus_core::donors::load_profile(base.join(file), *kind).map_err(|e| {
                        HarnessError::Validation(vec![format!("profile file {}: {e}", file.display())])
                    })?;
                    d.profile = ProfileSource::Inline {
                        kind: p.kind,
                        distance: p.distance,
                        value: p.value,
                    };
                }
            }
            Experiment::Spectrum(s) if s.freqs.is_none() => {
                if let Ok(settings) = SpectrumSettings::for_spec(&s.system) {
                    let grid = shift_grid(&s.system, settings.linewidth);
                    s.freqs = Some(Axis::Range {
                        start: grid[0],
                        stop: grid[grid.len() - 1],
                        points: grid.len(),
                    });
                }
            }
            _ => {}
        }
        Ok(())
    }

    /// Every problem with the config, empty when it is runnable.
    pub fn violations(&self) -> Vec<String> {
        let mut out = Vec::new();
        let run = &self.run;
        if run.workers == 0 {
            out.push("run.workers must be at least 1".into());
        }
        if !(run.timeout_s > 0.0) || !run.timeout_s.is_finite() {
            out.push(format!("run.timeout_s = {} must be positive", run.timeout_s));
        }
        let core = |out: &mut Vec<String>, name: &str, r: spinbus_core::Result<()>| {
            if let Err(e) = r {
                out.push(format!("{name}: {e}"));
            }
        };
        let positive = |v: f64| v > 0.0;
        let non_negative = |v: f64| v >= 0.0;
        match &self.experiment {
            Experiment::EigenMap(e) => {
                core(&mut out, "system", e.system.validate());
                no_drive_amplitude(&e.system, &mut out);
                e.omega_r.check("omega_r", &mut out);
                e.omega_r.check_all("omega_r", &mut out, "positive", positive);
                e.delta_nu.check("delta_nu", &mut out);
            }
            Experiment::ShiftSweep(s) => {
                core(&mut out, "system", s.system.validate());
                no_drive_amplitude(&s.system, &mut out);
                s.lambda.check("lambda", &mut out);
                s.lambda.check_all("lambda", &mut out, ">= 0", non_negative);
                if s.simulated {
                    core(&mut out, "system.rates", SpectrumSettings::for_spec(&s.system).map(|_| ()));
                }
            }
            Experiment::ThresholdMap(t) => {
                let r = &t.readout;
                if !(r.omega_m > 0.0) {
                    out.push("readout.omega_m must be positive".into());
                }
                if r.n_fock < 2 {
                    out.push(format!("readout.n_fock = {} must be at least 2", r.n_fock));
                }
                core(&mut out, "readout.calibration", r.calibration.rates(0.0).map(|_| ()));
                if !(r.calibration.kappa > 0.0) {
                    out.push("readout.calibration.kappa must be positive".into());
                }
                t.detuning.check("detuning", &mut out);
                t.detuning.check_all("detuning", &mut out, "in (0, omega_m)", |d| d > 0.0 && d < r.omega_m);
                t.delta_nu.check("delta_nu", &mut out);
                t.n_th.check("n_th", &mut out);
                t.n_th.check_all("n_th", &mut out, ">= 0", non_negative);
                check_threshold(&t.threshold, &mut out);
            }
            Experiment::GateSweep(g) => {
                check_bus(&g.bus, &mut out);
                g.lambda.check("lambda", &mut out);
                g.lambda.check_all("lambda", &mut out, "positive", positive);
                match (&g.detuning, &g.ratio) {
                    (Some(d), None) => {
                        d.check("detuning", &mut out);
                        d.check_all("detuning", &mut out, "in (0, omega_m)", |v| v > 0.0 && v < g.bus.omega_m);
                    }
                    (None, Some(r)) => {
                        r.check("ratio", &mut out);
                        r.check_all("ratio", &mut out, "positive", positive);
                    }
                    _ => out.push("exactly one of detuning and ratio must be given".into()),
                }
                if !(g.gamma_pct >= 0.0) || !g.gamma_pct.is_finite() {
                    out.push(format!("gamma_pct = {} must be >= 0", g.gamma_pct));
                }
                check_gate_settings(&g.settings, &mut out);
            }
            Experiment::GammaSweep(g) => {
                check_bus(&g.bus, &mut out);
                if g.points.is_empty() {
                    out.push("points: list is empty".into());
                }
                for (k, p) in g.points.iter().enumerate() {
                    if !(p.lambda > 0.0) {
                        out.push(format!("points[{k}].lambda must be positive"));
                    }
                    if !(p.detuning > 0.0 && p.detuning < g.bus.omega_m) {
                        out.push(format!("points[{k}].detuning must lie in (0, omega_m)"));
                    }
                }
                g.gamma_pct.check("gamma_pct", &mut out);
                g.gamma_pct.check_all("gamma_pct", &mut out, ">= 0", non_negative);
                check_gate_settings(&g.settings, &mut out);
            }
            Experiment::DonorCoupling(d) => {
                if let SpeciesSource::Inline(s) = &d.species {
                    core(&mut out, "species", s.validate());
                }
                core(&mut out, "mode", d.mode.validate());
                if let Err(e) = d.profile.profile() {
                    out.push(format!("profile: {e}"));
                }
                d.distance.check("distance", &mut out);
                if let Ok(p) = d.profile.profile() {
                    let (lo, hi) = p.range();
                    d.distance.check_all("distance", &mut out, &format!("inside the profile range [{lo:e}, {hi:e}]"), |x| {
                        x >= lo && x <= hi
                    });
                }
                if !(d.frequency > 0.0) || !d.frequency.is_finite() {
                    out.push(format!("frequency = {} must be positive", d.frequency));
                }
                if !(d.b_max > 0.0) || !d.b_max.is_finite() {
                    out.push(format!("b_max = {} must be positive", d.b_max));
                }
                if d.ensemble == 0 {
                    out.push("ensemble must be at least 1".into());
                }
            }
            Experiment::Spectrum(s) => {
                core(&mut out, "system", s.system.validate());
                core(&mut out, "system.rates", SpectrumSettings::for_spec(&s.system).map(|_| ()));
                match &s.freqs {
                    Some(f) => {
                        f.check("freqs", &mut out);
                        f.check_all("freqs", &mut out, ">= 0", non_negative);
                    }
                    None => out.push("freqs: no default window without mechanical damping".into()),
                }
            }
        }
        out
    }

    /// Canonical TOML of everything that determines the results.
    pub fn canonical(&self) -> String {
        let c = Canonical {
            run: CanonicalRun {
                seed: self.run.seed,
                timeout_s: self.run.timeout_s,
            },
            experiment: &self.experiment,
        };
        toml::to_string(&c).expect("config serializes")
    }

    /// SHA-256 of the canonical config and the toolkit version, hex encoded.
    pub fn fingerprint(&self) -> String {
        let mut h = Sha256::new();
        h.update(crate::VERSION.as_bytes());
        h.update([0u8]);
        h.update(self.canonical().as_bytes());
        h.finalize().iter().map(|b| format!("{b:02x}")).collect()
    }
}

fn no_drive_amplitude(spec: &SystemSpec, out: &mut Vec<String>) {
    if spec.gamma_e_b1.is_some() {
        out.push("system.gamma_e_b1: set by the swept Rabi frequency; remove it".into());
    }
}

fn check_bus(bus: &BusTemplate, out: &mut Vec<String>) {
    if !(bus.omega_m > 0.0) {
        out.push("bus.omega_m must be positive".into());
    }
    if bus.n_fock < 2 {
        out.push(format!("bus.n_fock = {} must be at least 2", bus.n_fock));
    }
    if !(bus.n_th >= 0.0) || !bus.n_th.is_finite() {
        out.push(format!("bus.n_th = {} must be >= 0", bus.n_th));
    }
    if let Err(e) = bus.calibration.rates(bus.n_th.max(0.0)) {
        out.push(format!("bus.calibration: {e}"));
    }
}

fn check_gate_settings(s: &GateSettings, out: &mut Vec<String>) {
    if s.points < 3 {
        out.push(format!("settings.points = {} must be at least 3", s.points));
    }
    if !(s.span >= 2.0) {
        out.push(format!("settings.span = {} must be at least 2", s.span));
    }
}

fn check_threshold(s: &ThresholdSettings, out: &mut Vec<String>) {
    if !(s.target > 0.0) {
        out.push(format!("threshold.target = {} must be positive", s.target));
    }
    if !(s.log_tol > 0.0) {
        out.push(format!("threshold.log_tol = {} must be positive", s.log_tol));
    }
    if !(s.growth > 1.0) {
        out.push(format!("threshold.growth = {} must exceed 1", s.growth));
    }
    if s.max_evals == 0 {
        out.push("threshold.max_evals must be at least 1".into());
    }
}

/// Keys of `given` that did not survive deserialization.
fn unknown_keys(given: &toml::Value, resolved: &toml::Value, path: &str, out: &mut Vec<String>) {
    match (given, resolved) {
        (toml::Value::Table(g), toml::Value::Table(r)) => {
            for (key, value) in g {
                let here = if path.is_empty() { key.clone() } else { format!("{path}.{key}") };
                match r.get(key) {
                    Some(inner) => unknown_keys(value, inner, &here, out),
                    None => out.push(format!("unknown key `{here}`")),
                }
            }
        }
        (toml::Value::Array(g), toml::Value::Array(r)) => {
            for (k, (a, b)) in g.iter().zip(r).enumerate() {
                unknown_keys(a, b, &format!("{path}[{k}]"), out);
            }
        }
        _ => {}
    }
}
