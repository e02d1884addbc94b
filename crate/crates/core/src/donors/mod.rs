//! Donor spin physics: electron–nuclear spin spectra, transition gradients
//! and spin–phonon coupling strengths from field gradients, strain and
//! ensembles.
//!
//! Frequencies are in Hz, fields in T, gyromagnetic ratios in Hz/T.

mod profile;

use std::f64::consts::TAU;
use std::fmt;
use std::path::Path;

use ndarray::Array2;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::hilbert::{HilbertSpace, Operator};
use crate::linalg::{self, CMatrix, C64, ZERO};

pub use profile::{load_profile, parse_profile, FieldProfile, ProfileKind};

/// Reduced Planck constant [J·s].
pub const HBAR: f64 = 1.054_571_817e-34;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DonorSpecies {
    pub name: String,
    /// Electron gyromagnetic ratio [Hz/T].
    pub gamma_e: f64,
    /// Nuclear gyromagnetic ratio [Hz/T].
    pub gamma_n: f64,
    /// Nuclear spin quantum number.
    pub nuclear_spin: f64,
    /// Isotropic hyperfine constant [Hz].
    pub a_hf: f64,
    /// Linear strain shift of the spin resonance [Hz per unit strain].
    pub strain_coeff: f64,
}

impl DonorSpecies {
    pub fn validate(&self) -> Result<()> {
        if !(self.gamma_e > 0.0) || !self.gamma_e.is_finite() {
            return Err(invalid("gamma_e", format!("{} must be positive", self.gamma_e)));
        }
        let two_i = 2.0 * self.nuclear_spin;
        if !(self.nuclear_spin >= 0.0) || (two_i - two_i.round()).abs() > 1e-12 {
            return Err(invalid("I", format!("{} is not a non-negative half-integer", self.nuclear_spin)));
        }
        for (name, v) in [("gamma_n", self.gamma_n), ("A_hf", self.a_hf), ("strain_coeff", self.strain_coeff)] {
            if !v.is_finite() {
                return Err(invalid(name, "must be finite"));
            }
        }
        Ok(())
    }

    /// `2I`, exact.
    pub fn two_i(&self) -> usize {
        (2.0 * self.nuclear_spin).round() as usize
    }

    pub fn level_count(&self) -> usize {
        2 * (self.two_i() + 1)
    }

    /// Parse `key = value` lines; `#` starts a comment.
    pub fn parse(text: &str) -> Result<Self> {
        let mut name = None;
        let mut fields: [Option<f64>; 5] = [None; 5];
        const KEYS: [&str; 5] = ["gamma_e", "gamma_n", "I", "A_hf", "strain_coeff"];
        for (k, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let lineno = k + 1;
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| Error::Parse { line: lineno, reason: format!("expected key=value, got {line:?}") })?;
            let (key, value) = (key.trim(), value.trim());
            if key == "name" {
                name = Some(value.to_string());
                continue;
            }
            let slot = KEYS
                .iter()
                .position(|k| *k == key)
                .ok_or_else(|| Error::Parse { line: lineno, reason: format!("unknown key {key:?}") })?;
            let v = parse_number(value)
                .ok_or_else(|| Error::Parse { line: lineno, reason: format!("{key}: cannot read {value:?} as a number") })?;
            fields[slot] = Some(v);
        }
        let get = |i: usize| fields[i].ok_or_else(|| invalid(KEYS[i], "missing from species file"));
        let species = Self {
            name: name.ok_or_else(|| invalid("name", "missing from species file"))?,
            gamma_e: get(0)?,
            gamma_n: get(1)?,
            nuclear_spin: get(2)?,
            a_hf: get(3)?,
            strain_coeff: get(4)?,
        };
        species.validate()?;
        Ok(species)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::Io { path: path.display().to_string(), reason: e.to_string() })?;
        Self::parse(&text)
    }
}

/// Numbers with an optional `a/b` fraction form, e.g. `9/2`.
fn parse_number(s: &str) -> Option<f64> {
    match s.split_once('/') {
        Some((a, b)) => Some(a.trim().parse::<f64>().ok()? / b.trim().parse::<f64>().ok()?),
        None => s.parse().ok(),
    }
}

/// Spin-`j` matrices `(J_z, J_+)` with `m = j, j−1, …, −j`.
fn spin_matrices(two_j: usize) -> (CMatrix, CMatrix) {
    let n = two_j + 1;
    let j = two_j as f64 / 2.0;
    let m = |k: usize| j - k as f64;
    let jz = Array2::from_shape_fn((n, n), |(a, b)| if a == b { C64::new(m(a), 0.0) } else { ZERO });
    let jp = Array2::from_shape_fn((n, n), |(a, b)| {
        if a + 1 == b {
            C64::new((j * (j + 1.0) - m(b) * (m(b) + 1.0)).sqrt(), 0.0)
        } else {
            ZERO
        }
    });
    (jz, jp)
}

/// `A I·S + γ_e B S_z − γ_n B I_z` on `[electron 2, nucleus 2I+1]`, electron `↑` first.
pub fn spin_hamiltonian(species: &DonorSpecies, b: f64) -> Result<Operator> {
    species.validate()?;
    if !(b >= 0.0) || !b.is_finite() {
        return Err(invalid("B", format!("{b} must be a finite field >= 0")));
    }
    let (sz, sp) = spin_matrices(1);
    let (iz, ip) = spin_matrices(species.two_i());
    let ni = iz.nrows();
    let e2 = linalg::identity(2);
    let ei = linalg::identity(ni);
    let sm = linalg::dagger(&sp);
    let im = linalg::dagger(&ip);
    let a = species.a_hf;
    let mut h = linalg::kron(&sz, &iz).mapv(|z| z * a);
    h.scaled_add(C64::new(a / 2.0, 0.0), &linalg::kron(&sp, &im));
    h.scaled_add(C64::new(a / 2.0, 0.0), &linalg::kron(&sm, &ip));
    h.scaled_add(C64::new(species.gamma_e * b, 0.0), &linalg::kron(&sz, &ei));
    h.scaled_add(C64::new(-species.gamma_n * b, 0.0), &linalg::kron(&e2, &iz));
    Operator::new(HilbertSpace::new(vec![2, ni])?, h)
}

/// High-field quantum numbers of a level, as doubled integers.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct LevelLabel {
    /// `2·m_S`.
    pub two_ms: i32,
    /// `2·m_I`.
    pub two_mi: i32,
}

impl LevelLabel {
    pub fn two_mf(&self) -> i32 {
        self.two_ms + self.two_mi
    }
}

impl fmt::Display for LevelLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = if self.two_ms > 0 { "+1/2" } else { "-1/2" };
        write!(f, "|mS={s}, mI={}/2⟩", self.two_mi)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Level {
    pub energy: f64,
    pub label: LevelLabel,
}

/// Levels at field `b` in ascending energy.
///
/// `F_z = S_z + I_z` is conserved, so each `m_F` block (at most 2×2) is
/// diagonalized on its own. Within a block the upper state continues
/// adiabatically to `m_S = +½` at high field, which fixes the labels.
pub fn levels(species: &DonorSpecies, b: f64) -> Result<Vec<Level>> {
    let h = spin_hamiltonian(species, b)?;
    let h = h.matrix();
    let two_i = species.two_i() as i32;
    let ni = (two_i + 1) as usize;
    // Basis index e·ni + k has 2mS = 1 − 2e and 2mI = two_i − 2k.
    let label_of = |idx: usize| LevelLabel {
        two_ms: 1 - 2 * (idx / ni) as i32,
        two_mi: two_i - 2 * (idx % ni) as i32,
    };
    let mut out = Vec::with_capacity(2 * ni);
    let mut two_mf = -(two_i + 1);
    while two_mf <= two_i + 1 {
        let members: Vec<usize> = (0..2 * ni).filter(|&k| label_of(k).two_mf() == two_mf).collect();
        let block = Array2::from_shape_fn((members.len(), members.len()), |(p, q)| h[[members[p], members[q]]]);
        let values = linalg::eigvalsh(&block);
        let mut labels: Vec<LevelLabel> = members.iter().map(|&k| label_of(k)).collect();
        labels.sort_by_key(|l| l.two_ms);
        for (e, label) in values.iter().zip(labels) {
            out.push(Level { energy: *e, label });
        }
        two_mf += 2;
    }
    out.sort_by(|a, b| a.energy.total_cmp(&b.energy));
    Ok(out)
}

/// Pair of energy-ordered level indices at the queried field.
pub type Transition = (usize, usize);

fn gap_by_labels(species: &DonorSpecies, b: f64, pair: (LevelLabel, LevelLabel)) -> Result<f64> {
    let lv = levels(species, b)?;
    let find = |l: LevelLabel| lv.iter().find(|x| x.label == l).map(|x| x.energy).expect("every label occurs once");
    Ok(find(pair.1) - find(pair.0))
}

fn labels_of(species: &DonorSpecies, b: f64, t: Transition) -> Result<(LevelLabel, LevelLabel)> {
    let lv = levels(species, b)?;
    let n = lv.len();
    if t.0 >= n || t.1 >= n || t.0 == t.1 {
        return Err(invalid("transition", format!("{t:?} is not a pair of distinct levels among {n}")));
    }
    Ok((lv[t.0].label, lv[t.1].label))
}

/// Frequency `E_j − E_i` of transition `(i, j)` at field `b`.
pub fn transition_frequency(species: &DonorSpecies, b: f64, t: Transition) -> Result<f64> {
    let lv = levels(species, b)?;
    let n = lv.len();
    if t.0 >= n || t.1 >= n || t.0 == t.1 {
        return Err(invalid("transition", format!("{t:?} is not a pair of distinct levels among {n}")));
    }
    Ok(lv[t.1].energy - lv[t.0].energy)
}

/// `d(E_j − E_i)/dB` by a centred difference with `h = max(1e-6 T, 1e-6·B)`,
/// Richardson-refined once.
pub fn transition_gradient(species: &DonorSpecies, b: f64, t: Transition) -> Result<f64> {
    if !(b > 0.0) || !b.is_finite() {
        return Err(invalid("B", format!("{b} must be a positive field")));
    }
    let pair = labels_of(species, b, t)?;
    let h = (1e-6f64).max(1e-6 * b);
    if b - h <= 0.0 {
        return Err(Error::Stencil { field: b });
    }
    for x in [b - h, b - h / 2.0, b + h / 2.0, b + h] {
        if labels_of(species, x, t)? != pair {
            return Err(Error::Stencil { field: b });
        }
    }
    let f = |x: f64| gap_by_labels(species, x, pair);
    let coarse = (f(b + h)? - f(b - h)?) / (2.0 * h);
    let fine = (f(b + h / 2.0)? - f(b - h / 2.0)?) / h;
    Ok((4.0 * fine - coarse) / 3.0)
}

/// An electron-spin-resonance line crossing a fixed drive frequency.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Resonance {
    pub field: f64,
    pub transition: Transition,
    pub lower: LevelLabel,
    pub upper: LevelLabel,
}

/// Fields in `(0, b_max]` where an ESR-allowed line (`Δm_S = ±1`, `Δm_I = 0`
/// in the high-field labels) matches `freq`, sorted by field.
pub fn esr_resonances(species: &DonorSpecies, freq: f64, b_max: f64) -> Result<Vec<Resonance>> {
    species.validate()?;
    if !(freq > 0.0) || !(b_max > 0.0) {
        return Err(invalid("freq", "frequency and field range must be positive"));
    }
    let two_i = species.two_i() as i32;
    let lines: Vec<(LevelLabel, LevelLabel)> = (0..=two_i)
        .map(|k| {
            let two_mi = two_i - 2 * k;
            (LevelLabel { two_ms: -1, two_mi }, LevelLabel { two_ms: 1, two_mi })
        })
        .collect();
    let scan = 2000;
    let fields: Vec<f64> = (1..=scan).map(|k| b_max * k as f64 / scan as f64).collect();
    let mut found = Vec::new();
    for pair in lines {
        let g = |x: f64| -> Result<f64> { Ok(gap_by_labels(species, x, pair)?.abs() - freq) };
        let mut prev = (0.0, g(0.0)?);
        for &x in &fields {
            let cur = (x, g(x)?);
            if prev.1 == 0.0 && prev.0 > 0.0 {
                found.push((prev.0, pair));
            } else if prev.1 * cur.1 < 0.0 {
                let (mut lo, mut hi) = (prev, cur);
                for _ in 0..200 {
                    let mid = 0.5 * (lo.0 + hi.0);
                    let gm = g(mid)?;
                    if gm == 0.0 || hi.0 - lo.0 <= 1e-15 * mid {
                        lo = (mid, gm);
                        break;
                    }
                    if lo.1 * gm < 0.0 {
                        hi = (mid, gm);
                    } else {
                        lo = (mid, gm);
                    }
                }
                found.push((lo.0, pair));
            }
            prev = cur;
        }
    }
    found.sort_by(|a, b| a.0.total_cmp(&b.0));
    found
        .into_iter()
        .map(|(field, (down, up))| {
            let lv = levels(species, field)?;
            let pos = |l: LevelLabel| lv.iter().position(|x| x.label == l).expect("every label occurs once");
            let (i, j) = (pos(down), pos(up));
            let (lower, upper) = if lv[i].energy <= lv[j].energy { (down, up) } else { (up, down) };
            Ok(Resonance {
                field,
                transition: (i.min(j), i.max(j)),
                lower,
                upper,
            })
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MechanicalMode {
    /// Zero-point displacement [m].
    pub x_zpf: f64,
    /// Mode frequency [Hz].
    pub omega_m: f64,
    /// Effective mass [kg].
    #[serde(default)]
    pub m_eff: Option<f64>,
}

/// `√(ħ / 2 m ω)` with `ω = 2π·omega_m`.
pub fn zero_point_displacement(m_eff: f64, omega_m: f64) -> f64 {
    (HBAR / (2.0 * m_eff * TAU * omega_m)).sqrt()
}

impl MechanicalMode {
    pub fn new(x_zpf: f64, omega_m: f64) -> Result<Self> {
        let mode = Self { x_zpf, omega_m, m_eff: None };
        mode.validate()?;
        Ok(mode)
    }

    pub fn from_mass(m_eff: f64, omega_m: f64) -> Result<Self> {
        if !(m_eff > 0.0) || !(omega_m > 0.0) {
            return Err(invalid("m_eff", "mass and frequency must be positive"));
        }
        Ok(Self {
            x_zpf: zero_point_displacement(m_eff, omega_m),
            omega_m,
            m_eff: Some(m_eff),
        })
    }

    /// Positive `x_zpf`; when the mass is given as well, the three must agree within 5%.
    pub fn validate(&self) -> Result<()> {
        if !(self.x_zpf > 0.0) || !self.x_zpf.is_finite() {
            return Err(invalid("x_zpf", format!("{} must be positive", self.x_zpf)));
        }
        if let Some(m) = self.m_eff {
            if !(m > 0.0) || !(self.omega_m > 0.0) {
                return Err(invalid("m_eff", "mass and frequency must be positive"));
            }
            let implied = zero_point_displacement(m, self.omega_m);
            if (implied / self.x_zpf - 1.0).abs() > 0.05 {
                return Err(invalid(
                    "x_zpf",
                    format!("{:e} m disagrees with {implied:e} m implied by m_eff and omega_m", self.x_zpf),
                ));
            }
        }
        Ok(())
    }
}

/// `λ = (df/dB) · ∇B · x_zpf` for the given transition at the bias field.
pub fn gradient_coupling(
    species: &DonorSpecies,
    mode: &MechanicalMode,
    grad_b: f64,
    b_bias: f64,
    transition: Transition,
) -> Result<f64> {
    mode.validate()?;
    if !(grad_b >= 0.0) || !grad_b.is_finite() {
        return Err(invalid("grad_b", format!("{grad_b} must be a finite gradient >= 0")));
    }
    Ok(transition_gradient(species, b_bias, transition)? * grad_b * mode.x_zpf)
}

/// `λ = (df/dε) · ε_zpf`.
pub fn strain_coupling(species: &DonorSpecies, strain_per_zpf: f64) -> Result<f64> {
    if !strain_per_zpf.is_finite() {
        return Err(invalid("strain_per_zpf", "must be finite"));
    }
    Ok(species.strain_coeff * strain_per_zpf)
}

/// Collective coupling `√n · λ₁` of `n` identical spins.
pub fn ensemble_coupling(lambda_1: f64, n: u64) -> Result<f64> {
    if n == 0 {
        return Err(invalid("n", "ensemble needs at least one spin"));
    }
    Ok((n as f64).sqrt() * lambda_1)
}

/// Coupling of a donor at `distance` on a tabulated profile: gradient
/// profiles go through [`gradient_coupling`], strain profiles through
/// [`strain_coupling`].
pub fn profile_coupling(
    species: &DonorSpecies,
    mode: &MechanicalMode,
    profile: &FieldProfile,
    distance: f64,
    b_bias: f64,
    transition: Transition,
) -> Result<f64> {
    let v = profile.interp(distance)?;
    match profile.kind {
        ProfileKind::Gradient => gradient_coupling(species, mode, v, b_bias, transition),
        ProfileKind::Strain => strain_coupling(species, v),
    }
}

#[cfg(test)]
mod tests;
