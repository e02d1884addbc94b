//! Readout observables: symmetrized displacement spectra, fitted mechanical
//! frequency shifts, eigenvalue shift maps, the dispersive closed form and the
//! readout-threshold search.
//!
//! All frequencies are in Hz. Spectra are computed from models built by
//! [`LindbladModel::qubit_oscillator`], whose generator is in rad/s, so the
//! transform kernel is `exp(i·2πf·τ)`.

mod fit;
mod threshold;

use std::f64::consts::{PI, TAU};

use ndarray::Array1;
use serde::{Deserialize, Serialize};

pub use fit::{fit_peak, peak_positions, PeakFit, PEAK_FLOOR};
pub use threshold::{find_threshold, threshold_point, threshold_sweep, ThresholdPoint, ThresholdResult, ThresholdSettings};

use crate::dynamics::{propagate_many, LindbladModel, SolverControls};
use crate::error::{invalid, Error, Result};
use crate::hilbert::{tensor_states, thermal_state, Operator, State};
use crate::linalg::{self, CMatrix, C64, ZERO};
use crate::models::{build_qm_dressed, SystemSpec};

/// Tail amplitude, relative to `|C(0)|`, above which the window is rejected.
pub const TAIL_LIMIT: f64 = 1e-3;
/// Window length in units of the slowest amplitude decay time.
pub const WINDOW_DECAY_TIMES: f64 = 10.0;
/// Apodization width as a fraction of the mechanical linewidth.
pub const APODIZATION_FRACTION: f64 = 1.0 / 20.0;

/// Symmetrized spectral density on a frequency grid.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Spectrum {
    /// Frequencies [Hz].
    pub freqs: Vec<f64>,
    pub values: Vec<f64>,
    /// Correlation window length [s].
    pub window: f64,
    /// Correlation sample step [s].
    pub sample_step: f64,
    /// Lorentzian FWHM [Hz] added by the exponential apodization.
    pub apodization: f64,
}

impl Spectrum {
    /// Grid spacing; the largest gap for non-uniform grids.
    pub fn resolution(&self) -> f64 {
        self.freqs.windows(2).map(|w| w[1] - w[0]).fold(0.0, f64::max)
    }
}

/// Window and resolution settings for [`spectral_density`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SpectrumSettings {
    /// Mechanical FWHM [Hz]; the grid must resolve a tenth of it.
    pub linewidth: f64,
    /// Correlation window [s].
    pub window: f64,
    /// Apodization FWHM [Hz].
    pub apodization: f64,
    pub tail_limit: f64,
}

impl SpectrumSettings {
    /// Window of ten decay times of the slowest decaying coherence, with the
    /// mechanical and qubit amplitude decay rates taken from the spec's rates.
    pub fn for_spec(spec: &SystemSpec) -> Result<Self> {
        let r = &spec.rates;
        let linewidth = r.kappa_down - r.kappa_up;
        if !(linewidth > 0.0) {
            return Err(invalid("rates", "spectra need a damped oscillator (kappa_down > kappa_up)"));
        }
        let mech = PI * linewidth;
        let qubit = PI * (r.gamma_down + r.gamma_up) + 4.0 * PI * r.gamma_phi;
        let slowest = if qubit > 0.0 { mech.min(qubit) } else { mech };
        Ok(Self {
            linewidth,
            window: WINDOW_DECAY_TIMES / slowest,
            apodization: APODIZATION_FRACTION * linewidth,
            tail_limit: TAIL_LIMIT,
        })
    }
}

/// Highest frequency [Hz] carried by `⟨X(τ)X(0)⟩`: the largest eigenvalue
/// difference with a non-negligible position matrix element.
fn content_bandwidth(model: &LindbladModel, x: &Operator) -> f64 {
    let (energies, vectors) = linalg::eigh(model.hamiltonian().matrix());
    let xe = linalg::dagger(&vectors).dot(x.matrix()).dot(&vectors);
    let top = linalg::max_abs(&xe);
    let mut f = 0.0_f64;
    for ((i, j), z) in xe.indexed_iter() {
        if z.norm() > 1e-3 * top {
            f = f.max((energies[i] - energies[j]).abs() / TAU);
        }
    }
    f
}

/// Symmetrized spectrum `S̄(f) = 2∫₀^T e^{−πΓτ} Re C(τ) cos(2πfτ) dτ` of the
/// connected position correlator `C(τ) = ⟨X(τ)X(0)⟩ − ⟨X(τ)⟩⟨X(0)⟩`, with the
/// oscillator taken to be the last subsystem of the model.
pub fn spectral_density(
    model: &LindbladModel,
    rho0: &State,
    freqs: &[f64],
    settings: &SpectrumSettings,
    controls: &SolverControls,
) -> Result<Spectrum> {
    if freqs.len() < 2 {
        return Err(invalid("freqs", "need at least two grid points"));
    }
    if freqs.windows(2).any(|w| !(w[1] > w[0])) {
        return Err(invalid("freqs", "grid must be strictly increasing"));
    }
    let step = freqs.windows(2).map(|w| w[1] - w[0]).fold(0.0, f64::max);
    if step > settings.linewidth / 10.0 {
        return Err(invalid(
            "freqs",
            format!("grid spacing {step} Hz exceeds a tenth of the linewidth {} Hz", settings.linewidth),
        ));
    }
    if !(settings.window > 0.0) || !(settings.apodization >= 0.0) {
        return Err(invalid("settings", "window must be positive and apodization non-negative"));
    }
    if rho0.space() != model.space() {
        return Err(Error::Dimension("initial state and model live on different spaces".into()));
    }

    let space = model.space();
    let site = space.n_subsystems() - 1;
    let x = crate::hilbert::fock_position(space.dims()[site])?.embed(space, site)?;

    let f_grid = freqs.iter().fold(0.0_f64, |m, f| m.max(f.abs()));
    let f_content = content_bandwidth(model, &x);
    // Every alias of the content lands above the grid.
    let rate = 1.1 * (f_content + f_grid);
    let n = (settings.window * rate).ceil() as usize;
    let dt = settings.window / n as f64;
    let taus: Vec<f64> = (0..=n).map(|k| k as f64 * dt).collect();

    let correlator = connected_correlation(model, rho0, &x, &taus, controls)?;

    let c0 = correlator[0].norm();
    let tail_start = n - n / 20;
    let tail = correlator[tail_start..].iter().fold(0.0_f64, |m, c| m.max(c.norm()));
    if !(c0 > 0.0) || tail > settings.tail_limit * c0 {
        return Err(Error::WindowTooShort {
            tail: if c0 > 0.0 { tail / c0 } else { f64::INFINITY },
            limit: settings.tail_limit,
        });
    }

    let weighted: Vec<f64> = correlator
        .iter()
        .zip(&taus)
        .enumerate()
        .map(|(k, (c, t))| {
            let w = if k == 0 || k == n { 0.5 } else { 1.0 };
            2.0 * dt * w * (-PI * settings.apodization * t).exp() * c.re
        })
        .collect();
    let values = freqs
        .iter()
        .map(|f| cosine_sum(&weighted, TAU * f * dt))
        .collect();

    Ok(Spectrum {
        freqs: freqs.to_vec(),
        values,
        window: settings.window,
        sample_step: dt,
        apodization: settings.apodization,
    })
}

/// `Σ_k w_k cos(kθ)` by a rotating phasor, renormalized periodically.
fn cosine_sum(weights: &[f64], theta: f64) -> f64 {
    let step = C64::from_polar(1.0, theta);
    let mut z = C64::new(1.0, 0.0);
    let mut acc = 0.0;
    for (k, w) in weights.iter().enumerate() {
        if k % 64 == 0 {
            z = C64::from_polar(1.0, theta * k as f64);
        }
        acc += w * z.re;
        z *= step;
    }
    acc
}

fn connected_correlation(
    model: &LindbladModel,
    rho0: &State,
    x: &Operator,
    taus: &[f64],
    controls: &SolverControls,
) -> Result<Vec<C64>> {
    let xm = x.matrix();
    let mean0 = linalg::trace_product(xm, rho0.rho());
    let scale = linalg::trace_product(&xm.dot(xm), rho0.rho()).norm().sqrt();
    let connected = mean0.norm() > 1e-12 * scale.max(f64::MIN_POSITIVE);
    let mut inits: Vec<CMatrix> = vec![xm.dot(rho0.rho())];
    if connected {
        inits.push(rho0.rho().clone());
    }
    let mut out = vec![ZERO; taus.len()];
    propagate_many(model, &inits, taus, controls, |k, c, m| {
        let v = linalg::trace_product(xm, m);
        if c == 0 {
            out[k] += v;
        } else {
            out[k] -= v * mean0;
        }
        Ok(())
    })?;
    Ok(out)
}

/// Which dressed qubit eigenstate the readout starts from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Branch {
    Up,
    Down,
}

/// Eigenvector of the dressed qubit Hamiltonian `(Ω_R σz + Δν σx)/2` for the
/// requested branch.
pub fn dressed_qubit_state(spec: &SystemSpec, branch: Branch) -> Result<[C64; 2]> {
    let h = ndarray::arr2(&[
        [C64::new(spec.omega_r, 0.0), C64::new(spec.delta_nu, 0.0)],
        [C64::new(spec.delta_nu, 0.0), C64::new(-spec.omega_r, 0.0)],
    ]);
    if spec.omega_r == 0.0 && spec.delta_nu == 0.0 {
        return Err(Error::Labeling("dressed qubit levels are degenerate".into()));
    }
    let (_, v) = linalg::eigh(&h);
    let col = match branch {
        Branch::Up => 1,
        Branch::Down => 0,
    };
    Ok([v[[0, col]], v[[1, col]]])
}

/// Spectrum, fit and shift from one simulated readout.
#[derive(Debug, Clone, PartialEq)]
pub struct ShiftMeasurement {
    pub shift: f64,
    pub fit: PeakFit,
    pub spectrum: Spectrum,
}

/// Frequency grid around `ω_m` used by [`simulated_shift`]: half-way to the
/// dressed qubit, capped for large detunings, in steps of a twentieth of the
/// linewidth.
pub fn shift_grid(spec: &SystemSpec, linewidth: f64) -> Vec<f64> {
    let qubit = spec.omega_r.hypot(spec.delta_nu);
    let detuning = (qubit - spec.omega_m).abs();
    let chi = if detuning > 0.0 {
        spec.lambda * spec.lambda / (4.0 * detuning)
    } else {
        f64::INFINITY
    };
    let half = (0.5 * detuning).min(20.0 * linewidth + 4.0 * chi);
    let step = linewidth / 20.0;
    let n = (half / step).floor() as i64;
    (-n..=n).map(|k| spec.omega_m + k as f64 * step).collect()
}

/// Fitted shift of the mechanical-like peak with the qubit prepared in the
/// given dressed eigenstate and the oscillator in its thermal state.
pub fn simulated_shift_with(spec: &SystemSpec, branch: Branch, controls: &SolverControls) -> Result<ShiftMeasurement> {
    let model = LindbladModel::qubit_oscillator(spec)?;
    let settings = SpectrumSettings::for_spec(spec)?;
    let psi = dressed_qubit_state(spec, branch)?;
    let qubit = State::pure(crate::HilbertSpace::single(2)?, &psi)?;
    let bath = thermal_state(spec.n_fock, spec.n_th)?;
    let rho0 = tensor_states(&[&qubit, &bath])?;
    let freqs = shift_grid(spec, settings.linewidth);
    if freqs.len() < 5 {
        return Err(Error::AmbiguousPeak(format!(
            "qubit within {} Hz of the mechanical mode leaves no room for a search window",
            (spec.omega_r.hypot(spec.delta_nu) - spec.omega_m).abs()
        )));
    }
    let spectrum = spectral_density(&model, &rho0, &freqs, &settings, controls)?;
    let window = (freqs[0], freqs[freqs.len() - 1]);
    let fit = match fit_peak(&spectrum, window) {
        Err(Error::AmbiguousPeak(reason)) => match branch_window(spec, branch, &spectrum, window) {
            Some(side) => fit_peak(&spectrum, side)?,
            None => return Err(Error::AmbiguousPeak(reason)),
        },
        other => other?,
    };
    Ok(ShiftMeasurement {
        shift: fit.center - spec.omega_m,
        fit,
        spectrum,
    })
}

/// Search window holding only the prepared branch's peak when the two
/// branch pulls are resolved: the side of `ω_m` the branch is pulled to, cut
/// at the lowest point between its peak and the nearest peak beyond `ω_m`.
fn branch_window(spec: &SystemSpec, branch: Branch, spectrum: &Spectrum, window: (f64, f64)) -> Option<(f64, f64)> {
    let qubit = spec.omega_r.hypot(spec.delta_nu);
    let up_sign = (qubit - spec.omega_m).signum();
    let sign = match branch {
        Branch::Up => up_sign,
        Branch::Down => -up_sign,
    };
    let peaks = peak_positions(spectrum, window);
    let own: Vec<f64> = peaks.iter().copied().filter(|f| (f - spec.omega_m) * sign > 0.0).collect();
    let other = peaks
        .iter()
        .copied()
        .filter(|f| (f - spec.omega_m) * sign <= 0.0)
        .min_by(|a, b| (a - spec.omega_m).abs().total_cmp(&(b - spec.omega_m).abs()))?;
    let [mine] = own.as_slice() else { return None };
    let (a, b) = if mine < &other { (*mine, other) } else { (other, *mine) };
    let valley = spectrum
        .freqs
        .iter()
        .zip(&spectrum.values)
        .filter(|(f, _)| **f > a && **f < b)
        .min_by(|x, y| x.1.total_cmp(y.1))
        .map(|(f, _)| *f)?;
    Some(if sign < 0.0 { (window.0, valley) } else { (valley, window.1) })
}

pub fn simulated_shift(spec: &SystemSpec, branch: Branch) -> Result<f64> {
    Ok(simulated_shift_with(spec, branch, &SolverControls::default())?.shift)
}

/// Dispersive closed form `λ²Ω_R / (2(ω_m² − Ω_R²))`.
pub fn analytic_shift(lambda: f64, omega_r: f64, omega_m: f64) -> Result<f64> {
    let den = 2.0 * (omega_m * omega_m - omega_r * omega_r);
    if den == 0.0 {
        return Err(Error::Divergence(format!("qubit at Rabi frequency {omega_r} resonant with the oscillator")));
    }
    Ok(lambda * lambda * omega_r / den)
}

/// Mechanical transition pull `E(b,1) − E(b,0) − ω_m` for branch `b` at a
/// given Fock truncation.
fn branch_pull(spec: &SystemSpec, branch: Branch, n_fock: usize) -> Result<f64> {
    let mut spec = spec.clone();
    spec.n_fock = n_fock;
    let h = build_qm_dressed(&spec)?;
    let (energies, vectors) = linalg::eigh(h.matrix());
    let psi = dressed_qubit_state(&spec, branch)?;
    let mut picked = [0usize; 2];
    for (slot, n) in [0usize, 1].into_iter().enumerate() {
        let mut product = Array1::from_elem(h.dim(), ZERO);
        product[n] = psi[0];
        product[n_fock + n] = psi[1];
        let (best, overlap) = (0..h.dim())
            .map(|k| {
                let o: C64 = vectors.column(k).iter().zip(product.iter()).map(|(v, p)| v.conj() * p).sum();
                (k, o.norm_sqr())
            })
            .fold((0, -1.0), |acc, cur| if cur.1 > acc.1 { cur } else { acc });
        // An even split is as ambiguous as a minority overlap.
        if overlap < 0.5 + 1e-6 {
            return Err(Error::Labeling(format!(
                "largest overlap with the |{branch:?}, {n}> product state is {overlap:.3}"
            )));
        }
        picked[slot] = best;
    }
    if picked[0] == picked[1] {
        return Err(Error::Labeling("both Fock labels map to one eigenstate".into()));
    }
    Ok(energies[picked[1]] - energies[picked[0]] - spec.omega_m)
}

/// Pull of branch `b` after checking that doubling the Fock truncation
/// changes it by less than 1%.
pub fn eigen_shift_branch(spec: &SystemSpec, branch: Branch) -> Result<f64> {
    spec.validate()?;
    let coarse = branch_pull(spec, branch, spec.n_fock)?;
    let fine = branch_pull(spec, branch, 2 * spec.n_fock)?;
    let slack = 0.01 * fine.abs() + 1e-12 * spec.omega_m.max(1.0);
    if (coarse - fine).abs() > slack {
        return Err(Error::NotConverged(format!(
            "pull {coarse} Hz at {} levels vs {fine} Hz at {}",
            spec.n_fock,
            2 * spec.n_fock
        )));
    }
    Ok(coarse)
}

/// Upper-branch mechanical pull from exact diagonalization of the dressed
/// Hamiltonian. The lower branch pulls the opposite way, so the up/down
/// splitting is twice this value.
pub fn eigen_shift(spec: &SystemSpec) -> Result<f64> {
    eigen_shift_branch(spec, Branch::Up)
}

#[cfg(test)]
mod tests;
