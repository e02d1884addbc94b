//! Two-qubit gate characterization: channels from the bus dynamics, Kraus
//! extraction, average fidelity to √iSWAP and time/parameter searches.

mod channel;

use std::f64::consts::TAU;

use ndarray::Array2;
use serde::{Deserialize, Serialize};

pub use channel::{
    avg_gate_fidelity, choi_from_kraus, compensated_fidelity, kraus_from_choi, sqrt_iswap, z_rotation, PhaseCompensation,
    QuantumChannel, CHOI_HERMITIAN_TOL, CP_TOL, KRAUS_CUTOFF, TP_TOL,
};

use crate::dynamics::{propagate_many, LindbladModel, SolverControls};
use crate::error::{invalid, Error, Result};
use crate::hilbert::thermal_state;
use crate::linalg::{CMatrix, C64};
use crate::models::TwoQubitSpec;

/// Ancilla isolation tolerance on the reference marginal.
pub const ANCILLA_TOL: f64 = 1e-8;

/// Smallest Fock truncation for gate runs at thermal occupation `n_th`.
pub fn gate_fock_levels(n_th: f64) -> usize {
    (4.0 * n_th).ceil() as usize + 6
}

/// Choi blocks `E_ij ⊗ ρ_th` for `i ≤ j`; the others follow by conjugation.
fn choi_inputs(spec: &TwoQubitSpec) -> Result<(Vec<(usize, usize)>, Vec<CMatrix>)> {
    let n = spec.n_fock;
    let d = 4usize;
    let bath = thermal_state(n, spec.n_th)?;
    let pairs: Vec<(usize, usize)> = (0..d).flat_map(|i| (i..d).map(move |j| (i, j))).collect();
    let inits = pairs
        .iter()
        .map(|&(i, j)| {
            let mut m = Array2::zeros((d * n, d * n));
            for a in 0..n {
                for b in 0..n {
                    m[[i * n + a, j * n + b]] = bath.rho()[[a, b]];
                }
            }
            m
        })
        .collect();
    Ok((pairs, inits))
}

struct Evolution {
    channels: Vec<QuantumChannel>,
    /// Full qubit–oscillator operators per time, kept on request.
    states: Vec<Vec<CMatrix>>,
}

fn evolve_channels(
    model: &LindbladModel,
    n: usize,
    pairs: &[(usize, usize)],
    inits: &[CMatrix],
    times: &[f64],
    controls: &SolverControls,
    keep: bool,
) -> Result<Evolution> {
    let d = 4usize;
    let mut chois = vec![Array2::<C64>::zeros((d * d, d * d)); times.len()];
    let mut states = if keep { vec![Vec::with_capacity(inits.len()); times.len()] } else { Vec::new() };
    propagate_many(model, inits, times, controls, |k, c, rho| {
        let (i, j) = pairs[c];
        let choi = &mut chois[k];
        for a in 0..d {
            for b in 0..d {
                let block: C64 = (0..n).map(|m| rho[[a * n + m, b * n + m]]).sum();
                choi[[i * d + a, j * d + b]] = block;
                if i != j {
                    choi[[j * d + b, i * d + a]] = block.conj();
                }
            }
        }
        if keep {
            states[k].push(rho.clone());
        }
        Ok(())
    })?;

    let channels = chois
        .into_iter()
        .zip(times)
        .map(|(choi, t)| {
            let channel = QuantumChannel::from_choi(d, choi)
                .map_err(|e| Error::NumericalIntegrity(format!("channel at t = {t:e}: {e}")))?;
            let marginal = channel.input_marginal();
            let defect = crate::linalg::max_abs(&(marginal - crate::linalg::identity(d).mapv(|z| z / d as f64)));
            if defect > ANCILLA_TOL {
                return Err(Error::NumericalIntegrity(format!(
                    "ancilla marginal departs from maximally mixed by {defect:e} at t = {t:e}"
                )));
            }
            Ok(channel)
        })
        .collect::<Result<_>>()?;
    Ok(Evolution { channels, states })
}

/// Channels of the two-qubit bus at each time of `times`, with the
/// oscillator starting thermal and traced out at the end.
///
/// Equivalent to evolving two maximally entangled ancilla–qubit pairs with
/// idle ancillas: each Choi block `Φ(|i⟩⟨j|)` is propagated directly.
pub fn channels_on_grid(spec: &TwoQubitSpec, times: &[f64], controls: &SolverControls) -> Result<Vec<QuantumChannel>> {
    let model = LindbladModel::two_qubit(spec)?;
    let (pairs, inits) = choi_inputs(spec)?;
    Ok(evolve_channels(&model, spec.n_fock, &pairs, &inits, times, controls, false)?.channels)
}

pub fn choi_from_dynamics(spec: &TwoQubitSpec, t: f64) -> Result<QuantumChannel> {
    let mut out = channels_on_grid(spec, &[t], &SolverControls::default())?;
    Ok(out.pop().expect("one time point"))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GateSettings {
    /// Points on the coarse time grid.
    pub points: usize,
    /// Coarse grid end in units of the dispersive gate time.
    pub span: f64,
    /// Points on the refined grid between the neighbours of the coarse optimum.
    pub refine_points: usize,
    /// Optimize the local z-phase pair before scoring.
    pub compensate: bool,
}

impl Default for GateSettings {
    fn default() -> Self {
        Self {
            points: 200,
            span: 2.5,
            refine_points: 41,
            compensate: true,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GateResult {
    /// Score used for the search: compensated if enabled, raw otherwise.
    pub fidelity: f64,
    pub fidelity_compensated: f64,
    pub fidelity_uncompensated: f64,
    pub optimal_time: f64,
    pub phases: (f64, f64),
    pub lambda: f64,
    /// `|Ω_R − ω_m|` of the first qubit [Hz].
    pub detuning: f64,
    pub delta_nu: f64,
    pub n_th: f64,
    /// Decay-rate prefactor in percent of the standard rates.
    pub gamma_pct: f64,
    /// The optimum sits on the last coarse grid point.
    pub at_boundary: bool,
}

/// Uniform grid `(0, span·t*]` with `points` entries.
pub fn default_time_grid(spec: &TwoQubitSpec, settings: &GateSettings) -> Result<Vec<f64>> {
    let t_star = spec.dispersive_gate_time()?;
    if settings.points < 3 {
        return Err(invalid("points", "need at least three grid points"));
    }
    let end = settings.span * t_star;
    Ok((1..=settings.points).map(|k| end * k as f64 / settings.points as f64).collect())
}

fn score(channel: &QuantumChannel, target: &CMatrix) -> Result<(f64, f64, (f64, f64))> {
    let raw = avg_gate_fidelity(channel, target)?;
    let comp = compensated_fidelity(channel, target)?;
    Ok((raw, comp.fidelity, comp.phases))
}

/// Best fidelity to √iSWAP over `time_grid`, refined once around the
/// optimum. `gamma_pct` is only recorded.
pub fn optimal_gate_search(
    spec: &TwoQubitSpec,
    time_grid: &[f64],
    gamma_pct: f64,
    settings: &GateSettings,
    controls: &SolverControls,
) -> Result<GateResult> {
    let t_star = spec.dispersive_gate_time()?;
    let end = time_grid.last().copied().unwrap_or(0.0);
    if end < 2.0 * t_star * (1.0 - 1e-12) {
        return Err(Error::Precondition(format!(
            "time grid ends at {end:e} s, below twice the dispersive gate time {t_star:e} s"
        )));
    }
    let target = sqrt_iswap();
    let pick = |s: &(f64, f64, (f64, f64))| if settings.compensate { s.1 } else { s.0 };

    let model = LindbladModel::two_qubit(spec)?;
    let (pairs, inits) = choi_inputs(spec)?;
    let refine = settings.refine_points >= 3;
    let coarse = evolve_channels(&model, spec.n_fock, &pairs, &inits, time_grid, controls, refine)?;
    let scores: Vec<_> = coarse.channels.iter().map(|c| score(c, &target)).collect::<Result<_>>()?;
    let k = (0..scores.len())
        .max_by(|&a, &b| pick(&scores[a]).total_cmp(&pick(&scores[b])))
        .expect("non-empty grid");
    let at_boundary = k + 1 == time_grid.len();
    let mut best = (time_grid[k], scores[k]);

    if refine {
        // Restart from the stored neighbour so the fine grid has a single step.
        let (lo, start) = if k == 0 { (0.0, &inits) } else { (time_grid[k - 1], &coarse.states[k - 1]) };
        let hi = time_grid[(k + 1).min(time_grid.len() - 1)];
        if hi > lo {
            let steps = settings.refine_points - 1;
            let offsets: Vec<f64> = (1..=steps).map(|q| (hi - lo) * q as f64 / steps as f64).collect();
            let fine = evolve_channels(&model, spec.n_fock, &pairs, start, &offsets, controls, false)?;
            for (dt, channel) in offsets.iter().zip(&fine.channels) {
                let s = score(channel, &target)?;
                if pick(&s) > pick(&best.1) {
                    best = (lo + dt, s);
                }
            }
        }
    }

    let (t, (raw, comp, phases)) = best;
    let q = &spec.qubits[0];
    Ok(GateResult {
        fidelity: if settings.compensate { comp } else { raw },
        fidelity_compensated: comp,
        fidelity_uncompensated: raw,
        optimal_time: t,
        phases,
        lambda: q.lambda,
        detuning: (q.omega_r - spec.omega_m).abs(),
        delta_nu: q.delta_nu,
        n_th: spec.n_th,
        gamma_pct,
        at_boundary,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct GatePoint {
    pub lambda: f64,
    pub detuning: f64,
    pub outcome: Result<GateResult>,
}

/// Spec for one sweep point: both qubits at `Ω_R = ω_m − detuning` with
/// coupling `lambda`, all rates multiplied by `gamma_pct / 100`.
pub fn sweep_spec(template: &TwoQubitSpec, lambda: f64, detuning: f64, gamma_pct: f64) -> TwoQubitSpec {
    let mut spec = template.with_rates_scaled(gamma_pct / 100.0);
    for q in &mut spec.qubits {
        q.lambda = lambda;
        q.omega_r = template.omega_m - detuning;
    }
    spec
}

pub fn gate_point(
    template: &TwoQubitSpec,
    lambda: f64,
    detuning: f64,
    gamma_pct: f64,
    settings: &GateSettings,
    controls: &SolverControls,
) -> GatePoint {
    let outcome = (|| {
        if !(gamma_pct >= 0.0) {
            return Err(invalid("gamma_pct", format!("{gamma_pct} must be >= 0")));
        }
        if !(detuning > 0.0) || detuning >= template.omega_m {
            return Err(invalid("detuning", format!("{detuning} must lie in (0, omega_m)")));
        }
        let spec = sweep_spec(template, lambda, detuning, gamma_pct);
        let grid = default_time_grid(&spec, settings)?;
        optimal_gate_search(&spec, &grid, gamma_pct, settings, controls)
    })();
    GatePoint { lambda, detuning, outcome }
}

/// [`gate_point`] over `(lambda, detuning)` pairs; failures stay in place.
pub fn fidelity_sweep(
    template: &TwoQubitSpec,
    grid: &[(f64, f64)],
    gamma_pct: f64,
    settings: &GateSettings,
    controls: &SolverControls,
) -> Vec<GatePoint> {
    grid.iter()
        .map(|&(lambda, detuning)| gate_point(template, lambda, detuning, gamma_pct, settings, controls))
        .collect()
}

/// Phase `2π·J·t` accumulated by the dispersive exchange in time `t`.
pub fn exchange_angle(spec: &TwoQubitSpec, t: f64) -> Result<f64> {
    Ok(TAU * crate::models::exchange_strength(spec)? * t)
}
