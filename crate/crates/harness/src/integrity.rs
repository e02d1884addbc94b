//! Numerical integrity checks of a config at a representative point: trace
//! and positivity along a trajectory, output-step halving, and the effect of
//! doubling the Fock truncation on the quantity the experiment reports.

use spinbus_core::dynamics::{propagate, LindbladModel, SolverControls};
use spinbus_core::gates::{choi_from_dynamics, compensated_fidelity, sqrt_iswap, sweep_spec};
use spinbus_core::hilbert::{tensor_states, thermal_state};
use spinbus_core::linalg::{self, CMatrix, C64};
use spinbus_core::models::{SystemSpec, TwoQubitSpec};
use spinbus_core::spectra::{analytic_shift, eigen_shift_branch, simulated_shift_with, Branch};
use spinbus_core::{HilbertSpace, State};

use crate::config::{Axis, Experiment, RunConfig};
use crate::error::Result;
use crate::run::{bus_spec, readout_state};

pub const TRACE_TOL: f64 = 1e-9;
pub const POSITIVITY_FLOOR: f64 = -1e-7;
pub const STEP_HALVING_TOL: f64 = 1e-6;
pub const FOCK_DOUBLING_TOL: f64 = 0.01;

/// Output points of the coarse trajectory; the fine one has twice the density.
const TRAJECTORY_POINTS: usize = 41;

#[derive(Debug, Clone, PartialEq)]
pub struct Check {
    pub name: &'static str,
    pub value: f64,
    pub limit: f64,
    pub pass: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct IntegrityReport {
    pub experiment: String,
    /// Empty when the experiment runs no dynamics.
    pub checks: Vec<Check>,
}

impl IntegrityReport {
    pub fn pass(&self) -> bool {
        self.checks.iter().all(|c| c.pass)
    }
}

fn middle(axis: &Axis) -> f64 {
    let v = axis.values();
    v[v.len() / 2]
}

fn below(name: &'static str, value: f64, limit: f64) -> Check {
    Check { name, value, limit, pass: value <= limit }
}

fn above(name: &'static str, value: f64, limit: f64) -> Check {
    Check { name, value, limit, pass: value >= limit }
}

/// Trace, positivity and step-halving checks on one trajectory.
fn trajectory_checks(model: &LindbladModel, rho0: &CMatrix, duration: f64) -> Result<Vec<Check>> {
    let controls = SolverControls::default();
    let mut trace_err = 0.0_f64;
    let mut min_eig = f64::INFINITY;
    let mut finals = Vec::new();
    for points in [TRAJECTORY_POINTS, 2 * TRAJECTORY_POINTS - 1] {
        let times: Vec<f64> = (1..points).map(|k| duration * k as f64 / (points - 1) as f64).collect();
        let mut last = rho0.clone();
        propagate(model, rho0, &times, &controls, |_, m| {
            trace_err = trace_err.max((linalg::trace(m) - C64::new(1.0, 0.0)).norm());
            let herm = linalg::hermitian_part(m);
            min_eig = min_eig.min(linalg::eigvalsh(&herm).iter().copied().fold(f64::INFINITY, f64::min));
            last = m.clone();
            Ok(())
        })?;
        finals.push(last);
    }
    let halving = linalg::max_abs(&(&finals[0] - &finals[1]));
    Ok(vec![
        below("trace preservation", trace_err, TRACE_TOL),
        above("positivity", min_eig, POSITIVITY_FLOOR),
        below("step halving", halving, STEP_HALVING_TOL),
    ])
}

fn relative_change(coarse: f64, fine: f64) -> f64 {
    (coarse - fine).abs() / fine.abs().max(f64::MIN_POSITIVE)
}

fn readout_checks(spec: &SystemSpec, fock: impl Fn(&SystemSpec) -> spinbus_core::Result<f64>) -> Result<Vec<Check>> {
    let model = LindbladModel::qubit_oscillator(spec)?;
    let rho0 = readout_state(spec, Branch::Up)?;
    let duration = if spec.lambda > 0.0 { 1.0 / spec.lambda } else { 100.0 / spec.omega_m };
    let mut checks = trajectory_checks(&model, rho0.rho(), duration)?;
    let mut doubled = spec.clone();
    doubled.n_fock *= 2;
    checks.push(below("Fock doubling", relative_change(fock(spec)?, fock(&doubled)?), FOCK_DOUBLING_TOL));
    Ok(checks)
}

fn bus_checks(spec: &TwoQubitSpec) -> Result<Vec<Check>> {
    let model = LindbladModel::two_qubit(spec)?;
    // |↑↓⟩ with the oscillator thermal.
    let qubits = State::basis(HilbertSpace::new(vec![2, 2])?, 1)?;
    let bath = thermal_state(spec.n_fock, spec.n_th)?;
    let rho0 = tensor_states(&[&qubits, &bath])?;
    let t_star = spec.dispersive_gate_time()?;
    let mut checks = trajectory_checks(&model, rho0.rho(), t_star)?;
    let fidelity = |s: &TwoQubitSpec| -> spinbus_core::Result<f64> {
        Ok(compensated_fidelity(&choi_from_dynamics(s, t_star)?, &sqrt_iswap())?.fidelity)
    };
    let mut doubled = spec.clone();
    doubled.n_fock *= 2;
    checks.push(below("Fock doubling", relative_change(fidelity(spec)?, fidelity(&doubled)?), FOCK_DOUBLING_TOL));
    Ok(checks)
}

/// Run the integrity checks at the centre of the config's sweep.
pub fn integrity(config: &RunConfig) -> Result<IntegrityReport> {
    let eigen = |s: &SystemSpec| eigen_shift_branch(s, Branch::Up);
    let checks = match &config.experiment {
        Experiment::EigenMap(e) => {
            let mut spec = e.system.clone();
            spec.omega_r = middle(&e.omega_r);
            spec.delta_nu = middle(&e.delta_nu);
            readout_checks(&spec, |s| eigen_shift_branch(s, e.branch))?
        }
        Experiment::ShiftSweep(s) => {
            let mut spec = s.system.clone();
            spec.lambda = middle(&s.lambda);
            readout_checks(&spec, eigen)?
        }
        Experiment::ThresholdMap(t) => {
            let r = &t.readout;
            let detuning = middle(&t.detuning);
            let delta_nu = middle(&t.delta_nu);
            let n_th = t.n_th.values().into_iter().fold(0.0, f64::max);
            let mut spec = SystemSpec::new(r.omega_m, r.omega_m - detuning, delta_nu, 0.0, r.n_fock);
            spec.gamma_e_b0 = r.gamma_e_b0;
            spec.n_th = n_th;
            spec.rates = r.calibration.rates(n_th)?;
            let per_lambda2 = analytic_shift(1.0, spec.omega_r.hypot(delta_nu), spec.omega_m)?.abs();
            spec.lambda = (t.threshold.target / per_lambda2).sqrt();
            readout_checks(&spec, eigen)?
        }
        Experiment::GateSweep(g) => {
            let lambda = middle(&g.lambda);
            let detuning = match (&g.detuning, &g.ratio) {
                (Some(d), _) => middle(d),
                (None, Some(r)) => middle(r) * lambda,
                (None, None) => unreachable!("validated"),
            };
            let spec = sweep_spec(&bus_spec(&g.bus, lambda, detuning)?, lambda, detuning, g.gamma_pct);
            bus_checks(&spec)?
        }
        Experiment::GammaSweep(g) => {
            let p = g.points[g.points.len() / 2];
            let gamma = g.gamma_pct.values().into_iter().fold(0.0, f64::max);
            let spec = sweep_spec(&bus_spec(&g.bus, p.lambda, p.detuning)?, p.lambda, p.detuning, gamma);
            bus_checks(&spec)?
        }
        Experiment::Spectrum(s) => readout_checks(&s.system, |spec| {
            Ok(simulated_shift_with(spec, s.branch, &SolverControls::default())?.shift)
        })?,
        Experiment::DonorCoupling(_) => Vec::new(),
    };
    Ok(IntegrityReport {
        experiment: config.experiment.kind().into(),
        checks,
    })
}
