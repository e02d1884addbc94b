//! Open-system evolution under the GKSL master equation
//! `dρ/dt = i[ρ, H] + Σ_k κ_k (A_k ρ A_k† − ½{A_k†A_k, ρ})`,
//! steady states, and two-time correlations by the quantum regression recipe.
//!
//! The equation is used literally: `H` is taken in rad/s and rates in 1/s.
//! [`LindbladModel::qubit_oscillator`] and [`LindbladModel::two_qubit`] take
//! parameters in Hz and multiply Hamiltonian and rates by 2π, so that times
//! are seconds and spectra come out in Hz.

mod adaptive;
mod propagator;

use std::collections::BTreeMap;
use std::f64::consts::TAU;
use std::time::Instant;

use ndarray::Array2;
use serde::{Deserialize, Serialize};

pub use propagator::{invariant_blocks, superoperator};

use crate::error::{invalid, Error, Result};
use crate::hilbert::{HilbertSpace, Operator, State};
use crate::linalg::{self, CMatrix, C64, I};
use crate::models::{dressed_from_ops, two_qubit_from_ops, QubitOscillatorOps, SystemSpec, TwoQubitOps, TwoQubitSpec};

/// Positivity tolerance for evolved states.
pub const EVOLVED_POSITIVITY_TOL: f64 = 1e-7;
/// Trace and Hermiticity tolerance for evolved states.
pub const EVOLVED_TRACE_TOL: f64 = 1e-9;

/// Largest superoperator dimension the exact propagator is allowed to build.
const MAX_PROPAGATOR_DIM: usize = 2500;

#[derive(Debug, Clone, PartialEq)]
pub struct Channel {
    pub op: Operator,
    pub rate: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LindbladModel {
    h: Operator,
    channels: Vec<Channel>,
}

impl LindbladModel {
    pub fn new(h: Operator, channels: Vec<(Operator, f64)>) -> Result<Self> {
        let mut out = Vec::with_capacity(channels.len());
        for (op, rate) in channels {
            if op.space() != h.space() {
                return Err(Error::Dimension(format!(
                    "jump operator on {:?} but Hamiltonian on {:?}",
                    op.space().dims(),
                    h.space().dims()
                )));
            }
            if !rate.is_finite() || rate < 0.0 {
                return Err(invalid("rate", format!("decay rate {rate} must be finite and >= 0")));
            }
            out.push(Channel { op, rate });
        }
        Ok(Self { h, channels: out })
    }

    /// Dressed qubit and oscillator with the five decay channels `a`, `a†`,
    /// `σ−`, `σ+`, `σz`. Channels with zero rate are omitted.
    pub fn qubit_oscillator(spec: &SystemSpec) -> Result<Self> {
        spec.validate()?;
        let ops = QubitOscillatorOps::new(spec.n_fock)?;
        let h = dressed_from_ops(&ops, spec).scale(TAU);
        let r = &spec.rates;
        let channels = [
            (ops.a.clone(), r.kappa_down),
            (ops.a.dagger(), r.kappa_up),
            (ops.sigma_minus.clone(), r.gamma_down),
            (ops.sigma_plus.clone(), r.gamma_up),
            (ops.sigma_z.clone(), r.gamma_phi),
        ];
        Self::new(
            h,
            channels.into_iter().filter(|(_, k)| *k > 0.0).map(|(op, k)| (op, TAU * k)).collect(),
        )
    }

    /// Two dressed qubits on a shared oscillator, channels per qubit and for
    /// the oscillator.
    pub fn two_qubit(spec: &TwoQubitSpec) -> Result<Self> {
        spec.validate()?;
        let ops = TwoQubitOps::new(spec.n_fock)?;
        let h = two_qubit_from_ops(&ops, spec).scale(TAU);
        let mut channels = vec![(ops.a.clone(), spec.kappa_down), (ops.a.dagger(), spec.kappa_up)];
        for (k, q) in spec.qubits.iter().enumerate() {
            channels.push((ops.sigma_minus[k].clone(), q.gamma_down));
            channels.push((ops.sigma_plus[k].clone(), q.gamma_up));
            channels.push((ops.sigma_z[k].clone(), q.gamma_phi));
        }
        Self::new(
            h,
            channels.into_iter().filter(|(_, k)| *k > 0.0).map(|(op, k)| (op, TAU * k)).collect(),
        )
    }

    pub fn hamiltonian(&self) -> &Operator {
        &self.h
    }

    pub fn channels(&self) -> &[Channel] {
        &self.channels
    }

    pub fn space(&self) -> &HilbertSpace {
        self.h.space()
    }

    pub fn dim(&self) -> usize {
        self.h.dim()
    }

    /// Right-hand side for an arbitrary operator (not necessarily a state).
    pub fn apply(&self, rho: &CMatrix) -> CMatrix {
        let h = self.h.matrix();
        let mut out = (rho.dot(h) - h.dot(rho)).mapv(|z| I * z);
        for ch in &self.channels {
            let a = ch.op.matrix();
            let ad = linalg::dagger(a);
            let k = ad.dot(a);
            let jump = a.dot(rho).dot(&ad);
            let anti = k.dot(rho) + rho.dot(&k);
            out.scaled_add(C64::new(ch.rate, 0.0), &jump);
            out.scaled_add(C64::new(-0.5 * ch.rate, 0.0), &anti);
        }
        out
    }
}

/// `dρ/dt` for a density matrix.
pub fn lindblad_rhs(model: &LindbladModel, state: &State) -> Result<CMatrix> {
    if state.space() != model.space() {
        return Err(Error::Dimension(format!(
            "state on {:?} but model on {:?}",
            state.space().dims(),
            model.space().dims()
        )));
    }
    Ok(model.apply(state.rho()))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Engine {
    /// Pick the cheaper engine from a cost estimate.
    #[default]
    Auto,
    /// Repeated application of `exp(L·Δt)`.
    Propagator,
    /// Adaptive Dormand–Prince 5(4) in the interaction frame.
    Adaptive,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SolverControls {
    pub rtol: f64,
    pub atol: f64,
    pub max_steps: usize,
    pub engine: Engine,
    /// Number of grid points used by [`evolve`].
    pub n_points: usize,
    pub deadline: Option<Instant>,
}

impl Default for SolverControls {
    fn default() -> Self {
        Self {
            rtol: 1e-9,
            atol: 1e-11,
            max_steps: 50_000_000,
            engine: Engine::Auto,
            n_points: 101,
            deadline: None,
        }
    }
}

impl SolverControls {
    pub fn with_engine(mut self, engine: Engine) -> Self {
        self.engine = engine;
        self
    }

    pub fn with_tolerances(mut self, rtol: f64, atol: f64) -> Self {
        self.rtol = rtol;
        self.atol = atol;
        self
    }

    fn validate(&self) -> Result<()> {
        if !(self.rtol > 0.0) || !(self.atol > 0.0) {
            return Err(invalid("tolerance", "rtol and atol must be positive"));
        }
        Ok(())
    }
}

fn check_grid(times: &[f64]) -> Result<()> {
    if times.is_empty() {
        return Err(Error::Precondition("empty time grid".into()));
    }
    if times[0] < 0.0 || !times.iter().all(|t| t.is_finite()) {
        return Err(invalid("times", "grid must be finite and start at t >= 0"));
    }
    if times.windows(2).any(|w| w[1] < w[0]) {
        return Err(invalid("times", "grid must be non-decreasing"));
    }
    Ok(())
}

/// Engine that `Auto` resolves to for this workload.
pub fn choose_engine(model: &LindbladModel, times: &[f64], n_inits: usize, controls: &SolverControls) -> Engine {
    match controls.engine {
        Engine::Propagator | Engine::Adaptive => return controls.engine,
        Engine::Auto => {}
    }
    let d = model.dim();
    let n = d * d;
    if n > MAX_PROPAGATOR_DIM {
        return Engine::Adaptive;
    }
    let rhs = adaptive::FrameRhs::new(model);
    let span = times.last().copied().unwrap_or(0.0);
    let steps = span * rhs.stiffness() / 0.3 + times.len() as f64;
    let adaptive_cost = n_inits as f64 * steps * 7.0 * rhs.rhs_cost();

    let mut distinct: Vec<f64> = Vec::new();
    let mut prev = 0.0;
    for &t in times {
        let dt = t - prev;
        prev = t;
        if dt > 0.0 && !distinct.iter().any(|x| (x - dt).abs() <= 1e-12 * dt) {
            distinct.push(dt);
        }
    }
    let l_norm = (rhs.stiffness() * 2.0).max(1.0);
    let blocks = invariant_blocks(&superoperator(model));
    let cubes: f64 = blocks.iter().map(|b| (b.len() as f64).powi(3)).sum();
    let squares: f64 = blocks.iter().map(|b| (b.len() as f64).powi(2)).sum();
    let expm_cost: f64 = distinct.iter().map(|dt| (8.0 + (l_norm * dt).log2().max(0.0)) * cubes).sum();
    let apply_cost = (times.len() * n_inits) as f64 * squares;
    if expm_cost + apply_cost < adaptive_cost {
        Engine::Propagator
    } else {
        Engine::Adaptive
    }
}

/// Propagate several operators on the same time grid; `sink(time_index,
/// init_index, operator)` receives lab-frame results in grid order.
pub fn propagate_many<F>(
    model: &LindbladModel,
    inits: &[CMatrix],
    times: &[f64],
    controls: &SolverControls,
    mut sink: F,
) -> Result<()>
where
    F: FnMut(usize, usize, &CMatrix) -> Result<()>,
{
    check_grid(times)?;
    controls.validate()?;
    let d = model.dim();
    if inits.iter().any(|m| m.nrows() != d || m.ncols() != d) {
        return Err(Error::Dimension(format!("initial operators must be {d}x{d}")));
    }
    match choose_engine(model, times, inits.len(), controls) {
        Engine::Propagator => {
            let mut cache = propagator::PropagatorCache::new(model);
            let n = d * d;
            let mut stack = Array2::<C64>::zeros((n, inits.len()));
            for (c, m) in inits.iter().enumerate() {
                stack.column_mut(c).assign(&propagator::vectorize(m));
            }
            let mut prev = 0.0;
            for (k, &t) in times.iter().enumerate() {
                if let Some(deadline) = controls.deadline {
                    if Instant::now() >= deadline {
                        return Err(Error::Timeout);
                    }
                }
                stack = cache.apply(t - prev, &stack);
                prev = t;
                for c in 0..inits.len() {
                    sink(k, c, &propagator::unvectorize(stack.column(c), d))?;
                }
            }
        }
        Engine::Adaptive | Engine::Auto => {
            let mut currents: Vec<CMatrix> = inits.to_vec();
            let scales: Vec<f64> = inits.iter().map(|m| linalg::max_abs(m).max(f64::MIN_POSITIVE)).collect();
            let mut integrator = adaptive::Integrator::new(model, controls);
            let mut prev = 0.0;
            for (k, &t) in times.iter().enumerate() {
                for (c, cur) in currents.iter_mut().enumerate() {
                    *cur = integrator.advance(cur, t - prev, prev, scales[c])?;
                    sink(k, c, cur)?;
                }
                prev = t;
            }
        }
    }
    Ok(())
}

pub fn propagate<F>(model: &LindbladModel, init: &CMatrix, times: &[f64], controls: &SolverControls, mut sink: F) -> Result<()>
where
    F: FnMut(usize, &CMatrix) -> Result<()>,
{
    propagate_many(model, std::slice::from_ref(init), times, controls, |k, _, m| sink(k, m))
}

#[derive(Debug, Clone)]
pub struct Trajectory {
    pub times: Vec<f64>,
    pub states: Vec<State>,
    pub observables: BTreeMap<String, Vec<C64>>,
}

impl Trajectory {
    /// Expectation series of `op`, stored under `name`.
    pub fn record(&mut self, name: &str, op: &Operator) -> Result<&[C64]> {
        let mut series = Vec::with_capacity(self.states.len());
        for s in &self.states {
            series.push(crate::hilbert::expect(op, s)?);
        }
        self.observables.insert(name.to_string(), series);
        Ok(&self.observables[name])
    }
}

/// Check the evolved-state invariants: unit trace, Hermiticity, positivity.
pub fn check_evolved(rho: &CMatrix, time: f64) -> Result<()> {
    let tr = linalg::trace(rho);
    if (tr - C64::new(1.0, 0.0)).norm() > EVOLVED_TRACE_TOL {
        return Err(Error::NumericalIntegrity(format!("trace {tr} at t = {time:e}")));
    }
    let herm = linalg::hermiticity_defect(rho);
    if herm > EVOLVED_TRACE_TOL {
        return Err(Error::NumericalIntegrity(format!("Hermiticity defect {herm:e} at t = {time:e}")));
    }
    let min = linalg::eigvalsh(&linalg::hermitian_part(rho)).iter().copied().fold(f64::INFINITY, f64::min);
    if min < -EVOLVED_POSITIVITY_TOL {
        return Err(Error::NumericalIntegrity(format!("eigenvalue {min:e} at t = {time:e}")));
    }
    Ok(())
}

/// Evolve on an explicit grid.
pub fn evolve_on(model: &LindbladModel, rho0: &State, times: &[f64], controls: &SolverControls) -> Result<Trajectory> {
    if rho0.space() != model.space() {
        return Err(Error::Dimension("initial state and model live on different spaces".into()));
    }
    let mut states = Vec::with_capacity(times.len());
    propagate(model, rho0.rho(), times, controls, |k, m| {
        check_evolved(m, times[k])?;
        states.push(State::new_unchecked(model.space().clone(), m.clone()));
        Ok(())
    })?;
    Ok(Trajectory {
        times: times.to_vec(),
        states,
        observables: BTreeMap::new(),
    })
}

/// Evolve on `controls.n_points` uniformly spaced times in `[0, t_final]`.
pub fn evolve(model: &LindbladModel, rho0: &State, t_final: f64, controls: &SolverControls) -> Result<Trajectory> {
    if !(t_final > 0.0) || !t_final.is_finite() {
        return Err(invalid("t_final", format!("{t_final} must be positive")));
    }
    let n = controls.n_points.max(2);
    let times: Vec<f64> = (0..n).map(|k| t_final * k as f64 / (n - 1) as f64).collect();
    evolve_on(model, rho0, &times, controls)
}

/// Relative singular-value threshold below which a Liouvillian direction counts as null.
const NULL_TOL: f64 = 1e-9;

/// Unique stationary state from the null space of the Liouvillian.
pub fn steady_state(model: &LindbladModel) -> Result<State> {
    let l = superoperator(model);
    let (sv, v) = linalg::smallest_right_singular(&l);
    let top = sv[0].max(f64::MIN_POSITIVE);
    let n = sv.len();
    let nulls = sv.iter().filter(|&&s| s <= NULL_TOL * top).count();
    if nulls == 0 {
        return Err(Error::Degenerate(format!(
            "no null vector: smallest singular value {:e} of {:e}",
            sv[n - 1],
            top
        )));
    }
    if nulls > 1 {
        return Err(Error::Degenerate(format!("{nulls}-dimensional stationary subspace")));
    }
    let d = model.dim();
    let mut rho = propagator::unvectorize(v.view(), d);
    let tr = linalg::trace(&rho);
    if tr.norm() < 1e-12 {
        return Err(Error::Degenerate("null vector is traceless".into()));
    }
    rho.mapv_inplace(|z| z / tr);
    let rho = linalg::hermitian_part(&rho);
    let residual = linalg::frobenius(&model.apply(&rho));
    if residual > 1e-10 * top.max(1.0) {
        return Err(Error::NumericalIntegrity(format!("stationary residual {residual:e}")));
    }
    State::new(model.space().clone(), rho).map_err(|e| match e {
        Error::NumericalIntegrity(m) if m.contains("negative eigenvalue") => {
            Error::NumericalIntegrity(format!("stationary state not positive: {m}"))
        }
        other => other,
    })
}

/// `⟨A(τ)B(0)⟩` for `ρ(0) = rho0` by propagating `B·ρ₀` and tracing against `A`.
pub fn correlation(
    model: &LindbladModel,
    rho0: &State,
    a: &Operator,
    b: &Operator,
    taus: &[f64],
    controls: &SolverControls,
) -> Result<Vec<C64>> {
    for op in [a, b] {
        if op.space() != model.space() {
            return Err(Error::Dimension("correlation operators must live on the model space".into()));
        }
    }
    if rho0.space() != model.space() {
        return Err(Error::Dimension("initial state and model live on different spaces".into()));
    }
    let init = b.matrix().dot(rho0.rho());
    let mut out = Vec::with_capacity(taus.len());
    let am = a.matrix();
    propagate(model, &init, taus, controls, |_, m| {
        out.push(linalg::trace_product(am, m));
        Ok(())
    })?;
    Ok(out)
}

#[cfg(test)]
mod tests;
