//! Dispatch of a validated config to the simulation pipelines.

use std::time::{Duration, Instant};

use rayon::prelude::*;
use spinbus_core::donors::{
    ensemble_coupling, esr_resonances, profile_coupling, transition_gradient, DonorSpecies, ProfileKind,
};
use spinbus_core::dynamics::{LindbladModel, SolverControls};
use spinbus_core::gates::{gate_point, GatePoint};
use spinbus_core::hilbert::{tensor_states, thermal_state};
use spinbus_core::models::{SystemSpec, TwoQubitSpec};
use spinbus_core::spectra::{
    analytic_shift, dressed_qubit_state, eigen_shift_branch, simulated_shift_with, spectral_density, threshold_point,
    Branch, SpectrumSettings,
};
use spinbus_core::{HilbertSpace, State};

use crate::config::{
    Axis, BusTemplate, DonorCoupling, EigenMap, Experiment, GammaSweep, GateSweep, RunConfig, ShiftSweep,
    SpeciesSource, SpectrumRun, ThresholdMap,
};
use crate::error::{HarnessError, Result};
use crate::table::{status, Cell, Column, ResultTable};

/// Evaluate every point of the config on `workers` threads.
///
/// Points are independent and collected in grid order, so the table does not
/// depend on the worker count.
pub fn run(config: &RunConfig, workers: usize) -> Result<ResultTable> {
    let problems = config.violations();
    if !problems.is_empty() {
        return Err(HarnessError::Validation(problems));
    }
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(workers.max(1))
        .build()
        .map_err(|e| HarnessError::Precondition(format!("thread pool: {e}")))?;
    let limit = Duration::from_secs_f64(config.run.timeout_s);
    let ctx = Context { limit };
    let (columns, rows) = pool.install(|| match &config.experiment {
        Experiment::EigenMap(e) => eigen_map(e),
        Experiment::ShiftSweep(s) => shift_sweep(s, &ctx),
        Experiment::ThresholdMap(t) => threshold_map(t, &ctx),
        Experiment::GateSweep(g) => gate_sweep(g, &ctx),
        Experiment::GammaSweep(g) => gamma_sweep(g, &ctx),
        Experiment::DonorCoupling(d) => donor_coupling(d),
        Experiment::Spectrum(s) => spectrum(s, &ctx),
    })?;
    Ok(ResultTable {
        experiment: config.experiment.kind().into(),
        columns,
        rows,
        fingerprint: config.fingerprint(),
        version: crate::VERSION.into(),
        config: config.canonical(),
    })
}

struct Context {
    limit: Duration,
}

impl Context {
    /// Fresh controls whose deadline starts now.
    fn controls(&self) -> SolverControls {
        SolverControls {
            deadline: Some(Instant::now() + self.limit),
            ..SolverControls::default()
        }
    }
}

type Table = (Vec<Column>, Vec<Vec<Cell>>);

fn cols(spec: &[(&str, &str)]) -> Vec<Column> {
    spec.iter().map(|(n, u)| Column::new(n, u)).collect()
}

fn product(a: &Axis, b: &Axis) -> Vec<(f64, f64)> {
    let bs = b.values();
    a.values().into_iter().flat_map(|x| bs.iter().map(move |&y| (x, y))).collect()
}

fn eigen_map(e: &EigenMap) -> Result<Table> {
    let points = product(&e.omega_r, &e.delta_nu);
    let rows = points
        .par_iter()
        .map(|&(omega_r, delta_nu)| {
            let mut spec = e.system.clone();
            spec.omega_r = omega_r;
            spec.delta_nu = delta_nu;
            let r = eigen_shift_branch(&spec, e.branch);
            vec![omega_r.into(), delta_nu.into(), r.as_ref().ok().copied().into(), status(r.err())]
        })
        .collect();
    Ok((cols(&[("Omega_R", "Hz"), ("delta_nu", "Hz"), ("shift_Hz", "Hz"), ("status", "")]), rows))
}

fn shift_sweep(s: &ShiftSweep, ctx: &Context) -> Result<Table> {
    let mut columns = cols(&[("lambda", "Hz"), ("shift_eigen_Hz", "Hz"), ("shift_analytic_Hz", "Hz")]);
    if s.simulated {
        columns.push(Column::new("shift_simulated_Hz", "Hz"));
    }
    columns.push(Column::new("status", ""));
    let rows = s
        .lambda
        .values()
        .par_iter()
        .map(|&lambda| {
            let mut spec = s.system.clone();
            spec.lambda = lambda;
            let qubit = spec.omega_r.hypot(spec.delta_nu);
            let mut errors = Vec::new();
            let mut keep = |r: spinbus_core::Result<f64>| -> Cell {
                r.map_err(|e| errors.push(e)).ok().into()
            };
            let mut row = vec![
                lambda.into(),
                keep(eigen_shift_branch(&spec, Branch::Up)),
                keep(analytic_shift(lambda, qubit, spec.omega_m)),
            ];
            if s.simulated {
                row.push(keep(simulated_shift_with(&spec, Branch::Up, &ctx.controls()).map(|m| m.shift)));
            }
            row.push(status(errors.into_iter().next()));
            row
        })
        .collect();
    Ok((columns, rows))
}

fn threshold_map(t: &ThresholdMap, ctx: &Context) -> Result<Table> {
    let r = &t.readout;
    let points: Vec<(f64, f64, f64)> = t
        .n_th
        .values()
        .into_iter()
        .flat_map(|n| product(&t.detuning, &t.delta_nu).into_iter().map(move |(d, v)| (n, d, v)))
        .collect();
    let rows = points
        .par_iter()
        .map(|&(n_th, detuning, delta_nu)| {
            let outcome = r.calibration.rates(n_th).and_then(|rates| {
                let mut template = SystemSpec::new(r.omega_m, r.omega_m - detuning, delta_nu, 0.0, r.n_fock);
                template.gamma_e_b0 = r.gamma_e_b0;
                template.n_th = n_th;
                template.rates = rates;
                threshold_point(&template, detuning, delta_nu, &t.threshold, &ctx.controls()).outcome
            });
            let ok = outcome.as_ref().ok();
            vec![
                n_th.into(),
                detuning.into(),
                delta_nu.into(),
                ok.map(|o| o.lambda_min).into(),
                ok.map(|o| o.shift).into(),
                ok.map(|o| o.evaluations as f64).into(),
                status(outcome.err()),
            ]
        })
        .collect();
    let columns = cols(&[
        ("n_th", ""),
        ("detuning", "Hz"),
        ("delta_nu", "Hz"),
        ("lambda_min_Hz", "Hz"),
        ("shift_Hz", "Hz"),
        ("evaluations", ""),
        ("status", ""),
    ]);
    Ok((columns, rows))
}

/// Symmetric bus at the given point, before noise scaling.
pub fn bus_spec(bus: &BusTemplate, lambda: f64, detuning: f64) -> spinbus_core::Result<TwoQubitSpec> {
    let rates = bus.calibration.rates(bus.n_th)?;
    Ok(TwoQubitSpec::symmetric(bus.omega_m, detuning, lambda, bus.n_fock, bus.n_th, rates))
}

fn gate_columns() -> Vec<Column> {
    cols(&[
        ("lambda", "Hz"),
        ("detuning", "Hz"),
        ("ratio", ""),
        ("gamma_pct", "%"),
        ("n_th", ""),
        ("fidelity", ""),
        ("fidelity_raw", ""),
        ("t_opt_s", "s"),
        ("t_dispersive_s", "s"),
        ("phase_1", "rad"),
        ("phase_2", "rad"),
        ("at_boundary", ""),
        ("status", ""),
    ])
}

fn gate_row(bus: &BusTemplate, lambda: f64, detuning: f64, gamma_pct: f64, settings: &spinbus_core::gates::GateSettings, ctx: &Context) -> Vec<Cell> {
    let point = match bus_spec(bus, lambda, detuning) {
        Ok(template) => gate_point(&template, lambda, detuning, gamma_pct, settings, &ctx.controls()),
        Err(e) => GatePoint { lambda, detuning, outcome: Err(e) },
    };
    let ok = point.outcome.as_ref().ok();
    let t_star = detuning / (2.0 * lambda * lambda);
    vec![
        lambda.into(),
        detuning.into(),
        (detuning / lambda).into(),
        gamma_pct.into(),
        bus.n_th.into(),
        ok.map(|g| g.fidelity).into(),
        ok.map(|g| g.fidelity_uncompensated).into(),
        ok.map(|g| g.optimal_time).into(),
        t_star.into(),
        ok.map(|g| g.phases.0).into(),
        ok.map(|g| g.phases.1).into(),
        ok.map(|g| if g.at_boundary { 1.0 } else { 0.0 }).into(),
        status(point.outcome.err()),
    ]
}

fn gate_sweep(g: &GateSweep, ctx: &Context) -> Result<Table> {
    let points: Vec<(f64, f64)> = match (&g.detuning, &g.ratio) {
        (Some(d), _) => product(&g.lambda, d),
        (None, Some(r)) => product(&g.lambda, r).into_iter().map(|(l, q)| (l, q * l)).collect(),
        (None, None) => unreachable!("validated"),
    };
    let rows = points
        .par_iter()
        .map(|&(lambda, detuning)| gate_row(&g.bus, lambda, detuning, g.gamma_pct, &g.settings, ctx))
        .collect();
    Ok((gate_columns(), rows))
}

fn gamma_sweep(g: &GammaSweep, ctx: &Context) -> Result<Table> {
    let gammas = g.gamma_pct.values();
    let points: Vec<(f64, f64, f64)> = g
        .points
        .iter()
        .flat_map(|p| gammas.iter().map(move |&gm| (p.lambda, p.detuning, gm)))
        .collect();
    let rows = points
        .par_iter()
        .map(|&(lambda, detuning, gamma_pct)| gate_row(&g.bus, lambda, detuning, gamma_pct, &g.settings, ctx))
        .collect();
    Ok((gate_columns(), rows))
}

fn species(d: &DonorCoupling) -> Result<&DonorSpecies> {
    match &d.species {
        SpeciesSource::Inline(s) => Ok(s),
        SpeciesSource::File { .. } => Err(HarnessError::Precondition("species file not materialized".into())),
    }
}

fn donor_coupling(d: &DonorCoupling) -> Result<Table> {
    let species = species(d)?;
    let profile = d.profile.profile()?;
    let lines = esr_resonances(species, d.frequency, d.b_max)?;
    let line = lines.get(d.line).ok_or_else(|| {
        HarnessError::Precondition(format!(
            "resonance {} requested but only {} lines cross {} Hz below {} T",
            d.line,
            lines.len(),
            d.frequency,
            d.b_max
        ))
    })?;
    let slope = transition_gradient(species, line.field, line.transition)?;
    let (value_name, value_unit) = match profile.kind {
        ProfileKind::Gradient => ("gradient", "T/m"),
        ProfileKind::Strain => ("strain", ""),
    };
    let columns = cols(&[
        ("distance", "m"),
        (value_name, value_unit),
        ("field_T", "T"),
        ("df_dB", "Hz/T"),
        ("lambda_Hz", "Hz"),
        ("lambda_ensemble_Hz", "Hz"),
        ("status", ""),
    ]);
    let rows = d
        .distance
        .values()
        .par_iter()
        .map(|&x| {
            let outcome = profile
                .interp(x)
                .and_then(|v| Ok((v, profile_coupling(species, &d.mode, &profile, x, line.field, line.transition)?)))
                .and_then(|(v, l)| Ok((v, l, ensemble_coupling(l, d.ensemble)?)));
            let ok = outcome.as_ref().ok();
            vec![
                x.into(),
                ok.map(|o| o.0).into(),
                line.field.into(),
                slope.into(),
                ok.map(|o| o.1).into(),
                ok.map(|o| o.2).into(),
                status(outcome.err()),
            ]
        })
        .collect();
    Ok((columns, rows))
}

/// Dressed eigenstate of the chosen branch with the oscillator thermal.
pub fn readout_state(spec: &SystemSpec, branch: Branch) -> spinbus_core::Result<State> {
    let psi = dressed_qubit_state(spec, branch)?;
    let qubit = State::pure(HilbertSpace::single(2)?, &psi)?;
    let bath = thermal_state(spec.n_fock, spec.n_th)?;
    tensor_states(&[&qubit, &bath])
}

fn spectrum(s: &SpectrumRun, ctx: &Context) -> Result<Table> {
    let freqs = s
        .freqs
        .as_ref()
        .ok_or_else(|| HarnessError::Precondition("frequency grid not materialized".into()))?
        .values();
    let model = LindbladModel::qubit_oscillator(&s.system)?;
    let settings = SpectrumSettings::for_spec(&s.system)?;
    let rho0 = readout_state(&s.system, s.branch)?;
    let spectrum = spectral_density(&model, &rho0, &freqs, &settings, &ctx.controls())?;
    let rows = spectrum
        .freqs
        .iter()
        .zip(&spectrum.values)
        .map(|(&f, &v)| vec![f.into(), v.into(), status(None::<String>)])
        .collect();
    Ok((cols(&[("freq", "Hz"), ("S", "x_zpf^2/Hz"), ("status", "")]), rows))
}
