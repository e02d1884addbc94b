//! Smallest coupling that pulls the mechanical peak by a target amount.
//!
//! The search runs on `ln λ` against `ln(|shift| / target)`, which is close to
//! linear in the dispersive regime. A geometric expansion brackets the root
//! and Illinois-modified regula falsi closes the bracket.

use std::cell::Cell;

use serde::{Deserialize, Serialize};

use crate::dynamics::SolverControls;
use crate::error::{invalid, Error, Result};
use crate::models::SystemSpec;

use super::{analytic_shift, simulated_shift_with, Branch};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ThresholdSettings {
    /// Target shift [Hz].
    pub target: f64,
    /// Stop once `|ln(|shift| / target)|` is below this.
    pub log_tol: f64,
    pub max_evals: usize,
    /// Bracket expansion factor.
    pub growth: f64,
}

impl Default for ThresholdSettings {
    fn default() -> Self {
        Self {
            target: crate::models::MECHANICAL_LINEWIDTH,
            log_tol: 1e-3,
            max_evals: 30,
            growth: 1.5,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ThresholdResult {
    pub lambda_min: f64,
    /// Shift reached at `lambda_min` [Hz].
    pub shift: f64,
    pub evaluations: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ThresholdPoint {
    /// `|Ω_R − ω_m|` [Hz], with the qubit below the mechanical frequency.
    pub detuning: f64,
    pub delta_nu: f64,
    pub outcome: Result<ThresholdResult>,
}

/// Root of `|shift(λ)| = target` for a shift that grows with `λ`, starting
/// from `lambda0`.
pub fn find_threshold<F>(mut shift: F, lambda0: f64, settings: &ThresholdSettings) -> Result<ThresholdResult>
where
    F: FnMut(f64) -> Result<f64>,
{
    if !(settings.target > 0.0) {
        return Err(invalid("target", format!("target shift {} must be positive", settings.target)));
    }
    if !(lambda0 > 0.0) || !lambda0.is_finite() {
        return Err(invalid("lambda0", format!("starting coupling {lambda0} must be positive")));
    }
    if !(settings.growth > 1.0) {
        return Err(invalid("growth", "bracket expansion factor must exceed 1"));
    }
    let evals = Cell::new(0usize);
    let mut g = |x: f64| -> Result<(f64, f64)> {
        evals.set(evals.get() + 1);
        let s = shift(x.exp())?.abs();
        Ok((s, (s / settings.target).ln()))
    };

    let x0 = lambda0.ln();
    let (s0, g0) = g(x0)?;
    if g0.abs() <= settings.log_tol {
        return Ok(ThresholdResult { lambda_min: lambda0, shift: s0, evaluations: 1 });
    }
    let dir = if g0 < 0.0 { 1.0 } else { -1.0 };
    let dx = settings.growth.ln() * dir;
    let (mut xa, mut ga) = (x0, g0);
    let mut xb = x0 + dx;
    let mut gb;
    loop {
        let (sb, val) = g(xb)?;
        gb = val;
        if gb.abs() <= settings.log_tol {
            return Ok(ThresholdResult { lambda_min: xb.exp(), shift: sb, evaluations: evals.get() });
        }
        if (gb - ga) * dir <= 0.0 {
            return Err(Error::NonMonotonic(format!(
                "|shift| does not grow from λ = {:.6e} to {:.6e} Hz",
                xa.min(xb).exp(),
                xa.max(xb).exp()
            )));
        }
        if gb.signum() != ga.signum() {
            break;
        }
        if evals.get() >= settings.max_evals {
            return Err(Error::NotConverged(format!("no bracket after {} evaluations", settings.max_evals)));
        }
        xa = xb;
        ga = gb;
        xb += dx;
    }

    // Order the bracket so that g(lo) < 0 < g(hi).
    let (mut lo, mut g_lo, mut hi, mut g_hi) = if ga < 0.0 { (xa, ga, xb, gb) } else { (xb, gb, xa, ga) };
    let (mut true_lo, mut true_hi) = (g_lo, g_hi);
    let mut side = 0i8;
    loop {
        if evals.get() >= settings.max_evals {
            return Err(Error::NotConverged(format!(
                "bracket [{:.6e}, {:.6e}] Hz still open after {} evaluations",
                lo.exp(),
                hi.exp(),
                settings.max_evals
            )));
        }
        let x = (lo * g_hi - hi * g_lo) / (g_hi - g_lo);
        let (s, gx) = g(x)?;
        if gx.abs() <= settings.log_tol || (hi - lo).abs() <= 1e-12 {
            return Ok(ThresholdResult { lambda_min: x.exp(), shift: s, evaluations: evals.get() });
        }
        if !(gx > true_lo && gx < true_hi) {
            return Err(Error::NonMonotonic(format!(
                "|shift| at λ = {:.6e} Hz leaves the bracket values",
                x.exp()
            )));
        }
        if gx < 0.0 {
            lo = x;
            g_lo = gx;
            true_lo = gx;
            if side == -1 {
                g_hi /= 2.0;
            }
            side = -1;
        } else {
            hi = x;
            g_hi = gx;
            true_hi = gx;
            if side == 1 {
                g_lo /= 2.0;
            }
            side = 1;
        }
    }
}

/// Minimal coupling for one detuning pair, with the qubit at
/// `Ω_R = ω_m − detuning` and the template's other parameters.
pub fn threshold_point(
    template: &SystemSpec,
    detuning: f64,
    delta_nu: f64,
    settings: &ThresholdSettings,
    controls: &SolverControls,
) -> ThresholdPoint {
    let outcome = (|| {
        if !(detuning > 0.0) || detuning >= template.omega_m {
            return Err(invalid("detuning", format!("{detuning} must lie in (0, omega_m)")));
        }
        let mut spec = template.clone();
        spec.omega_r = template.omega_m - detuning;
        spec.delta_nu = delta_nu;
        let qubit = spec.omega_r.hypot(delta_nu);
        let per_lambda2 = analytic_shift(1.0, qubit, spec.omega_m)?.abs();
        let lambda0 = (settings.target / per_lambda2).sqrt();
        find_threshold(
            |lambda| {
                spec.lambda = lambda;
                Ok(simulated_shift_with(&spec, Branch::Up, controls)?.shift)
            },
            lambda0,
            settings,
        )
    })();
    ThresholdPoint { detuning, delta_nu, outcome }
}

/// [`threshold_point`] over a list of `(detuning, delta_nu)` pairs. Failed
/// points are reported in place.
pub fn threshold_sweep(
    template: &SystemSpec,
    grid: &[(f64, f64)],
    settings: &ThresholdSettings,
    controls: &SolverControls,
) -> Vec<ThresholdPoint> {
    grid.iter()
        .map(|&(detuning, delta_nu)| threshold_point(template, detuning, delta_nu, settings, controls))
        .collect()
}
