use std::f64::consts::PI;

use proptest::prelude::*;

use super::*;
use crate::hilbert::{tensor_states, thermal_state};
use crate::models::DecayRates;

fn synthetic(freqs: &[f64], center: f64, width: f64, amplitude: f64) -> Spectrum {
    let hw = width / 2.0;
    Spectrum {
        freqs: freqs.to_vec(),
        values: freqs.iter().map(|f| amplitude * hw * hw / ((f - center).powi(2) + hw * hw)).collect(),
        window: 1.0,
        sample_step: 1.0,
        apodization: 0.0,
    }
}

fn grid(center: f64, half: f64, step: f64) -> Vec<f64> {
    let n = (half / step).round() as i64;
    (-n..=n).map(|k| center + k as f64 * step).collect()
}

#[test]
fn closed_form_reference_value() {
    let s = analytic_shift(1e3, 0.9e6, 1e6).unwrap();
    assert!((s - 2.368).abs() < 5e-4, "{s}");
    assert_eq!(analytic_shift(0.0, 0.9e6, 1e6).unwrap(), 0.0);
    assert!(matches!(analytic_shift(1e3, 1e6, 1e6), Err(Error::Divergence(_))));
}

#[test]
fn closed_form_near_resonance_limit() {
    let (lambda, omega_m) = (1e3, 1e6);
    for delta in [1e3, 5e3, 2e4] {
        let s = analytic_shift(lambda, omega_m - delta, omega_m).unwrap();
        let limit = lambda * lambda / (4.0 * delta);
        // The next order is −Δ/(2ω_m) relative.
        assert!((s / limit - 1.0).abs() <= delta / omega_m, "{delta}: {s} vs {limit}");
    }
}

#[test]
fn eigen_shift_vanishes_without_coupling() {
    let spec = SystemSpec::new(1e6, 0.9e6, 0.0, 0.0, 6);
    assert_eq!(eigen_shift(&spec).unwrap(), 0.0);
}

#[test]
fn eigen_shift_matches_second_order_perturbation() {
    let (lambda, omega_m) = (1e3, 1e6);
    for omega_r in [0.9e6, 0.95e6, 0.98e6, 1.02e6, 1.1e6] {
        let spec = SystemSpec::new(omega_m, omega_r, 0.0, lambda, 8);
        let up = eigen_shift(&spec).unwrap();
        // Second-order energy corrections of |+,0> and |+,1> under −(λ/2)σx X.
        let e = |n: f64| lambda * lambda / 4.0 * (n / (omega_r + omega_m) + (n + 1.0) / (omega_r - omega_m));
        let oracle = e(1.0) - e(0.0);
        // Fourth-order terms enter at (λ/Δ)² relative.
        let next = (lambda / (omega_r - omega_m)).powi(2);
        assert!((up / oracle - 1.0).abs() < next.max(1e-4), "{omega_r}: {up} vs {oracle}");
        let closed = analytic_shift(lambda, omega_r, omega_m).unwrap();
        assert!((up + closed).abs() <= 0.05 * closed.abs());
    }
}

#[test]
fn branches_pull_in_opposite_directions() {
    let spec = SystemSpec::new(1e6, 0.95e6, 2e4, 1e3, 8);
    let up = eigen_shift_branch(&spec, Branch::Up).unwrap();
    let down = eigen_shift_branch(&spec, Branch::Down).unwrap();
    assert!(up < 0.0 && down > 0.0);
    assert!((up + down).abs() < 0.02 * up.abs(), "{up} {down}");
}

#[test]
fn resonant_mixing_fails_labeling() {
    // At weak coupling the Bloch–Siegert offset keeps the resonant overlap
    // just above one half; ultrastrong coupling spreads it over many states.
    let spec = SystemSpec::new(1e6, 1e6, 0.0, 1.5e6, 30);
    let r = eigen_shift(&spec);
    assert!(matches!(r, Err(Error::Labeling(_))), "{r:?}");
}

#[test]
fn truncation_check_rejects_unconverged_pull() {
    // Ultrastrong coupling needs many more than three levels.
    let spec = SystemSpec::new(1e6, 0.5e6, 0.0, 8e5, 3);
    assert!(matches!(eigen_shift(&spec), Err(Error::NotConverged(_) | Error::Labeling(_))));
}

#[test]
fn fit_recovers_off_grid_lorentzian() {
    let freqs = grid(1e6, 4e3, 20.0);
    let center = 1e6 + 3.7;
    let s = synthetic(&freqs, center, 200.0, 3.0);
    let fit = fit_peak(&s, (freqs[0], freqs[freqs.len() - 1])).unwrap();
    assert!((fit.center - center).abs() < 0.5, "{}", fit.center);
    assert!((fit.center - center).abs() <= 20.0 / 10.0);
    assert!((fit.width - 200.0).abs() < 1e-6, "{}", fit.width);
    assert!((fit.amplitude - 3.0).abs() < 1e-6);
    assert!(fit.residual < 1e-8);
}

#[test]
fn fit_of_symmetric_peak_on_grid_point_is_exact() {
    let freqs = grid(0.0, 2e3, 10.0);
    let s = synthetic(&freqs, 0.0, 150.0, 1.0);
    let fit = fit_peak(&s, (-2e3, 2e3)).unwrap();
    assert!(fit.center.abs() < 1e-9, "{}", fit.center);
}

#[test]
fn fit_removes_apodization_width() {
    let freqs = grid(5e4, 3e3, 10.0);
    let mut s = synthetic(&freqs, 5e4, 210.0, 1.0);
    s.apodization = 10.0;
    let fit = fit_peak(&s, (freqs[0], freqs[freqs.len() - 1])).unwrap();
    assert!((fit.width - 200.0).abs() < 1e-6);
}

#[test]
fn two_peaks_are_ambiguous() {
    let freqs = grid(1e6, 3e3, 10.0);
    let a = synthetic(&freqs, 1e6 - 300.0, 200.0, 1.0);
    let b = synthetic(&freqs, 1e6 + 300.0, 200.0, 0.8);
    let s = Spectrum {
        values: a.values.iter().zip(&b.values).map(|(x, y)| x + y).collect(),
        ..a
    };
    assert!(matches!(fit_peak(&s, (freqs[0], freqs[freqs.len() - 1])), Err(Error::AmbiguousPeak(_))));
}

#[test]
fn monotone_slope_has_no_peak() {
    let freqs = grid(0.0, 1e3, 10.0);
    let s = Spectrum {
        values: freqs.iter().map(|f| f + 2e3).collect(),
        ..synthetic(&freqs, 0.0, 1.0, 1.0)
    };
    assert!(matches!(fit_peak(&s, (-1e3, 1e3)), Err(Error::AmbiguousPeak(_))));
}

/// Thermal oscillator without coupling, on a compressed frequency scale.
fn free_oscillator(n_th: f64) -> (LindbladModel, State, SpectrumSettings, SystemSpec) {
    let mut spec = SystemSpec::new(2e4, 1.5e4, 0.0, 0.0, 14);
    spec.n_th = n_th;
    spec.rates = DecayRates::standard(n_th).unwrap();
    let model = LindbladModel::qubit_oscillator(&spec).unwrap();
    let qubit = State::basis(crate::HilbertSpace::single(2).unwrap(), 0).unwrap();
    let rho0 = tensor_states(&[&qubit, &thermal_state(spec.n_fock, n_th).unwrap()]).unwrap();
    let settings = SpectrumSettings::for_spec(&spec).unwrap();
    (model, rho0, settings, spec)
}

#[test]
fn damped_oscillator_is_lorentzian_at_the_mechanical_frequency() {
    let (model, rho0, settings, spec) = free_oscillator(1.0);
    let freqs = grid(spec.omega_m, 2e3, 10.0);
    let s = spectral_density(&model, &rho0, &freqs, &settings, &SolverControls::default()).unwrap();
    let fit = fit_peak(&s, (freqs[0], freqs[freqs.len() - 1])).unwrap();
    assert!((fit.center - spec.omega_m).abs() <= s.resolution() / 10.0, "{}", fit.center);
    assert!((fit.width - 200.0).abs() < 2.0, "{}", fit.width);

    // Closed form: C(τ) = e^{−πκτ}[(n+1)e^{−iωτ} + n e^{iωτ}], so the
    // symmetrized density near +ω_m is a Lorentzian of weight (2n+1)/2.
    let n = spec.n_th;
    let hw = (200.0 + s.apodization) / 2.0;
    let peak = (2.0 * n + 1.0) / 2.0 / (PI * hw);
    let top = s.values.iter().copied().fold(0.0, f64::max);
    assert!((top / peak - 1.0).abs() < 0.01, "{top} vs {peak}");
    let area: f64 = s.values.iter().sum::<f64>() * 10.0;
    let expected = (2.0 * n + 1.0) / 2.0 * (2.0 / PI) * (2e3 / hw).atan();
    assert!((area / expected - 1.0).abs() < 0.01, "{area} vs {expected}");
}

#[test]
fn spectrum_is_even_and_non_negative() {
    let (model, rho0, settings, spec) = free_oscillator(0.0);
    let pos = grid(spec.omega_m, 1e3, 10.0);
    let mut freqs: Vec<f64> = pos.iter().rev().map(|f| -f).collect();
    freqs.extend(grid(0.0, 300.0, 10.0));
    freqs.extend(&pos);
    let s = spectral_density(&model, &rho0, &freqs, &SpectrumSettings { linewidth: 1e6, ..settings }, &SolverControls::default())
        .unwrap();
    let m = pos.len();
    let top = s.values.iter().copied().fold(0.0, f64::max);
    for k in 0..m {
        let (a, b) = (s.values[m - 1 - k], s.values[s.values.len() - m + k]);
        assert!((a - b).abs() <= 1e-10 * top);
    }
    assert!(s.values.iter().all(|v| *v >= -1e-8 * top));
}

#[test]
fn coarse_grid_is_rejected() {
    let (model, rho0, settings, spec) = free_oscillator(0.0);
    let freqs = grid(spec.omega_m, 1e3, 50.0);
    let err = spectral_density(&model, &rho0, &freqs, &settings, &SolverControls::default()).unwrap_err();
    assert!(matches!(err, Error::InvalidParameter { name: "freqs", .. }));
}

#[test]
fn short_window_is_detected() {
    let (model, rho0, settings, spec) = free_oscillator(0.0);
    let freqs = grid(spec.omega_m, 1e3, 10.0);
    let short = SpectrumSettings { window: settings.window / 5.0, ..settings };
    let err = spectral_density(&model, &rho0, &freqs, &short, &SolverControls::default()).unwrap_err();
    assert!(matches!(err, Error::WindowTooShort { .. }), "{err:?}");
}

fn compressed(lambda: f64, detuning: f64, delta_nu: f64) -> SystemSpec {
    let mut spec = SystemSpec::new(1e5, 1e5 - detuning, delta_nu, lambda, 6);
    spec.rates = DecayRates::standard(0.0).unwrap();
    spec
}

#[test]
fn uncoupled_qubit_leaves_the_peak_in_place() {
    let spec = compressed(0.0, 2e4, 0.0);
    let m = simulated_shift_with(&spec, Branch::Up, &SolverControls::default()).unwrap();
    assert!(m.shift.abs() <= m.spectrum.resolution() / 10.0, "{}", m.shift);
}

#[test]
fn simulated_pull_agrees_with_diagonalization() {
    let spec = compressed(1e3, 2e4, 0.0);
    let up = simulated_shift_with(&spec, Branch::Up, &SolverControls::default()).unwrap();
    let down = simulated_shift_with(&spec, Branch::Down, &SolverControls::default()).unwrap();
    let exact = eigen_shift(&spec).unwrap();
    assert!((up.shift / exact - 1.0).abs() < 0.1, "{} vs {exact}", up.shift);
    assert!((up.shift + down.shift).abs() < 0.05 * up.shift.abs(), "{} {}", up.shift, down.shift);
}

#[test]
fn resolved_branch_pulls_are_read_on_the_prepared_side() {
    // Δ/λ ≈ 1.3: qubit flips during the window leave a resolved mirror peak.
    let mut spec = SystemSpec::new(2e5, 1.96e5, 0.0, 3e3, 8);
    spec.rates = DecayRates::standard(0.0).unwrap();
    let m = simulated_shift_with(&spec, Branch::Up, &SolverControls::default()).unwrap();
    let window = (m.spectrum.freqs[0], *m.spectrum.freqs.last().unwrap());
    assert!(matches!(fit_peak(&m.spectrum, window), Err(Error::AmbiguousPeak(_))));
    let exact = eigen_shift(&spec).unwrap();
    assert!(m.shift < 0.0 && (m.shift / exact - 1.0).abs() < 0.1, "{} vs {exact}", m.shift);
}

#[test]
fn dressed_state_follows_microwave_detuning() {
    let spec = SystemSpec::new(1e6, 3e5, 4e5, 0.0, 4);
    let up = dressed_qubit_state(&spec, Branch::Up).unwrap();
    // Eigenvector of (Ω σz + Δν σx)/2 with eigenvalue +√(Ω²+Δν²)/2.
    let e = spec.omega_r.hypot(spec.delta_nu);
    let res0 = spec.omega_r * up[0] + spec.delta_nu * up[1] - e * up[0];
    let res1 = spec.delta_nu * up[0] - spec.omega_r * up[1] - e * up[1];
    assert!(res0.norm() < 1e-9 * e && res1.norm() < 1e-9 * e);
}

#[test]
fn threshold_inverts_a_quadratic_pull() {
    let c = 0.3;
    let settings = ThresholdSettings { target: 200.0, ..Default::default() };
    let r = find_threshold(|l| Ok(-c * l * l), 10.0, &settings).unwrap();
    assert!((r.lambda_min / (200.0_f64 / c).sqrt() - 1.0).abs() < 1e-3);
    assert!(r.evaluations <= settings.max_evals);
}

#[test]
fn vanishing_target_drives_threshold_to_zero() {
    let mut last = f64::INFINITY;
    for target in [1e-2, 1e-4, 1e-6] {
        let settings = ThresholdSettings { target, max_evals: 200, ..Default::default() };
        let r = find_threshold(|l| Ok(l * l / 40.0), 1.0, &settings).unwrap();
        assert!(r.lambda_min < last);
        last = r.lambda_min;
    }
    assert!(last < 1e-2);
}

#[test]
fn threshold_reports_non_monotonic_pull() {
    let settings = ThresholdSettings { target: 5.0, ..Default::default() };
    let err = find_threshold(|l| Ok(1.0 + (l - 3.0).powi(2).min(0.5)), 1.0, &settings).unwrap_err();
    assert!(matches!(err, Error::NonMonotonic(_)), "{err:?}");
    let bad = ThresholdSettings { target: 0.0, ..Default::default() };
    assert!(find_threshold(|l| Ok(l), 1.0, &bad).is_err());
}

#[test]
fn sweep_keeps_failed_points() {
    let spec = compressed(1e3, 2e4, 0.0);
    let out = threshold_sweep(&spec, &[(-1.0, 0.0), (2e5, 0.0)], &ThresholdSettings::default(), &SolverControls::default());
    assert_eq!(out.len(), 2);
    assert!(out.iter().all(|p| p.outcome.is_err()));
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn fit_center_within_tenth_of_spacing(offset in -0.5f64..0.5, width in 120.0f64..400.0, step in 5.0f64..20.0) {
        let freqs = grid(2e5, 60.0 * width, step);
        let center = 2e5 + offset * step;
        let fit = fit_peak(&synthetic(&freqs, center, width, 1.0), (freqs[0], freqs[freqs.len() - 1])).unwrap();
        prop_assert!((fit.center - center).abs() <= step / 10.0);
        prop_assert!(fit.width > 0.0);
    }

    #[test]
    fn closed_form_is_odd_about_resonance(lambda in 1.0f64..1e4, omega_m in 1e4f64..1e7, x in 0.01f64..0.5) {
        let below = analytic_shift(lambda, omega_m * (1.0 - x), omega_m).unwrap();
        prop_assert!(below > 0.0);
        prop_assert!(analytic_shift(lambda, omega_m * (1.0 + x), omega_m).unwrap() < 0.0);
        prop_assert!((analytic_shift(2.0 * lambda, omega_m * (1.0 - x), omega_m).unwrap() / below - 4.0).abs() < 1e-12);
    }
}
