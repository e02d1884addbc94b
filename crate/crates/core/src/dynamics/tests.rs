use super::*;
use crate::hilbert::{fock_destroy, pauli, thermal_state, PauliAxis};
use crate::linalg::{max_abs, ONE, ZERO};
use crate::models::DecayRates;
use proptest::prelude::*;
use rand::{Rng, SeedableRng};

fn random_matrix(d: usize, seed: u64) -> CMatrix {
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
    Array2::from_shape_fn((d, d), |_| C64::new(rng.random::<f64>() - 0.5, rng.random::<f64>() - 0.5))
}

fn random_state(space: HilbertSpace, seed: u64) -> State {
    let g = random_matrix(space.total(), seed);
    let rho = g.dot(&linalg::dagger(&g));
    let tr = linalg::trace(&rho);
    State::new(space, rho.mapv(|z| z / tr)).unwrap()
}

fn decaying_qubit(kappa: f64) -> LindbladModel {
    let h = Operator::zeros(&HilbertSpace::single(2).unwrap());
    LindbladModel::new(h, vec![(pauli(PauliAxis::Minus), kappa)]).unwrap()
}

fn thermal_oscillator(n: usize, omega: f64, kappa: f64, n_bar: f64) -> LindbladModel {
    let a = fock_destroy(n).unwrap();
    let h = (&a.dagger() * &a).scale(omega);
    LindbladModel::new(h, vec![(a.clone(), kappa * (n_bar + 1.0)), (a.dagger(), kappa * n_bar)]).unwrap()
}

fn excited() -> State {
    State::basis(HilbertSpace::single(2).unwrap(), 0).unwrap()
}

fn small_qubit_oscillator() -> LindbladModel {
    let mut spec = SystemSpec::new(1.0e5, 0.9e5, 2.0e3, 2.0e3, 5);
    spec.rates = DecayRates::standard(0.5).unwrap().scaled(20.0);
    LindbladModel::qubit_oscillator(&spec).unwrap()
}

#[test]
fn zero_generator_has_zero_rhs_and_frozen_state() {
    let space = HilbertSpace::new(vec![2, 3]).unwrap();
    let model = LindbladModel::new(Operator::zeros(&space), vec![]).unwrap();
    let rho = random_state(space, 3);
    assert_eq!(lindblad_rhs(&model, &rho).unwrap(), Array2::<C64>::zeros((6, 6)));
    for engine in [Engine::Propagator, Engine::Adaptive] {
        let traj = evolve(&model, &rho, 1.0, &SolverControls::default().with_engine(engine)).unwrap();
        for s in &traj.states {
            assert!(max_abs(&(s.rho() - rho.rho())) < 1e-15);
        }
    }
}

#[test]
fn rhs_rejects_mismatched_state() {
    let model = decaying_qubit(1.0);
    let other = random_state(HilbertSpace::single(3).unwrap(), 1);
    assert!(matches!(lindblad_rhs(&model, &other), Err(Error::Dimension(_))));
    assert!(LindbladModel::new(Operator::zeros(&HilbertSpace::single(2).unwrap()), vec![(pauli(PauliAxis::Z), -1.0)]).is_err());
}

#[test]
fn excited_population_decay_rate() {
    let kappa = 3.0;
    let model = decaying_qubit(kappa);
    let rhs = lindblad_rhs(&model, &excited()).unwrap();
    assert!((rhs[[0, 0]] - C64::new(-kappa, 0.0)).norm() < 1e-15);
    assert!((rhs[[1, 1]] - C64::new(kappa, 0.0)).norm() < 1e-15);
}

#[test]
fn literal_sign_convention() {
    // i[ρ, H] for H = σz/2 rotates ⟨σ+⟩ as e^{−it}: ρ01 evolves as e^{−it}.
    let h = pauli(PauliAxis::Z).scale(0.5);
    let model = LindbladModel::new(h, vec![]).unwrap();
    let plus = State::pure(HilbertSpace::single(2).unwrap(), &[ONE, ONE]).unwrap();
    let rhs = lindblad_rhs(&model, &plus).unwrap();
    assert!((rhs[[0, 1]] - C64::new(0.0, -0.5)).norm() < 1e-15);
}

#[test]
fn exponential_decay_both_engines() {
    let kappa = 2.0;
    let model = decaying_qubit(kappa);
    for engine in [Engine::Propagator, Engine::Adaptive] {
        let traj = evolve(&model, &excited(), 3.0, &SolverControls::default().with_engine(engine)).unwrap();
        for (t, s) in traj.times.iter().zip(&traj.states) {
            let p = s.rho()[[0, 0]].re;
            let exact = (-kappa * t).exp();
            assert!((p - exact).abs() / exact < 1e-6, "{engine:?} t={t} p={p} exact={exact}");
        }
    }
}

#[test]
fn thermal_relaxation_reaches_detailed_balance() {
    let n_bar = 0.7;
    let model = thermal_oscillator(20, 5.0, 1.0, n_bar);
    let vac = thermal_state(20, 0.0).unwrap();
    let n_op = fock_destroy(20).map(|a| &a.dagger() * &a).unwrap();
    let controls = SolverControls { n_points: 3, ..Default::default() };
    let mut traj = evolve(&model, &vac, 30.0, &controls).unwrap();
    let series = traj.record("n", &n_op).unwrap().to_vec();
    // truncated Bose–Einstein mean at 20 levels
    let r: f64 = n_bar / (n_bar + 1.0);
    let (num, den) = (0..20).fold((0.0, 0.0), |(a, b), n| (a + n as f64 * r.powi(n), b + r.powi(n)));
    assert!((series[2].re - num / den).abs() < 1e-4);
    assert!((series[2].re - n_bar).abs() < 1e-4);
}

#[test]
fn steady_state_of_thermal_oscillator_is_bose_einstein() {
    let n_bar = 1.3;
    let model = thermal_oscillator(25, 1.0, 0.1, n_bar);
    let ss = steady_state(&model).unwrap();
    let expected = thermal_state(25, n_bar).unwrap();
    assert!(max_abs(&(ss.rho() - expected.rho())) < 1e-10);
}

#[test]
fn steady_state_errors_and_ground_state() {
    let dephasing = LindbladModel::new(Operator::zeros(&HilbertSpace::single(2).unwrap()), vec![(pauli(PauliAxis::Z), 1.0)]).unwrap();
    assert!(matches!(steady_state(&dephasing), Err(Error::Degenerate(_))));

    let ss = steady_state(&decaying_qubit(1.0)).unwrap();
    let ground = State::basis(HilbertSpace::single(2).unwrap(), 1).unwrap();
    assert!(max_abs(&(ss.rho() - ground.rho())) < 1e-12);
}

#[test]
fn superoperator_matches_rhs() {
    let model = small_qubit_oscillator();
    let l = superoperator(&model);
    let x = random_matrix(10, 9);
    let direct = model.apply(&x);
    let via = propagator::unvectorize(l.dot(&propagator::vectorize(&x)).view(), 10);
    assert!(max_abs(&(direct - via)) < 1e-9 * linalg::norm_one(&l));
}

#[test]
fn parity_splits_the_two_qubit_liouvillian() {
    let spec = crate::models::TwoQubitSpec::symmetric(1e3, 100.0, 30.0, 3, 0.5, DecayRates::standard(0.5).unwrap());
    let model = LindbladModel::two_qubit(&spec).unwrap();
    let l = superoperator(&model);
    let blocks = invariant_blocks(&l);
    assert_eq!(blocks.len(), 2);
    assert_eq!(blocks.iter().map(|b| b.len()).sum::<usize>(), l.nrows());

    let dt = 3e-4;
    let full = linalg::expm(&l.mapv(|z| z * dt));
    let g = random_matrix(12, 21);
    let x = g.dot(&linalg::dagger(&g));
    let stack = propagator::vectorize(&x).insert_axis(ndarray::Axis(1));
    let split = propagator::PropagatorCache::new(&model).apply(dt, &stack);
    let direct = full.dot(&stack);
    assert!(max_abs(&(split - direct)) < 1e-11);
}

#[test]
fn adaptive_frame_rhs_matches_lab_rhs_at_origin() {
    let model = small_qubit_oscillator();
    let mut frame = adaptive::FrameRhs::new(&model);
    let x = random_matrix(10, 4);
    let mut out = Array2::zeros((10, 10));
    frame.eval(0.0, &x, &mut out);
    // At s = 0 the frame derivative equals the lab derivative minus −i[H₀, x].
    let h = model.hamiltonian().matrix();
    let h0 = Array2::from_shape_fn((10, 10), |(i, j)| if i == j { h[[i, j]] } else { ZERO });
    let free = (x.dot(&h0) - h0.dot(&x)).mapv(|z| I * z);
    let expected = model.apply(&x) - free;
    assert!(max_abs(&(out - expected)) < 1e-9 * linalg::max_abs(h));
}

#[test]
fn engines_agree_on_coupled_model() {
    let model = small_qubit_oscillator();
    let space = model.space().clone();
    let rho0 = random_state(space, 21);
    let times: Vec<f64> = (0..=20).map(|k| k as f64 * 2.0e-5).collect();
    let a = evolve_on(&model, &rho0, &times, &SolverControls::default().with_engine(Engine::Propagator)).unwrap();
    let b = evolve_on(&model, &rho0, &times, &SolverControls::default().with_engine(Engine::Adaptive)).unwrap();
    for (x, y) in a.states.iter().zip(&b.states) {
        assert!(max_abs(&(x.rho() - y.rho())) < 1e-7);
    }
}

#[test]
fn step_halving_stability() {
    let model = small_qubit_oscillator();
    let rho0 = random_state(model.space().clone(), 2);
    let ops = QubitOscillatorOps::new(5).unwrap();
    let times: Vec<f64> = (0..=10).map(|k| k as f64 * 1.0e-4).collect();
    let base = SolverControls::default().with_engine(Engine::Adaptive);
    // Tolerance / 32 halves the step of a fifth-order method.
    let fine = base.clone().with_tolerances(base.rtol / 32.0, base.atol / 32.0);
    let mut a = evolve_on(&model, &rho0, &times, &base).unwrap();
    let mut b = evolve_on(&model, &rho0, &times, &fine).unwrap();
    for (name, op) in [("x", &ops.position), ("z", &ops.sigma_z), ("n", &ops.number)] {
        let sa = a.record(name, op).unwrap().to_vec();
        let sb = b.record(name, op).unwrap().to_vec();
        for (p, q) in sa.iter().zip(&sb) {
            let scale = q.norm().max(1e-3);
            assert!((p - q).norm() / scale < 1e-6, "{name}: {p} vs {q}");
        }
    }
}

#[test]
fn correlation_definitions() {
    let model = thermal_oscillator(6, 1.0, 0.2, 0.3);
    let rho0 = thermal_state(6, 0.3).unwrap();
    let a = fock_destroy(6).unwrap();
    let x = &a.dagger() + &a;
    let id = Operator::identity(x.space());
    let c0 = correlation(&model, &rho0, &x, &x, &[0.0], &SolverControls::default()).unwrap();
    let direct = linalg::trace_product(&x.matrix().dot(x.matrix()), rho0.rho());
    assert!((c0[0] - direct).norm() < 1e-14);
    let ones = correlation(&model, &rho0, &id, &id, &[0.0, 0.5, 3.0], &SolverControls::default()).unwrap();
    for v in ones {
        assert!((v - ONE).norm() < 1e-9);
    }
    let near = correlation(&model, &rho0, &x, &x, &[0.0, 1e-12], &SolverControls::default()).unwrap();
    assert!((near[1] - near[0]).norm() < 1e-8);
}

#[test]
fn damped_oscillator_correlator() {
    // ⟨X(τ)X(0)⟩ = e^{−κτ/2}[(n̄+1)e^{−iωτ} + n̄ e^{iωτ}]
    let (omega, kappa, n_bar) = (10.0, 0.4, 0.2);
    let n = 14;
    let model = thermal_oscillator(n, omega, kappa, n_bar);
    let rho0 = thermal_state(n, n_bar).unwrap();
    let a = fock_destroy(n).unwrap();
    let x = &a.dagger() + &a;
    let taus: Vec<f64> = (0..40).map(|k| k as f64 * 0.25).collect();
    for engine in [Engine::Propagator, Engine::Adaptive] {
        let c = correlation(&model, &rho0, &x, &x, &taus, &SolverControls::default().with_engine(engine)).unwrap();
        for (t, v) in taus.iter().zip(&c) {
            let env = (-kappa * t / 2.0).exp();
            let exact = env * ((n_bar + 1.0) * C64::from_polar(1.0, -omega * t) + n_bar * C64::from_polar(1.0, omega * t));
            assert!((v - exact).norm() < 2e-6, "{engine:?} τ={t}: {v} vs {exact}");
        }
    }
}

#[test]
fn trajectories_keep_integrity() {
    let model = small_qubit_oscillator();
    let rho0 = random_state(model.space().clone(), 77);
    let traj = evolve(&model, &rho0, 5e-3, &SolverControls { n_points: 21, ..Default::default() }).unwrap();
    for s in &traj.states {
        assert!((s.trace() - ONE).norm() < 1e-9);
        assert!(s.min_eigenvalue() > -1e-7);
    }
}

#[test]
fn deadline_and_budget_errors() {
    let model = small_qubit_oscillator();
    let rho0 = random_state(model.space().clone(), 5);
    let past = SolverControls { deadline: Some(Instant::now()), ..Default::default() }.with_engine(Engine::Adaptive);
    assert!(matches!(evolve(&model, &rho0, 1e-3, &past), Err(Error::Timeout)));
    let tiny = SolverControls { max_steps: 3, ..Default::default() }.with_engine(Engine::Adaptive);
    assert!(matches!(evolve(&model, &rho0, 1e-3, &tiny), Err(Error::Solver { .. })));
    assert!(evolve(&model, &rho0, 0.0, &SolverControls::default()).is_err());
}

#[test]
fn two_qubit_model_channel_count() {
    let spec = crate::models::TwoQubitSpec::symmetric(1e6, 1e5, 1e4, 3, 0.0, DecayRates::standard(0.0).unwrap());
    let model = LindbladModel::two_qubit(&spec).unwrap();
    // a (κ↓), no a† at zero occupation, and three channels per qubit
    assert_eq!(model.channels().len(), 1 + 6);
    assert_eq!(model.space().dims(), &[2, 2, 3]);
}

proptest! {
    #[test]
    fn rhs_is_traceless(seed in 0u64..500) {
        let model = small_qubit_oscillator();
        let rho = random_state(model.space().clone(), seed);
        let rhs = lindblad_rhs(&model, &rho).unwrap();
        let scale = linalg::max_abs(model.hamiltonian().matrix());
        prop_assert!(linalg::trace(&rhs).norm() < 1e-12 * scale);
        prop_assert!(linalg::hermiticity_defect(&rhs) < 1e-12);
    }
}
