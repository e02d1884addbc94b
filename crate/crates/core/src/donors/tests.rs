use proptest::prelude::*;

use super::*;

fn bismuth() -> DonorSpecies {
    DonorSpecies {
        name: "bismuth".into(),
        gamma_e: 28.0e9,
        gamma_n: 6.962e6,
        nuclear_spin: 4.5,
        a_hf: 1475.4e6,
        strain_coeff: 22e9,
    }
}

fn electron_only() -> DonorSpecies {
    DonorSpecies {
        name: "phosphorus".into(),
        gamma_e: 28.0e9,
        gamma_n: 0.0,
        nuclear_spin: 0.0,
        a_hf: 0.0,
        strain_coeff: 140e9,
    }
}

/// Closed-form level in the `m_F` block, upper (`+1`) or lower (`−1`) branch.
fn breit_rabi(s: &DonorSpecies, b: f64, two_mf: i32, branch: f64) -> f64 {
    let mf = two_mf as f64 / 2.0;
    let i = s.nuclear_spin;
    let g = s.gamma_e + s.gamma_n;
    let a = s.a_hf;
    if two_mf.abs() as f64 == 2.0 * i + 1.0 {
        // Stretched states: a single product state.
        let sign = mf.signum();
        return a * i / 2.0 + sign * (s.gamma_e * b / 2.0 - s.gamma_n * b * i);
    }
    let root = (a * a * (i + 0.5).powi(2) + 2.0 * a * mf * g * b + g * g * b * b).sqrt();
    -a / 4.0 - s.gamma_n * b * mf + branch * root / 2.0
}

fn breit_rabi_slope(s: &DonorSpecies, b: f64, two_mf: i32, branch: f64) -> f64 {
    let mf = two_mf as f64 / 2.0;
    let i = s.nuclear_spin;
    let g = s.gamma_e + s.gamma_n;
    let a = s.a_hf;
    if two_mf.abs() as f64 == 2.0 * i + 1.0 {
        return mf.signum() * (s.gamma_e / 2.0 - s.gamma_n * i);
    }
    let root = (a * a * (i + 0.5).powi(2) + 2.0 * a * mf * g * b + g * g * b * b).sqrt();
    -s.gamma_n * mf + branch * (a * mf * g + g * g * b) / (2.0 * root)
}

fn closed_form_level(s: &DonorSpecies, b: f64, l: LevelLabel) -> f64 {
    breit_rabi(s, b, l.two_mf(), l.two_ms as f64)
}

#[test]
fn species_files_parse() {
    let text = "# test\nname = bismuth\ngamma_e = 28.0e9\ngamma_n=6.962e6\nI = 9/2 # nuclear spin\nA_hf = 1475.4e6\nstrain_coeff = 22e9\n";
    assert_eq!(DonorSpecies::parse(text).unwrap(), bismuth());
    let shipped = concat!(env!("CARGO_MANIFEST_DIR"), "/data/species/");
    assert_eq!(DonorSpecies::load(format!("{shipped}bismuth.species")).unwrap(), bismuth());
    assert_eq!(DonorSpecies::load(format!("{shipped}phosphorus.species")).unwrap(), electron_only());
}

#[test]
fn species_parse_errors_carry_line_numbers() {
    let err = DonorSpecies::parse("name = x\n\ngamma_e = fast\n").unwrap_err();
    assert!(matches!(err, Error::Parse { line: 3, .. }), "{err:?}");
    let err = DonorSpecies::parse("name = x\nspin 4\n").unwrap_err();
    assert!(matches!(err, Error::Parse { line: 2, .. }));
    assert!(DonorSpecies::parse("name = x\ngamma_e = 1\n").is_err());
    let mut s = bismuth();
    s.nuclear_spin = 0.3;
    assert!(s.validate().is_err());
    s.nuclear_spin = 4.5;
    s.gamma_e = -1.0;
    assert!(s.validate().is_err());
}

#[test]
fn electron_only_hamiltonian_is_a_zeeman_doublet() {
    let s = electron_only();
    let h = spin_hamiltonian(&s, 0.35).unwrap();
    assert_eq!(h.dim(), 2);
    let e = s.gamma_e * 0.35 / 2.0;
    assert!((h.matrix()[[0, 0]].re - e).abs() < 1e-6 && (h.matrix()[[1, 1]].re + e).abs() < 1e-6);
    assert_eq!(h.matrix()[[0, 1]], ZERO);
    for b in [1e-3, 0.1, 0.35, 2.0] {
        let g = transition_gradient(&s, b, (0, 1)).unwrap();
        assert!((g / 28.0e9 - 1.0).abs() < 1e-9, "{g}");
    }
}

#[test]
fn bismuth_has_twenty_levels() {
    let h = spin_hamiltonian(&bismuth(), 0.2).unwrap();
    assert_eq!(h.dim(), 20);
    assert!(h.is_hermitian(1e-9));
    assert_eq!(levels(&bismuth(), 0.2).unwrap().len(), 20);
}

#[test]
fn zero_field_hyperfine_multiplets() {
    let s = bismuth();
    let e = spin_hamiltonian(&s, 0.0).unwrap().eigenvalues();
    let a = s.a_hf;
    let lower = -a * (s.nuclear_spin + 1.0) / 2.0;
    let upper = a * s.nuclear_spin / 2.0;
    let tol = 1e-6 * a;
    assert_eq!(e.iter().filter(|x| (*x - lower).abs() < tol).count(), 9);
    assert_eq!(e.iter().filter(|x| (*x - upper).abs() < tol).count(), 11);
    assert!(((upper - lower) - a * (s.nuclear_spin + 0.5)).abs() < 1e-6);
}

#[test]
fn levels_match_breit_rabi() {
    let s = bismuth();
    for b in [1e-4, 0.01, 0.0898, 0.3, 1.0, 5.0] {
        for lv in levels(&s, b).unwrap() {
            let want = closed_form_level(&s, b, lv.label);
            assert!((lv.energy - want).abs() < 1e-6 * s.a_hf, "B={b} {}: {} vs {want}", lv.label, lv.energy);
        }
    }
}

#[test]
fn gradients_match_breit_rabi_slopes() {
    let s = bismuth();
    for b in [0.02, 0.0898, 0.4, 1.5] {
        let lv = levels(&s, b).unwrap();
        for (i, j) in [(0, 19), (3, 12), (8, 9), (1, 17)] {
            let Ok(g) = transition_gradient(&s, b, (i, j)) else { continue };
            let (li, lj) = (lv[i].label, lv[j].label);
            let want = breit_rabi_slope(&s, b, lj.two_mf(), lj.two_ms as f64)
                - breit_rabi_slope(&s, b, li.two_mf(), li.two_ms as f64);
            assert!((g - want).abs() < 1e-6 * s.gamma_e, "B={b} ({i},{j}): {g} vs {want}");
        }
    }
}

#[test]
fn high_field_gradients_approach_electron_and_nuclear_asymptotes() {
    let s = bismuth();
    // Hyperfine corrections to the slopes fall off as A²/(γ_e B²).
    let b = 1000.0;
    let lv = levels(&s, b).unwrap();
    let pos = |l: LevelLabel| lv.iter().position(|x| x.label == l).unwrap();
    for two_mi in [-9, -3, 1, 9] {
        let down = pos(LevelLabel { two_ms: -1, two_mi });
        let up = pos(LevelLabel { two_ms: 1, two_mi });
        let g = transition_gradient(&s, b, (down.min(up), down.max(up))).unwrap().abs();
        assert!((g - s.gamma_e).abs() < 0.01 * s.gamma_n, "mI={two_mi}/2: {g}");
    }
    // Flip-flop lines mS: −½ → +½ with mI → mI ∓ 1.
    for (from, to, want) in [(1, -1, s.gamma_e + s.gamma_n), (-1, 1, s.gamma_e - s.gamma_n)] {
        let down = pos(LevelLabel { two_ms: -1, two_mi: from });
        let up = pos(LevelLabel { two_ms: 1, two_mi: to });
        let g = transition_gradient(&s, b, (down.min(up), down.max(up))).unwrap().abs();
        assert!((g - want).abs() < 0.01 * s.gamma_n, "{g} vs {want}");
    }
}

#[test]
fn low_field_gradients_differ_between_nuclear_manifolds() {
    let s = bismuth();
    let res = esr_resonances(&s, 9.7e9, 1.0).unwrap();
    let grads: Vec<f64> = res.iter().map(|r| transition_gradient(&s, r.field, r.transition).unwrap().abs()).collect();
    let spread = grads.iter().cloned().fold(f64::NEG_INFINITY, f64::max) - grads.iter().cloned().fold(f64::INFINITY, f64::min);
    assert!(spread > 0.05 * s.gamma_e, "{grads:?}");
    assert!(grads.iter().all(|g| *g < s.gamma_e + s.gamma_n));
}

#[test]
fn resonances_hit_the_drive_frequency() {
    let s = bismuth();
    let res = esr_resonances(&s, 9.7e9, 1.0).unwrap();
    assert_eq!(res.len(), 10);
    assert!(res.windows(2).all(|w| w[0].field <= w[1].field));
    for r in &res {
        let f = transition_frequency(&s, r.field, r.transition).unwrap();
        assert!((f - 9.7e9).abs() < 1.0, "{r:?}: {f}");
        assert_eq!(r.lower.two_mi, r.upper.two_mi);
    }
    let p = esr_resonances(&electron_only(), 9.7e9, 1.0).unwrap();
    assert_eq!(p.len(), 1);
    assert!((p[0].field - 9.7e9 / 28.0e9).abs() < 1e-12);
}

#[test]
fn crossing_inside_stencil_is_reported() {
    // Bismuth levels do not cross below ~100 T; a heavy-nucleus toy species
    // crosses near A/(2γ_n) = 0.05 T.
    let s = DonorSpecies {
        name: "toy".into(),
        gamma_e: 28.0e9,
        gamma_n: 1.0e9,
        nuclear_spin: 0.5,
        a_hf: 100e6,
        strain_coeff: 0.0,
    };
    // Locate a field where two energy-adjacent levels swap labels.
    let (mut lo, mut hi) = (1e-3, 1e-3 + 1e-4);
    let order = |b: f64| levels(&s, b).unwrap().iter().map(|l| l.label).collect::<Vec<_>>();
    let (mut b0, mut b1) = (lo, lo);
    let step = 1e-4;
    while hi < 2.0 {
        if order(lo) != order(hi) {
            b0 = lo;
            b1 = hi;
            break;
        }
        lo = hi;
        hi += step;
    }
    assert!(b1 > b0, "no crossing found");
    let (la, lb) = (order(b0), order(b1));
    let k = (0..la.len()).find(|&k| la[k] != lb[k]).unwrap();
    for _ in 0..60 {
        let mid = 0.5 * (b0 + b1);
        if order(mid)[k] == la[k] {
            b0 = mid;
        } else {
            b1 = mid;
        }
    }
    let crossing = 0.5 * (b0 + b1);
    let err = transition_gradient(&s, crossing, (k, if k + 1 < la.len() { k + 1 } else { k - 1 })).unwrap_err();
    assert!(matches!(err, Error::Stencil { .. }), "{err:?}");
}

#[test]
fn gradient_preconditions() {
    let s = bismuth();
    assert!(transition_gradient(&s, 0.0, (0, 1)).is_err());
    assert!(transition_gradient(&s, 0.1, (3, 3)).is_err());
    assert!(transition_gradient(&s, 0.1, (0, 20)).is_err());
    assert!(spin_hamiltonian(&s, -1.0).is_err());
}

#[test]
fn coupling_calculators() {
    let p = electron_only();
    let mode = MechanicalMode::new(100e-15, 1e6).unwrap();
    let lam = gradient_coupling(&p, &mode, 1e6, 0.3, (0, 1)).unwrap();
    assert!((lam - 2800.0).abs() < 1e-9 * 2800.0, "{lam}");
    assert_eq!(gradient_coupling(&p, &mode, 0.0, 0.3, (0, 1)).unwrap(), 0.0);
    assert_eq!(strain_coupling(&bismuth(), 0.0).unwrap(), 0.0);
    assert!((strain_coupling(&bismuth(), 1.82e-8).unwrap() - 400.0).abs() < 1.0);
    assert_eq!(ensemble_coupling(200.0, 225).unwrap(), 3000.0);
    assert_eq!(ensemble_coupling(100.0, 4).unwrap(), 200.0);
    assert_eq!(ensemble_coupling(37.5, 1).unwrap(), 37.5);
    assert!(ensemble_coupling(1.0, 0).is_err());
    assert!(gradient_coupling(&p, &mode, -1.0, 0.3, (0, 1)).is_err());
}

#[test]
fn mode_consistency() {
    let m = 1e-15;
    let mode = MechanicalMode::from_mass(m, 1e6).unwrap();
    assert!((mode.x_zpf - (HBAR / (2.0 * m * TAU * 1e6)).sqrt()).abs() < 1e-30);
    mode.validate().unwrap();
    let off = MechanicalMode { x_zpf: mode.x_zpf * 1.1, ..mode };
    assert!(off.validate().is_err());
    let near = MechanicalMode { x_zpf: mode.x_zpf * 1.03, ..mode };
    near.validate().unwrap();
    assert!(MechanicalMode::new(0.0, 1e6).is_err());
}

#[test]
fn profile_interpolation_oracles() {
    let text = "# linear\n0.0 1.0\n1e-7 3.0\n2e-7 5.0\n4e-7 9.0\n";
    let p = parse_profile(text, ProfileKind::Gradient).unwrap();
    assert_eq!(p.note, "linear");
    assert_eq!(p.interp(1e-7).unwrap(), 3.0);
    assert_eq!(p.interp(4e-7).unwrap(), 9.0);
    assert!((p.interp(1.5e-7).unwrap() - 4.0).abs() < 1e-12);
    assert!((p.interp(3e-7).unwrap() - 7.0).abs() < 1e-12);
    assert!(matches!(p.interp(5e-7), Err(Error::OutOfRange { .. })));
    assert!(matches!(p.interp(-1e-9), Err(Error::OutOfRange { .. })));
}

#[test]
fn profile_parse_errors() {
    let err = parse_profile("# c\n0 1\n1 2 3\n", ProfileKind::Strain).unwrap_err();
    assert!(matches!(err, Error::Parse { line: 3, .. }));
    let err = parse_profile("0 1\n2 2\n1 3\n", ProfileKind::Strain).unwrap_err();
    assert!(matches!(err, Error::Parse { line: 3, .. }));
    let err = parse_profile("0 1\nx 2\n", ProfileKind::Strain).unwrap_err();
    assert!(matches!(err, Error::Parse { line: 2, .. }));
    assert!(parse_profile("# only\n0 1\n", ProfileKind::Strain).is_err());
    assert!(matches!(load_profile("/nonexistent/profile.txt", ProfileKind::Strain), Err(Error::Io { .. })));
}

#[test]
fn shipped_profiles_load() {
    let dir = concat!(env!("CARGO_MANIFEST_DIR"), "/data/profiles/");
    let magnet = load_profile(format!("{dir}magnet_310nm.txt"), ProfileKind::Gradient).unwrap();
    assert!(magnet.note.contains("310 nm"));
    let far: Vec<f64> = magnet.distance.iter().zip(&magnet.value).filter(|(d, _)| **d >= 20e-9).map(|(_, v)| *v).collect();
    assert!(far.windows(2).all(|w| w[1] < w[0]), "gradient decays away from the magnet");
    let strain = load_profile(format!("{dir}strain_slit.txt"), ProfileKind::Strain).unwrap();
    let mode = MechanicalMode::new(100e-15, 1e6).unwrap();
    let peak = profile_coupling(&bismuth(), &mode, &strain, 0.0, 0.1, (0, 1)).unwrap();
    assert!((peak - 400.4).abs() < 0.01, "{peak}");
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn couplings_are_linear(x in 1e-3f64..1e7, b in 0.05f64..2.0) {
        let p = electron_only();
        let mode = MechanicalMode::new(80e-15, 1e6).unwrap();
        let one = gradient_coupling(&p, &mode, x, b, (0, 1)).unwrap();
        let two = gradient_coupling(&p, &mode, 2.0 * x, b, (0, 1)).unwrap();
        prop_assert_eq!(two, 2.0 * one);
        let s1 = strain_coupling(&bismuth(), x * 1e-15).unwrap();
        let s2 = strain_coupling(&bismuth(), 2.0 * x * 1e-15).unwrap();
        prop_assert_eq!(s2, 2.0 * s1);
    }

    #[test]
    fn ensemble_squared_is_linear_in_n(lambda in 1.0f64..1e4, n in 1u64..100_000) {
        let l = ensemble_coupling(lambda, n).unwrap();
        prop_assert!((l * l / (n as f64 * lambda * lambda) - 1.0).abs() < 1e-12);
    }

    #[test]
    fn levels_are_continuous_in_field(b in 1e-3f64..1.0) {
        let s = bismuth();
        let db = 1e-5;
        let e0 = levels(&s, b).unwrap();
        let e1 = levels(&s, b + db).unwrap();
        let bound = 2.0 * (s.gamma_e + s.gamma_n * s.nuclear_spin) * db;
        for (a, c) in e0.iter().zip(&e1) {
            prop_assert!((a.energy - c.energy).abs() <= bound);
        }
    }

    #[test]
    fn pchip_preserves_monotone_data(steps in prop::collection::vec((1e-9f64..1e-7, 0.0f64..10.0), 3..12), q in 0.0f64..1.0) {
        let mut x = vec![0.0];
        let mut y = vec![0.0];
        for (dx, dy) in &steps {
            x.push(x.last().unwrap() + dx);
            y.push(y.last().unwrap() + dy);
        }
        let p = FieldProfile::new(ProfileKind::Gradient, x.clone(), y.clone(), "").unwrap();
        let xq = q * x.last().unwrap();
        let v = p.interp(xq).unwrap();
        let k = x.iter().position(|&xi| xi >= xq).unwrap().max(1);
        prop_assert!(v >= y[k - 1] - 1e-12 && v <= y[k] + 1e-12);
        let v2 = p.interp((xq * 1.0001).min(*x.last().unwrap())).unwrap();
        prop_assert!(v2 >= v - 1e-12);
    }
}
