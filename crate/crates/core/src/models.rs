//! Hamiltonian builders for the dressed spin qubit, the mechanical resonator
//! and the linearized optomechanical readout.
//!
//! Every builder returns `H/ħ` with parameters used exactly as given, in Hz.
//! Composite layout is `[qubit, oscillator]` for one qubit,
//! `[qubit 1, qubit 2, oscillator]` for two, and `[mechanics, optical]` for the
//! optomechanical model.

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::hilbert::{fock_destroy, pauli, HilbertSpace, Operator, PauliAxis};
use crate::linalg::C64;

/// Mechanical linewidth used throughout the readout study [Hz].
pub const MECHANICAL_LINEWIDTH: f64 = 200.0;
/// Dressed-qubit `1/T1` [Hz].
pub const QUBIT_INV_T1: f64 = 10.0;
/// Dressed-qubit `1/T2` [Hz].
pub const QUBIT_INV_T2: f64 = 100.0;

/// Rates of the five jump channels `a`, `a†`, `σ−`, `σ+`, `σz` [Hz].
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct DecayRates {
    pub kappa_down: f64,
    pub kappa_up: f64,
    pub gamma_down: f64,
    pub gamma_up: f64,
    pub gamma_phi: f64,
}

impl DecayRates {
    pub fn zero() -> Self {
        Self::default()
    }

    /// Split a mechanical linewidth `kappa` into emission/absorption at
    /// occupation `n_bar`, share `1/T1` evenly between `σ−` and `σ+`, and pick
    /// the `σz` rate so that the coherence decay rate equals `1/T2`.
    pub fn calibrated(kappa: f64, n_bar: f64, inv_t1: f64, inv_t2: f64) -> Result<Self> {
        for (name, v) in [("kappa", kappa), ("n_bar", n_bar), ("inv_t1", inv_t1), ("inv_t2", inv_t2)] {
            if !v.is_finite() || v < 0.0 {
                return Err(invalid(name, format!("{v} must be finite and >= 0")));
            }
        }
        let gamma_1 = inv_t1 / 2.0;
        // σ± at rate γ each dephase at γ; σz at rate γφ dephases at 2γφ.
        let gamma_phi = (inv_t2 - gamma_1) / 2.0;
        if gamma_phi < 0.0 {
            return Err(invalid(
                "inv_t2",
                format!("1/T2 = {inv_t2} is below the T1 limit {gamma_1}"),
            ));
        }
        Ok(Self {
            kappa_down: kappa * (n_bar + 1.0),
            kappa_up: kappa * n_bar,
            gamma_down: gamma_1,
            gamma_up: gamma_1,
            gamma_phi,
        })
    }

    /// Rates of the readout study: 200 Hz mechanics, `1/T1` = 10 Hz, `1/T2` = 100 Hz.
    pub fn standard(n_bar: f64) -> Result<Self> {
        Self::calibrated(MECHANICAL_LINEWIDTH, n_bar, QUBIT_INV_T1, QUBIT_INV_T2)
    }

    pub fn scaled(&self, factor: f64) -> Self {
        Self {
            kappa_down: self.kappa_down * factor,
            kappa_up: self.kappa_up * factor,
            gamma_down: self.gamma_down * factor,
            gamma_up: self.gamma_up * factor,
            gamma_phi: self.gamma_phi * factor,
        }
    }

    fn validate(&self) -> Result<()> {
        for (name, v) in [
            ("kappa_down", self.kappa_down),
            ("kappa_up", self.kappa_up),
            ("gamma_down", self.gamma_down),
            ("gamma_up", self.gamma_up),
            ("gamma_phi", self.gamma_phi),
        ] {
            if !v.is_finite() || v < 0.0 {
                return Err(invalid(name, format!("rate {v} must be finite and >= 0")));
            }
        }
        Ok(())
    }
}

/// One dressed qubit coupled to the mechanical mode.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SystemSpec {
    pub omega_m: f64,
    pub omega_r: f64,
    #[serde(default)]
    pub delta_nu: f64,
    pub lambda: f64,
    #[serde(default)]
    pub gamma_e_b0: f64,
    /// Drive amplitude; when given it must equal `2·omega_r`.
    #[serde(default)]
    pub gamma_e_b1: Option<f64>,
    pub n_fock: usize,
    #[serde(default)]
    pub n_th: f64,
    #[serde(default)]
    pub rates: DecayRates,
}

impl SystemSpec {
    /// A noiseless spec at zero temperature.
    pub fn new(omega_m: f64, omega_r: f64, delta_nu: f64, lambda: f64, n_fock: usize) -> Self {
        Self {
            omega_m,
            omega_r,
            delta_nu,
            lambda,
            gamma_e_b0: 0.0,
            gamma_e_b1: None,
            n_fock,
            n_th: 0.0,
            rates: DecayRates::zero(),
        }
    }

    /// Rabi detuning `Ω_R − ω_m`.
    pub fn rabi_detuning(&self) -> f64 {
        self.omega_r - self.omega_m
    }

    pub fn drive_amplitude(&self) -> f64 {
        self.gamma_e_b1.unwrap_or(2.0 * self.omega_r)
    }

    pub fn validate(&self) -> Result<()> {
        non_negative("omega_m", self.omega_m)?;
        non_negative("omega_r", self.omega_r)?;
        non_negative("lambda", self.lambda)?;
        non_negative("gamma_e_b0", self.gamma_e_b0)?;
        non_negative("n_th", self.n_th)?;
        if !self.delta_nu.is_finite() {
            return Err(invalid("delta_nu", "must be finite"));
        }
        if let Some(b1) = self.gamma_e_b1 {
            non_negative("gamma_e_b1", b1)?;
            let scale = b1.abs().max(self.omega_r.abs()).max(1.0);
            if (b1 / 2.0 - self.omega_r).abs() > 1e-9 * scale {
                return Err(invalid(
                    "gamma_e_b1",
                    format!("Rabi frequency {} must equal half the drive amplitude {b1}", self.omega_r),
                ));
            }
        }
        if self.n_fock < 2 {
            return Err(Error::InvalidTruncation(self.n_fock));
        }
        self.rates.validate()
    }
}

/// Parameters of one qubit in the two-qubit bus.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BusQubit {
    pub omega_r: f64,
    #[serde(default)]
    pub delta_nu: f64,
    pub lambda: f64,
    #[serde(default)]
    pub gamma_down: f64,
    #[serde(default)]
    pub gamma_up: f64,
    #[serde(default)]
    pub gamma_phi: f64,
}

impl BusQubit {
    pub fn rabi_detuning(&self, omega_m: f64) -> f64 {
        self.omega_r - omega_m
    }
}

/// Two dressed qubits sharing one mechanical mode.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TwoQubitSpec {
    pub omega_m: f64,
    pub n_fock: usize,
    #[serde(default)]
    pub n_th: f64,
    #[serde(default)]
    pub kappa_down: f64,
    #[serde(default)]
    pub kappa_up: f64,
    pub qubits: [BusQubit; 2],
}

impl TwoQubitSpec {
    /// Identical qubits at Rabi frequency `omega_m − detuning`, given rates.
    pub fn symmetric(omega_m: f64, detuning: f64, lambda: f64, n_fock: usize, n_th: f64, rates: DecayRates) -> Self {
        let q = BusQubit {
            omega_r: omega_m - detuning,
            delta_nu: 0.0,
            lambda,
            gamma_down: rates.gamma_down,
            gamma_up: rates.gamma_up,
            gamma_phi: rates.gamma_phi,
        };
        Self {
            omega_m,
            n_fock,
            n_th,
            kappa_down: rates.kappa_down,
            kappa_up: rates.kappa_up,
            qubits: [q, q],
        }
    }

    /// Multiply every decay rate by `factor`.
    pub fn with_rates_scaled(&self, factor: f64) -> Self {
        let mut out = self.clone();
        out.kappa_down *= factor;
        out.kappa_up *= factor;
        for q in &mut out.qubits {
            q.gamma_down *= factor;
            q.gamma_up *= factor;
            q.gamma_phi *= factor;
        }
        out
    }

    /// Dispersive √iSWAP time `Δ¹Δ²/[λ¹λ²(Δ¹+Δ²)]` in magnitude.
    pub fn dispersive_gate_time(&self) -> Result<f64> {
        let d1 = self.qubits[0].rabi_detuning(self.omega_m);
        let d2 = self.qubits[1].rabi_detuning(self.omega_m);
        let denom = self.qubits[0].lambda * self.qubits[1].lambda * (d1 + d2);
        if denom == 0.0 {
            return Err(Error::Divergence("gate time with vanishing coupling or detuning sum".into()));
        }
        Ok((d1 * d2 / denom).abs())
    }

    pub fn validate(&self) -> Result<()> {
        non_negative("omega_m", self.omega_m)?;
        non_negative("n_th", self.n_th)?;
        non_negative("kappa_down", self.kappa_down)?;
        non_negative("kappa_up", self.kappa_up)?;
        for q in &self.qubits {
            non_negative("omega_r", q.omega_r)?;
            non_negative("lambda", q.lambda)?;
            non_negative("gamma_down", q.gamma_down)?;
            non_negative("gamma_up", q.gamma_up)?;
            non_negative("gamma_phi", q.gamma_phi)?;
            if !q.delta_nu.is_finite() {
                return Err(invalid("delta_nu", "must be finite"));
            }
        }
        if self.n_fock < 2 {
            return Err(Error::InvalidTruncation(self.n_fock));
        }
        Ok(())
    }
}

/// Linearized optomechanical readout parameters.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OptomechSpec {
    pub omega_m: f64,
    pub delta_cl: f64,
    pub g0: f64,
    pub n_cav: f64,
}

fn non_negative(name: &'static str, v: f64) -> Result<()> {
    if !v.is_finite() || v < 0.0 {
        return Err(invalid(name, format!("{v} must be finite and >= 0")));
    }
    Ok(())
}

/// Embedded operators on `[qubit, oscillator]`.
#[derive(Debug, Clone)]
pub struct QubitOscillatorOps {
    pub space: HilbertSpace,
    pub sigma_x: Operator,
    pub sigma_z: Operator,
    pub sigma_minus: Operator,
    pub sigma_plus: Operator,
    pub a: Operator,
    pub number: Operator,
    /// `a† + a`
    pub position: Operator,
}

impl QubitOscillatorOps {
    pub fn new(n_fock: usize) -> Result<Self> {
        let space = HilbertSpace::new(vec![2, n_fock])?;
        let a1 = fock_destroy(n_fock)?;
        let a = a1.embed(&space, 1)?;
        let ad = a.dagger();
        Ok(Self {
            sigma_x: pauli(PauliAxis::X).embed(&space, 0)?,
            sigma_z: pauli(PauliAxis::Z).embed(&space, 0)?,
            sigma_minus: pauli(PauliAxis::Minus).embed(&space, 0)?,
            sigma_plus: pauli(PauliAxis::Plus).embed(&space, 0)?,
            number: &ad * &a,
            position: &ad + &a,
            a,
            space,
        })
    }
}

/// Embedded operators on `[qubit 1, qubit 2, oscillator]`.
#[derive(Debug, Clone)]
pub struct TwoQubitOps {
    pub space: HilbertSpace,
    pub sigma_x: [Operator; 2],
    pub sigma_z: [Operator; 2],
    pub sigma_minus: [Operator; 2],
    pub sigma_plus: [Operator; 2],
    pub a: Operator,
    pub number: Operator,
    pub position: Operator,
}

impl TwoQubitOps {
    pub fn new(n_fock: usize) -> Result<Self> {
        let space = HilbertSpace::new(vec![2, 2, n_fock])?;
        let a = fock_destroy(n_fock)?.embed(&space, 2)?;
        let ad = a.dagger();
        let site = |axis, k| pauli(axis).embed(&space, k);
        Ok(Self {
            sigma_x: [site(PauliAxis::X, 0)?, site(PauliAxis::X, 1)?],
            sigma_z: [site(PauliAxis::Z, 0)?, site(PauliAxis::Z, 1)?],
            sigma_minus: [site(PauliAxis::Minus, 0)?, site(PauliAxis::Minus, 1)?],
            sigma_plus: [site(PauliAxis::Plus, 0)?, site(PauliAxis::Plus, 1)?],
            number: &ad * &a,
            position: &ad + &a,
            a,
            space,
        })
    }
}

/// Lab-frame qubit–oscillator Hamiltonian without drive.
pub fn build_qm_bare(spec: &SystemSpec) -> Result<Operator> {
    spec.validate()?;
    let ops = QubitOscillatorOps::new(spec.n_fock)?;
    let sz_x = &ops.sigma_z * &ops.position;
    let h = &(&ops.sigma_z.scale(spec.gamma_e_b0) + &ops.number.scale(2.0 * spec.omega_m))
        + &sz_x.scale(spec.lambda);
    Ok(h.scale(0.5))
}

/// Lab-frame Hamiltonian with the classical microwave drive at time `t` [s].
/// The drive frequency is `γ_eB₀ + Δν`.
pub fn build_qm_driven(spec: &SystemSpec, t: f64) -> Result<Operator> {
    let bare = build_qm_bare(spec)?;
    if !t.is_finite() {
        return Err(invalid("t", "time must be finite"));
    }
    let ops = QubitOscillatorOps::new(spec.n_fock)?;
    let nu_mw = spec.gamma_e_b0 + spec.delta_nu;
    let drive = spec.drive_amplitude() * (2.0 * std::f64::consts::PI * nu_mw * t).cos();
    Ok(&bare + &ops.sigma_x.scale(0.5 * drive))
}

/// Dressed-frame Hamiltonian with transverse spin–phonon coupling.
pub fn build_qm_dressed(spec: &SystemSpec) -> Result<Operator> {
    spec.validate()?;
    let ops = QubitOscillatorOps::new(spec.n_fock)?;
    Ok(dressed_from_ops(&ops, spec))
}

pub(crate) fn dressed_from_ops(ops: &QubitOscillatorOps, spec: &SystemSpec) -> Operator {
    let sx_x = &ops.sigma_x * &ops.position;
    let h = &(&(&ops.sigma_z.scale(spec.omega_r) + &ops.sigma_x.scale(spec.delta_nu))
        + &ops.number.scale(2.0 * spec.omega_m))
        - &sx_x.scale(spec.lambda);
    h.scale(0.5)
}

/// Jaynes–Cummings Hamiltonian of the resonantly driven dressed qubit.
pub fn build_qm_rwa(spec: &SystemSpec) -> Result<Operator> {
    spec.validate()?;
    if spec.delta_nu != 0.0 {
        return Err(Error::Precondition(format!(
            "rotating-wave model needs zero microwave detuning, got {}",
            spec.delta_nu
        )));
    }
    let ops = QubitOscillatorOps::new(spec.n_fock)?;
    let ad = ops.a.dagger();
    let exchange = &(&ops.sigma_minus * &ad) + &(&ops.sigma_plus * &ops.a);
    let h = &(&ops.sigma_z.scale(spec.omega_r) + &ops.number.scale(2.0 * spec.omega_m))
        - &exchange.scale(spec.lambda);
    Ok(h.scale(0.5))
}

/// Dispersive Hamiltonian, diagonal in the product basis.
pub fn build_qm_dispersive(spec: &SystemSpec) -> Result<Operator> {
    spec.validate()?;
    let detuning = spec.rabi_detuning();
    if detuning == 0.0 {
        return Err(Error::Divergence("dispersive model at zero Rabi detuning".into()));
    }
    let ops = QubitOscillatorOps::new(spec.n_fock)?;
    let chi = spec.lambda * spec.lambda / (4.0 * detuning);
    let pulled = &ops.number.scale(spec.omega_m) + &(&ops.sigma_z * &ops.number).scale(chi);
    let qubit = ops.sigma_z.scale(spec.omega_r / 2.0 + chi / 2.0);
    Ok(&pulled + &qubit)
}

/// Two dressed qubits coupled through the shared mechanical mode.
pub fn build_qmq_dressed(spec: &TwoQubitSpec) -> Result<Operator> {
    spec.validate()?;
    let ops = TwoQubitOps::new(spec.n_fock)?;
    Ok(two_qubit_from_ops(&ops, spec))
}

pub(crate) fn two_qubit_from_ops(ops: &TwoQubitOps, spec: &TwoQubitSpec) -> Operator {
    let mut h = ops.number.scale(spec.omega_m);
    for (k, q) in spec.qubits.iter().enumerate() {
        let coupling = &ops.sigma_x[k] * &ops.position;
        let local = &(&ops.sigma_z[k].scale(q.omega_r) + &ops.sigma_x[k].scale(q.delta_nu))
            - &coupling.scale(q.lambda);
        h = &h + &local.scale(0.5);
    }
    h
}

/// Exchange strength `J = λ¹λ²(Δ¹+Δ²)/(8Δ¹Δ²)` of the dispersive two-qubit model.
pub fn exchange_strength(spec: &TwoQubitSpec) -> Result<f64> {
    let [q1, q2] = &spec.qubits;
    let d1 = q1.rabi_detuning(spec.omega_m);
    let d2 = q2.rabi_detuning(spec.omega_m);
    if d1 == 0.0 || d2 == 0.0 {
        return Err(Error::Divergence("dispersive model at zero Rabi detuning".into()));
    }
    Ok(q1.lambda * q2.lambda * (d1 + d2) / (8.0 * d1 * d2))
}

/// Dispersive two-qubit Hamiltonian with the phonon-mediated exchange term.
pub fn build_qmq_dispersive(spec: &TwoQubitSpec) -> Result<Operator> {
    spec.validate()?;
    let j = exchange_strength(spec)?;
    let ops = TwoQubitOps::new(spec.n_fock)?;
    let mut mech = ops.number.scale(spec.omega_m);
    let mut h = Operator::zeros(&ops.space);
    for (k, q) in spec.qubits.iter().enumerate() {
        let d = q.rabi_detuning(spec.omega_m);
        let chi = q.lambda * q.lambda / (4.0 * d);
        mech = &mech + &(&ops.sigma_z[k] * &ops.number).scale(chi);
        let local = &ops.sigma_z[k].scale(q.omega_r + chi) + &ops.sigma_x[k].scale(q.delta_nu);
        h = &h + &local.scale(0.5);
    }
    let flip_flop = &(&ops.sigma_plus[0] * &ops.sigma_minus[1]) + &(&ops.sigma_minus[0] * &ops.sigma_plus[1]);
    Ok(&(&mech + &h) + &flip_flop.scale(j))
}

/// Linearized optomechanical Hamiltonian on `[n_fock, n_fock_opt]`.
pub fn build_om_linearized(spec: &OptomechSpec, n_fock: usize, n_fock_opt: usize) -> Result<Operator> {
    for (name, v) in [("omega_m", spec.omega_m), ("g0", spec.g0), ("n_cav", spec.n_cav)] {
        non_negative(name, v)?;
    }
    if !spec.delta_cl.is_finite() {
        return Err(invalid("delta_cl", "must be finite"));
    }
    let space = HilbertSpace::new(vec![n_fock, n_fock_opt])?;
    let a = fock_destroy(n_fock)?.embed(&space, 0)?;
    let b = fock_destroy(n_fock_opt)?.embed(&space, 1)?;
    let (ad, bd) = (a.dagger(), b.dagger());
    let xa = &ad + &a;
    let xb = &bd + &b;
    let coupling = (&xa * &xb).scale(C64::new(spec.g0 * spec.n_cav.sqrt(), 0.0));
    let h = &(&(&ad * &a).scale(spec.omega_m) - &(&bd * &b).scale(spec.delta_cl)) - &coupling;
    Ok(h)
}
