//! Quantum channels in Choi and Kraus form.
//!
//! The Choi matrix is `J = Σ_ij |i⟩⟨j| ⊗ Φ(|i⟩⟨j|)` with the input index
//! first, so `J[(i·d + a), (j·d + b)] = Φ(|i⟩⟨j|)[a, b]` and `Tr J = d`.

use ndarray::Array2;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{self, CMatrix, C64, ONE, ZERO};

/// Hermiticity tolerance on constructed Choi matrices.
pub const CHOI_HERMITIAN_TOL: f64 = 1e-10;
/// Lowest admissible Choi eigenvalue.
pub const CP_TOL: f64 = 1e-7;
/// Trace-preservation tolerance on the output partial trace.
pub const TP_TOL: f64 = 1e-6;
/// Choi eigenvalues below this are dropped from the Kraus set.
pub const KRAUS_CUTOFF: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq)]
pub struct QuantumChannel {
    dim: usize,
    choi: CMatrix,
    kraus: Option<Vec<CMatrix>>,
}

impl QuantumChannel {
    /// Validate Hermiticity, complete positivity and trace preservation.
    pub fn from_choi(dim: usize, choi: CMatrix) -> Result<Self> {
        if choi.nrows() != dim * dim || choi.ncols() != dim * dim {
            return Err(Error::Dimension(format!(
                "Choi matrix is {}x{}, expected {}x{}",
                choi.nrows(),
                choi.ncols(),
                dim * dim,
                dim * dim
            )));
        }
        let channel = Self { dim, choi, kraus: None };
        channel.check()?;
        Ok(channel)
    }

    pub fn from_kraus(kraus: Vec<CMatrix>) -> Result<Self> {
        let dim = kraus.first().map(|k| k.nrows()).ok_or_else(|| Error::Precondition("empty Kraus set".into()))?;
        if kraus.iter().any(|k| k.nrows() != dim || k.ncols() != dim) {
            return Err(Error::Dimension("Kraus operators must be square and equal-sized".into()));
        }
        let choi = choi_from_kraus(dim, &kraus);
        let mut channel = Self::from_choi(dim, choi)?;
        channel.kraus = Some(kraus);
        Ok(channel)
    }

    pub fn from_unitary(u: &CMatrix) -> Result<Self> {
        Self::from_kraus(vec![u.clone()])
    }

    pub fn identity(dim: usize) -> Self {
        Self::from_unitary(&linalg::identity(dim)).expect("identity is a channel")
    }

    /// `ρ ↦ Tr(ρ)·I/d`.
    pub fn depolarizing(dim: usize) -> Self {
        let d2 = (dim * dim) as f64;
        let choi = linalg::identity(dim * dim).mapv(|z| z / d2 * dim as f64);
        Self::from_choi(dim, choi).expect("depolarizing channel is CPTP")
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn choi(&self) -> &CMatrix {
        &self.choi
    }

    pub fn kraus(&self) -> Option<&[CMatrix]> {
        self.kraus.as_deref()
    }

    /// Image of an operator under the channel.
    pub fn apply(&self, rho: &CMatrix) -> CMatrix {
        let d = self.dim;
        let mut out = Array2::zeros((d, d));
        for i in 0..d {
            for j in 0..d {
                let r = rho[[i, j]];
                if r == ZERO {
                    continue;
                }
                for a in 0..d {
                    for b in 0..d {
                        out[[a, b]] += r * self.choi[[i * d + a, j * d + b]];
                    }
                }
            }
        }
        out
    }

    /// `Tr_out J / d`, the marginal of the reference half of the Choi state.
    pub fn input_marginal(&self) -> CMatrix {
        let d = self.dim;
        Array2::from_shape_fn((d, d), |(i, j)| {
            (0..d).map(|a| self.choi[[i * d + a, j * d + a]]).sum::<C64>() / d as f64
        })
    }

    /// Hermiticity, CP and TP defects, failing beyond the module tolerances.
    pub fn check(&self) -> Result<()> {
        let herm = linalg::hermiticity_defect(&self.choi);
        if herm > CHOI_HERMITIAN_TOL {
            return Err(Error::NumericalIntegrity(format!("Choi Hermiticity defect {herm:e}")));
        }
        let low = linalg::eigvalsh(&self.choi)[0];
        if low < -CP_TOL {
            return Err(Error::NumericalIntegrity(format!("Choi eigenvalue {low:e} breaks complete positivity")));
        }
        let marginal = self.input_marginal().mapv(|z| z * self.dim as f64);
        let tp = linalg::max_abs(&(marginal - linalg::identity(self.dim)));
        if tp > TP_TOL {
            return Err(Error::NumericalIntegrity(format!("trace preservation defect {tp:e}")));
        }
        Ok(())
    }

    /// Channel followed by the unitary `v`.
    pub fn then_unitary(&self, v: &CMatrix) -> Result<Self> {
        let big = linalg::kron(&linalg::identity(self.dim), v);
        let choi = big.dot(&self.choi).dot(&linalg::dagger(&big));
        Self::from_choi(self.dim, linalg::hermitian_part(&choi))
    }
}

pub fn choi_from_kraus(dim: usize, kraus: &[CMatrix]) -> CMatrix {
    let mut choi = Array2::zeros((dim * dim, dim * dim));
    for k in kraus {
        let v: Vec<C64> = (0..dim * dim).map(|p| k[[p % dim, p / dim]]).collect();
        for (p, vp) in v.iter().enumerate() {
            for (q, vq) in v.iter().enumerate() {
                choi[[p, q]] += vp * vq.conj();
            }
        }
    }
    choi
}

/// Kraus set from the Choi eigendecomposition, `K_n = √μ_n · unvec(v_n)`.
pub fn kraus_from_choi(channel: &QuantumChannel) -> Result<Vec<CMatrix>> {
    let d = channel.dim;
    let (values, vectors) = linalg::eigh(&channel.choi);
    if values[0] < -CP_TOL {
        return Err(Error::NumericalIntegrity(format!(
            "Choi eigenvalue {:e} breaks complete positivity",
            values[0]
        )));
    }
    let mut kraus = Vec::new();
    for (n, mu) in values.iter().enumerate().rev() {
        if *mu < KRAUS_CUTOFF {
            continue;
        }
        let s = mu.sqrt();
        kraus.push(Array2::from_shape_fn((d, d), |(a, i)| vectors[[i * d + a, n]] * s));
    }
    let mut sum = Array2::zeros((d, d));
    for k in &kraus {
        sum += &linalg::dagger(k).dot(k);
    }
    let defect = linalg::max_abs(&(sum - linalg::identity(d)));
    if defect > TP_TOL {
        return Err(Error::NumericalIntegrity(format!("Kraus completeness defect {defect:e}")));
    }
    Ok(kraus)
}

/// `(d + Σ_n |tr(K_n U†)|²) / (d² + d)`.
pub fn avg_gate_fidelity(channel: &QuantumChannel, target: &CMatrix) -> Result<f64> {
    let d = channel.dim;
    if target.nrows() != d || target.ncols() != d {
        return Err(Error::Dimension(format!("target is {}x{}, channel acts on {d}", target.nrows(), target.ncols())));
    }
    let owned;
    let kraus = match channel.kraus() {
        Some(k) => k,
        None => {
            owned = kraus_from_choi(channel)?;
            &owned
        }
    };
    let ud = linalg::dagger(target);
    let overlap: f64 = kraus.iter().map(|k| linalg::trace_product(k, &ud).norm_sqr()).sum();
    let df = d as f64;
    Ok((df + overlap) / (df * df + df))
}

/// `exp(−iφσz/2)` on a qubit with `|↑⟩` first.
pub fn z_rotation(phi: f64) -> CMatrix {
    let mut m = Array2::zeros((2, 2));
    m[[0, 0]] = C64::from_polar(1.0, -phi / 2.0);
    m[[1, 1]] = C64::from_polar(1.0, phi / 2.0);
    m
}

/// Fidelity after the best local z-rotation pair applied to the output.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PhaseCompensation {
    pub fidelity: f64,
    pub phases: (f64, f64),
}

/// Maximize the two-qubit average fidelity over `Rz(φ₁) ⊗ Rz(φ₂)` applied
/// after the channel.
pub fn compensated_fidelity(channel: &QuantumChannel, target: &CMatrix) -> Result<PhaseCompensation> {
    if channel.dim != 4 || target.nrows() != 4 || target.ncols() != 4 {
        return Err(Error::Dimension("phase compensation is defined for two qubits".into()));
    }
    let d = 4usize;
    // f(φ) = Σ_ab v_a M_ab conj(v_b) with v_a the phase of basis state a.
    let mut m = Array2::<C64>::zeros((d, d));
    for a in 0..d {
        for b in 0..d {
            let mut acc = ZERO;
            for i in 0..d {
                for j in 0..d {
                    acc += target[[a, i]].conj() * channel.choi[[i * d + a, j * d + b]] * target[[b, j]];
                }
            }
            m[[a, b]] = acc;
        }
    }
    let signs = [(1.0, 1.0), (1.0, -1.0), (-1.0, 1.0), (-1.0, -1.0)];
    let overlap = |p1: f64, p2: f64| -> f64 {
        let v: Vec<C64> = signs.iter().map(|(s1, s2)| C64::from_polar(1.0, -(s1 * p1 + s2 * p2) / 2.0)).collect();
        let mut acc = ZERO;
        for a in 0..d {
            for b in 0..d {
                acc += v[a] * m[[a, b]] * v[b].conj();
            }
        }
        acc.re
    };

    let n = 48;
    let step0 = std::f64::consts::TAU / n as f64;
    let mut best = (f64::NEG_INFINITY, 0.0, 0.0);
    for i in 0..n {
        for j in 0..n {
            let (p1, p2) = (i as f64 * step0, j as f64 * step0);
            let f = overlap(p1, p2);
            if f > best.0 {
                best = (f, p1, p2);
            }
        }
    }
    let mut step = step0;
    while step > 1e-10 {
        let mut moved = false;
        for (dx, dy) in [(step, 0.0), (-step, 0.0), (0.0, step), (0.0, -step)] {
            let f = overlap(best.1 + dx, best.2 + dy);
            if f > best.0 {
                best = (f, best.1 + dx, best.2 + dy);
                moved = true;
            }
        }
        if !moved {
            step /= 2.0;
        }
    }
    let df = d as f64;
    let wrap = |p: f64| p.rem_euclid(std::f64::consts::TAU);
    Ok(PhaseCompensation {
        fidelity: (df + best.0) / (df * df + df),
        phases: (wrap(best.1), wrap(best.2)),
    })
}

/// The √iSWAP gate on `[qubit 1, qubit 2]` with `|↑⟩` first in each factor.
pub fn sqrt_iswap() -> CMatrix {
    let c = std::f64::consts::FRAC_1_SQRT_2;
    let mut u = Array2::zeros((4, 4));
    u[[0, 0]] = ONE;
    u[[3, 3]] = ONE;
    u[[1, 1]] = C64::new(c, 0.0);
    u[[2, 2]] = C64::new(c, 0.0);
    u[[1, 2]] = C64::new(0.0, c);
    u[[2, 1]] = C64::new(0.0, c);
    u
}
