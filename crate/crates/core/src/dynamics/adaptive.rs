//! Dormand–Prince 5(4) integration of the master equation in the interaction
//! frame of the diagonal of `H`.
//!
//! With `H₀ = diag(Re H)` and `U₀(s) = exp(−iH₀s)` every stored operator entry
//! `(i, j)` picks up a phase `exp(i(e_i − e_j)s)`, so the free precession of the
//! product basis is handled exactly and the step size only has to follow the
//! couplings. The frame origin is reset at every output time.

use std::time::Instant;

use ndarray::Array2;

use crate::error::{Error, Result};
use crate::linalg::{Csr, CMatrix, C64, I, ONE, ZERO};

use super::{LindbladModel, SolverControls};

/// Sparse operator whose entries rotate at fixed frequencies.
#[derive(Debug, Clone)]
struct PhasedCsr {
    csr: Csr,
    base: Vec<C64>,
    freq: Vec<f64>,
}

impl PhasedCsr {
    fn new(m: &CMatrix, energies: &[f64]) -> Self {
        let csr = Csr::from_dense(m);
        let freq = csr
            .coordinates()
            .iter()
            .map(|&(i, j)| energies[i] - energies[j])
            .collect();
        let base = csr.data().to_vec();
        Self { csr, base, freq }
    }

    fn set_time(&mut self, s: f64) {
        for ((d, b), w) in self.csr.data_mut().iter_mut().zip(&self.base).zip(&self.freq) {
            *d = if *w == 0.0 { *b } else { b * C64::from_polar(1.0, w * s) };
        }
    }

    fn max_freq(&self) -> f64 {
        self.freq.iter().fold(0.0, |m, w| m.max(w.abs()))
    }
}

pub(crate) struct FrameRhs {
    dim: usize,
    energies: Vec<f64>,
    h_eff: PhasedCsr,
    jumps: Vec<(f64, PhasedCsr)>,
    scratch: CMatrix,
}

impl FrameRhs {
    pub(crate) fn new(model: &LindbladModel) -> Self {
        let h = model.hamiltonian().matrix();
        let dim = h.nrows();
        let energies: Vec<f64> = (0..dim).map(|i| h[[i, i]].re).collect();
        let mut v = h.clone();
        for (i, e) in energies.iter().enumerate() {
            v[[i, i]] -= C64::new(*e, 0.0);
        }
        let mut jumps = Vec::new();
        for ch in model.channels() {
            let a = ch.op.matrix();
            let k = crate::linalg::dagger(a).dot(a);
            v.scaled_add(C64::new(0.0, -0.5 * ch.rate), &k);
            jumps.push((ch.rate, PhasedCsr::new(a, &energies)));
        }
        Self {
            dim,
            h_eff: PhasedCsr::new(&v, &energies),
            energies,
            jumps,
            scratch: Array2::zeros((dim, dim)),
        }
    }

    /// Estimated complex multiply-adds per right-hand-side evaluation.
    pub(crate) fn rhs_cost(&self) -> f64 {
        let nnz = 2 * self.h_eff.csr.nnz() + self.jumps.iter().map(|(_, j)| 2 * j.csr.nnz()).sum::<usize>();
        (nnz * self.dim) as f64
    }

    /// Fastest rate the integrator has to resolve.
    pub(crate) fn stiffness(&self) -> f64 {
        let freq = self
            .jumps
            .iter()
            .map(|(_, j)| j.max_freq())
            .fold(self.h_eff.max_freq(), f64::max);
        let mut norm = self.h_eff.csr.norm_inf();
        for (rate, j) in &self.jumps {
            norm += rate * j.csr.norm_inf().powi(2);
        }
        freq + norm
    }

    pub(crate) fn eval(&mut self, s: f64, rho: &CMatrix, out: &mut CMatrix) {
        out.fill(ZERO);
        self.h_eff.set_time(s);
        self.h_eff.csr.mul_dense_into(-I, rho, out);
        self.h_eff.csr.dense_mul_adjoint_into(I, rho, out);
        for (rate, a) in &mut self.jumps {
            a.set_time(s);
            self.scratch.fill(ZERO);
            a.csr.mul_dense_into(C64::new(*rate, 0.0), rho, &mut self.scratch);
            a.csr.dense_mul_adjoint_into(ONE, &self.scratch, out);
        }
    }

    /// Lab-frame operator at frame time `s` from the frame operator.
    fn to_lab(&self, frame: &CMatrix, s: f64) -> CMatrix {
        let phases: Vec<C64> = self.energies.iter().map(|e| C64::from_polar(1.0, -e * s)).collect();
        let mut out = frame.clone();
        for ((i, j), z) in out.indexed_iter_mut() {
            *z *= phases[i] * phases[j].conj();
        }
        out
    }
}

const A21: f64 = 1.0 / 5.0;
const A31: f64 = 3.0 / 40.0;
const A32: f64 = 9.0 / 40.0;
const A41: f64 = 44.0 / 45.0;
const A42: f64 = -56.0 / 15.0;
const A43: f64 = 32.0 / 9.0;
const A51: f64 = 19372.0 / 6561.0;
const A52: f64 = -25360.0 / 2187.0;
const A53: f64 = 64448.0 / 6561.0;
const A54: f64 = -212.0 / 729.0;
const A61: f64 = 9017.0 / 3168.0;
const A62: f64 = -355.0 / 33.0;
const A63: f64 = 46732.0 / 5247.0;
const A64: f64 = 49.0 / 176.0;
const A65: f64 = -5103.0 / 18656.0;
const B1: f64 = 35.0 / 384.0;
const B3: f64 = 500.0 / 1113.0;
const B4: f64 = 125.0 / 192.0;
const B5: f64 = -2187.0 / 6784.0;
const B6: f64 = 11.0 / 84.0;
const E1: f64 = 71.0 / 57600.0;
const E3: f64 = -71.0 / 16695.0;
const E4: f64 = 71.0 / 1920.0;
const E5: f64 = -17253.0 / 339200.0;
const E6: f64 = 22.0 / 525.0;
const E7: f64 = -1.0 / 40.0;
const C2: f64 = 1.0 / 5.0;
const C3: f64 = 3.0 / 10.0;
const C4: f64 = 4.0 / 5.0;
const C5: f64 = 8.0 / 9.0;

fn combine(y: &CMatrix, h: f64, terms: &[(f64, &CMatrix)], out: &mut CMatrix) {
    out.assign(y);
    for (c, k) in terms {
        if *c != 0.0 {
            out.scaled_add(C64::new(h * c, 0.0), k);
        }
    }
}

/// Integrates each segment between consecutive output times.
pub(crate) struct Integrator {
    rhs: FrameRhs,
    controls: SolverControls,
    h: f64,
    steps: usize,
    k: [CMatrix; 7],
    y_stage: CMatrix,
    y_new: CMatrix,
}

impl Integrator {
    pub(crate) fn new(model: &LindbladModel, controls: &SolverControls) -> Self {
        let rhs = FrameRhs::new(model);
        let d = rhs.dim;
        let z = || Array2::<C64>::zeros((d, d));
        let h = 0.1 / rhs.stiffness().max(1e-300);
        Self {
            rhs,
            controls: controls.clone(),
            h,
            steps: 0,
            k: [z(), z(), z(), z(), z(), z(), z()],
            y_stage: z(),
            y_new: z(),
        }
    }

    /// Advance lab-frame `rho` by `span`. `time` is the absolute start, used
    /// only for diagnostics.
    pub(crate) fn advance(&mut self, rho: &CMatrix, span: f64, time: f64, scale: f64) -> Result<CMatrix> {
        if span == 0.0 {
            return Ok(rho.clone());
        }
        let mut y = rho.clone();
        let mut s = 0.0;
        let atol = self.controls.atol * scale;
        let rtol = self.controls.rtol;
        let mut fresh = true;
        while s < span {
            if self.steps >= self.controls.max_steps {
                return Err(Error::Solver {
                    reason: format!("step budget {} exhausted", self.controls.max_steps),
                    steps: self.steps,
                    time: time + s,
                });
            }
            if self.steps % 256 == 0 {
                if let Some(deadline) = self.controls.deadline {
                    if Instant::now() >= deadline {
                        return Err(Error::Timeout);
                    }
                }
            }
            let last = self.h >= span - s;
            let h = if last { span - s } else { self.h };
            if fresh {
                let [k1, ..] = &mut self.k;
                self.rhs.eval(s, &y, k1);
                fresh = false;
            }
            let err = self.trial(s, h, &y, atol, rtol);
            self.steps += 1;
            if !err.is_finite() {
                return Err(Error::Solver {
                    reason: "non-finite error estimate".into(),
                    steps: self.steps,
                    time: time + s,
                });
            }
            if err <= 1.0 {
                s = if last { span } else { s + h };
                std::mem::swap(&mut y, &mut self.y_new);
                self.k.swap(0, 6);
                let grow = if err == 0.0 { 5.0 } else { (0.9 * err.powf(-0.2)).clamp(0.2, 5.0) };
                if !last || grow < 1.0 {
                    self.h = h * grow;
                }
            } else {
                self.h = h * (0.9 * err.powf(-0.2)).clamp(0.1, 0.9);
                if self.h <= f64::EPSILON * span.max(time) {
                    return Err(Error::Solver {
                        reason: format!("step size underflow (h = {:e})", self.h),
                        steps: self.steps,
                        time: time + s,
                    });
                }
            }
        }
        Ok(self.rhs.to_lab(&y, span))
    }

    /// One Dormand–Prince step from `(s, y)`; leaves the candidate in `y_new`
    /// and its derivative in `k[6]`. Returns the scaled error norm.
    fn trial(&mut self, s: f64, h: f64, y: &CMatrix, atol: f64, rtol: f64) -> f64 {
        let [k1, k2, k3, k4, k5, k6, k7] = &mut self.k;
        let ys = &mut self.y_stage;
        combine(y, h, &[(A21, k1)], ys);
        self.rhs.eval(s + C2 * h, ys, k2);
        combine(y, h, &[(A31, k1), (A32, k2)], ys);
        self.rhs.eval(s + C3 * h, ys, k3);
        combine(y, h, &[(A41, k1), (A42, k2), (A43, k3)], ys);
        self.rhs.eval(s + C4 * h, ys, k4);
        combine(y, h, &[(A51, k1), (A52, k2), (A53, k3), (A54, k4)], ys);
        self.rhs.eval(s + C5 * h, ys, k5);
        combine(y, h, &[(A61, k1), (A62, k2), (A63, k3), (A64, k4), (A65, k5)], ys);
        self.rhs.eval(s + h, ys, k6);
        combine(y, h, &[(B1, k1), (B3, k3), (B4, k4), (B5, k5), (B6, k6)], &mut self.y_new);
        self.rhs.eval(s + h, &self.y_new, k7);

        let n = y.len() as f64;
        let mut acc = 0.0;
        let (e1, e3, e4, e5, e6, e7) = (
            k1.as_slice().unwrap(),
            k3.as_slice().unwrap(),
            k4.as_slice().unwrap(),
            k5.as_slice().unwrap(),
            k6.as_slice().unwrap(),
            k7.as_slice().unwrap(),
        );
        let (y0, y1) = (y.as_slice().unwrap(), self.y_new.as_slice().unwrap());
        for p in 0..y0.len() {
            let err = (e1[p] * E1 + e3[p] * E3 + e4[p] * E4 + e5[p] * E5 + e6[p] * E6 + e7[p] * E7) * h;
            let sc = atol + rtol * y0[p].norm().max(y1[p].norm());
            acc += (err.norm() / sc).powi(2);
        }
        (acc / n).sqrt()
    }
}
