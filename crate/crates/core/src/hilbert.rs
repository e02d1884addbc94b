//! Operators and density matrices on truncated composite Hilbert spaces.
//!
//! Subsystem order is `[qubit(s)..., ancilla(s)..., oscillator]` throughout the
//! crate. Matrices are dense; composite indices are row-major over `dims`, so
//! the last subsystem varies fastest.

use std::ops::{Add, Mul, Sub};

use ndarray::{Array1, Array2};
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::linalg::{self, CMatrix, C64, I, ONE, ZERO};

pub const TRACE_TOL: f64 = 1e-9;
pub const HERMITIAN_TOL: f64 = 1e-12;
pub const POSITIVITY_TOL: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct HilbertSpace {
    dims: Vec<usize>,
}

impl HilbertSpace {
    pub fn new(dims: Vec<usize>) -> Result<Self> {
        if dims.is_empty() {
            return Err(Error::Dimension("a Hilbert space needs at least one subsystem".into()));
        }
        if let Some(d) = dims.iter().find(|&&d| d == 0) {
            return Err(Error::Dimension(format!("subsystem dimension {d} is not positive")));
        }
        Ok(Self { dims })
    }

    pub fn single(dim: usize) -> Result<Self> {
        Self::new(vec![dim])
    }

    pub fn dims(&self) -> &[usize] {
        &self.dims
    }

    pub fn n_subsystems(&self) -> usize {
        self.dims.len()
    }

    pub fn total(&self) -> usize {
        self.dims.iter().product()
    }

    pub fn concat(&self, other: &HilbertSpace) -> HilbertSpace {
        let mut dims = self.dims.clone();
        dims.extend_from_slice(&other.dims);
        HilbertSpace { dims }
    }

    /// Split a composite index into per-subsystem digits.
    pub fn digits(&self, mut index: usize) -> Vec<usize> {
        let mut out = vec![0; self.dims.len()];
        for (k, &d) in self.dims.iter().enumerate().rev() {
            out[k] = index % d;
            index /= d;
        }
        out
    }

    pub fn index(&self, digits: &[usize]) -> usize {
        digits
            .iter()
            .zip(&self.dims)
            .fold(0, |acc, (&x, &d)| acc * d + x)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Operator {
    space: HilbertSpace,
    matrix: CMatrix,
}

impl Operator {
    pub fn new(space: HilbertSpace, matrix: CMatrix) -> Result<Self> {
        let n = space.total();
        if matrix.nrows() != n || matrix.ncols() != n {
            return Err(Error::Dimension(format!(
                "matrix is {}x{} but space {:?} has dimension {n}",
                matrix.nrows(),
                matrix.ncols(),
                space.dims
            )));
        }
        Ok(Self { space, matrix })
    }

    pub fn identity(space: &HilbertSpace) -> Self {
        Self {
            matrix: linalg::identity(space.total()),
            space: space.clone(),
        }
    }

    pub fn zeros(space: &HilbertSpace) -> Self {
        let n = space.total();
        Self {
            matrix: Array2::zeros((n, n)),
            space: space.clone(),
        }
    }

    pub fn space(&self) -> &HilbertSpace {
        &self.space
    }

    pub fn matrix(&self) -> &CMatrix {
        &self.matrix
    }

    pub fn into_matrix(self) -> CMatrix {
        self.matrix
    }

    pub fn dim(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn dagger(&self) -> Operator {
        Operator {
            space: self.space.clone(),
            matrix: linalg::dagger(&self.matrix),
        }
    }

    pub fn scale(&self, factor: impl Into<C64>) -> Operator {
        let f = factor.into();
        Operator {
            space: self.space.clone(),
            matrix: self.matrix.mapv(|z| z * f),
        }
    }

    pub fn is_hermitian(&self, tol: f64) -> bool {
        linalg::hermiticity_defect(&self.matrix) <= tol
    }

    pub fn trace(&self) -> C64 {
        linalg::trace(&self.matrix)
    }

    pub fn commutator(&self, other: &Operator) -> Result<Operator> {
        self.check_same(other)?;
        Ok(Operator {
            space: self.space.clone(),
            matrix: linalg::commutator(&self.matrix, &other.matrix),
        })
    }

    /// Lift a single-subsystem operator into `space`, acting on subsystem `site`.
    pub fn embed(&self, space: &HilbertSpace, site: usize) -> Result<Operator> {
        let dims = space.dims();
        if site >= dims.len() {
            return Err(Error::Dimension(format!(
                "site {site} out of range for {} subsystems",
                dims.len()
            )));
        }
        if dims[site] != self.dim() {
            return Err(Error::Dimension(format!(
                "operator of dimension {} cannot act on subsystem {site} of dimension {}",
                self.dim(),
                dims[site]
            )));
        }
        let left: usize = dims[..site].iter().product();
        let right: usize = dims[site + 1..].iter().product();
        let m = linalg::kron(
            &linalg::kron(&linalg::identity(left), &self.matrix),
            &linalg::identity(right),
        );
        Operator::new(space.clone(), m)
    }

    pub fn eigenvalues(&self) -> Array1<f64> {
        linalg::eigvalsh(&self.matrix)
    }

    fn check_same(&self, other: &Operator) -> Result<()> {
        if self.space != other.space {
            return Err(Error::Dimension(format!(
                "operator spaces differ: {:?} vs {:?}",
                self.space.dims, other.space.dims
            )));
        }
        Ok(())
    }
}

impl Add for &Operator {
    type Output = Operator;
    fn add(self, rhs: &Operator) -> Operator {
        assert_eq!(self.space, rhs.space, "adding operators on different spaces");
        Operator {
            space: self.space.clone(),
            matrix: &self.matrix + &rhs.matrix,
        }
    }
}

impl Sub for &Operator {
    type Output = Operator;
    fn sub(self, rhs: &Operator) -> Operator {
        assert_eq!(self.space, rhs.space, "subtracting operators on different spaces");
        Operator {
            space: self.space.clone(),
            matrix: &self.matrix - &rhs.matrix,
        }
    }
}

impl Mul for &Operator {
    type Output = Operator;
    fn mul(self, rhs: &Operator) -> Operator {
        assert_eq!(self.space, rhs.space, "multiplying operators on different spaces");
        Operator {
            space: self.space.clone(),
            matrix: self.matrix.dot(&rhs.matrix),
        }
    }
}

/// A validated density matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct State {
    space: HilbertSpace,
    rho: CMatrix,
}

impl State {
    /// Validates unit trace, Hermiticity and positivity.
    pub fn new(space: HilbertSpace, rho: CMatrix) -> Result<Self> {
        let op = Operator::new(space, rho)?;
        let state = State {
            space: op.space,
            rho: op.matrix,
        };
        state.validate()?;
        Ok(state)
    }

    /// Skips validation. For evolved states whose checks are done by the caller.
    pub(crate) fn new_unchecked(space: HilbertSpace, rho: CMatrix) -> Self {
        State { space, rho }
    }

    pub fn pure(space: HilbertSpace, psi: &[C64]) -> Result<Self> {
        let n = space.total();
        if psi.len() != n {
            return Err(Error::Dimension(format!(
                "state vector has {} entries, space has dimension {n}",
                psi.len()
            )));
        }
        let norm: f64 = psi.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
        if norm == 0.0 {
            return Err(invalid("psi", "zero vector"));
        }
        let rho = Array2::from_shape_fn((n, n), |(i, j)| psi[i] * psi[j].conj() / (norm * norm));
        State::new(space, rho)
    }

    /// Computational basis projector `|k⟩⟨k|`.
    pub fn basis(space: HilbertSpace, k: usize) -> Result<Self> {
        let n = space.total();
        if k >= n {
            return Err(Error::Dimension(format!("basis index {k} >= dimension {n}")));
        }
        let mut rho = Array2::zeros((n, n));
        rho[[k, k]] = ONE;
        Ok(State { space, rho })
    }

    pub fn maximally_mixed(space: HilbertSpace) -> Self {
        let n = space.total();
        State {
            rho: linalg::identity(n).mapv(|z| z / n as f64),
            space,
        }
    }

    pub fn space(&self) -> &HilbertSpace {
        &self.space
    }

    pub fn rho(&self) -> &CMatrix {
        &self.rho
    }

    pub fn into_rho(self) -> CMatrix {
        self.rho
    }

    pub fn trace(&self) -> C64 {
        linalg::trace(&self.rho)
    }

    pub fn min_eigenvalue(&self) -> f64 {
        linalg::eigvalsh(&self.rho)
            .iter()
            .copied()
            .fold(f64::INFINITY, f64::min)
    }

    pub fn purity(&self) -> f64 {
        linalg::trace_product(&self.rho, &self.rho).re
    }

    pub fn validate(&self) -> Result<()> {
        let tr = self.trace();
        if (tr - ONE).norm() > TRACE_TOL {
            return Err(Error::NumericalIntegrity(format!("trace {tr} differs from 1")));
        }
        let herm = linalg::hermiticity_defect(&self.rho);
        if herm > HERMITIAN_TOL {
            return Err(Error::NumericalIntegrity(format!(
                "density matrix not Hermitian (defect {herm:e})"
            )));
        }
        let min = self.min_eigenvalue();
        if min < -POSITIVITY_TOL {
            return Err(Error::NumericalIntegrity(format!(
                "negative eigenvalue {min:e}"
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum PauliAxis {
    X,
    Y,
    Z,
    Plus,
    Minus,
}

/// Pauli and ladder matrices with `σ_z = diag(1, −1)`, so index 0 is `|↑⟩`.
pub fn pauli(axis: PauliAxis) -> Operator {
    let m = match axis {
        PauliAxis::X => ndarray::array![[ZERO, ONE], [ONE, ZERO]],
        PauliAxis::Y => ndarray::array![[ZERO, -I], [I, ZERO]],
        PauliAxis::Z => ndarray::array![[ONE, ZERO], [ZERO, -ONE]],
        PauliAxis::Plus => ndarray::array![[ZERO, ONE], [ZERO, ZERO]],
        PauliAxis::Minus => ndarray::array![[ZERO, ZERO], [ONE, ZERO]],
    };
    Operator {
        space: HilbertSpace { dims: vec![2] },
        matrix: m,
    }
}

/// Annihilation operator on `n_trunc` Fock levels.
pub fn fock_destroy(n_trunc: usize) -> Result<Operator> {
    if n_trunc < 2 {
        return Err(Error::InvalidTruncation(n_trunc));
    }
    let mut m = Array2::zeros((n_trunc, n_trunc));
    for n in 1..n_trunc {
        m[[n - 1, n]] = C64::new((n as f64).sqrt(), 0.0);
    }
    Ok(Operator {
        space: HilbertSpace {
            dims: vec![n_trunc],
        },
        matrix: m,
    })
}

pub fn fock_number(n_trunc: usize) -> Result<Operator> {
    let a = fock_destroy(n_trunc)?;
    Ok(&a.dagger() * &a)
}

/// Displacement quadrature `a† + a`.
pub fn fock_position(n_trunc: usize) -> Result<Operator> {
    let a = fock_destroy(n_trunc)?;
    Ok(&a.dagger() + &a)
}

/// Kronecker product in list order; subsystem dimensions are concatenated.
pub fn tensor(ops: &[&Operator]) -> Result<Operator> {
    let (first, rest) = ops
        .split_first()
        .ok_or_else(|| Error::Precondition("tensor of an empty operator list".into()))?;
    let mut out = (*first).clone();
    for op in rest {
        out = Operator {
            space: out.space.concat(&op.space),
            matrix: linalg::kron(&out.matrix, &op.matrix),
        };
    }
    Ok(out)
}

pub fn tensor_states(states: &[&State]) -> Result<State> {
    let (first, rest) = states
        .split_first()
        .ok_or_else(|| Error::Precondition("tensor of an empty state list".into()))?;
    let mut out = (*first).clone();
    for s in rest {
        out = State {
            space: out.space.concat(&s.space),
            rho: linalg::kron(&out.rho, &s.rho),
        };
    }
    Ok(out)
}

/// Partial trace of an arbitrary matrix over the subsystems not in `keep`.
pub fn partial_trace_matrix(
    space: &HilbertSpace,
    m: &CMatrix,
    keep: &[usize],
) -> Result<(HilbertSpace, CMatrix)> {
    if keep.is_empty() {
        return Err(Error::Precondition("partial trace must keep at least one subsystem".into()));
    }
    let n_sub = space.n_subsystems();
    let mut keep_sorted = keep.to_vec();
    keep_sorted.sort_unstable();
    keep_sorted.dedup();
    if let Some(&bad) = keep_sorted.iter().find(|&&k| k >= n_sub) {
        return Err(Error::Dimension(format!(
            "subsystem index {bad} out of range for {n_sub} subsystems"
        )));
    }
    let traced: Vec<usize> = (0..n_sub).filter(|k| !keep_sorted.contains(k)).collect();
    let dims = space.dims();
    let kept_space = HilbertSpace::new(keep_sorted.iter().map(|&k| dims[k]).collect())?;
    let n_keep = kept_space.total();
    let n_traced: usize = traced.iter().map(|&k| dims[k]).product();

    // groups[t][k] = full index with traced digits t and kept digits k
    let mut groups = vec![vec![0usize; n_keep]; n_traced];
    for full in 0..space.total() {
        let digits = space.digits(full);
        let k = keep_sorted.iter().fold(0, |acc, &s| acc * dims[s] + digits[s]);
        let t = traced.iter().fold(0, |acc, &s| acc * dims[s] + digits[s]);
        groups[t][k] = full;
    }
    let mut out = Array2::<C64>::zeros((n_keep, n_keep));
    for g in &groups {
        for (a, &ia) in g.iter().enumerate() {
            for (b, &ib) in g.iter().enumerate() {
                out[[a, b]] += m[[ia, ib]];
            }
        }
    }
    Ok((kept_space, out))
}

pub fn partial_trace(state: &State, keep: &[usize]) -> Result<State> {
    let (space, rho) = partial_trace_matrix(&state.space, &state.rho, keep)?;
    Ok(State { space, rho })
}

/// Bose–Einstein state with mean occupation `n_th`, renormalized on the
/// truncated space.
pub fn thermal_state(n_trunc: usize, n_th: f64) -> Result<State> {
    if n_trunc < 2 {
        return Err(Error::InvalidTruncation(n_trunc));
    }
    if !(n_th >= 0.0) || !n_th.is_finite() {
        return Err(invalid("n_th", format!("mean occupation {n_th} must be finite and >= 0")));
    }
    let ratio = n_th / (n_th + 1.0);
    let weights: Vec<f64> = (0..n_trunc).map(|n| ratio.powi(n as i32)).collect();
    let total: f64 = weights.iter().sum();
    let mut rho = Array2::zeros((n_trunc, n_trunc));
    for (n, w) in weights.iter().enumerate() {
        rho[[n, n]] = C64::new(w / total, 0.0);
    }
    Ok(State {
        space: HilbertSpace {
            dims: vec![n_trunc],
        },
        rho,
    })
}

pub fn expect(op: &Operator, state: &State) -> Result<C64> {
    if op.space != state.space {
        return Err(Error::Dimension(format!(
            "operator space {:?} does not match state space {:?}",
            op.space.dims, state.space.dims
        )));
    }
    Ok(linalg::trace_product(&op.matrix, &state.rho))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::max_abs;
    use proptest::prelude::*;

    fn random_state(space: HilbertSpace, seed: u64) -> State {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
        let n = space.total();
        let g = Array2::from_shape_fn((n, n), |_| C64::new(rng.random::<f64>() - 0.5, rng.random::<f64>() - 0.5));
        let rho = g.dot(&linalg::dagger(&g));
        let tr = linalg::trace(&rho);
        State::new(space, rho.mapv(|z| z / tr)).unwrap()
    }

    #[test]
    fn destroy_two_levels() {
        let a = fock_destroy(2).unwrap();
        assert_eq!(a.matrix(), &ndarray::array![[ZERO, ONE], [ZERO, ZERO]]);
        assert_eq!(fock_destroy(1).unwrap_err(), Error::InvalidTruncation(1));
    }

    #[test]
    fn number_operator_diagonal() {
        let n = fock_number(3).unwrap();
        for k in 0..3 {
            assert!((n.matrix()[[k, k]] - C64::new(k as f64, 0.0)).norm() < 1e-15);
        }
    }

    #[test]
    fn truncated_commutator_corner() {
        let n = 6;
        let a = fock_destroy(n).unwrap();
        let c = a.commutator(&a.dagger()).unwrap();
        for i in 0..n {
            for j in 0..n {
                let expected = if i != j {
                    0.0
                } else if i == n - 1 {
                    -((n - 1) as f64)
                } else {
                    1.0
                };
                assert!((c.matrix()[[i, j]] - C64::new(expected, 0.0)).norm() < 1e-14);
            }
        }
    }

    #[test]
    fn pauli_algebra() {
        let x = pauli(PauliAxis::X);
        let y = pauli(PauliAxis::Y);
        let z = pauli(PauliAxis::Z);
        assert_eq!(z.matrix(), &ndarray::array![[ONE, ZERO], [ZERO, -ONE]]);
        let id = Operator::identity(x.space());
        assert_eq!(&x * &x, id);
        let plus = (&x + &y.scale(I)).scale(0.5);
        assert_eq!(plus, pauli(PauliAxis::Plus));
        // [σx, σy] = 2iσz
        assert_eq!(x.commutator(&y).unwrap(), z.scale(C64::new(0.0, 2.0)));
    }

    #[test]
    fn tensor_identities_and_action() {
        let i2 = Operator::identity(&HilbertSpace::single(2).unwrap());
        let i3 = Operator::identity(&HilbertSpace::single(3).unwrap());
        let t = tensor(&[&i2, &i3]).unwrap();
        assert_eq!(t.matrix(), &linalg::identity(6));
        assert_eq!(t.space().dims(), &[2, 3]);

        let op = tensor(&[&pauli(PauliAxis::Z), &fock_destroy(3).unwrap()]).unwrap();
        // |↑⟩⊗|1⟩ is index 1, |↑⟩⊗|0⟩ index 0
        let mut psi = Array1::zeros(6);
        psi[1] = ONE;
        let out = op.matrix().dot(&psi);
        assert!((out[0] - ONE).norm() < 1e-15);
        assert!(out.iter().enumerate().all(|(k, z)| k == 0 || z.norm() < 1e-15));
        assert!(tensor(&[]).is_err());
    }

    #[test]
    fn tensor_trace_factorizes() {
        let a = random_state(HilbertSpace::single(2).unwrap(), 1);
        let b = random_state(HilbertSpace::single(3).unwrap(), 2);
        let ta = Operator::new(a.space().clone(), a.rho().mapv(|z| z * C64::new(1.3, -0.4))).unwrap();
        let tb = Operator::new(b.space().clone(), b.rho().mapv(|z| z * C64::new(-0.2, 2.0))).unwrap();
        let t = tensor(&[&ta, &tb]).unwrap();
        assert!((t.trace() - ta.trace() * tb.trace()).norm() < 1e-14);
    }

    #[test]
    fn partial_trace_of_bell_state() {
        let s = std::f64::consts::FRAC_1_SQRT_2;
        let space = HilbertSpace::new(vec![2, 2]).unwrap();
        let bell = State::pure(space, &[C64::new(s, 0.0), ZERO, ZERO, C64::new(s, 0.0)]).unwrap();
        let reduced = partial_trace(&bell, &[0]).unwrap();
        assert!(max_abs(&(reduced.rho() - &linalg::identity(2).mapv(|z| z * 0.5))) < 1e-15);
        assert!(matches!(partial_trace(&bell, &[2]), Err(Error::Dimension(_))));
        assert!(matches!(partial_trace(&bell, &[]), Err(Error::Precondition(_))));
    }

    #[test]
    fn partial_trace_random_unit_trace() {
        let s = random_state(HilbertSpace::new(vec![2, 3]).unwrap(), 7);
        for keep in [[0usize].as_slice(), &[1]] {
            let r = partial_trace(&s, keep).unwrap();
            assert!((r.trace() - ONE).norm() < 1e-12);
        }
    }

    #[test]
    fn thermal_cases() {
        let vac = thermal_state(5, 0.0).unwrap();
        assert_eq!(vac.rho()[[0, 0]], ONE);
        assert!((vac.trace() - ONE).norm() < 1e-15);
        let th = thermal_state(7, 2.5).unwrap();
        assert!((th.trace() - ONE).norm() < 1e-15);
        assert!(matches!(thermal_state(5, -1.0), Err(Error::InvalidParameter { .. })));
        assert!(matches!(thermal_state(1, 1.0), Err(Error::InvalidTruncation(1))));
    }

    #[test]
    fn thermal_mean_occupation() {
        // Oracle: renormalized geometric series sum_n n r^n / sum_n r^n.
        let oracle = |n_th: f64, levels: i32| {
            let r = n_th / (n_th + 1.0);
            let (mut num, mut den) = (0.0, 0.0);
            for n in 0..levels {
                num += n as f64 * r.powi(n);
                den += r.powi(n);
            }
            num / den
        };
        let n_op = fock_number(40).unwrap();
        let mean40 = expect(&n_op, &thermal_state(40, 3.0).unwrap()).unwrap().re;
        assert!((mean40 - oracle(3.0, 40)).abs() < 1e-12);

        let mean80 = expect(&fock_number(80).unwrap(), &thermal_state(80, 3.0).unwrap())
            .unwrap()
            .re;
        assert!((mean80 - oracle(3.0, 80)).abs() < 1e-12);
        assert!((mean80 - 3.0).abs() / 3.0 < 1e-6);
    }

    #[test]
    fn expectation_values() {
        let up = State::basis(HilbertSpace::single(2).unwrap(), 0).unwrap();
        assert_eq!(expect(&pauli(PauliAxis::Z), &up).unwrap(), ONE);
        let s = random_state(HilbertSpace::new(vec![2, 3]).unwrap(), 4);
        let id = Operator::identity(s.space());
        assert!((expect(&id, &s).unwrap() - ONE).norm() < 1e-12);
        assert!(expect(&pauli(PauliAxis::Z), &s).is_err());
        let h = tensor(&[&pauli(PauliAxis::X), &fock_position(3).unwrap()]).unwrap();
        assert!(expect(&h, &s).unwrap().im.abs() < 1e-12);
    }

    #[test]
    fn state_validation_rejects_bad_matrices() {
        let space = HilbertSpace::single(2).unwrap();
        let not_unit = ndarray::array![[ONE, ZERO], [ZERO, ONE]];
        assert!(State::new(space.clone(), not_unit).is_err());
        let negative = ndarray::array![[C64::new(1.5, 0.0), ZERO], [ZERO, C64::new(-0.5, 0.0)]];
        assert!(State::new(space.clone(), negative).is_err());
        let non_herm = ndarray::array![[C64::new(0.5, 0.0), ONE], [ZERO, C64::new(0.5, 0.0)]];
        assert!(State::new(space, non_herm).is_err());
    }

    proptest! {
        #[test]
        fn partial_trace_recovers_factor(seed_a in 0u64..1000, seed_b in 0u64..1000) {
            let a = random_state(HilbertSpace::single(2).unwrap(), seed_a);
            let b = random_state(HilbertSpace::single(3).unwrap(), seed_b + 5000);
            let ab = tensor_states(&[&a, &b]).unwrap();
            let ra = partial_trace(&ab, &[0]).unwrap();
            let rb = partial_trace(&ab, &[1]).unwrap();
            prop_assert!(max_abs(&(ra.rho() - a.rho())) < 1e-12);
            prop_assert!(max_abs(&(rb.rho() - b.rho())) < 1e-12);
        }

        #[test]
        fn tensor_is_associative(seed in 0u64..1000) {
            let a = random_state(HilbertSpace::single(2).unwrap(), seed);
            let b = random_state(HilbertSpace::single(3).unwrap(), seed + 1);
            let c = random_state(HilbertSpace::single(2).unwrap(), seed + 2);
            let (oa, ob, oc) = (
                Operator::new(a.space().clone(), a.rho().clone()).unwrap(),
                Operator::new(b.space().clone(), b.rho().clone()).unwrap(),
                Operator::new(c.space().clone(), c.rho().clone()).unwrap(),
            );
            let left = tensor(&[&tensor(&[&oa, &ob]).unwrap(), &oc]).unwrap();
            let right = tensor(&[&oa, &tensor(&[&ob, &oc]).unwrap()]).unwrap();
            prop_assert_eq!(left.space(), right.space());
            prop_assert!(max_abs(&(left.matrix() - right.matrix())) < 1e-15);
        }
    }
}
