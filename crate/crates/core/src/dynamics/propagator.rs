//! Exact propagation with `exp(L·Δt)` on the vectorized density matrix.
//!
//! Vectorization is row-major, so `vec(A X B) = (A ⊗ Bᵀ) vec(X)` and a
//! standard-layout `CMatrix` is already its own vector.

use ndarray::{Array1, Array2};

use crate::linalg::{self, CMatrix, C64, I};

use super::LindbladModel;

/// Liouvillian superoperator acting on row-major vectorized operators.
pub fn superoperator(model: &LindbladModel) -> CMatrix {
    let h = model.hamiltonian().matrix();
    let d = h.nrows();
    let id = linalg::identity(d);
    let mut l = linalg::kron(h, &id).mapv(|z| -I * z);
    l.scaled_add(I, &linalg::kron(&id, &h.t().to_owned()));
    for ch in model.channels() {
        let a = ch.op.matrix();
        let k = linalg::dagger(a).dot(a);
        let rate = C64::new(ch.rate, 0.0);
        l.scaled_add(rate, &linalg::kron(a, &a.mapv(|z| z.conj())));
        l.scaled_add(-0.5 * rate, &linalg::kron(&k, &id));
        l.scaled_add(-0.5 * rate, &linalg::kron(&id, &k.t().to_owned()));
    }
    l
}

/// Index sets of the connected components of the sparsity graph of `l`.
/// `l` is block diagonal on these sets, so each block exponentiates alone.
pub fn invariant_blocks(l: &CMatrix) -> Vec<Vec<usize>> {
    let n = l.nrows();
    let mut parent: Vec<usize> = (0..n).collect();
    fn root(parent: &mut [usize], mut x: usize) -> usize {
        while parent[x] != x {
            parent[x] = parent[parent[x]];
            x = parent[x];
        }
        x
    }
    for ((i, j), z) in l.indexed_iter() {
        if i != j && *z != C64::new(0.0, 0.0) {
            let (ri, rj) = (root(&mut parent, i), root(&mut parent, j));
            if ri != rj {
                parent[ri.max(rj)] = ri.min(rj);
            }
        }
    }
    let mut slot = vec![usize::MAX; n];
    let mut blocks: Vec<Vec<usize>> = Vec::new();
    for i in 0..n {
        let r = root(&mut parent, i);
        if slot[r] == usize::MAX {
            slot[r] = blocks.len();
            blocks.push(Vec::new());
        }
        blocks[slot[r]].push(i);
    }
    blocks
}

struct Block {
    index: Vec<usize>,
    l: CMatrix,
}

pub(crate) struct PropagatorCache {
    blocks: Vec<Block>,
    cached: Vec<(f64, Vec<CMatrix>)>,
}

impl PropagatorCache {
    pub(crate) fn new(model: &LindbladModel) -> Self {
        let l = superoperator(model);
        let blocks = invariant_blocks(&l)
            .into_iter()
            .map(|index| {
                let sub = Array2::from_shape_fn((index.len(), index.len()), |(a, b)| l[[index[a], index[b]]]);
                Block { index, l: sub }
            })
            .collect();
        Self { blocks, cached: Vec::new() }
    }

    fn propagators(&mut self, dt: f64) -> usize {
        let tol = 1e-12 * dt.abs();
        if let Some(pos) = self.cached.iter().position(|(t, _)| (t - dt).abs() <= tol) {
            return pos;
        }
        let exps = self.blocks.iter().map(|b| linalg::expm(&b.l.mapv(|z| z * dt))).collect();
        self.cached.push((dt, exps));
        self.cached.len() - 1
    }

    /// Apply `exp(L·dt)` to each column of `states` (columns are vectorized operators).
    pub(crate) fn apply(&mut self, dt: f64, states: &Array2<C64>) -> Array2<C64> {
        if dt == 0.0 {
            return states.clone();
        }
        let pos = self.propagators(dt);
        let mut out = Array2::zeros(states.raw_dim());
        for (block, p) in self.blocks.iter().zip(&self.cached[pos].1) {
            let sub = states.select(ndarray::Axis(0), &block.index);
            let moved = p.dot(&sub);
            for (a, &row) in block.index.iter().enumerate() {
                out.row_mut(row).assign(&moved.row(a));
            }
        }
        out
    }
}

pub(crate) fn vectorize(m: &CMatrix) -> Array1<C64> {
    Array1::from_iter(m.iter().copied())
}

pub(crate) fn unvectorize(v: ndarray::ArrayView1<C64>, d: usize) -> CMatrix {
    Array2::from_shape_vec((d, d), v.iter().copied().collect()).expect("square operator")
}
