//! Dense and sparse complex linear algebra shared by the simulation modules.
//!
//! Dense matrices are `ndarray` arrays (row-major, products go through the
//! `matrixmultiply` zgemm kernel). Hermitian eigendecomposition and SVD are
//! delegated to `nalgebra`.

use nalgebra::DMatrix;
use ndarray::{Array1, Array2, ArrayView2, Zip};
use num_complex::Complex64;

pub type C64 = Complex64;
pub type CMatrix = Array2<C64>;

pub const ZERO: C64 = C64::new(0.0, 0.0);
pub const ONE: C64 = C64::new(1.0, 0.0);
pub const I: C64 = C64::new(0.0, 1.0);

pub fn identity(n: usize) -> CMatrix {
    Array2::from_diag_elem(n, ONE)
}

pub fn dagger(m: &CMatrix) -> CMatrix {
    m.t().mapv(|z| z.conj())
}

pub fn trace(m: &CMatrix) -> C64 {
    m.diag().sum()
}

/// Trace of a product without forming it.
pub fn trace_product(a: &CMatrix, b: &CMatrix) -> C64 {
    let n = a.nrows();
    let mut acc = ZERO;
    for i in 0..n {
        for k in 0..n {
            acc += a[[i, k]] * b[[k, i]];
        }
    }
    acc
}

pub fn kron(a: &CMatrix, b: &CMatrix) -> CMatrix {
    ndarray::linalg::kron(a, b)
}

pub fn commutator(a: &CMatrix, b: &CMatrix) -> CMatrix {
    a.dot(b) - b.dot(a)
}

pub fn frobenius(m: &CMatrix) -> f64 {
    m.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
}

pub fn max_abs(m: &CMatrix) -> f64 {
    m.iter().fold(0.0_f64, |acc, z| acc.max(z.norm()))
}

/// Maximum absolute column sum.
pub fn norm_one(m: &CMatrix) -> f64 {
    (0..m.ncols())
        .map(|j| m.column(j).iter().map(|z| z.norm()).sum::<f64>())
        .fold(0.0, f64::max)
}

/// Relative Hermiticity defect `‖M − M†‖ / max(1, ‖M‖)` in the max-abs norm.
pub fn hermiticity_defect(m: &CMatrix) -> f64 {
    let n = m.nrows();
    let mut worst = 0.0_f64;
    for i in 0..n {
        for j in i..n {
            worst = worst.max((m[[i, j]] - m[[j, i]].conj()).norm());
        }
    }
    worst / max_abs(m).max(1.0)
}

pub fn hermitian_part(m: &CMatrix) -> CMatrix {
    (m + &dagger(m)).mapv(|z| z * 0.5)
}

pub(crate) fn to_nalgebra(m: ArrayView2<C64>) -> DMatrix<C64> {
    DMatrix::from_fn(m.nrows(), m.ncols(), |i, j| m[[i, j]])
}

/// Eigendecomposition of a Hermitian matrix. Eigenvalues ascending, eigenvectors
/// as the matching columns.
pub fn eigh(m: &CMatrix) -> (Array1<f64>, CMatrix) {
    let herm = hermitian_part(m);
    let eig = nalgebra::SymmetricEigen::new(to_nalgebra(herm.view()));
    let mut order: Vec<usize> = (0..eig.eigenvalues.len()).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
    let values = Array1::from_iter(order.iter().map(|&k| eig.eigenvalues[k]));
    let n = m.nrows();
    let vectors = Array2::from_shape_fn((n, n), |(i, j)| eig.eigenvectors[(i, order[j])]);
    (values, vectors)
}

pub fn eigvalsh(m: &CMatrix) -> Array1<f64> {
    eigh(m).0
}

/// Singular values (descending) and the right singular vector belonging to the
/// smallest one.
pub fn smallest_right_singular(m: &CMatrix) -> (Vec<f64>, Array1<C64>) {
    let svd = nalgebra::SVD::new(to_nalgebra(m.view()), false, true);
    let v_t = svd.v_t.expect("requested right singular vectors");
    let mut order: Vec<usize> = (0..svd.singular_values.len()).collect();
    order.sort_by(|&a, &b| svd.singular_values[b].total_cmp(&svd.singular_values[a]));
    let values: Vec<f64> = order.iter().map(|&k| svd.singular_values[k]).collect();
    let last = *order.last().expect("non-empty matrix");
    let vector = Array1::from_iter((0..m.ncols()).map(|j| v_t[(last, j)].conj()));
    (values, vector)
}

const TAYLOR_DEGREE: usize = 18;
const TAYLOR_THETA: f64 = 1.0;

/// Matrix exponential by scaling and squaring around a degree-18 Taylor
/// polynomial evaluated with the Paterson–Stockmeyer scheme. Only matrix
/// products are needed, so everything runs through zgemm.
pub fn expm(a: &CMatrix) -> CMatrix {
    let n = a.nrows();
    assert_eq!(n, a.ncols(), "expm needs a square matrix");
    if n == 0 {
        return a.clone();
    }
    let norm = norm_one(a);
    let squarings = if norm > TAYLOR_THETA {
        (norm / TAYLOR_THETA).log2().ceil() as i32
    } else {
        0
    };
    let x = a.mapv(|z| z * 2f64.powi(-squarings));

    // Paterson–Stockmeyer with block size q: powers X^0..X^q, Horner in X^q.
    let q = 5;
    let mut powers = Vec::with_capacity(q + 1);
    powers.push(identity(n));
    powers.push(x.clone());
    for k in 2..=q {
        let next = powers[k - 1].dot(&x);
        powers.push(next);
    }
    let mut coeff = vec![1.0_f64; TAYLOR_DEGREE + 1];
    for k in 1..=TAYLOR_DEGREE {
        coeff[k] = coeff[k - 1] / k as f64;
    }
    let chunks = TAYLOR_DEGREE / q;
    let chunk = |c: usize| -> CMatrix {
        let mut acc = Array2::<C64>::zeros((n, n));
        for j in 0..q {
            let k = c * q + j;
            if k > TAYLOR_DEGREE {
                break;
            }
            acc.scaled_add(C64::new(coeff[k], 0.0), &powers[j]);
        }
        acc
    };
    let mut result = chunk(chunks);
    for c in (0..chunks).rev() {
        result = result.dot(&powers[q]) + chunk(c);
    }
    for _ in 0..squarings {
        result = result.dot(&result);
    }
    result
}

/// Compressed sparse row matrix used for the Liouvillian right-hand side.
#[derive(Debug, Clone)]
pub struct Csr {
    n: usize,
    indptr: Vec<usize>,
    indices: Vec<usize>,
    data: Vec<C64>,
}

impl Csr {
    pub fn from_dense(m: &CMatrix) -> Self {
        let n = m.nrows();
        let mut indptr = Vec::with_capacity(n + 1);
        let mut indices = Vec::new();
        let mut data = Vec::new();
        indptr.push(0);
        for i in 0..n {
            for j in 0..m.ncols() {
                let v = m[[i, j]];
                if v != ZERO {
                    indices.push(j);
                    data.push(v);
                }
            }
            indptr.push(indices.len());
        }
        Self {
            n,
            indptr,
            indices,
            data,
        }
    }

    pub fn nnz(&self) -> usize {
        self.data.len()
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    /// `(row, col)` of every stored entry, in storage order.
    pub fn coordinates(&self) -> Vec<(usize, usize)> {
        let mut out = Vec::with_capacity(self.nnz());
        for i in 0..self.n {
            for p in self.indptr[i]..self.indptr[i + 1] {
                out.push((i, self.indices[p]));
            }
        }
        out
    }

    pub fn data(&self) -> &[C64] {
        &self.data
    }

    pub fn data_mut(&mut self) -> &mut [C64] {
        &mut self.data
    }

    /// Largest absolute row sum.
    pub fn norm_inf(&self) -> f64 {
        (0..self.n)
            .map(|i| self.data[self.indptr[i]..self.indptr[i + 1]].iter().map(|z| z.norm()).sum::<f64>())
            .fold(0.0, f64::max)
    }

    /// `out += alpha * S · M`
    pub fn mul_dense_into(&self, alpha: C64, m: &CMatrix, out: &mut CMatrix) {
        let cols = m.ncols();
        let src = m.as_slice().expect("standard layout");
        let dst = out.as_slice_mut().expect("standard layout");
        for i in 0..self.n {
            let row_out = &mut dst[i * cols..(i + 1) * cols];
            for p in self.indptr[i]..self.indptr[i + 1] {
                let k = self.indices[p];
                let v = alpha * self.data[p];
                let row_in = &src[k * cols..(k + 1) * cols];
                for (o, x) in row_out.iter_mut().zip(row_in) {
                    *o += v * x;
                }
            }
        }
    }

    /// `out += alpha * M · S†`
    pub fn dense_mul_adjoint_into(&self, alpha: C64, m: &CMatrix, out: &mut CMatrix) {
        let cols = m.ncols();
        let rows = m.nrows();
        let src = m.as_slice().expect("standard layout");
        let dst = out.as_slice_mut().expect("standard layout");
        for r in 0..rows {
            let row_in = &src[r * cols..(r + 1) * cols];
            let row_out = &mut dst[r * self.n..(r + 1) * self.n];
            for (j, o) in row_out.iter_mut().enumerate() {
                let mut acc = ZERO;
                for p in self.indptr[j]..self.indptr[j + 1] {
                    acc += row_in[self.indices[p]] * self.data[p].conj();
                }
                *o += alpha * acc;
            }
        }
    }
}

/// Elementwise `out[i,j] = a[i,j] * b[i,j]`.
pub fn hadamard(a: &CMatrix, b: &CMatrix) -> CMatrix {
    let mut out = a.clone();
    Zip::from(&mut out).and(b).for_each(|o, &y| *o *= y);
    out
}
