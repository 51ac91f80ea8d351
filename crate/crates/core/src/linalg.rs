//! Dense complex linear algebra shared by every module.
//!
//! Besides thin wrappers around `nalgebra`, this module owns the site-wise
//! tensor machinery: an operator on N qubits is viewed as a rank-N tensor
//! whose k-th index is the pair `(row bit, column bit)` of qubit k, packed
//! as a base-4 digit `2 * row + col`. Local linear maps (depolarizing
//! channels, effect contractions, Pauli coordinate changes) then act along
//! one axis at a time.

use nalgebra::{DMatrix, DVector, Matrix2, SymmetricEigen};
use num_complex::Complex64;

use crate::error::{Error, Result};

pub type C64 = Complex64;
pub type CMatrix = DMatrix<C64>;
pub type CVector = DVector<C64>;

pub const ZERO: C64 = C64::new(0.0, 0.0);
pub const ONE: C64 = C64::new(1.0, 0.0);
pub const I: C64 = C64::new(0.0, 1.0);

pub fn c(re: f64, im: f64) -> C64 {
    C64::new(re, im)
}

/// Single-qubit Pauli matrices in the order I, X, Y, Z.
pub fn pauli_matrices() -> [Matrix2<C64>; 4] {
    [
        Matrix2::new(ONE, ZERO, ZERO, ONE),
        Matrix2::new(ZERO, ONE, ONE, ZERO),
        Matrix2::new(ZERO, -I, I, ZERO),
        Matrix2::new(ONE, ZERO, ZERO, -ONE),
    ]
}

pub fn dim_of(n_qubits: usize) -> usize {
    1usize << n_qubits
}

/// Number of qubits for a matrix of side `dim`, if `dim` is a power of two.
pub fn qubits_of(dim: usize) -> Option<usize> {
    if dim.is_power_of_two() {
        Some(dim.trailing_zeros() as usize)
    } else {
        None
    }
}

pub fn kron(a: &CMatrix, b: &CMatrix) -> CMatrix {
    a.kronecker(b)
}

pub fn kron_vec(a: &CVector, b: &CVector) -> CVector {
    a.kronecker(b)
}

pub fn kron_real(a: &[f64], b: &[f64]) -> Vec<f64> {
    let mut out = Vec::with_capacity(a.len() * b.len());
    for &x in a {
        for &y in b {
            out.push(x * y);
        }
    }
    out
}

pub fn from_matrix2(m: &Matrix2<C64>) -> CMatrix {
    CMatrix::from_fn(2, 2, |i, j| m[(i, j)])
}

pub fn identity(dim: usize) -> CMatrix {
    CMatrix::identity(dim, dim)
}

pub fn trace(m: &CMatrix) -> C64 {
    m.trace()
}

/// `tr(A B)` without forming the product.
pub fn trace_product(a: &CMatrix, b: &CMatrix) -> C64 {
    let n = a.nrows();
    let mut acc = ZERO;
    for i in 0..n {
        for k in 0..n {
            acc += a[(i, k)] * b[(k, i)];
        }
    }
    acc
}

/// Largest absolute entry of `m - m^dagger`.
pub fn hermiticity_residual(m: &CMatrix) -> f64 {
    let n = m.nrows();
    let mut worst: f64 = 0.0;
    for i in 0..n {
        for j in i..n {
            worst = worst.max((m[(i, j)] - m[(j, i)].conj()).norm());
        }
    }
    worst
}

/// Returns `(m + m^dagger) / 2`.
pub fn hermitize(m: &CMatrix) -> CMatrix {
    (m + m.adjoint()).scale(0.5)
}

pub fn max_abs_diff(a: &CMatrix, b: &CMatrix) -> f64 {
    a.iter()
        .zip(b.iter())
        .map(|(x, y)| (x - y).norm())
        .fold(0.0, f64::max)
}

pub fn frobenius(m: &CMatrix) -> f64 {
    m.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
}

/// Eigendecomposition of a Hermitian matrix, eigenvalues ascending.
pub fn eigh(m: &CMatrix) -> (Vec<f64>, CMatrix) {
    let eig = SymmetricEigen::new(hermitize(m));
    let n = m.nrows();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
    let values = order.iter().map(|&k| eig.eigenvalues[k]).collect();
    let vectors = CMatrix::from_fn(n, n, |i, j| eig.eigenvectors[(i, order[j])]);
    (values, vectors)
}

pub fn eigvalsh(m: &CMatrix) -> Vec<f64> {
    let eig = SymmetricEigen::new(hermitize(m));
    let mut v: Vec<f64> = eig.eigenvalues.iter().copied().collect();
    v.sort_by(f64::total_cmp);
    v
}

/// Reassembles `V diag(values) V^dagger`.
pub fn from_eigen(values: &[f64], vectors: &CMatrix) -> CMatrix {
    let n = vectors.nrows();
    let mut scaled = vectors.clone();
    for (j, &v) in values.iter().enumerate() {
        for i in 0..n {
            scaled[(i, j)] *= v;
        }
    }
    let out = scaled * vectors.adjoint();
    hermitize(&out)
}

/// Validates a sorted, duplicate-free subset of `0..n`.
pub fn check_subset(subset: &[usize], n: usize) -> Result<()> {
    if subset.is_empty() {
        return Err(Error::InvalidSubset("empty subset".into()));
    }
    for w in subset.windows(2) {
        if w[0] >= w[1] {
            return Err(Error::InvalidSubset(format!(
                "subset {subset:?} must be strictly increasing"
            )));
        }
    }
    if let Some(&last) = subset.last() {
        if last >= n {
            return Err(Error::InvalidSubset(format!(
                "qubit {last} out of range for {n} qubits"
            )));
        }
    }
    Ok(())
}

/// Sorts and validates an arbitrary index list.
pub fn normalize_subset(subset: &[usize], n: usize) -> Result<Vec<usize>> {
    let mut s = subset.to_vec();
    s.sort_unstable();
    let before = s.len();
    s.dedup();
    if s.len() != before {
        return Err(Error::InvalidSubset(format!(
            "subset {subset:?} repeats an index"
        )));
    }
    check_subset(&s, n)?;
    Ok(s)
}

/// Partial trace of an `n`-qubit operator onto the sorted qubits `keep`.
/// The kept qubits retain their relative order.
pub fn partial_trace(m: &CMatrix, n: usize, keep: &[usize]) -> Result<CMatrix> {
    check_subset(keep, n)?;
    if m.nrows() != dim_of(n) || m.ncols() != dim_of(n) {
        return Err(Error::DimensionMismatch {
            expected: dim_of(n),
            found: m.nrows(),
        });
    }
    let traced: Vec<usize> = (0..n).filter(|q| !keep.contains(q)).collect();
    let dk = dim_of(keep.len());
    let dt = dim_of(traced.len());
    let spread = |kept_bits: usize, traced_bits: usize| -> usize {
        let mut idx = 0usize;
        for (pos, &q) in keep.iter().enumerate() {
            let bit = (kept_bits >> (keep.len() - 1 - pos)) & 1;
            idx |= bit << (n - 1 - q);
        }
        for (pos, &q) in traced.iter().enumerate() {
            let bit = (traced_bits >> (traced.len() - 1 - pos)) & 1;
            idx |= bit << (n - 1 - q);
        }
        idx
    };
    let mut out = CMatrix::zeros(dk, dk);
    for t in 0..dt {
        let rows: Vec<usize> = (0..dk).map(|r| spread(r, t)).collect();
        for (r, &ri) in rows.iter().enumerate() {
            for (cc, &ci) in rows.iter().enumerate() {
                out[(r, cc)] += m[(ri, ci)];
            }
        }
    }
    Ok(out)
}

/// Transposes the tensor factors of the sorted qubit set `part`.
pub fn partial_transpose(m: &CMatrix, n: usize, part: &[usize]) -> Result<CMatrix> {
    check_subset(part, n)?;
    let d = dim_of(n);
    if m.nrows() != d {
        return Err(Error::DimensionMismatch {
            expected: d,
            found: m.nrows(),
        });
    }
    let mask: usize = part.iter().map(|&q| 1usize << (n - 1 - q)).sum();
    let mut out = CMatrix::zeros(d, d);
    for i in 0..d {
        for j in 0..d {
            let ni = (i & !mask) | (j & mask);
            let nj = (j & !mask) | (i & mask);
            out[(ni, nj)] = m[(i, j)];
        }
    }
    Ok(out)
}

/// Rank-N tensor with per-axis extents, site 0 most significant.
#[derive(Clone, Debug)]
pub struct SiteTensor {
    pub dims: Vec<usize>,
    pub data: Vec<C64>,
}

impl SiteTensor {
    /// Repacks an `n`-qubit operator into its pair layout (every axis has extent 4).
    pub fn from_operator(m: &CMatrix, n: usize) -> Self {
        let d = dim_of(n);
        let mut data = vec![ZERO; d * d];
        for i in 0..d {
            for j in 0..d {
                data[pair_index(i, j, n)] = m[(i, j)];
            }
        }
        SiteTensor {
            dims: vec![4; n],
            data,
        }
    }

    pub fn into_operator(self) -> CMatrix {
        let n = self.dims.len();
        debug_assert!(self.dims.iter().all(|&d| d == 4));
        let d = dim_of(n);
        CMatrix::from_fn(d, d, |i, j| self.data[pair_index(i, j, n)])
    }

    /// Applies `map` (shape `out x dims[axis]`) along one axis.
    pub fn apply_axis(&mut self, axis: usize, map: &CMatrix) {
        let ext = self.dims[axis];
        assert_eq!(map.ncols(), ext, "map width must match axis extent");
        let out_ext = map.nrows();
        let outer: usize = self.dims[..axis].iter().product();
        let inner: usize = self.dims[axis + 1..].iter().product();
        let mut next = vec![ZERO; outer * out_ext * inner];
        for o in 0..outer {
            let src = &self.data[o * ext * inner..(o + 1) * ext * inner];
            let dst = &mut next[o * out_ext * inner..(o + 1) * out_ext * inner];
            for y in 0..out_ext {
                for x in 0..ext {
                    let w = map[(y, x)];
                    if w == ZERO {
                        continue;
                    }
                    let s = &src[x * inner..(x + 1) * inner];
                    let t = &mut dst[y * inner..(y + 1) * inner];
                    for (ti, si) in t.iter_mut().zip(s) {
                        *ti += w * si;
                    }
                }
            }
        }
        self.data = next;
        self.dims[axis] = out_ext;
    }

    pub fn apply_all(&mut self, map: &CMatrix) {
        for axis in 0..self.dims.len() {
            self.apply_axis(axis, map);
        }
    }
}

/// Packs row index `i` and column index `j` into the pair-layout offset.
fn pair_index(i: usize, j: usize, n: usize) -> usize {
    let mut idx = 0usize;
    for k in 0..n {
        let shift = n - 1 - k;
        let a = (i >> shift) & 1;
        let b = (j >> shift) & 1;
        idx = idx * 4 + 2 * a + b;
    }
    idx
}

/// Row-vectorized local map `X -> f(X)` of a 2x2 operator, as a 4x4 matrix
/// acting on pair digits `2 * row + col`.
pub fn local_superop(f: impl Fn(&Matrix2<C64>) -> Matrix2<C64>) -> CMatrix {
    let mut out = CMatrix::zeros(4, 4);
    for x in 0..4 {
        let mut e = Matrix2::zeros();
        e[(x / 2, x % 2)] = ONE;
        let img = f(&e);
        for y in 0..4 {
            out[(y, x)] = img[(y / 2, y % 2)];
        }
    }
    out
}

/// Map from pair digits to normalized Pauli coordinates `tr(P_w X) / sqrt(2)`.
fn to_pauli_map() -> CMatrix {
    let p = pauli_matrices();
    let s = std::f64::consts::FRAC_1_SQRT_2;
    CMatrix::from_fn(4, 4, |w, x| p[w][(x % 2, x / 2)] * s)
}

/// Inverse of [`to_pauli_map`].
fn from_pauli_map() -> CMatrix {
    let p = pauli_matrices();
    let s = std::f64::consts::FRAC_1_SQRT_2;
    CMatrix::from_fn(4, 4, |x, w| p[w][(x / 2, x % 2)] * s)
}

/// Coordinates of a Hermitian operator in the orthonormal basis
/// `P_w / sqrt(2^N)`, Pauli strings indexed base-4 (I,X,Y,Z), qubit 0 first.
/// `tr(A B)` equals the dot product of the coordinate vectors.
pub fn pauli_coords(m: &CMatrix, n: usize) -> Vec<f64> {
    let mut t = SiteTensor::from_operator(m, n);
    t.apply_all(&to_pauli_map());
    t.data.iter().map(|z| z.re).collect()
}

pub fn operator_from_coords(coords: &[f64], n: usize) -> CMatrix {
    let mut t = SiteTensor {
        dims: vec![4; n],
        data: coords.iter().map(|&x| c(x, 0.0)).collect(),
    };
    t.apply_all(&from_pauli_map());
    t.into_operator()
}

/// Pauli coordinates of a single-qubit operator.
pub fn pauli_coords_2x2(m: &Matrix2<C64>) -> [f64; 4] {
    let p = pauli_matrices();
    let s = std::f64::consts::FRAC_1_SQRT_2;
    let mut out = [0.0; 4];
    for (w, pw) in p.iter().enumerate() {
        out[w] = (pw * m).trace().re * s;
    }
    out
}

pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub fn norm_sqr(a: &[f64]) -> f64 {
    a.iter().map(|x| x * x).sum()
}
