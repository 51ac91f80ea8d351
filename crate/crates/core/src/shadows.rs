//! Classical shadows `sigma = (x)_k (3 |psi_{i_k}><psi_{i_k}| - I)` built from
//! SIC digit strings.
//!
//! Shadows are kept as digit strings and only materialized for the qubit
//! subset a query needs. Materialized shadows live in normalized Pauli
//! coordinates (see [`crate::linalg::pauli_coords`]), where the per-site
//! factor of outcome `i` is `(1, 3 r_i) / sqrt(2)` with `r_i` the Bloch vector
//! of the frame ket, and `tr(A B)` is a dot product.

use nalgebra::Matrix2;

use crate::error::{Error, Result};
use crate::linalg::{self, CMatrix, SiteTensor, C64};
use crate::povm::{SicFrame, SicShot};

/// Per-site shadow factors of a frame in matrix and coordinate form.
#[derive(Clone, Debug)]
pub struct ShadowTable {
    frame: SicFrame,
    matrices: [Matrix2<C64>; 4],
    coords: [[f64; 4]; 4],
    /// `coords[a] (x) coords[b]` at index `4 a + b`.
    pairs: [[f64; 16]; 16],
}

impl ShadowTable {
    pub fn new(frame: &SicFrame) -> Self {
        let matrices = [0, 1, 2, 3].map(|i| frame.shadow_factor(i));
        let coords = matrices.map(|m| linalg::pauli_coords_2x2(&m));
        let mut pairs = [[0.0; 16]; 16];
        for (ab, p) in pairs.iter_mut().enumerate() {
            for (k, v) in p.iter_mut().enumerate() {
                *v = coords[ab / 4][k / 4] * coords[ab % 4][k % 4];
            }
        }
        ShadowTable {
            frame: frame.clone(),
            matrices,
            coords,
            pairs,
        }
    }

    pub fn frame(&self) -> &SicFrame {
        &self.frame
    }

    pub fn site_matrix(&self, digit: u8) -> &Matrix2<C64> {
        &self.matrices[digit as usize]
    }

    pub fn site_coords(&self, digit: u8) -> &[f64; 4] {
        &self.coords[digit as usize]
    }

    /// Coordinates of the marginal shadow on `subset` (sorted, validated by caller).
    pub fn coords(&self, digits: &[u8], subset: &[usize]) -> Vec<f64> {
        let mut out = vec![1.0];
        for &q in subset {
            out = linalg::kron_real(&out, self.site_coords(digits[q]));
        }
        out
    }

    /// Same as [`ShadowTable::coords`], writing into a reusable buffer.
    pub fn coords_into(&self, digits: &[u8], subset: &[usize], out: &mut Vec<f64>) {
        let d = 1 << (2 * subset.len());
        if out.len() != d {
            out.resize(d, 0.0);
        }
        out[0] = 1.0;
        let mut len = 1;
        // expand in place from the back so no entry is overwritten before it
        // is read; sites go two at a time through the pair table
        let mut sites = subset.chunks_exact(2);
        for pair in &mut sites {
            let p = &self.pairs[4 * digits[pair[0]] as usize + digits[pair[1]] as usize];
            for i in (0..len).rev() {
                let x = out[i];
                for (o, &y) in out[16 * i..16 * i + 16].iter_mut().zip(p) {
                    *o = x * y;
                }
            }
            len *= 16;
        }
        if let [q] = sites.remainder() {
            let site = self.site_coords(digits[*q]);
            for i in (0..len).rev() {
                let x = out[i];
                for (o, &y) in out[4 * i..4 * i + 4].iter_mut().zip(site) {
                    *o = x * y;
                }
            }
        }
    }

    pub fn matrix(&self, digits: &[u8], subset: &[usize]) -> CMatrix {
        subset.iter().fold(linalg::identity(1), |acc, &q| {
            linalg::kron(&acc, &linalg::from_matrix2(self.site_matrix(digits[q])))
        })
    }

    /// `tr(sigma sigma')` on `subset`: the product of `+5` for equal digits
    /// and `-1` otherwise.
    pub fn pair_overlap(digits_a: &[u8], digits_b: &[u8], subset: &[usize]) -> f64 {
        subset
            .iter()
            .map(|&q| if digits_a[q] == digits_b[q] { 5.0 } else { -1.0 })
            .product()
    }
}

fn check_dim(a: &CMatrix, sites: usize) -> Result<()> {
    let d = linalg::dim_of(sites);
    if a.nrows() != d || a.ncols() != d {
        return Err(Error::DimensionMismatch {
            expected: d,
            found: a.nrows(),
        });
    }
    Ok(())
}

fn apply_local(a: &CMatrix, sites: usize, f: impl Fn(&Matrix2<C64>) -> Matrix2<C64>) -> Result<CMatrix> {
    check_dim(a, sites)?;
    let mut t = SiteTensor::from_operator(a, sites);
    t.apply_all(&linalg::local_superop(f));
    Ok(t.into_operator())
}

/// Per-site `A -> 3A - tr(A) I`, tensored over `sites` qubits.
pub fn inverse_depolarizing(a: &CMatrix, sites: usize) -> Result<CMatrix> {
    apply_local(a, sites, |x| x.scale(3.0) - Matrix2::identity() * x.trace())
}

/// Per-site `A -> A/3 + tr(A) I / 3`.
pub fn depolarize(a: &CMatrix, sites: usize) -> Result<CMatrix> {
    apply_local(a, sites, |x| {
        (x + Matrix2::identity() * x.trace()).scale(1.0 / 3.0)
    })
}

/// Materializes the marginal shadow of one record on `subset`.
pub fn shadow_expand(frame: &SicFrame, shot: &SicShot, subset: &[usize]) -> Result<CMatrix> {
    let subset = linalg::normalize_subset(subset, shot.n_qubits())?;
    Ok(ShadowTable::new(frame).matrix(&shot.digits, &subset))
}

/// Average of `count` consecutive shadows on `subset`.
#[derive(Clone, Debug, PartialEq)]
pub struct BatchedShadow {
    pub subset: Vec<usize>,
    pub coords: Vec<f64>,
    pub count: u64,
}

impl BatchedShadow {
    pub fn matrix(&self) -> CMatrix {
        linalg::operator_from_coords(&self.coords, self.subset.len())
    }

    /// `tr(matrix^2)`.
    pub fn self_overlap(&self) -> f64 {
        linalg::norm_sqr(&self.coords)
    }
}

/// Groups consecutive records into batches of `b`; a final partial group is dropped.
pub fn batch(frame: &SicFrame, shots: &[SicShot], subset: &[usize], b: usize) -> Result<Vec<BatchedShadow>> {
    if b < 1 {
        return Err(Error::invalid("batch size must be at least 1"));
    }
    let Some(first) = shots.first() else {
        return Ok(Vec::new());
    };
    let subset = linalg::normalize_subset(subset, first.n_qubits())?;
    let table = ShadowTable::new(frame);
    let dim = 1usize << (2 * subset.len());
    let mut buf = Vec::with_capacity(dim);
    Ok(shots
        .chunks_exact(b)
        .map(|chunk| {
            let mut sum = vec![0.0; dim];
            for s in chunk {
                table.coords_into(&s.digits, &subset, &mut buf);
                for (a, x) in sum.iter_mut().zip(&buf) {
                    *a += x;
                }
            }
            let inv = 1.0 / b as f64;
            sum.iter_mut().for_each(|v| *v *= inv);
            BatchedShadow {
                subset: subset.clone(),
                coords: sum,
                count: b as u64,
            }
        })
        .collect())
}

/// Running sums over shadows on a fixed subset.
#[derive(Clone, Debug)]
pub struct ShadowAccumulator {
    table: ShadowTable,
    subset: Vec<usize>,
    /// Sum of shadow coordinates, each batch weighted by its shot count.
    running_sum: Vec<f64>,
    /// Sum of `tr(x^2)` over the added items (shots or batches).
    self_overlap_sum: f64,
    count: u64,
    buf: Vec<f64>,
}

impl ShadowAccumulator {
    pub fn new(frame: &SicFrame, subset: &[usize], n_qubits: usize) -> Result<Self> {
        let subset = linalg::normalize_subset(subset, n_qubits)?;
        let dim = 1usize << (2 * subset.len());
        Ok(ShadowAccumulator {
            table: ShadowTable::new(frame),
            subset,
            running_sum: vec![0.0; dim],
            self_overlap_sum: 0.0,
            count: 0,
            buf: Vec::with_capacity(dim),
        })
    }

    pub fn subset(&self) -> &[usize] {
        &self.subset
    }

    pub fn count(&self) -> u64 {
        self.count
    }

    pub fn self_overlap_sum(&self) -> f64 {
        self.self_overlap_sum
    }

    pub fn running_sum(&self) -> &[f64] {
        &self.running_sum
    }

    pub fn add(&mut self, shot: &SicShot) {
        self.table.coords_into(&shot.digits, &self.subset, &mut self.buf);
        for (a, x) in self.running_sum.iter_mut().zip(&self.buf) {
            *a += x;
        }
        self.self_overlap_sum += 5f64.powi(self.subset.len() as i32);
        self.count += 1;
    }

    pub fn add_batch(&mut self, b: &BatchedShadow) -> Result<()> {
        if b.subset != self.subset {
            return Err(Error::InvalidSubset(format!(
                "batch on {:?} added to accumulator on {:?}",
                b.subset, self.subset
            )));
        }
        let w = b.count as f64;
        for (a, x) in self.running_sum.iter_mut().zip(&b.coords) {
            *a += w * x;
        }
        self.self_overlap_sum += b.self_overlap();
        self.count += b.count;
        Ok(())
    }

    /// Fan-in of an accumulator filled in parallel.
    pub fn merge(&mut self, other: &ShadowAccumulator) -> Result<()> {
        if other.subset != self.subset {
            return Err(Error::InvalidSubset("merging accumulators on different subsets".into()));
        }
        if other.table.frame() != self.table.frame() {
            return Err(Error::FrameMismatch("accumulators use different frames".into()));
        }
        for (a, x) in self.running_sum.iter_mut().zip(&other.running_sum) {
            *a += x;
        }
        self.self_overlap_sum += other.self_overlap_sum;
        self.count += other.count;
        Ok(())
    }

    pub fn mean_coords(&self) -> Result<Vec<f64>> {
        if self.count == 0 {
            return Err(Error::InsufficientData("no shadows accumulated".into()));
        }
        let inv = 1.0 / self.count as f64;
        Ok(self.running_sum.iter().map(|v| v * inv).collect())
    }

    pub fn mean(&self) -> Result<CMatrix> {
        Ok(linalg::operator_from_coords(&self.mean_coords()?, self.subset.len()))
    }
}

/// Mean shadow over all records on the full system.
pub fn shadow_mean(frame: &SicFrame, shots: &[SicShot]) -> Result<CMatrix> {
    let n = shots
        .first()
        .ok_or_else(|| Error::InsufficientData("no shots".into()))?
        .n_qubits();
    let all: Vec<usize> = (0..n).collect();
    let mut acc = ShadowAccumulator::new(frame, &all, n)?;
    for s in shots {
        acc.add(s);
    }
    acc.mean()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::c;
    use crate::qstate::random;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn shot(s: &str) -> SicShot {
        SicShot::new(s.bytes().map(|b| b - b'0').collect()).unwrap()
    }

    #[test]
    fn inverse_depolarizing_examples() {
        let i2 = linalg::identity(2);
        assert!(linalg::max_abs_diff(&inverse_depolarizing(&i2, 1).unwrap(), &i2) < 1e-15);
        let zero = CMatrix::from_fn(2, 2, |i, j| if i == 0 && j == 0 { linalg::ONE } else { linalg::ZERO });
        let expected = CMatrix::from_fn(2, 2, |i, j| match (i, j) {
            (0, 0) => c(2.0, 0.0),
            (1, 1) => c(-1.0, 0.0),
            _ => linalg::ZERO,
        });
        assert!(linalg::max_abs_diff(&inverse_depolarizing(&zero, 1).unwrap(), &expected) < 1e-15);
        assert!(inverse_depolarizing(&i2, 2).is_err());
    }

    #[test]
    fn depolarizing_inverse_pair() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for n in 1..=3 {
            let a = random::random_hermitian(n, &mut rng);
            let back = depolarize(&inverse_depolarizing(&a, n).unwrap(), n).unwrap();
            assert!(linalg::max_abs_diff(&a, &back) < 1e-12);
        }
    }

    #[test]
    fn single_site_shadow_spectrum() {
        let f = SicFrame::standard();
        for d in 0..4u8 {
            let m = shadow_expand(&f, &SicShot::new(vec![d, 0]).unwrap(), &[0]).unwrap();
            let ev = linalg::eigvalsh(&m);
            assert!((ev[0] + 1.0).abs() < 1e-12 && (ev[1] - 2.0).abs() < 1e-12);
        }
        let m = shadow_expand(&f, &shot("0312"), &[0, 1, 3]).unwrap();
        assert!((crate::qstate::purity_of(&m) - 125.0).abs() < 1e-10);
        assert!((m.trace().re - 1.0).abs() < 1e-12);
    }

    #[test]
    fn coords_match_matrices() {
        let f = SicFrame::rotated();
        let t = ShadowTable::new(&f);
        let s = shot("2130");
        let m = t.matrix(&s.digits, &[1, 2]);
        let x = t.coords(&s.digits, &[1, 2]);
        assert!(linalg::max_abs_diff(&linalg::operator_from_coords(&x, 2), &m) < 1e-14);
        let s2 = shot("2010");
        let y = t.coords(&s2.digits, &[0, 1, 2]);
        let xx = t.coords(&s.digits, &[0, 1, 2]);
        assert!((linalg::dot(&xx, &y) - ShadowTable::pair_overlap(&s.digits, &s2.digits, &[0, 1, 2])).abs() < 1e-12);
    }

    #[test]
    fn accumulator_bookkeeping() {
        let f = SicFrame::standard();
        let mut acc = ShadowAccumulator::new(&f, &[0, 2], 3).unwrap();
        let shots = [shot("012"), shot("333"), shot("120")];
        for s in &shots {
            acc.add(s);
        }
        assert_eq!(acc.self_overlap_sum(), 3.0 * 25.0);
        assert!((acc.mean().unwrap().trace().re - 1.0).abs() < 1e-12);
        let mut other = ShadowAccumulator::new(&f, &[0, 2], 3).unwrap();
        other.add(&shots[0]);
        acc.merge(&other).unwrap();
        assert_eq!(acc.count(), 4);
        let wrong = ShadowAccumulator::new(&SicFrame::rotated(), &[0, 2], 3).unwrap();
        assert!(matches!(acc.merge(&wrong), Err(Error::FrameMismatch(_))));
    }

    #[test]
    fn batching_drops_partial_group() {
        let f = SicFrame::standard();
        let shots: Vec<SicShot> = (0..7).map(|i| SicShot::from_index(i, 2)).collect();
        let b = batch(&f, &shots, &[0, 1], 3).unwrap();
        assert_eq!(b.len(), 2);
        assert!((b[0].matrix().trace().re - 1.0).abs() < 1e-12);
        assert!(batch(&f, &shots, &[0], 0).is_err());
    }
}
