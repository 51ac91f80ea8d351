//! Shadow-based property estimators: linear observables and fidelities,
//! pairwise (U-statistic) purities with O(dim) streaming updates, Rényi-2
//! entropies over bipartitions, the third partial-transpose moment, and
//! median of means.

use nalgebra::Matrix2;
use rand::Rng;

use crate::error::{Error, Result};
use crate::linalg::{self, CMatrix, CVector, C64};
use crate::povm::{SicFrame, SicShot};
use crate::qstate::{Bipartition, PureState, PURITY_CLAMP};
use crate::shadows::ShadowTable;

/// Purity estimates are floored here before taking `-log2`.
pub const RENYI_PURITY_FLOOR: f64 = 1e-6;
/// Jackknife standard errors need the second-moment matrix of the batch
/// shadows, which is kept only up to this coordinate dimension.
pub const JACKKNIFE_MAX_DIM: usize = 256;
/// Default number of triples for the p3 estimator before sub-sampling.
pub const DEFAULT_TRIPLE_BUDGET: usize = 200_000;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Estimate {
    pub value: f64,
    pub stderr: Option<f64>,
}

/// Hermitian observable acting on the qubits `support`.
#[derive(Clone, Debug)]
pub struct ObservableSpec {
    pub support: Vec<usize>,
    pub operator: CMatrix,
    pub label: String,
    coords: Vec<f64>,
}

impl ObservableSpec {
    pub fn new(support: &[usize], operator: CMatrix, label: impl Into<String>) -> Result<Self> {
        let mut sorted = support.to_vec();
        sorted.sort_unstable();
        if sorted != support {
            return Err(Error::InvalidSubset("observable support must be sorted".into()));
        }
        let d = linalg::dim_of(support.len());
        if operator.nrows() != d || operator.ncols() != d {
            return Err(Error::DimensionMismatch {
                expected: d,
                found: operator.nrows(),
            });
        }
        let h = linalg::hermiticity_residual(&operator);
        if h > 1e-12 {
            return Err(Error::invalid(format!("observable is not Hermitian (residual {h:.3e})")));
        }
        let coords = linalg::pauli_coords(&operator, support.len());
        Ok(ObservableSpec {
            support: support.to_vec(),
            operator,
            label: label.into(),
            coords,
        })
    }

    /// `|phi><phi|` on all qubits of `phi`.
    pub fn fidelity(target: &PureState, label: impl Into<String>) -> Self {
        let a = target.amplitudes();
        let support: Vec<usize> = (0..target.n_qubits()).collect();
        Self::new(&support, a * a.adjoint(), label).expect("projectors are Hermitian")
    }

    pub fn coords(&self) -> &[f64] {
        &self.coords
    }

    /// `tr(O_K (x)_{k in K} sigma_k)` for one record.
    pub fn shot_value(&self, table: &ShadowTable, digits: &[u8]) -> f64 {
        linalg::dot(&self.coords, &table.coords(digits, &self.support))
    }

    /// `tr(O^2)`.
    pub fn hs_norm_sq(&self) -> f64 {
        linalg::norm_sqr(&self.coords)
    }
}

fn check_support(support: &[usize], n: usize) -> Result<()> {
    linalg::check_subset(support, n)
}

/// Running mean and variance of per-shot values.
#[derive(Clone, Debug, Default)]
pub struct MeanTracker {
    count: u64,
    sum: f64,
    sum_sq: f64,
}

impl MeanTracker {
    pub fn push(&mut self, x: f64) {
        self.count += 1;
        self.sum += x;
        self.sum_sq += x * x;
    }

    pub fn count(&self) -> u64 {
        self.count
    }

    pub fn estimate(&self) -> Result<Estimate> {
        if self.count == 0 {
            return Err(Error::InsufficientData("no records".into()));
        }
        let m = self.count as f64;
        let mean = self.sum / m;
        let stderr = if self.count > 1 {
            let var = ((self.sum_sq - m * mean * mean) / (m - 1.0)).max(0.0);
            Some((var / m).sqrt())
        } else {
            None
        };
        Ok(Estimate { value: mean, stderr })
    }
}

/// Mean of `tr(O sigma_m)` over the records; standard error is the sample
/// standard deviation over `sqrt(M)`.
pub fn estimate_linear(frame: &SicFrame, shots: &[SicShot], obs: &ObservableSpec) -> Result<Estimate> {
    let first = shots
        .first()
        .ok_or_else(|| Error::InsufficientData("no records".into()))?;
    check_support(&obs.support, first.n_qubits())?;
    let table = ShadowTable::new(frame);
    let mut t = MeanTracker::default();
    for s in shots {
        t.push(obs.shot_value(&table, &s.digits));
    }
    t.estimate()
}

/// `<phi| (x)_k sigma_k |phi>` by applying the 2x2 site factors to `phi`.
pub fn pure_shadow_overlap(table: &ShadowTable, digits: &[u8], phi: &CVector, scratch: &mut Vec<C64>) -> f64 {
    let n = digits.len();
    scratch.clear();
    scratch.extend(phi.iter().copied());
    for (q, &d) in digits.iter().enumerate() {
        apply_site(scratch, n, q, table.site_matrix(d));
    }
    phi.iter().zip(scratch.iter()).map(|(a, b)| (a.conj() * b).re).sum()
}

fn apply_site(v: &mut [C64], n: usize, q: usize, g: &Matrix2<C64>) {
    let stride = 1usize << (n - 1 - q);
    let (g00, g01, g10, g11) = (g[(0, 0)], g[(0, 1)], g[(1, 0)], g[(1, 1)]);
    let d = v.len();
    let mut base = 0;
    while base < d {
        for i in base..base + stride {
            let a0 = v[i];
            let a1 = v[i + stride];
            v[i] = g00 * a0 + g01 * a1;
            v[i + stride] = g10 * a0 + g11 * a1;
        }
        base += 2 * stride;
    }
}

/// Streaming fidelity `<phi| rho_hat |phi>` for a pure target.
#[derive(Clone, Debug)]
pub struct FidelityTracker {
    table: ShadowTable,
    target: CVector,
    stats: MeanTracker,
    scratch: Vec<C64>,
}

impl FidelityTracker {
    pub fn new(frame: &SicFrame, target: &PureState) -> Self {
        FidelityTracker {
            table: ShadowTable::new(frame),
            target: target.amplitudes().clone(),
            stats: MeanTracker::default(),
            scratch: Vec::with_capacity(target.amplitudes().len()),
        }
    }

    pub fn n_qubits(&self) -> usize {
        linalg::qubits_of(self.target.len()).unwrap_or(0)
    }

    pub fn add(&mut self, shot: &SicShot) {
        let v = pure_shadow_overlap(&self.table, &shot.digits, &self.target, &mut self.scratch);
        self.stats.push(v);
    }

    pub fn count(&self) -> u64 {
        self.stats.count()
    }

    pub fn estimate(&self) -> Result<Estimate> {
        self.stats.estimate()
    }
}

/// Streaming pairwise purity estimator on one subset.
///
/// With `x_m` the (batched) shadow coordinates, `s = sum_m x_m` and
/// `Q = sum_m |x_m|^2`, the estimate is `(|s|^2 - Q) / (M (M - 1))`, which
/// is exactly the average of `tr(sigma_m sigma_m')` over distinct pairs.
#[derive(Clone, Debug)]
pub struct PurityTracker {
    table: ShadowTable,
    subset: Vec<usize>,
    batch: usize,
    dim: usize,
    s: Vec<f64>,
    q_sum: f64,
    q_sq_sum: f64,
    /// `sum_m q_m x_m`
    g: Vec<f64>,
    /// `sum_m x_m x_m^T`, row-major; only kept for small dimensions.
    r: Option<Vec<f64>>,
    batches: u64,
    pending: Vec<f64>,
    pending_count: usize,
    buf: Vec<f64>,
}

impl PurityTracker {
    pub fn new(frame: &SicFrame, subset: &[usize], n_qubits: usize, batch: usize) -> Result<Self> {
        if batch < 1 {
            return Err(Error::invalid("batch size must be at least 1"));
        }
        let subset = linalg::normalize_subset(subset, n_qubits)?;
        let dim = 1usize << (2 * subset.len());
        Ok(PurityTracker {
            table: ShadowTable::new(frame),
            subset,
            batch,
            dim,
            s: vec![0.0; dim],
            q_sum: 0.0,
            q_sq_sum: 0.0,
            g: vec![0.0; dim],
            r: (dim <= JACKKNIFE_MAX_DIM).then(|| vec![0.0; dim * dim]),
            batches: 0,
            pending: vec![0.0; dim],
            pending_count: 0,
            buf: Vec::with_capacity(dim),
        })
    }

    pub fn subset(&self) -> &[usize] {
        &self.subset
    }

    /// Number of complete batches.
    pub fn batches(&self) -> u64 {
        self.batches
    }

    pub fn add(&mut self, shot: &SicShot) {
        self.table.coords_into(&shot.digits, &self.subset, &mut self.buf);
        if self.batch == 1 {
            let x = std::mem::take(&mut self.buf);
            self.add_coords(&x);
            self.buf = x;
            return;
        }
        for (p, x) in self.pending.iter_mut().zip(&self.buf) {
            *p += x;
        }
        self.pending_count += 1;
        if self.pending_count == self.batch {
            let inv = 1.0 / self.batch as f64;
            let x: Vec<f64> = self.pending.iter().map(|v| v * inv).collect();
            self.add_coords(&x);
            self.pending.iter_mut().for_each(|v| *v = 0.0);
            self.pending_count = 0;
        }
    }

    /// Adds one already-averaged batch shadow.
    pub fn add_coords(&mut self, x: &[f64]) {
        debug_assert_eq!(x.len(), self.dim);
        let q = linalg::norm_sqr(x);
        for ((s, g), &v) in self.s.iter_mut().zip(self.g.iter_mut()).zip(x) {
            *s += v;
            *g += q * v;
        }
        if let Some(r) = self.r.as_mut() {
            let d = self.dim;
            for (i, &xi) in x.iter().enumerate() {
                if xi == 0.0 {
                    continue;
                }
                let row = &mut r[i * d..(i + 1) * d];
                for (rij, &xj) in row.iter_mut().zip(x) {
                    *rij += xi * xj;
                }
            }
        }
        self.q_sum += q;
        self.q_sq_sum += q * q;
        self.batches += 1;
    }

    pub fn purity(&self) -> Result<f64> {
        if self.batches < 2 {
            return Err(Error::InsufficientData(format!(
                "purity needs at least 2 batches, have {}",
                self.batches
            )));
        }
        let m = self.batches as f64;
        Ok((linalg::norm_sqr(&self.s) - self.q_sum) / (m * (m - 1.0)))
    }

    /// Jackknife over batches, in closed form from the running moments.
    pub fn jackknife_stderr(&self) -> Option<f64> {
        let r = self.r.as_ref()?;
        if self.batches < 3 {
            return None;
        }
        let m = self.batches as f64;
        let d = self.dim;
        let t = linalg::norm_sqr(&self.s);
        let su: f64 = t;
        let mut su2 = 0.0;
        for i in 0..d {
            if self.s[i] == 0.0 {
                continue;
            }
            su2 += self.s[i] * linalg::dot(&r[i * d..(i + 1) * d], &self.s);
        }
        let suq = linalg::dot(&self.s, &self.g);
        // leave-one-out numerators differ from T - Q by a_i = 2 q_i - 2 u_i
        let sa = 2.0 * self.q_sum - 2.0 * su;
        let sa2 = 4.0 * self.q_sq_sum - 8.0 * suq + 4.0 * su2;
        let denom = (m - 1.0) * (m - 2.0);
        let spread = ((sa2 - sa * sa / m) / (denom * denom)).max(0.0);
        Some(((m - 1.0) / m * spread).sqrt())
    }

    pub fn estimate(&self) -> Result<Estimate> {
        Ok(Estimate {
            value: self.purity()?,
            stderr: self.jackknife_stderr(),
        })
    }
}

pub fn estimate_purity(frame: &SicFrame, shots: &[SicShot], subset: &[usize], batch: usize) -> Result<Estimate> {
    let n = shots
        .first()
        .ok_or_else(|| Error::InsufficientData("no records".into()))?
        .n_qubits();
    let mut t = PurityTracker::new(frame, subset, n, batch)?;
    for s in shots {
        t.add(s);
    }
    t.estimate()
}

/// `-log2(max(p, 1e-6))`, with a delta-method standard error.
pub fn renyi_from_purity(p: Estimate) -> Estimate {
    let clamped = p.value.max(RENYI_PURITY_FLOOR);
    Estimate {
        value: -clamped.log2(),
        stderr: p
            .stderr
            .map(|se| se / (clamped.max(PURITY_CLAMP) * std::f64::consts::LN_2)),
    }
}

/// Rényi-2 entropy of a bipartition, estimated on its smaller side.
pub fn estimate_renyi2(frame: &SicFrame, shots: &[SicShot], part: &Bipartition, batch: usize) -> Result<Estimate> {
    Ok(renyi_from_purity(estimate_purity(frame, shots, &part.smaller_side(), batch)?))
}

/// Per-site values of `tr(X_a X_b X_c)` and of the transposed product for
/// all digit triples.
struct TripleTable {
    plain: Vec<C64>,
    transposed: Vec<C64>,
}

impl TripleTable {
    fn new(table: &ShadowTable) -> Self {
        let mut plain = Vec::with_capacity(64);
        let mut transposed = Vec::with_capacity(64);
        for a in 0..4u8 {
            for b in 0..4u8 {
                for c in 0..4u8 {
                    let (xa, xb, xc) = (table.site_matrix(a), table.site_matrix(b), table.site_matrix(c));
                    plain.push((xa * xb * xc).trace());
                    transposed.push((xc * xb * xa).trace());
                }
            }
        }
        TripleTable { plain, transposed }
    }

    fn kernel(&self, a: &[u8], b: &[u8], c: &[u8], in_a: &[bool]) -> f64 {
        let mut acc = linalg::ONE;
        for q in 0..a.len() {
            let idx = 16 * a[q] as usize + 4 * b[q] as usize + c[q] as usize;
            acc *= if in_a[q] { self.transposed[idx] } else { self.plain[idx] };
        }
        acc.re
    }
}

/// `Re tr(sigma_a^{T_A} sigma_b^{T_A} sigma_c^{T_A})` for three records.
pub fn p3_kernel(frame: &SicFrame, a: &SicShot, b: &SicShot, c: &SicShot, part: &Bipartition) -> f64 {
    let table = ShadowTable::new(frame);
    let tt = TripleTable::new(&table);
    let in_a = side_mask(part);
    tt.kernel(&a.digits, &b.digits, &c.digits, &in_a)
}

fn side_mask(part: &Bipartition) -> Vec<bool> {
    let mut m = vec![false; part.n_qubits()];
    for &q in part.side_a() {
        m[q] = true;
    }
    m
}

/// Third partial-transpose moment as the average kernel over distinct
/// triples. When there are more than `triple_budget` triples, that many are
/// drawn uniformly (with replacement among triples) using `rng`.
pub fn estimate_p3<R: Rng + ?Sized>(
    frame: &SicFrame,
    shots: &[SicShot],
    part: &Bipartition,
    triple_budget: usize,
    rng: &mut R,
) -> Result<f64> {
    let m = shots.len();
    if m < 3 {
        return Err(Error::InsufficientData(format!("p3 needs at least 3 records, have {m}")));
    }
    if shots[0].n_qubits() != part.n_qubits() {
        return Err(Error::InvalidBipartition("bipartition does not match the records".into()));
    }
    let table = ShadowTable::new(frame);
    let tt = TripleTable::new(&table);
    let in_a = side_mask(part);
    let total = (m as u128) * (m as u128 - 1) * (m as u128 - 2) / 6;
    if total <= triple_budget as u128 {
        let mut sum = 0.0;
        for i in 0..m {
            for j in i + 1..m {
                for k in j + 1..m {
                    sum += tt.kernel(&shots[i].digits, &shots[j].digits, &shots[k].digits, &in_a);
                }
            }
        }
        return Ok(sum / total as f64);
    }
    let budget = triple_budget.max(1);
    let mut sum = 0.0;
    for _ in 0..budget {
        let i = rng.random_range(0..m);
        let mut j = rng.random_range(0..m - 1);
        if j >= i {
            j += 1;
        }
        let mut k = rng.random_range(0..m - 2);
        let (lo, hi) = (i.min(j), i.max(j));
        if k >= lo {
            k += 1;
        }
        if k >= hi {
            k += 1;
        }
        sum += tt.kernel(&shots[i].digits, &shots[j].digits, &shots[k].digits, &in_a);
    }
    Ok(sum / budget as f64)
}

/// Splits the records into `groups` consecutive equal groups (dropping the
/// remainder), applies `estimator` to each and returns the median.
pub fn median_of_means<T, F>(records: &[T], groups: usize, estimator: F) -> Result<f64>
where
    F: Fn(&[T]) -> Result<f64>,
{
    if groups < 1 {
        return Err(Error::invalid("median of means needs at least one group"));
    }
    if records.len() < groups {
        return Err(Error::InsufficientData(format!(
            "{} records cannot fill {groups} groups",
            records.len()
        )));
    }
    if groups == 1 {
        return estimator(records);
    }
    let size = records.len() / groups;
    let mut vals = records
        .chunks_exact(size)
        .take(groups)
        .map(&estimator)
        .collect::<Result<Vec<f64>>>()?;
    Ok(median(&mut vals))
}

pub fn median(vals: &mut [f64]) -> f64 {
    vals.sort_by(f64::total_cmp);
    let n = vals.len();
    if n % 2 == 1 {
        vals[n / 2]
    } else {
        0.5 * (vals[n / 2 - 1] + vals[n / 2])
    }
}

/// Every bipartition whose smaller side has at most `max_side` qubits, each
/// reported once with side A the smaller side (lexicographically smaller
/// subset on ties).
pub fn all_bipartitions(n: usize, max_side: usize) -> Result<Vec<Bipartition>> {
    if max_side < 1 || 2 * max_side > n {
        return Err(Error::invalid(format!(
            "max_side {max_side} must lie in 1..={} for {n} qubits",
            n / 2
        )));
    }
    let mut out = Vec::new();
    for k in 1..=max_side {
        for subset in combinations(n, k) {
            let part = Bipartition::new(&subset, n)?;
            if part.smaller_side() == subset {
                out.push(part);
            }
        }
    }
    Ok(out)
}

/// k-subsets of `0..n` in lexicographic order.
pub fn combinations(n: usize, k: usize) -> Vec<Vec<usize>> {
    let mut out = Vec::new();
    if k > n {
        return out;
    }
    let mut idx: Vec<usize> = (0..k).collect();
    loop {
        out.push(idx.clone());
        let Some(i) = (0..k).rev().find(|&i| idx[i] < i + n - k) else {
            return out;
        };
        idx[i] += 1;
        for j in i + 1..k {
            idx[j] = idx[j - 1] + 1;
        }
    }
}
