//! Full-state reconstruction from outcome frequencies: linear inversion with
//! the frame pseudo-inverse, projected least squares (PLS), and weighted
//! least squares constrained to density operators (solved by projected
//! gradient descent).

use std::fmt;
use std::str::FromStr;

use nalgebra::{DMatrix, SymmetricEigen};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{self, c, CMatrix, SiteTensor};
use crate::povm::{
    self, pauli_outcome_distribution, sic_outcome_distribution, FrameSuperoperator, OutcomeDistribution,
    FrameName, PauliShot, PovmKind, SicFrame, SicShot,
};
use crate::qstate::{DensityOperator, PauliString};
use crate::stream::shotfile::PovmLabel;

/// Largest N accepted by [`mle`]; the dense measurement matrix has
/// `4^N` (SIC) or `6^N` (Pauli) rows.
pub const MLE_CAP: usize = 4;

/// Outcome frequencies. SIC: one block of 4^N entries. Pauli: 3^N blocks
/// of 2^N entries, setting-major in lexicographic setting order, each block
/// normalized on its own.
#[derive(Clone, Debug, PartialEq)]
pub struct FrequencyVector {
    pub kind: PovmKind,
    pub n_qubits: usize,
    pub frequencies: Vec<f64>,
    /// Shots behind each block; zero for analytic (exact) frequencies.
    pub shots: Vec<u64>,
}

impl FrequencyVector {
    fn block_len(&self) -> usize {
        match self.kind {
            PovmKind::Sic(_) => 1 << (2 * self.n_qubits),
            PovmKind::Pauli => 1 << self.n_qubits,
        }
    }

    pub fn blocks(&self) -> usize {
        match self.kind {
            PovmKind::Sic(_) => 1,
            PovmKind::Pauli => 3usize.pow(self.n_qubits as u32),
        }
    }

    pub fn new(kind: PovmKind, n_qubits: usize, frequencies: Vec<f64>, shots: Vec<u64>) -> Result<Self> {
        let f = FrequencyVector {
            kind,
            n_qubits,
            frequencies,
            shots,
        };
        let expected = f.blocks() * f.block_len();
        if f.frequencies.len() != expected {
            return Err(Error::DimensionMismatch {
                expected,
                found: f.frequencies.len(),
            });
        }
        if f.shots.len() != f.blocks() {
            return Err(Error::DimensionMismatch {
                expected: f.blocks(),
                found: f.shots.len(),
            });
        }
        if f.frequencies.iter().any(|&x| x < 0.0 || !x.is_finite()) {
            return Err(Error::invalid("frequencies must be finite and non-negative"));
        }
        for block in f.frequencies.chunks(f.block_len()) {
            let s: f64 = block.iter().sum();
            if (s - 1.0).abs() > 1e-12 {
                return Err(Error::invalid(format!("frequency block sums to {s}, expected 1")));
            }
        }
        Ok(f)
    }

    pub fn from_sic_counts(frame: &SicFrame, n_qubits: usize, counts: &[u64]) -> Result<Self> {
        let total: u64 = counts.iter().sum();
        if total == 0 {
            return Err(Error::InsufficientData("no shots".into()));
        }
        let f = counts.iter().map(|&k| k as f64 / total as f64).collect();
        Self::new(PovmKind::Sic(frame.clone()), n_qubits, f, vec![total])
    }

    pub fn from_sic_shots(frame: &SicFrame, shots: &[SicShot]) -> Result<Self> {
        let n = shots
            .first()
            .ok_or_else(|| Error::InsufficientData("no shots".into()))?
            .n_qubits();
        let mut counts = vec![0u64; 1 << (2 * n)];
        for s in shots {
            counts[s.index()] += 1;
        }
        Self::from_sic_counts(frame, n, &counts)
    }

    pub fn from_pauli_shots(shots: &[PauliShot]) -> Result<Self> {
        let n = shots
            .first()
            .ok_or_else(|| Error::InsufficientData("no shots".into()))?
            .bits
            .len();
        let settings = 3usize.pow(n as u32);
        let block = 1usize << n;
        let mut counts = vec![0u64; settings * block];
        let mut totals = vec![0u64; settings];
        for s in shots {
            let si = s.setting_index();
            counts[si * block + s.outcome_index()] += 1;
            totals[si] += 1;
        }
        if let Some(missing) = totals.iter().position(|&t| t == 0) {
            return Err(Error::InsufficientData(format!(
                "setting {} has no shots",
                PauliString::new(povm::setting_from_index(missing, n))
            )));
        }
        let f = counts
            .iter()
            .enumerate()
            .map(|(i, &k)| k as f64 / totals[i / block] as f64)
            .collect();
        Self::new(PovmKind::Pauli, n, f, totals)
    }

    pub fn exact_sic(rho: &DensityOperator, frame: &SicFrame) -> Result<Self> {
        let d = sic_outcome_distribution(rho, frame)?;
        Self::from_distribution(PovmKind::Sic(frame.clone()), &d)
    }

    pub fn exact_pauli(rho: &DensityOperator) -> Result<Self> {
        let n = rho.n_qubits();
        let mut f = Vec::new();
        for s in povm::all_settings(n) {
            f.extend(pauli_outcome_distribution(rho, &PauliString::new(s))?.probabilities);
        }
        let blocks = 3usize.pow(n as u32);
        Self::new(PovmKind::Pauli, n, renormalize_blocks(f, 1 << n), vec![0; blocks])
    }

    fn from_distribution(kind: PovmKind, d: &OutcomeDistribution) -> Result<Self> {
        let f = renormalize_blocks(d.probabilities.clone(), d.probabilities.len());
        Self::new(kind, d.n_qubits, f, vec![0])
    }

    /// Probabilities of the POVM effects: for Pauli data every setting is
    /// drawn with probability `3^{-N}`.
    pub fn effect_probabilities(&self) -> Vec<f64> {
        let w = 1.0 / self.blocks() as f64;
        self.frequencies.iter().map(|f| f * w).collect()
    }

    pub fn total_shots(&self) -> u64 {
        self.shots.iter().sum()
    }
}

fn renormalize_blocks(mut f: Vec<f64>, block: usize) -> Vec<f64> {
    for chunk in f.chunks_mut(block) {
        let s: f64 = chunk.iter().sum();
        chunk.iter_mut().for_each(|x| *x /= s);
    }
    f
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Method {
    #[serde(rename = "lininv")]
    LinInv,
    #[serde(rename = "pls")]
    Pls,
    #[serde(rename = "mle")]
    Mle,
    #[serde(rename = "shadow-mean")]
    ShadowMean,
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Method::LinInv => "lininv",
            Method::Pls => "pls",
            Method::Mle => "mle",
            Method::ShadowMean => "shadow-mean",
        })
    }
}

impl FromStr for Method {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "lininv" => Ok(Method::LinInv),
            "pls" => Ok(Method::Pls),
            "mle" => Ok(Method::Mle),
            "shadow-mean" => Ok(Method::ShadowMean),
            _ => Err(Error::Unknown {
                kind: "method",
                name: s.to_string(),
            }),
        }
    }
}

/// On-disk form of a [`FrequencyVector`].
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FrequencyFile {
    pub n_qubits: usize,
    pub povm: PovmLabel,
    pub frame: FrameName,
    pub frequencies: Vec<f64>,
    pub shots: Vec<u64>,
}

impl FrequencyFile {
    pub fn from_vector(f: &FrequencyVector) -> Self {
        let (povm, frame) = match &f.kind {
            PovmKind::Sic(fr) => (PovmLabel::Sic, fr.name()),
            PovmKind::Pauli => (PovmLabel::Pauli, FrameName::Standard),
        };
        FrequencyFile {
            n_qubits: f.n_qubits,
            povm,
            frame,
            frequencies: f.frequencies.clone(),
            shots: f.shots.clone(),
        }
    }

    pub fn to_vector(&self) -> Result<FrequencyVector> {
        let kind = match self.povm {
            PovmLabel::Sic => PovmKind::Sic(SicFrame::by_name(self.frame)?),
            PovmLabel::Pauli => PovmKind::Pauli,
        };
        FrequencyVector::new(kind, self.n_qubits, self.frequencies.clone(), self.shots.clone())
    }

    pub fn save(&self, path: impl AsRef<std::path::Path>) -> Result<()> {
        std::fs::write(path, serde_json::to_string(self)?)?;
        Ok(())
    }

    pub fn load(path: impl AsRef<std::path::Path>) -> Result<Self> {
        Ok(serde_json::from_str(&std::fs::read_to_string(path)?)?)
    }
}

#[derive(Clone, Debug)]
pub struct ReconstructionResult {
    /// Hermitian; PSD only for PLS and MLE.
    pub estimate: CMatrix,
    pub method: Method,
    pub iterations: usize,
    /// Unweighted least-squares residual `||A x - q||` against the effect probabilities.
    pub residual: f64,
    pub converged: bool,
    /// Objective value after each accepted MLE iterate (index 0 is the start).
    pub objective_history: Vec<f64>,
}

impl ReconstructionResult {
    pub fn density(&self) -> Result<DensityOperator> {
        DensityOperator::new(self.estimate.clone())
    }

    pub fn metadata(&self, shots: u64) -> serde_json::Value {
        serde_json::json!({
            "method": self.method.to_string(),
            "shots": shots,
            "residual": self.residual,
            "iterations": self.iterations,
            "converged": self.converged,
        })
    }
}

/// Per-site map from one block of outcomes to normalized Pauli coordinates
/// of the summed effects, `A[w][j] = coords(E_j)[w]`.
fn site_effect_matrix(effects: &[[f64; 4]]) -> CMatrix {
    CMatrix::from_fn(4, effects.len(), |w, j| c(effects[j][w], 0.0))
}

/// `sum_j q_j |E_j>>` in normalized Pauli coordinates.
fn weighted_effect_sum(freqs: &FrequencyVector, q: &[f64]) -> Vec<f64> {
    let n = freqs.n_qubits;
    let effects = povm::site_effect_coords(&freqs.kind);
    match &freqs.kind {
        PovmKind::Sic(_) => {
            let mut t = SiteTensor {
                dims: vec![4; n],
                data: q.iter().map(|&x| c(x, 0.0)).collect(),
            };
            t.apply_all(&site_effect_matrix(&effects));
            t.data.iter().map(|z| z.re).collect()
        }
        PovmKind::Pauli => {
            let block = 1usize << n;
            let maps: Vec<CMatrix> = (0..3).map(|l| site_effect_matrix(&effects[2 * l..2 * l + 2])).collect();
            let mut out = vec![0.0; 1 << (2 * n)];
            for (s, chunk) in q.chunks(block).enumerate() {
                let setting = povm::setting_from_index(s, n);
                let mut t = SiteTensor {
                    dims: vec![2; n],
                    data: chunk.iter().map(|&x| c(x, 0.0)).collect(),
                };
                for (axis, l) in setting.iter().enumerate() {
                    t.apply_axis(axis, &maps[l.index() - 1]);
                }
                for (o, z) in out.iter_mut().zip(&t.data) {
                    *o += z.re;
                }
            }
            out
        }
    }
}

/// Dense measurement matrix `A` with rows the effect coordinates, so that
/// `A x` are the effect probabilities of the operator with coordinates `x`.
pub fn measurement_matrix(kind: &PovmKind, n: usize) -> DMatrix<f64> {
    let effects = povm::site_effect_coords(kind);
    let rows = |es: &[[f64; 4]]| DMatrix::from_fn(es.len(), 4, |j, w| es[j][w]);
    match kind {
        PovmKind::Sic(_) => {
            let site = rows(&effects);
            (0..n).fold(DMatrix::from_element(1, 1, 1.0), |acc, _| acc.kronecker(&site))
        }
        PovmKind::Pauli => {
            let sites: Vec<DMatrix<f64>> = (0..3).map(|l| rows(&effects[2 * l..2 * l + 2])).collect();
            let blocks: Vec<DMatrix<f64>> = povm::all_settings(n)
                .iter()
                .map(|s| {
                    s.iter()
                        .fold(DMatrix::from_element(1, 1, 1.0), |acc, l| acc.kronecker(&sites[l.index() - 1]))
                })
                .collect();
            let block_rows = 1usize << n;
            let mut out = DMatrix::zeros(blocks.len() * block_rows, 1 << (2 * n));
            for (b, m) in blocks.iter().enumerate() {
                out.rows_mut(b * block_rows, block_rows).copy_from(m);
            }
            out
        }
    }
}

fn residual_norm(freqs: &FrequencyVector, x: &[f64]) -> f64 {
    if freqs.n_qubits > MLE_CAP {
        return f64::NAN;
    }
    let a = measurement_matrix(&freqs.kind, freqs.n_qubits);
    let q = freqs.effect_probabilities();
    let ax = &a * nalgebra::DVector::from_column_slice(x);
    ax.iter().zip(&q).map(|(p, f)| (p - f).powi(2)).sum::<f64>().sqrt()
}

/// `rho = S^+ sum_j q_j |E_j>>` with `q_j` the effect probabilities.
pub fn lininv(freqs: &FrequencyVector) -> Result<ReconstructionResult> {
    let n = freqs.n_qubits;
    let s = FrameSuperoperator::new(&freqs.kind, n)?;
    let rank = s.rank();
    let dim = 1usize << (2 * n);
    if rank < dim {
        return Err(Error::RankDeficient { rank, dim });
    }
    let x = lininv_coords(freqs, &s);
    Ok(ReconstructionResult {
        estimate: linalg::operator_from_coords(&x, n),
        method: Method::LinInv,
        iterations: 0,
        residual: residual_norm(freqs, &x),
        converged: true,
        objective_history: Vec::new(),
    })
}

fn lininv_coords(freqs: &FrequencyVector, s: &FrameSuperoperator) -> Vec<f64> {
    let b = weighted_effect_sum(freqs, &freqs.effect_probabilities());
    s.apply_pinv(&b)
}

/// Largest N accepted by [`lininv_dense`].
pub const DENSE_LININV_CAP: usize = 6;

/// Linear inversion through the dense normal equations `A^T A x = A^T q`.
/// Same estimate as [`lininv`], at the cost of materializing `A`.
pub fn lininv_dense(freqs: &FrequencyVector) -> Result<ReconstructionResult> {
    let n = freqs.n_qubits;
    let cap = match freqs.kind {
        PovmKind::Sic(_) => DENSE_LININV_CAP,
        PovmKind::Pauli => DENSE_LININV_CAP - 1,
    };
    if n > cap {
        return Err(Error::CapExceeded {
            what: "dense linear inversion",
            cap,
            requested: n,
        });
    }
    let a = measurement_matrix(&freqs.kind, n);
    let q = nalgebra::DVector::from_vec(freqs.effect_probabilities());
    let dim = a.ncols();
    let chol = (a.transpose() * &a).cholesky().ok_or(Error::RankDeficient { rank: 0, dim })?;
    let x: Vec<f64> = chol.solve(&a.tr_mul(&q)).iter().copied().collect();
    Ok(ReconstructionResult {
        estimate: linalg::operator_from_coords(&x, n),
        method: Method::LinInv,
        iterations: 0,
        residual: residual_norm(freqs, &x),
        converged: true,
        objective_history: Vec::new(),
    })
}

/// Mean classical shadow computed from SIC frequencies, `sum_j f_j sigma(j)`.
pub fn shadow_mean(freqs: &FrequencyVector) -> Result<ReconstructionResult> {
    let PovmKind::Sic(frame) = &freqs.kind else {
        return Err(Error::invalid("shadow-mean needs SIC data"));
    };
    let n = freqs.n_qubits;
    let table = crate::shadows::ShadowTable::new(frame);
    let map = CMatrix::from_fn(4, 4, |w, j| c(table.site_coords(j as u8)[w], 0.0));
    let mut t = SiteTensor {
        dims: vec![4; n],
        data: freqs.frequencies.iter().map(|&x| c(x, 0.0)).collect(),
    };
    t.apply_all(&map);
    let x: Vec<f64> = t.data.iter().map(|z| z.re).collect();
    Ok(ReconstructionResult {
        estimate: linalg::operator_from_coords(&x, n),
        method: Method::ShadowMean,
        iterations: 0,
        residual: residual_norm(freqs, &x),
        converged: true,
        objective_history: Vec::new(),
    })
}

/// Euclidean projection of `v` onto the probability simplex.
pub fn project_simplex(v: &[f64]) -> Vec<f64> {
    let mut u = v.to_vec();
    u.sort_by(|a, b| b.total_cmp(a));
    let mut cum = 0.0;
    let mut theta = 0.0;
    for (j, &uj) in u.iter().enumerate() {
        cum += uj;
        let t = (cum - 1.0) / (j + 1) as f64;
        if uj - t > 0.0 {
            theta = t;
        }
    }
    v.iter().map(|&x| (x - theta).max(0.0)).collect()
}

/// Frobenius-nearest density operator: eigenvalues projected onto the simplex.
pub fn pls(a: &CMatrix) -> Result<DensityOperator> {
    let h = linalg::hermiticity_residual(a);
    if h > 1e-8 {
        return Err(Error::invalid(format!("PLS input is not Hermitian (residual {h:.3e})")));
    }
    let (vals, vecs) = linalg::eigh(a);
    let proj = project_simplex(&vals);
    DensityOperator::new(linalg::from_eigen(&proj, &vecs))
}

pub fn pls_result(freqs: &FrequencyVector) -> Result<ReconstructionResult> {
    let lin = lininv(freqs)?;
    let rho = pls(&lin.estimate)?;
    let x = linalg::pauli_coords(rho.matrix(), freqs.n_qubits);
    Ok(ReconstructionResult {
        residual: residual_norm(freqs, &x),
        estimate: rho.into_matrix(),
        method: Method::Pls,
        iterations: 0,
        converged: true,
        objective_history: Vec::new(),
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Default)]
pub enum Weights {
    #[default]
    Identity,
    /// `W_jj = sqrt(N_j / max(f_j (1 - f_j), 1e-4))` per outcome.
    Multinomial,
}

#[derive(Clone, Copy, Debug)]
pub struct MleOptions {
    pub weights: Weights,
    pub max_iter: usize,
    /// Tolerance on the norm of the projected-gradient mapping.
    pub tol: f64,
}

impl Default for MleOptions {
    fn default() -> Self {
        MleOptions {
            weights: Weights::Identity,
            max_iter: 5000,
            tol: 1e-8,
        }
    }
}

fn diag_weights(freqs: &FrequencyVector, w: Weights) -> Vec<f64> {
    let block = freqs.frequencies.len() / freqs.blocks();
    freqs
        .frequencies
        .iter()
        .enumerate()
        .map(|(j, &f)| match w {
            Weights::Identity => 1.0,
            Weights::Multinomial => {
                let nj = freqs.shots[j / block].max(1) as f64;
                (nj / (f * (1.0 - f)).max(1e-4)).sqrt()
            }
        })
        .collect()
}

/// Weighted least-squares objective `||W (A x - q)||^2` and its gradient.
struct Objective {
    a: DMatrix<f64>,
    w2: Vec<f64>,
    q: nalgebra::DVector<f64>,
}

impl Objective {
    fn value_grad(&self, x: &[f64]) -> (f64, Vec<f64>) {
        let xv = nalgebra::DVector::from_column_slice(x);
        let mut r = &self.a * xv - &self.q;
        let value: f64 = r.iter().zip(&self.w2).map(|(ri, w)| w * ri * ri).sum();
        for (ri, w) in r.iter_mut().zip(&self.w2) {
            *ri *= 2.0 * w;
        }
        let g = self.a.tr_mul(&r);
        (value, g.iter().copied().collect())
    }

    fn value(&self, x: &[f64]) -> f64 {
        let xv = nalgebra::DVector::from_column_slice(x);
        let r = &self.a * xv - &self.q;
        r.iter().zip(&self.w2).map(|(ri, w)| w * ri * ri).sum()
    }

    fn lipschitz(&self) -> f64 {
        let mut aw = self.a.clone();
        for (i, w) in self.w2.iter().enumerate() {
            aw.row_mut(i).scale_mut(*w);
        }
        let h = self.a.tr_mul(&aw);
        let eig = SymmetricEigen::new(h);
        2.0 * eig.eigenvalues.iter().cloned().fold(0.0, f64::max)
    }
}

fn project_coords(x: &[f64], n: usize) -> Result<Vec<f64>> {
    let m = linalg::hermitize(&linalg::operator_from_coords(x, n));
    let rho = pls(&m)?;
    Ok(linalg::pauli_coords(rho.matrix(), n))
}

/// Minimizes `||W (A rho - q)||^2` over density operators by projected
/// gradient descent with backtracking, starting from `pls(lininv(q))`.
pub fn mle(freqs: &FrequencyVector, opts: &MleOptions) -> Result<ReconstructionResult> {
    let n = freqs.n_qubits;
    if n > MLE_CAP {
        return Err(Error::CapExceeded {
            what: "MLE reconstruction",
            cap: MLE_CAP,
            requested: n,
        });
    }
    let start = pls_result(freqs)?;
    let w = diag_weights(freqs, opts.weights);
    let obj = Objective {
        a: measurement_matrix(&freqs.kind, n),
        w2: w.iter().map(|v| v * v).collect(),
        q: nalgebra::DVector::from_vec(freqs.effect_probabilities()),
    };
    let mut x = linalg::pauli_coords(&start.estimate, n);
    let (mut fx, mut g) = obj.value_grad(&x);
    let mut history = vec![fx];
    let lip = obj.lipschitz();
    let mut step = if lip > 0.0 { 1.0 / lip } else { 1.0 };
    let mut converged = false;
    let mut iterations = 0;
    while iterations < opts.max_iter {
        let mut accepted = None;
        for _ in 0..60 {
            let trial: Vec<f64> = x.iter().zip(&g).map(|(xi, gi)| xi - step * gi).collect();
            let xp = project_coords(&trial, n)?;
            let d: Vec<f64> = xp.iter().zip(&x).map(|(a, b)| a - b).collect();
            let fp = obj.value(&xp);
            let bound = fx + linalg::dot(&g, &d) + linalg::norm_sqr(&d) / (2.0 * step);
            if fp <= bound + 1e-15 * fx.abs().max(1e-300) && fp <= fx {
                accepted = Some((xp, d, fp));
                break;
            }
            step *= 0.5;
        }
        iterations += 1;
        let Some((xp, d, fp)) = accepted else {
            break;
        };
        let gmap = linalg::norm_sqr(&d).sqrt() / step;
        x = xp;
        fx = fp;
        history.push(fx);
        if gmap < opts.tol {
            converged = true;
            break;
        }
        g = obj.value_grad(&x).1;
    }
    Ok(ReconstructionResult {
        estimate: DensityOperator::new(linalg::hermitize(&linalg::operator_from_coords(&x, n)))
            .map(DensityOperator::into_matrix)
            .or_else(|_| pls(&linalg::operator_from_coords(&x, n)).map(DensityOperator::into_matrix))?,
        method: Method::Mle,
        iterations,
        residual: residual_norm(freqs, &x),
        converged,
        objective_history: history,
    })
}

pub fn reconstruct(freqs: &FrequencyVector, method: Method, opts: &MleOptions) -> Result<ReconstructionResult> {
    match method {
        Method::LinInv => lininv(freqs),
        Method::Pls => pls_result(freqs),
        Method::Mle => mle(freqs, opts),
        Method::ShadowMean => shadow_mean(freqs),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::qstate::random;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn simplex_projection_by_hand() {
        assert_eq!(project_simplex(&[1.2, -0.2]), vec![1.0, 0.0]);
        let p = project_simplex(&[0.5, 0.5, 0.5]);
        assert!(p.iter().all(|x| (x - 1.0 / 3.0).abs() < 1e-15));
    }

    #[test]
    fn pls_of_diag() {
        let a = CMatrix::from_fn(2, 2, |i, j| match (i, j) {
            (0, 0) => c(1.2, 0.0),
            (1, 1) => c(-0.2, 0.0),
            _ => linalg::ZERO,
        });
        let r = pls(&a).unwrap();
        assert!((r.matrix()[(0, 0)].re - 1.0).abs() < 1e-12);
        assert!(r.matrix()[(1, 1)].norm() < 1e-12);
    }

    #[test]
    fn exact_lininv_sic_and_pauli() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for n in 1..=3 {
            let rho = random::random_density(n, 2, &mut rng);
            for freqs in [
                FrequencyVector::exact_sic(&rho, &SicFrame::standard()).unwrap(),
                FrequencyVector::exact_pauli(&rho).unwrap(),
            ] {
                let r = lininv(&freqs).unwrap();
                assert!(linalg::max_abs_diff(&r.estimate, rho.matrix()) < 1e-10);
            }
        }
    }

    #[test]
    fn measurement_matrix_matches_superoperator() {
        for kind in [PovmKind::Sic(SicFrame::rotated()), PovmKind::Pauli] {
            let a = measurement_matrix(&kind, 2);
            let s = FrameSuperoperator::new(&kind, 2).unwrap().dense();
            assert!((a.transpose() * &a - s).abs().max() < 1e-14);
        }
    }

    #[test]
    fn mle_cap_and_exact_recovery() {
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        let rho = random::random_density(2, 1, &mut rng);
        let f = FrequencyVector::exact_sic(&rho, &SicFrame::standard()).unwrap();
        let r = mle(&f, &MleOptions::default()).unwrap();
        assert!(crate::qstate::trace_distance(&r.estimate, rho.matrix()) < 1e-4);
        let big = DensityOperator::maximally_mixed(5);
        let fb = FrequencyVector::exact_sic(&big, &SicFrame::standard()).unwrap();
        assert!(matches!(mle(&fb, &MleOptions::default()), Err(Error::CapExceeded { .. })));
    }

    #[test]
    fn method_names_round_trip() {
        for m in [Method::LinInv, Method::Pls, Method::Mle, Method::ShadowMean] {
            assert_eq!(m.to_string().parse::<Method>().unwrap(), m);
        }
        assert!("nope".parse::<Method>().is_err());
    }
}
