//! Single-qubit SIC frames, Pauli settings, exact outcome distributions and
//! shot sampling.
//!
//! SIC outcomes are base-4 digits `0..=3` per qubit (the four frame kets in
//! order), so an N-qubit outcome is a digit string whose integer value, read
//! with qubit 0 most significant, indexes the 4^N outcome distribution.
//! Pauli outcomes are a setting over {X, Y, Z} plus one bit per qubit, bit 0
//! meaning the +1 eigenvalue.

use std::fmt;
use std::str::FromStr;

use nalgebra::{DMatrix, Matrix2, Matrix4, SymmetricEigen, Vector2};
use rand::seq::SliceRandom;
use rand::Rng;
use rand_distr::{Binomial, Distribution};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{self, c, CMatrix, CVector, SiteTensor, C64};
use crate::qstate::{DensityOperator, PauliLetter, PauliString, PureState};

/// Default cap on N for materializing a 4^N outcome vector.
pub const DEFAULT_DISTRIBUTION_CAP: usize = 10;
pub const SIC_SUPEROP_CAP: usize = 6;
pub const PAULI_SUPEROP_CAP: usize = 5;
/// Relative eigenvalue cutoff of the frame pseudo-inverse.
pub const PINV_CUTOFF: f64 = 1e-10;

const FRAME_TOL: f64 = 1e-9;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum FrameName {
    Standard,
    Rotated,
    Custom,
}

impl fmt::Display for FrameName {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            FrameName::Standard => "standard",
            FrameName::Rotated => "rotated",
            FrameName::Custom => "custom",
        })
    }
}

impl FromStr for FrameName {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "standard" => Ok(FrameName::Standard),
            "rotated" => Ok(FrameName::Rotated),
            "custom" => Ok(FrameName::Custom),
            _ => Err(Error::Unknown {
                kind: "frame",
                name: s.to_string(),
            }),
        }
    }
}

/// Four single-qubit kets forming a SIC; effects are `|psi_i><psi_i| / 2`.
#[derive(Clone, Debug, PartialEq)]
pub struct SicFrame {
    name: FrameName,
    kets: [Vector2<C64>; 4],
}

/// Residuals of the frame identities.
#[derive(Clone, Copy, Debug)]
pub struct FrameResiduals {
    pub one_design: f64,
    pub two_design: f64,
    pub overlap: f64,
}

impl FrameResiduals {
    pub fn max(&self) -> f64 {
        self.one_design.max(self.two_design).max(self.overlap)
    }
}

impl SicFrame {
    /// `psi_1 = |0>`, `psi_k = |0>/sqrt(3) + sqrt(2/3) e^{2 pi i (k-2)/3} |1>`.
    pub fn standard() -> Self {
        let s3 = 1.0 / 3f64.sqrt();
        let t = (2.0f64 / 3.0).sqrt();
        let mut kets = [Vector2::new(linalg::ONE, linalg::ZERO); 4];
        for (k, ket) in kets.iter_mut().enumerate().skip(1) {
            let phase = C64::from_polar(t, 2.0 * std::f64::consts::PI * (k as f64 - 1.0) / 3.0);
            *ket = Vector2::new(c(s3, 0.0), phase);
        }
        SicFrame {
            name: FrameName::Standard,
            kets,
        }
    }

    /// Bloch vectors `(1,1,1), (1,-1,-1), (-1,1,-1), (-1,-1,1)` over `sqrt(3)`.
    pub fn rotated() -> Self {
        let s = 1.0 / 3f64.sqrt();
        let blochs = [
            [s, s, s],
            [s, -s, -s],
            [-s, s, -s],
            [-s, -s, s],
        ];
        SicFrame {
            name: FrameName::Rotated,
            kets: blochs.map(ket_from_bloch),
        }
    }

    /// Normalizes the kets and checks the design identities.
    pub fn custom(kets: [Vector2<C64>; 4]) -> Result<Self> {
        let mut normalized = kets;
        for k in normalized.iter_mut() {
            let n = k.norm();
            if n == 0.0 {
                return Err(Error::InvalidState("zero frame ket".into()));
            }
            *k /= c(n, 0.0);
        }
        let frame = SicFrame {
            name: FrameName::Custom,
            kets: normalized,
        };
        let r = frame.residuals();
        if r.max() > FRAME_TOL {
            return Err(Error::InvalidState(format!(
                "kets do not form a SIC (design residual {:.3e})",
                r.max()
            )));
        }
        Ok(frame)
    }

    pub fn by_name(name: FrameName) -> Result<Self> {
        match name {
            FrameName::Standard => Ok(Self::standard()),
            FrameName::Rotated => Ok(Self::rotated()),
            FrameName::Custom => Err(Error::invalid("custom frames are built from kets")),
        }
    }

    pub fn name(&self) -> FrameName {
        self.name
    }

    pub fn kets(&self) -> &[Vector2<C64>; 4] {
        &self.kets
    }

    pub fn projector(&self, i: usize) -> Matrix2<C64> {
        let k = &self.kets[i];
        k * k.adjoint()
    }

    pub fn effect(&self, i: usize) -> Matrix2<C64> {
        self.projector(i).scale(0.5)
    }

    /// Single-site shadow factor `3 |psi_i><psi_i| - I`.
    pub fn shadow_factor(&self, i: usize) -> Matrix2<C64> {
        self.projector(i).scale(3.0) - Matrix2::identity()
    }

    pub fn bloch(&self, i: usize) -> [f64; 3] {
        let p = linalg::pauli_coords_2x2(&self.projector(i));
        let s = 2f64.sqrt();
        [p[1] * s, p[2] * s, p[3] * s]
    }

    pub fn residuals(&self) -> FrameResiduals {
        let mut first = Matrix2::<C64>::zeros();
        let mut second = CMatrix::zeros(4, 4);
        for i in 0..4 {
            let p = linalg::from_matrix2(&self.projector(i));
            first += self.projector(i).scale(0.25);
            second += linalg::kron(&p, &p).scale(0.25);
        }
        let half = Matrix2::<C64>::identity().scale(0.5);
        let one_design = (first - half).iter().map(|z| z.norm()).fold(0.0, f64::max);
        let target = (linalg::identity(4) + swap_operator()).scale(1.0 / 6.0);
        let two_design = linalg::max_abs_diff(&second, &target);
        let mut overlap: f64 = 0.0;
        for i in 0..4 {
            for j in 0..4 {
                if i != j {
                    let o = self.kets[i].dotc(&self.kets[j]).norm_sqr();
                    overlap = overlap.max((o - 1.0 / 3.0).abs());
                }
            }
        }
        FrameResiduals {
            one_design,
            two_design,
            overlap,
        }
    }

    pub fn naimark(&self) -> NaimarkUnitary {
        NaimarkUnitary::for_frame(self)
    }

    /// Map from pair digits of a single-qubit operator to the four outcome
    /// probabilities: `K[i][2a+b] = E_i[b][a]`, so `K vec(rho) = tr(E_i rho)`.
    pub(crate) fn outcome_map(&self) -> CMatrix {
        CMatrix::from_fn(4, 4, |i, x| self.effect(i)[(x % 2, x / 2)])
    }
}

fn ket_from_bloch(r: [f64; 3]) -> Vector2<C64> {
    let theta = r[2].clamp(-1.0, 1.0).acos();
    let phi = r[1].atan2(r[0]);
    Vector2::new(
        c((theta / 2.0).cos(), 0.0),
        C64::from_polar((theta / 2.0).sin(), phi),
    )
}

fn swap_operator() -> CMatrix {
    CMatrix::from_fn(4, 4, |i, j| {
        let (a, b) = (i / 2, i % 2);
        if j == 2 * b + a {
            linalg::ONE
        } else {
            linalg::ZERO
        }
    })
}

/// Unitary embedding a qubit into a ququart so that a computational-basis
/// measurement of the ququart realizes the frame. Row `i` of the first two
/// columns is `psi_i^T / sqrt(2)`.
#[derive(Clone, Debug, PartialEq)]
pub struct NaimarkUnitary {
    pub matrix: Matrix4<C64>,
}

impl NaimarkUnitary {
    pub fn for_frame(frame: &SicFrame) -> Self {
        if frame.name == FrameName::Standard {
            return Self::standard();
        }
        let h = std::f64::consts::FRAC_1_SQRT_2;
        let mut cols: Vec<CVector> = (0..2)
            .map(|col| CVector::from_fn(4, |i, _| frame.kets[i][col] * h))
            .collect();
        for e in 0..4 {
            if cols.len() == 4 {
                break;
            }
            let mut v = CVector::from_fn(4, |i, _| if i == e { linalg::ONE } else { linalg::ZERO });
            for u in &cols {
                let p = u.dotc(&v);
                v -= u * p;
            }
            let n = v.norm();
            if n > 1e-8 {
                cols.push(v.unscale(n));
            }
        }
        NaimarkUnitary {
            matrix: Matrix4::from_fn(|i, j| cols[j][i]),
        }
    }

    pub fn standard() -> Self {
        let r2 = std::f64::consts::FRAC_1_SQRT_2;
        let r3 = 1.0 / 3f64.sqrt();
        let r6 = 1.0 / 6f64.sqrt();
        let w = |k: f64| C64::from_polar(r3, 2.0 * std::f64::consts::PI * k / 3.0);
        let (z, re) = (linalg::ZERO, |x: f64| c(x, 0.0));
        #[rustfmt::skip]
        let m = Matrix4::new(
            re(r2), z,      z,      re(r2),
            re(r6), w(0.0), w(0.0), re(-r6),
            re(r6), w(1.0), w(2.0), re(-r6),
            re(r6), w(2.0), w(1.0), re(-r6),
        );
        NaimarkUnitary { matrix: m }
    }

    /// Largest entry of `M^dagger M - I`.
    pub fn unitarity_residual(&self) -> f64 {
        (self.matrix.adjoint() * self.matrix - Matrix4::identity())
            .iter()
            .map(|z| z.norm())
            .fold(0.0, f64::max)
    }

    /// Effects realized by measuring `M (|phi>, 0, 0)` in the computational basis.
    /// These are the effects of the complex-conjugate frame, which is again a SIC.
    pub fn realized_effect(&self, i: usize) -> Matrix2<C64> {
        let row = Vector2::new(self.matrix[(i, 0)], self.matrix[(i, 1)]);
        row.conjugate() * row.transpose()
    }
}

/// Which measurement produced a data set.
#[derive(Clone, Debug, PartialEq)]
pub enum PovmKind {
    Sic(SicFrame),
    Pauli,
}

impl PovmKind {
    pub fn label(&self) -> &'static str {
        match self {
            PovmKind::Sic(_) => "sic",
            PovmKind::Pauli => "pauli",
        }
    }

    pub fn superop_cap(&self) -> usize {
        match self {
            PovmKind::Sic(_) => SIC_SUPEROP_CAP,
            PovmKind::Pauli => PAULI_SUPEROP_CAP,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct SicShot {
    pub digits: Vec<u8>,
}

impl SicShot {
    pub fn new(digits: Vec<u8>) -> Result<Self> {
        if let Some(d) = digits.iter().find(|&&d| d > 3) {
            return Err(Error::invalid(format!("SIC digit {d} outside 0..=3")));
        }
        Ok(SicShot { digits })
    }

    pub fn from_index(mut index: usize, n: usize) -> Self {
        let mut digits = vec![0u8; n];
        for k in (0..n).rev() {
            digits[k] = (index % 4) as u8;
            index /= 4;
        }
        SicShot { digits }
    }

    pub fn index(&self) -> usize {
        self.digits.iter().fold(0, |acc, &d| acc * 4 + d as usize)
    }

    pub fn n_qubits(&self) -> usize {
        self.digits.len()
    }
}

impl fmt::Display for SicShot {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for d in &self.digits {
            write!(f, "{d}")?;
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct PauliShot {
    pub setting: Vec<PauliLetter>,
    pub bits: Vec<u8>,
}

impl PauliShot {
    pub fn new(setting: Vec<PauliLetter>, bits: Vec<u8>) -> Result<Self> {
        if setting.len() != bits.len() {
            return Err(Error::DimensionMismatch {
                expected: setting.len(),
                found: bits.len(),
            });
        }
        if setting.contains(&PauliLetter::I) {
            return Err(Error::invalid("measurement settings cannot contain I"));
        }
        if let Some(b) = bits.iter().find(|&&b| b > 1) {
            return Err(Error::invalid(format!("outcome bit {b} is not 0 or 1")));
        }
        Ok(PauliShot { setting, bits })
    }

    pub fn setting_index(&self) -> usize {
        setting_index(&self.setting)
    }

    pub fn outcome_index(&self) -> usize {
        self.bits.iter().fold(0, |acc, &b| acc * 2 + b as usize)
    }
}

impl fmt::Display for PauliShot {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for l in &self.setting {
            write!(f, "{}", l.as_char())?;
        }
        f.write_str(" ")?;
        for b in &self.bits {
            write!(f, "{b}")?;
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub enum ShotRecord {
    Sic(SicShot),
    Pauli(PauliShot),
}

impl ShotRecord {
    pub fn n_qubits(&self) -> usize {
        match self {
            ShotRecord::Sic(s) => s.digits.len(),
            ShotRecord::Pauli(p) => p.bits.len(),
        }
    }

    pub fn as_sic(&self) -> Option<&SicShot> {
        match self {
            ShotRecord::Sic(s) => Some(s),
            ShotRecord::Pauli(_) => None,
        }
    }
}

impl fmt::Display for ShotRecord {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ShotRecord::Sic(s) => s.fmt(f),
            ShotRecord::Pauli(p) => p.fmt(f),
        }
    }
}

/// Index of an {X,Y,Z} setting in base 3, qubit 0 most significant.
pub fn setting_index(setting: &[PauliLetter]) -> usize {
    setting
        .iter()
        .fold(0, |acc, l| acc * 3 + (l.index() - 1))
}

pub fn setting_from_index(mut index: usize, n: usize) -> Vec<PauliLetter> {
    let mut out = vec![PauliLetter::X; n];
    for k in (0..n).rev() {
        out[k] = PauliLetter::MEASURED[index % 3];
        index /= 3;
    }
    out
}

/// All 3^N settings in lexicographic (X < Y < Z) order.
pub fn all_settings(n: usize) -> Vec<Vec<PauliLetter>> {
    (0..3usize.pow(n as u32))
        .map(|i| setting_from_index(i, n))
        .collect()
}

/// Equal shots per setting; the remainder goes to the first settings.
pub fn allocate_pauli_shots(total: u64, n: usize) -> Vec<u64> {
    let s = 3u64.pow(n as u32);
    (0..s)
        .map(|i| total / s + u64::from(i < total % s))
        .collect()
}

/// Eigenvector of a Pauli letter for outcome bit `b` (0 is the +1 eigenvalue).
pub fn pauli_eigenvector(letter: PauliLetter, b: u8) -> Vector2<C64> {
    let h = std::f64::consts::FRAC_1_SQRT_2;
    let sign = if b == 0 { 1.0 } else { -1.0 };
    match letter {
        PauliLetter::Z => {
            if b == 0 {
                Vector2::new(linalg::ONE, linalg::ZERO)
            } else {
                Vector2::new(linalg::ZERO, linalg::ONE)
            }
        }
        PauliLetter::X => Vector2::new(c(h, 0.0), c(sign * h, 0.0)),
        PauliLetter::Y => Vector2::new(c(h, 0.0), c(0.0, sign * h)),
        PauliLetter::I => panic!("I is not a measurement setting"),
    }
}

pub fn pauli_projector(letter: PauliLetter, b: u8) -> Matrix2<C64> {
    let v = pauli_eigenvector(letter, b);
    v * v.adjoint()
}

/// Exact outcome probabilities.
#[derive(Clone, Debug, PartialEq)]
pub struct OutcomeDistribution {
    pub n_qubits: usize,
    pub probabilities: Vec<f64>,
}

impl OutcomeDistribution {
    /// Clamps entries in `[-1e-14, 0)` to zero and checks normalization.
    pub fn new(n_qubits: usize, mut probabilities: Vec<f64>) -> Result<Self> {
        for p in probabilities.iter_mut() {
            if *p < -1e-14 || !p.is_finite() {
                return Err(Error::InvalidState(format!("negative probability {p:.3e}")));
            }
            if *p < 0.0 {
                *p = 0.0;
            }
        }
        let total: f64 = probabilities.iter().sum();
        if (total - 1.0).abs() > 1e-10 {
            return Err(Error::InvalidState(format!(
                "probabilities sum to {total}, expected 1"
            )));
        }
        Ok(OutcomeDistribution {
            n_qubits,
            probabilities,
        })
    }

    pub fn len(&self) -> usize {
        self.probabilities.len()
    }

    pub fn is_empty(&self) -> bool {
        self.probabilities.is_empty()
    }

    /// Multinomial counts by sequential conditional binomials.
    pub fn sample_counts<R: Rng + ?Sized>(&self, m: u64, rng: &mut R) -> Vec<u64> {
        let mut counts = vec![0u64; self.probabilities.len()];
        let mut left = m;
        let mut mass = 1.0f64;
        for (i, &p) in self.probabilities.iter().enumerate() {
            if left == 0 {
                break;
            }
            if i + 1 == self.probabilities.len() || mass <= p {
                counts[i] = left;
                break;
            }
            let q = (p / mass).clamp(0.0, 1.0);
            let k = if q == 0.0 {
                0
            } else {
                Binomial::new(left, q).expect("valid binomial").sample(rng)
            };
            counts[i] = k;
            left -= k;
            mass -= p;
        }
        counts
    }

    /// Multinomial counts expanded to a uniformly shuffled outcome sequence.
    pub fn sample_indices<R: Rng + ?Sized>(&self, m: u64, rng: &mut R) -> Vec<usize> {
        let counts = self.sample_counts(m, rng);
        let mut out = Vec::with_capacity(m as usize);
        for (i, &k) in counts.iter().enumerate() {
            out.extend(std::iter::repeat_n(i, k as usize));
        }
        out.shuffle(rng);
        out
    }
}

/// `Pr[i] = 2^{-N} <psi_i1 ... psi_iN| rho |psi_i1 ... psi_iN>`, capped at
/// [`DEFAULT_DISTRIBUTION_CAP`] qubits.
pub fn sic_outcome_distribution(
    rho: &DensityOperator,
    frame: &SicFrame,
) -> Result<OutcomeDistribution> {
    sic_outcome_distribution_capped(rho, frame, DEFAULT_DISTRIBUTION_CAP)
}

pub fn sic_outcome_distribution_capped(
    rho: &DensityOperator,
    frame: &SicFrame,
    cap: usize,
) -> Result<OutcomeDistribution> {
    let n = rho.n_qubits();
    if n > cap {
        return Err(Error::CapExceeded {
            what: "SIC outcome enumeration",
            cap,
            requested: n,
        });
    }
    let mut t = SiteTensor::from_operator(rho.matrix(), n);
    t.apply_all(&frame.outcome_map());
    OutcomeDistribution::new(n, t.data.iter().map(|z| z.re).collect())
}

/// Projective measurement of every qubit in the eigenbasis of its letter.
pub fn pauli_outcome_distribution(
    rho: &DensityOperator,
    setting: &PauliString,
) -> Result<OutcomeDistribution> {
    let n = rho.n_qubits();
    if setting.len() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            found: setting.len(),
        });
    }
    if setting.letters.contains(&PauliLetter::I) {
        return Err(Error::invalid("measurement settings cannot contain I"));
    }
    let mut t = SiteTensor::from_operator(rho.matrix(), n);
    for (axis, &l) in setting.letters.iter().enumerate() {
        t.apply_axis(axis, &pauli_outcome_map(l));
    }
    OutcomeDistribution::new(n, t.data.iter().map(|z| z.re).collect())
}

pub(crate) fn pauli_outcome_map(l: PauliLetter) -> CMatrix {
    CMatrix::from_fn(2, 4, |b, x| pauli_projector(l, b as u8)[(x % 2, x / 2)])
}

/// Draws SIC shots through the multinomial route (requires the 4^N vector).
pub fn sample_sic_multinomial<R: Rng + ?Sized>(
    dist: &OutcomeDistribution,
    m: u64,
    rng: &mut R,
) -> Vec<SicShot> {
    dist.sample_indices(m, rng)
        .into_iter()
        .map(|i| SicShot::from_index(i, dist.n_qubits))
        .collect()
}

/// Per-shot sampler using qubit-by-qubit conditional draws on the
/// eigen-ensemble of the state. Never builds the 4^N outcome vector.
#[derive(Clone, Debug)]
pub struct ShotSampler {
    n_qubits: usize,
    weights: Vec<f64>,
    vectors: Vec<CVector>,
}

impl ShotSampler {
    pub fn pure(psi: &PureState) -> Self {
        ShotSampler {
            n_qubits: psi.n_qubits(),
            weights: vec![1.0],
            vectors: vec![psi.amplitudes().clone()],
        }
    }

    pub fn mixed(rho: &DensityOperator) -> Self {
        let (vals, vecs) = linalg::eigh(rho.matrix());
        let mut weights = Vec::new();
        let mut vectors = Vec::new();
        for (k, &l) in vals.iter().enumerate() {
            if l > 1e-14 {
                weights.push(l);
                vectors.push(vecs.column(k).into_owned());
            }
        }
        let total: f64 = weights.iter().sum();
        weights.iter_mut().for_each(|w| *w /= total);
        ShotSampler {
            n_qubits: rho.n_qubits(),
            weights,
            vectors,
        }
    }

    pub fn n_qubits(&self) -> usize {
        self.n_qubits
    }

    fn pick<R: Rng + ?Sized>(&self, rng: &mut R) -> &CVector {
        if self.vectors.len() == 1 {
            return &self.vectors[0];
        }
        let u: f64 = rng.random();
        let mut acc = 0.0;
        for (w, v) in self.weights.iter().zip(&self.vectors) {
            acc += w;
            if u < acc {
                return v;
            }
        }
        self.vectors.last().expect("non-empty ensemble")
    }

    pub fn sample_sic<R: Rng + ?Sized>(&self, frame: &SicFrame, rng: &mut R) -> SicShot {
        let v = self.pick(rng);
        let kets = frame.kets();
        let digits = sequential_draw(v, self.n_qubits, rng, |_| {
            kets.iter().map(|k| (0.5, *k)).collect::<Vec<_>>()
        });
        SicShot { digits }
    }

    pub fn sample_pauli<R: Rng + ?Sized>(&self, setting: &[PauliLetter], rng: &mut R) -> PauliShot {
        let v = self.pick(rng);
        let bits = sequential_draw(v, self.n_qubits, rng, |q| {
            (0..2u8)
                .map(|b| (1.0, pauli_eigenvector(setting[q], b)))
                .collect::<Vec<_>>()
        });
        PauliShot {
            setting: setting.to_vec(),
            bits,
        }
    }

    pub fn sample_sic_many<R: Rng + ?Sized>(&self, frame: &SicFrame, m: u64, rng: &mut R) -> Vec<SicShot> {
        (0..m).map(|_| self.sample_sic(frame, rng)).collect()
    }
}

/// Measures qubits 0, 1, ... in turn; `branches(q)` lists `(weight, ket)`
/// pairs whose weighted projectors sum to the identity.
fn sequential_draw<R: Rng + ?Sized>(
    v: &CVector,
    n: usize,
    rng: &mut R,
    branches: impl Fn(usize) -> Vec<(f64, Vector2<C64>)>,
) -> Vec<u8> {
    let mut cur: Vec<C64> = v.iter().copied().collect();
    let mut out = Vec::with_capacity(n);
    for q in 0..n {
        let half = cur.len() / 2;
        let (lo, hi) = cur.split_at(half);
        let opts = branches(q);
        let mut projected: Vec<Vec<C64>> = Vec::with_capacity(opts.len());
        let mut probs = Vec::with_capacity(opts.len());
        for (w, k) in &opts {
            let (a0, a1) = (k[0].conj(), k[1].conj());
            let p: Vec<C64> = lo.iter().zip(hi).map(|(x, y)| a0 * x + a1 * y).collect();
            probs.push(w * p.iter().map(|z| z.norm_sqr()).sum::<f64>());
            projected.push(p);
        }
        let total: f64 = probs.iter().sum();
        let u: f64 = rng.random::<f64>() * total;
        let mut acc = 0.0;
        let mut pick = probs.len() - 1;
        for (i, p) in probs.iter().enumerate() {
            acc += p;
            if u < acc {
                pick = i;
                break;
            }
        }
        out.push(pick as u8);
        let mut next = projected.swap_remove(pick);
        let norm = next.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
        if norm > 0.0 {
            next.iter_mut().for_each(|z| *z /= norm);
        }
        cur = next;
    }
    out
}

/// Pauli-basis data with shots split equally over all 3^N settings.
pub fn sample_pauli_shots<R: Rng + ?Sized>(
    sampler: &ShotSampler,
    total: u64,
    rng: &mut R,
) -> Vec<PauliShot> {
    let n = sampler.n_qubits();
    let mut out = Vec::with_capacity(total as usize);
    for (s, m) in allocate_pauli_shots(total, n).into_iter().enumerate() {
        let setting = setting_from_index(s, n);
        for _ in 0..m {
            out.push(sampler.sample_pauli(&setting, rng));
        }
    }
    out
}

/// Frame superoperator `S = sum_j |E_j>><<E_j|` in normalized Pauli coordinates.
/// For both SIC and Pauli frames it is a Kronecker power of a 4x4 block.
#[derive(Clone, Debug)]
pub struct FrameSuperoperator {
    pub n_qubits: usize,
    pub site_block: DMatrix<f64>,
    site_values: Vec<f64>,
    site_vectors: DMatrix<f64>,
}

impl FrameSuperoperator {
    pub fn new(kind: &PovmKind, n: usize) -> Result<Self> {
        let cap = kind.superop_cap();
        if n > cap {
            return Err(Error::CapExceeded {
                what: "frame superoperator",
                cap,
                requested: n,
            });
        }
        let effects = site_effect_coords(kind);
        let mut block = DMatrix::<f64>::zeros(4, 4);
        for e in &effects {
            for a in 0..4 {
                for b in 0..4 {
                    block[(a, b)] += e[a] * e[b];
                }
            }
        }
        let eig = SymmetricEigen::new(block.clone());
        Ok(FrameSuperoperator {
            n_qubits: n,
            site_block: block,
            site_values: eig.eigenvalues.iter().copied().collect(),
            site_vectors: eig.eigenvectors,
        })
    }

    fn apply_site_map(&self, x: &[f64], map: &DMatrix<f64>) -> Vec<f64> {
        let mut t = SiteTensor {
            dims: vec![4; self.n_qubits],
            data: x.iter().map(|&v| c(v, 0.0)).collect(),
        };
        let cm = map.map(|v| c(v, 0.0));
        t.apply_all(&cm);
        t.data.iter().map(|z| z.re).collect()
    }

    pub fn apply(&self, x: &[f64]) -> Vec<f64> {
        self.apply_site_map(x, &self.site_block)
    }

    /// Eigenvalues of the full superoperator (Kronecker products of site values).
    pub fn eigenvalues(&self) -> Vec<f64> {
        (0..4usize.pow(self.n_qubits as u32))
            .map(|idx| self.product_value(idx))
            .collect()
    }

    fn product_value(&self, mut idx: usize) -> f64 {
        let mut v = 1.0;
        for _ in 0..self.n_qubits {
            v *= self.site_values[idx % 4];
            idx /= 4;
        }
        v
    }

    pub fn rank(&self) -> usize {
        let ev = self.eigenvalues();
        let max = ev.iter().cloned().fold(0.0, f64::max);
        ev.iter().filter(|&&l| l > PINV_CUTOFF * max).count()
    }

    /// Moore-Penrose pseudo-inverse applied to `x`, dropping eigenvalues below
    /// `1e-10` times the largest.
    pub fn apply_pinv(&self, x: &[f64]) -> Vec<f64> {
        let vt = self.site_vectors.transpose();
        let mut y = self.apply_site_map(x, &vt);
        let max = self.site_values.iter().cloned().fold(0.0, f64::max).powi(self.n_qubits as i32);
        for (idx, v) in y.iter_mut().enumerate() {
            let l = self.product_value(idx);
            *v = if l > PINV_CUTOFF * max { *v / l } else { 0.0 };
        }
        self.apply_site_map(&y, &self.site_vectors)
    }

    /// Dense `4^N x 4^N` matrix, for oracles.
    pub fn dense(&self) -> DMatrix<f64> {
        let mut out = DMatrix::from_element(1, 1, 1.0);
        for _ in 0..self.n_qubits {
            out = out.kronecker(&self.site_block);
        }
        out
    }
}

/// Normalized Pauli coordinates of the single-site effects, with the Pauli
/// family weighted by 1/3 per letter.
pub(crate) fn site_effect_coords(kind: &PovmKind) -> Vec<[f64; 4]> {
    match kind {
        PovmKind::Sic(frame) => (0..4)
            .map(|i| linalg::pauli_coords_2x2(&frame.effect(i)))
            .collect(),
        PovmKind::Pauli => PauliLetter::MEASURED
            .iter()
            .flat_map(|&l| {
                (0..2u8).map(move |b| {
                    let mut e = linalg::pauli_coords_2x2(&pauli_projector(l, b));
                    e.iter_mut().for_each(|v| *v /= 3.0);
                    e
                })
            })
            .collect(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::qstate::{library, random};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn frames_satisfy_design_identities() {
        for f in [SicFrame::standard(), SicFrame::rotated()] {
            assert!(f.residuals().max() < 1e-12, "{:?}", f.residuals());
        }
    }

    #[test]
    fn rotated_frame_is_pauli_symmetric() {
        let f = SicFrame::rotated();
        let mut per_basis = Vec::new();
        for l in PauliLetter::MEASURED {
            let mut ov: Vec<f64> = (0..4)
                .map(|i| f.kets()[i].dotc(&pauli_eigenvector(l, 0)).norm_sqr())
                .collect();
            ov.sort_by(f64::total_cmp);
            per_basis.push(ov);
        }
        for ov in &per_basis[1..] {
            for (a, b) in ov.iter().zip(&per_basis[0]) {
                assert!((a - b).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn standard_naimark_matches_frame() {
        let f = SicFrame::standard();
        let u = f.naimark();
        assert!(u.unitarity_residual() < 1e-12);
        let h = std::f64::consts::FRAC_1_SQRT_2;
        for i in 0..4 {
            for col in 0..2 {
                assert!((u.matrix[(i, col)] - f.kets()[i][col] * h).norm() < 1e-15);
            }
            let row_norm = u.matrix[(i, 0)].norm_sqr() + u.matrix[(i, 1)].norm_sqr();
            assert!((row_norm - 0.5).abs() < 1e-15);
        }
        let rot = SicFrame::rotated().naimark();
        assert!(rot.unitarity_residual() < 1e-12);
        let conj = SicFrame::custom(f.kets().map(|k| k.conjugate())).unwrap();
        for i in 0..4 {
            let d = u.realized_effect(i) - conj.effect(i);
            assert!(d.iter().all(|z| z.norm() < 1e-12));
        }
    }

    #[test]
    fn single_qubit_distributions() {
        let f = SicFrame::standard();
        let mm = DensityOperator::maximally_mixed(1);
        let d = sic_outcome_distribution(&mm, &f).unwrap();
        assert!(d.probabilities.iter().all(|p| (p - 0.25).abs() < 1e-15));
        let psi1 = PureState::new(CVector::from_column_slice(&[f.kets()[0][0], f.kets()[0][1]])).unwrap();
        let d = sic_outcome_distribution(&psi1.to_density(), &f).unwrap();
        let expected = [0.5, 1.0 / 6.0, 1.0 / 6.0, 1.0 / 6.0];
        for (p, e) in d.probabilities.iter().zip(expected) {
            assert!((p - e).abs() < 1e-14);
        }
    }

    #[test]
    fn product_distribution_factorizes() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let f = SicFrame::rotated();
        let a = random::random_density(1, 2, &mut rng);
        let b = random::random_density(1, 2, &mut rng);
        let da = sic_outcome_distribution(&a, &f).unwrap();
        let db = sic_outcome_distribution(&b, &f).unwrap();
        let dab = sic_outcome_distribution(&a.tensor(&b), &f).unwrap();
        for i in 0..4 {
            for j in 0..4 {
                let p = da.probabilities[i] * db.probabilities[j];
                assert!((dab.probabilities[4 * i + j] - p).abs() < 1e-14);
            }
        }
    }

    #[test]
    fn pauli_distributions() {
        let zero = PureState::basis(1, 0).unwrap().to_density();
        let z = pauli_outcome_distribution(&zero, &"Z".parse().unwrap()).unwrap();
        assert_eq!(z.probabilities, vec![1.0, 0.0]);
        let x = pauli_outcome_distribution(&zero, &"X".parse().unwrap()).unwrap();
        assert!((x.probabilities[0] - 0.5).abs() < 1e-15);
        let bell = library::ghz(2).unwrap().to_density();
        let xx = pauli_outcome_distribution(&bell, &"XX".parse().unwrap()).unwrap();
        let expected = [0.5, 0.0, 0.0, 0.5];
        for (p, e) in xx.probabilities.iter().zip(expected) {
            assert!((p - e).abs() < 1e-14);
        }
        assert!(pauli_outcome_distribution(&bell, &"XI".parse().unwrap()).is_err());
    }

    #[test]
    fn distribution_cap() {
        let mm = DensityOperator::maximally_mixed(3);
        let r = sic_outcome_distribution_capped(&mm, &SicFrame::standard(), 2);
        assert!(matches!(r, Err(Error::CapExceeded { .. })));
    }

    #[test]
    fn sampling_is_deterministic() {
        let f = SicFrame::standard();
        let psi = library::ghz(3).unwrap();
        let s = ShotSampler::pure(&psi);
        let a = s.sample_sic_many(&f, 200, &mut ChaCha8Rng::seed_from_u64(9));
        let b = s.sample_sic_many(&f, 200, &mut ChaCha8Rng::seed_from_u64(9));
        assert_eq!(a, b);
        let d = sic_outcome_distribution(&psi.to_density(), &f).unwrap();
        let c1 = sample_sic_multinomial(&d, 200, &mut ChaCha8Rng::seed_from_u64(9));
        let c2 = sample_sic_multinomial(&d, 200, &mut ChaCha8Rng::seed_from_u64(9));
        assert_eq!(c1, c2);
        assert_eq!(c1.len(), 200);
    }

    #[test]
    fn pauli_allocation() {
        let a = allocate_pauli_shots(100, 2);
        assert_eq!(a.len(), 9);
        assert_eq!(a.iter().sum::<u64>(), 100);
        assert_eq!(a[0], 12);
        assert_eq!(a[8], 11);
        assert_eq!(setting_index(&setting_from_index(7, 2)), 7);
    }

    #[test]
    fn sic_superoperator_is_half_depolarizing() {
        let s = FrameSuperoperator::new(&PovmKind::Sic(SicFrame::standard()), 1).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let a = random::random_hermitian(1, &mut rng);
        let out = linalg::operator_from_coords(&s.apply(&linalg::pauli_coords(&a, 1)), 1);
        let tr = a.trace();
        let expected = (a.scale(1.0 / 3.0) + linalg::identity(2) * tr / c(3.0, 0.0)).scale(0.5);
        assert!(linalg::max_abs_diff(&out, &expected) < 1e-14);
        assert_eq!(s.rank(), 4);
    }
}
