//! Dense N-qubit states and their exact functionals.
//!
//! These are the reference quantities every estimator is checked against:
//! partial traces, partial transposes, purities, Rényi-2 entropies,
//! trace distances, pure-state fidelities, negativities and the third
//! partial-transpose moment.

mod io;
pub mod library;
pub mod random;

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{self, CMatrix, CVector, C64};

pub use io::StateFile;

const HERMITIAN_TOL: f64 = 1e-12;
const TRACE_TOL: f64 = 1e-12;
const PSD_TOL: f64 = 1e-10;
/// Eigenvalues below this magnitude are treated as zero in the negativity.
pub const NEGATIVITY_FLOOR: f64 = 1e-10;
/// Purities are clamped here before taking a logarithm.
pub const PURITY_CLAMP: f64 = 1e-15;

/// Hermitian, positive semidefinite, unit-trace operator on `n_qubits` qubits.
#[derive(Clone, Debug, PartialEq)]
pub struct DensityOperator {
    n_qubits: usize,
    matrix: CMatrix,
}

/// Normalized state vector.
#[derive(Clone, Debug, PartialEq)]
pub struct PureState {
    n_qubits: usize,
    amplitudes: CVector,
}

/// Either kind of state, as stored on disk.
#[derive(Clone, Debug, PartialEq)]
pub enum State {
    Pure(PureState),
    Mixed(DensityOperator),
}

impl DensityOperator {
    /// Validates the density-operator invariants and takes ownership.
    pub fn new(matrix: CMatrix) -> Result<Self> {
        let n_qubits = check_square_power_of_two(&matrix)?;
        let h = linalg::hermiticity_residual(&matrix);
        if h > HERMITIAN_TOL {
            return Err(Error::InvalidState(format!(
                "matrix is not Hermitian (residual {h:.3e})"
            )));
        }
        let tr = matrix.trace();
        if (tr.re - 1.0).abs() > TRACE_TOL || tr.im.abs() > TRACE_TOL {
            return Err(Error::InvalidState(format!("trace is {tr}, expected 1")));
        }
        let matrix = linalg::hermitize(&matrix);
        let min = linalg::eigvalsh(&matrix).first().copied().unwrap_or(0.0);
        if min < -PSD_TOL {
            return Err(Error::InvalidState(format!(
                "minimum eigenvalue {min:.3e} is negative"
            )));
        }
        Ok(DensityOperator { n_qubits, matrix })
    }

    pub fn from_pure(psi: &PureState) -> Self {
        let a = &psi.amplitudes;
        let matrix = linalg::hermitize(&(a * a.adjoint()));
        DensityOperator {
            n_qubits: psi.n_qubits,
            matrix,
        }
    }

    pub fn maximally_mixed(n_qubits: usize) -> Self {
        let d = linalg::dim_of(n_qubits);
        DensityOperator {
            n_qubits,
            matrix: linalg::identity(d).unscale(d as f64),
        }
    }

    /// Convex combination `w * self + (1 - w) * other`.
    pub fn mix(&self, other: &DensityOperator, w: f64) -> Result<Self> {
        self.same_dim(other)?;
        if !(0.0..=1.0).contains(&w) {
            return Err(Error::invalid(format!("mixing weight {w} outside [0, 1]")));
        }
        Ok(DensityOperator {
            n_qubits: self.n_qubits,
            matrix: self.matrix.scale(w) + other.matrix.scale(1.0 - w),
        })
    }

    pub fn n_qubits(&self) -> usize {
        self.n_qubits
    }

    pub fn dim(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn matrix(&self) -> &CMatrix {
        &self.matrix
    }

    pub fn into_matrix(self) -> CMatrix {
        self.matrix
    }

    pub fn tensor(&self, other: &DensityOperator) -> DensityOperator {
        DensityOperator {
            n_qubits: self.n_qubits + other.n_qubits,
            matrix: linalg::kron(&self.matrix, &other.matrix),
        }
    }

    /// Reduced state on `keep`; indices are sorted before tracing.
    pub fn partial_trace(&self, keep: &[usize]) -> Result<DensityOperator> {
        let keep = linalg::normalize_subset(keep, self.n_qubits)?;
        let matrix = linalg::partial_trace(&self.matrix, self.n_qubits, &keep)?;
        Ok(DensityOperator {
            n_qubits: keep.len(),
            matrix,
        })
    }

    /// Partial transpose on side A. The result is Hermitian but in general not PSD.
    pub fn partial_transpose(&self, part: &Bipartition) -> Result<CMatrix> {
        self.check_part(part)?;
        linalg::partial_transpose(&self.matrix, self.n_qubits, part.side_a())
    }

    pub fn purity(&self) -> f64 {
        purity_of(&self.matrix)
    }

    /// `-log2 tr(rho^2)`, with the purity clamped at [`PURITY_CLAMP`].
    pub fn renyi2(&self) -> f64 {
        -self.purity().max(PURITY_CLAMP).log2()
    }

    pub fn trace_distance(&self, other: &DensityOperator) -> Result<f64> {
        self.same_dim(other)?;
        Ok(trace_distance(&self.matrix, &other.matrix))
    }

    /// `<phi| rho |phi>`.
    pub fn fidelity_pure(&self, target: &PureState) -> Result<f64> {
        fidelity_with_pure(&self.matrix, target)
    }

    /// Sum of the magnitudes of the negative eigenvalues of the partial transpose.
    pub fn negativity(&self, part: &Bipartition) -> Result<f64> {
        let pt = self.partial_transpose(part)?;
        Ok(linalg::eigvalsh(&pt)
            .into_iter()
            .filter(|&l| l < -NEGATIVITY_FLOOR)
            .map(|l| -l)
            .sum())
    }

    pub fn p3_moments(&self, part: &Bipartition) -> Result<P3Moments> {
        let pt = self.partial_transpose(part)?;
        let sq = &pt * &pt;
        let lhs = linalg::trace_product(&sq, &pt).re;
        let p = self.purity();
        Ok(P3Moments::new(lhs, p * p))
    }

    pub fn pauli_decompose(&self) -> BTreeMap<PauliString, f64> {
        pauli_decompose(&self.matrix).expect("density operators have power-of-two dimension")
    }

    fn same_dim(&self, other: &DensityOperator) -> Result<()> {
        if self.dim() != other.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.dim(),
                found: other.dim(),
            });
        }
        Ok(())
    }

    fn check_part(&self, part: &Bipartition) -> Result<()> {
        if part.n_qubits() != self.n_qubits {
            return Err(Error::InvalidBipartition(format!(
                "bipartition of {} qubits applied to a {}-qubit state",
                part.n_qubits(),
                self.n_qubits
            )));
        }
        Ok(())
    }
}

/// Both sides of the third-moment PPT test.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct P3Moments {
    /// `tr((rho^{T_A})^3)`
    pub lhs: f64,
    /// `tr(rho^2)^2`
    pub rhs: f64,
    pub entangled: bool,
}

impl P3Moments {
    pub const TOLERANCE: f64 = 1e-10;

    pub fn new(lhs: f64, rhs: f64) -> Self {
        P3Moments {
            lhs,
            rhs,
            entangled: lhs < rhs - Self::TOLERANCE,
        }
    }
}

impl PureState {
    /// Validates normalization (within 1e-12).
    pub fn new(amplitudes: CVector) -> Result<Self> {
        let n_qubits = linalg::qubits_of(amplitudes.len())
            .filter(|&n| n >= 1)
            .ok_or_else(|| {
                Error::InvalidState(format!(
                    "amplitude vector length {} is not a power of two >= 2",
                    amplitudes.len()
                ))
            })?;
        let norm = amplitudes.norm_squared();
        if (norm - 1.0).abs() > 1e-12 {
            return Err(Error::InvalidState(format!(
                "squared norm is {norm}, expected 1"
            )));
        }
        Ok(PureState {
            n_qubits,
            amplitudes,
        })
    }

    /// Normalizes before validating.
    pub fn normalized(amplitudes: CVector) -> Result<Self> {
        let norm = amplitudes.norm();
        if norm == 0.0 || !norm.is_finite() {
            return Err(Error::InvalidState("zero or non-finite vector".into()));
        }
        PureState::new(amplitudes.unscale(norm))
    }

    pub fn basis(n_qubits: usize, index: usize) -> Result<Self> {
        let d = linalg::dim_of(n_qubits);
        if n_qubits == 0 || index >= d {
            return Err(Error::invalid(format!(
                "basis index {index} out of range for {n_qubits} qubits"
            )));
        }
        let mut v = CVector::zeros(d);
        v[index] = linalg::ONE;
        PureState::new(v)
    }

    pub fn n_qubits(&self) -> usize {
        self.n_qubits
    }

    pub fn amplitudes(&self) -> &CVector {
        &self.amplitudes
    }

    pub fn tensor(&self, other: &PureState) -> PureState {
        PureState {
            n_qubits: self.n_qubits + other.n_qubits,
            amplitudes: linalg::kron_vec(&self.amplitudes, &other.amplitudes),
        }
    }

    pub fn inner(&self, other: &PureState) -> Result<C64> {
        if self.n_qubits != other.n_qubits {
            return Err(Error::DimensionMismatch {
                expected: self.amplitudes.len(),
                found: other.amplitudes.len(),
            });
        }
        Ok(self.amplitudes.dotc(&other.amplitudes))
    }

    pub fn to_density(&self) -> DensityOperator {
        DensityOperator::from_pure(self)
    }
}

impl State {
    pub fn n_qubits(&self) -> usize {
        match self {
            State::Pure(p) => p.n_qubits(),
            State::Mixed(m) => m.n_qubits(),
        }
    }

    pub fn to_density(&self) -> DensityOperator {
        match self {
            State::Pure(p) => p.to_density(),
            State::Mixed(m) => m.clone(),
        }
    }

    /// Kronecker product of two states of the same kind.
    pub fn tensor(&self, other: &State) -> Result<State> {
        match (self, other) {
            (State::Pure(a), State::Pure(b)) => Ok(State::Pure(a.tensor(b))),
            (State::Mixed(a), State::Mixed(b)) => Ok(State::Mixed(a.tensor(b))),
            _ => Err(Error::MixedKinds),
        }
    }
}

impl From<PureState> for State {
    fn from(p: PureState) -> Self {
        State::Pure(p)
    }
}

impl From<DensityOperator> for State {
    fn from(m: DensityOperator) -> Self {
        State::Mixed(m)
    }
}

/// Bipartition `(A, complement)` of `n_qubits` qubits.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Bipartition {
    n_qubits: usize,
    side_a: Vec<usize>,
}

impl Bipartition {
    pub fn new(side_a: &[usize], n_qubits: usize) -> Result<Self> {
        let side_a = linalg::normalize_subset(side_a, n_qubits)
            .map_err(|e| Error::InvalidBipartition(e.to_string()))?;
        if side_a.len() == n_qubits {
            return Err(Error::InvalidBipartition(
                "side A must be a strict subset of the qubits".into(),
            ));
        }
        Ok(Bipartition { n_qubits, side_a })
    }

    pub fn n_qubits(&self) -> usize {
        self.n_qubits
    }

    pub fn side_a(&self) -> &[usize] {
        &self.side_a
    }

    pub fn complement(&self) -> Vec<usize> {
        (0..self.n_qubits)
            .filter(|q| !self.side_a.contains(q))
            .collect()
    }

    pub fn flipped(&self) -> Bipartition {
        Bipartition {
            n_qubits: self.n_qubits,
            side_a: self.complement(),
        }
    }

    /// The smaller side; on ties the lexicographically smaller subset.
    pub fn smaller_side(&self) -> Vec<usize> {
        let comp = self.complement();
        match self.side_a.len().cmp(&comp.len()) {
            std::cmp::Ordering::Less => self.side_a.clone(),
            std::cmp::Ordering::Greater => comp,
            std::cmp::Ordering::Equal => std::cmp::min(self.side_a.clone(), comp),
        }
    }

    /// `"0,2|1,3,4"`.
    pub fn label(&self) -> String {
        format!(
            "{}|{}",
            join_indices(&self.side_a),
            join_indices(&self.complement())
        )
    }
}

pub fn join_indices(s: &[usize]) -> String {
    s.iter().map(|q| q.to_string()).collect::<Vec<_>>().join(",")
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum PauliLetter {
    I,
    X,
    Y,
    Z,
}

impl PauliLetter {
    pub const ALL: [PauliLetter; 4] = [PauliLetter::I, PauliLetter::X, PauliLetter::Y, PauliLetter::Z];
    pub const MEASURED: [PauliLetter; 3] = [PauliLetter::X, PauliLetter::Y, PauliLetter::Z];

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn from_index(i: usize) -> PauliLetter {
        Self::ALL[i]
    }

    pub fn as_char(self) -> char {
        match self {
            PauliLetter::I => 'I',
            PauliLetter::X => 'X',
            PauliLetter::Y => 'Y',
            PauliLetter::Z => 'Z',
        }
    }

    pub fn from_char(ch: char) -> Option<PauliLetter> {
        match ch {
            'I' => Some(PauliLetter::I),
            'X' => Some(PauliLetter::X),
            'Y' => Some(PauliLetter::Y),
            'Z' => Some(PauliLetter::Z),
            _ => None,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct PauliString {
    pub letters: Vec<PauliLetter>,
}

impl PauliString {
    pub fn new(letters: Vec<PauliLetter>) -> Self {
        PauliString { letters }
    }

    pub fn len(&self) -> usize {
        self.letters.len()
    }

    pub fn is_empty(&self) -> bool {
        self.letters.is_empty()
    }

    /// Base-4 index with qubit 0 most significant.
    pub fn index(&self) -> usize {
        self.letters.iter().fold(0, |acc, l| acc * 4 + l.index())
    }

    pub fn from_index(mut index: usize, n: usize) -> Self {
        let mut letters = vec![PauliLetter::I; n];
        for k in (0..n).rev() {
            letters[k] = PauliLetter::from_index(index % 4);
            index /= 4;
        }
        PauliString { letters }
    }

    pub fn matrix(&self) -> CMatrix {
        let p = linalg::pauli_matrices();
        self.letters
            .iter()
            .fold(linalg::identity(1), |acc, l| {
                linalg::kron(&acc, &linalg::from_matrix2(&p[l.index()]))
            })
    }
}

impl fmt::Display for PauliString {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for l in &self.letters {
            write!(f, "{}", l.as_char())?;
        }
        Ok(())
    }
}

impl FromStr for PauliString {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        s.chars()
            .map(|ch| {
                PauliLetter::from_char(ch)
                    .ok_or_else(|| Error::invalid(format!("`{ch}` is not a Pauli letter")))
            })
            .collect::<Result<Vec<_>>>()
            .map(PauliString::new)
    }
}

/// `r(W) = tr(W A)` for every Pauli string, so that `A = sum_W r(W) W / 2^N`.
pub fn pauli_decompose(a: &CMatrix) -> Result<BTreeMap<PauliString, f64>> {
    let n = check_square_power_of_two(a)?;
    let scale = (linalg::dim_of(n) as f64).sqrt();
    Ok(linalg::pauli_coords(a, n)
        .into_iter()
        .enumerate()
        .map(|(idx, x)| (PauliString::from_index(idx, n), x * scale))
        .collect())
}

/// Inverse of [`pauli_decompose`]; missing strings count as zero.
pub fn pauli_reconstruct(coeffs: &BTreeMap<PauliString, f64>, n: usize) -> Result<CMatrix> {
    let d = linalg::dim_of(n);
    let mut coords = vec![0.0; d * d];
    let scale = (d as f64).sqrt();
    for (w, &r) in coeffs {
        if w.len() != n {
            return Err(Error::DimensionMismatch {
                expected: n,
                found: w.len(),
            });
        }
        coords[w.index()] = r / scale;
    }
    Ok(linalg::operator_from_coords(&coords, n))
}

pub fn purity_of(m: &CMatrix) -> f64 {
    linalg::trace_product(m, m).re
}

pub fn trace_distance(a: &CMatrix, b: &CMatrix) -> f64 {
    0.5 * linalg::eigvalsh(&(a - b)).iter().map(|l| l.abs()).sum::<f64>()
}

/// `<phi| A |phi>` for a Hermitian (not necessarily physical) `A`.
pub fn fidelity_with_pure(a: &CMatrix, target: &PureState) -> Result<f64> {
    let v = target.amplitudes();
    if a.nrows() != v.len() {
        return Err(Error::DimensionMismatch {
            expected: a.nrows(),
            found: v.len(),
        });
    }
    Ok(v.dotc(&(a * v)).re)
}

fn check_square_power_of_two(m: &CMatrix) -> Result<usize> {
    if m.nrows() != m.ncols() {
        return Err(Error::InvalidState(format!(
            "matrix is {}x{}, not square",
            m.nrows(),
            m.ncols()
        )));
    }
    linalg::qubits_of(m.nrows())
        .filter(|&n| n >= 1)
        .ok_or_else(|| Error::InvalidState(format!("dimension {} is not 2^N", m.nrows())))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{c, max_abs_diff};
    use crate::qstate::library;

    fn ket(bits: &str) -> PureState {
        let n = bits.len();
        PureState::basis(n, usize::from_str_radix(bits, 2).unwrap()).unwrap()
    }

    #[test]
    fn tensor_examples() {
        let mm = DensityOperator::maximally_mixed(1);
        let t = mm.tensor(&mm);
        assert!(max_abs_diff(t.matrix(), DensityOperator::maximally_mixed(2).matrix()) < 1e-15);

        let zz = ket("0").tensor(&ket("0"));
        assert_eq!(zz.amplitudes()[0], linalg::ONE);

        let d = ket("0").to_density().tensor(&ket("1").to_density());
        let diag: Vec<f64> = (0..4).map(|i| d.matrix()[(i, i)].re).collect();
        assert_eq!(diag, vec![0.0, 1.0, 0.0, 0.0]);

        let mixed = State::Mixed(mm.clone());
        let pure = State::Pure(ket("0"));
        assert!(matches!(mixed.tensor(&pure), Err(Error::MixedKinds)));
    }

    #[test]
    fn partial_trace_examples() {
        let bell = library::ghz(2).unwrap().to_density();
        let r = bell.partial_trace(&[0]).unwrap();
        assert!(max_abs_diff(r.matrix(), DensityOperator::maximally_mixed(1).matrix()) < 1e-15);
        assert!(bell.partial_trace(&[]).is_err());
        assert!(bell.partial_trace(&[2]).is_err());
    }

    #[test]
    fn partial_transpose_of_bell() {
        let bell = library::ghz(2).unwrap().to_density();
        let part = Bipartition::new(&[0], 2).unwrap();
        let pt = bell.partial_transpose(&part).unwrap();
        let ev = linalg::eigvalsh(&pt);
        let expected = [-0.5, 0.5, 0.5, 0.5];
        for (a, b) in ev.iter().zip(expected) {
            assert!((a - b).abs() < 1e-12);
        }
        assert!((purity_of(&pt) - 1.0).abs() < 1e-12);
        assert!((bell.negativity(&part).unwrap() - 0.5).abs() < 1e-12);
    }

    #[test]
    fn pauli_decompose_examples() {
        let mm = DensityOperator::maximally_mixed(1);
        let r = mm.pauli_decompose();
        let get = |s: &str| r[&s.parse::<PauliString>().unwrap()];
        assert!((get("I") - 1.0).abs() < 1e-15);
        assert!(get("X").abs() < 1e-15 && get("Z").abs() < 1e-15);

        let zero = ket("0").to_density().pauli_decompose();
        assert!((zero[&"Z".parse().unwrap()] - 1.0).abs() < 1e-15);
        assert!((zero[&"I".parse().unwrap()] - 1.0).abs() < 1e-15);
        assert!(zero[&"Y".parse().unwrap()].abs() < 1e-15);
    }

    #[test]
    fn trace_distance_examples() {
        let z0 = ket("0").to_density();
        let z1 = ket("1").to_density();
        assert!(z0.trace_distance(&z0).unwrap().abs() < 1e-15);
        assert!((z0.trace_distance(&z1).unwrap() - 1.0).abs() < 1e-12);
        let mm = DensityOperator::maximally_mixed(1);
        assert!((z0.trace_distance(&mm).unwrap() - 0.5).abs() < 1e-12);
        assert!(z0.trace_distance(&DensityOperator::maximally_mixed(2)).is_err());
    }

    #[test]
    fn fidelity_and_purity_examples() {
        let ghz = library::ghz(3).unwrap();
        assert!((ghz.to_density().fidelity_pure(&ghz).unwrap() - 1.0).abs() < 1e-12);
        let mm = DensityOperator::maximally_mixed(3);
        assert!((mm.fidelity_pure(&ghz).unwrap() - 0.125).abs() < 1e-15);
        assert!((mm.purity() - 0.125).abs() < 1e-15);
        assert!((mm.renyi2() - 3.0).abs() < 1e-12);
        assert!(ghz.to_density().renyi2().abs() < 1e-12);
    }

    #[test]
    fn p3_examples() {
        let mm = DensityOperator::maximally_mixed(2);
        let part = Bipartition::new(&[0], 2).unwrap();
        let m = mm.p3_moments(&part).unwrap();
        assert!((m.lhs - 1.0 / 16.0).abs() < 1e-15 && (m.rhs - 1.0 / 16.0).abs() < 1e-15);
        assert!(!m.entangled);

        let prod = ket("01").to_density().p3_moments(&part).unwrap();
        assert!((prod.lhs - 1.0).abs() < 1e-12 && !prod.entangled);
    }

    #[test]
    fn density_validation() {
        let bad = CMatrix::from_fn(2, 2, |i, j| if i == j { c(0.7, 0.0) } else { linalg::ZERO });
        assert!(DensityOperator::new(bad).is_err());
        let nonpsd = CMatrix::from_fn(2, 2, |i, j| {
            if i == j {
                c(if i == 0 { 1.2 } else { -0.2 }, 0.0)
            } else {
                linalg::ZERO
            }
        });
        assert!(DensityOperator::new(nonpsd).is_err());
    }

    #[test]
    fn bipartition_validation() {
        assert!(Bipartition::new(&[], 3).is_err());
        assert!(Bipartition::new(&[0, 1, 2], 3).is_err());
        assert!(Bipartition::new(&[0, 0], 3).is_err());
        let b = Bipartition::new(&[3, 1], 4).unwrap();
        assert_eq!(b.side_a(), &[1, 3]);
        assert_eq!(b.complement(), vec![0, 2]);
        assert_eq!(b.smaller_side(), vec![0, 2]);
        assert_eq!(b.label(), "1,3|0,2");
    }
}
