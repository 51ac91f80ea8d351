//! JSON state files: `{"n_qubits":N,"kind":"pure"|"mixed","re":[..],"im":[..]}`,
//! matrices stored row-major, plus an optional `metadata` object.

use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{DensityOperator, PureState, State};
use crate::error::{Error, Result};
use crate::linalg::{self, c, CMatrix, CVector};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum StateKind {
    Pure,
    Mixed,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StateFile {
    pub n_qubits: usize,
    pub kind: StateKind,
    pub re: Vec<f64>,
    pub im: Vec<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub metadata: Option<serde_json::Value>,
}

impl StateFile {
    pub fn from_state(state: &State) -> Self {
        match state {
            State::Pure(p) => StateFile {
                n_qubits: p.n_qubits(),
                kind: StateKind::Pure,
                re: p.amplitudes().iter().map(|z| z.re).collect(),
                im: p.amplitudes().iter().map(|z| z.im).collect(),
                metadata: None,
            },
            State::Mixed(m) => Self::from_matrix(m.matrix()),
        }
    }

    /// Stores any square operator as `mixed`, without physicality checks.
    pub fn from_matrix(m: &CMatrix) -> Self {
        let d = m.nrows();
        let mut re = Vec::with_capacity(d * d);
        let mut im = Vec::with_capacity(d * d);
        for i in 0..d {
            for j in 0..d {
                re.push(m[(i, j)].re);
                im.push(m[(i, j)].im);
            }
        }
        StateFile {
            n_qubits: linalg::qubits_of(d).unwrap_or(0),
            kind: StateKind::Mixed,
            re,
            im,
            metadata: None,
        }
    }

    pub fn with_metadata(mut self, metadata: serde_json::Value) -> Self {
        self.metadata = Some(metadata);
        self
    }

    pub fn matrix(&self) -> Result<CMatrix> {
        let d = linalg::dim_of(self.n_qubits);
        match self.kind {
            StateKind::Pure => {
                let v = self.vector()?;
                Ok(&v * v.adjoint())
            }
            StateKind::Mixed => {
                self.check_len(d * d)?;
                Ok(CMatrix::from_fn(d, d, |i, j| {
                    c(self.re[i * d + j], self.im[i * d + j])
                }))
            }
        }
    }

    fn vector(&self) -> Result<CVector> {
        let d = linalg::dim_of(self.n_qubits);
        self.check_len(d)?;
        Ok(CVector::from_fn(d, |i, _| c(self.re[i], self.im[i])))
    }

    fn check_len(&self, expected: usize) -> Result<()> {
        if self.re.len() != expected || self.im.len() != expected {
            return Err(Error::DimensionMismatch {
                expected,
                found: self.re.len().max(self.im.len()),
            });
        }
        Ok(())
    }

    /// Validates physicality.
    pub fn to_state(&self) -> Result<State> {
        if self.n_qubits == 0 {
            return Err(Error::InvalidState("n_qubits must be positive".into()));
        }
        match self.kind {
            StateKind::Pure => Ok(State::Pure(PureState::new(self.vector()?)?)),
            StateKind::Mixed => Ok(State::Mixed(DensityOperator::new(self.matrix()?)?)),
        }
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let text = serde_json::to_string(self)?;
        std::fs::write(path, text)?;
        Ok(())
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        Ok(serde_json::from_str(&text)?)
    }
}

impl State {
    pub fn save_json(&self, path: impl AsRef<Path>) -> Result<()> {
        StateFile::from_state(self).save(path)
    }

    pub fn load_json(path: impl AsRef<Path>) -> Result<State> {
        StateFile::load(path)?.to_state()
    }
}
