//! Line-oriented shot files.
//!
//! ```text
//! #TOMO v1
//! {"n_qubits":4,"povm":"sic","frame":"standard","seed":7,"batch":1}
//! 0123
//! 3310
//! ```
//!
//! Pauli bodies hold `XYZ 010` lines: the setting, one space, the bits.

use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::povm::{FrameName, PauliShot, PovmKind, ShotRecord, SicFrame, SicShot};
use crate::qstate::PauliLetter;

pub const MAGIC: &str = "#TOMO v1";

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PovmLabel {
    Sic,
    Pauli,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ShotFileHeader {
    pub n_qubits: usize,
    pub povm: PovmLabel,
    pub frame: FrameName,
    pub seed: u64,
    pub batch: usize,
}

impl ShotFileHeader {
    pub fn validate(&self) -> Result<()> {
        if self.n_qubits == 0 {
            return Err(Error::invalid("n_qubits must be positive"));
        }
        if self.batch == 0 {
            return Err(Error::invalid("batch hint must be at least 1"));
        }
        if self.frame == FrameName::Custom {
            return Err(Error::invalid("shot files store standard or rotated frames only"));
        }
        Ok(())
    }

    pub fn povm_kind(&self) -> Result<PovmKind> {
        Ok(match self.povm {
            PovmLabel::Sic => PovmKind::Sic(SicFrame::by_name(self.frame)?),
            PovmLabel::Pauli => PovmKind::Pauli,
        })
    }

    pub fn frame(&self) -> Result<SicFrame> {
        SicFrame::by_name(self.frame)
    }

    pub fn parse_record(&self, line: &str, line_no: usize) -> Result<ShotRecord> {
        let err = |msg: String| Error::Parse { line: line_no, msg };
        let n = self.n_qubits;
        match self.povm {
            PovmLabel::Sic => {
                if line.len() != n {
                    return Err(err(format!("expected {n} digits, found {}", line.len())));
                }
                let digits = line
                    .bytes()
                    .map(|b| match b {
                        b'0'..=b'3' => Ok(b - b'0'),
                        _ => Err(err(format!("`{}` is not a SIC digit 0-3", b as char))),
                    })
                    .collect::<Result<Vec<u8>>>()?;
                Ok(ShotRecord::Sic(SicShot { digits }))
            }
            PovmLabel::Pauli => {
                let (s, b) = line
                    .split_once(' ')
                    .ok_or_else(|| err("expected `SETTING BITS`".into()))?;
                if s.len() != n || b.len() != n {
                    return Err(err(format!("setting and bits must both have length {n}")));
                }
                let setting = s
                    .chars()
                    .map(|ch| match PauliLetter::from_char(ch) {
                        Some(l) if l != PauliLetter::I => Ok(l),
                        _ => Err(err(format!("`{ch}` is not a setting letter X/Y/Z"))),
                    })
                    .collect::<Result<Vec<_>>>()?;
                let bits = b
                    .bytes()
                    .map(|x| match x {
                        b'0' | b'1' => Ok(x - b'0'),
                        _ => Err(err(format!("`{}` is not a bit", x as char))),
                    })
                    .collect::<Result<Vec<u8>>>()?;
                Ok(ShotRecord::Pauli(PauliShot { setting, bits }))
            }
        }
    }

    fn check_record(&self, r: &ShotRecord) -> Result<()> {
        let ok = match (self.povm, r) {
            (PovmLabel::Sic, ShotRecord::Sic(s)) => s.digits.len() == self.n_qubits,
            (PovmLabel::Pauli, ShotRecord::Pauli(p)) => p.bits.len() == self.n_qubits,
            _ => false,
        };
        if ok {
            Ok(())
        } else {
            Err(Error::invalid(format!("record `{r}` does not match the header")))
        }
    }
}

/// Writes header and records; fails before writing a mismatching record.
pub fn write_shots<'a>(
    path: impl AsRef<Path>,
    header: &ShotFileHeader,
    records: impl IntoIterator<Item = &'a ShotRecord>,
) -> Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    write_shots_to(&mut w, header, records)?;
    w.flush()?;
    Ok(())
}

pub fn write_shots_to<'a, W: Write>(
    w: &mut W,
    header: &ShotFileHeader,
    records: impl IntoIterator<Item = &'a ShotRecord>,
) -> Result<()> {
    header.validate()?;
    writeln!(w, "{MAGIC}")?;
    serde_json::to_writer(&mut *w, header)?;
    writeln!(w)?;
    for r in records {
        header.check_record(r)?;
        writeln!(w, "{r}")?;
    }
    Ok(())
}

/// Incremental reader; yields one record per body line.
pub struct ShotReader<R: BufRead> {
    header: ShotFileHeader,
    lines: std::io::Lines<R>,
    line_no: usize,
}

impl ShotReader<BufReader<File>> {
    pub fn open(path: impl AsRef<Path>) -> Result<Self> {
        Self::new(BufReader::new(File::open(path)?))
    }
}

impl<R: BufRead> ShotReader<R> {
    pub fn new(reader: R) -> Result<Self> {
        let mut lines = reader.lines();
        let magic = lines.next().transpose()?.ok_or(Error::Parse {
            line: 1,
            msg: "empty file".into(),
        })?;
        if magic.trim_end() != MAGIC {
            return Err(Error::Parse {
                line: 1,
                msg: format!("expected `{MAGIC}`"),
            });
        }
        let text = lines.next().transpose()?.ok_or(Error::Parse {
            line: 2,
            msg: "missing header".into(),
        })?;
        let header: ShotFileHeader = serde_json::from_str(&text).map_err(|e| Error::Parse {
            line: 2,
            msg: format!("bad header: {e}"),
        })?;
        header.validate().map_err(|e| Error::Parse {
            line: 2,
            msg: e.to_string(),
        })?;
        Ok(ShotReader {
            header,
            lines,
            line_no: 2,
        })
    }

    pub fn header(&self) -> &ShotFileHeader {
        &self.header
    }
}

impl<R: BufRead> Iterator for ShotReader<R> {
    type Item = Result<ShotRecord>;

    fn next(&mut self) -> Option<Self::Item> {
        loop {
            let line = match self.lines.next()? {
                Ok(l) => l,
                Err(e) => return Some(Err(e.into())),
            };
            self.line_no += 1;
            let line = line.trim_end_matches('\r');
            if line.is_empty() {
                continue;
            }
            return Some(self.header.parse_record(line, self.line_no));
        }
    }
}

/// Reads a whole file into memory.
pub fn read_shots(path: impl AsRef<Path>) -> Result<(ShotFileHeader, Vec<ShotRecord>)> {
    let reader = ShotReader::open(path)?;
    let header = reader.header().clone();
    let records = reader.collect::<Result<Vec<_>>>()?;
    Ok((header, records))
}

/// SIC digit strings of a record list, rejecting Pauli records.
pub fn sic_only(records: &[ShotRecord]) -> Result<Vec<SicShot>> {
    records
        .iter()
        .map(|r| {
            r.as_sic()
                .cloned()
                .ok_or_else(|| Error::invalid("expected SIC records"))
        })
        .collect()
}
