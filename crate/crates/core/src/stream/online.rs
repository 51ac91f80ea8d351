//! Online estimation: shots are buffered one report interval at a time, every
//! tracker ingests the interval (in parallel across trackers), and a report
//! is assembled once all trackers are done. Per-shot cost depends only on the
//! tracked subset sizes, never on the number of shots seen so far.

use std::time::Instant;

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::estimators::{renyi_from_purity, Estimate, FidelityTracker, PurityTracker};
use crate::povm::{SicFrame, SicShot};
use crate::qstate::{join_indices, Bipartition, PureState};
use crate::report::EstimateReport;

pub const DEFAULT_INTERVAL: u64 = 100;

#[derive(Clone, Debug)]
pub enum Quantity {
    Fidelity { label: String, target: PureState },
    Purity { subset: Vec<usize> },
    Renyi { part: Bipartition },
}

impl Quantity {
    fn n_qubits_hint(&self) -> Option<usize> {
        match self {
            Quantity::Fidelity { target, .. } => Some(target.n_qubits()),
            Quantity::Renyi { part } => Some(part.n_qubits()),
            Quantity::Purity { .. } => None,
        }
    }
}

/// Fires once every tracked value has moved by less than `tolerance`
/// (relative to its latest value) over the last `window` reports.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct StoppingRule {
    pub window: usize,
    pub tolerance: f64,
}

impl Default for StoppingRule {
    fn default() -> Self {
        StoppingRule {
            window: 5,
            tolerance: 0.01,
        }
    }
}

impl StoppingRule {
    pub fn new(window: usize, tolerance: f64) -> Result<Self> {
        if window < 2 {
            return Err(Error::invalid("stopping window must be at least 2"));
        }
        if !(tolerance > 0.0) {
            return Err(Error::invalid("stopping tolerance must be positive"));
        }
        Ok(StoppingRule { window, tolerance })
    }

    /// Largest relative change over the window, or `None` if the history is
    /// too short or contains undefined values.
    pub fn spread(&self, history: &[f64]) -> Option<f64> {
        if history.len() < self.window {
            return None;
        }
        let tail = &history[history.len() - self.window..];
        let last = *tail.last()?;
        if tail.iter().any(|v| !v.is_finite()) {
            return None;
        }
        let scale = last.abs().max(1e-12);
        Some(tail.iter().map(|v| (v - last).abs() / scale).fold(0.0, f64::max))
    }

    pub fn converged(&self, history: &[f64]) -> bool {
        self.spread(history).is_some_and(|s| s < self.tolerance)
    }
}

#[derive(Clone, Debug)]
pub struct OnlineConfig {
    pub quantities: Vec<Quantity>,
    /// Batch size for purity and Rényi trackers.
    pub batch: usize,
    /// Batch size for trackers on all qubits, when different.
    pub full_batch: Option<usize>,
    pub interval: u64,
    pub stopping: Option<StoppingRule>,
    pub max_shots: Option<u64>,
    pub parallel: bool,
}

impl OnlineConfig {
    pub fn new(quantities: Vec<Quantity>) -> Self {
        OnlineConfig {
            quantities,
            batch: 1,
            full_batch: None,
            interval: DEFAULT_INTERVAL,
            stopping: Some(StoppingRule::default()),
            max_shots: None,
            parallel: true,
        }
    }

    pub fn validate(&self, n_qubits: usize) -> Result<()> {
        if self.quantities.is_empty() {
            return Err(Error::invalid("at least one tracked quantity is required"));
        }
        if self.batch < 1 || self.full_batch == Some(0) {
            return Err(Error::invalid("batch size must be at least 1"));
        }
        if self.interval < 1 {
            return Err(Error::invalid("report interval must be at least 1 shot"));
        }
        for q in &self.quantities {
            if let Some(n) = q.n_qubits_hint() {
                if n != n_qubits {
                    return Err(Error::DimensionMismatch {
                        expected: n_qubits,
                        found: n,
                    });
                }
            }
            if let Quantity::Purity { subset } = q {
                crate::linalg::normalize_subset(subset, n_qubits)?;
            }
        }
        Ok(())
    }
}

enum Tracker {
    Fidelity(String, FidelityTracker),
    Purity(PurityTracker),
    Renyi(Bipartition, PurityTracker),
}

impl Tracker {
    fn ingest(&mut self, shots: &[SicShot]) {
        match self {
            Tracker::Fidelity(_, t) => shots.iter().for_each(|s| t.add(s)),
            Tracker::Purity(t) | Tracker::Renyi(_, t) => shots.iter().for_each(|s| t.add(s)),
        }
    }

    fn row(&self, shots: u64, wall_ms: f64) -> EstimateReport {
        let (quantity, subset, est) = match self {
            Tracker::Fidelity(label, t) => ("fidelity", label.clone(), t.estimate().ok()),
            Tracker::Purity(t) => ("purity", join_indices(t.subset()), t.estimate().ok()),
            Tracker::Renyi(part, t) => ("renyi2", part.label(), t.estimate().ok().map(renyi_from_purity)),
        };
        let est = est.unwrap_or(Estimate {
            value: f64::NAN,
            stderr: None,
        });
        EstimateReport {
            shots,
            method: "shadow".into(),
            quantity: quantity.into(),
            subset,
            value: est.value,
            stderr: est.stderr,
            wall_ms,
        }
    }
}

#[derive(Clone, Debug)]
pub struct IntervalReport {
    pub shots: u64,
    pub rows: Vec<EstimateReport>,
    /// Time spent updating trackers and assembling this report.
    pub analysis_ms: f64,
}

#[derive(Clone, Debug)]
pub struct OnlineOutcome {
    pub reports: Vec<IntervalReport>,
    pub shots: u64,
    /// True when the stopping rule fired before the source ran out.
    pub converged: bool,
}

impl OnlineOutcome {
    pub fn last_rows(&self) -> &[EstimateReport] {
        self.reports.last().map(|r| r.rows.as_slice()).unwrap_or(&[])
    }
}

/// Consumes `source` and emits a report every `cfg.interval` shots, plus a
/// final report for a trailing partial interval. `sink` sees each report as
/// soon as it is assembled.
pub fn run_online<I, F>(frame: &SicFrame, n_qubits: usize, source: I, cfg: &OnlineConfig, mut sink: F) -> Result<OnlineOutcome>
where
    I: IntoIterator<Item = Result<SicShot>>,
    F: FnMut(&IntervalReport) -> Result<()>,
{
    cfg.validate(n_qubits)?;
    let all: Vec<usize> = (0..n_qubits).collect();
    let mut trackers = cfg
        .quantities
        .iter()
        .map(|q| {
            Ok(match q {
                Quantity::Fidelity { label, target } => Tracker::Fidelity(label.clone(), FidelityTracker::new(frame, target)),
                Quantity::Purity { subset } => {
                    let mut s = subset.clone();
                    s.sort_unstable();
                    let b = if s == all { cfg.full_batch.unwrap_or(cfg.batch) } else { cfg.batch };
                    Tracker::Purity(PurityTracker::new(frame, &s, n_qubits, b)?)
                }
                Quantity::Renyi { part } => {
                    let side = part.smaller_side();
                    Tracker::Renyi(part.clone(), PurityTracker::new(frame, &side, n_qubits, cfg.batch)?)
                }
            })
        })
        .collect::<Result<Vec<_>>>()?;

    let start = Instant::now();
    let mut histories: Vec<Vec<f64>> = vec![Vec::new(); trackers.len()];
    let mut reports = Vec::new();
    let mut seen = 0u64;
    let mut buffer: Vec<SicShot> = Vec::with_capacity(cfg.interval as usize);
    let mut source = source.into_iter();
    let mut converged = false;
    loop {
        buffer.clear();
        while (buffer.len() as u64) < cfg.interval {
            if cfg.max_shots.is_some_and(|m| seen + buffer.len() as u64 >= m) {
                break;
            }
            match source.next() {
                Some(r) => {
                    let s = r?;
                    if s.n_qubits() != n_qubits {
                        return Err(Error::DimensionMismatch {
                            expected: n_qubits,
                            found: s.n_qubits(),
                        });
                    }
                    buffer.push(s);
                }
                None => break,
            }
        }
        if buffer.is_empty() {
            break;
        }
        let t0 = Instant::now();
        if cfg.parallel {
            trackers.par_iter_mut().for_each(|t| t.ingest(&buffer));
        } else {
            trackers.iter_mut().for_each(|t| t.ingest(&buffer));
        }
        seen += buffer.len() as u64;
        let wall = start.elapsed().as_secs_f64() * 1e3;
        let rows: Vec<EstimateReport> = trackers.iter().map(|t| t.row(seen, wall)).collect();
        let analysis_ms = t0.elapsed().as_secs_f64() * 1e3;
        for (h, r) in histories.iter_mut().zip(&rows) {
            h.push(r.value);
        }
        let report = IntervalReport {
            shots: seen,
            rows,
            analysis_ms,
        };
        sink(&report)?;
        reports.push(report);
        let full = buffer.len() as u64 == cfg.interval;
        if let Some(rule) = &cfg.stopping {
            if full && histories.iter().all(|h| rule.converged(h)) {
                converged = true;
                break;
            }
        }
        if !full {
            break;
        }
    }
    Ok(OnlineOutcome {
        reports,
        shots: seen,
        converged,
    })
}
