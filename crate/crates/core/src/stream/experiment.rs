//! Convergence experiments on simulated data: every method's estimate of
//! the tracked quantities versus shot count, and the shots x batch-size grid
//! of purity standard deviations.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::estimators::{estimate_purity, FidelityTracker};
use crate::povm::{ShotSampler, SicFrame};
use crate::qstate::{fidelity_with_pure, purity_of, DensityOperator, PureState};
use crate::reconstruct::{self, FrequencyVector, Method, MleOptions};
use crate::rng;

/// MLE is run only up to this many qubits in experiments.
pub const EXPERIMENT_MLE_CAP: usize = 3;
pub const EXPERIMENT_QUBIT_CAP: usize = 6;

#[derive(Clone, Debug, Serialize)]
pub struct ExperimentRow {
    pub rep: usize,
    pub shots: u64,
    pub method: String,
    pub quantity: String,
    pub value: f64,
    pub wall_ms: f64,
}

#[derive(Clone, Debug)]
pub struct ExperimentConfig {
    pub shots: Vec<u64>,
    pub repetitions: usize,
    pub seed: u64,
    pub methods: Vec<Method>,
    pub mle: MleOptions,
}

/// For each shot count and repetition: fidelity to `target` (if given) and
/// purity under every method.
pub fn convergence_experiment(
    rho: &DensityOperator,
    target: Option<&PureState>,
    frame: &SicFrame,
    cfg: &ExperimentConfig,
) -> Result<Vec<ExperimentRow>> {
    let n = rho.n_qubits();
    if n > EXPERIMENT_QUBIT_CAP {
        return Err(Error::CapExceeded {
            what: "convergence experiment",
            cap: EXPERIMENT_QUBIT_CAP,
            requested: n,
        });
    }
    if cfg.shots.iter().any(|&m| m < 2) || cfg.repetitions < 1 {
        return Err(Error::invalid("need at least 2 shots and 1 repetition"));
    }
    let sampler = ShotSampler::mixed(rho);
    let all: Vec<usize> = (0..n).collect();
    let mut rows = Vec::new();
    for (gi, &m) in cfg.shots.iter().enumerate() {
        for rep in 0..cfg.repetitions {
            let mut r = rng::substream(cfg.seed, rng::streams::EXPERIMENT, (gi * cfg.repetitions + rep) as u64);
            let shots = sampler.sample_sic_many(frame, m, &mut r);
            let freqs = FrequencyVector::from_sic_shots(frame, &shots)?;
            for &method in &cfg.methods {
                let t0 = std::time::Instant::now();
                let mut push = |quantity: &str, value: f64| {
                    rows.push(ExperimentRow {
                        rep,
                        shots: m,
                        method: method_label(method).into(),
                        quantity: quantity.into(),
                        value,
                        wall_ms: t0.elapsed().as_secs_f64() * 1e3,
                    })
                };
                if method == Method::ShadowMean {
                    if let Some(t) = target {
                        let mut ft = FidelityTracker::new(frame, t);
                        shots.iter().for_each(|s| ft.add(s));
                        push("fidelity", ft.estimate()?.value);
                    }
                    push("purity", estimate_purity(frame, &shots, &all, 1)?.value);
                    continue;
                }
                if method == Method::Mle && n > EXPERIMENT_MLE_CAP {
                    continue;
                }
                let est = reconstruct::reconstruct(&freqs, method, &cfg.mle)?.estimate;
                if let Some(t) = target {
                    push("fidelity", fidelity_with_pure(&est, t)?);
                }
                push("purity", purity_of(&est));
            }
        }
    }
    Ok(rows)
}

fn method_label(m: Method) -> &'static str {
    match m {
        Method::ShadowMean => "shadow",
        Method::LinInv => "lininv",
        Method::Pls => "pls",
        Method::Mle => "mle",
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct BatchingCell {
    pub shots: u64,
    pub batch: usize,
    pub mean: f64,
    pub std: f64,
}

/// Standard deviation over repetitions of the full-system batched purity
/// estimate on every (shots, batch) cell.
pub fn batching_grid(
    rho: &DensityOperator,
    frame: &SicFrame,
    shots: &[u64],
    batches: &[usize],
    repetitions: usize,
    seed: u64,
) -> Result<Vec<BatchingCell>> {
    if repetitions < 2 {
        return Err(Error::invalid("a standard deviation needs at least 2 repetitions"));
    }
    let n = rho.n_qubits();
    let all: Vec<usize> = (0..n).collect();
    let sampler = ShotSampler::mixed(rho);
    let mut out = Vec::new();
    for (gi, &m) in shots.iter().enumerate() {
        let data: Vec<_> = (0..repetitions)
            .map(|rep| {
                let mut r = rng::substream(seed, rng::streams::EXPERIMENT, (gi * repetitions + rep) as u64);
                sampler.sample_sic_many(frame, m, &mut r)
            })
            .collect();
        for &b in batches {
            if (m as usize) / b < 2 {
                continue;
            }
            let vals = data
                .iter()
                .map(|d| estimate_purity(frame, d, &all, b).map(|e| e.value))
                .collect::<Result<Vec<f64>>>()?;
            let k = vals.len() as f64;
            let mean = vals.iter().sum::<f64>() / k;
            let std = (vals.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (k - 1.0)).sqrt();
            out.push(BatchingCell { shots: m, batch: b, mean, std });
        }
    }
    Ok(out)
}

/// Spearman rank correlation (average ranks on ties).
pub fn spearman(x: &[f64], y: &[f64]) -> f64 {
    let rx = ranks(x);
    let ry = ranks(y);
    let n = x.len() as f64;
    let mx = rx.iter().sum::<f64>() / n;
    let my = ry.iter().sum::<f64>() / n;
    let cov: f64 = rx.iter().zip(&ry).map(|(a, b)| (a - mx) * (b - my)).sum();
    let vx: f64 = rx.iter().map(|a| (a - mx).powi(2)).sum();
    let vy: f64 = ry.iter().map(|b| (b - my).powi(2)).sum();
    cov / (vx * vy).sqrt()
}

fn ranks(v: &[f64]) -> Vec<f64> {
    let mut idx: Vec<usize> = (0..v.len()).collect();
    idx.sort_by(|&a, &b| v[a].total_cmp(&v[b]));
    let mut out = vec![0.0; v.len()];
    let mut i = 0;
    while i < idx.len() {
        let mut j = i;
        while j + 1 < idx.len() && v[idx[j + 1]] == v[idx[i]] {
            j += 1;
        }
        let r = (i + j) as f64 / 2.0 + 1.0;
        for &k in &idx[i..=j] {
            out[k] = r;
        }
        i = j + 1;
    }
    out
}

/// Largest pairwise gap between methods for each (rep, shots, quantity).
pub fn max_method_gap(rows: &[ExperimentRow]) -> f64 {
    let mut worst: f64 = 0.0;
    for a in rows {
        for b in rows {
            if a.rep == b.rep && a.shots == b.shots && a.quantity == b.quantity {
                worst = worst.max((a.value - b.value).abs());
            }
        }
    }
    worst
}


#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn spearman_of_monotone_data() {
        assert!((spearman(&[1.0, 2.0, 3.0], &[10.0, 5.0, 1.0]) + 1.0).abs() < 1e-12);
        assert!((spearman(&[1.0, 2.0, 3.0], &[1.0, 2.0, 2.0]) - 0.866025403784).abs() < 1e-9);
    }
}
