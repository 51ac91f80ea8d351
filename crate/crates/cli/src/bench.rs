//! Wall-time of each reconstruction method versus qubit count.

use std::io::Write;
use std::time::Instant;

use anyhow::bail;
use sicshadow::povm::ShotSampler;
use sicshadow::qstate::random;
use sicshadow::reconstruct::{self, FrequencyVector, Method, MleOptions, MLE_CAP};
use sicshadow::shadows::ShadowAccumulator;
use sicshadow::{rng, SicFrame, SicShot};

use crate::commands::parse_methods;
use crate::manifest::RunManifest;
use crate::parse::bad;
use crate::{BenchArgs, EXIT_OK};

#[derive(Debug, Clone)]
pub struct Timing {
    pub n_qubits: usize,
    pub method: Method,
    pub rep: usize,
    pub wall_ms: f64,
}

fn time_method(frame: &SicFrame, shots: &[SicShot], n: usize, method: Method) -> anyhow::Result<f64> {
    let t0 = Instant::now();
    match method {
        Method::ShadowMean => {
            let all: Vec<usize> = (0..n).collect();
            let mut acc = ShadowAccumulator::new(frame, &all, n)?;
            shots.iter().for_each(|s| acc.add(s));
            std::hint::black_box(acc.mean()?);
        }
        Method::LinInv => {
            let f = FrequencyVector::from_sic_shots(frame, shots)?;
            std::hint::black_box(reconstruct::lininv_dense(&f)?);
        }
        Method::Pls => {
            let f = FrequencyVector::from_sic_shots(frame, shots)?;
            let est = reconstruct::lininv_dense(&f)?.estimate;
            std::hint::black_box(reconstruct::pls(&est)?);
        }
        Method::Mle => {
            let f = FrequencyVector::from_sic_shots(frame, shots)?;
            std::hint::black_box(reconstruct::mle(&f, &MleOptions::default())?);
        }
    }
    Ok(t0.elapsed().as_secs_f64() * 1e3)
}

pub fn median(v: &[f64]) -> f64 {
    let mut s = v.to_vec();
    sicshadow::estimators::median(&mut s)
}

/// Least-squares slope of `log2(t)` against N.
pub fn log2_slope(points: &[(usize, f64)]) -> f64 {
    let k = points.len() as f64;
    let mx = points.iter().map(|p| p.0 as f64).sum::<f64>() / k;
    let my = points.iter().map(|p| p.1.log2()).sum::<f64>() / k;
    let sxy: f64 = points.iter().map(|p| (p.0 as f64 - mx) * (p.1.log2() - my)).sum();
    let sxx: f64 = points.iter().map(|p| (p.0 as f64 - mx).powi(2)).sum();
    sxy / sxx
}

pub fn run(a: &BenchArgs) -> anyhow::Result<u8> {
    if a.min_qubits < 1 || a.min_qubits > a.max_qubits || a.reps < 1 || a.shots < 2 {
        bail!(bad("need 1 <= min-qubits <= max-qubits, reps >= 1 and shots >= 2"));
    }
    let methods = parse_methods(&a.methods)?;
    let frame = SicFrame::standard();
    let mut timings = Vec::new();
    for n in a.min_qubits..=a.max_qubits {
        let mut r = rng::substream(a.seed, rng::streams::SAMPLING, n as u64);
        let psi = random::random_pure(n, &mut r);
        let shots = ShotSampler::pure(&psi).sample_sic_many(&frame, a.shots, &mut r);
        for &m in &methods {
            if m == Method::Mle && n > MLE_CAP {
                continue;
            }
            if matches!(m, Method::LinInv | Method::Pls) && n > reconstruct::DENSE_LININV_CAP {
                continue;
            }
            for rep in 0..a.reps {
                timings.push(Timing {
                    n_qubits: n,
                    method: m,
                    rep,
                    wall_ms: time_method(&frame, &shots, n, m)?,
                });
            }
        }
    }
    let mut out: Box<dyn Write> = match &a.out {
        Some(p) => Box::new(std::io::BufWriter::new(std::fs::File::create(p)?)),
        None => Box::new(std::io::stdout()),
    };
    writeln!(out, "n_qubits,method,shots,rep,wall_ms")?;
    for t in &timings {
        writeln!(out, "{},{},{},{},{:.4}", t.n_qubits, t.method, a.shots, t.rep, t.wall_ms)?;
    }
    out.flush()?;
    summarize(&timings, &methods, a.max_qubits);
    if let Some(p) = &a.out {
        RunManifest::new("bench", a, Some(a.seed)).write_for(p)?;
    }
    Ok(EXIT_OK)
}

fn cell(timings: &[Timing], n: usize, m: Method) -> Vec<f64> {
    timings
        .iter()
        .filter(|t| t.n_qubits == n && t.method == m)
        .map(|t| t.wall_ms)
        .collect()
}

fn summarize(timings: &[Timing], methods: &[Method], max_n: usize) {
    for &m in methods {
        let pts: Vec<(usize, f64)> = (1..=max_n)
            .filter_map(|n| {
                let c = cell(timings, n, m);
                (!c.is_empty()).then(|| (n, median(&c)))
            })
            .collect();
        if pts.len() >= 2 {
            eprintln!("{m}: log2 time slope per qubit {:.2}", log2_slope(&pts));
        }
        for (n, med) in &pts {
            let c = cell(timings, *n, m);
            let spread = c.iter().map(|v| (v - med).abs()).fold(0.0, f64::max) / med;
            eprintln!("  N={n} median {med:.3} ms, max deviation {:.0}%", 100.0 * spread);
        }
    }
    let s = cell(timings, max_n, Method::ShadowMean);
    let l = cell(timings, max_n, Method::LinInv);
    if !s.is_empty() && !l.is_empty() {
        eprintln!(
            "N={max_n}: lininv/shadow-mean time ratio {:.1}",
            median(&l) / median(&s)
        );
    }
}
