use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use anyhow::{bail, Context};
use sicshadow::budget::{self, BudgetQuery};
use sicshadow::povm::{sample_pauli_shots, ShotSampler};
use sicshadow::qstate::StateFile;
use sicshadow::reconstruct::{self, FrequencyFile, FrequencyVector, Method, MleOptions, Weights};
use sicshadow::report::{ReportFormat, ReportWriter};
use sicshadow::stream::experiment::{self, ExperimentConfig};
use sicshadow::stream::shotfile::{PovmLabel, MAGIC};
use sicshadow::stream::{game as sgame, run_online, OnlineConfig, ShotFileHeader, ShotReader, StoppingRule};
use sicshadow::{rng, verify as sverify, FrameName, PovmKind, ShotRecord, SicFrame, State};

use crate::manifest::RunManifest;
use crate::parse::{self, bad};
use crate::*;

/// Dense simulation limit.
pub const SIMULATE_CAP: usize = 12;

pub fn frame_of(f: FrameArg) -> SicFrame {
    match f {
        FrameArg::Standard => SicFrame::standard(),
        FrameArg::Rotated => SicFrame::rotated(),
    }
}

fn sampler_for(state: &State, depolarize: f64) -> sicshadow::Result<ShotSampler> {
    Ok(match state {
        State::Pure(p) if depolarize == 0.0 => ShotSampler::pure(p),
        _ => ShotSampler::mixed(&parse::depolarized(state, depolarize)?),
    })
}

fn writer(out: Option<&Path>) -> anyhow::Result<Box<dyn Write>> {
    Ok(match out {
        Some(p) => Box::new(BufWriter::new(
            File::create(p).with_context(|| format!("creating {}", p.display()))?,
        )),
        None => Box::new(BufWriter::new(std::io::stdout())),
    })
}

pub fn simulate(a: &SimulateArgs) -> anyhow::Result<u8> {
    let state = parse::load_state(&a.state)?;
    let n = state.n_qubits();
    if n > SIMULATE_CAP {
        return Err(sicshadow::Error::CapExceeded {
            what: "simulation",
            cap: SIMULATE_CAP,
            requested: n,
        }
        .into());
    }
    let frame = frame_of(a.frame);
    if a.exact_frequencies {
        let rho = parse::depolarized(&state, a.depolarize)?;
        let f = match a.povm {
            PovmArg::Sic => FrequencyVector::exact_sic(&rho, &frame)?,
            PovmArg::Pauli => FrequencyVector::exact_pauli(&rho)?,
        };
        FrequencyFile::from_vector(&f).save(&a.out)?;
    } else {
        let m = a.shots.ok_or_else(|| bad("--shots is required"))?;
        let sampler = sampler_for(&state, a.depolarize)?;
        let mut r = rng::stream(a.seed, rng::streams::SAMPLING);
        let (povm, frame_name, records): (_, _, Vec<ShotRecord>) = match a.povm {
            PovmArg::Sic => (
                PovmLabel::Sic,
                frame.name(),
                sampler.sample_sic_many(&frame, m, &mut r).into_iter().map(ShotRecord::Sic).collect(),
            ),
            PovmArg::Pauli => (
                PovmLabel::Pauli,
                FrameName::Standard,
                sample_pauli_shots(&sampler, m, &mut r).into_iter().map(ShotRecord::Pauli).collect(),
            ),
        };
        let header = ShotFileHeader {
            n_qubits: n,
            povm,
            frame: frame_name,
            seed: a.seed,
            batch: a.batch,
        };
        sicshadow::stream::write_shots(&a.out, &header, &records)?;
    }
    RunManifest::new("simulate", a, Some(a.seed)).write_for(&a.out)?;
    Ok(EXIT_OK)
}

pub fn estimate(a: &EstimateArgs) -> anyhow::Result<u8> {
    let reader = ShotReader::open(&a.input).with_context(|| format!("reading {}", a.input.display()))?;
    let header = reader.header().clone();
    if header.povm != PovmLabel::Sic {
        bail!(bad("shadow estimates need a SIC shot file"));
    }
    let n = header.n_qubits;
    let mut quantities = Vec::new();
    for q in &a.quantities {
        quantities.extend(parse::quantities(q, n)?);
    }
    for f in &a.fidelity {
        quantities.push(parse::fidelity(f)?);
    }
    for p in &a.purity {
        quantities.push(parse::purity(p, n)?);
    }
    for r in &a.renyi {
        quantities.extend(parse::renyi(r, n)?);
    }
    let mut cfg = OnlineConfig::new(quantities);
    cfg.batch = a.batch;
    cfg.full_batch = a.full_batch;
    cfg.interval = a.interval;
    cfg.max_shots = a.max_shots;
    cfg.stopping = if a.no_stop {
        None
    } else {
        Some(StoppingRule::new(a.window, a.tolerance)?)
    };
    cfg.validate(n)?;
    let format = match a.format {
        FormatArg::Csv => ReportFormat::Csv,
        FormatArg::Jsonl => ReportFormat::JsonLines,
    };
    let mut out = ReportWriter::new(writer(a.out.as_deref())?, format)?;
    let frame = header.frame()?;
    let source = reader.map(|r| {
        r.and_then(|rec| match rec {
            ShotRecord::Sic(s) => Ok(s),
            ShotRecord::Pauli(_) => Err(bad("unexpected Pauli record")),
        })
    });
    let outcome = run_online(&frame, n, source, &cfg, |rep| out.write_interval(&rep.rows))?;
    if let Some(p) = &a.out {
        RunManifest::new("estimate", a, Some(header.seed)).input(&a.input).write_for(p)?;
    }
    eprintln!(
        "{} shots, {} reports, {}",
        outcome.shots,
        outcome.reports.len(),
        if outcome.converged { "converged" } else { "shots exhausted" }
    );
    Ok(if outcome.converged { EXIT_OK } else { EXIT_EXHAUSTED })
}

fn is_shot_file(path: &Path) -> anyhow::Result<bool> {
    let mut first = String::new();
    BufReader::new(File::open(path).with_context(|| format!("reading {}", path.display()))?).read_line(&mut first)?;
    Ok(first.trim_end() == MAGIC)
}

fn load_frequencies(path: &Path) -> anyhow::Result<FrequencyVector> {
    if !is_shot_file(path)? {
        return Ok(FrequencyFile::load(path)?.to_vector()?);
    }
    let (header, records) = sicshadow::stream::read_shots(path)?;
    Ok(match header.povm_kind()? {
        PovmKind::Sic(frame) => {
            let shots = sicshadow::stream::shotfile::sic_only(&records)?;
            if shots.is_empty() {
                bail!(bad("shot file has no records"));
            }
            FrequencyVector::from_sic_shots(&frame, &shots)?
        }
        PovmKind::Pauli => {
            let shots = records
                .iter()
                .map(|r| match r {
                    ShotRecord::Pauli(p) => Ok(p.clone()),
                    ShotRecord::Sic(_) => Err(bad("unexpected SIC record")),
                })
                .collect::<sicshadow::Result<Vec<_>>>()?;
            FrequencyVector::from_pauli_shots(&shots)?
        }
    })
}

pub fn reconstruct(a: &ReconstructArgs) -> anyhow::Result<u8> {
    let method: Method = a.method.parse()?;
    let freqs = load_frequencies(&a.input)?;
    let opts = MleOptions {
        weights: match a.weights {
            WeightsArg::Identity => Weights::Identity,
            WeightsArg::Multinomial => Weights::Multinomial,
        },
        max_iter: a.max_iter,
        tol: a.tol,
    };
    let res = reconstruct::reconstruct(&freqs, method, &opts)?;
    if matches!(method, Method::Pls | Method::Mle) {
        res.density()?;
    }
    StateFile::from_matrix(&res.estimate)
        .with_metadata(res.metadata(freqs.total_shots()))
        .save(&a.out)?;
    RunManifest::new("reconstruct", a, None).input(&a.input).write_for(&a.out)?;
    Ok(EXIT_OK)
}

pub fn budget(a: &BudgetArgs) -> anyhow::Result<u8> {
    let mut q = BudgetQuery::new(a.k, a.l, a.epsilon, a.delta);
    if let Some(b) = a.hs_norm_sq {
        q = q.with_hs_norm_sq(b);
    }
    let (shots, warning) = match a.kind {
        BudgetKind::Observable => (budget::observable_budget(&q)?, q.hs_warning()),
        BudgetKind::Purity => (budget::purity_budget(&q)?, None),
    };
    if let Some(w) = &warning {
        eprintln!("warning: {w}");
    }
    let line = serde_json::json!({
        "kind": a.kind,
        "k": a.k,
        "l": a.l,
        "epsilon": a.epsilon,
        "delta": a.delta,
        "hs_norm_sq": a.hs_norm_sq,
        "shots": shots,
        "warning": warning,
    });
    println!("{line}");
    Ok(EXIT_OK)
}

pub fn game(a: &GameArgs) -> anyhow::Result<u8> {
    if a.trials == 0 {
        bail!(bad("need at least one trial"));
    }
    let mut out = writer(a.out.as_deref())?;
    let mut correct = 0usize;
    let mut shots = Vec::with_capacity(a.trials);
    for t in 0..a.trials {
        let seed = if a.trials == 1 { a.seed } else { rng::derive_seed(a.seed, t as u64) };
        let g = sgame::run_game(seed, a.gap_window, a.shot_cap)?;
        correct += g.correct() as usize;
        shots.push(g.shots as f64);
        let mut obj = serde_json::json!({
            "trial": t,
            "seed": seed,
            "secret": g.secret,
            "winner": g.winner,
            "correct": g.correct(),
            "shots": g.shots,
            "gap_window": g.gap_window,
        });
        if a.transcript {
            obj["transcript"] = serde_json::to_value(&g.transcript)?;
        }
        writeln!(out, "{obj}")?;
    }
    out.flush()?;
    let med = sicshadow::estimators::median(&mut shots);
    eprintln!(
        "{correct}/{} correct, median shots to declare {med}",
        a.trials
    );
    if let Some(p) = &a.out {
        RunManifest::new("game", a, Some(a.seed)).write_for(p)?;
    }
    Ok(EXIT_OK)
}

pub fn parse_methods(s: &str) -> anyhow::Result<Vec<Method>> {
    Ok(s.split(',').map(|m| m.trim().parse::<Method>()).collect::<sicshadow::Result<Vec<_>>>()?)
}

pub fn experiment(a: &ExperimentArgs) -> anyhow::Result<u8> {
    let state = parse::load_state(&a.state)?;
    let rho = parse::depolarized(&state, a.depolarize)?;
    let frame = frame_of(a.frame);
    let shots: Vec<u64> = parse::list(&a.shots, "shot count")?;
    let mut out = writer(a.out.as_deref())?;
    match a.mode {
        ExperimentMode::Convergence => {
            let target = match (&a.target, &state) {
                (Some(t), _) => Some(parse::load_pure(t)?),
                (None, State::Pure(p)) => Some(p.clone()),
                (None, State::Mixed(_)) => None,
            };
            let cfg = ExperimentConfig {
                shots,
                repetitions: a.reps,
                seed: a.seed,
                methods: parse_methods(&a.methods)?,
                mle: MleOptions::default(),
            };
            let rows = experiment::convergence_experiment(&rho, target.as_ref(), &frame, &cfg)?;
            writeln!(out, "rep,shots,method,quantity,value,wall_ms")?;
            for r in &rows {
                writeln!(out, "{},{},{},{},{},{:.3}", r.rep, r.shots, r.method, r.quantity, r.value, r.wall_ms)?;
            }
        }
        ExperimentMode::Batching => {
            let batches: Vec<usize> = parse::list(&a.batches, "batch size")?;
            let cells = experiment::batching_grid(&rho, &frame, &shots, &batches, a.reps, a.seed)?;
            writeln!(out, "shots,batch,mean,std")?;
            for c in &cells {
                writeln!(out, "{},{},{},{}", c.shots, c.batch, c.mean, c.std)?;
            }
        }
    }
    out.flush()?;
    if let Some(p) = &a.out {
        RunManifest::new("experiment", a, Some(a.seed)).write_for(p)?;
    }
    Ok(EXIT_OK)
}

pub fn verify(a: &VerifyArgs) -> anyhow::Result<u8> {
    let checks = sverify::run_checks(a.seed);
    let mut all = true;
    for c in &checks {
        println!("{} {}: {}", if c.passed { "PASS" } else { "FAIL" }, c.name, c.detail);
        all &= c.passed;
    }
    Ok(if all { EXIT_OK } else { EXIT_FAILED })
}
