//! State-identification game: one of the 16 sign-labelled 4-qubit linear
//! cluster states is prepared at random and SIC shots are streamed until the
//! shadow fidelities single out one candidate.

use rand::Rng;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::estimators::pure_shadow_overlap;
use crate::linalg::C64;
use crate::povm::{ShotSampler, SicFrame};
use crate::qstate::library::{make_linear_cluster, Sign};
use crate::qstate::PureState;
use crate::rng;
use crate::shadows::ShadowTable;

pub const GAME_QUBITS: usize = 4;
pub const DEFAULT_SHOT_CAP: u64 = 10_000;

pub fn candidates() -> Vec<PureState> {
    Sign::all(GAME_QUBITS)
        .iter()
        .map(|s| make_linear_cluster(s).expect("four signs"))
        .collect()
}

#[derive(Clone, Copy, Debug, Serialize)]
pub struct GameStep {
    pub shot: u64,
    pub leader: usize,
    /// Top fidelity minus the best other; ties give zero.
    pub gap: f64,
    pub streak: usize,
}

#[derive(Clone, Debug, Serialize)]
pub struct GameResult {
    pub secret: usize,
    pub winner: Option<usize>,
    pub shots: u64,
    pub gap_window: usize,
    pub transcript: Vec<GameStep>,
}

impl GameResult {
    pub fn correct(&self) -> bool {
        self.winner == Some(self.secret)
    }
}

/// Declares the leader once it has kept a positive gap for `gap_window`
/// consecutive shots.
pub fn run_game(seed: u64, gap_window: usize, shot_cap: u64) -> Result<GameResult> {
    run_game_with(&SicFrame::standard(), &candidates(), seed, gap_window, shot_cap)
}

pub fn run_game_with(
    frame: &SicFrame,
    cands: &[PureState],
    seed: u64,
    gap_window: usize,
    shot_cap: u64,
) -> Result<GameResult> {
    if gap_window < 1 {
        return Err(Error::invalid("gap window must be at least 1"));
    }
    if cands.len() < 2 {
        return Err(Error::invalid("the game needs at least two candidates"));
    }
    let mut r = rng::stream(seed, rng::streams::GAME);
    let secret = r.random_range(0..cands.len());
    let sampler = ShotSampler::pure(&cands[secret]);
    let table = ShadowTable::new(frame);
    let mut sums = vec![0.0; cands.len()];
    let mut scratch: Vec<C64> = Vec::new();
    let mut transcript = Vec::new();
    let mut streak = 0usize;
    let mut last_leader = usize::MAX;
    for shot in 1..=shot_cap {
        let s = sampler.sample_sic(frame, &mut r);
        for (acc, c) in sums.iter_mut().zip(cands) {
            *acc += pure_shadow_overlap(&table, &s.digits, c.amplitudes(), &mut scratch);
        }
        let (leader, gap) = leader_and_gap(&sums, shot as f64);
        if gap > 0.0 && leader == last_leader {
            streak += 1;
        } else if gap > 0.0 {
            streak = 1;
        } else {
            streak = 0;
        }
        last_leader = leader;
        transcript.push(GameStep {
            shot,
            leader,
            gap,
            streak,
        });
        if streak >= gap_window {
            return Ok(GameResult {
                secret,
                winner: Some(leader),
                shots: shot,
                gap_window,
                transcript,
            });
        }
    }
    Ok(GameResult {
        secret,
        winner: None,
        shots: shot_cap,
        gap_window,
        transcript,
    })
}

fn leader_and_gap(sums: &[f64], m: f64) -> (usize, f64) {
    let mut best = 0;
    for (i, &v) in sums.iter().enumerate() {
        if v > sums[best] {
            best = i;
        }
    }
    let second = sums
        .iter()
        .enumerate()
        .filter(|&(i, _)| i != best)
        .map(|(_, &v)| v)
        .fold(f64::NEG_INFINITY, f64::max);
    (best, (sums[best] - second) / m)
}
