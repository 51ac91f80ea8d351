//! Fixtures shared by the criterion benchmarks.

use sicshadow::povm::ShotSampler;
use sicshadow::qstate::random;
use sicshadow::reconstruct::FrequencyVector;
use sicshadow::{rng, SicFrame, SicShot};

pub const BENCH_SEED: u64 = 0x5eed;

/// `m` SIC shots of a seeded random pure state on `n` qubits.
pub fn shots(n: usize, m: u64) -> Vec<SicShot> {
    let mut r = rng::substream(BENCH_SEED, rng::streams::SAMPLING, n as u64);
    let psi = random::random_pure(n, &mut r);
    ShotSampler::pure(&psi).sample_sic_many(&SicFrame::standard(), m, &mut r)
}

pub fn frequencies(n: usize, m: u64) -> FrequencyVector {
    FrequencyVector::from_sic_shots(&SicFrame::standard(), &shots(n, m)).expect("non-empty shots")
}

#[cfg(test)]
mod tests {
    #[test]
    fn fixtures_are_deterministic() {
        assert_eq!(super::shots(3, 50), super::shots(3, 50));
        assert_eq!(super::frequencies(2, 100).total_shots(), 100);
    }
}
