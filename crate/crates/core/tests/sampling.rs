use sicshadow::povm::{sample_sic_multinomial, sic_outcome_distribution, ShotSampler};
use sicshadow::qstate::random;
use sicshadow::{rng, SicFrame, SicShot};
use statrs::distribution::{ChiSquared, ContinuousCDF};

fn chi_square_p(counts: &[u64], probs: &[f64]) -> f64 {
    let m: u64 = counts.iter().sum();
    let mut stat = 0.0;
    let mut dof = 0usize;
    for (&k, &p) in counts.iter().zip(probs) {
        if p * m as f64 > 1e-9 {
            let e = p * m as f64;
            stat += (k as f64 - e).powi(2) / e;
            dof += 1;
        }
    }
    1.0 - ChiSquared::new((dof - 1) as f64).unwrap().cdf(stat)
}

fn histogram(shots: &[SicShot], n: usize) -> Vec<u64> {
    let mut h = vec![0u64; 1 << (2 * n)];
    for s in shots {
        h[s.index()] += 1;
    }
    h
}

#[test]
fn per_shot_and_multinomial_samplers_agree_with_the_outcome_law() {
    let f = SicFrame::standard();
    for seed in 0..3u64 {
        let mut r = rng::stream(seed, rng::streams::SAMPLING);
        let rho = random::random_state(2, &mut r);
        let dist = sic_outcome_distribution(&rho, &f).unwrap();
        let per_shot = ShotSampler::mixed(&rho).sample_sic_many(&f, 100_000, &mut r);
        let multinomial = sample_sic_multinomial(&dist, 100_000, &mut r);
        let p1 = chi_square_p(&histogram(&per_shot, 2), &dist.probabilities);
        let p2 = chi_square_p(&histogram(&multinomial, 2), &dist.probabilities);
        assert!(p1 > 0.001, "per-shot sampler p = {p1}");
        assert!(p2 > 0.001, "multinomial sampler p = {p2}");
    }
}

#[test]
fn pure_sampler_matches_its_density_operator() {
    let f = SicFrame::rotated();
    let mut r = rng::stream(11, rng::streams::SAMPLING);
    let psi = random::random_pure(3, &mut r);
    let dist = sic_outcome_distribution(&psi.to_density(), &f).unwrap();
    let shots = ShotSampler::pure(&psi).sample_sic_many(&f, 200_000, &mut r);
    assert!(chi_square_p(&histogram(&shots, 3), &dist.probabilities) > 0.001);
}

#[test]
fn sampling_is_reproducible() {
    let f = SicFrame::standard();
    let psi = random::random_pure(4, &mut rng::stream(1, rng::streams::STATE));
    let a = ShotSampler::pure(&psi).sample_sic_many(&f, 500, &mut rng::stream(9, rng::streams::SAMPLING));
    let b = ShotSampler::pure(&psi).sample_sic_many(&f, 500, &mut rng::stream(9, rng::streams::SAMPLING));
    assert_eq!(a, b);
}
