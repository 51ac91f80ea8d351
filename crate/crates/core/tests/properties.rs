//! Property tests for the library invariants. Random states come from a
//! seeded generator driven by proptest-chosen seeds.

use proptest::prelude::*;
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use sicshadow::budget::{self, BudgetQuery};
use sicshadow::estimators::{estimate_purity, ObservableSpec, PurityTracker};
use sicshadow::linalg::{self, c};
use sicshadow::povm::{sic_outcome_distribution, ShotSampler};
use sicshadow::qstate::{pauli_decompose, pauli_reconstruct, purity_of, random};
use sicshadow::reconstruct::{self, FrequencyVector, MleOptions};
use sicshadow::shadows::{shadow_expand, ShadowAccumulator, ShadowTable};
use sicshadow::{Bipartition, CMatrix, DensityOperator, SicFrame, SicShot};

fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

fn frame(rotated: bool) -> SicFrame {
    if rotated {
        SicFrame::rotated()
    } else {
        SicFrame::standard()
    }
}

fn subset_of(mask: u32, n: usize) -> Vec<usize> {
    (0..n).filter(|q| mask & (1 << q) != 0).collect()
}

fn config() -> ProptestConfig {
    ProptestConfig {
        cases: 32,
        ..ProptestConfig::default()
    }
}

proptest! {
    #![proptest_config(config())]

    #[test]
    fn random_states_are_valid_density_operators(seed in any::<u64>(), n in 1usize..=4, rank in 1usize..=4) {
        let rho = random::random_density(n, rank, &mut rng(seed));
        prop_assert!(DensityOperator::new(rho.matrix().clone()).is_ok());
    }

    #[test]
    fn partial_trace_is_linear_in_mixtures(seed in any::<u64>(), n in 2usize..=4, mask in 1u32..15, w in 0.0f64..1.0) {
        let mut r = rng(seed);
        let keep = subset_of(mask, n);
        prop_assume!(!keep.is_empty());
        let a = random::random_state(n, &mut r);
        let b = random::random_state(n, &mut r);
        let lhs = a.mix(&b, w).unwrap().partial_trace(&keep).unwrap();
        let rhs = a.partial_trace(&keep).unwrap().mix(&b.partial_trace(&keep).unwrap(), w).unwrap();
        prop_assert!(linalg::max_abs_diff(lhs.matrix(), rhs.matrix()) < 1e-12);
    }

    #[test]
    fn partial_transpose_keeps_purity_and_negativity_is_symmetric(seed in any::<u64>(), n in 2usize..=4, mask in 1u32..15) {
        let rho = random::random_state(n, &mut rng(seed));
        let side = subset_of(mask, n);
        prop_assume!(!side.is_empty() && side.len() < n);
        let part = Bipartition::new(&side, n).unwrap();
        let pt = rho.partial_transpose(&part).unwrap();
        prop_assert!((purity_of(&pt) - rho.purity()).abs() < 1e-12);
        let a = rho.negativity(&part).unwrap();
        let b = rho.negativity(&part.flipped()).unwrap();
        prop_assert!((a - b).abs() < 1e-10);
    }

    #[test]
    fn pauli_decomposition_round_trips(seed in any::<u64>(), n in 1usize..=3) {
        let h = random::random_hermitian(n, &mut rng(seed));
        let back = pauli_reconstruct(&pauli_decompose(&h).unwrap(), n).unwrap();
        prop_assert!(linalg::max_abs_diff(&h, &back) < 1e-12);
    }

    #[test]
    fn outcome_distribution_is_a_probability_vector(seed in any::<u64>(), n in 1usize..=3, rot in any::<bool>()) {
        let rho = random::random_state(n, &mut rng(seed));
        let d = sic_outcome_distribution(&rho, &frame(rot)).unwrap();
        prop_assert!(d.probabilities.iter().all(|&p| p >= 0.0));
        prop_assert!((d.probabilities.iter().sum::<f64>() - 1.0).abs() < 1e-10);
    }

    #[test]
    fn marginal_shadow_is_partial_trace(digits in prop::collection::vec(0u8..4, 1..=4), mask in 1u32..15, rot in any::<bool>()) {
        let n = digits.len();
        let sub = subset_of(mask, n);
        prop_assume!(!sub.is_empty());
        let f = frame(rot);
        let s = SicShot::new(digits).unwrap();
        let all: Vec<usize> = (0..n).collect();
        let full = shadow_expand(&f, &s, &all).unwrap();
        let traced = linalg::partial_trace(&full, n, &sub).unwrap();
        prop_assert!(linalg::max_abs_diff(&traced, &shadow_expand(&f, &s, &sub).unwrap()) < 1e-12);
    }

    #[test]
    fn shadow_overlaps_are_products_of_five_and_minus_one(a in prop::collection::vec(0u8..4, 1..=4), b_seed in any::<u64>(), rot in any::<bool>()) {
        let n = a.len();
        let mut r = rng(b_seed);
        let b: Vec<u8> = (0..n).map(|_| rand::Rng::random_range(&mut r, 0..4u8)).collect();
        let f = frame(rot);
        let all: Vec<usize> = (0..n).collect();
        let sa = shadow_expand(&f, &SicShot::new(a.clone()).unwrap(), &all).unwrap();
        let sb = shadow_expand(&f, &SicShot::new(b.clone()).unwrap(), &all).unwrap();
        let want: f64 = a.iter().zip(&b).map(|(x, y)| if x == y { 5.0 } else { -1.0 }).product();
        prop_assert!((linalg::trace_product(&sa, &sb).re - want).abs() < 1e-10);
        prop_assert_eq!(ShadowTable::pair_overlap(&a, &b, &all), want);
    }

    #[test]
    fn accumulator_ignores_record_order(seed in any::<u64>(), n in 1usize..=3) {
        let mut r = rng(seed);
        let f = SicFrame::standard();
        let rho = random::random_state(n, &mut r);
        let mut shots = ShotSampler::mixed(&rho).sample_sic_many(&f, 200, &mut r);
        let all: Vec<usize> = (0..n).collect();
        let mut a = ShadowAccumulator::new(&f, &all, n).unwrap();
        shots.iter().for_each(|s| a.add(s));
        shots.shuffle(&mut r);
        let mut b = ShadowAccumulator::new(&f, &all, n).unwrap();
        shots.iter().for_each(|s| b.add(s));
        for (x, y) in a.running_sum().iter().zip(b.running_sum()) {
            prop_assert!((x - y).abs() < 1e-12);
        }
    }

    #[test]
    fn streaming_purity_matches_pair_sum(seed in any::<u64>(), n in 1usize..=3, batch in 1usize..=4, m in 8u64..80) {
        let mut r = rng(seed);
        let f = SicFrame::standard();
        let rho = random::random_state(n, &mut r);
        let shots = ShotSampler::mixed(&rho).sample_sic_many(&f, m, &mut r);
        let all: Vec<usize> = (0..n).collect();
        let batches = sicshadow::shadows::batch(&f, &shots, &all, batch).unwrap();
        prop_assume!(batches.len() >= 2);
        let k = batches.len();
        let mut naive = 0.0;
        for i in 0..k {
            for j in 0..k {
                if i != j {
                    naive += linalg::dot(&batches[i].coords, &batches[j].coords);
                }
            }
        }
        naive /= (k * (k - 1)) as f64;
        let v = estimate_purity(&f, &shots, &all, batch).unwrap().value;
        prop_assert!((v - naive).abs() < 1e-9);
        let mut shuffled = shots.clone();
        shuffled.shuffle(&mut r);
        if batch == 1 {
            let w = estimate_purity(&f, &shuffled, &all, 1).unwrap().value;
            prop_assert!((v - w).abs() < 1e-9);
        }
    }

    #[test]
    fn linear_estimator_is_unbiased(seed in any::<u64>(), n in 1usize..=3) {
        let mut r = rng(seed);
        let f = SicFrame::standard();
        let rho = random::random_state(n, &mut r);
        let o = random::random_hermitian(n, &mut r);
        let all: Vec<usize> = (0..n).collect();
        let obs = ObservableSpec::new(&all, o.clone(), "o").unwrap();
        let (mean, var) = budget::exact_linear_moments(&rho, &obs, &f).unwrap();
        prop_assert!((mean - linalg::trace_product(&o, rho.matrix()).re).abs() < 1e-10);
        let shifted = ObservableSpec::new(&all, &o + linalg::identity(1 << n) * c(0.7, 0.0), "o+c").unwrap();
        let (mean2, var2) = budget::exact_linear_moments(&rho, &shifted, &f).unwrap();
        prop_assert!((mean2 - mean - 0.7).abs() < 1e-10);
        prop_assert!((var2 - var).abs() < 1e-9 * var.max(1.0));
    }

    #[test]
    fn renyi_sides_agree_in_expectation(seed in any::<u64>()) {
        let f = SicFrame::standard();
        let rho = random::random_state(2, &mut rng(seed));
        let a = rho.partial_trace(&[0]).unwrap();
        let b = rho.partial_trace(&[1]).unwrap();
        let (ea, _) = budget::exact_quadratic_moments(&a, &f).unwrap();
        let (eb, _) = budget::exact_quadratic_moments(&b, &f).unwrap();
        prop_assert!((ea - a.purity()).abs() < 1e-10);
        prop_assert!((eb - b.purity()).abs() < 1e-10);
        // a pure global state has equal reduced purities
        let psi = random::random_pure(2, &mut rng(seed ^ 1)).to_density();
        let (pa, _) = budget::exact_quadratic_moments(&psi.partial_trace(&[0]).unwrap(), &f).unwrap();
        let (pb, _) = budget::exact_quadratic_moments(&psi.partial_trace(&[1]).unwrap(), &f).unwrap();
        prop_assert!((pa - pb).abs() < 1e-10);
    }

    #[test]
    fn pls_is_an_idempotent_projection(seed in any::<u64>(), n in 1usize..=3) {
        let mut r = rng(seed);
        let h = random::random_hermitian(n, &mut r);
        let p = reconstruct::pls(&h).unwrap();
        let pp = reconstruct::pls(p.matrix()).unwrap();
        prop_assert!(linalg::max_abs_diff(p.matrix(), pp.matrix()) < 1e-12);
        for _ in 0..20 {
            let sigma = random::random_state(n, &mut r);
            let before = linalg::frobenius(&(&h - sigma.matrix()));
            let after = linalg::frobenius(&(p.matrix() - sigma.matrix()));
            prop_assert!(after <= before + 1e-12);
        }
        let unit = &h - linalg::identity(1 << n) * c((linalg::trace(&h).re - 1.0) / (1 << n) as f64, 0.0);
        let pu = reconstruct::pls(&unit).unwrap();
        prop_assert!((linalg::trace(pu.matrix()).re - 1.0).abs() < 1e-12);
    }

    #[test]
    fn lininv_is_linear(seed in any::<u64>(), n in 1usize..=3, alpha in 0.0f64..1.0) {
        let mut r = rng(seed);
        let f = SicFrame::standard();
        let d = 1usize << (2 * n);
        let counts = |r: &mut ChaCha8Rng| -> Vec<u64> { (0..d).map(|_| rand::Rng::random_range(r, 1..20)).collect() };
        let a = FrequencyVector::from_sic_counts(&f, n, &counts(&mut r)).unwrap();
        let b = FrequencyVector::from_sic_counts(&f, n, &counts(&mut r)).unwrap();
        let mixed: Vec<f64> = a.frequencies.iter().zip(&b.frequencies).map(|(x, y)| alpha * x + (1.0 - alpha) * y).collect();
        let m = FrequencyVector::new(a.kind.clone(), n, mixed, vec![0]).unwrap();
        let la = reconstruct::lininv(&a).unwrap().estimate;
        let lb = reconstruct::lininv(&b).unwrap().estimate;
        let lm = reconstruct::lininv(&m).unwrap().estimate;
        let combo: CMatrix = la * c(alpha, 0.0) + lb * c(1.0 - alpha, 0.0);
        prop_assert!(linalg::max_abs_diff(&lm, &combo) < 1e-10);
    }

    #[test]
    fn mle_improves_on_its_start(seed in any::<u64>(), n in 1usize..=2) {
        let mut r = rng(seed);
        let f = SicFrame::standard();
        let rho = random::random_density(n, 1, &mut r);
        let shots = ShotSampler::mixed(&rho).sample_sic_many(&f, 50, &mut r);
        let fv = FrequencyVector::from_sic_shots(&f, &shots).unwrap();
        let res = reconstruct::mle(&fv, &MleOptions::default()).unwrap();
        let h = &res.objective_history;
        prop_assert!(h.last().unwrap() <= &h[0]);
        prop_assert!(res.density().is_ok());
    }

    #[test]
    fn coincidence_respects_bound(seed in any::<u64>(), k in 1usize..=3) {
        let rho = random::random_state(k, &mut rng(seed));
        prop_assert!(budget::coincidence_probability(&rho).unwrap() <= budget::coincidence_bound(k) + 1e-12);
    }

    #[test]
    fn budgets_are_monotone(k in 1usize..6, l in 1usize..20, eps in 0.01f64..0.9, delta in 0.01f64..0.9, shrink in 0.5f64..1.0) {
        for f in [budget::observable_budget, budget::purity_budget] {
            let base = f(&BudgetQuery::new(k, l, eps, delta)).unwrap();
            prop_assert!(f(&BudgetQuery::new(k + 1, l, eps, delta)).unwrap() >= base);
            prop_assert!(f(&BudgetQuery::new(k, l + 1, eps, delta)).unwrap() >= base);
            prop_assert!(f(&BudgetQuery::new(k, l, eps * shrink, delta)).unwrap() >= base);
            prop_assert!(f(&BudgetQuery::new(k, l, eps, delta * shrink)).unwrap() >= base);
        }
    }

    #[test]
    fn purity_tracker_subsets_match_reduced_state_estimates(seed in any::<u64>()) {
        let mut r = rng(seed);
        let f = SicFrame::standard();
        let rho = random::random_state(3, &mut r);
        let shots = ShotSampler::mixed(&rho).sample_sic_many(&f, 60, &mut r);
        let mut t = PurityTracker::new(&f, &[0, 2], 3, 1).unwrap();
        shots.iter().for_each(|s| t.add(s));
        let local: Vec<SicShot> = shots.iter().map(|s| SicShot::new(vec![s.digits[0], s.digits[2]]).unwrap()).collect();
        let v = estimate_purity(&f, &local, &[0, 1], 1).unwrap().value;
        prop_assert!((t.purity().unwrap() - v).abs() < 1e-9);
    }
}
