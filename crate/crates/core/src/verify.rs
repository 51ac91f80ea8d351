//! Fast self-checks on exact quantities, run by `sicshadow verify`.

use serde::Serialize;

use crate::budget::{self, BudgetQuery};
use crate::linalg;
use crate::povm::SicFrame;
use crate::qstate::{library, random, Bipartition, DensityOperator};
use crate::reconstruct::{self, FrequencyVector, Method, MleOptions};
use crate::rng;

#[derive(Clone, Debug, Serialize)]
pub struct Check {
    pub name: String,
    pub passed: bool,
    pub detail: String,
}

fn check(name: &str, value: f64, tol: f64) -> Check {
    Check {
        name: name.into(),
        passed: value.is_finite() && value <= tol,
        detail: format!("residual {value:.3e} (tolerance {tol:.0e})"),
    }
}

fn failed(name: &str, e: crate::Error) -> Check {
    Check {
        name: name.into(),
        passed: false,
        detail: e.to_string(),
    }
}

pub fn run_checks(seed: u64) -> Vec<Check> {
    let mut out = Vec::new();
    for frame in [SicFrame::standard(), SicFrame::rotated()] {
        let tag = frame.name().to_string();
        out.push(check(&format!("frame-identities-{tag}"), frame.residuals().max(), 1e-12));
        out.push(check(&format!("naimark-unitary-{tag}"), frame.naimark().unitarity_residual(), 1e-12));
    }

    let mut r = rng::stream(seed, rng::streams::STATE);
    let frame = SicFrame::standard();
    let rho = random::random_density(2, 2, &mut r);
    out.push(match exact_recovery(&rho, &frame) {
        Ok(v) => check("exact-inversion", v, 1e-10),
        Err(e) => failed("exact-inversion", e),
    });

    let rho3 = random::random_density(3, 8, &mut r);
    out.push(
        match (budget::coincidence_probability(&rho3), budget::coincidence_enumerated(&rho3, &frame)) {
            (Ok(a), Ok(b)) => check("coincidence", (a - b).abs(), 1e-12),
            (Err(e), _) | (_, Err(e)) => failed("coincidence", e),
        },
    );

    let bell = library::by_name("bell").expect("library state").to_density();
    out.push(match Bipartition::new(&[0], 2).and_then(|p| bell.p3_moments(&p)) {
        Ok(m) => Check {
            name: "bell-p3".into(),
            passed: m.entangled && (m.lhs - 0.25).abs() < 1e-12 && (m.rhs - 1.0).abs() < 1e-12,
            detail: format!("lhs {:.6} rhs {:.6}", m.lhs, m.rhs),
        },
        Err(e) => failed("bell-p3", e),
    });

    out.push(match budget::observable_budget(&BudgetQuery::new(2, 1, 0.1, 0.05).with_hs_norm_sq(1.0)) {
        Ok(m) => {
            let expect = (8.0 / 3.0 * 9.0 / 0.01 * (2.0f64 / 0.05).ln()).ceil() as u64;
            Check {
                name: "observable-budget".into(),
                passed: m == expect,
                detail: format!("{m} shots (expected {expect})"),
            }
        }
        Err(e) => failed("observable-budget", e),
    });
    out
}

fn exact_recovery(rho: &DensityOperator, frame: &SicFrame) -> crate::Result<f64> {
    let f = FrequencyVector::exact_sic(rho, frame)?;
    let mut worst: f64 = 0.0;
    for m in [Method::LinInv, Method::ShadowMean] {
        let est = reconstruct::reconstruct(&f, m, &MleOptions::default())?.estimate;
        worst = worst.max(linalg::max_abs_diff(&est, rho.matrix()));
    }
    Ok(worst)
}
