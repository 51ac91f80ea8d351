//! Measurement budgets and variance bounds for SIC shadow estimators,
//! together with exact enumeration verifiers.
//!
//! Logarithms are natural.

use rand::Rng;

use crate::error::{Error, Result};
use crate::estimators::ObservableSpec;
use crate::linalg;
use crate::povm::{sic_outcome_distribution, OutcomeDistribution, ShotSampler, SicFrame, SicShot};
use crate::qstate::DensityOperator;
use crate::shadows::{self, ShadowTable};

/// Largest support for [`exact_linear_variance`].
pub const LINEAR_ENUM_CAP: usize = 4;
/// Largest N for the pair enumerations.
pub const PAIR_ENUM_CAP: usize = 2;
pub const COINCIDENCE_ENUM_CAP: usize = 6;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct BudgetQuery {
    pub k: usize,
    pub l: usize,
    pub epsilon: f64,
    pub delta: f64,
    /// Bound on `tr(O_K^2)`; `2^K` when absent.
    pub hs_norm_sq: Option<f64>,
}

impl BudgetQuery {
    pub fn new(k: usize, l: usize, epsilon: f64, delta: f64) -> Self {
        BudgetQuery {
            k,
            l,
            epsilon,
            delta,
            hs_norm_sq: None,
        }
    }

    pub fn with_hs_norm_sq(mut self, b: f64) -> Self {
        self.hs_norm_sq = Some(b);
        self
    }

    pub fn validate(&self) -> Result<()> {
        if self.k < 1 || self.l < 1 {
            return Err(Error::invalid("K and L must be at least 1"));
        }
        for (name, v) in [("epsilon", self.epsilon), ("delta", self.delta)] {
            if !(v > 0.0 && v < 1.0) {
                return Err(Error::invalid(format!("{name} = {v} must lie strictly in (0, 1)")));
            }
        }
        if let Some(b) = self.hs_norm_sq {
            if !(b > 0.0 && b.is_finite()) {
                return Err(Error::invalid("hs_norm_sq must be positive"));
            }
        }
        Ok(())
    }

    fn hs(&self) -> f64 {
        self.hs_norm_sq.unwrap_or(2f64.powi(self.k as i32))
    }

    /// Set when `tr(O^2)` falls below `(5/9)^K`, outside the regime the
    /// observable budget is derived for.
    pub fn hs_warning(&self) -> Option<String> {
        let floor = (5.0f64 / 9.0).powi(self.k as i32);
        (self.hs() < floor).then(|| {
            format!(
                "tr(O^2) = {} is below (5/9)^K = {floor:.4}; the observable bound may not apply",
                self.hs()
            )
        })
    }
}

/// Real-valued observable budget `(8/3) 3^K B ln(2L/delta) / eps^2`.
pub fn observable_budget_real(q: &BudgetQuery) -> Result<f64> {
    q.validate()?;
    Ok(8.0 / 3.0 * 3f64.powi(q.k as i32) * q.hs() * (2.0 * q.l as f64 / q.delta).ln() / (q.epsilon * q.epsilon))
}

pub fn observable_budget(q: &BudgetQuery) -> Result<u64> {
    Ok(ceil_shots(observable_budget_real(q)?))
}

/// Real-valued purity budget `6 L 3^K / (eps^2 delta)`.
pub fn purity_budget_real(q: &BudgetQuery) -> Result<f64> {
    q.validate()?;
    Ok(6.0 * q.l as f64 * 3f64.powi(q.k as i32) / (q.epsilon * q.epsilon * q.delta))
}

pub fn purity_budget(q: &BudgetQuery) -> Result<u64> {
    Ok(ceil_shots(purity_budget_real(q)?))
}

/// Ceiling that ignores floating-point fuzz just above an integer.
fn ceil_shots(x: f64) -> u64 {
    let r = x.round();
    if (x - r).abs() <= 1e-9 * x.max(1.0) {
        r as u64
    } else {
        x.ceil() as u64
    }
}

/// `3^|K| tr(O^2)`.
pub fn linear_variance_bound(obs: &ObservableSpec) -> f64 {
    3f64.powi(obs.support.len() as i32) * obs.hs_norm_sq()
}

/// Mean and variance of `tr(O sigma)` under the outcome law of `rho`, by
/// enumerating all outcomes on the support.
pub fn exact_linear_moments(rho: &DensityOperator, obs: &ObservableSpec, frame: &SicFrame) -> Result<(f64, f64)> {
    let k = obs.support.len();
    if k > LINEAR_ENUM_CAP {
        return Err(Error::CapExceeded {
            what: "exact linear variance",
            cap: LINEAR_ENUM_CAP,
            requested: k,
        });
    }
    let reduced = if k == rho.n_qubits() {
        rho.clone()
    } else {
        rho.partial_trace(&obs.support)?
    };
    let dist = sic_outcome_distribution(&reduced, frame)?;
    let table = ShadowTable::new(frame);
    let local: Vec<usize> = (0..k).collect();
    let (mut m1, mut m2) = (0.0, 0.0);
    for (i, &p) in dist.probabilities.iter().enumerate() {
        let s = SicShot::from_index(i, k);
        let x = linalg::dot(obs.coords(), &table.coords(&s.digits, &local));
        m1 += p * x;
        m2 += p * x * x;
    }
    Ok((m1, m2 - m1 * m1))
}

pub fn exact_linear_variance(rho: &DensityOperator, obs: &ObservableSpec, frame: &SicFrame) -> Result<f64> {
    Ok(exact_linear_moments(rho, obs, frame)?.1)
}

/// `9^N`.
pub fn quadratic_variance_bound(n: usize) -> f64 {
    9f64.powi(n as i32)
}

fn pair_distribution(rho: &DensityOperator, frame: &SicFrame) -> Result<OutcomeDistribution> {
    let n = rho.n_qubits();
    if n > PAIR_ENUM_CAP {
        return Err(Error::CapExceeded {
            what: "exact pair enumeration",
            cap: PAIR_ENUM_CAP,
            requested: n,
        });
    }
    sic_outcome_distribution(rho, frame)
}

fn overlap_of_indices(i: usize, j: usize, n: usize) -> f64 {
    let a = SicShot::from_index(i, n);
    let b = SicShot::from_index(j, n);
    let all: Vec<usize> = (0..n).collect();
    ShadowTable::pair_overlap(&a.digits, &b.digits, &all)
}

/// Mean and variance of `tr(sigma sigma')` for two independent shadows.
pub fn exact_quadratic_moments(rho: &DensityOperator, frame: &SicFrame) -> Result<(f64, f64)> {
    let n = rho.n_qubits();
    let dist = pair_distribution(rho, frame)?;
    let p = &dist.probabilities;
    let (mut m1, mut m2) = (0.0, 0.0);
    for (i, &pi) in p.iter().enumerate() {
        for (j, &pj) in p.iter().enumerate() {
            let x = overlap_of_indices(i, j, n);
            m1 += pi * pj * x;
            m2 += pi * pj * x * x;
        }
    }
    Ok((m1, m2 - m1 * m1))
}

pub fn exact_quadratic_variance(rho: &DensityOperator, frame: &SicFrame) -> Result<f64> {
    Ok(exact_quadratic_moments(rho, frame)?.1)
}

/// `2^{-K} tr(rho D^{(x)K}(rho))`, the probability that two independent
/// measurements of `rho` give the same outcome string.
pub fn coincidence_probability(rho: &DensityOperator) -> Result<f64> {
    let k = rho.n_qubits();
    let d = shadows::depolarize(rho.matrix(), k)?;
    Ok(linalg::trace_product(rho.matrix(), &d).re / 2f64.powi(k as i32))
}

/// `sum_i Pr[i]^2` by enumeration.
pub fn coincidence_enumerated(rho: &DensityOperator, frame: &SicFrame) -> Result<f64> {
    let k = rho.n_qubits();
    if k > COINCIDENCE_ENUM_CAP {
        return Err(Error::CapExceeded {
            what: "coincidence enumeration",
            cap: COINCIDENCE_ENUM_CAP,
            requested: k,
        });
    }
    let d = sic_outcome_distribution(rho, frame)?;
    Ok(d.probabilities.iter().map(|p| p * p).sum())
}

pub fn coincidence_bound(k: usize) -> f64 {
    3f64.powi(-(k as i32))
}

/// Right-hand side of the purity variance decomposition,
/// `4(M-2)/(M(M-1)) Var[tr(rho sigma)] + 2/(M(M-1)) Var[tr(sigma sigma')]`.
pub fn variance_decomposition_rhs(rho: &DensityOperator, frame: &SicFrame, m: usize) -> Result<f64> {
    if m < 2 {
        return Err(Error::invalid("the pair estimator needs M >= 2"));
    }
    let n = rho.n_qubits();
    let all: Vec<usize> = (0..n).collect();
    let obs = ObservableSpec::new(&all, linalg::hermitize(rho.matrix()), "rho")?;
    let v1 = exact_linear_variance(rho, &obs, frame)?;
    let v2 = exact_quadratic_variance(rho, frame)?;
    let mf = m as f64;
    Ok(4.0 * (mf - 2.0) / (mf * (mf - 1.0)) * v1 + 2.0 / (mf * (mf - 1.0)) * v2)
}

fn pair_purity(digits: &[Vec<u8>], n: usize) -> f64 {
    let all: Vec<usize> = (0..n).collect();
    let m = digits.len();
    let mut total = 0.0;
    for a in 0..m {
        for b in 0..m {
            if a != b {
                total += ShadowTable::pair_overlap(&digits[a], &digits[b], &all);
            }
        }
    }
    total / (m * (m - 1)) as f64
}

/// Exact `Var[p_hat]` by enumerating every M-tuple of outcomes (M in {2, 3}).
pub fn variance_decomposition_exact(rho: &DensityOperator, frame: &SicFrame, m: usize) -> Result<(f64, f64)> {
    if !(2..=3).contains(&m) {
        return Err(Error::invalid("exact enumeration supports M = 2 or 3"));
    }
    let n = rho.n_qubits();
    let dist = pair_distribution(rho, frame)?;
    let p = &dist.probabilities;
    let k = p.len();
    let tuples = k.pow(m as u32);
    let (mut e1, mut e2) = (0.0, 0.0);
    for t in 0..tuples {
        let mut rest = t;
        let mut prob = 1.0;
        let mut digits = Vec::with_capacity(m);
        for _ in 0..m {
            let i = rest % k;
            rest /= k;
            prob *= p[i];
            digits.push(SicShot::from_index(i, n).digits);
        }
        if prob == 0.0 {
            continue;
        }
        let v = pair_purity(&digits, n);
        e1 += prob * v;
        e2 += prob * v * v;
    }
    Ok((e2 - e1 * e1, variance_decomposition_rhs(rho, frame, m)?))
}

/// Monte Carlo `Var[p_hat]` over `reps` independent data sets of size M.
#[derive(Clone, Copy, Debug)]
pub struct MonteCarloVariance {
    pub variance: f64,
    /// Standard error of `variance`.
    pub stderr: f64,
    pub rhs: f64,
}

pub fn variance_decomposition_mc<R: Rng + ?Sized>(
    rho: &DensityOperator,
    frame: &SicFrame,
    m: usize,
    reps: usize,
    rng: &mut R,
) -> Result<MonteCarloVariance> {
    if reps < 10 {
        return Err(Error::invalid("Monte Carlo check needs at least 10 repetitions"));
    }
    let rhs = variance_decomposition_rhs(rho, frame, m)?;
    let n = rho.n_qubits();
    let sampler = ShotSampler::mixed(rho);
    let all: Vec<usize> = (0..n).collect();
    let vals: Vec<f64> = (0..reps)
        .map(|_| {
            let shots = sampler.sample_sic_many(frame, m as u64, rng);
            crate::estimators::estimate_purity(frame, &shots, &all, 1)
                .map(|e| e.value)
                .expect("M >= 2")
        })
        .collect();
    let r = reps as f64;
    let mean = vals.iter().sum::<f64>() / r;
    let dev: Vec<f64> = vals.iter().map(|v| (v - mean).powi(2)).collect();
    let variance = dev.iter().sum::<f64>() / (r - 1.0);
    let m4 = dev.iter().map(|d| d * d).sum::<f64>() / r;
    let stderr = ((m4 - variance * variance).max(0.0) / r).sqrt();
    Ok(MonteCarloVariance { variance, stderr, rhs })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn budget_arithmetic() {
        assert_eq!(observable_budget(&BudgetQuery::new(1, 1, 0.1, 0.01)).unwrap(), 8478);
        assert_eq!(purity_budget(&BudgetQuery::new(2, 1, 0.1, 0.1)).unwrap(), 54000);
        assert_eq!(purity_budget(&BudgetQuery::new(2, 10, 0.1, 0.1)).unwrap(), 540000);
        assert!(observable_budget(&BudgetQuery::new(1, 1, 1.0, 0.1)).is_err());
        assert!(purity_budget(&BudgetQuery::new(0, 1, 0.5, 0.1)).is_err());
    }

    #[test]
    fn hs_norm_ratio() {
        let base = BudgetQuery::new(3, 2, 0.2, 0.05);
        let a = observable_budget_real(&base).unwrap();
        let b = observable_budget_real(&base.with_hs_norm_sq(1.0)).unwrap();
        assert!((a / b - 8.0).abs() < 1e-12);
        assert!(base.with_hs_norm_sq(0.01).hs_warning().is_some());
        assert!(base.hs_warning().is_none());
    }

    #[test]
    fn hand_quadratic_case() {
        let mm = DensityOperator::maximally_mixed(1);
        let (mean, var) = exact_quadratic_moments(&mm, &SicFrame::standard()).unwrap();
        assert!((mean - 0.5).abs() < 1e-12);
        assert!((var - 6.75).abs() < 1e-12);
    }

    #[test]
    fn coincidence_of_mixed_qubit() {
        let mm = DensityOperator::maximally_mixed(1);
        assert!((coincidence_probability(&mm).unwrap() - 0.25).abs() < 1e-12);
        assert!((coincidence_enumerated(&mm, &SicFrame::standard()).unwrap() - 0.25).abs() < 1e-12);
    }

    #[test]
    fn decomposition_at_two() {
        let mm = DensityOperator::maximally_mixed(1);
        let f = SicFrame::standard();
        let (lhs, rhs) = variance_decomposition_exact(&mm, &f, 2).unwrap();
        assert!((lhs - rhs).abs() < 1e-12);
        assert!((rhs - exact_quadratic_variance(&mm, &f).unwrap()).abs() < 1e-12);
    }
}
