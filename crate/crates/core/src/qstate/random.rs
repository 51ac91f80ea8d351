//! Random test states: Haar-like pure states, Ginibre-rank mixed states and
//! Gaussian Hermitian matrices.

use rand::Rng;
use rand_distr::StandardNormal;

use super::{DensityOperator, PureState};
use crate::linalg::{self, c, CMatrix, CVector};

fn gaussian_c64<R: Rng + ?Sized>(rng: &mut R) -> linalg::C64 {
    c(rng.sample(StandardNormal), rng.sample(StandardNormal))
}

pub fn random_pure<R: Rng + ?Sized>(n: usize, rng: &mut R) -> PureState {
    let d = linalg::dim_of(n);
    let v = CVector::from_fn(d, |_, _| gaussian_c64(rng));
    PureState::normalized(v).expect("gaussian vector is nonzero")
}

/// `G G^dagger / tr(G G^dagger)` with `G` a `2^n x rank` complex Gaussian matrix.
pub fn random_density<R: Rng + ?Sized>(n: usize, rank: usize, rng: &mut R) -> DensityOperator {
    let d = linalg::dim_of(n);
    let rank = rank.clamp(1, d);
    let g = CMatrix::from_fn(d, rank, |_, _| gaussian_c64(rng));
    let m = &g * g.adjoint();
    let tr = m.trace().re;
    let m = linalg::hermitize(&m.unscale(tr));
    DensityOperator::new(m).expect("Gram matrices are density operators")
}

/// Full-rank or low-rank mixed state chosen at random.
pub fn random_state<R: Rng + ?Sized>(n: usize, rng: &mut R) -> DensityOperator {
    let d = linalg::dim_of(n);
    let rank = rng.random_range(1..=d);
    random_density(n, rank, rng)
}

pub fn random_hermitian<R: Rng + ?Sized>(n: usize, rng: &mut R) -> CMatrix {
    let d = linalg::dim_of(n);
    let g = CMatrix::from_fn(d, d, |_, _| gaussian_c64(rng));
    linalg::hermitize(&g)
}
