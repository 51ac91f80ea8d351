//! Reference states: the five-qubit AME state, GHZ states (optionally with
//! a local rotation), sign-labelled linear cluster states and products.

use nalgebra::Vector2;

use super::PureState;
use crate::error::{Error, Result};
use crate::linalg::{self, c, CVector, C64};

/// Nonzero computational-basis terms of `2 sqrt(2) |AME(5,2)>` with their signs.
pub const AME5_TERMS: [(&str, f64); 8] = [
    ("00000", 1.0),
    ("00011", 1.0),
    ("01100", 1.0),
    ("01111", -1.0),
    ("11010", 1.0),
    ("11001", 1.0),
    ("10110", 1.0),
    ("10101", -1.0),
];

pub fn make_ame5() -> PureState {
    let mut v = CVector::zeros(32);
    let amp = 1.0 / (2.0 * std::f64::consts::SQRT_2);
    for (bits, sign) in AME5_TERMS {
        v[usize::from_str_radix(bits, 2).unwrap()] = c(sign * amp, 0.0);
    }
    PureState::new(v).expect("AME5 amplitudes are normalized")
}

/// `(|0...0> + |1...1>) / sqrt(2)`.
pub fn ghz(n: usize) -> Result<PureState> {
    if n == 0 {
        return Err(Error::invalid("GHZ state needs at least one qubit"));
    }
    let d = linalg::dim_of(n);
    let mut v = CVector::zeros(d);
    let a = std::f64::consts::FRAC_1_SQRT_2;
    v[0] = c(a, 0.0);
    v[d - 1] += c(a, 0.0);
    PureState::normalized(v)
}

/// GHZ state followed by `exp(-i angle Y / 2)` on every qubit.
pub fn rotated_ghz(n: usize, angle: f64) -> Result<PureState> {
    let base = ghz(n)?;
    let (s, co) = (angle / 2.0).sin_cos();
    let ry = [[c(co, 0.0), c(-s, 0.0)], [c(s, 0.0), c(co, 0.0)]];
    let mut amps = base.amplitudes().clone();
    for q in 0..n {
        apply_single(&mut amps, n, q, &ry);
    }
    PureState::normalized(amps)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Sign {
    Plus,
    Minus,
}

impl Sign {
    pub fn parse_list(s: &str) -> Result<Vec<Sign>> {
        s.chars()
            .map(|ch| match ch {
                '+' => Ok(Sign::Plus),
                '-' => Ok(Sign::Minus),
                other => Err(Error::invalid(format!("sign `{other}` is not + or -"))),
            })
            .collect()
    }

    /// All `2^n` sign vectors; bit k of the index set means qubit k is `|->`.
    pub fn all(n: usize) -> Vec<Vec<Sign>> {
        (0..1usize << n)
            .map(|m| {
                (0..n)
                    .map(|k| {
                        if (m >> (n - 1 - k)) & 1 == 1 {
                            Sign::Minus
                        } else {
                            Sign::Plus
                        }
                    })
                    .collect()
            })
            .collect()
    }
}

/// Product of `|+>` / `|->` inputs followed by CZ on every neighbouring pair.
pub fn make_linear_cluster(signs: &[Sign]) -> Result<PureState> {
    let n = signs.len();
    if n == 0 {
        return Err(Error::invalid("cluster state needs at least one qubit"));
    }
    let a = std::f64::consts::FRAC_1_SQRT_2;
    let kets: Vec<Vector2<C64>> = signs
        .iter()
        .map(|s| match s {
            Sign::Plus => Vector2::new(c(a, 0.0), c(a, 0.0)),
            Sign::Minus => Vector2::new(c(a, 0.0), c(-a, 0.0)),
        })
        .collect();
    let mut v = make_product(&kets)?.amplitudes().clone();
    for (idx, amp) in v.iter_mut().enumerate() {
        let mut parity = 0;
        for k in 0..n.saturating_sub(1) {
            let b0 = (idx >> (n - 1 - k)) & 1;
            let b1 = (idx >> (n - 2 - k)) & 1;
            parity ^= b0 & b1;
        }
        if parity == 1 {
            *amp = -*amp;
        }
    }
    PureState::normalized(v)
}

pub fn make_product(kets: &[Vector2<C64>]) -> Result<PureState> {
    if kets.is_empty() {
        return Err(Error::invalid("product state needs at least one ket"));
    }
    let mut v = CVector::from_element(1, linalg::ONE);
    for k in kets {
        let kv = CVector::from_column_slice(&[k[0], k[1]]);
        v = linalg::kron_vec(&v, &kv);
    }
    PureState::normalized(v)
}

/// Looks up a named library state: `ame5`, `ghz<N>`, `rghz<N>` (pi/4 rotated),
/// `cluster<N>` (all `|+>` inputs), `cluster:<signs>`, `zero<N>`, `plus<N>`.
pub fn by_name(name: &str) -> Result<PureState> {
    let unknown = || Error::Unknown {
        kind: "state",
        name: name.to_string(),
    };
    let count = |prefix: &str| -> Result<usize> {
        name[prefix.len()..]
            .parse::<usize>()
            .ok()
            .filter(|&n| n >= 1)
            .ok_or_else(unknown)
    };
    if name == "ame5" {
        Ok(make_ame5())
    } else if name == "bell" {
        ghz(2)
    } else if let Some(signs) = name.strip_prefix("cluster:") {
        make_linear_cluster(&Sign::parse_list(signs)?)
    } else if name.starts_with("rghz") {
        rotated_ghz(count("rghz")?, std::f64::consts::FRAC_PI_4)
    } else if name.starts_with("ghz") {
        ghz(count("ghz")?)
    } else if name.starts_with("cluster") {
        make_linear_cluster(&vec![Sign::Plus; count("cluster")?])
    } else if name.starts_with("zero") {
        PureState::basis(count("zero")?, 0)
    } else if name.starts_with("plus") {
        let a = std::f64::consts::FRAC_1_SQRT_2;
        make_product(&vec![Vector2::new(c(a, 0.0), c(a, 0.0)); count("plus")?])
    } else {
        Err(unknown())
    }
}

/// Applies a 2x2 gate to qubit `q` of an `n`-qubit amplitude vector.
pub(crate) fn apply_single(v: &mut CVector, n: usize, q: usize, g: &[[C64; 2]; 2]) {
    let stride = 1usize << (n - 1 - q);
    let d = v.len();
    for base in 0..d {
        if base & stride != 0 {
            continue;
        }
        let a0 = v[base];
        let a1 = v[base | stride];
        v[base] = g[0][0] * a0 + g[0][1] * a1;
        v[base | stride] = g[1][0] * a0 + g[1][1] * a1;
    }
}
