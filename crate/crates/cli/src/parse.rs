//! Textual specs for states and tracked quantities.

use std::path::Path;

use sicshadow::estimators::all_bipartitions;
use sicshadow::qstate::library;
use sicshadow::stream::Quantity;
use sicshadow::{Bipartition, DensityOperator, Error, PureState, State};

pub fn bad(msg: impl Into<String>) -> Error {
    Error::InvalidArgument(msg.into())
}

/// A library name (`ame5`, `ghz3`, `cluster:+-+-`, ...) or a state JSON file.
pub fn load_state(spec: &str) -> sicshadow::Result<State> {
    if spec.ends_with(".json") || Path::new(spec).is_file() {
        State::load_json(spec)
    } else {
        library::by_name(spec).map(State::Pure)
    }
}

pub fn load_pure(spec: &str) -> sicshadow::Result<PureState> {
    match load_state(spec)? {
        State::Pure(p) => Ok(p),
        State::Mixed(_) => Err(bad(format!("`{spec}` is not a pure state"))),
    }
}

/// `(1 - p) rho + p I / 2^N`.
pub fn depolarized(state: &State, p: f64) -> sicshadow::Result<DensityOperator> {
    if !(0.0..=1.0).contains(&p) {
        return Err(bad("depolarizing weight must lie in [0, 1]"));
    }
    let rho = state.to_density();
    rho.mix(&DensityOperator::maximally_mixed(rho.n_qubits()), 1.0 - p)
}

pub fn parse_indices(s: &str) -> sicshadow::Result<Vec<usize>> {
    s.split(',')
        .map(|t| {
            t.trim()
                .parse::<usize>()
                .map_err(|_| bad(format!("bad qubit index `{t}`")))
        })
        .collect()
}

pub fn purity(spec: &str, n: usize) -> sicshadow::Result<Quantity> {
    let subset = if spec == "full" {
        (0..n).collect()
    } else {
        parse_indices(spec)?
    };
    Ok(Quantity::Purity { subset })
}

/// `all:K` (every bipartition with smaller side at most K) or a side list `0,1`.
pub fn renyi(spec: &str, n: usize) -> sicshadow::Result<Vec<Quantity>> {
    let parts = if let Some(k) = spec.strip_prefix("all:") {
        let k = k
            .parse::<usize>()
            .map_err(|_| bad(format!("bad side size in `{spec}`")))?;
        all_bipartitions(n, k)?
    } else if spec == "all" {
        all_bipartitions(n, n / 2)?
    } else {
        vec![Bipartition::new(&parse_indices(spec)?, n)?]
    };
    Ok(parts.into_iter().map(|part| Quantity::Renyi { part }).collect())
}

pub fn fidelity(spec: &str) -> sicshadow::Result<Quantity> {
    Ok(Quantity::Fidelity {
        label: spec.to_string(),
        target: load_pure(spec)?,
    })
}

/// `fidelity:NAME;purity:full;renyi:all:2`. `none` is rejected.
pub fn quantities(spec: &str, n: usize) -> sicshadow::Result<Vec<Quantity>> {
    let mut out = Vec::new();
    for item in spec.split(';').map(str::trim).filter(|s| !s.is_empty()) {
        if item == "none" {
            return Err(bad("`none` tracks nothing; give at least one quantity"));
        }
        let (kind, arg) = item
            .split_once(':')
            .ok_or_else(|| bad(format!("quantity `{item}` needs the form kind:argument")))?;
        match kind {
            "fidelity" => out.push(fidelity(arg)?),
            "purity" => out.push(purity(arg, n)?),
            "renyi" => out.extend(renyi(arg, n)?),
            _ => {
                return Err(Error::Unknown {
                    kind: "quantity",
                    name: kind.to_string(),
                })
            }
        }
    }
    Ok(out)
}

pub fn list<T: std::str::FromStr>(s: &str, what: &str) -> sicshadow::Result<Vec<T>> {
    s.split(',')
        .map(|t| {
            t.trim()
                .parse::<T>()
                .map_err(|_| bad(format!("bad {what} `{t}`")))
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn quantity_lists() {
        assert_eq!(quantities("renyi:all:2", 5).unwrap().len(), 15);
        assert_eq!(quantities("fidelity:ame5;purity:full", 5).unwrap().len(), 2);
        assert!(quantities("none", 5).is_err());
        assert!(quantities("entropy:1", 5).is_err());
        assert!(purity("0,7", 3).is_ok());
    }
}
