//! Repair-scheme accounting: turns measured per-node totals and per-helper
//! counts into the (a, ℓ, t) and ε-MSR verdicts. Throughout, t = n−1: every
//! surviving block helps.

use crate::bounds::cut_set;
use num_rational::Ratio;
use serde::Serialize;
use thiserror::Error;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum SchemeError {
    #[error("measurements missing for {missing} of {expected} nodes")]
    IncompleteScheme { missing: usize, expected: usize },
}

/// Measured downloads for one repaired node: the grand total and the
/// per-helper symbol counts.
#[derive(Debug, Clone)]
pub struct NodeMeasurement {
    pub node: usize,
    pub total: usize,
    pub per_helper: Vec<usize>,
}

#[derive(Debug, Clone, Serialize, PartialEq)]
pub struct Classification {
    /// max_i total_i / cut_set, as an exact rational string.
    pub a_measured: String,
    /// max_{i,j} β_{j,i}·r/ℓ − 1, as an exact rational string.
    pub epsilon_measured: String,
    pub is_msr: bool,
}

/// Classifies a full set of per-node measurements against the cut-set value.
/// `is_msr` holds exactly when every helper everywhere ships ℓ/(t−k+1)
/// symbols, equivalently ε = 0; by the same token a = 1.
pub fn classify(
    n: usize,
    k: usize,
    ell: usize,
    measurements: &[NodeMeasurement],
) -> Result<Classification, SchemeError> {
    if measurements.len() != n {
        return Err(SchemeError::IncompleteScheme {
            missing: n - measurements.len().min(n),
            expected: n,
        });
    }
    let t = n - 1;
    let cut = cut_set(n, k, t, ell).expect("t = n-1 in range");
    let mut a = Ratio::from_integer(0);
    let mut eps = Ratio::from_integer(-1);
    for m in measurements {
        a = a.max(Ratio::from_integer(m.total as i64) / cut);
        for &beta in &m.per_helper {
            let frac = Ratio::new((beta * (t - k + 1)) as i64, ell as i64);
            eps = eps.max(frac - Ratio::from_integer(1));
        }
    }
    debug_assert!(a >= Ratio::from_integer(1), "no MDS code repairs below the cut-set value");
    Ok(Classification {
        a_measured: a.to_string(),
        epsilon_measured: eps.to_string(),
        is_msr: eps == Ratio::from_integer(0),
    })
}
