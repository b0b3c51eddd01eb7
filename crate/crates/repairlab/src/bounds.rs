//! Closed-form bandwidth and sub-packetization bounds. Rational formulas are
//! evaluated exactly; bounds with irrational exponents use f64 with a
//! documented 1e-9 comparison slack.

use num_rational::Ratio;
use serde::Serialize;
use thiserror::Error;

pub const REAL_SLACK: f64 = 1e-9;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum BoundsError {
    #[error("t = {t} outside [k, n-1] = [{k}, {max}]")]
    TOutOfRange { t: usize, k: usize, max: usize },
    #[error("bound undefined at n - k = 1")]
    RIsOne,
}

/// Minimum total download for repairing one block from t helpers:
/// (t/(t−k+1))·ℓ.
pub fn cut_set(n: usize, k: usize, t: usize, ell: usize) -> Result<Ratio<i64>, BoundsError> {
    if t < k || t >= n {
        return Err(BoundsError::TOutOfRange { t, k, max: n - 1 });
    }
    Ok(Ratio::new((t * ell) as i64, (t - k + 1) as i64))
}

/// Feasibility of (n, k, ℓ) for optimal-bandwidth repair:
/// k ≤ 2·log₂ℓ·(log_{r/(r−1)}ℓ + 1) + 1 with r = n−k.
pub fn optimal_repair_feasible(n: usize, k: usize, ell: usize) -> Result<bool, BoundsError> {
    let r = n - k;
    if r < 2 {
        return Err(BoundsError::RIsOne);
    }
    let l = ell as f64;
    let base = r as f64 / (r as f64 - 1.0);
    let rhs = 2.0 * l.log2() * (l.ln() / base.ln() + 1.0) + 1.0;
    Ok(k as f64 <= rhs + REAL_SLACK)
}

/// Minimum sub-packetization admitting repair-by-transfer:
/// ℓ ≥ (n−k)^(k/(n−k)).
pub fn min_ell_repair_by_transfer(n: usize, k: usize) -> f64 {
    assert!(n > k && k >= 1);
    let r = (n - k) as f64;
    r.powf(k as f64 / r)
}

/// Minimum sub-packetization at repair-bandwidth factor b: ℓ ≥ (n−k)/b.
pub fn min_ell_at_bandwidth_factor(n: usize, k: usize, b: usize) -> Ratio<i64> {
    assert!(b >= 1 && n > k);
    Ratio::new((n - k) as i64, b as i64)
}

/// Maximum number of blocks of an ε-optimal code at sub-packetization ℓ:
/// (rℓ)^((ℓ/r)(1+ε)+1).
pub fn max_nodes_at_overhead(r: usize, ell: usize, epsilon: f64) -> f64 {
    assert!(r >= 1 && ell >= 1 && epsilon >= 0.0);
    let base = (r * ell) as f64;
    base.powf(ell as f64 / r as f64 * (1.0 + epsilon) + 1.0)
}

/// Bound annotations attached to verification reports.
#[derive(Debug, Clone, Serialize)]
pub struct BoundsReport {
    pub n: usize,
    pub k: usize,
    pub t: usize,
    pub ell: usize,
    pub cut_set_total: String,
    pub cut_set_per_helper: String,
    pub min_ell_repair_by_transfer: f64,
    pub optimal_repair_feasible: Option<bool>,
}

pub fn bounds_report(n: usize, k: usize, ell: usize) -> BoundsReport {
    let t = n - 1;
    let total = cut_set(n, k, t, ell).expect("t = n-1 is always in range");
    let per_helper = total / Ratio::from_integer(t as i64);
    BoundsReport {
        n,
        k,
        t,
        ell,
        cut_set_total: total.to_string(),
        cut_set_per_helper: per_helper.to_string(),
        min_ell_repair_by_transfer: min_ell_repair_by_transfer(n, k),
        optimal_repair_feasible: optimal_repair_feasible(n, k, ell).ok(),
    }
}
