//! Composition of an inner MSR code with an outer code: long-code blocks are
//! indexed by outer codewords, each thick column reuses the inner diagonal
//! blocks selected by the codeword's symbols, and a per-codeword coset scalar
//! keeps every r-subset of thick columns full rank. The result trades a
//! small bandwidth overhead ε = (r−1)(1−δ)/r for sub-packetization that does
//! not grow with the number of blocks.

use crate::field::{Elem, Field, SubgroupCosets, smallest_prime_at_least, subgroup_with_cosets};
use crate::linalg::{BlockParityCheck, Matrix};
use crate::outer::OuterCode;
use crate::verify::{ArrayCodeword, RepairTranscript, VerifyError, apply_repair_matrix};
use crate::yebarg::{YeBargCode, build_yb_with_evals};
use num_rational::Ratio;
use thiserror::Error;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum ComposeError {
    #[error("outer alphabet {q} larger than inner code length {n}")]
    AlphabetLargerThanInner { q: usize, n: usize },
    #[error("no prime field below {limit} has a subgroup of order {order} with {count} cosets")]
    NoQualifyingField { order: usize, count: usize, limit: u64 },
    #[error("block index is not an outer codeword")]
    NotACodeword,
}

#[derive(Debug)]
pub struct ComposedCode {
    pub inner: YeBargCode,
    pub outer: OuterCode,
    pub field: Field,
    pub cosets: SubgroupCosets,
    /// Coset scalar σ_c per outer codeword, in codeword-enumeration order.
    pub sigma: Vec<Elem>,
    /// Block width l = N·ℓ.
    pub width: usize,
    pub pcm: BlockParityCheck,
    /// ε = (r−1)(1−δ)/r derived from the outer minimum distance.
    pub epsilon: Ratio<i64>,
}

/// Upper limit for the prime-field scan; far above any desk instance.
const FIELD_SEARCH_LIMIT: u64 = 1_000_000;

/// Builds the composed code: picks the smallest prime field whose
/// multiplicative group has a subgroup of order rn with at least M cosets,
/// instantiates the inner code on the subgroup elements, and stacks
/// σ_c^w·Diag(A_{c_1}^w, …, A_{c_N}^w) for w = 0..r−1 as the thick column of
/// codeword c.
pub fn compose(inner_n: usize, inner_k: usize, outer: OuterCode) -> Result<ComposedCode, ComposeError> {
    let (n, k) = (inner_n, inner_k);
    let r = n - k;
    if outer.q > n {
        return Err(ComposeError::AlphabetLargerThanInner { q: outer.q, n });
    }
    let m_count = outer.m_count;
    let order = r * n;
    let mut p = 2u64;
    let field = loop {
        p = smallest_prime_at_least(p);
        if p > FIELD_SEARCH_LIMIT {
            return Err(ComposeError::NoQualifyingField {
                order,
                count: m_count,
                limit: FIELD_SEARCH_LIMIT,
            });
        }
        if (p - 1) % order as u64 == 0 && (p - 1) / order as u64 >= m_count as u64 {
            break Field::prime(p).unwrap();
        }
        p += 1;
    };
    let cosets = subgroup_with_cosets(&field, order as u128, m_count).unwrap();
    let subgroup = cosets.elements();
    let evals: Vec<Vec<Elem>> =
        (0..n).map(|i| (0..r).map(|j| subgroup[i * r + j].clone()).collect()).collect();
    let inner = build_yb_with_evals(n, k, &field, evals).expect("subgroup supplies rn evals");
    let sigma = cosets.coset_reps.clone();

    let ell = inner.ell;
    let width = outer.len * ell;
    let mut grid: Vec<Vec<Matrix>> = Vec::with_capacity(r);
    // cache A_i^w to avoid rebuilding per codeword
    let mut powers: Vec<Vec<Matrix>> = Vec::with_capacity(n);
    for i in 1..=n {
        let a = inner.a_matrix(i);
        let mut pw = vec![Matrix::identity(&field, ell)];
        for w in 1..r {
            pw.push(pw[w - 1].mul(&a));
        }
        powers.push(pw);
        let _ = i;
    }
    for w in 0..r {
        let mut band = Vec::with_capacity(m_count);
        for (c_idx, c) in outer.codewords.iter().enumerate() {
            let blocks: Vec<&Matrix> = c.iter().map(|&sym| &powers[sym - 1][w]).collect();
            let diag = Matrix::block_diag(&blocks);
            let scalar = field.pow(&sigma[c_idx], w as u128);
            band.push(diag.scale(&scalar));
        }
        grid.push(band);
    }
    let m = Matrix::from_grid(&grid).unwrap();
    let pcm = BlockParityCheck::new(
        m_count,
        width,
        r,
        m,
        format!("composed inner=({n},{k}) outer={} N={}", outer.family, outer.len),
    );
    let delta = Ratio::new(outer.d_min as i64, outer.len as i64);
    let epsilon = Ratio::new((r - 1) as i64, r as i64) * (Ratio::from_integer(1) - delta);
    Ok(ComposedCode { inner, outer, field, cosets, sigma, width, pcm, epsilon })
}

impl ComposedCode {
    /// Block-diagonal repair matrix for the block of outer codeword c:
    /// the inner selectors D_{c_1}, …, D_{c_N} repeated across the r parity
    /// bands.
    pub fn repair_matrix(&self, c: &[usize]) -> Result<Matrix, ComposeError> {
        if !self.outer.codewords.iter().any(|w| w == c) {
            return Err(ComposeError::NotACodeword);
        }
        let selectors: Vec<Matrix> = c.iter().map(|&sym| self.inner.d_matrix(sym)).collect();
        let refs: Vec<&Matrix> = selectors.iter().collect();
        let diag = Matrix::block_diag(&refs);
        Ok(Matrix::kron(&Matrix::identity(&self.field, self.inner.r), &diag))
    }

    /// Repairs the block indexed by outer codeword c via the generic
    /// repair-matrix mechanics.
    pub fn repair(
        &self,
        codeword: &ArrayCodeword,
        c_idx: usize,
    ) -> Result<(Vec<Elem>, RepairTranscript), VerifyError> {
        let s = self
            .repair_matrix(&self.outer.codewords[c_idx])
            .expect("enumerated codewords are codewords");
        apply_repair_matrix(&self.pcm, &s, codeword, c_idx)
    }

    /// Eq-style per-helper accounting: helper c̃ ships
    /// Nℓ − d_H(c, c̃)·(r−1)·ℓ/r projected symbols.
    pub fn expected_helper_count(&self, c_idx: usize, helper_idx: usize) -> usize {
        let c = &self.outer.codewords[c_idx];
        let ch = &self.outer.codewords[helper_idx];
        let d = c.iter().zip(ch).filter(|(a, b)| a != b).count();
        let (r, ell) = (self.inner.r, self.inner.ell);
        self.outer.len * ell - d * (r - 1) * ell / r
    }
}

/// Per-helper download fraction of the block width: (1 + (r−1)(1−δ))/r.
pub fn epsilon_bound(r: usize, delta: f64) -> f64 {
    (1.0 + (r as f64 - 1.0) * (1.0 - delta)) / r as f64
}

/// Average per-helper fraction for a linear outer code, from the exact
/// average distance d̄: 1 − (d̄/N)·(r−1)/r.
pub fn avg_epsilon_bound(r: usize, q: usize, n: usize, m: usize) -> f64 {
    let f = avg_epsilon_bound_exact(r, q, n, m);
    *f.numer() as f64 / *f.denom() as f64
}

pub fn avg_epsilon_bound_exact(r: usize, q: usize, n: usize, m: usize) -> Ratio<i64> {
    let d_bar = Ratio::new((q as i64 - 1) * m as i64 * n as i64, q as i64 * (m as i64 - 1));
    Ratio::from_integer(1)
        - d_bar / Ratio::from_integer(n as i64) * Ratio::new(r as i64 - 1, r as i64)
}

/// Exponent-rate calculator for the maximum number of blocks attainable with
/// a GV-grade outer code: (1 − h_q(δ*))/r^q per unit of block width.
pub fn max_code_length_exponent(r: usize, q: usize, delta_star: f64) -> Result<f64, crate::outer::OuterError> {
    let rate = crate::outer::gv_rate(q, delta_star)?;
    Ok(rate / (r as f64).powi(q as i32))
}
