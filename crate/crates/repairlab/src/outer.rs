//! Outer codes with known minimum distance (repetition and Reed–Solomon
//! evaluation codes), plus the distance-rate calculators used when composing
//! with an inner code: exact average pairwise distance for linear codes and
//! the Gilbert–Varshamov rate expression.

use num_rational::Ratio;
use thiserror::Error;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum OuterError {
    #[error("code length {n} exceeds field size {q}")]
    LengthExceedsField { n: usize, q: u64 },
    #[error("need at least two codewords")]
    TooFewCodewords,
    #[error("delta outside the open interval (0, 1 - 1/q)")]
    DeltaOutOfRange,
    #[error("average-distance formula requires a linear code")]
    NotLinear,
}

/// An (N, M, D) code over the alphabet [1, q], codewords in a fixed
/// enumeration order (lexicographic by message).
#[derive(Debug, Clone)]
pub struct OuterCode {
    pub len: usize,
    pub q: usize,
    pub m_count: usize,
    pub d_min: usize,
    pub codewords: Vec<Vec<usize>>,
    pub is_linear: bool,
    pub family: String,
}

fn hamming(a: &[usize], b: &[usize]) -> usize {
    a.iter().zip(b).filter(|(x, y)| x != y).count()
}

/// Exhaustive minimum pairwise Hamming distance.
pub fn min_distance(codewords: &[Vec<usize>]) -> Result<usize, OuterError> {
    if codewords.len() < 2 {
        return Err(OuterError::TooFewCodewords);
    }
    let mut best = usize::MAX;
    for (i, a) in codewords.iter().enumerate() {
        for b in &codewords[i + 1..] {
            best = best.min(hamming(a, b));
        }
    }
    Ok(best)
}

fn finish(
    len: usize,
    q: usize,
    codewords: Vec<Vec<usize>>,
    is_linear: bool,
    family: &str,
) -> OuterCode {
    let d_min = min_distance(&codewords).expect("families generate >= 2 codewords");
    debug_assert!(codewords.iter().all(|c| c.iter().all(|&s| (1..=q).contains(&s))));
    // Plotkin consistency: 1/q <= 1 - D/N except in the full-distance case,
    // where the codeword count may not exceed q
    debug_assert!(if d_min == len { codewords.len() <= q } else { len <= q * (len - d_min) });
    OuterCode {
        len,
        q,
        m_count: codewords.len(),
        d_min,
        codewords,
        is_linear,
        family: family.to_string(),
    }
}

/// The q constant words of length N: D = N.
pub fn repetition_code(q: usize, n: usize) -> OuterCode {
    assert!(q >= 2 && n >= 1);
    let codewords = (1..=q).map(|s| vec![s; n]).collect();
    finish(n, q, codewords, true, "repetition")
}

/// Evaluations of all degree-<K polynomials over GF(q') at the first N
/// nonzero points, symbols shifted to [1, q']. MDS: D = N − K + 1.
pub fn reed_solomon_outer(q_prime: u64, n: usize, k: usize) -> Result<OuterCode, OuterError> {
    assert!(k >= 1 && k <= n);
    let field = crate::field::Field::prime(q_prime).expect("q' must be prime");
    if n as u64 > q_prime - 1 {
        return Err(OuterError::LengthExceedsField { n, q: q_prime });
    }
    let m_count = (q_prime as u128).pow(k as u32) as usize;
    let mut codewords = Vec::with_capacity(m_count);
    for msg in 0..m_count {
        // message digits are the coefficients, constant term fastest
        let mut coeffs = Vec::with_capacity(k);
        let mut rest = msg as u64;
        for _ in 0..k {
            coeffs.push(rest % q_prime);
            rest /= q_prime;
        }
        let word: Vec<usize> = (1..=n as u64)
            .map(|x| {
                let mut acc = 0u64;
                for &c in coeffs.iter().rev() {
                    acc = (acc * x + c) % q_prime;
                }
                acc as usize + 1
            })
            .collect();
        codewords.push(word);
    }
    let _ = field;
    Ok(finish(n, q_prime as usize, codewords, true, "reed-solomon"))
}

/// 1 − h_q(δ), the Gilbert–Varshamov rate expression (the vanishing slack
/// term of the existence statement is omitted).
pub fn gv_rate(q: usize, delta: f64) -> Result<f64, OuterError> {
    assert!(q >= 2);
    if delta <= 0.0 || delta >= 1.0 - 1.0 / q as f64 {
        return Err(OuterError::DeltaOutOfRange);
    }
    let lq = |x: f64| x.ln() / (q as f64).ln();
    let h = delta * lq(q as f64 - 1.0) - delta * lq(delta) - (1.0 - delta) * lq(1.0 - delta);
    Ok(1.0 - h)
}

/// Exact average pairwise distance of a linear code:
/// d̄ = ((q−1)·M)/(q·(M−1))·N.
pub fn average_distance(code: &OuterCode) -> Result<Ratio<i64>, OuterError> {
    if !code.is_linear {
        return Err(OuterError::NotLinear);
    }
    let (q, m, n) = (code.q as i64, code.m_count as i64, code.len as i64);
    Ok(Ratio::new((q - 1) * m * n, q * (m - 1)))
}

/// Brute-force average pairwise distance over unordered pairs (oracle for
/// the closed form).
pub fn average_distance_brute(code: &OuterCode) -> Ratio<i64> {
    let m = code.m_count;
    let mut total = 0i64;
    for (i, a) in code.codewords.iter().enumerate() {
        for b in &code.codewords[i + 1..] {
            total += hamming(a, b) as i64;
        }
    }
    Ratio::new(total, (m * (m - 1) / 2) as i64)
}
