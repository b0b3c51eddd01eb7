//! MSR array code with ℓ = r^n: diagonal blocks indexed by r-ary digit
//! vectors, Vandermonde-stacked parity rows, and a repair scheme that
//! downloads one r-term sum per coordinate group per helper — the cut-set
//! optimum, but not repair-by-transfer.

use crate::field::{Elem, Field};
use crate::linalg::{BlockParityCheck, Matrix};
use crate::verify::{ArrayCodeword, Download, RepairTranscript, TranscriptEntry, VerifyError};
use thiserror::Error;

/// Keeps ℓ = r^n desk-sized.
pub const ELL_BUDGET: usize = 1 << 16;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum YeBargError {
    #[error("field of order {order} has fewer than {needed} nonzero elements")]
    FieldTooSmall { order: u128, needed: usize },
    #[error("sub-packetization r^n = {ell} exceeds the budget {budget}")]
    SubpacketizationBudgetExceeded { ell: usize, budget: usize },
}

#[derive(Debug)]
pub struct YeBargCode {
    pub n: usize,
    pub k: usize,
    pub r: usize,
    pub ell: usize,
    pub field: Field,
    /// evals[i-1][j] = λ_{i,j} for i ∈ [n], j ∈ [0, r−1]; all rn distinct.
    pub evals: Vec<Vec<Elem>>,
    pub pcm: BlockParityCheck,
}

impl YeBargCode {
    /// Digit i (1-indexed, digit 1 least significant) of coordinate a.
    pub fn digit(&self, a: usize, i: usize) -> usize {
        a / self.r.pow(i as u32 - 1) % self.r
    }

    /// Coordinate a with digit i replaced by u.
    pub fn with_digit(&self, a: usize, i: usize, u: usize) -> usize {
        let w = self.r.pow(i as u32 - 1);
        a - self.digit(a, i) * w + u * w
    }

    /// Coordinate a with digit i removed (a group index in [0, ℓ/r)).
    pub fn drop_digit(&self, a: usize, i: usize) -> usize {
        let w = self.r.pow(i as u32 - 1);
        a % w + a / (w * self.r) * w
    }

    /// Group index b with digit u inserted at position i.
    pub fn insert_digit(&self, b: usize, i: usize, u: usize) -> usize {
        let w = self.r.pow(i as u32 - 1);
        b % w + u * w + b / w * (w * self.r)
    }

    /// The ℓ×ℓ diagonal block of node i (1-indexed): entry (a,a) = λ_{i,a_i}.
    pub fn a_matrix(&self, i: usize) -> Matrix {
        let f = &self.field;
        Matrix::from_fn(f, self.ell, self.ell, |a, b| {
            if a == b { self.evals[i - 1][self.digit(a, i)].clone() } else { f.zero() }
        })
    }

    /// The (ℓ/r)×ℓ selector: row b picks the r coordinates that collapse to
    /// group b when digit i is dropped.
    pub fn d_matrix(&self, i: usize) -> Matrix {
        let f = &self.field;
        Matrix::from_fn(f, self.ell / self.r, self.ell, |b, a| {
            if self.drop_digit(a, i) == b { f.one() } else { f.zero() }
        })
    }

    /// Repair matrix S_i = I_r ⊗ D_i.
    pub fn repair_matrix(&self, i: usize) -> Matrix {
        Matrix::kron(&Matrix::identity(&self.field, self.r), &self.d_matrix(i))
    }

    /// Repairs block i (1-indexed). Per coordinate group b each helper ships
    /// the sum of its r symbols in that group; the failed block's r symbols
    /// per group come out of an r×r Vandermonde solve in λ_{i,0..r−1}.
    pub fn repair(
        &self,
        codeword: &ArrayCodeword,
        i: usize,
    ) -> Result<(Vec<Elem>, RepairTranscript), VerifyError> {
        let internal = i - 1;
        if codeword.erased != vec![internal] {
            return Err(VerifyError::WrongErasureCount {
                expected: vec![internal],
                found: codeword.erased.clone(),
            });
        }
        let f = &self.field;
        let mut transcript = RepairTranscript::new(internal);
        let mut block = vec![f.zero(); self.ell];
        let vander = Matrix::from_fn(f, self.r, self.r, |w, u| {
            f.pow(&self.evals[i - 1][u], w as u128)
        });
        for b in 0..self.ell / self.r {
            let coords: Vec<usize> = (0..self.r).map(|u| self.insert_digit(b, i, u)).collect();
            let mut rhs = Matrix::zero(f, self.r, 1);
            for j in 1..=self.n {
                if j == i {
                    continue;
                }
                let indices: Vec<usize> =
                    coords.iter().map(|&a| (j - 1) * self.ell + a).collect();
                let mut mu = f.zero();
                for &idx in &indices {
                    mu = f.add(&mu, &codeword.symbols[idx]);
                }
                transcript.entries.push(TranscriptEntry {
                    helper: j - 1,
                    stage: 1,
                    download: Download::LinearCombo {
                        coeffs: vec![f.one(); indices.len()],
                        indices,
                    },
                });
                // λ_{j, digit_j} is constant across the group
                let lam = &self.evals[j - 1][self.digit(coords[0], j)];
                for w in 0..self.r {
                    let t = f.mul(&f.pow(lam, w as u128), &mu);
                    rhs.set(w, 0, f.sub(rhs.at(w, 0), &t));
                }
            }
            let x = vander.solve(&rhs)?;
            for (u, &a) in coords.iter().enumerate() {
                block[a] = x.at(u, 0).clone();
            }
        }
        Ok((block, transcript))
    }
}

/// Builds the (n, k) code over the given field: evaluation points are the
/// first rn nonzero field elements in canonical order, assigned row-major in
/// (i, j); the parity-check matrix stacks the w-th powers of the diagonal
/// blocks for w = 0..r−1.
pub fn build_yb(n: usize, k: usize, field: &Field) -> Result<YeBargCode, YeBargError> {
    assert!(n >= 2 && k >= 1 && k < n);
    let r = n - k;
    let ell = r
        .checked_pow(n as u32)
        .filter(|&l| l <= ELL_BUDGET)
        .ok_or(YeBargError::SubpacketizationBudgetExceeded { ell: usize::MAX, budget: ELL_BUDGET })?;
    if ell > ELL_BUDGET {
        return Err(YeBargError::SubpacketizationBudgetExceeded { ell, budget: ELL_BUDGET });
    }
    if field.order() - 1 < (r * n) as u128 {
        return Err(YeBargError::FieldTooSmall { order: field.order(), needed: r * n });
    }
    let evals: Vec<Vec<Elem>> = (0..n)
        .map(|i| (0..r).map(|j| field.elem_at((i * r + j + 1) as u128)).collect())
        .collect();
    build_yb_with_evals(n, k, field, evals)
}

/// Same construction with caller-chosen evaluation points (used by the
/// composition, which draws them from a multiplicative subgroup).
pub fn build_yb_with_evals(
    n: usize,
    k: usize,
    field: &Field,
    evals: Vec<Vec<Elem>>,
) -> Result<YeBargCode, YeBargError> {
    let r = n - k;
    let ell = r.pow(n as u32);
    let mut code = YeBargCode {
        n,
        k,
        r,
        ell,
        field: field.clone(),
        evals,
        // placeholder; replaced below once a_matrix is available
        pcm: BlockParityCheck::new(
            1,
            1,
            1,
            Matrix::identity(field, 1),
            "placeholder",
        ),
    };
    let mut grid = Vec::with_capacity(r);
    for w in 0..r {
        let mut band = Vec::with_capacity(n);
        for i in 1..=n {
            let a = code.a_matrix(i);
            let mut pw = Matrix::identity(field, ell);
            for _ in 0..w {
                pw = pw.mul(&a);
            }
            band.push(pw);
        }
        grid.push(band);
    }
    let m = Matrix::from_grid(&grid).unwrap();
    code.pcm = BlockParityCheck::new(n, ell, r, m, format!("yb n={n} k={k}"));
    Ok(code)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::verify::{TrialRng, check_mds, encode_systematic, is_repair_by_transfer};

    fn desk() -> YeBargCode {
        build_yb(4, 2, &Field::prime(11).unwrap()).unwrap()
    }

    #[test]
    fn shapes_and_validation() {
        let c = desk();
        assert_eq!(c.ell, 16);
        assert_eq!((c.pcm.matrix.rows, c.pcm.matrix.cols), (32, 64));

        // r = 1 degenerate: single all-ones parity row group
        let c1 = build_yb(3, 2, &Field::prime(7).unwrap()).unwrap();
        assert_eq!(c1.ell, 1);
        assert_eq!(c1.pcm.matrix.rows, 1);

        let c2 = build_yb(3, 1, &Field::prime(7).unwrap()).unwrap();
        assert_eq!(c2.ell, 8);

        assert!(matches!(
            build_yb(4, 2, &Field::prime(7).unwrap()),
            Err(YeBargError::FieldTooSmall { .. })
        ));
    }

    #[test]
    fn evals_distinct() {
        let c = desk();
        let all: std::collections::HashSet<&Elem> = c.evals.iter().flatten().collect();
        assert_eq!(all.len(), c.r * c.n);
    }

    #[test]
    fn d_matrix_rows_have_r_ones() {
        let c = desk();
        let f = &c.field;
        for i in 1..=c.n {
            let d = c.d_matrix(i);
            for b in 0..d.rows {
                let ones = (0..d.cols).filter(|&a| d.at(b, a) == &f.one()).count();
                let other = (0..d.cols)
                    .filter(|&a| !f.is_zero(d.at(b, a)) && d.at(b, a) != &f.one())
                    .count();
                assert_eq!(ones, c.r);
                assert_eq!(other, 0);
            }
        }
    }

    #[test]
    fn digit_round_trips() {
        let c = desk();
        for a in 0..c.ell {
            for i in 1..=c.n {
                let b = c.drop_digit(a, i);
                assert_eq!(c.insert_digit(b, i, c.digit(a, i)), a);
                for u in 0..c.r {
                    assert_eq!(c.digit(c.with_digit(a, i, u), i), u);
                }
            }
        }
    }

    #[test]
    fn mds_exhaustive() {
        let c = desk();
        let v = check_mds(&c.pcm);
        assert!(v.is_mds);
        assert_eq!(v.subsets_checked, 6);
    }

    #[test]
    fn repair_matrix_ranks() {
        let c = desk();
        for i in 1..=c.n {
            let s = c.repair_matrix(i);
            for j in 1..=c.n {
                let sh = s.mul(&c.pcm.thick_column(j - 1));
                let expect = if j == i { c.ell } else { c.ell / c.r };
                assert_eq!(sh.rank(), expect, "i={i} j={j}");
            }
        }
    }

    #[test]
    fn rowspace_intersections() {
        // same node: distinct powers meet trivially; different node: all
        // powers project to the same ℓ/r-dimensional space
        let c = desk();
        for i in 1..=c.n {
            let d = c.d_matrix(i);
            for j in 1..=c.n {
                let a = c.a_matrix(j);
                let pw: Vec<Matrix> = {
                    let mut v = vec![d.clone()];
                    for w in 1..c.r {
                        let mut m = d.clone();
                        for _ in 0..w {
                            m = m.mul(&a);
                        }
                        v.push(m);
                    }
                    v
                };
                for w1 in 0..c.r {
                    for w2 in w1 + 1..c.r {
                        let stacked = Matrix::vstack(&[&pw[w1], &pw[w2]]).unwrap();
                        if i == j {
                            assert_eq!(stacked.rank(), 2 * c.ell / c.r);
                        } else {
                            assert_eq!(stacked.rank(), c.ell / c.r);
                        }
                    }
                }
            }
        }
    }

    #[test]
    fn repair_round_trip_and_counts() {
        let c = desk();
        let mut rng = TrialRng::new(3);
        let msg = rng.message(&c.field, c.k * c.ell);
        let cw = encode_systematic(&c.pcm, &msg).unwrap();
        for i in 1..=c.n {
            let (block, t) = c.repair(&cw.erase(&[i - 1]), i).unwrap();
            assert_eq!(block, cw.block(i - 1));
            assert_eq!(t.total(), (c.n - 1) * c.ell / c.r); // 24: cut-set value
            for (_, count) in t.per_helper_counts() {
                assert_eq!(count, c.ell / c.r);
            }
            assert!(!t.is_raw_only());
        }
    }

    #[test]
    fn not_repair_by_transfer() {
        let c = desk();
        for i in 1..=c.n {
            let s = c.repair_matrix(i);
            let (_, overall) = is_repair_by_transfer(&c.pcm, &s, i - 1);
            assert!(!overall);
        }
    }

    #[test]
    fn r1_repair_degenerate() {
        let c = build_yb(3, 2, &Field::prime(7).unwrap()).unwrap();
        let mut rng = TrialRng::new(4);
        let msg = rng.message(&c.field, 2);
        let cw = encode_systematic(&c.pcm, &msg).unwrap();
        let (block, t) = c.repair(&cw.erase(&[0]), 1).unwrap();
        assert_eq!(block, cw.block(0));
        assert_eq!(t.total(), 2);
    }
}
