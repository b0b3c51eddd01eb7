//! MDS array codes with sub-packetization ℓ = r^τ and a two-stage
//! repair-by-transfer scheme.
//!
//! Blocks are indexed by pairs (u, v) with u ∈ [r], v ∈ [s], s = n/r; the
//! block label is i = (u−1)s + v. Each block stores one symbol per coordinate
//! vector x ∈ [r]^τ. The parity-check matrix has ℓ "plain sum" rows and
//! (r−1)ℓ rows mixing λ-power sums with ψ-coupled cross terms.

use crate::field::{Elem, FieldTower, make_tower};
use crate::linalg::{BlockParityCheck, Matrix};
use crate::verify::{
    ArrayCodeword, Download, RepairTranscript, TranscriptEntry, VerifyError, encode_systematic,
};
use std::collections::BTreeSet;
use thiserror::Error;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum SmallSubError {
    #[error("r = n - k = {r} must divide n = {n}")]
    DivisibilityViolation { n: usize, r: usize },
    #[error("tau = {tau} outside [1, {max}]")]
    TauOutOfRange { tau: usize, max: usize },
}

/// The two-branch modular map: e ↦ m when m | e, else e mod m. Keeps values
/// in [1, m] for 1-indexed coordinate arithmetic.
pub fn overline_map(e: usize, m: usize) -> usize {
    debug_assert!(e >= 1 && m >= 1);
    let rem = e % m;
    if rem == 0 { m } else { rem }
}

#[derive(Debug)]
pub struct SmallSubCode {
    pub n: usize,
    pub k: usize,
    pub r: usize,
    pub s: usize,
    pub tau: usize,
    pub ell: usize,
    pub tower: FieldTower,
    pub pcm: BlockParityCheck,
}

impl SmallSubCode {
    /// Block label (1-indexed) for node (u, v).
    pub fn block_label(&self, u: usize, v: usize) -> usize {
        (u - 1) * self.s + v
    }

    /// Inverse of `block_label`.
    pub fn node_of(&self, label: usize) -> (usize, usize) {
        ((label - 1) / self.s + 1, (label - 1) % self.s + 1)
    }

    /// Offset of coordinate vector x ∈ [r]^τ within a block: lexicographic
    /// with x_τ varying fastest.
    pub fn coord_index(&self, x: &[usize]) -> usize {
        x.iter().fold(0, |acc, &xi| acc * self.r + (xi - 1))
    }

    pub fn coord_at(&self, mut idx: usize) -> Vec<usize> {
        let mut x = vec![1; self.tau];
        for slot in x.iter_mut().rev() {
            *slot = idx % self.r + 1;
            idx /= self.r;
        }
        x
    }

    /// Global symbol index of coordinate x at node (u, v).
    pub fn symbol_index(&self, x: &[usize], u: usize, v: usize) -> usize {
        (self.block_label(u, v) - 1) * self.ell + self.coord_index(x)
    }

    pub fn encode(&self, message: &[Elem]) -> Result<ArrayCodeword, VerifyError> {
        encode_systematic(&self.pcm, message)
    }

    /// The pcm rows consumed when repairing block (u*, v*): the plain-sum
    /// rows at coordinates with x_a = u*, plus for each p the mixed rows at
    /// the same coordinates. These ℓ rows drive both repair stages, so the
    /// induced repair matrix is their 0/1 row selection.
    pub fn repair_rows(&self, label: usize) -> Vec<usize> {
        let (u_star, v_star) = self.node_of(label);
        let a = overline_map(v_star, self.tau);
        let mut rows = Vec::with_capacity(self.ell);
        for p in 0..self.r {
            for idx in 0..self.ell {
                let x = self.coord_at(idx);
                if x[a - 1] == u_star {
                    rows.push(p * self.ell + idx);
                }
            }
        }
        rows
    }

    /// 0/1 row-selection repair matrix for block `label` (1-indexed).
    pub fn repair_matrix(&self, label: usize) -> Matrix {
        let rows = self.repair_rows(label);
        let f = self.pcm.field();
        Matrix::from_fn(f, rows.len(), self.pcm.matrix.rows, |i, j| {
            if rows[i] == j { f.one() } else { f.zero() }
        })
    }

    /// Two-stage repair of block `label` (1-indexed). Stage 1 reads the
    /// helpers' symbols at coordinates with x_a = u* and completes the
    /// plain-sum rows. Stage 2 walks p = 1..r−1 and coordinates in
    /// lexicographic order, isolating the ψ-coupled symbol of the failed
    /// block in each mixed row; the only new reads are the cross terms from
    /// sibling blocks (u*, v) sharing the coordinate slot a.
    pub fn repair(
        &self,
        codeword: &ArrayCodeword,
        label: usize,
    ) -> Result<(Vec<Elem>, RepairTranscript), VerifyError> {
        let internal = label - 1;
        if codeword.erased != vec![internal] {
            return Err(VerifyError::WrongErasureCount {
                expected: vec![internal],
                found: codeword.erased.clone(),
            });
        }
        let f = self.pcm.field().clone();
        let (u_star, v_star) = self.node_of(label);
        let a = overline_map(v_star, self.tau);

        let mut transcript = RepairTranscript::new(internal);
        let mut fetched: BTreeSet<usize> = BTreeSet::new();
        let fetch = |transcript: &mut RepairTranscript,
                         fetched: &mut BTreeSet<usize>,
                         stage: u8,
                         index: usize|
         -> Elem {
            if fetched.insert(index) {
                transcript.entries.push(TranscriptEntry {
                    helper: index / self.ell,
                    stage,
                    download: Download::RawSymbol { index },
                });
            }
            codeword.symbols[index].clone()
        };

        let mut block = vec![f.zero(); self.ell];
        let mut known = vec![false; self.ell];

        // stage 1: plain-sum rows at coordinates x with x_a = u*
        for idx in 0..self.ell {
            let x = self.coord_at(idx);
            if x[a - 1] != u_star {
                continue;
            }
            let mut acc = f.zero();
            for u in 1..=self.r {
                for v in 1..=self.s {
                    if (u, v) == (u_star, v_star) {
                        continue;
                    }
                    let sym = fetch(&mut transcript, &mut fetched, 1, self.symbol_index(&x, u, v));
                    acc = f.add(&acc, &sym);
                }
            }
            block[idx] = f.neg(&acc);
            known[idx] = true;
        }

        // stage 2: mixed rows at the same coordinates isolate, for each p,
        // the failed block's symbol at x with slot a moved to u* + p
        // ψ is invertible whenever mixed rows exist (r > 1); for r = 1 the
        // tower is trivial and stage 2 is empty
        let psi_inv = if self.r > 1 { Some(f.inv(&self.tower.psi).unwrap()) } else { None };
        for p in 1..self.r {
            for idx in 0..self.ell {
                let y = self.coord_at(idx);
                if y[a - 1] != u_star {
                    continue;
                }
                let mut acc = f.zero();
                // λ-power part: all symbols at coordinate y — stage-1 reads
                // plus the already-recovered failed-block symbol
                for u in 1..=self.r {
                    for v in 1..=self.s {
                        let lambda_p =
                            f.pow(&self.tower.lambdas[self.block_label(u, v) - 1], p as u128);
                        let sym = if (u, v) == (u_star, v_star) {
                            debug_assert!(known[idx]);
                            block[idx].clone()
                        } else {
                            fetch(&mut transcript, &mut fetched, 2, self.symbol_index(&y, u, v))
                        };
                        acc = f.add(&acc, &f.mul(&lambda_p, &sym));
                    }
                }
                // ψ-coupled part over v ∈ [s]; the v = v* term is the target
                let mut target_idx = None;
                for v in 1..=self.s {
                    let av = overline_map(v, self.tau);
                    let mut xb = y.clone();
                    xb[av - 1] = overline_map(y[av - 1] + p, self.r);
                    let u_here = y[av - 1];
                    if (u_here, v) == (u_star, v_star) {
                        debug_assert_eq!(av, a);
                        target_idx = Some(self.coord_index(&xb));
                        continue;
                    }
                    let sym =
                        fetch(&mut transcript, &mut fetched, 2, self.symbol_index(&xb, u_here, v));
                    acc = f.add(&acc, &f.mul(&self.tower.psi, &sym));
                }
                let target_idx = target_idx.expect("y_a = u* forces a v = v* cross term");
                // ψ·c_target + acc = 0
                let value = f.mul(psi_inv.as_ref().unwrap(), &f.neg(&acc));
                block[target_idx] = value;
                known[target_idx] = true;
            }
        }
        debug_assert!(known.iter().all(|&b| b));
        Ok((block, transcript))
    }
}

/// Builds the (n, k) code with design parameter τ. Row layout: rows [0, ℓ)
/// are the plain sums (one per coordinate x); rows [pℓ, (p+1)ℓ) for
/// p ∈ [1, r−1] carry the λ^p sums plus ψ-coupled cross terms.
pub fn build_smallsub(n: usize, k: usize, tau: usize) -> Result<SmallSubCode, SmallSubError> {
    assert!(n >= 2 && k >= 1 && k < n);
    let r = n - k;
    if n % r != 0 {
        return Err(SmallSubError::DivisibilityViolation { n, r });
    }
    let s = n / r;
    if tau < 1 || tau > s {
        return Err(SmallSubError::TauOutOfRange { tau, max: s });
    }
    let ell = r.pow(tau as u32);
    let tower = make_tower(n, r, ell);
    let f = tower.b_field.clone();

    let mut m = Matrix::zero(&f, r * ell, n * ell);
    let code = SmallSubCodeShape { n, r, s, tau, ell };
    for idx in 0..ell {
        let x = code.coord_at(idx);
        // plain sums
        for u in 1..=r {
            for v in 1..=s {
                m.set(idx, code.symbol_index(&x, u, v), f.one());
            }
        }
        // mixed rows
        for p in 1..r {
            let row = p * ell + idx;
            for u in 1..=r {
                for v in 1..=s {
                    let col = code.symbol_index(&x, u, v);
                    let lambda_p = f.pow(&tower.lambdas[code.block_label(u, v) - 1], p as u128);
                    m.set(row, col, f.add(m.at(row, col), &lambda_p));
                }
            }
            for v in 1..=s {
                let av = overline_map(v, tau);
                let mut xb = x.clone();
                xb[av - 1] = overline_map(x[av - 1] + p, r);
                let col = code.symbol_index(&xb, x[av - 1], v);
                m.set(row, col, f.add(m.at(row, col), &tower.psi));
            }
        }
    }
    let pcm = BlockParityCheck::new(n, ell, r, m, format!("smallsub n={n} k={k} tau={tau}"));
    Ok(SmallSubCode { n, k, r, s, tau, ell, tower, pcm })
}

/// Index arithmetic shared between the builder (which has no code object yet)
/// and `SmallSubCode`.
struct SmallSubCodeShape {
    n: usize,
    r: usize,
    s: usize,
    tau: usize,
    ell: usize,
}

impl SmallSubCodeShape {
    fn block_label(&self, u: usize, v: usize) -> usize {
        (u - 1) * self.s + v
    }
    fn coord_index(&self, x: &[usize]) -> usize {
        x.iter().fold(0, |acc, &xi| acc * self.r + (xi - 1))
    }
    fn coord_at(&self, mut idx: usize) -> Vec<usize> {
        let mut x = vec![1; self.tau];
        for slot in x.iter_mut().rev() {
            *slot = idx % self.r + 1;
            idx /= self.r;
        }
        let _ = self.n;
        x
    }
    fn symbol_index(&self, x: &[usize], u: usize, v: usize) -> usize {
        (self.block_label(u, v) - 1) * self.ell + self.coord_index(x)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::verify::{TrialRng, check_mds, is_repair_by_transfer};

    #[test]
    fn overline_map_cases() {
        assert_eq!(overline_map(3, 3), 3);
        assert_eq!(overline_map(4, 3), 1);
        assert_eq!(overline_map(3, 2), 1);
        assert_eq!(overline_map(2, 1), 1);
    }

    #[test]
    fn build_validation() {
        assert!(matches!(
            build_smallsub(7, 4, 1),
            Err(SmallSubError::DivisibilityViolation { .. })
        ));
        assert!(matches!(build_smallsub(6, 3, 3), Err(SmallSubError::TauOutOfRange { .. })));
        assert!(build_smallsub(6, 3, 2).is_ok()); // tau = s specialization
    }

    #[test]
    fn degenerate_single_parity() {
        let code = build_smallsub(2, 1, 1).unwrap();
        assert_eq!(code.ell, 1);
        assert_eq!(code.pcm.matrix.rows, 1);
        let f = code.pcm.field().clone();
        for j in 0..2 {
            assert_eq!(code.pcm.matrix.at(0, j), &f.one());
        }
        let cw = code.encode(&[f.embed(2)]).unwrap();
        let (block, t) = code.repair(&cw.erase(&[1]), 2).unwrap();
        assert_eq!(block, cw.block(1));
        assert_eq!(t.total(), 1);
    }

    #[test]
    fn n6_pcm_structure() {
        // r = 3, s = 2, ℓ = 3, blocks (u,v) → (u−1)·2 + v
        let code = build_smallsub(6, 3, 1).unwrap();
        let f = code.pcm.field().clone();
        let m = &code.pcm.matrix;
        assert_eq!((m.rows, m.cols), (9, 18));
        assert_eq!(code.tower.l_field.p(), 7);
        assert_eq!(code.tower.b_field.degree(), 7);

        // plain-sum row for x = 1: ones at coordinate 1 of every block
        for i in 1..=6 {
            assert_eq!(m.at(0, (i - 1) * 3), &f.one());
            assert!(f.is_zero(m.at(0, (i - 1) * 3 + 1)));
        }
        // mixed row p=1, x=1: λ_i at coordinate 1 of block i, plus ψ at
        // coordinate 2 of blocks (1,1) and (1,2)
        let row = 3;
        for i in 1..=6usize {
            assert_eq!(m.at(row, (i - 1) * 3), &f.embed(i as u64));
        }
        assert_eq!(m.at(row, 1), &code.tower.psi); // block 1, coord 2
        assert_eq!(m.at(row, 3 + 1), &code.tower.psi); // block 2, coord 2
        for i in 3..=6 {
            assert!(f.is_zero(m.at(row, (i - 1) * 3 + 1)));
        }
        // mixed row p=2, x=3: λ_i² at coord 3, ψ at coord overline(3+2,3)=2
        // of blocks (3,1)=5 and (3,2)=6
        let row = 2 * 3 + 2;
        for i in 1..=6u64 {
            assert_eq!(m.at(row, (i as usize - 1) * 3 + 2), &f.embed(i * i % 7));
        }
        assert_eq!(m.at(row, 4 * 3 + 1), &code.tower.psi);
        assert_eq!(m.at(row, 5 * 3 + 1), &code.tower.psi);
    }

    #[test]
    fn n6_repair_counts() {
        let code = build_smallsub(6, 3, 1).unwrap();
        let f = code.pcm.field().clone();
        let mut rng = TrialRng::new(1);
        let msg = rng.message(&f, code.k * code.ell);
        let cw = code.encode(&msg).unwrap();
        for label in 1..=6 {
            let (block, t) = code.repair(&cw.erase(&[label - 1]), label).unwrap();
            assert_eq!(block, cw.block(label - 1));
            assert_eq!(t.stage_count(1), 5);
            assert_eq!(t.stage_count(2), 2);
            assert_eq!(t.total(), 7);
            assert!(t.is_raw_only());
            // one helper ships 3 symbols, the rest 1 each
            let counts: Vec<usize> = t.per_helper_counts().values().copied().collect();
            assert_eq!(counts.iter().sum::<usize>(), 7);
            assert_eq!(counts.iter().filter(|&&c| c == 3).count(), 1);
            assert_eq!(counts.iter().filter(|&&c| c == 1).count(), 4);
        }
    }

    #[test]
    fn n6_mds_and_transfer() {
        let code = build_smallsub(6, 3, 1).unwrap();
        let verdict = check_mds(&code.pcm);
        assert!(verdict.is_mds);
        assert_eq!(verdict.subsets_checked, 20);
        for label in 1..=6 {
            let s = code.repair_matrix(label);
            let sh = s.mul(&code.pcm.thick_column(label - 1));
            assert_eq!(sh.rank(), code.ell);
            let (_, overall) = is_repair_by_transfer(&code.pcm, &s, label - 1);
            assert!(overall);
        }
    }

    #[test]
    fn encode_linearity() {
        let code = build_smallsub(6, 3, 1).unwrap();
        let f = code.pcm.field().clone();
        let mut rng = TrialRng::new(5);
        let m1 = rng.message(&f, 9);
        let m2 = rng.message(&f, 9);
        let sum: Vec<_> = m1.iter().zip(&m2).map(|(a, b)| f.add(a, b)).collect();
        let c1 = code.encode(&m1).unwrap();
        let c2 = code.encode(&m2).unwrap();
        let cs = code.encode(&sum).unwrap();
        for (i, s) in cs.symbols.iter().enumerate() {
            assert_eq!(s, &f.add(&c1.symbols[i], &c2.symbols[i]));
        }
    }

    #[test]
    fn tau2_msr_specialization() {
        // τ = s = 2 at (n=6, k=3): ℓ = 9; every repair totals (n−1)ℓ/r = 15,
        // the cut-set value
        let code = build_smallsub(6, 3, 2).unwrap();
        let f = code.pcm.field().clone();
        let mut rng = TrialRng::new(9);
        let msg = rng.message(&f, code.k * code.ell);
        let cw = code.encode(&msg).unwrap();
        for label in 1..=6 {
            let (block, t) = code.repair(&cw.erase(&[label - 1]), label).unwrap();
            assert_eq!(block, cw.block(label - 1));
            assert_eq!(t.total(), 15);
        }
    }
}
