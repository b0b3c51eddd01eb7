//! Construction-agnostic verification: exhaustive MDS checks, an erasure
//! decoding oracle, the generic repair-matrix executor, and the
//! repair-by-transfer classifier.

use crate::field::Elem;
use crate::linalg::{BlockParityCheck, LinalgError, Matrix};
use itertools::Itertools;
use rayon::prelude::*;
use std::collections::BTreeMap;
use thiserror::Error;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum VerifyError {
    #[error("expected exactly the blocks {expected:?} erased, found {found:?}")]
    WrongErasureCount { expected: Vec<usize>, found: Vec<usize> },
    #[error("erasure pattern is underdetermined (MDS violation)")]
    Underdetermined,
    #[error("repair matrix rank-deficient on the target thick column")]
    RepairMatrixRankDeficient,
    #[error("parity sub-system for the chosen parity blocks is singular")]
    SingularParityBlock,
    #[error(transparent)]
    Linalg(#[from] LinalgError),
}

/// A codeword of an array code: n blocks of ℓ field elements each, with an
/// erasure mask. Erased blocks keep stale storage that must not be read.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ArrayCodeword {
    pub n: usize,
    pub ell: usize,
    pub symbols: Vec<Elem>,
    pub erased: Vec<usize>,
}

impl ArrayCodeword {
    pub fn new(n: usize, ell: usize, symbols: Vec<Elem>) -> Self {
        assert_eq!(symbols.len(), n * ell);
        ArrayCodeword { n, ell, symbols, erased: Vec::new() }
    }

    pub fn block(&self, i: usize) -> &[Elem] {
        assert!(!self.erased.contains(&i), "reading an erased block");
        &self.symbols[i * self.ell..(i + 1) * self.ell]
    }

    pub fn erase(&self, blocks: &[usize]) -> Self {
        let mut c = self.clone();
        c.erased = blocks.to_vec();
        c.erased.sort_unstable();
        c
    }

    /// Column-vector view of block i (reads through the erasure mask; the
    /// ambient field travels with the parity-check matrix, not the codeword).
    pub fn block_vector_in(&self, field: &crate::field::Field, i: usize) -> Matrix {
        Matrix::from_fn(field, self.ell, 1, |row, _| self.symbols[i * self.ell + row].clone())
    }
}

/// One downloaded quantity from a helper.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Download {
    /// A stored symbol forwarded verbatim; index is global (block·ℓ + offset).
    RawSymbol { index: usize },
    /// A helper-side linear combination of stored symbols.
    LinearCombo { indices: Vec<usize>, coeffs: Vec<Elem> },
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TranscriptEntry {
    pub helper: usize,
    pub stage: u8,
    pub download: Download,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RepairTranscript {
    pub target: usize,
    pub entries: Vec<TranscriptEntry>,
}

impl RepairTranscript {
    pub fn new(target: usize) -> Self {
        RepairTranscript { target, entries: Vec::new() }
    }

    pub fn total(&self) -> usize {
        self.entries.len()
    }

    pub fn per_helper_counts(&self) -> BTreeMap<usize, usize> {
        let mut counts = BTreeMap::new();
        for e in &self.entries {
            *counts.entry(e.helper).or_insert(0) += 1;
        }
        counts
    }

    pub fn stage_count(&self, stage: u8) -> usize {
        self.entries.iter().filter(|e| e.stage == stage).count()
    }

    /// True iff every entry forwards a stored symbol verbatim.
    pub fn is_raw_only(&self) -> bool {
        self.entries.iter().all(|e| matches!(e.download, Download::RawSymbol { .. }))
    }
}

/// Verdict of the exhaustive thick-column subset check.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MdsVerdict {
    pub is_mds: bool,
    pub subsets_checked: usize,
    pub failing_subset: Option<Vec<usize>>,
}

/// Checks that every r-subset of thick columns has full rank rℓ. Subsets are
/// scanned in lexicographic order; the first failure (in that order) is
/// reported even though checks run in parallel.
pub fn check_mds(pcm: &BlockParityCheck) -> MdsVerdict {
    let r = pcm.r;
    let subsets: Vec<Vec<usize>> = (0..pcm.n).combinations(r).collect();
    let count = subsets.len();
    let failing = subsets.par_iter().find_first(|s| {
        let cols: Vec<Matrix> = s.iter().map(|&i| pcm.thick_column(i)).collect();
        let refs: Vec<&Matrix> = cols.iter().collect();
        let sub = Matrix::hstack(&refs).unwrap();
        sub.rank() != r * pcm.ell
    });
    MdsVerdict {
        is_mds: failing.is_none(),
        subsets_checked: count,
        failing_subset: failing.cloned(),
    }
}

/// Recovers all erased blocks (≤ r of them) by solving the parity system
/// restricted to the erased thick columns.
pub fn erasure_decode(
    pcm: &BlockParityCheck,
    codeword: &ArrayCodeword,
) -> Result<ArrayCodeword, VerifyError> {
    let field = pcm.field().clone();
    let erased = codeword.erased.clone();
    assert!(erased.len() <= pcm.r, "at most r erasures are decodable");
    if erased.is_empty() {
        return Ok(codeword.clone());
    }
    // rhs = -sum over known blocks of H_j c_j
    let mut rhs = Matrix::zero(&field, pcm.r * pcm.ell, 1);
    for j in 0..pcm.n {
        if erased.contains(&j) {
            continue;
        }
        rhs = rhs.add(&pcm.thick_column(j).mul(&codeword.block_vector_in(&field, j)).neg());
    }
    let cols: Vec<Matrix> = erased.iter().map(|&i| pcm.thick_column(i)).collect();
    let refs: Vec<&Matrix> = cols.iter().collect();
    let a = Matrix::hstack(&refs)?;
    let x = match a.solve_general(&rhs)? {
        Some(x) => x,
        None => return Err(VerifyError::Underdetermined),
    };
    let mut out = codeword.clone();
    out.erased.clear();
    for (pos, &i) in erased.iter().enumerate() {
        for row in 0..pcm.ell {
            out.symbols[i * pcm.ell + row] = x.at(pos * pcm.ell + row, 0).clone();
        }
    }
    Ok(out)
}

/// Generic one-block repair from a repair matrix S: solves
/// (S·H_i)·c_i = −Σ_{j≠i} (S·H_j)·c_j and records per-helper costs as
/// rank(S·H_j). Downloads are linear-combination descriptors taken from the
/// nonzero rows of a reduced basis of S·H_j.
pub fn apply_repair_matrix(
    pcm: &BlockParityCheck,
    s: &Matrix,
    codeword: &ArrayCodeword,
    i: usize,
) -> Result<(Vec<Elem>, RepairTranscript), VerifyError> {
    if codeword.erased != vec![i] {
        return Err(VerifyError::WrongErasureCount {
            expected: vec![i],
            found: codeword.erased.clone(),
        });
    }
    let field = pcm.field().clone();
    let sh_i = s.mul(&pcm.thick_column(i));
    if sh_i.rank() != pcm.ell {
        return Err(VerifyError::RepairMatrixRankDeficient);
    }
    let mut transcript = RepairTranscript::new(i);
    let mut rhs = Matrix::zero(&field, s.rows, 1);
    for j in 0..pcm.n {
        if j == i {
            continue;
        }
        let sh_j = s.mul(&pcm.thick_column(j));
        let contribution = sh_j.mul(&codeword.block_vector_in(&field, j));
        rhs = rhs.add(&contribution.neg());
        // per-helper cost: a reduced basis of the helper's projected symbols
        let basis = sh_j.rref();
        for row in 0..basis.rows {
            let nz: Vec<usize> =
                (0..basis.cols).filter(|&c| !field.is_zero(basis.at(row, c))).collect();
            if nz.is_empty() {
                continue;
            }
            let download = if nz.len() == 1 && basis.at(row, nz[0]) == &field.one() {
                Download::RawSymbol { index: j * pcm.ell + nz[0] }
            } else {
                Download::LinearCombo {
                    indices: nz.iter().map(|&c| j * pcm.ell + c).collect(),
                    coeffs: nz.iter().map(|&c| basis.at(row, c).clone()).collect(),
                }
            };
            transcript.entries.push(TranscriptEntry { helper: j, stage: 1, download });
        }
    }
    let block = match sh_i.solve_general(&rhs)? {
        Some(x) => (0..pcm.ell).map(|row| x.at(row, 0).clone()).collect(),
        None => return Err(VerifyError::Underdetermined),
    };
    Ok((block, transcript))
}

/// Per-helper repair-by-transfer classification for a repair matrix: helper j
/// passes iff rowspace(S·H_j) is spanned by standard unit vectors, i.e. the
/// fully reduced echelon form has exactly one nonzero entry per nonzero row.
pub fn is_repair_by_transfer(pcm: &BlockParityCheck, s: &Matrix, i: usize) -> (Vec<bool>, bool) {
    let field = pcm.field().clone();
    let mut per_helper = Vec::new();
    for j in 0..pcm.n {
        if j == i {
            continue;
        }
        let reduced = s.mul(&pcm.thick_column(j)).rref();
        let ok = (0..reduced.rows).all(|row| {
            let nz = (0..reduced.cols).filter(|&c| !field.is_zero(reduced.at(row, c))).count();
            nz <= 1
        });
        per_helper.push(ok);
    }
    let overall = per_helper.iter().all(|&b| b);
    (per_helper, overall)
}

/// Systematic encoder shared by all constructions: message fills blocks
/// 0..k−1, parity blocks are solved from the parity system restricted to the
/// last r thick columns.
pub fn encode_systematic(
    pcm: &BlockParityCheck,
    message: &[Elem],
) -> Result<ArrayCodeword, VerifyError> {
    let k = pcm.n - pcm.r;
    assert_eq!(message.len(), k * pcm.ell);
    let field = pcm.field().clone();
    let mut symbols = message.to_vec();
    symbols.extend(std::iter::repeat(field.zero()).take(pcm.r * pcm.ell));
    let full = ArrayCodeword::new(pcm.n, pcm.ell, symbols);
    let erased: Vec<usize> = (k..pcm.n).collect();
    let masked = full.erase(&erased);
    erasure_decode(pcm, &masked).map_err(|e| match e {
        VerifyError::Underdetermined => VerifyError::SingularParityBlock,
        other => other,
    })
}

/// Deterministic 64-bit generator (splitmix64 update constants) used for
/// trial messages so runs reproduce bit-for-bit.
#[derive(Debug, Clone)]
pub struct TrialRng {
    state: u64,
}

impl TrialRng {
    pub fn new(seed: u64) -> Self {
        TrialRng { state: seed }
    }

    pub fn next_u64(&mut self) -> u64 {
        self.state = self.state.wrapping_add(0x9e3779b97f4a7c15);
        let mut z = self.state;
        z = (z ^ (z >> 30)).wrapping_mul(0xbf58476d1ce4e5b9);
        z = (z ^ (z >> 27)).wrapping_mul(0x94d049bb133111eb);
        z ^ (z >> 31)
    }

    pub fn elem(&mut self, field: &crate::field::Field) -> Elem {
        let order = field.order();
        let idx = ((self.next_u64() as u128) << 64 | self.next_u64() as u128) % order;
        field.elem_at(idx)
    }

    pub fn message(&mut self, field: &crate::field::Field, len: usize) -> Vec<Elem> {
        (0..len).map(|_| self.elem(field)).collect()
    }
}
