//! Block-position decomposition of compressed translations.
//!
//! A translation compressed to l2(W_n) splits into: rank-one pieces between
//! prefixes of h and inverses of its suffixes; pieces acting as the
//! identity on a middle letter at a fixed position from the right; and
//! pieces acting there by the unit-stripped translation of one letter of h.
//! Each positioned piece is a conjugation by a position embedding and is
//! tagged with the layer index p of the ideal it generates; products of
//! layer generators stay inside the layer of the smaller index, which is
//! what the pattern check below measures at finite size.

use std::collections::HashMap;

use crate::error::{Error, Result};
use crate::operators::{
    compress_to_window, numerical_rank, translation_op, BasisRef, SparseOp, DEFAULT_RANK_THRESHOLD,
};
use crate::spaces::{LengthBound, SideBases, WindowBasis};
use crate::words::{FactorFamily, Letter, Word};

/// Basis handle for l2(G_iota): slot 0 is the identity, slot 1 + rank the
/// letters in canonical order.
pub fn factor_space_ref(family: &FactorFamily, iota: usize) -> BasisRef {
    BasisRef::new(
        format!("G(f{})[{}]", iota, family.label()),
        family.letter_count(iota) + 1,
    )
}

/// Basis handle for l2(G_iota with the identity removed).
pub fn letters_ref(family: &FactorFamily, iota: usize) -> BasisRef {
    BasisRef::new(
        format!("Go(f{})[{}]", iota, family.label()),
        family.letter_count(iota),
    )
}

/// Left translation by one element (rank, or None for the identity) on
/// l2(G_iota).  Integer-window products that leave the window are dropped:
/// the operator is the exact compression to the materialised letters.
pub fn factor_translation(family: &FactorFamily, iota: usize, elem: Option<u32>) -> Result<SparseOp> {
    let space = factor_space_ref(family, iota);
    let rank = match elem {
        None => return Ok(SparseOp::identity(space)),
        Some(r) => r,
    };
    if rank as usize >= family.letter_count(iota) {
        return Err(Error::FactorMismatch(format!("rank {rank} out of range for factor {iota}")));
    }
    let mut entries = vec![(1 + rank as u64, 0, 1.0)];
    for ry in 0..family.letter_count(iota) as u32 {
        match family.merge_ranks(iota, rank, ry) {
            Ok(None) => entries.push((0, 1 + ry as u64, 1.0)),
            Ok(Some(r)) => entries.push((1 + r as u64, 1 + ry as u64, 1.0)),
            Err(Error::WindowOverflow { .. }) => continue,
            Err(e) => return Err(e),
        }
    }
    SparseOp::from_entries(space.clone(), space, entries)
}

/// The corner of an operator on l2(G_iota) with the identity row and column
/// removed.
pub fn compress_off_unit(a: &SparseOp, family: &FactorFamily, iota: usize) -> Result<SparseOp> {
    let space = factor_space_ref(family, iota);
    if a.domain() != &space || a.codomain() != &space {
        return Err(Error::BasisMismatch {
            expected: space.to_string(),
            got: format!("{} -> {}", a.domain(), a.codomain()),
        });
    }
    let letters = letters_ref(family, iota);
    let entries = a
        .entries()
        .iter()
        .filter(|&&(r, c, _)| r >= 1 && c >= 1)
        .map(|&(r, c, v)| (r - 1, c - 1, v))
        .collect();
    SparseOp::from_entries(letters.clone(), letters, entries)
}

/// The defect between compressing a product and multiplying compressions.
/// It always factors through the deleted identity coordinate, so its rank
/// is at most one; the returned rank is measured, not assumed.
pub fn unit_defect(
    a1: &SparseOp,
    a2: &SparseOp,
    family: &FactorFamily,
    iota: usize,
) -> Result<(SparseOp, usize)> {
    let product = compress_off_unit(&a1.compose(a2)?, family, iota)?;
    let split = compress_off_unit(a1, family, iota)?.compose(&compress_off_unit(a2, family, iota)?)?;
    let defect = product.sub(&split)?;
    let rank = numerical_rank(&defect, DEFAULT_RANK_THRESHOLD)?;
    Ok((defect, rank))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Line {
    RankOne,
    IdentityLeg,
    TranslatedLeg,
}

impl Line {
    pub fn tag(self) -> &'static str {
        match self {
            Line::RankOne => "i",
            Line::IdentityLeg => "ii",
            Line::TranslatedLeg => "iii",
        }
    }
}

/// One summand of the decomposition, tagged with its indices and the layer
/// it belongs to (0 for the rank-one line).
#[derive(Debug, Clone)]
pub struct DecompositionTerm {
    pub line: Line,
    pub r: usize,
    pub p: Option<usize>,
    pub iota: Option<usize>,
    pub op: SparseOp,
    pub j_membership: usize,
}

#[derive(Debug, Clone)]
pub struct Decomposition {
    pub terms: Vec<DecompositionTerm>,
    /// Terms whose left vector the narrow length bound excluded.  Always 0
    /// under the standard bound.
    pub skipped_by_bound: usize,
}

impl Decomposition {
    pub fn sum(&self, basis: &WindowBasis) -> Result<SparseOp> {
        let mut acc = SparseOp::zero(basis.basis_ref(), basis.basis_ref());
        for t in &self.terms {
            acc = acc.add(&t.op)?;
        }
        Ok(acc)
    }

    pub fn nonzero_terms(&self) -> usize {
        self.terms.iter().filter(|t| t.op.nnz() > 0).count()
    }
}

/// Conjugated elementary operator: embed (rank-one on the left leg)
/// (x) (mid on the letter leg) (x) (identity on the right leg) at position
/// p, pushed forward to l2(W_n) along the concatenation embedding.
fn conjugated_block(
    basis: &WindowBasis,
    sides: &SideBases,
    left_row: &Word,
    left_col: &Word,
    mid: &SparseOp,
) -> Result<SparseOp> {
    let family = basis.family();
    if sides.left_index(left_row).is_none() {
        return Err(Error::SideVectorOutsideBasis {
            p: sides.p,
            iota: sides.iota,
            len: left_row.block_length(),
        });
    }
    if sides.left_index(left_col).is_none() {
        return Err(Error::SideVectorOutsideBasis {
            p: sides.p,
            iota: sides.iota,
            len: left_col.block_length(),
        });
    }
    let expected_mid = letters_ref(family, sides.iota);
    if mid.domain() != &expected_mid || mid.codomain() != &expected_mid {
        return Err(Error::BasisMismatch {
            expected: expected_mid.to_string(),
            got: format!("{} -> {}", mid.domain(), mid.codomain()),
        });
    }
    let mut entries = Vec::with_capacity(mid.nnz() * sides.right.len());
    for &(xr, xc, v) in mid.entries() {
        for rho in &sides.right {
            let row_word = sides.concat(left_row, xr as u32, rho);
            let col_word = sides.concat(left_col, xc as u32, rho);
            let row = basis.index_of(&row_word).expect("side concatenation fits the window");
            let col = basis.index_of(&col_word).expect("side concatenation fits the window");
            entries.push((row as u64, col as u64, v));
        }
    }
    SparseOp::from_entries(basis.basis_ref(), basis.basis_ref(), entries)
}

/// A generator of the layer-p ideal: matrix unit on the left leg, a given
/// middle operator, identity on the right leg, conjugated to l2(W_n).
pub fn layer_generator(
    basis: &WindowBasis,
    p: usize,
    iota: usize,
    left_pair: (usize, usize),
    mid: &SparseOp,
    bound: LengthBound,
) -> Result<SparseOp> {
    let family = basis.family().clone();
    let sides = SideBases::build(&family, basis.cutoff(), p, iota, bound)?;
    let row = sides.left.get(left_pair.0).ok_or(Error::InvalidPosition { p: left_pair.0, n: sides.left.len() })?.clone();
    let col = sides.left.get(left_pair.1).ok_or(Error::InvalidPosition { p: left_pair.1, n: sides.left.len() })?.clone();
    conjugated_block(basis, &sides, &row, &col, mid)
}

/// Decomposes the compression of the translation by h into tagged terms.
/// The sum of the terms reproduces P_n lambda_h P_n exactly under the
/// standard length bound; the narrow variant drops boundary terms and is
/// kept to demonstrate that it cannot reproduce it.
pub fn build_translation_decomposition(
    basis: &WindowBasis,
    h: &Word,
    bound: LengthBound,
) -> Result<Decomposition> {
    let family = basis.family().clone();
    family.validate_word(h)?;
    if h.is_identity() {
        return Err(Error::InvalidSpec("decomposition needs a non-identity word".into()));
    }
    let n = basis.cutoff();
    if n < 1 {
        return Err(Error::CutoffTooSmall { n, reason: "decomposition needs n >= 1".into() });
    }
    let hl = h.letters();
    let len_h = hl.len();
    let mut terms = Vec::new();
    let mut skipped = 0usize;

    // prefix of h with r letters, and the inverse of the suffix past r
    let head = |r: usize| h.prefix(r);
    let tail_inv = |r: usize| family.inverse(&h.suffix(r));

    // line i: rank-one pieces on the window itself
    let r_lo = len_h.saturating_sub(n);
    for r in r_lo..=len_h.min(n) {
        let u = head(r);
        let v = tail_inv(r);
        let ui = basis.index_of(&u).expect("prefix within window") as u64;
        let vi = basis.index_of(&v).expect("suffix inverse within window") as u64;
        let op = crate::operators::matrix_unit(basis.basis_ref(), basis.basis_ref(), ui, vi)?;
        terms.push(DecompositionTerm { line: Line::RankOne, r, p: None, iota: None, op, j_membership: 0 });
    }

    // line ii: identity on the positioned letter leg
    let r_lo = (len_h + 1).saturating_sub(n);
    let r_hi = len_h.min(n.saturating_sub(1));
    for r in r_lo..=r_hi {
        let p_max = n - r.max(len_h - r);
        for p in 1..=p_max {
            for iota in 0..family.len() {
                let excluded_left = r >= 1 && hl[r - 1].factor as usize == iota;
                let excluded_right = r < len_h && hl[r].factor as usize == iota;
                if excluded_left || excluded_right {
                    continue;
                }
                let sides = SideBases::build(&family, n, p, iota, bound)?;
                let mid = SparseOp::identity(letters_ref(&family, iota));
                match conjugated_block(basis, &sides, &head(r), &tail_inv(r), &mid) {
                    Ok(op) => terms.push(DecompositionTerm {
                        line: Line::IdentityLeg,
                        r,
                        p: Some(p),
                        iota: Some(iota),
                        op,
                        j_membership: p,
                    }),
                    Err(Error::SideVectorOutsideBasis { .. }) if bound == LengthBound::Narrow => {
                        skipped += 1;
                    }
                    Err(e) => return Err(e),
                }
            }
        }
    }

    // line iii: the unit-stripped translation of one h letter on the leg
    let r_lo = len_h.saturating_sub(n) + 1;
    for r in r_lo..=len_h.min(n) {
        let letter = hl[r - 1];
        let iota = letter.factor as usize;
        let lam = factor_translation(&family, iota, Some(letter.rank))?;
        let mid = compress_off_unit(&lam, &family, iota)?;
        let p_max = n - (r - 1).max(len_h - r);
        for p in 1..=p_max {
            let sides = SideBases::build(&family, n, p, iota, bound)?;
            match conjugated_block(basis, &sides, &head(r - 1), &tail_inv(r), &mid) {
                Ok(op) => terms.push(DecompositionTerm {
                    line: Line::TranslatedLeg,
                    r,
                    p: Some(p),
                    iota: Some(iota),
                    op,
                    j_membership: p,
                }),
                Err(Error::SideVectorOutsideBasis { .. }) if bound == LengthBound::Narrow => {
                    skipped += 1;
                }
                Err(e) => return Err(e),
            }
        }
    }

    Ok(Decomposition { terms, skipped_by_bound: skipped })
}

#[derive(Debug, Clone, PartialEq)]
pub struct VerifyReport {
    pub max_error: f64,
    pub term_count: usize,
    pub skipped_by_bound: usize,
}

/// Default cap on the dimension of the comparison window built for the
/// direct side.
pub const DIRECT_SIDE_DIM_LIMIT: usize = 200_000;

/// Compares the summed decomposition against the directly compressed
/// translation.  The direct side is built on the window W_{n + len h} when
/// that fits under the cap; compressing from the larger window and acting
/// directly on W_n give the same matrix, so the comparison is exact either
/// way.
pub fn verify_translation_decomposition(
    family: &FactorFamily,
    h: &Word,
    n: usize,
    bound: LengthBound,
) -> Result<VerifyReport> {
    let basis = WindowBasis::build(family, n);
    let decomposition = build_translation_decomposition(&basis, h, bound)?;
    let summed = decomposition.sum(&basis)?;

    let big_n = n + h.block_length();
    let direct = if family.window_size(big_n) <= DIRECT_SIDE_DIM_LIMIT as u128 {
        let big = WindowBasis::build(family, big_n);
        let lambda = translation_op(&big, h)?;
        compress_to_window(&lambda, &big, n)?
    } else {
        translation_op(&basis, h)?
    };

    Ok(VerifyReport {
        max_error: summed.max_abs_diff(&direct)?,
        term_count: decomposition.nonzero_terms(),
        skipped_by_bound: decomposition.skipped_by_bound,
    })
}

/// Result of checking that the product of two layer generators keeps the
/// structure of the smaller layer.
#[derive(Debug, Clone, PartialEq)]
pub struct PatternReport {
    pub p: usize,
    pub q: usize,
    pub min_idx: usize,
    /// Largest entry on a row or column word shorter than min(p, q).
    pub support_violation: f64,
    /// Largest entry linking different middle factors at position min(p, q).
    pub off_diagonal_max: f64,
    /// Largest deviation of a diagonal block from the (operator) (x)
    /// (identity on the right leg) form, measured by comparing all right-leg
    /// slices against each other (absent slices count as zero).
    pub tail_deviation: f64,
}

impl PatternReport {
    pub fn passes(&self, tol: f64) -> bool {
        self.support_violation <= tol && self.off_diagonal_max <= tol && self.tail_deviation <= tol
    }
}

/// Measures the product x y of generators tagged with layers p and q
/// against the layer-min(p, q) pattern.
pub fn layer_product_check(
    basis: &WindowBasis,
    x: &SparseOp,
    p: usize,
    y: &SparseOp,
    q: usize,
    bound: LengthBound,
) -> Result<PatternReport> {
    let family = basis.family().clone();
    let z = x.compose(y)?;
    let min_idx = p.min(q);
    let mut report = PatternReport {
        p,
        q,
        min_idx,
        support_violation: 0.0,
        off_diagonal_max: 0.0,
        tail_deviation: 0.0,
    };
    if min_idx == 0 {
        return Ok(report);
    }

    // group diagonal-block entries by (iota, left words, letter legs)
    type GroupKey = (usize, Word, u32, Word, u32);
    let mut groups: HashMap<GroupKey, HashMap<Word, f64>> = HashMap::new();

    let split_at = |w: &Word| -> (Word, Letter, Word) {
        let len = w.block_length();
        let letters = w.letters();
        (
            w.prefix(len - min_idx),
            letters[len - min_idx],
            w.suffix(len - min_idx + 1),
        )
    };

    for &(r, c, v) in z.entries() {
        let wr = basis.word(r as usize);
        let wc = basis.word(c as usize);
        if wr.block_length() < min_idx || wc.block_length() < min_idx {
            report.support_violation = report.support_violation.max(v.abs());
            continue;
        }
        let (lr, xr, rr) = split_at(wr);
        let (lc, xc, rc) = split_at(wc);
        if xr.factor != xc.factor {
            report.off_diagonal_max = report.off_diagonal_max.max(v.abs());
            continue;
        }
        if rr != rc {
            report.tail_deviation = report.tail_deviation.max(v.abs());
            continue;
        }
        groups
            .entry((xr.factor as usize, lr, xr.rank, lc, xc.rank))
            .or_default()
            .insert(rr, v);
    }

    for ((iota, ..), slices) in &groups {
        let legs = SideBases::build(&family, basis.cutoff(), min_idx, *iota, bound)?.right.len();
        let mut mx = f64::NEG_INFINITY;
        let mut mn = f64::INFINITY;
        for v in slices.values() {
            mx = mx.max(*v);
            mn = mn.min(*v);
        }
        if slices.len() < legs {
            mx = mx.max(0.0);
            mn = mn.min(0.0);
        }
        report.tail_deviation = report.tail_deviation.max(mx - mn);
    }
    Ok(report)
}
