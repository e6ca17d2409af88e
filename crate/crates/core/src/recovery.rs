//! The compression/recovery pair on truncated windows.
//!
//! `compress_to_window` cuts an operator down to l2(W_n); the maps built
//! here go the other way: a splitting isometry V sends delta_g to a
//! weighted combination of (head, tail) splits of g, and the unital
//! completely positive map x -> V*(x (x) 1)V approximately undoes the
//! compression on translations.  The quality of the recovery is an explicit
//! piecewise coefficient in the lengths of g and hg, evaluated and bounded
//! here both through the matrices and through the closed forms.

use std::collections::{BTreeSet, HashMap};

use crate::error::{Error, Result};
use crate::exec;
use crate::operators::{compress_to_window, translation_op, SparseOp};
use crate::spaces::WindowBasis;
use crate::words::{FactorFamily, FactorKind, Word};

/// The split midpoint m = floor((n+1)/2).  Requires n >= 2 so that the
/// split weights 1/sqrt(n - m) exist.
pub fn split_midpoint(n: usize) -> Result<usize> {
    if n < 2 {
        return Err(Error::CutoffTooSmall {
            n,
            reason: "the splitting isometry needs n >= 2 (n = 1 annihilates long words)".into(),
        });
    }
    Ok(n.div_ceil(2))
}

/// Which defining branch of the splitting isometry to evaluate.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SplitBranch {
    /// len(g) <= m: the column is delta_g (x) delta_e.
    Short,
    /// m <= len(g) <= n: weighted head term plus splits at m..len(g)-1.
    Mid,
    /// len(g) >= n: splits at m..n-1 only.
    Long,
}

/// Split positions and weights for a column of the isometry: the word g is
/// cut into its first j letters and the rest, for each returned (j, w).
/// A split at j = len(g) is the head term delta_g (x) delta_e.
pub fn split_terms(n: usize, len: usize) -> Result<Vec<(usize, f64)>> {
    let m = split_midpoint(n)?;
    let branch = if len <= m {
        SplitBranch::Short
    } else if len < n {
        SplitBranch::Mid
    } else {
        SplitBranch::Long
    };
    split_terms_for_branch(n, len, branch)
}

/// Same, but evaluating a chosen branch; errors if the branch does not
/// apply to this length.  Used to check that adjacent branches agree on
/// their shared boundary.
pub fn split_terms_for_branch(n: usize, len: usize, branch: SplitBranch) -> Result<Vec<(usize, f64)>> {
    let m = split_midpoint(n)?;
    let applies = match branch {
        SplitBranch::Short => len <= m,
        SplitBranch::Mid => m <= len && len <= n,
        SplitBranch::Long => len >= n,
    };
    if !applies {
        return Err(Error::CutoffTooSmall {
            n,
            reason: format!("branch {branch:?} does not cover length {len}"),
        });
    }
    let w = 1.0 / ((n - m) as f64).sqrt();
    let mut terms = Vec::new();
    match branch {
        SplitBranch::Short => terms.push((len, 1.0)),
        SplitBranch::Mid => {
            let head = ((n - len) as f64).sqrt() * w;
            if head != 0.0 {
                terms.push((len, head));
            }
            for j in m..len {
                terms.push((j, w));
            }
        }
        SplitBranch::Long => {
            for j in m..n {
                terms.push((j, w));
            }
        }
    }
    Ok(terms)
}

/// Builds the splitting isometry from l2(W_N) to l2(W_n) (x) l2(W_N) as a
/// sparse matrix; every column has unit norm and distinct columns have
/// disjoint supports.
pub fn build_split_isometry(basis: &WindowBasis, n: usize) -> Result<SparseOp> {
    split_midpoint(n)?;
    let big_n = basis.cutoff();
    if n > big_n {
        return Err(Error::CutoffTooLarge { n, max: big_n });
    }
    let dim_big = basis.dim() as u64;
    let mut entries = Vec::new();
    for (col, g) in basis.words().iter().enumerate() {
        for (j, w) in split_terms(n, g.block_length())? {
            let head = g.prefix(j);
            let tail = g.suffix(j);
            let head_idx = basis.index_of(&head).expect("prefix stays in window") as u64;
            let tail_idx = basis.index_of(&tail).expect("suffix stays in window") as u64;
            entries.push((head_idx * dim_big + tail_idx, col as u64, w));
        }
    }
    let codomain = basis.sub_basis_ref(n).tensor(&basis.basis_ref());
    SparseOp::from_entries(basis.basis_ref(), codomain, entries)
}

/// The recovery map applied to an operator x on l2(W_n): V*(x (x) 1)V on
/// l2(W_N).  Unital and completely positive by construction.
pub fn apply_recovery(x: &SparseOp, basis: &WindowBasis, n: usize) -> Result<SparseOp> {
    let sub = basis.sub_basis_ref(n);
    if x.domain() != &sub || x.codomain() != &sub {
        return Err(Error::BasisMismatch {
            expected: sub.to_string(),
            got: format!("{} -> {}", x.domain(), x.codomain()),
        });
    }
    let v = build_split_isometry(basis, n)?;
    let mid = x.tensor_identity_compose(&basis.basis_ref(), &v)?;
    v.adjoint().compose(&mid)
}

/// The full recovered compression of a translation: V*(P_n lambda_h P_n (x) 1)V.
pub fn recover_translation(basis: &WindowBasis, h: &Word, n: usize) -> Result<SparseOp> {
    let lambda = translation_op(basis, h)?;
    let compressed = compress_to_window(&lambda, basis, n)?;
    apply_recovery(&compressed, basis, n)
}

/// One evaluated recovery coefficient, together with the case region the
/// length pair fell in.
#[derive(Debug, Clone, PartialEq)]
pub struct CoefficientResult {
    pub case_id: u8,
    pub c: f64,
    pub n: usize,
    pub m: usize,
    pub len_g: usize,
    pub len_hg: usize,
}

/// Closed-form recovery coefficient as a function of n and the two lengths.
/// Case regions (with m = floor((n+1)/2)):
///   1: both lengths <= m                      c = 1
///   2: len g <= m <= len hg <= n              c = sqrt(n - len hg) / sqrt(n - m)
///   3: len hg <= m <= len g <= n              c = sqrt(n - len g) / sqrt(n - m)
///   4: both in [m, n]                         c = (sqrt((n-len g)(n-len hg)) + min - m)/(n - m)
///   5,6,7: one or both lengths >= n           c = max(0, n - m - |len g - len hg|)/(n - m)
/// Cases 5-7 clamp at zero: the underlying split-overlap count is empty
/// when |len g - len hg| exceeds n - m.
/// Returns the lowest matching case id; regions overlap on their boundaries
/// and agree there.
pub fn recovery_coefficient(n: usize, len_g: usize, len_hg: usize) -> Result<CoefficientResult> {
    let m = split_midpoint(n)?;
    let denom = (n - m) as f64;
    let result = |case_id: u8, c: f64| {
        Ok(CoefficientResult { case_id, c, n, m, len_g, len_hg })
    };
    let (lg, lhg) = (len_g, len_hg);
    if lg <= m && lhg <= m {
        return result(1, 1.0);
    }
    if lg <= m && m <= lhg && lhg <= n {
        return result(2, (((n - lhg) as f64) / denom).sqrt());
    }
    if m <= lg && lg <= n && lhg <= m {
        return result(3, (((n - lg) as f64) / denom).sqrt());
    }
    if m <= lg && lg <= n && m <= lhg && lhg <= n {
        let c = (((n - lg) as f64) * ((n - lhg) as f64)).sqrt() / denom
            + (lg.min(lhg) - m) as f64 / denom;
        return result(4, c);
    }
    let gap = lg.abs_diff(lhg);
    let overlap = (n - m).saturating_sub(gap) as f64 / denom;
    if m <= lg && lg <= n && n <= lhg {
        return result(5, overlap);
    }
    if n <= lg && m <= lhg && lhg <= n {
        return result(6, overlap);
    }
    if n <= lg && n <= lhg {
        return result(7, overlap);
    }
    Err(Error::OutOfRegime { n, len_g, len_hg })
}

/// 1 - c for the same case regions, computed directly so that boundary
/// comparisons like defect <= bound do not lose to cancellation.
pub fn recovery_defect_of_pair(n: usize, len_g: usize, len_hg: usize) -> Result<f64> {
    let m = split_midpoint(n)?;
    let denom = (n - m) as f64;
    let (lg, lhg) = (len_g, len_hg);
    if lg <= m && lhg <= m {
        return Ok(0.0);
    }
    if (lg <= m && m <= lhg && lhg <= n) || (m <= lg && lg <= n && lhg <= m) {
        let longer = lg.max(lhg);
        return Ok(1.0 - (((n - longer) as f64) / denom).sqrt());
    }
    if m <= lg && lg <= n && m <= lhg && lhg <= n {
        let prod = (((n - lg) as f64) * ((n - lhg) as f64)).sqrt();
        return Ok(((n - lg.min(lhg)) as f64 - prod) / denom);
    }
    let gap = lg.abs_diff(lhg);
    if lg >= m && lhg >= m && (lg >= n || lhg >= n) {
        return Ok((gap as f64 / denom).min(1.0));
    }
    Err(Error::OutOfRegime { n, len_g, len_hg })
}

/// All (len g, len hg) pairs realised by some word g with len g <= max_len_g,
/// for this concrete h and factor family.  Enumerated from the cancellation
/// combinatorics, honouring which merges each factor actually admits (an
/// integer window only merges letters whose sum stays inside the window).
pub fn realizable_length_pairs(
    family: &FactorFamily,
    h: &Word,
    max_len_g: usize,
) -> Vec<(usize, usize)> {
    let hl = h.letters();
    let m = hl.len();
    let mut pairs = BTreeSet::new();
    for len_g in 0..=max_len_g {
        // g cancels entirely into the tail of h
        if len_g <= m {
            pairs.insert((len_g, m - len_g));
        }
        if len_g == 0 {
            continue;
        }
        for q in 0..=m.min(len_g - 1) {
            // positions q+2..len_g continue alternating; that needs a second factor
            let continuation = len_g - (q + 1);
            if continuation > 0 && family.len() < 2 {
                continue;
            }
            // stop without merging: the next letter of g sits in a factor
            // different from both its predecessor and the facing h letter
            let mut excluded = Vec::new();
            if q >= 1 {
                excluded.push(hl[m - q].factor);
            }
            if q < m {
                excluded.push(hl[m - q - 1].factor);
            }
            if (0..family.len()).any(|f| !excluded.contains(&(f as u8))) {
                pairs.insert((len_g, m + len_g - 2 * q));
            }
            // stop by merging with the facing h letter
            if q < m {
                let z = hl[m - q - 1];
                if merge_partner_exists(family, z.factor as usize, z.rank) {
                    pairs.insert((len_g, m + len_g - 2 * q - 1));
                }
            }
        }
    }
    pairs.into_iter().collect()
}

/// Whether some in-window letter of the factor merges with `rank` to a
/// non-identity in-window letter.
pub fn merge_partner_exists(family: &FactorFamily, factor: usize, rank: u32) -> bool {
    match &family.factors()[factor].kind {
        FactorKind::Cyclic { .. } | FactorKind::Table { .. } => family.letter_count(factor) >= 2,
        FactorKind::IntegerWindow { bound } => {
            let z = family.rank_to_value(factor, rank);
            z.abs() >= 2 || *bound >= 2
        }
    }
}

/// Recovery defect of one translation at one cutoff, evaluated both from
/// the composed matrix and from the closed forms over realizable pairs.
#[derive(Debug, Clone, PartialEq)]
pub struct DefectReport {
    pub len_h: usize,
    pub n: usize,
    pub m: usize,
    pub matrix_defect: f64,
    pub analytic_defect: f64,
    /// len(h) / (n - m); both defects stay within it.
    pub bound: f64,
    /// Columns with len(g) <= this were compared; longer columns are
    /// distorted by the outer truncation.
    pub safe_zone_cutoff: usize,
}

/// Analytic-only defect: 1 minus the infimum of the recovery coefficient
/// over pairs realised by words up to length n + 1.
pub fn analytic_defect(family: &FactorFamily, h: &Word, n: usize) -> Result<f64> {
    let max_len_g = n + 1;
    let mut worst = 0.0f64;
    for (lg, lhg) in realizable_length_pairs(family, h, max_len_g) {
        worst = worst.max(recovery_defect_of_pair(n, lg, lhg)?);
    }
    Ok(worst)
}

/// Full defect report.  The basis must extend at least n + len(h) + 1 so
/// the safe zone reaches past length n.
pub fn recovery_defect(basis: &WindowBasis, h: &Word, n: usize) -> Result<DefectReport> {
    let family = basis.family().clone();
    family.validate_word(h)?;
    let len_h = h.block_length();
    let big_n = basis.cutoff();
    let m = split_midpoint(n)?;
    if big_n < n + len_h + 1 {
        return Err(Error::CutoffTooSmall {
            n: big_n,
            reason: format!("defect at cutoff {n} needs a window of at least {}", n + len_h + 1),
        });
    }
    let safe = big_n - len_h;

    let recovered = recover_translation(basis, h, n)?;
    let mut by_col: HashMap<u64, Vec<(u64, f64)>> = HashMap::new();
    for &(r, c, v) in recovered.entries() {
        by_col.entry(c).or_default().push((r, v));
    }
    let mut matrix_defect = 0.0f64;
    for (col, g) in basis.words().iter().enumerate() {
        if g.block_length() > safe {
            break;
        }
        let hg = match family.multiply(h, g) {
            Ok(w) => w,
            // column is distorted by the letter window, not by the cutoff
            Err(Error::WindowOverflow { .. }) => continue,
            Err(e) => return Err(e),
        };
        let row = basis.index_of(&hg).expect("safe-zone product stays in the window") as u64;
        let mut c_val = 0.0;
        if let Some(entries) = by_col.get(&(col as u64)) {
            debug_assert!(entries.len() <= 1, "recovered translation is monomial");
            for &(r, v) in entries {
                debug_assert_eq!(r, row, "single entry sits at the translated word");
                if r == row {
                    c_val = v;
                }
            }
        }
        matrix_defect = matrix_defect.max((1.0 - c_val).abs());
    }

    let analytic = analytic_defect(&family, h, n)?;
    Ok(DefectReport {
        len_h,
        n,
        m,
        matrix_defect,
        analytic_defect: analytic,
        bound: len_h as f64 / (n - m) as f64,
        safe_zone_cutoff: safe,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DefectMode {
    /// Build the windows and measure the composed matrices.
    Matrix,
    /// Evaluate the closed forms over realizable length pairs only.
    Analytic,
}

impl DefectMode {
    pub fn as_str(self) -> &'static str {
        match self {
            DefectMode::Matrix => "matrix",
            DefectMode::Analytic => "analytic",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ConvergenceRow {
    pub n: usize,
    pub m: usize,
    pub defect: f64,
    pub bound: f64,
    pub mode: DefectMode,
}

/// Default cap on the window dimension a matrix-mode row may materialise.
pub const MATRIX_MODE_DIM_LIMIT: usize = 150_000;

/// Defect rows for n over an inclusive range, one per cutoff.  Rows are
/// independent and evaluated in parallel; output is ordered by n.
pub fn convergence_sweep(
    family: &FactorFamily,
    h: &Word,
    n_min: usize,
    n_max: usize,
    mode: DefectMode,
    matrix_dim_limit: usize,
) -> Result<Vec<ConvergenceRow>> {
    family.validate_word(h)?;
    let len_h = h.block_length();
    let cells: Vec<usize> = (n_min..=n_max).collect();
    let rows = exec::map_cells(cells, |n| -> Result<ConvergenceRow> {
        let m = split_midpoint(n)?;
        let defect = match mode {
            DefectMode::Analytic => analytic_defect(family, h, n)?,
            DefectMode::Matrix => {
                let big_n = n + len_h + 1;
                let size = family.window_size(big_n);
                if size > matrix_dim_limit as u128 {
                    return Err(Error::TooLarge { dim: size as usize, max: matrix_dim_limit });
                }
                let basis = WindowBasis::build(family, big_n);
                recovery_defect(&basis, h, n)?.matrix_defect
            }
        };
        Ok(ConvergenceRow { n, m, defect, bound: len_h as f64 / (n - m) as f64, mode })
    });
    rows.into_iter().collect()
}

/// How an isometry check was carried out.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum IsometryRoute {
    /// V was materialised and V*V compared against the identity entrywise.
    Materialized,
    /// The window is too large to materialise.  Column norms depend on the
    /// word only through its length (the splits are prefix/suffix cuts with
    /// length-determined weights), and distinct columns have disjoint
    /// supports because a (head, tail) pair reconstructs its word by
    /// concatenation; so the entrywise maximum of V*V - I is the largest
    /// norm deviation over the length classes, evaluated exactly.
    LengthStratified,
}

#[derive(Debug, Clone, PartialEq)]
pub struct IsometryReport {
    pub n: usize,
    pub window: usize,
    pub dim: u128,
    pub route: IsometryRoute,
    pub max_deviation: f64,
}

/// Checks V*V = I on l2(W_N), materialising when the window fits under the
/// cap and falling back to the exact per-length evaluation otherwise.
pub fn isometry_check(
    family: &FactorFamily,
    n: usize,
    window: usize,
    dim_cap: usize,
) -> Result<IsometryReport> {
    split_midpoint(n)?;
    if window < n {
        return Err(Error::CutoffTooSmall { n: window, reason: format!("window must be >= n = {n}") });
    }
    let dim = family.window_size(window);
    if dim <= dim_cap as u128 {
        let basis = WindowBasis::build(family, window);
        let v = build_split_isometry(&basis, n)?;
        let gram = v.adjoint().compose(&v)?;
        let id = SparseOp::identity(basis.basis_ref());
        let max_deviation = gram.max_abs_diff(&id)?;
        Ok(IsometryReport { n, window, dim, route: IsometryRoute::Materialized, max_deviation })
    } else {
        let mut max_deviation = 0.0f64;
        for len in 0..=window {
            let norm_sq: f64 = split_terms(n, len)?.iter().map(|&(_, w)| w * w).sum();
            max_deviation = max_deviation.max((norm_sq - 1.0).abs());
        }
        Ok(IsometryReport {
            n,
            window,
            dim,
            route: IsometryRoute::LengthStratified,
            max_deviation,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::operators::operator_norm;
    use crate::words::FactorSpec;

    fn z2z3() -> FactorFamily {
        FactorFamily::new(vec![FactorSpec::cyclic(2, "Z2"), FactorSpec::cyclic(3, "Z3")]).unwrap()
    }

    fn word(fam: &FactorFamily, s: &str) -> Word {
        let aliases = std::collections::HashMap::from([
            ("a".to_string(), "0:1".to_string()),
            ("b".to_string(), "1:1".to_string()),
        ]);
        fam.parse_word(s, &aliases).unwrap()
    }

    #[test]
    fn midpoint_values() {
        assert_eq!(split_midpoint(9).unwrap(), 5);
        assert_eq!(split_midpoint(2).unwrap(), 1);
        assert_eq!(split_midpoint(3).unwrap(), 2);
        assert!(split_midpoint(1).is_err());
    }

    #[test]
    fn split_isometry_columns_n2() {
        let fam = z2z3();
        let basis = WindowBasis::build(&fam, 4);
        let v = build_split_isometry(&basis, 2).unwrap();
        let dim = basis.dim() as u64;
        let col_of = |s: &str| basis.index_of(&word(&fam, s)).unwrap() as u64;
        let pair = |h: &str, t: &str| col_of(h) * dim + col_of(t);
        // short column: delta_b -> delta_b (x) delta_e
        let b_col: Vec<_> = v.entries().iter().filter(|e| e.1 == col_of("b")).collect();
        assert_eq!(b_col, vec![&(pair("b", "e"), col_of("b"), 1.0)]);
        // boundary column at n: delta_ba -> delta_b (x) delta_a
        let ba_col: Vec<_> = v.entries().iter().filter(|e| e.1 == col_of("b a")).collect();
        assert_eq!(ba_col, vec![&(pair("b", "a"), col_of("b a"), 1.0)]);
        // long column: delta_bab -> delta_b (x) delta_ab
        let bab_col: Vec<_> = v.entries().iter().filter(|e| e.1 == col_of("b a b")).collect();
        assert_eq!(bab_col, vec![&(pair("b", "a b"), col_of("b a b"), 1.0)]);
    }

    #[test]
    fn split_isometry_mid_branch_n4() {
        // n=4 (m=2), len(g)=3: weight sqrt(2)/2 on the head term and one split
        let fam = z2z3();
        let basis = WindowBasis::build(&fam, 4);
        let v = build_split_isometry(&basis, 4).unwrap();
        let dim = basis.dim() as u64;
        let g = word(&fam, "b a b");
        let col = basis.index_of(&g).unwrap() as u64;
        let mut got: Vec<_> = v.entries().iter().filter(|e| e.1 == col).cloned().collect();
        got.sort_by_key(|x| x.0);
        let idx = |w: &Word| basis.index_of(w).unwrap() as u64;
        let mut expected = vec![
            (idx(&g) * dim + idx(&Word::identity()), col, 0.5f64.sqrt()),
            (idx(&g.prefix(2)) * dim + idx(&g.suffix(2)), col, 0.5f64.sqrt()),
        ];
        expected.sort_by_key(|x| x.0);
        assert_eq!(got.len(), 2);
        for (g_e, e_e) in got.iter().zip(&expected) {
            assert_eq!(g_e.0, e_e.0);
            assert_eq!(g_e.1, e_e.1);
            assert!((g_e.2 - e_e.2).abs() < 1e-15);
        }
    }

    #[test]
    fn branch_boundaries_agree() {
        for n in 2..=9 {
            let m = split_midpoint(n).unwrap();
            let lhs = split_terms_for_branch(n, m, SplitBranch::Short).unwrap();
            let rhs = split_terms_for_branch(n, m, SplitBranch::Mid).unwrap();
            assert_eq!(lhs.len(), rhs.len());
            for (a, b) in lhs.iter().zip(&rhs) {
                assert_eq!(a.0, b.0);
                assert!((a.1 - b.1).abs() <= 1e-12);
            }
            let lhs = split_terms_for_branch(n, n, SplitBranch::Mid).unwrap();
            let rhs = split_terms_for_branch(n, n, SplitBranch::Long).unwrap();
            assert_eq!(lhs.len(), rhs.len());
            for (a, b) in lhs.iter().zip(&rhs) {
                assert_eq!(a.0, b.0);
                assert!((a.1 - b.1).abs() <= 1e-12);
            }
        }
    }

    #[test]
    fn isometry_materialized_and_stratified() {
        let fam = z2z3();
        for n in 2..=5 {
            let mat = isometry_check(&fam, n, n + 3, 1 << 20).unwrap();
            assert_eq!(mat.route, IsometryRoute::Materialized);
            assert!(mat.max_deviation <= 1e-10, "n={n}: {}", mat.max_deviation);
            let strat = isometry_check(&fam, n, n + 3, 1).unwrap();
            assert_eq!(strat.route, IsometryRoute::LengthStratified);
            assert!(strat.max_deviation <= 1e-10);
        }
    }

    #[test]
    fn recovery_is_unital() {
        let fam = z2z3();
        let basis = WindowBasis::build(&fam, 6);
        for n in 2..=4 {
            let id = SparseOp::identity(basis.sub_basis_ref(n));
            let out = apply_recovery(&id, &basis, n).unwrap();
            let target = SparseOp::identity(basis.basis_ref());
            let diff = out.sub(&target).unwrap();
            assert!(operator_norm(&diff).unwrap().value <= 1e-12);
        }
    }

    #[test]
    fn small_cutoff_annihilates_mismatched_splits() {
        // n = 2, h = a, g = bab: the recovered translation kills the column
        // because no split of abab lines up with the splits of bab
        let fam = z2z3();
        let basis = WindowBasis::build(&fam, 6);
        let recovered = recover_translation(&basis, &word(&fam, "a"), 2).unwrap();
        let col = basis.index_of(&word(&fam, "b a b")).unwrap() as u64;
        assert!(recovered.entries().iter().all(|e| e.1 != col));
        let r = recovery_coefficient(2, 3, 4).unwrap();
        assert_eq!(r.case_id, 7);
        assert_eq!(r.c, 0.0);
    }

    #[test]
    fn coefficient_closed_form_values_n9() {
        let r = recovery_coefficient(9, 2, 3).unwrap();
        assert_eq!(r.case_id, 1);
        assert_eq!(r.c, 1.0);
        let r = recovery_coefficient(9, 6, 7).unwrap();
        assert_eq!(r.case_id, 4);
        assert!((r.c - (6.0f64.sqrt() + 1.0) / 4.0).abs() < 1e-12);
        assert!((r.c - 0.86237).abs() < 5e-6);
        let r = recovery_coefficient(9, 8, 9).unwrap();
        assert!((r.c - 0.75).abs() < 1e-12);
        let r = recovery_coefficient(9, 10, 11).unwrap();
        assert_eq!(r.case_id, 7);
        assert!((r.c - 0.75).abs() < 1e-12);
    }

    #[test]
    fn coefficient_regions_cover_or_reject() {
        // out of regime: short g, very long hg
        assert!(matches!(
            recovery_coefficient(4, 1, 5),
            Err(Error::OutOfRegime { .. })
        ));
        assert!(matches!(
            recovery_coefficient(4, 6, 1),
            Err(Error::OutOfRegime { .. })
        ));
        // boundary overlaps agree
        for n in [4usize, 6, 9] {
            let m = split_midpoint(n).unwrap();
            for lg in 0..=(n + 3) {
                for lhg in 0..=(n + 3) {
                    let mut values = Vec::new();
                    if lg <= m && lhg <= m {
                        values.push(1.0);
                    }
                    if lg <= m && m <= lhg && lhg <= n {
                        values.push((((n - lhg) as f64) / (n - m) as f64).sqrt());
                    }
                    if m <= lg && lg <= n && lhg <= m {
                        values.push((((n - lg) as f64) / (n - m) as f64).sqrt());
                    }
                    if m <= lg && lg <= n && m <= lhg && lhg <= n {
                        values.push(
                            (((n - lg) as f64) * ((n - lhg) as f64)).sqrt() / (n - m) as f64
                                + (lg.min(lhg) - m) as f64 / (n - m) as f64,
                        );
                    }
                    if (lg >= m && lhg >= m) && (lg >= n || lhg >= n) && lg.min(lhg) <= n {
                        values.push((n - m).saturating_sub(lg.abs_diff(lhg)) as f64 / (n - m) as f64);
                    }
                    if lg >= n && lhg >= n {
                        values.push((n - m).saturating_sub(lg.abs_diff(lhg)) as f64 / (n - m) as f64);
                    }
                    match recovery_coefficient(n, lg, lhg) {
                        Ok(r) => {
                            assert!(!values.is_empty());
                            for v in values {
                                assert!(
                                    (r.c - v).abs() <= 1e-12,
                                    "n={n} pair=({lg},{lhg}): {} vs {v}",
                                    r.c
                                );
                            }
                            assert!((0.0..=1.0).contains(&r.c));
                            // defect form matches 1 - c
                            let d = recovery_defect_of_pair(n, lg, lhg).unwrap();
                            assert!((d - (1.0 - r.c)).abs() <= 1e-12);
                        }
                        Err(_) => assert!(values.is_empty(), "n={n} pair=({lg},{lhg})"),
                    }
                }
            }
        }
    }

    #[test]
    fn defect_for_b_at_n9() {
        let fam = z2z3();
        let basis = WindowBasis::build(&fam, 12);
        let b = word(&fam, "b");
        let report = recovery_defect(&basis, &b, 9).unwrap();
        assert!((report.matrix_defect - 0.25).abs() <= 1e-12);
        assert!((report.analytic_defect - 0.25).abs() <= 1e-12);
        assert!((report.bound - 0.25).abs() <= 1e-15);
        // the worst realizable pairs are (8,9) and (9,10)
        let pairs = realizable_length_pairs(&fam, &b, 10);
        assert!(pairs.contains(&(8, 9)) && pairs.contains(&(9, 10)));
    }

    #[test]
    fn defect_of_identity_translation_is_zero() {
        let fam = z2z3();
        let basis = WindowBasis::build(&fam, 7);
        let report = recovery_defect(&basis, &Word::identity(), 4).unwrap();
        // split weights square-sum to 1 only up to float rounding
        assert!(report.matrix_defect <= 1e-12);
        assert_eq!(report.analytic_defect, 0.0);
    }

    #[test]
    fn defect_needs_room() {
        let fam = z2z3();
        let basis = WindowBasis::build(&fam, 5);
        let b = word(&fam, "b");
        assert!(recovery_defect(&basis, &b, 5).is_err());
    }

    #[test]
    fn two_factor_family_skips_pure_partial_cancellation() {
        // In a two-factor product a partial cancellation must end in a merge
        // or swallow one word whole; stopping mid-way needs a third factor.
        let fam = z2z3();
        // h = ba: after cancelling the a, the facing letter b (Z3) merges
        let h = word(&fam, "b a");
        let pairs = realizable_length_pairs(&fam, &h, 4);
        assert!(pairs.contains(&(2, 1)), "q=1 with merge");
        assert!(pairs.contains(&(2, 4)) && pairs.contains(&(2, 0)));
        assert!(!pairs.contains(&(2, 2)), "q=1 without merge needs a third factor");
        assert!(!pairs.contains(&(2, 3)), "no merge against the Z2 letter");
        // h = ab: the facing letter after one cancellation is a (Z2), which
        // admits no merge either, so only q=0 profiles and full absorption
        let h2 = word(&fam, "a b");
        let pairs2 = realizable_length_pairs(&fam, &h2, 4);
        assert!(pairs2.contains(&(2, 4)) && pairs2.contains(&(2, 3)) && pairs2.contains(&(2, 0)));
        assert!(!pairs2.contains(&(2, 2)) && !pairs2.contains(&(2, 1)));
        // exhaustive cross-check against the actual window
        let window = fam.enumerate_window(4);
        for h in [&h, &h2] {
            let mut seen = std::collections::BTreeSet::new();
            for g in &window {
                let hg = fam.multiply(h, g).unwrap();
                seen.insert((g.block_length(), hg.block_length()));
            }
            let enumerated: std::collections::BTreeSet<(usize, usize)> =
                realizable_length_pairs(&fam, h, 4).into_iter().collect();
            assert_eq!(enumerated, seen, "h={h}");
        }
    }

    #[test]
    fn convergence_modes_agree_for_b() {
        let fam = z2z3();
        let b = word(&fam, "b");
        let matrix = convergence_sweep(&fam, &b, 2, 10, DefectMode::Matrix, MATRIX_MODE_DIM_LIMIT).unwrap();
        let analytic = convergence_sweep(&fam, &b, 2, 10, DefectMode::Analytic, 0).unwrap();
        for (mr, ar) in matrix.iter().zip(&analytic) {
            assert_eq!(mr.n, ar.n);
            assert!((mr.defect - ar.defect).abs() <= 1e-10, "n={}", mr.n);
            assert!(mr.defect <= mr.bound + 1e-12);
            assert_eq!(mr.bound, 1.0 / (mr.n - mr.m) as f64);
        }
    }

    #[test]
    fn matrix_mode_respects_dim_limit() {
        let fam = z2z3();
        let b = word(&fam, "b");
        assert!(matches!(
            convergence_sweep(&fam, &b, 2, 8, DefectMode::Matrix, 10),
            Err(Error::TooLarge { .. })
        ));
    }
}
