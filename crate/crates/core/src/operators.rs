//! Sparse real operators between finite bases.
//!
//! Operators are plain entry lists in canonical (row, col) order, tagged
//! with basis handles so that mismatched compositions fail loudly instead
//! of silently multiplying the wrong matrices.

use std::collections::HashMap;

use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::spaces::WindowBasis;
use crate::words::Word;

/// A named basis handle: a label plus the dimension.  Two handles are
/// compatible exactly when both agree.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BasisRef {
    label: String,
    dim: usize,
}

impl BasisRef {
    pub fn new(label: impl Into<String>, dim: usize) -> Self {
        BasisRef { label: label.into(), dim }
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn tensor(&self, other: &BasisRef) -> BasisRef {
        BasisRef::new(format!("{}(x){}", self.label, other.label), self.dim * other.dim)
    }
}

impl std::fmt::Display for BasisRef {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{}[dim {}]", self.label, self.dim)
    }
}

/// Sparse operator from `domain` to `codomain`, stored as deduplicated
/// (row, col, value) triples sorted row-major.  Exact zeros are dropped, so
/// structural equality of canonical forms is meaningful.
#[derive(Debug, Clone, PartialEq)]
pub struct SparseOp {
    domain: BasisRef,
    codomain: BasisRef,
    entries: Vec<(u64, u64, f64)>,
}

impl SparseOp {
    pub fn from_entries(
        domain: BasisRef,
        codomain: BasisRef,
        entries: Vec<(u64, u64, f64)>,
    ) -> Result<Self> {
        for &(r, c, _) in &entries {
            if r >= codomain.dim() as u64 || c >= domain.dim() as u64 {
                return Err(Error::BasisMismatch {
                    expected: format!("entries within {codomain} x {domain}"),
                    got: format!("entry at ({r}, {c})"),
                });
            }
        }
        let mut op = SparseOp { domain, codomain, entries };
        op.canonicalize();
        Ok(op)
    }

    pub fn zero(domain: BasisRef, codomain: BasisRef) -> Self {
        SparseOp { domain, codomain, entries: Vec::new() }
    }

    pub fn identity(basis: BasisRef) -> Self {
        let entries = (0..basis.dim() as u64).map(|i| (i, i, 1.0)).collect();
        SparseOp { domain: basis.clone(), codomain: basis, entries }
    }

    pub fn domain(&self) -> &BasisRef {
        &self.domain
    }

    pub fn codomain(&self) -> &BasisRef {
        &self.codomain
    }

    pub fn entries(&self) -> &[(u64, u64, f64)] {
        &self.entries
    }

    pub fn nnz(&self) -> usize {
        self.entries.len()
    }

    fn canonicalize(&mut self) {
        self.entries.sort_unstable_by_key(|&(r, c, _)| (r, c));
        let mut out: Vec<(u64, u64, f64)> = Vec::with_capacity(self.entries.len());
        for &(r, c, v) in &self.entries {
            match out.last_mut() {
                Some(last) if last.0 == r && last.1 == c => last.2 += v,
                _ => out.push((r, c, v)),
            }
        }
        out.retain(|&(_, _, v)| v != 0.0);
        self.entries = out;
    }

    pub fn scale(&self, s: f64) -> Self {
        let mut op = SparseOp {
            domain: self.domain.clone(),
            codomain: self.codomain.clone(),
            entries: self.entries.iter().map(|&(r, c, v)| (r, c, s * v)).collect(),
        };
        op.canonicalize();
        op
    }

    pub fn add(&self, other: &SparseOp) -> Result<Self> {
        if self.domain != other.domain || self.codomain != other.codomain {
            return Err(Error::BasisMismatch {
                expected: format!("{} -> {}", self.domain, self.codomain),
                got: format!("{} -> {}", other.domain, other.codomain),
            });
        }
        let mut entries = self.entries.clone();
        entries.extend_from_slice(&other.entries);
        let mut op =
            SparseOp { domain: self.domain.clone(), codomain: self.codomain.clone(), entries };
        op.canonicalize();
        Ok(op)
    }

    pub fn sub(&self, other: &SparseOp) -> Result<Self> {
        self.add(&other.scale(-1.0))
    }

    /// Adjoint; entries are real so this is the transpose.
    pub fn adjoint(&self) -> Self {
        let mut op = SparseOp {
            domain: self.codomain.clone(),
            codomain: self.domain.clone(),
            entries: self.entries.iter().map(|&(r, c, v)| (c, r, v)).collect(),
        };
        op.canonicalize();
        op
    }

    /// self o other (apply `other` first).
    pub fn compose(&self, other: &SparseOp) -> Result<Self> {
        if self.domain != other.codomain {
            return Err(Error::BasisMismatch {
                expected: self.domain.to_string(),
                got: other.codomain.to_string(),
            });
        }
        let mut by_col: HashMap<u64, Vec<(u64, f64)>> = HashMap::new();
        for &(r, c, v) in &self.entries {
            by_col.entry(c).or_default().push((r, v));
        }
        let mut acc: HashMap<(u64, u64), f64> = HashMap::new();
        for &(mid, col, w) in &other.entries {
            if let Some(bucket) = by_col.get(&mid) {
                for &(row, v) in bucket {
                    *acc.entry((row, col)).or_insert(0.0) += v * w;
                }
            }
        }
        let entries = acc.into_iter().map(|((r, c), v)| (r, c, v)).collect();
        let mut op =
            SparseOp { domain: other.domain.clone(), codomain: self.codomain.clone(), entries };
        op.canonicalize();
        Ok(op)
    }

    /// Kronecker product; row/column indices are `self` major.
    pub fn tensor(&self, other: &SparseOp) -> Self {
        let domain = self.domain.tensor(&other.domain);
        let codomain = self.codomain.tensor(&other.codomain);
        let dr = other.codomain.dim() as u64;
        let dc = other.domain.dim() as u64;
        let mut entries = Vec::with_capacity(self.nnz() * other.nnz());
        for &(r1, c1, v1) in &self.entries {
            for &(r2, c2, v2) in &other.entries {
                entries.push((r1 * dr + r2, c1 * dc + c2, v1 * v2));
            }
        }
        let mut op = SparseOp { domain, codomain, entries };
        op.canonicalize();
        op
    }

    /// (self (x) 1) o other, without materialising the tensor factor.  The
    /// middle space is codomain(other) = codomain(self) (x) `right`, indexed
    /// row-major.
    pub fn tensor_identity_compose(&self, right: &BasisRef, other: &SparseOp) -> Result<Self> {
        let expected = self.domain.tensor(right);
        if other.codomain != expected {
            return Err(Error::BasisMismatch {
                expected: expected.to_string(),
                got: other.codomain.to_string(),
            });
        }
        let mut by_col: HashMap<u64, Vec<(u64, f64)>> = HashMap::new();
        for &(r, c, v) in &self.entries {
            by_col.entry(c).or_default().push((r, v));
        }
        let dr = right.dim() as u64;
        let mut entries = Vec::new();
        for &(pair, col, w) in &other.entries {
            let left = pair / dr;
            let leg = pair % dr;
            if let Some(bucket) = by_col.get(&left) {
                for &(row, v) in bucket {
                    entries.push((row * dr + leg, col, v * w));
                }
            }
        }
        let codomain = self.codomain.tensor(right);
        let mut op = SparseOp { domain: other.domain.clone(), codomain, entries };
        op.canonicalize();
        Ok(op)
    }

    pub fn apply(&self, v: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; self.codomain.dim()];
        for &(r, c, val) in &self.entries {
            out[r as usize] += val * v[c as usize];
        }
        out
    }

    fn apply_transpose(&self, v: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; self.domain.dim()];
        for &(r, c, val) in &self.entries {
            out[c as usize] += val * v[r as usize];
        }
        out
    }

    /// Largest entry magnitude.
    pub fn max_abs(&self) -> f64 {
        self.entries.iter().map(|&(_, _, v)| v.abs()).fold(0.0, f64::max)
    }

    /// Largest entrywise difference, using the union of supports.
    pub fn max_abs_diff(&self, other: &SparseOp) -> Result<f64> {
        Ok(self.sub(other)?.max_abs())
    }

    /// True when every row and every column carry at most one entry; such an
    /// operator maps basis vectors to scalar multiples of distinct basis
    /// vectors and its norm is the largest entry.
    pub fn is_monomial(&self) -> bool {
        let mut rows = std::collections::HashSet::new();
        let mut cols = std::collections::HashSet::new();
        for &(r, c, _) in &self.entries {
            if !rows.insert(r) || !cols.insert(c) {
                return false;
            }
        }
        true
    }

    pub fn to_dense(&self) -> DMatrix<f64> {
        let mut m = DMatrix::zeros(self.codomain.dim(), self.domain.dim());
        for &(r, c, v) in &self.entries {
            m[(r as usize, c as usize)] += v;
        }
        m
    }

    /// Coordinate-text dump: one `row col value` line per entry, sorted,
    /// values rounded to 12 decimal digits so dumps diff cleanly.
    pub fn dump_coordinates(&self) -> String {
        let mut s = String::new();
        for &(r, c, v) in &self.entries {
            s.push_str(&format!("{r} {c} {v:.12}\n"));
        }
        s
    }
}

/// How a norm was computed.
#[derive(Debug, Clone, PartialEq)]
pub enum NormMethod {
    /// Operator is monomial; the norm is the largest entry, exactly.
    MonomialExact,
    DenseSvd,
    PowerIteration { iterations: usize, tolerance: f64 },
}

#[derive(Debug, Clone, PartialEq)]
pub struct NormReport {
    pub value: f64,
    pub method: NormMethod,
}

const DENSE_LIMIT: usize = 4096;
const POWER_MAX_ITER: usize = 50_000;

/// Spectral norm via the cheapest exact-enough route: monomial structure,
/// then dense SVD up to 4096, then power iteration on A^T A.
pub fn operator_norm(op: &SparseOp) -> Result<NormReport> {
    if op.is_monomial() {
        return Ok(NormReport { value: op.max_abs(), method: NormMethod::MonomialExact });
    }
    let dim = op.domain.dim().max(op.codomain.dim());
    if dim <= DENSE_LIMIT {
        let svd = op.to_dense().svd(false, false);
        let value = svd.singular_values.iter().cloned().fold(0.0, f64::max);
        return Ok(NormReport { value, method: NormMethod::DenseSvd });
    }
    power_iteration_norm(op)
}

fn power_iteration_norm(op: &SparseOp) -> Result<NormReport> {
    let n = op.domain.dim();
    if n == 0 || op.entries.is_empty() {
        return Ok(NormReport {
            value: 0.0,
            method: NormMethod::PowerIteration { iterations: 0, tolerance: 0.0 },
        });
    }
    // fixed deterministic start vector with energy on every coordinate
    let mut v: Vec<f64> = (0..n).map(|i| 1.0 + ((i * 2654435761) % 97) as f64 / 97.0).collect();
    let tol = 1e-12;
    let mut lambda_prev = 0.0;
    for it in 1..=POWER_MAX_ITER {
        let w = op.apply_transpose(&op.apply(&v));
        let norm = w.iter().map(|x| x * x).sum::<f64>().sqrt();
        if norm == 0.0 {
            return Ok(NormReport {
                value: 0.0,
                method: NormMethod::PowerIteration { iterations: it, tolerance: tol },
            });
        }
        let lambda = v.iter().zip(&w).map(|(a, b)| a * b).sum::<f64>()
            / v.iter().map(|x| x * x).sum::<f64>();
        for (x, y) in v.iter_mut().zip(&w) {
            *x = y / norm;
        }
        if it > 4 && (lambda - lambda_prev).abs() <= tol * lambda.abs().max(1e-300) {
            return Ok(NormReport {
                value: lambda.max(0.0).sqrt(),
                method: NormMethod::PowerIteration { iterations: it, tolerance: tol },
            });
        }
        lambda_prev = lambda;
    }
    Err(Error::NonConvergence { iterations: POWER_MAX_ITER })
}

/// Count of singular values above `threshold` times the largest.
pub fn numerical_rank(op: &SparseOp, threshold: f64) -> Result<usize> {
    let dim = op.domain.dim().max(op.codomain.dim());
    if dim > DENSE_LIMIT {
        return Err(Error::TooLarge { dim, max: DENSE_LIMIT });
    }
    if op.entries.is_empty() {
        return Ok(0);
    }
    let svd = op.to_dense().svd(false, false);
    let max = svd.singular_values.iter().cloned().fold(0.0, f64::max);
    if max == 0.0 {
        return Ok(0);
    }
    Ok(svd.singular_values.iter().filter(|&&s| s > threshold * max).count())
}

pub const DEFAULT_RANK_THRESHOLD: f64 = 1e-8;

/// The truncated left translation by h on l2(W_N): entry (hg, g) = 1 for
/// every basis word g whose product hg stays inside the materialised
/// window.  Products that leave the window (too long, or merged past an
/// integer-window bound) contribute nothing: the operator is the exact
/// compression of the translation to the materialised subspace.
pub fn translation_op(basis: &WindowBasis, h: &Word) -> Result<SparseOp> {
    let family = basis.family();
    family.validate_word(h)?;
    let mut entries = Vec::new();
    for (col, g) in basis.words().iter().enumerate() {
        let hg = match family.multiply(h, g) {
            Ok(w) => w,
            Err(Error::WindowOverflow { .. }) => continue,
            Err(e) => return Err(e),
        };
        if let Some(row) = basis.index_of(&hg) {
            entries.push((row as u64, col as u64, 1.0));
        }
    }
    SparseOp::from_entries(basis.basis_ref(), basis.basis_ref(), entries)
}

/// Corner compression onto the sub-window W_n of the operator's window
/// basis: keeps the leading block, relabels to the W_n basis.
pub fn compress_to_window(op: &SparseOp, basis: &WindowBasis, n: usize) -> Result<SparseOp> {
    if n > basis.cutoff() {
        return Err(Error::CutoffTooLarge { n, max: basis.cutoff() });
    }
    if op.domain() != &basis.basis_ref() || op.codomain() != &basis.basis_ref() {
        return Err(Error::BasisMismatch {
            expected: basis.basis_ref().to_string(),
            got: format!("{} -> {}", op.domain(), op.codomain()),
        });
    }
    let dim = basis.prefix_dim(n) as u64;
    let entries = op
        .entries()
        .iter()
        .copied()
        .filter(|&(r, c, _)| r < dim && c < dim)
        .collect();
    SparseOp::from_entries(basis.sub_basis_ref(n), basis.sub_basis_ref(n), entries)
}

/// Rank-one operator zeta -> v <w, zeta>, with the inner product linear in
/// its second argument.  `v` and `w` are given as sparse coordinate lists.
pub fn rank_one(
    domain: BasisRef,
    codomain: BasisRef,
    v: &[(u64, f64)],
    w: &[(u64, f64)],
) -> Result<SparseOp> {
    let mut entries = Vec::with_capacity(v.len() * w.len());
    for &(i, a) in v {
        for &(j, b) in w {
            entries.push((i, j, a * b));
        }
    }
    SparseOp::from_entries(domain, codomain, entries)
}

/// Rank-one operator between basis vectors: maps delta_col to delta_row.
pub fn matrix_unit(domain: BasisRef, codomain: BasisRef, row: u64, col: u64) -> Result<SparseOp> {
    SparseOp::from_entries(domain, codomain, vec![(row, col, 1.0)])
}
