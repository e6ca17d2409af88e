//! Bases for the truncated spaces: the window basis of l2(W_n), the tensor
//! address of a word, and the left/right side spaces used to single out the
//! letter a fixed number of places from the right end of a word.

use std::collections::HashMap;
use std::sync::Arc;

use crate::error::{Error, Result};
use crate::operators::{BasisRef, SparseOp};
use crate::words::{FactorFamily, Letter, Word};

/// Deterministic ordered basis of l2(W_n): all reduced words of length <= n
/// in graded lexicographic order, with a word -> index map.
#[derive(Debug, Clone)]
pub struct WindowBasis {
    family: FactorFamily,
    n: usize,
    words: Arc<Vec<Word>>,
    index: Arc<HashMap<Word, usize>>,
}

impl WindowBasis {
    pub fn build(family: &FactorFamily, n: usize) -> Self {
        let words = family.enumerate_window(n);
        let index = words.iter().enumerate().map(|(i, w)| (w.clone(), i)).collect();
        WindowBasis {
            family: family.clone(),
            n,
            words: Arc::new(words),
            index: Arc::new(index),
        }
    }

    pub fn family(&self) -> &FactorFamily {
        &self.family
    }

    pub fn cutoff(&self) -> usize {
        self.n
    }

    pub fn dim(&self) -> usize {
        self.words.len()
    }

    pub fn words(&self) -> &[Word] {
        &self.words
    }

    pub fn word(&self, i: usize) -> &Word {
        &self.words[i]
    }

    pub fn index_of(&self, w: &Word) -> Option<usize> {
        self.index.get(w).copied()
    }

    /// Number of basis words of length <= k (a prefix of this basis, since
    /// the order is graded).
    pub fn prefix_dim(&self, k: usize) -> usize {
        self.words.partition_point(|w| w.block_length() <= k)
    }

    pub fn basis_ref(&self) -> BasisRef {
        BasisRef::new(format!("W{}[{}]", self.n, self.family.label()), self.dim())
    }

    /// Basis handle for the window W_k viewed inside this basis.
    pub fn sub_basis_ref(&self, k: usize) -> BasisRef {
        BasisRef::new(format!("W{}[{}]", k, self.family.label()), self.prefix_dim(k))
    }
}

/// The tensor coordinates of a word: its factor path and the element rank
/// on each leg.  The empty path addresses the scalar summand spanned by
/// delta_e.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TensorAddress {
    pub component_path: Vec<u8>,
    pub leg_ranks: Vec<u32>,
}

impl TensorAddress {
    pub fn of(w: &Word) -> Self {
        TensorAddress {
            component_path: w.letters().iter().map(|l| l.factor).collect(),
            leg_ranks: w.letters().iter().map(|l| l.rank).collect(),
        }
    }

    pub fn to_word(&self) -> Word {
        Word::from_letters_unchecked(
            self.component_path
                .iter()
                .zip(&self.leg_ranks)
                .map(|(&factor, &rank)| Letter { factor, rank })
                .collect(),
        )
    }
}

/// Which length bound to use for the left side space.  `Standard` admits
/// left words up to length n - p, which is what makes the position
/// embeddings cover all words of length >= p.  `Narrow` is the variant
/// bound n - p - 1 (for p < n), kept so the difference is demonstrable.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum LengthBound {
    #[default]
    Standard,
    Narrow,
}

impl LengthBound {
    pub fn left_max(self, n: usize, p: usize) -> usize {
        match self {
            LengthBound::Standard => n - p,
            LengthBound::Narrow => {
                if p < n {
                    n - p - 1
                } else {
                    0
                }
            }
        }
    }
}

/// Ordered bases of the side spaces at position p from the right, for a
/// fixed middle factor iota.  The vacuum vector is represented by the
/// identity word in slot 0 of the left basis (and is the whole right basis
/// when p = 1).
#[derive(Debug, Clone)]
pub struct SideBases {
    pub n: usize,
    pub p: usize,
    pub iota: usize,
    pub bound: LengthBound,
    /// Vacuum plus words of length 1..=left_max not ending in factor iota.
    pub left: Vec<Word>,
    /// Words of length exactly p-1 not beginning in factor iota (just the
    /// vacuum when p = 1).
    pub right: Vec<Word>,
}

impl SideBases {
    pub fn build(family: &FactorFamily, n: usize, p: usize, iota: usize, bound: LengthBound) -> Result<Self> {
        if p < 1 || p > n {
            return Err(Error::InvalidPosition { p, n });
        }
        let left_max = bound.left_max(n, p);
        let mut left = vec![Word::identity()];
        left.extend(
            family
                .enumerate_window(left_max)
                .into_iter()
                .filter(|w| !w.is_identity() && w.letters().last().unwrap().factor as usize != iota),
        );
        let right = if p == 1 {
            vec![Word::identity()]
        } else {
            family
                .enumerate_window(p - 1)
                .into_iter()
                .filter(|w| {
                    w.block_length() == p - 1 && w.letters()[0].factor as usize != iota
                })
                .collect()
        };
        Ok(SideBases { n, p, iota, bound, left, right })
    }

    pub fn left_index(&self, w: &Word) -> Option<usize> {
        self.left.iter().position(|x| x == w)
    }

    pub fn left_ref(&self, family: &FactorFamily) -> BasisRef {
        BasisRef::new(
            format!("L(p{},f{})[{}]", self.p, self.iota, family.label()),
            self.left.len(),
        )
    }

    pub fn right_ref(&self, family: &FactorFamily) -> BasisRef {
        BasisRef::new(
            format!("R(p{},f{})[{}]", self.p, self.iota, family.label()),
            self.right.len(),
        )
    }

    pub fn domain_ref(&self, family: &FactorFamily) -> BasisRef {
        let letters = family.letter_count(self.iota);
        BasisRef::new(
            format!("L(p{0},f{1})xG{1}oxR(p{0},f{1})[{2}]", self.p, self.iota, family.label()),
            self.left.len() * letters * self.right.len(),
        )
    }

    /// Index of (left, mid letter rank, right) in the tensor domain.
    pub fn domain_index(&self, family: &FactorFamily, l: usize, rank: u32, r: usize) -> usize {
        let letters = family.letter_count(self.iota);
        (l * letters + rank as usize) * self.right.len() + r
    }

    /// The window word obtained by concatenating left word, middle letter
    /// and right word.  Reduced by construction.
    pub fn concat(&self, l: &Word, rank: u32, r: &Word) -> Word {
        let mut letters = Vec::with_capacity(l.block_length() + 1 + r.block_length());
        letters.extend_from_slice(l.letters());
        letters.push(Letter { factor: self.iota as u8, rank });
        letters.extend_from_slice(r.letters());
        Word::from_letters_unchecked(letters)
    }
}

/// The isometry embedding L x G_iota^o x R into l2(W_n) by concatenation:
/// one unit entry per domain column.
pub fn build_position_isometry(
    basis: &WindowBasis,
    p: usize,
    iota: usize,
    bound: LengthBound,
) -> Result<SparseOp> {
    let n = basis.cutoff();
    let family = basis.family().clone();
    let sides = SideBases::build(&family, n, p, iota, bound)?;
    let mut entries = Vec::new();
    for (li, l) in sides.left.iter().enumerate() {
        for rank in 0..family.letter_count(iota) as u32 {
            for (ri, r) in sides.right.iter().enumerate() {
                let word = sides.concat(l, rank, r);
                let row = basis
                    .index_of(&word)
                    .expect("concatenated word stays within the window");
                let col = sides.domain_index(&family, li, rank, ri);
                entries.push((row as u64, col as u64, 1.0));
            }
        }
    }
    SparseOp::from_entries(sides.domain_ref(&family), basis.basis_ref(), entries)
}
