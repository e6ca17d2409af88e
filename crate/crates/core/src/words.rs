//! Reduced words over a free product of groups.
//!
//! Elements are alternating sequences of non-identity letters drawn from a
//! family of factor groups; multiplication concatenates and then cancels or
//! merges at the junction.  Everything here is immutable and deterministic:
//! letters carry a canonical rank inside their factor so that words order
//! graded-lexicographically without consulting the family.

use std::collections::HashSet;
use std::fmt;

use crate::error::{Error, Result};

/// Description of one free factor.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum FactorKind {
    /// Cyclic group of the given order (>= 2); non-identity elements are 1..order-1.
    Cyclic { order: u32 },
    /// Finite group given by a full product table (row * col), with the
    /// identity at the given index.  Validated against the group axioms.
    Table { size: u32, identity: u32, products: Vec<u32> },
    /// The integers, materialised on the letters z with 0 < |z| <= bound.
    /// Products that leave the window are an error, not a truncation.
    IntegerWindow { bound: i64 },
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FactorSpec {
    pub kind: FactorKind,
    pub label: String,
}

impl FactorSpec {
    pub fn cyclic(order: u32, label: &str) -> Self {
        FactorSpec { kind: FactorKind::Cyclic { order }, label: label.to_string() }
    }

    pub fn integer_window(bound: i64, label: &str) -> Self {
        FactorSpec { kind: FactorKind::IntegerWindow { bound }, label: label.to_string() }
    }

    pub fn table(size: u32, identity: u32, products: Vec<u32>, label: &str) -> Self {
        FactorSpec { kind: FactorKind::Table { size, identity, products }, label: label.to_string() }
    }

    /// Number of non-identity letters this factor contributes.
    pub fn letter_count(&self) -> usize {
        match &self.kind {
            FactorKind::Cyclic { order } => *order as usize - 1,
            FactorKind::Table { size, .. } => *size as usize - 1,
            FactorKind::IntegerWindow { bound } => 2 * *bound as usize,
        }
    }
}

/// One non-identity letter: a factor index plus the canonical rank of the
/// element inside that factor.  Ranks order cyclic elements as 1, 2, ...,
/// table elements by table index, and window integers as 1, -1, 2, -2, ...
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Letter {
    pub factor: u8,
    pub rank: u32,
}

/// A reduced word; empty means the identity e.
#[derive(Debug, Clone, Default, PartialEq, Eq, Hash)]
pub struct Word {
    letters: Vec<Letter>,
}

impl Word {
    pub fn identity() -> Self {
        Word { letters: Vec::new() }
    }

    pub fn from_letters_unchecked(letters: Vec<Letter>) -> Self {
        Word { letters }
    }

    pub fn letters(&self) -> &[Letter] {
        &self.letters
    }

    /// Block length: the number of letters.
    pub fn block_length(&self) -> usize {
        self.letters.len()
    }

    pub fn is_identity(&self) -> bool {
        self.letters.is_empty()
    }

    /// The first `k` letters as a word (a prefix of a reduced word is reduced).
    pub fn prefix(&self, k: usize) -> Word {
        Word { letters: self.letters[..k].to_vec() }
    }

    /// The letters from position `k` onwards.
    pub fn suffix(&self, k: usize) -> Word {
        Word { letters: self.letters[k..].to_vec() }
    }
}

impl PartialOrd for Word {
    fn partial_cmp(&self, other: &Self) -> Option<std::cmp::Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Word {
    /// Graded order: by length first, then lexicographically on
    /// (factor, rank) pairs.
    fn cmp(&self, other: &Self) -> std::cmp::Ordering {
        self.letters
            .len()
            .cmp(&other.letters.len())
            .then_with(|| self.letters.cmp(&other.letters))
    }
}

/// The seven ways a product hg can reduce, plus the degenerate identity
/// cases which are booked under `Disjoint`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MulCase {
    /// No interaction at the junction (case 1).
    Disjoint,
    /// Some boundary letters cancel, then the factors stop matching (case 2).
    Cancel,
    /// All of h cancels into g, which is strictly longer (case 3).
    HeadAbsorbed,
    /// All of g cancels into h, which is strictly longer (case 4).
    TailAbsorbed,
    /// h and g annihilate completely (case 5).
    Annihilated,
    /// No cancellation but the junction letters merge (case 6).
    Merge,
    /// Some letters cancel and then the junction merges (case 7).
    CancelMerge,
}

impl MulCase {
    pub fn number(self) -> u8 {
        match self {
            MulCase::Disjoint => 1,
            MulCase::Cancel => 2,
            MulCase::HeadAbsorbed => 3,
            MulCase::TailAbsorbed => 4,
            MulCase::Annihilated => 5,
            MulCase::Merge => 6,
            MulCase::CancelMerge => 7,
        }
    }
}

/// How much of the junction between two words cancels or merges.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct CancellationProfile {
    /// Number of fully cancelled boundary letter pairs.
    pub q: usize,
    /// Whether a same-factor merge of non-inverse letters follows the
    /// cancelled block.
    pub merged: bool,
    pub case: MulCase,
}

impl CancellationProfile {
    /// Length of the reduced product predicted by this profile.
    pub fn product_length(&self, len_h: usize, len_g: usize) -> usize {
        len_h + len_g - 2 * self.q - usize::from(self.merged)
    }
}

/// An ordered family of factors.  All word operations go through this type
/// so that element arithmetic and canonical letter order stay in one place.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FactorFamily {
    factors: Vec<FactorSpec>,
    label: String,
}

const MAX_WINDOW_BOUND: i64 = 1 << 20;

impl FactorFamily {
    /// Validates the specs (group axioms for table factors) and freezes the
    /// canonical letter order.
    pub fn new(factors: Vec<FactorSpec>) -> Result<Self> {
        if factors.is_empty() {
            return Err(Error::InvalidSpec("a family needs at least one factor".into()));
        }
        if factors.len() > u8::MAX as usize {
            return Err(Error::InvalidSpec("too many factors".into()));
        }
        let mut labels = HashSet::new();
        for (i, f) in factors.iter().enumerate() {
            if !labels.insert(f.label.clone()) {
                return Err(Error::InvalidSpec(format!("duplicate factor label {:?}", f.label)));
            }
            match &f.kind {
                FactorKind::Cyclic { order } => {
                    if *order < 2 {
                        return Err(Error::InvalidSpec(format!("factor {i}: cyclic order must be >= 2")));
                    }
                }
                FactorKind::IntegerWindow { bound } => {
                    if *bound < 1 || *bound > MAX_WINDOW_BOUND {
                        return Err(Error::InvalidSpec(format!(
                            "factor {i}: window bound must be in 1..={MAX_WINDOW_BOUND}"
                        )));
                    }
                }
                FactorKind::Table { size, identity, products } => {
                    validate_table(i, *size, *identity, products)?;
                }
            }
        }
        let label = factors.iter().map(|f| f.label.as_str()).collect::<Vec<_>>().join("*");
        Ok(FactorFamily { factors, label })
    }

    pub fn factors(&self) -> &[FactorSpec] {
        &self.factors
    }

    pub fn len(&self) -> usize {
        self.factors.len()
    }

    pub fn is_empty(&self) -> bool {
        self.factors.is_empty()
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    pub fn letter_count(&self, factor: usize) -> usize {
        self.factors[factor].letter_count()
    }

    /// The canonical element value behind a rank (cyclic exponent, table
    /// index, or window integer).
    pub fn rank_to_value(&self, factor: usize, rank: u32) -> i64 {
        match &self.factors[factor].kind {
            FactorKind::Cyclic { .. } => rank as i64 + 1,
            FactorKind::Table { identity, .. } => {
                let idx = rank + u32::from(rank >= *identity);
                idx as i64
            }
            FactorKind::IntegerWindow { .. } => {
                let magnitude = rank as i64 / 2 + 1;
                if rank.is_multiple_of(2) {
                    magnitude
                } else {
                    -magnitude
                }
            }
        }
    }

    /// Inverse of `rank_to_value`; `None` when the value is the identity or
    /// out of range.
    pub fn value_to_rank(&self, factor: usize, value: i64) -> Option<u32> {
        match &self.factors[factor].kind {
            FactorKind::Cyclic { order } => {
                if value >= 1 && value < *order as i64 {
                    Some(value as u32 - 1)
                } else {
                    None
                }
            }
            FactorKind::Table { size, identity, .. } => {
                if value < 0 || value >= *size as i64 || value == *identity as i64 {
                    None
                } else {
                    let idx = value as u32;
                    Some(idx - u32::from(idx > *identity))
                }
            }
            FactorKind::IntegerWindow { bound } => {
                if value == 0 || value.abs() > *bound {
                    None
                } else {
                    let base = 2 * (value.unsigned_abs() as u32 - 1);
                    Some(base + u32::from(value < 0))
                }
            }
        }
    }

    pub fn letter(&self, factor: usize, value: i64) -> Result<Letter> {
        let rank = self
            .value_to_rank(factor, value)
            .ok_or_else(|| Error::FactorMismatch(format!("element {value} is not a letter of factor {factor}")))?;
        Ok(Letter { factor: factor as u8, rank })
    }

    /// All letters of a factor in canonical rank order.
    pub fn letters_of(&self, factor: usize) -> Vec<Letter> {
        (0..self.letter_count(factor) as u32)
            .map(|rank| Letter { factor: factor as u8, rank })
            .collect()
    }

    pub fn inverse_rank(&self, factor: usize, rank: u32) -> u32 {
        match &self.factors[factor].kind {
            FactorKind::Cyclic { order } => order - 2 - rank,
            FactorKind::Table { size, identity, products } => {
                let idx = rank + u32::from(rank >= *identity);
                let inv = (0..*size)
                    .find(|&j| products[(idx * size + j) as usize] == *identity)
                    .expect("validated table has inverses");
                inv - u32::from(inv > *identity)
            }
            FactorKind::IntegerWindow { .. } => rank ^ 1,
        }
    }

    /// Whether two letters of the same factor cancel to the identity.
    fn ranks_cancel(&self, factor: usize, r1: u32, r2: u32) -> bool {
        self.inverse_rank(factor, r1) == r2
    }

    /// Product of two non-identity elements of one factor.  `Ok(None)` means
    /// the product is the identity.
    pub fn merge_ranks(&self, factor: usize, r1: u32, r2: u32) -> Result<Option<u32>> {
        match &self.factors[factor].kind {
            FactorKind::Cyclic { order } => {
                let sum = (r1 + 1 + r2 + 1) % order;
                Ok(if sum == 0 { None } else { Some(sum - 1) })
            }
            FactorKind::Table { size, identity, products } => {
                let i1 = r1 + u32::from(r1 >= *identity);
                let i2 = r2 + u32::from(r2 >= *identity);
                let p = products[(i1 * size + i2) as usize];
                Ok(if p == *identity { None } else { Some(p - u32::from(p > *identity)) })
            }
            FactorKind::IntegerWindow { bound } => {
                let sum = self.rank_to_value(factor, r1) + self.rank_to_value(factor, r2);
                if sum == 0 {
                    Ok(None)
                } else if sum.abs() > *bound {
                    Err(Error::WindowOverflow { factor, value: sum, bound: *bound })
                } else {
                    Ok(Some(self.value_to_rank(factor, sum).expect("in window")))
                }
            }
        }
    }

    /// Checks that a word is a valid reduced word over this family.
    pub fn validate_word(&self, w: &Word) -> Result<()> {
        let mut prev: Option<u8> = None;
        for l in w.letters() {
            let f = l.factor as usize;
            if f >= self.factors.len() {
                return Err(Error::FactorMismatch(format!("factor index {f} out of range")));
            }
            if l.rank as usize >= self.letter_count(f) {
                return Err(Error::FactorMismatch(format!(
                    "rank {} out of range for factor {f}",
                    l.rank
                )));
            }
            if prev == Some(l.factor) {
                return Err(Error::FactorMismatch("adjacent letters share a factor".into()));
            }
            prev = Some(l.factor);
        }
        Ok(())
    }

    /// Builds a word from (factor, value) pairs, reducing as it goes.
    pub fn word(&self, letters: &[(usize, i64)]) -> Result<Word> {
        let mut acc = Word::identity();
        for &(f, v) in letters {
            let l = self.letter(f, v)?;
            acc = self.multiply(&acc, &Word { letters: vec![l] })?;
        }
        Ok(acc)
    }

    /// Concatenate-and-reduce product of two reduced words.
    pub fn multiply(&self, h: &Word, g: &Word) -> Result<Word> {
        self.validate_word(h)?;
        self.validate_word(g)?;
        let hl = h.letters();
        let gl = g.letters();
        let mut i = hl.len();
        let mut j = 0usize;
        while i > 0 && j < gl.len() {
            let a = hl[i - 1];
            let b = gl[j];
            if a.factor != b.factor {
                break;
            }
            if self.ranks_cancel(a.factor as usize, a.rank, b.rank) {
                i -= 1;
                j += 1;
            } else {
                // Same factor, no cancellation: merge and stop.
                let merged = self
                    .merge_ranks(a.factor as usize, a.rank, b.rank)?
                    .expect("non-cancelling merge is non-identity");
                let mut letters = Vec::with_capacity(i - 1 + 1 + gl.len() - j - 1);
                letters.extend_from_slice(&hl[..i - 1]);
                letters.push(Letter { factor: a.factor, rank: merged });
                letters.extend_from_slice(&gl[j + 1..]);
                return Ok(Word { letters });
            }
        }
        let mut letters = Vec::with_capacity(i + gl.len() - j);
        letters.extend_from_slice(&hl[..i]);
        letters.extend_from_slice(&gl[j..]);
        Ok(Word { letters })
    }

    /// Inverse word: letters reversed, each inverted within its factor.
    pub fn inverse(&self, w: &Word) -> Word {
        let letters = w
            .letters()
            .iter()
            .rev()
            .map(|l| Letter { factor: l.factor, rank: self.inverse_rank(l.factor as usize, l.rank) })
            .collect();
        Word { letters }
    }

    /// Classifies how the product hg reduces, without computing any merged
    /// element (so this never overflows an integer window).
    pub fn cancellation_profile(&self, h: &Word, g: &Word) -> CancellationProfile {
        let hl = h.letters();
        let gl = g.letters();
        let mut q = 0usize;
        while q < hl.len() && q < gl.len() {
            let a = hl[hl.len() - 1 - q];
            let b = gl[q];
            if a.factor == b.factor && self.ranks_cancel(a.factor as usize, a.rank, b.rank) {
                q += 1;
            } else {
                break;
            }
        }
        let merged = q < hl.len()
            && q < gl.len()
            && hl[hl.len() - 1 - q].factor == gl[q].factor;
        let case = if q == 0 && !merged {
            MulCase::Disjoint
        } else if merged {
            if q == 0 {
                MulCase::Merge
            } else {
                MulCase::CancelMerge
            }
        } else if q < hl.len().min(gl.len()) {
            MulCase::Cancel
        } else if hl.len() < gl.len() {
            MulCase::HeadAbsorbed
        } else if hl.len() > gl.len() {
            MulCase::TailAbsorbed
        } else {
            MulCase::Annihilated
        };
        CancellationProfile { q, merged, case }
    }

    /// All reduced words of block length <= n, ordered by length and then
    /// lexicographically on (factor, rank) sequences.
    pub fn enumerate_window(&self, n: usize) -> Vec<Word> {
        let mut out = vec![Word::identity()];
        let mut layer: Vec<Word> = vec![Word::identity()];
        for _ in 0..n {
            let mut next = Vec::new();
            for w in &layer {
                let last = w.letters().last().map(|l| l.factor);
                for f in 0..self.factors.len() {
                    if last == Some(f as u8) {
                        continue;
                    }
                    for rank in 0..self.letter_count(f) as u32 {
                        let mut letters = w.letters().to_vec();
                        letters.push(Letter { factor: f as u8, rank });
                        next.push(Word { letters });
                    }
                }
            }
            out.extend(next.iter().cloned());
            layer = next;
        }
        out
    }

    /// Number of words of each exact length 0..=n, without enumerating.
    /// `starting[f]` tracks words of the current length whose first letter
    /// lies in factor f; prepending a letter from any other factor is a
    /// bijection onto the next length.
    pub fn window_counts(&self, n: usize) -> Vec<u128> {
        let k = self.factors.len();
        let letters: Vec<u128> = (0..k).map(|f| self.letter_count(f) as u128).collect();
        let mut counts = vec![1u128];
        let mut starting: Vec<u128> = letters.clone();
        if n >= 1 {
            counts.push(starting.iter().sum());
        }
        for _ in 2..=n {
            starting = (0..k)
                .map(|f| {
                    letters[f]
                        * (0..k).filter(|&g| g != f).map(|g| starting[g]).sum::<u128>()
                })
                .collect();
            counts.push(starting.iter().sum());
        }
        counts
    }

    /// Total size of the window of words of length <= n.
    pub fn window_size(&self, n: usize) -> u128 {
        self.window_counts(n).iter().sum()
    }

    /// Renders a word in the token grammar `<factor>:<element>`, space
    /// separated; the identity renders as "e".
    pub fn format_word(&self, w: &Word) -> String {
        if w.is_identity() {
            return "e".to_string();
        }
        w.letters()
            .iter()
            .map(|l| format!("{}:{}", l.factor, self.rank_to_value(l.factor as usize, l.rank)))
            .collect::<Vec<_>>()
            .join(" ")
    }

    /// Parses the token grammar, with optional aliases mapping a name to a
    /// single token.  Tokens are multiplied left to right, so the input does
    /// not have to be reduced.
    pub fn parse_word(&self, literal: &str, aliases: &std::collections::HashMap<String, String>) -> Result<Word> {
        let trimmed = literal.trim();
        if trimmed.is_empty() || trimmed == "e" {
            return Ok(Word::identity());
        }
        let mut acc = Word::identity();
        for raw in trimmed.split_whitespace() {
            let token = aliases.get(raw).map(String::as_str).unwrap_or(raw);
            let (f_str, v_str) = token.split_once(':').ok_or_else(|| Error::BadWordLiteral {
                literal: literal.to_string(),
                reason: format!("token {raw:?} is not of the form factor:element and is not an alias"),
            })?;
            let f: usize = f_str.parse().map_err(|_| Error::BadWordLiteral {
                literal: literal.to_string(),
                reason: format!("bad factor index in token {token:?}"),
            })?;
            let v: i64 = v_str.parse().map_err(|_| Error::BadWordLiteral {
                literal: literal.to_string(),
                reason: format!("bad element in token {token:?}"),
            })?;
            if f >= self.factors.len() {
                return Err(Error::BadWordLiteral {
                    literal: literal.to_string(),
                    reason: format!("factor index {f} out of range"),
                });
            }
            let l = self.letter(f, v).map_err(|e| Error::BadWordLiteral {
                literal: literal.to_string(),
                reason: e.to_string(),
            })?;
            acc = self.multiply(&acc, &Word { letters: vec![l] })?;
        }
        Ok(acc)
    }
}

fn validate_table(index: usize, size: u32, identity: u32, products: &[u32]) -> Result<()> {
    let bad = |msg: String| Err(Error::InvalidSpec(format!("factor {index}: {msg}")));
    if size < 2 {
        return bad("table size must be >= 2".into());
    }
    if identity >= size {
        return bad("identity index out of range".into());
    }
    if products.len() != (size * size) as usize {
        return bad(format!("table must have {} entries", size * size));
    }
    if products.iter().any(|&p| p >= size) {
        return bad("table entry out of range".into());
    }
    let at = |i: u32, j: u32| products[(i * size + j) as usize];
    for i in 0..size {
        if at(identity, i) != i || at(i, identity) != i {
            return bad("identity row/column is not the identity map".into());
        }
    }
    for i in 0..size {
        if !(0..size).any(|j| at(i, j) == identity) {
            return bad(format!("element {i} has no inverse"));
        }
    }
    for i in 0..size {
        for j in 0..size {
            for k in 0..size {
                if at(at(i, j), k) != at(i, at(j, k)) {
                    return bad(format!("associativity fails at ({i}, {j}, {k})"));
                }
            }
        }
    }
    Ok(())
}

impl fmt::Display for Word {
    /// Factor:rank rendering that does not need the family; used in debug
    /// output only.
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_identity() {
            return write!(f, "e");
        }
        let parts: Vec<String> =
            self.letters.iter().map(|l| format!("{}#{}", l.factor, l.rank)).collect();
        write!(f, "{}", parts.join(" "))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    pub(crate) fn z2z3() -> FactorFamily {
        FactorFamily::new(vec![FactorSpec::cyclic(2, "Z2"), FactorSpec::cyclic(3, "Z3")]).unwrap()
    }

    fn z3z4() -> FactorFamily {
        FactorFamily::new(vec![FactorSpec::cyclic(3, "Z3"), FactorSpec::cyclic(4, "Z4")]).unwrap()
    }

    fn zw(b: i64) -> FactorFamily {
        FactorFamily::new(vec![
            FactorSpec::integer_window(b, "Za"),
            FactorSpec::integer_window(b, "Zb"),
        ])
        .unwrap()
    }

    fn random_word(family: &FactorFamily, rng: &mut ChaCha8Rng, max_len: usize) -> Word {
        let len = rng.gen_range(0..=max_len);
        let mut acc = Word::identity();
        for _ in 0..len {
            let f = rng.gen_range(0..family.len());
            let rank = rng.gen_range(0..family.letter_count(f)) as u32;
            let l = Word::from_letters_unchecked(vec![Letter { factor: f as u8, rank }]);
            acc = match family.multiply(&acc, &l) {
                Ok(w) => w,
                Err(_) => acc, // window overflow: skip the letter
            };
        }
        acc
    }

    #[test]
    fn multiply_examples() {
        let fam = z2z3();
        // a = 0:1, b = 1:1, b^2 = 1:2
        let ab = fam.word(&[(0, 1), (1, 1)]).unwrap();
        let b2a = fam.word(&[(1, 2), (0, 1)]).unwrap();
        assert_eq!(fam.multiply(&ab, &b2a).unwrap(), Word::identity());

        let ba = fam.word(&[(1, 1), (0, 1)]).unwrap();
        let ab2a = fam.word(&[(0, 1), (1, 2), (0, 1)]).unwrap();
        assert_eq!(fam.multiply(&ab, &ba).unwrap(), ab2a);

        let w = fam.word(&[(1, 2), (0, 1), (1, 1)]).unwrap();
        assert_eq!(fam.multiply(&w, &Word::identity()).unwrap(), w);
        assert_eq!(fam.multiply(&Word::identity(), &w).unwrap(), w);
    }

    #[test]
    fn inverse_examples() {
        let fam = z2z3();
        let ab = fam.word(&[(0, 1), (1, 1)]).unwrap();
        let b2a = fam.word(&[(1, 2), (0, 1)]).unwrap();
        assert_eq!(fam.inverse(&ab), b2a);
        assert_eq!(fam.inverse(&Word::identity()), Word::identity());

        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for _ in 0..100 {
            let w = random_word(&fam, &mut rng, 8);
            assert_eq!(fam.inverse(&fam.inverse(&w)), w);
            assert_eq!(fam.multiply(&w, &fam.inverse(&w)).unwrap(), Word::identity());
        }
    }

    #[test]
    fn block_length_examples() {
        let fam = z2z3();
        assert_eq!(Word::identity().block_length(), 0);
        let aba = fam.word(&[(0, 1), (1, 1), (0, 1)]).unwrap();
        assert_eq!(aba.block_length(), 3);

        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for _ in 0..300 {
            let h = random_word(&fam, &mut rng, 6);
            let g = random_word(&fam, &mut rng, 6);
            let hg = fam.multiply(&h, &g).unwrap();
            let lh = h.block_length() as i64;
            let lg = g.block_length() as i64;
            let lhg = hg.block_length() as i64;
            assert!((lg - lh).abs() <= lhg && lhg <= lg + lh);
        }
    }

    #[test]
    fn associativity_random_triples() {
        for fam in [z2z3(), z3z4(), zw(3)] {
            let mut rng = ChaCha8Rng::seed_from_u64(13);
            let mut checked = 0;
            while checked < 1000 {
                let x = random_word(&fam, &mut rng, 5);
                let y = random_word(&fam, &mut rng, 5);
                let z = random_word(&fam, &mut rng, 5);
                let lhs = fam.multiply(&x, &y).and_then(|xy| fam.multiply(&xy, &z));
                let rhs = fam.multiply(&y, &z).and_then(|yz| fam.multiply(&x, &yz));
                match (lhs, rhs) {
                    (Ok(a), Ok(b)) => {
                        assert_eq!(a, b);
                        checked += 1;
                    }
                    // Window overflow may hit one association order only;
                    // the group identity is only claimed in-window.
                    _ => continue,
                }
            }
        }
    }

    #[test]
    fn cancellation_profile_cases() {
        let fam = z2z3();
        let a = fam.word(&[(0, 1)]).unwrap();
        let b = fam.word(&[(1, 1)]).unwrap();
        let p = fam.cancellation_profile(&a, &b);
        assert_eq!((p.q, p.merged, p.case), (0, false, MulCase::Disjoint));

        let ab = fam.word(&[(0, 1), (1, 1)]).unwrap();
        let ba = fam.word(&[(1, 1), (0, 1)]).unwrap();
        let p = fam.cancellation_profile(&ab, &ba);
        assert_eq!((p.q, p.merged, p.case), (0, true, MulCase::Merge));

        let b2a = fam.word(&[(1, 2), (0, 1)]).unwrap();
        let p = fam.cancellation_profile(&ab, &b2a);
        assert_eq!((p.q, p.merged, p.case), (2, false, MulCase::Annihilated));

        // degenerate: h = e
        let p = fam.cancellation_profile(&Word::identity(), &ab);
        assert_eq!((p.q, p.merged, p.case), (0, false, MulCase::Disjoint));
    }

    #[test]
    fn profile_length_identity_exhaustive_w4() {
        let fam = z2z3();
        let window = fam.enumerate_window(4);
        for h in &window {
            for g in &window {
                let p = fam.cancellation_profile(h, g);
                let hg = fam.multiply(h, g).unwrap();
                assert_eq!(
                    hg.block_length(),
                    p.product_length(h.block_length(), g.block_length()),
                    "h={h} g={g}"
                );
                if p.merged {
                    assert!(p.q < h.block_length().min(g.block_length()));
                }
                assert!(p.q <= h.block_length().min(g.block_length()));
            }
        }
    }

    #[test]
    fn case_exhaustive_w3_w4() {
        let fam = z2z3();
        let w3 = fam.enumerate_window(3);
        let w4 = fam.enumerate_window(4);
        for h in &w3 {
            for g in &w4 {
                // every pair maps to exactly one case
                let p = fam.cancellation_profile(h, g);
                let n = p.case.number();
                assert!((1..=7).contains(&n));
            }
        }
    }

    /// Brute-force enumeration: reduce every raw letter sequence of length
    /// <= n and collect the distinct results.
    fn naive_window(fam: &FactorFamily, n: usize) -> Vec<Word> {
        let mut all: std::collections::HashSet<Word> = std::collections::HashSet::new();
        let alphabet: Vec<Letter> = (0..fam.len())
            .flat_map(|f| fam.letters_of(f))
            .collect();
        let mut frontier: Vec<Vec<Letter>> = vec![vec![]];
        for _ in 0..=n {
            for seq in &frontier {
                let mut acc = Word::identity();
                let mut ok = true;
                for l in seq {
                    match fam.multiply(&acc, &Word::from_letters_unchecked(vec![*l])) {
                        Ok(w) => acc = w,
                        Err(_) => {
                            ok = false;
                            break;
                        }
                    }
                }
                if ok && acc.block_length() <= n {
                    all.insert(acc);
                }
            }
            frontier = frontier
                .iter()
                .flat_map(|seq| {
                    alphabet.iter().map(move |l| {
                        let mut s = seq.clone();
                        s.push(*l);
                        s
                    })
                })
                .collect();
        }
        let mut v: Vec<Word> = all.into_iter().collect();
        v.sort();
        v
    }

    #[test]
    fn window_enumeration_matches_naive_oracle() {
        let fam = z2z3();
        for n in 0..=6 {
            let fast = fam.enumerate_window(n);
            let slow = naive_window(&fam, n);
            assert_eq!(fast, slow, "n={n}");
            assert_eq!(fast.len() as u128, fam.window_size(n));
        }
        let expected = [1usize, 4, 8, 14, 22, 34, 50];
        for (n, &size) in expected.iter().enumerate() {
            assert_eq!(fam.enumerate_window(n).len(), size);
        }

        let fam = z3z4();
        for n in 0..=4 {
            assert_eq!(fam.enumerate_window(n), naive_window(&fam, n), "z3z4 n={n}");
        }
    }

    #[test]
    fn window_has_no_duplicates_and_is_graded() {
        for fam in [z2z3(), z3z4(), zw(2)] {
            let words = fam.enumerate_window(4);
            let set: std::collections::HashSet<&Word> = words.iter().collect();
            assert_eq!(set.len(), words.len());
            for w in &words {
                assert!(w.block_length() <= 4);
                fam.validate_word(w).unwrap();
            }
            let mut sorted = words.clone();
            sorted.sort();
            assert_eq!(sorted, words);
        }
    }

    #[test]
    fn multiply_products_are_reduced() {
        let mut rng = ChaCha8Rng::seed_from_u64(23);
        for fam in [z2z3(), zw(3)] {
            for _ in 0..500 {
                let h = random_word(&fam, &mut rng, 6);
                let g = random_word(&fam, &mut rng, 6);
                if let Ok(hg) = fam.multiply(&h, &g) {
                    fam.validate_word(&hg).unwrap();
                }
            }
        }
    }

    #[test]
    fn window_overflow_is_reported() {
        let fam = zw(2);
        let h = fam.word(&[(0, 2)]).unwrap();
        let g = fam.word(&[(0, 1)]).unwrap();
        match fam.multiply(&h, &g) {
            Err(Error::WindowOverflow { value: 3, bound: 2, .. }) => {}
            other => panic!("expected overflow, got {other:?}"),
        }
        // cancellation never overflows
        let ginv = fam.word(&[(0, -2)]).unwrap();
        assert_eq!(fam.multiply(&h, &ginv).unwrap(), Word::identity());
    }

    #[test]
    fn word_literals_round_trip() {
        let fam = z2z3();
        let aliases: std::collections::HashMap<String, String> =
            [("a".to_string(), "0:1".to_string()), ("b".to_string(), "1:1".to_string())]
                .into_iter()
                .collect();
        let w = fam.parse_word("a b b", &aliases).unwrap();
        // a * b * b = a b^2
        assert_eq!(w, fam.word(&[(0, 1), (1, 2)]).unwrap());
        assert_eq!(fam.parse_word("e", &aliases).unwrap(), Word::identity());
        assert_eq!(fam.parse_word("", &aliases).unwrap(), Word::identity());
        let printed = fam.format_word(&w);
        assert_eq!(fam.parse_word(&printed, &aliases).unwrap(), w);
        assert!(fam.parse_word("0:7", &aliases).is_err());
        assert!(fam.parse_word("nonsense", &aliases).is_err());
    }

    #[test]
    fn table_factor_rejects_non_groups() {
        // Z3 as a table, with identity 0
        let z3 = FactorSpec::table(3, 0, vec![0, 1, 2, 1, 2, 0, 2, 0, 1], "T3");
        let fam = FactorFamily::new(vec![z3, FactorSpec::cyclic(2, "Z2")]).unwrap();
        let b = fam.word(&[(0, 1)]).unwrap();
        let bb = fam.multiply(&b, &b).unwrap();
        assert_eq!(bb, fam.word(&[(0, 2)]).unwrap());

        // broken associativity / identity
        let bad = FactorSpec::table(3, 0, vec![0, 1, 2, 1, 0, 0, 2, 0, 1], "bad");
        assert!(FactorFamily::new(vec![bad]).is_err());
    }
}
