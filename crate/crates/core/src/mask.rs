//! Subsets of `[n] = {1, ..., n}` as fixed-width bit vectors.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// The interval `[n] = {1, ..., n}`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct GroundSet {
    n: u64,
}

impl GroundSet {
    pub fn new(n: u64) -> Result<Self> {
        if n == 0 {
            return Err(Error::InvalidArgument("n must be at least 1".into()));
        }
        Ok(Self { n })
    }

    pub fn n(self) -> u64 {
        self.n
    }

    pub fn empty_subset(self) -> SubsetMask {
        SubsetMask::empty(self.n)
    }

    pub fn full_subset(self) -> SubsetMask {
        SubsetMask::full(self.n)
    }
}

/// A subset of `[n]`. Element `x` lives at bit `x - 1`.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct SubsetMask {
    n: u64,
    words: Vec<u64>,
    count: u64,
}

pub(crate) fn word_count(n: u64) -> usize {
    n.div_ceil(64) as usize
}

impl SubsetMask {
    pub fn empty(n: u64) -> Self {
        Self {
            n,
            words: vec![0; word_count(n)],
            count: 0,
        }
    }

    pub fn full(n: u64) -> Self {
        let mut words = vec![u64::MAX; word_count(n)];
        let tail = n % 64;
        if tail != 0 {
            *words.last_mut().expect("n > 0") = (1u64 << tail) - 1;
        }
        Self { n, words, count: n }
    }

    pub fn from_elements<I: IntoIterator<Item = u64>>(n: u64, elements: I) -> Result<Self> {
        let mut mask = Self::empty(n);
        for x in elements {
            mask.insert(x)?;
        }
        Ok(mask)
    }

    /// Builds the subset whose bit `i` (for `i < n`) is bit `i` of `bits`.
    pub fn from_bits(n: u64, bits: u64) -> Result<Self> {
        if n > 64 || (n < 64 && bits >> n != 0) {
            return Err(Error::InvalidArgument(format!(
                "bit pattern {bits:#x} does not fit n = {n}"
            )));
        }
        let mut words = vec![0; word_count(n)];
        if let Some(w) = words.first_mut() {
            *w = bits;
        }
        Ok(Self {
            n,
            words,
            count: bits.count_ones() as u64,
        })
    }

    pub fn n(&self) -> u64 {
        self.n
    }

    pub fn len(&self) -> u64 {
        self.count
    }

    pub fn is_empty(&self) -> bool {
        self.count == 0
    }

    pub fn words(&self) -> &[u64] {
        &self.words
    }

    pub fn contains(&self, x: u64) -> bool {
        if x == 0 || x > self.n {
            return false;
        }
        let i = x - 1;
        self.words[(i / 64) as usize] >> (i % 64) & 1 == 1
    }

    /// Inserts `x`, returning whether it was newly added.
    pub fn insert(&mut self, x: u64) -> Result<bool> {
        if x == 0 || x > self.n {
            return Err(Error::OutOfRange {
                element: x,
                n: self.n,
            });
        }
        let i = x - 1;
        let word = &mut self.words[(i / 64) as usize];
        let bit = 1u64 << (i % 64);
        let fresh = *word & bit == 0;
        *word |= bit;
        self.count += fresh as u64;
        Ok(fresh)
    }

    pub fn remove(&mut self, x: u64) -> bool {
        if !self.contains(x) {
            return false;
        }
        let i = x - 1;
        self.words[(i / 64) as usize] &= !(1u64 << (i % 64));
        self.count -= 1;
        true
    }

    /// Ascending iterator over the members.
    pub fn iter(&self) -> impl Iterator<Item = u64> + '_ {
        self.words.iter().enumerate().flat_map(|(w, &word)| {
            let base = w as u64 * 64;
            BitIter(word).map(move |b| base + b as u64 + 1)
        })
    }

    pub fn to_vec(&self) -> Vec<u64> {
        self.iter().collect()
    }

    pub fn is_subset_of(&self, other: &SubsetMask) -> bool {
        self.n == other.n
            && self
                .words
                .iter()
                .zip(&other.words)
                .all(|(a, b)| a & !b == 0)
    }

    /// `|A ∩ (A - v)|`: the number of `a ∈ A` with `a + v ∈ A`, for `v >= 1`.
    pub fn shifted_overlap(&self, v: u64) -> u64 {
        let q = (v / 64) as usize;
        let s = (v % 64) as u32;
        let w = self.words.len();
        if q >= w {
            return 0;
        }
        let mut total = 0u64;
        for i in 0..w - q {
            let lo = self.words[i + q] >> s;
            let hi = if s == 0 || i + q + 1 >= w {
                0
            } else {
                self.words[i + q + 1] << (64 - s)
            };
            total += (self.words[i] & (lo | hi)).count_ones() as u64;
        }
        total
    }

    /// Whether some `a ∈ A` has `a + v ∈ A`.
    pub fn has_shifted_overlap(&self, v: u64) -> bool {
        let q = (v / 64) as usize;
        let s = (v % 64) as u32;
        let w = self.words.len();
        if q >= w {
            return false;
        }
        (0..w - q).any(|i| {
            let lo = self.words[i + q] >> s;
            let hi = if s == 0 || i + q + 1 >= w {
                0
            } else {
                self.words[i + q + 1] << (64 - s)
            };
            self.words[i] & (lo | hi) != 0
        })
    }

    /// `A + t`, or `None` if some element would leave `[1, n]`.
    pub fn translate(&self, t: i64) -> Option<SubsetMask> {
        let mut out = SubsetMask::empty(self.n);
        for x in self.iter() {
            let y = x as i64 + t;
            if y < 1 || y as u64 > self.n {
                return None;
            }
            out.insert(y as u64).ok()?;
        }
        Some(out)
    }

    pub(crate) fn check_width(&self, n: u64) -> Result<()> {
        if self.n != n {
            return Err(Error::WidthMismatch { mask: self.n, n });
        }
        Ok(())
    }
}

/// Iterates the set bit positions of one word.
pub(crate) struct BitIter(pub u64);

impl Iterator for BitIter {
    type Item = u32;

    fn next(&mut self) -> Option<u32> {
        if self.0 == 0 {
            return None;
        }
        let b = self.0.trailing_zeros();
        self.0 &= self.0 - 1;
        Some(b)
    }
}

impl Serialize for SubsetMask {
    /// Serializes as the sorted member list.
    fn serialize<S: serde::Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        serializer.collect_seq(self.iter())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn basic_membership() {
        let mut a = SubsetMask::from_elements(70, [1, 64, 65, 70]).unwrap();
        assert_eq!(a.len(), 4);
        assert!(a.contains(64) && a.contains(65) && !a.contains(66));
        assert!(!a.contains(0) && !a.contains(71));
        assert!(!a.insert(64).unwrap());
        assert!(matches!(a.insert(71), Err(Error::OutOfRange { .. })));
        assert!(matches!(a.insert(0), Err(Error::OutOfRange { .. })));
        assert!(a.remove(1));
        assert_eq!(a.to_vec(), vec![64, 65, 70]);
        assert_eq!(a.len(), 3);
    }

    #[test]
    fn full_has_no_stray_bits() {
        for n in [1, 63, 64, 65, 130] {
            let f = SubsetMask::full(n);
            assert_eq!(f.len(), n);
            assert_eq!(f.iter().count() as u64, n);
            assert_eq!(f.iter().last(), Some(n));
        }
    }

    #[test]
    fn from_bits_checks_width() {
        assert_eq!(SubsetMask::from_bits(4, 0b1011).unwrap().to_vec(), vec![1, 2, 4]);
        assert!(SubsetMask::from_bits(3, 0b1000).is_err());
        assert!(SubsetMask::from_bits(65, 1).is_err());
    }

    #[test]
    fn translate_stays_inside() {
        let a = SubsetMask::from_elements(10, [2, 5]).unwrap();
        assert_eq!(a.translate(5).unwrap().to_vec(), vec![7, 10]);
        assert!(a.translate(6).is_none());
        assert!(a.translate(-2).is_none());
    }

    proptest! {
        #[test]
        fn shifted_overlap_matches_membership(
            n in 1u64..300,
            raw in prop::collection::vec(1u64..300, 0..80),
            v in 1u64..320,
        ) {
            let a = SubsetMask::from_elements(n, raw.into_iter().filter(|&x| x <= n)).unwrap();
            let naive = a.iter().filter(|&x| a.contains(x + v)).count() as u64;
            prop_assert_eq!(a.shifted_overlap(v), naive);
            prop_assert_eq!(a.has_shifted_overlap(v), naive > 0);
            prop_assert_eq!(a.iter().count() as u64, a.len());
        }
    }
}
