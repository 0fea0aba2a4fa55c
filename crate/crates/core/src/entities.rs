//! Fixed-universe entity sets.
//!
//! Every support in the engine is a subset of the dataset's entities, so a
//! dense bitset over `0..universe` is the one representation used throughout.

use std::fmt;

const WORD: usize = 64;

/// A subset of `0..universe` stored as a dense bitset.
#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct EntitySet {
    universe: usize,
    words: Vec<u64>,
}

impl EntitySet {
    pub fn empty(universe: usize) -> Self {
        EntitySet {
            universe,
            words: vec![0; universe.div_ceil(WORD)],
        }
    }

    pub fn full(universe: usize) -> Self {
        let mut set = Self::empty(universe);
        for w in set.words.iter_mut() {
            *w = u64::MAX;
        }
        set.trim();
        set
    }

    pub fn from_indices<I: IntoIterator<Item = usize>>(universe: usize, indices: I) -> Self {
        let mut set = Self::empty(universe);
        for i in indices {
            set.insert(i);
        }
        set
    }

    pub fn from_bools(flags: &[bool]) -> Self {
        Self::from_indices(
            flags.len(),
            flags.iter().enumerate().filter(|(_, &f)| f).map(|(i, _)| i),
        )
    }

    fn trim(&mut self) {
        let rem = self.universe % WORD;
        if rem != 0 {
            if let Some(last) = self.words.last_mut() {
                *last &= (1u64 << rem) - 1;
            }
        }
    }

    #[inline]
    pub fn universe(&self) -> usize {
        self.universe
    }

    #[inline]
    pub fn insert(&mut self, i: usize) {
        assert!(i < self.universe, "entity {i} outside universe {}", self.universe);
        self.words[i / WORD] |= 1 << (i % WORD);
    }

    #[inline]
    pub fn remove(&mut self, i: usize) {
        if i < self.universe {
            self.words[i / WORD] &= !(1 << (i % WORD));
        }
    }

    #[inline]
    pub fn contains(&self, i: usize) -> bool {
        i < self.universe && self.words[i / WORD] & (1 << (i % WORD)) != 0
    }

    pub fn len(&self) -> usize {
        self.words.iter().map(|w| w.count_ones() as usize).sum()
    }

    pub fn is_empty(&self) -> bool {
        self.words.iter().all(|&w| w == 0)
    }

    pub fn iter(&self) -> impl Iterator<Item = usize> + '_ {
        self.words.iter().enumerate().flat_map(|(wi, &w)| {
            let mut bits = w;
            std::iter::from_fn(move || {
                if bits == 0 {
                    return None;
                }
                let tz = bits.trailing_zeros() as usize;
                bits &= bits - 1;
                Some(wi * WORD + tz)
            })
        })
    }

    fn check(&self, other: &Self) {
        debug_assert_eq!(self.universe, other.universe, "entity universes differ");
    }

    pub fn intersection(&self, other: &Self) -> Self {
        self.check(other);
        EntitySet {
            universe: self.universe,
            words: self.words.iter().zip(&other.words).map(|(a, b)| a & b).collect(),
        }
    }

    pub fn union(&self, other: &Self) -> Self {
        self.check(other);
        EntitySet {
            universe: self.universe,
            words: self.words.iter().zip(&other.words).map(|(a, b)| a | b).collect(),
        }
    }

    pub fn difference(&self, other: &Self) -> Self {
        self.check(other);
        EntitySet {
            universe: self.universe,
            words: self.words.iter().zip(&other.words).map(|(a, b)| a & !b).collect(),
        }
    }

    pub fn complement(&self) -> Self {
        let mut out = EntitySet {
            universe: self.universe,
            words: self.words.iter().map(|w| !w).collect(),
        };
        out.trim();
        out
    }

    pub fn intersect_with(&mut self, other: &Self) {
        self.check(other);
        for (a, b) in self.words.iter_mut().zip(&other.words) {
            *a &= b;
        }
    }

    pub fn union_with(&mut self, other: &Self) {
        self.check(other);
        for (a, b) in self.words.iter_mut().zip(&other.words) {
            *a |= b;
        }
    }

    pub fn intersection_len(&self, other: &Self) -> usize {
        self.check(other);
        self.words
            .iter()
            .zip(&other.words)
            .map(|(a, b)| (a & b).count_ones() as usize)
            .sum()
    }

    pub fn union_len(&self, other: &Self) -> usize {
        self.check(other);
        self.words
            .iter()
            .zip(&other.words)
            .map(|(a, b)| (a | b).count_ones() as usize)
            .sum()
    }

    /// `true` when every member of `self` is also in `other`.
    pub fn is_subset(&self, other: &Self) -> bool {
        self.check(other);
        self.words.iter().zip(&other.words).all(|(a, b)| a & !b == 0)
    }

    /// Jaccard index of two sets; two empty sets score 0.
    pub fn jaccard(&self, other: &Self) -> f64 {
        let union = self.union_len(other);
        if union == 0 {
            0.0
        } else {
            self.intersection_len(other) as f64 / union as f64
        }
    }
}

impl fmt::Debug for EntitySet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_set().entries(self.iter()).finish()
    }
}
