//! Fixed-universe bitsets keyed by dense fact ids.
//!
//! The representation is canonical: trailing zero words are trimmed, so two
//! sets with the same members compare and hash equal regardless of how they
//! were built.

use std::fmt;

use crate::strips::FactId;

#[derive(Clone, Default, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct FactSet {
    words: Vec<u64>,
}

impl FactSet {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn from_ids<I: IntoIterator<Item = FactId>>(ids: I) -> Self {
        let mut set = Self::new();
        for id in ids {
            set.insert(id);
        }
        set
    }

    #[inline]
    pub fn contains(&self, id: FactId) -> bool {
        let (w, b) = split(id);
        self.words.get(w).is_some_and(|word| word & (1 << b) != 0)
    }

    /// Returns true when the fact was not yet present.
    pub fn insert(&mut self, id: FactId) -> bool {
        let (w, b) = split(id);
        if w >= self.words.len() {
            self.words.resize(w + 1, 0);
        }
        let fresh = self.words[w] & (1 << b) == 0;
        self.words[w] |= 1 << b;
        fresh
    }

    pub fn remove(&mut self, id: FactId) -> bool {
        let (w, b) = split(id);
        let Some(word) = self.words.get_mut(w) else {
            return false;
        };
        let present = *word & (1 << b) != 0;
        *word &= !(1 << b);
        self.trim();
        present
    }

    pub fn len(&self) -> usize {
        self.words.iter().map(|w| w.count_ones() as usize).sum()
    }

    pub fn is_empty(&self) -> bool {
        self.words.is_empty()
    }

    #[inline]
    pub fn is_subset(&self, other: &FactSet) -> bool {
        if self.words.len() > other.words.len() {
            return false;
        }
        self.words
            .iter()
            .zip(&other.words)
            .all(|(a, b)| a & !b == 0)
    }

    pub fn is_disjoint(&self, other: &FactSet) -> bool {
        self.words
            .iter()
            .zip(&other.words)
            .all(|(a, b)| a & b == 0)
    }

    pub fn intersects(&self, other: &FactSet) -> bool {
        !self.is_disjoint(other)
    }

    pub fn union_with(&mut self, other: &FactSet) {
        if other.words.len() > self.words.len() {
            self.words.resize(other.words.len(), 0);
        }
        for (a, b) in self.words.iter_mut().zip(&other.words) {
            *a |= b;
        }
    }

    pub fn difference_with(&mut self, other: &FactSet) {
        for (a, b) in self.words.iter_mut().zip(&other.words) {
            *a &= !b;
        }
        self.trim();
    }

    pub fn intersect_with(&mut self, other: &FactSet) {
        self.words.truncate(other.words.len());
        for (a, b) in self.words.iter_mut().zip(&other.words) {
            *a &= b;
        }
        self.trim();
    }

    pub fn union(&self, other: &FactSet) -> FactSet {
        let mut out = self.clone();
        out.union_with(other);
        out
    }

    pub fn difference(&self, other: &FactSet) -> FactSet {
        let mut out = self.clone();
        out.difference_with(other);
        out
    }

    pub fn intersection(&self, other: &FactSet) -> FactSet {
        let mut out = self.clone();
        out.intersect_with(other);
        out
    }

    /// Members in ascending id order.
    pub fn iter(&self) -> impl Iterator<Item = FactId> + '_ {
        self.words.iter().enumerate().flat_map(|(w, &word)| {
            let mut rest = word;
            std::iter::from_fn(move || {
                if rest == 0 {
                    return None;
                }
                let b = rest.trailing_zeros();
                rest &= rest - 1;
                Some(FactId((w as u32) * 64 + b))
            })
        })
    }

    fn trim(&mut self) {
        while self.words.last() == Some(&0) {
            self.words.pop();
        }
    }
}

#[inline]
fn split(id: FactId) -> (usize, u32) {
    ((id.0 / 64) as usize, id.0 % 64)
}

impl FromIterator<FactId> for FactSet {
    fn from_iter<I: IntoIterator<Item = FactId>>(iter: I) -> Self {
        Self::from_ids(iter)
    }
}

impl fmt::Debug for FactSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_set().entries(self.iter().map(|id| id.0)).finish()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use std::collections::BTreeSet;

    fn ids(v: &[u32]) -> FactSet {
        v.iter().map(|&i| FactId(i)).collect()
    }

    #[test]
    fn canonical_after_removal() {
        let mut a = ids(&[3, 130]);
        a.remove(FactId(130));
        assert_eq!(a, ids(&[3]));
        assert!(!a.contains(FactId(500)));
    }

    proptest! {
        #[test]
        fn matches_btreeset(a in proptest::collection::vec(0u32..200, 0..40),
                            b in proptest::collection::vec(0u32..200, 0..40)) {
            let (sa, sb) = (ids(&a), ids(&b));
            let (ra, rb): (BTreeSet<u32>, BTreeSet<u32>) =
                (a.iter().copied().collect(), b.iter().copied().collect());
            let u: Vec<u32> = sa.union(&sb).iter().map(|f| f.0).collect();
            prop_assert_eq!(u, ra.union(&rb).copied().collect::<Vec<_>>());
            let d: Vec<u32> = sa.difference(&sb).iter().map(|f| f.0).collect();
            prop_assert_eq!(d, ra.difference(&rb).copied().collect::<Vec<_>>());
            let i: Vec<u32> = sa.intersection(&sb).iter().map(|f| f.0).collect();
            prop_assert_eq!(i, ra.intersection(&rb).copied().collect::<Vec<_>>());
            prop_assert_eq!(sa.is_subset(&sb), ra.is_subset(&rb));
            prop_assert_eq!(sa.is_disjoint(&sb), ra.is_disjoint(&rb));
            prop_assert_eq!(sa.len(), ra.len());
        }
    }
}
