//! Finite multisets over an interned symbol domain.
//!
//! A multiset is a sparse map from element ids to positive multiplicities.
//! Values are immutable once built; every constructor returns a fresh value,
//! so sharing across threads is safe.

use std::collections::BTreeMap;
use std::fmt;

use thiserror::Error;

/// Dense index assigned by a codebook's interner. Interning the same raw
/// symbol twice yields the same id; distinct symbols get distinct ids.
#[derive(Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Debug)]
pub struct ElementId(u32);

impl ElementId {
    pub fn new(index: u32) -> Self {
        ElementId(index)
    }

    pub fn index(self) -> usize {
        self.0 as usize
    }
}

impl fmt::Display for ElementId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

/// Per-entry multiplicity bound. Keeps exponentiation cost predictable;
/// exceeding it is a hard error, never a silent wrap.
pub const DEFAULT_MULTIPLICITY_CAP: u64 = u32::MAX as u64;

#[derive(Error, Debug, Clone, PartialEq, Eq)]
pub enum MultisetError {
    #[error("multiplicity must be at least 1")]
    InvalidMultiplicity,
    #[error("multiplicity {value} exceeds cap {cap}")]
    MultiplicityOverflow { value: u64, cap: u64 },
}

/// A finite multiset: underlying set plus multiplicity function.
///
/// Entries with multiplicity zero are never stored, so structural equality
/// coincides with multiset equality. The empty multiset is valid (size 0)
/// and is the identity for [`Multiset::union`].
#[derive(Clone, PartialEq, Eq, Hash, Default)]
pub struct Multiset {
    entries: BTreeMap<ElementId, u64>,
}

impl Multiset {
    pub fn empty() -> Self {
        Multiset::default()
    }

    /// Builds from `(id, multiplicity)` pairs, summing duplicate ids.
    pub fn from_entries<I>(entries: I) -> Result<Self, MultisetError>
    where
        I: IntoIterator<Item = (ElementId, u64)>,
    {
        let mut ms = Multiset::empty();
        for (id, k) in entries {
            ms = ms.insert(id, k)?;
        }
        Ok(ms)
    }

    /// Returns a new multiset with `k` more copies of `x`.
    pub fn insert(&self, x: ElementId, k: u64) -> Result<Self, MultisetError> {
        self.insert_capped(x, k, DEFAULT_MULTIPLICITY_CAP)
    }

    /// As [`Multiset::insert`], with an explicit per-entry multiplicity cap.
    pub fn insert_capped(&self, x: ElementId, k: u64, cap: u64) -> Result<Self, MultisetError> {
        if k == 0 {
            return Err(MultisetError::InvalidMultiplicity);
        }
        let mut entries = self.entries.clone();
        let slot = entries.entry(x).or_insert(0);
        let total = slot
            .checked_add(k)
            .ok_or(MultisetError::MultiplicityOverflow { value: u64::MAX, cap })?;
        if total > cap {
            return Err(MultisetError::MultiplicityOverflow { value: total, cap });
        }
        *slot = total;
        Ok(Multiset { entries })
    }

    /// Multiset sum: pointwise addition of multiplicities.
    ///
    /// Never fails; sums of capped entries stay far below `u64::MAX` in any
    /// realistic chain of unions.
    pub fn union(&self, other: &Multiset) -> Multiset {
        let mut entries = self.entries.clone();
        for (&id, &k) in &other.entries {
            let slot = entries.entry(id).or_insert(0);
            *slot = slot.checked_add(k).expect("multiplicity overflow in union");
        }
        Multiset { entries }
    }

    /// Total size: sum of all multiplicities.
    pub fn size(&self) -> u64 {
        self.entries.values().sum()
    }

    pub fn multiplicity(&self, x: ElementId) -> u64 {
        self.entries.get(&x).copied().unwrap_or(0)
    }

    pub fn contains(&self, x: ElementId) -> bool {
        self.entries.contains_key(&x)
    }

    /// Number of distinct elements (size of the underlying set).
    pub fn distinct_count(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// Entries in increasing id order.
    pub fn iter(&self) -> impl Iterator<Item = (ElementId, u64)> + '_ {
        self.entries.iter().map(|(&id, &k)| (id, k))
    }

    /// Internal constructor for callers that have already validated entries.
    pub(crate) fn from_raw(entries: BTreeMap<ElementId, u64>) -> Multiset {
        debug_assert!(entries.values().all(|&k| k >= 1));
        Multiset { entries }
    }
}

impl fmt::Debug for Multiset {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{{")?;
        for (i, (id, k)) in self.iter().enumerate() {
            if i > 0 {
                write!(f, ", ")?;
            }
            write!(f, "{id}:{k}")?;
        }
        write!(f, "}}")
    }
}

/// Yields every multiset over the first `alphabet_size` element ids with
/// size at most `max_size`, each exactly once. The count follows the
/// stars-and-bars identity sum over t of C(alphabet_size + t - 1, t).
pub fn enumerate_multisets(alphabet_size: usize, max_size: u64) -> Vec<Multiset> {
    let mut out = Vec::new();
    let mut current: Vec<(ElementId, u64)> = Vec::new();
    fn rec(
        next_id: usize,
        alphabet: usize,
        remaining: u64,
        current: &mut Vec<(ElementId, u64)>,
        out: &mut Vec<Multiset>,
    ) {
        if next_id == alphabet {
            out.push(Multiset::from_raw(current.iter().copied().collect()));
            return;
        }
        for k in 0..=remaining {
            if k > 0 {
                current.push((ElementId::new(next_id as u32), k));
            }
            rec(next_id + 1, alphabet, remaining - k, current, out);
            if k > 0 {
                current.pop();
            }
        }
    }
    rec(0, alphabet_size, max_size, &mut current, &mut out);
    out
}
