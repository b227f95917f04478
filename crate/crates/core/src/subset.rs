use std::fmt;

use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Error, Result};

/// Widest feature space a single-word subset can index.
pub const MAX_FEATURES: usize = 64;

/// A set of feature indices packed into one machine word; bit `j` stands
/// for the 0-based feature `j`.
///
/// The empty set is representable (it is the `beta = ∅` case of rectangle
/// queries) but every charged sub-cone is nonempty.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Default)]
pub struct FeatureSubset(u64);

impl FeatureSubset {
    pub const EMPTY: Self = Self(0);

    pub fn from_bits(bits: u64) -> Self {
        Self(bits)
    }

    pub fn bits(self) -> u64 {
        self.0
    }

    /// `{0, ..., d-1}`.
    pub fn full(d: usize) -> Self {
        assert!(d <= MAX_FEATURES, "at most {MAX_FEATURES} features");
        if d == MAX_FEATURES {
            Self(u64::MAX)
        } else {
            Self((1u64 << d) - 1)
        }
    }

    pub fn singleton(j: usize) -> Self {
        assert!(j < MAX_FEATURES, "feature index {j} out of range");
        Self(1 << j)
    }

    /// From 0-based indices.
    pub fn from_indices(indices: impl IntoIterator<Item = usize>) -> Result<Self> {
        let mut bits = 0u64;
        for j in indices {
            if j >= MAX_FEATURES {
                return Err(Error::input(format!(
                    "feature index {j} exceeds the {MAX_FEATURES}-feature limit"
                )));
            }
            bits |= 1 << j;
        }
        Ok(Self(bits))
    }

    /// From 1-based indices, as written in files.
    pub fn from_one_based(indices: &[usize]) -> Result<Self> {
        if indices.contains(&0) {
            return Err(Error::input("feature indices are 1-based"));
        }
        Self::from_indices(indices.iter().map(|j| j - 1))
    }

    pub fn insert(&mut self, j: usize) {
        self.0 |= 1 << j;
    }

    pub fn contains(self, j: usize) -> bool {
        j < MAX_FEATURES && self.0 >> j & 1 == 1
    }

    pub fn len(self) -> usize {
        self.0.count_ones() as usize
    }

    pub fn is_empty(self) -> bool {
        self.0 == 0
    }

    /// Complement within `{0, ..., d-1}`.
    pub fn complement(self, d: usize) -> Self {
        Self(!self.0 & Self::full(d).0)
    }

    pub fn union(self, other: Self) -> Self {
        Self(self.0 | other.0)
    }

    /// Highest index + 1, i.e. the smallest `d` this subset fits in.
    pub fn span(self) -> usize {
        (u64::BITS - self.0.leading_zeros()) as usize
    }

    /// 0-based indices in increasing order.
    pub fn indices(self) -> impl Iterator<Item = usize> {
        let mut rest = self.0;
        std::iter::from_fn(move || {
            if rest == 0 {
                None
            } else {
                let j = rest.trailing_zeros() as usize;
                rest &= rest - 1;
                Some(j)
            }
        })
    }

    pub fn to_one_based(self) -> Vec<usize> {
        self.indices().map(|j| j + 1).collect()
    }
}

/// Formats as 1-based indices joined by `|`, e.g. `1|4|7`.
impl fmt::Display for FeatureSubset {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut first = true;
        for j in self.indices() {
            if !first {
                f.write_str("|")?;
            }
            write!(f, "{}", j + 1)?;
            first = false;
        }
        Ok(())
    }
}

impl Serialize for FeatureSubset {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        self.to_one_based().serialize(serializer)
    }
}

impl<'de> Deserialize<'de> for FeatureSubset {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        let indices = Vec::<usize>::deserialize(deserializer)?;
        Self::from_one_based(&indices).map_err(serde::de::Error::custom)
    }
}
