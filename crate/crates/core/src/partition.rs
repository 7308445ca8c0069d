//! Selecting a subset of paths: by explicit index or by event containment.

use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{StateLabel, SystemModel};
use crate::tree::Path;

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum PartitionQuery {
    Indices(BTreeSet<usize>),
    /// Paths holding every listed event.
    ContainsAll(Vec<StateLabel>),
    /// Paths holding at least one listed event.
    ContainsAny(Vec<StateLabel>),
}

impl PartitionQuery {
    pub fn indices(indices: impl IntoIterator<Item = usize>) -> Self {
        Self::Indices(indices.into_iter().collect())
    }

    pub fn all(count: usize) -> Self {
        Self::Indices((0..count).collect())
    }

    /// Checks that every label names a declared state.
    pub fn validate(&self, model: &SystemModel) -> Result<()> {
        match self {
            Self::Indices(_) => Ok(()),
            Self::ContainsAll(labels) | Self::ContainsAny(labels) => {
                labels.iter().try_for_each(|l| model.resolve(l).map(|_| ()))
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct PartitionResult {
    pub selected: BTreeSet<usize>,
    pub complement: BTreeSet<usize>,
}

/// Splits `paths` into the selected set and its complement.
pub fn partition(paths: &[Path], query: &PartitionQuery) -> Result<PartitionResult> {
    let count = paths.len();
    let selected: BTreeSet<usize> = match query {
        PartitionQuery::Indices(indices) => {
            if let Some(&bad) = indices.iter().find(|&&i| i >= count) {
                return Err(Error::IndexOutOfRange { index: bad, count });
            }
            indices.clone()
        }
        PartitionQuery::ContainsAll(labels) => paths
            .iter()
            .filter(|p| labels.iter().all(|l| p.contains(l)))
            .map(|p| p.index)
            .collect(),
        PartitionQuery::ContainsAny(labels) => paths
            .iter()
            .filter(|p| labels.iter().any(|l| p.contains(l)))
            .map(|p| p.index)
            .collect(),
    };
    let complement = (0..count).filter(|i| !selected.contains(i)).collect();
    Ok(PartitionResult {
        selected,
        complement,
    })
}

/// Parses index lists such as `2, 3, 5-10`.
pub fn parse_index_ranges(text: &str) -> Result<BTreeSet<usize>> {
    let mut out = BTreeSet::new();
    let bad = |part: &str| Error::Domain(format!("bad index or range `{part}`"));
    for part in text.split(',').map(str::trim).filter(|p| !p.is_empty()) {
        match part.split_once('-') {
            Some((lo, hi)) => {
                let lo: usize = lo.trim().parse().map_err(|_| bad(part))?;
                let hi: usize = hi.trim().parse().map_err(|_| bad(part))?;
                if lo > hi {
                    return Err(bad(part));
                }
                out.extend(lo..=hi);
            }
            None => {
                out.insert(part.parse().map_err(|_| bad(part))?);
            }
        }
    }
    Ok(out)
}
