//! Path and partition probabilities.
//!
//! A path's probability is the product of its events' probabilities. Sums
//! always run in ascending path index, so `f64` results are reproducible
//! bit for bit.

use crate::error::Result;
use crate::partition::PartitionResult;
use crate::probability::ProbabilityTable;
use crate::tree::Path;
use crate::Probability;

pub fn path_probability<T: Probability>(path: &Path, table: &ProbabilityTable<T>) -> Result<T> {
    path.events
        .iter()
        .try_fold(T::one(), |acc, ev| Ok(acc * table.lookup(ev)?.clone()))
}

/// Returns `(p_selected, p_complement)`.
pub fn partition_probability<T: Probability>(
    paths: &[Path],
    result: &PartitionResult,
    table: &ProbabilityTable<T>,
) -> Result<(T, T)> {
    let sum = |indices: &std::collections::BTreeSet<usize>| -> Result<T> {
        indices.iter().try_fold(T::zero(), |acc, &i| {
            let path = paths.get(i).ok_or(crate::Error::IndexOutOfRange {
                index: i,
                count: paths.len(),
            })?;
            Ok(acc + path_probability(path, table)?)
        })
    };
    Ok((sum(&result.selected)?, sum(&result.complement)?))
}

/// Sum over every path, the mass the whole tree carries.
pub fn total_probability<T: Probability>(paths: &[Path], table: &ProbabilityTable<T>) -> Result<T> {
    paths
        .iter()
        .try_fold(T::zero(), |acc, p| Ok(acc + path_probability(p, table)?))
}
