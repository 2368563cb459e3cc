//! Partitions of the message index set induced by single rows.

use alloc::collections::BTreeMap;
use alloc::format;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use crate::corpus::ShuffledCorpus;
use crate::error::{Error, Result};
use crate::perm::BlockStructure;

/// Columns grouped by their value at one row.
///
/// Parts are ordered by their smallest column; columns inside a part ascend.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RowPartition {
    pub parts: Vec<Vec<usize>>,
    pub values: Vec<u32>,
}

impl RowPartition {
    pub fn len(&self) -> usize {
        self.parts.len()
    }

    pub fn is_empty(&self) -> bool {
        self.parts.is_empty()
    }

    /// Canonical part label per column: `labels[n]` is the index of the part holding `n`.
    pub fn labels(&self, columns: usize) -> Vec<usize> {
        let mut labels = alloc::vec![0; columns];
        for (i, part) in self.parts.iter().enumerate() {
            for &n in part {
                labels[n] = i;
            }
        }
        labels
    }
}

/// Partition sizes `P(1), .., P(L)`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PartitionProfile {
    pub sizes: Vec<usize>,
}

impl PartitionProfile {
    pub fn max(&self) -> usize {
        self.sizes.iter().copied().max().unwrap_or(0)
    }

    /// `P(ℓ)` with 1-based `ℓ` and the convention `P(0) = 0`.
    pub fn at(&self, ell: usize) -> usize {
        if ell == 0 {
            0
        } else {
            self.sizes[ell - 1]
        }
    }
}

fn partition_of(values: impl Iterator<Item = u32>) -> RowPartition {
    let mut index: BTreeMap<u32, usize> = BTreeMap::new();
    let mut parts: Vec<Vec<usize>> = Vec::new();
    let mut labels = Vec::new();
    for (n, v) in values.enumerate() {
        let next = parts.len();
        let part = *index.entry(v).or_insert(next);
        if part == next {
            parts.push(Vec::new());
            labels.push(v);
        }
        parts[part].push(n);
    }
    RowPartition { parts, values: labels }
}

/// Partition of the columns by value at the 1-based `row`.
pub fn row_partition(corpus: &ShuffledCorpus, row: usize) -> Result<RowPartition> {
    if row == 0 || row > corpus.rows() {
        return Err(Error::RowOutOfRange { row, rows: corpus.rows() });
    }
    Ok(partition_of((0..corpus.cols()).map(|n| corpus.get(row - 1, n))))
}

/// Number of distinct values in a 0-based row.
pub(crate) fn row_distinct(corpus: &ShuffledCorpus, row: usize) -> usize {
    let mut vals: Vec<u32> = (0..corpus.cols()).map(|n| corpus.get(row, n)).collect();
    vals.sort_unstable();
    vals.dedup();
    vals.len()
}

pub fn partition_profile(corpus: &ShuffledCorpus) -> PartitionProfile {
    PartitionProfile { sizes: (0..corpus.rows()).map(|r| row_distinct(corpus, r)).collect() }
}

/// Every row whose partition has exactly two parts, as `(1-based row, partition)`.
pub fn two_valued_rows(corpus: &ShuffledCorpus) -> Vec<(usize, RowPartition)> {
    (0..corpus.rows())
        .filter_map(|r| {
            let p = partition_of((0..corpus.cols()).map(|n| corpus.get(r, n)));
            (p.len() == 2).then_some((r + 1, p))
        })
        .collect()
}

/// Largest `M` for which all `2^M` subset sums are enumerated.
pub const MAX_SUBSET_SUM_BLOCKS: usize = 25;

/// Whether all `2^M` subset sums of the block lengths differ, and the sorted
/// set of sums.
pub fn distinct_subset_sums(blocks: &BlockStructure) -> Result<(bool, Vec<usize>)> {
    let m = blocks.count();
    if m > MAX_SUBSET_SUM_BLOCKS {
        return Err(Error::TooLarge(format!("2^{} subset sums", m)));
    }
    let mut sums = alloc::vec![0usize; 1 << m];
    for (i, &len) in blocks.lengths().iter().enumerate() {
        let half = 1 << i;
        for s in 0..half {
            sums[half + s] = sums[s] + len;
        }
    }
    sums.sort_unstable();
    let all = sums.len();
    sums.dedup();
    Ok((sums.len() == all, sums))
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;

    fn corpus(rows: &[&[u32]], q: u64) -> ShuffledCorpus {
        let cols = rows[0].len();
        let columns: Vec<Vec<u32>> = (0..cols).map(|n| rows.iter().map(|r| r[n]).collect()).collect();
        ShuffledCorpus::from_columns(q, &columns).unwrap()
    }

    #[test]
    fn constant_row_is_one_part() {
        let c = corpus(&[&[2, 2, 2, 2]], 3);
        let p = row_partition(&c, 1).unwrap();
        assert_eq!(p.parts, vec![vec![0, 1, 2, 3]]);
        assert_eq!(p.values, vec![2]);
    }

    #[test]
    fn parts_ordered_by_first_column() {
        let c = corpus(&[&[0, 1, 0, 2]], 3);
        let p = row_partition(&c, 1).unwrap();
        assert_eq!(p.parts, vec![vec![0, 2], vec![1], vec![3]]);
        assert_eq!(p.values, vec![0, 1, 2]);
        assert_eq!(p.labels(4), vec![0, 1, 0, 2]);
    }

    #[test]
    fn row_bounds_checked() {
        let c = corpus(&[&[0, 1]], 3);
        assert!(matches!(row_partition(&c, 0), Err(Error::RowOutOfRange { .. })));
        assert!(matches!(row_partition(&c, 2), Err(Error::RowOutOfRange { .. })));
    }

    #[test]
    fn two_valued_rows_hand_corpus() {
        let c = corpus(&[&[0, 0, 1, 1], &[0, 1, 2, 2]], 3);
        let rows = two_valued_rows(&c);
        assert_eq!(rows.len(), 1);
        assert_eq!(rows[0].0, 1);
        assert_eq!(rows[0].1.parts, vec![vec![0, 1], vec![2, 3]]);
        assert!(two_valued_rows(&corpus(&[&[1, 1, 1], &[0, 0, 0]], 3)).is_empty());
    }

    #[test]
    fn profile_sizes() {
        let c = corpus(&[&[0, 0, 1, 1], &[0, 1, 2, 2], &[4, 4, 4, 4]], 5);
        let prof = partition_profile(&c);
        assert_eq!(prof.sizes, vec![2, 3, 1]);
        assert_eq!(prof.max(), 3);
        assert_eq!(prof.at(0), 0);
        assert_eq!(prof.at(2), 3);
    }

    #[test]
    fn subset_sums() {
        let (distinct, sums) = distinct_subset_sums(&BlockStructure::new(vec![3, 5, 6, 7]).unwrap()).unwrap();
        assert!(distinct);
        assert_eq!(sums, vec![0, 3, 5, 6, 7, 8, 9, 10, 11, 12, 13, 14, 15, 16, 18, 21]);

        let (distinct, sums) = distinct_subset_sums(&BlockStructure::new(vec![1, 1]).unwrap()).unwrap();
        assert!(!distinct);
        assert_eq!(sums, vec![0, 1, 2]);

        let (distinct, sums) = distinct_subset_sums(&BlockStructure::new(vec![1, 2, 4]).unwrap()).unwrap();
        assert!(distinct);
        assert_eq!(sums, (0..8).collect::<Vec<_>>());

        let big = BlockStructure::new(vec![1; 26]).unwrap();
        assert!(matches!(distinct_subset_sums(&big), Err(Error::TooLarge(_))));
    }
}
