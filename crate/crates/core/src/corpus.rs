use alloc::format;
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::perm::Permutation;

/// An `L × N` matrix over `ℤ/qℤ`; column `n` is message `n`.
///
/// Stored column-major since every solver works message by message.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ShuffledCorpus {
    q: u64,
    rows: usize,
    cols: usize,
    data: Vec<u32>,
}

impl ShuffledCorpus {
    pub fn new(q: u64, rows: usize, cols: usize, data: Vec<u32>) -> Result<Self> {
        if q < 2 || q > 1 << 32 {
            return Err(Error::InfeasibleParameters(format!("alphabet size {} outside 2..=2^32", q)));
        }
        if data.len() != rows * cols {
            return Err(Error::SizeMismatch { expected: rows * cols, found: data.len() });
        }
        if let Some(&bad) = data.iter().find(|&&v| u64::from(v) >= q) {
            return Err(Error::Domain(format!("symbol {} not below q = {}", bad, q)));
        }
        Ok(ShuffledCorpus { q, rows, cols, data })
    }

    pub fn from_columns(q: u64, columns: &[Vec<u32>]) -> Result<Self> {
        let rows = columns.first().map_or(0, Vec::len);
        let mut data = Vec::with_capacity(rows * columns.len());
        for c in columns {
            if c.len() != rows {
                return Err(Error::SizeMismatch { expected: rows, found: c.len() });
            }
            data.extend_from_slice(c);
        }
        Self::new(q, rows, columns.len(), data)
    }

    pub(crate) fn from_raw(q: u64, rows: usize, cols: usize, data: Vec<u32>) -> Self {
        debug_assert_eq!(data.len(), rows * cols);
        ShuffledCorpus { q, rows, cols, data }
    }

    pub fn q(&self) -> u64 {
        self.q
    }

    /// Record length `L`.
    pub fn rows(&self) -> usize {
        self.rows
    }

    /// Message count `N`.
    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn data(&self) -> &[u32] {
        &self.data
    }

    #[inline]
    pub fn column(&self, n: usize) -> &[u32] {
        &self.data[n * self.rows..(n + 1) * self.rows]
    }

    pub fn columns(&self) -> impl Iterator<Item = &[u32]> + '_ {
        (0..self.cols).map(move |n| self.column(n))
    }

    #[inline]
    pub fn get(&self, row: usize, col: usize) -> u32 {
        self.data[col * self.rows + row]
    }

    pub fn row(&self, row: usize) -> Vec<u32> {
        (0..self.cols).map(|n| self.get(row, n)).collect()
    }

    /// The corpus restricted to rows `offset..L`.
    pub fn suffix(&self, offset: usize) -> ShuffledCorpus {
        let offset = offset.min(self.rows);
        let rows = self.rows - offset;
        let mut data = Vec::with_capacity(rows * self.cols);
        for c in self.columns() {
            data.extend_from_slice(&c[offset..]);
        }
        ShuffledCorpus::from_raw(self.q, rows, self.cols, data)
    }
}

/// Permutes every column: column `n` of the output is `apply(perms[n], column n)`.
pub fn apply_unshuffle(corpus: &ShuffledCorpus, perms: &[Permutation]) -> Result<ShuffledCorpus> {
    if perms.len() != corpus.cols() {
        return Err(Error::SizeMismatch { expected: corpus.cols(), found: perms.len() });
    }
    let mut data = Vec::with_capacity(corpus.data.len());
    for (col, perm) in corpus.columns().zip(perms) {
        data.extend(perm.apply(col)?);
    }
    Ok(ShuffledCorpus::from_raw(corpus.q, corpus.rows, corpus.cols, data))
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;

    #[test]
    fn validates_symbols_and_shape() {
        assert!(ShuffledCorpus::new(3, 2, 2, vec![0, 1, 2, 3]).is_err());
        assert!(ShuffledCorpus::new(3, 2, 2, vec![0, 1, 2]).is_err());
        assert!(ShuffledCorpus::new(1, 1, 1, vec![0]).is_err());
        assert!(ShuffledCorpus::from_columns(5, &[vec![1, 2], vec![3]]).is_err());
    }

    #[test]
    fn column_major_access() {
        let c = ShuffledCorpus::from_columns(10, &[vec![1, 2, 3], vec![4, 5, 6]]).unwrap();
        assert_eq!(c.rows(), 3);
        assert_eq!(c.cols(), 2);
        assert_eq!(c.get(2, 1), 6);
        assert_eq!(c.row(0), vec![1, 4]);
        assert_eq!(c.suffix(1).column(1), &[5, 6]);
        assert_eq!(c.suffix(5).rows(), 0);
    }

    #[test]
    fn unshuffle_identity_and_inverse() {
        let c = ShuffledCorpus::from_columns(10, &[vec![1, 2, 3], vec![4, 5, 6]]).unwrap();
        let ids = vec![Permutation::identity(3); 2];
        assert_eq!(apply_unshuffle(&c, &ids).unwrap(), c);

        let perms = vec![Permutation::cyclic_shift(3, 1), Permutation::from_one_line(&[3, 1, 2]).unwrap()];
        let moved = apply_unshuffle(&c, &perms).unwrap();
        assert_eq!(moved.column(0), &[2, 3, 1]);
        let back: Vec<_> = perms.iter().map(Permutation::invert).collect();
        assert_eq!(apply_unshuffle(&moved, &back).unwrap(), c);
        assert!(apply_unshuffle(&c, &ids[..1]).is_err());
    }
}
