//! Two-block unshuffling: find the shuffled columns from the dominant
//! two-valued row partition, read off the conserved rows on each side, and
//! recover the block boundary by cyclic alignment of the two partial templates.

use alloc::format;
use alloc::vec::Vec;

use serde::Serialize;

use crate::corpus::{apply_unshuffle, ShuffledCorpus};
use crate::error::{Error, Result};
use crate::partition::two_valued_rows;
use crate::perm::Permutation;

/// A tuple with undefined entries. `None` never matches anything, itself included.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PartialTuple {
    pub values: Vec<Option<u32>>,
}

impl PartialTuple {
    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    /// Match semantics for alignment: defined and equal.
    #[inline]
    pub fn matches(a: Option<u32>, b: Option<u32>) -> bool {
        matches!((a, b), (Some(x), Some(y)) if x == y)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct TwoUnshuffleResult {
    /// Estimated shuffled columns (0-based, ascending).
    pub n_hat: Vec<usize>,
    /// Estimated length of the first block, in `0..L`.
    pub l1_hat: usize,
    /// `L - l1_hat`: the shift that applies if the other side is called shuffled.
    pub l2_hat: usize,
    #[serde(skip)]
    pub pi_hat: Permutation,
    /// Rows constant over the unshuffled side (0-based).
    pub l0_set: Vec<usize>,
    /// Rows constant over the shuffled side (0-based).
    pub l1_set: Vec<usize>,
    #[serde(skip)]
    pub aligned: ShuffledCorpus,
    pub score: usize,
}

impl TwoUnshuffleResult {
    /// Estimated noise loci in the frame of the unshuffled columns.
    pub fn noise_loci_hat(&self, rows: usize) -> Vec<usize> {
        (0..rows).filter(|r| self.l0_set.binary_search(r).is_err()).collect()
    }
}

/// Most frequent two-part row partition, returned as its smaller side.
///
/// Ties in frequency go to the partition seen first; if both sides are the
/// same size, the side without column 0 is returned.
pub fn estimate_n(corpus: &ShuffledCorpus) -> Result<Vec<usize>> {
    if corpus.cols() < 2 {
        return Err(Error::NotIdentifiable(format!("{} columns", corpus.cols())));
    }
    // (side without column 0, count), in order of first occurrence
    let mut seen: Vec<(Vec<usize>, usize)> = Vec::new();
    for (_, part) in two_valued_rows(corpus) {
        // parts are ordered by first column, so parts[1] never holds column 0
        let side = &part.parts[1];
        match seen.iter_mut().find(|(s, _)| s == side) {
            Some(entry) => entry.1 += 1,
            None => seen.push((side.clone(), 1)),
        }
    }
    let mut best: Option<&(Vec<usize>, usize)> = None;
    for entry in &seen {
        if best.is_none_or(|b| entry.1 > b.1) {
            best = Some(entry);
        }
    }
    let Some((side, _)) = best else {
        return Err(Error::NotIdentifiable("no two-valued rows".into()));
    };
    let n = corpus.cols();
    if side.len() * 2 > n {
        Ok(complement(side, n))
    } else {
        Ok(side.clone())
    }
}

fn complement(set: &[usize], n: usize) -> Vec<usize> {
    let mut mask = alloc::vec![false; n];
    for &i in set {
        mask[i] = true;
    }
    (0..n).filter(|&i| !mask[i]).collect()
}

fn split_columns(cols: usize, n_hat: &[usize]) -> (Vec<usize>, Vec<usize>) {
    (complement(n_hat, cols), n_hat.to_vec())
}

/// Rows constant on the unshuffled side and on the shuffled side.
pub fn estimate_l_sets(corpus: &ShuffledCorpus, n_hat: &[usize]) -> (Vec<usize>, Vec<usize>) {
    let (outside, inside) = split_columns(corpus.cols(), n_hat);
    let constant_on = |cols: &[usize]| -> Vec<usize> {
        (0..corpus.rows())
            .filter(|&r| match cols.split_first() {
                Some((&first, rest)) => rest.iter().all(|&n| corpus.get(r, n) == corpus.get(r, first)),
                None => false,
            })
            .collect()
    };
    (constant_on(&outside), constant_on(&inside))
}

/// The conserved value of each side where it is defined.
pub fn partial_templates(
    corpus: &ShuffledCorpus,
    n_hat: &[usize],
    l_sets: &(Vec<usize>, Vec<usize>),
) -> (PartialTuple, PartialTuple) {
    let (outside, inside) = split_columns(corpus.cols(), n_hat);
    let build = |cols: &[usize], rows: &[usize]| {
        let mut values = alloc::vec![None; corpus.rows()];
        if let Some(&first) = cols.first() {
            for &r in rows {
                values[r] = Some(corpus.get(r, first));
            }
        }
        PartialTuple { values }
    };
    (build(&outside, &l_sets.0), build(&inside, &l_sets.1))
}

/// Shift `s` maximizing `|{ℓ : a0[(ℓ + s) mod L] = a1[ℓ]}|`; smallest `s` on ties.
pub fn align_cyclic(a0: &PartialTuple, a1: &PartialTuple) -> Result<(usize, usize)> {
    if a0.len() != a1.len() {
        return Err(Error::SizeMismatch { expected: a0.len(), found: a1.len() });
    }
    let l = a0.len();
    let mut best = (0, 0);
    for shift in 0..l {
        let score = (0..l)
            .filter(|&ell| PartialTuple::matches(a0.values[(ell + shift) % l], a1.values[ell]))
            .count();
        if score > best.1 {
            best = (shift, score);
        }
    }
    Ok(best)
}

pub fn unshuffle2(corpus: &ShuffledCorpus) -> Result<TwoUnshuffleResult> {
    let n_hat = estimate_n(corpus)?;
    let l_sets = estimate_l_sets(corpus, &n_hat);
    let (a0, a1) = partial_templates(corpus, &n_hat, &l_sets);
    let (l1_hat, score) = align_cyclic(&a0, &a1)?;
    let l = corpus.rows();
    let pi_hat = Permutation::cyclic_shift(l, l1_hat);
    let aligned = unshift(corpus, &n_hat, &pi_hat)?;
    Ok(TwoUnshuffleResult {
        n_hat,
        l1_hat,
        l2_hat: if l1_hat == 0 { 0 } else { l - l1_hat },
        pi_hat,
        l0_set: l_sets.0,
        l1_set: l_sets.1,
        aligned,
        score,
    })
}

/// Columns in `n_hat` permuted by `pi⁻¹`, the rest left alone.
pub fn unshift(corpus: &ShuffledCorpus, n_hat: &[usize], pi: &Permutation) -> Result<ShuffledCorpus> {
    let inv = pi.invert();
    let id = Permutation::identity(corpus.rows());
    let mut perms = alloc::vec![id; corpus.cols()];
    for &n in n_hat {
        perms[n] = inv.clone();
    }
    apply_unshuffle(corpus, &perms)
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;

    fn tuple(v: &[Option<u32>]) -> PartialTuple {
        PartialTuple { values: v.to_vec() }
    }

    #[test]
    fn undefined_never_matches() {
        assert!(!PartialTuple::matches(None, None));
        assert!(!PartialTuple::matches(Some(1), None));
        assert!(PartialTuple::matches(Some(1), Some(1)));
    }

    #[test]
    fn aligns_known_shift() {
        let a0: Vec<Option<u32>> = [4, 1, 7, 7, 2, 9, 0, 3].iter().map(|&v| Some(v)).collect();
        let pi = Permutation::cyclic_shift(8, 3);
        let a1 = pi.apply(&a0).unwrap();
        let (shift, score) = align_cyclic(&tuple(&a0), &tuple(&a1)).unwrap();
        assert_eq!((shift, score), (3, 8));
    }

    #[test]
    fn all_undefined_scores_zero() {
        let a = tuple(&[None; 5]);
        assert_eq!(align_cyclic(&a, &a).unwrap(), (0, 0));
        assert!(align_cyclic(&a, &tuple(&[None; 4])).is_err());
    }

    #[test]
    fn hand_built_recovery() {
        // q = 5, L = 6, L_1 = 2, columns 2 and 4 shuffled
        let x = vec![0u32, 1, 2, 3, 4, 0];
        let pi = Permutation::cyclic_shift(6, 2);
        let y = pi.apply(&x).unwrap();
        let cols: Vec<Vec<u32>> = (0..6).map(|n| if n == 2 || n == 4 { y.clone() } else { x.clone() }).collect();
        let c = ShuffledCorpus::from_columns(5, &cols).unwrap();
        assert_eq!(estimate_n(&c).unwrap(), vec![2, 4]);
        let r = unshuffle2(&c).unwrap();
        assert_eq!(r.l1_hat, 2);
        assert_eq!(r.l2_hat, 4);
        assert_eq!(r.score, 6);
        for col in r.aligned.columns() {
            assert_eq!(col, &x[..]);
        }
        // exhaustive shift oracle: only shift 2 makes every column equal
        let good: Vec<usize> = (0..6)
            .filter(|&s| {
                let inv = Permutation::cyclic_shift(6, s).invert();
                inv.apply(&y).unwrap() == x
            })
            .collect();
        assert_eq!(good, vec![r.l1_hat]);
    }

    #[test]
    fn no_shuffle_is_not_identifiable() {
        let x = vec![0u32, 1, 2, 3];
        let c = ShuffledCorpus::from_columns(5, &vec![x; 4]).unwrap();
        assert!(matches!(estimate_n(&c), Err(Error::NotIdentifiable(_))));
        let single = ShuffledCorpus::from_columns(5, &[vec![1u32, 2]]).unwrap();
        assert!(estimate_n(&single).is_err());
    }

    #[test]
    fn l_sets_of_noiseless_corpus_are_full() {
        let x = vec![0u32, 1, 2, 3, 4];
        let y = Permutation::cyclic_shift(5, 2).apply(&x).unwrap();
        let c = ShuffledCorpus::from_columns(5, &[x.clone(), y.clone(), x.clone()]).unwrap();
        let n_hat = estimate_n(&c).unwrap();
        assert_eq!(n_hat, vec![1]);
        let sets = estimate_l_sets(&c, &n_hat);
        assert_eq!(sets.0, (0..5).collect::<Vec<_>>());
        assert_eq!(sets.1, (0..5).collect::<Vec<_>>());
        let (a0, a1) = partial_templates(&c, &n_hat, &sets);
        assert_eq!(a0.values, x.iter().map(|&v| Some(v)).collect::<Vec<_>>());
        assert_eq!(a1.values, y.iter().map(|&v| Some(v)).collect::<Vec<_>>());
    }
}
