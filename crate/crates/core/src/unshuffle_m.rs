//! Restricted-prefix M-block unshuffling.
//!
//! Each round rotates the not-yet-truncated suffix of every column so that
//! it lines up with the reference column, weighting row `ℓ` of the suffix by
//! `base^{-ℓ}`. The leading block of the aligned suffix is then truncated and
//! the process repeats on what remains.
//!
//! The block boundary of a round is the smaller of two estimates:
//!
//! * the row before the first *structured* row, where a row is structured
//!   when its partition has between 2 and `τ` parts. Rows inside the aligned
//!   block are either conserved (one part) or noise (close to `N` parts once
//!   `q ≫ N`), while the first row past the block holds block-start values,
//!   which come from at most `M - 1` template positions;
//! * the smallest nonzero wrap point `R - shift` over the columns: a
//!   rotation by `shift` of an `R`-row suffix moves the suffix start, itself
//!   a block start, to row `R - shift`.

use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;

use serde::Serialize;

use crate::corpus::ShuffledCorpus;
use crate::error::{Error, Result};
use crate::partition::row_distinct;
use crate::perm::{BlockStructure, Permutation};

#[derive(Debug, Clone, PartialEq)]
pub struct AlignConfig {
    /// Row `ℓ` (1-based) of the suffix carries weight `weight_base^{-ℓ}`; must exceed 1.
    pub weight_base: f64,
    pub max_iters: usize,
    /// Largest partition size counted as structured; `None` means `max(⌈N/4⌉, 2)`.
    pub structured_part_max: Option<usize>,
    /// 0-based index of the column every other column is aligned to.
    pub reference_column: usize,
    /// Also cut at rotation wrap points.
    pub split_at_wraps: bool,
    /// Realign every column against the row-wise majority of the first alignment.
    pub majority_refine: bool,
}

impl Default for AlignConfig {
    fn default() -> Self {
        AlignConfig {
            weight_base: 2.0,
            max_iters: 256,
            structured_part_max: None,
            reference_column: 0,
            split_at_wraps: true,
            majority_refine: true,
        }
    }
}

impl AlignConfig {
    pub fn structured_threshold(&self, columns: usize) -> usize {
        self.structured_part_max.unwrap_or_else(|| columns.div_ceil(4).max(2))
    }

    fn validate(&self, corpus: &ShuffledCorpus) -> Result<()> {
        if self.weight_base.is_nan() || self.weight_base <= 1.0 {
            return Err(Error::Domain(format!("weight base {} must exceed 1", self.weight_base)));
        }
        if self.reference_column >= corpus.cols() {
            return Err(Error::Domain(format!(
                "reference column {} outside a corpus of {} columns",
                self.reference_column,
                corpus.cols()
            )));
        }
        Ok(())
    }
}

/// One truncation round.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct RoundTrace {
    /// First row of the suffix worked on (0-based).
    pub offset: usize,
    /// Rotation applied to each column's suffix.
    pub shifts: Vec<usize>,
    /// Boundary from the partition rule.
    pub structured_boundary: usize,
    /// Smallest wrap point, if any column moved.
    pub wrap_boundary: Option<usize>,
    /// Rows truncated this round.
    pub boundary: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct MUnshuffleResult {
    pub m_hat: usize,
    /// Recovered block lengths in the reference column's block order.
    pub lengths_hat: Vec<usize>,
    /// `aligned = apply_unshuffle(input, column_perms)`.
    pub column_perms: Vec<Permutation>,
    pub aligned: ShuffledCorpus,
    pub iteration_trace: Vec<RoundTrace>,
    /// Why the run stopped early, if it did. The residual rows then form the last block.
    pub failure: Option<String>,
}

impl MUnshuffleResult {
    pub fn succeeded(&self) -> bool {
        self.failure.is_none()
    }
}

/// Rotation per column maximizing the weighted match count against the
/// reference column; ties go to the smallest rotation.
pub fn weighted_shift_align(corpus: &ShuffledCorpus, ref_col: usize, config: &AlignConfig) -> Vec<usize> {
    let reference: Vec<Option<u32>> = corpus.column(ref_col).iter().map(|&v| Some(v)).collect();
    align_to(corpus, &reference, config)
}

/// Same score against an arbitrary partial reference; `None` rows never match.
pub fn align_to(corpus: &ShuffledCorpus, reference: &[Option<u32>], config: &AlignConfig) -> Vec<usize> {
    let rows = corpus.rows();
    let lexicographic = config.weight_base >= 2.0;
    let weights: Vec<f64> = if lexicographic {
        Vec::new()
    } else {
        (1..=rows).map(|ell| libm::pow(config.weight_base, -(ell as f64))).collect()
    };
    corpus
        .columns()
        .map(|col| {
            let hit = |shift: usize, ell: usize| reference[ell] == Some(col[(ell + shift) % rows]);
            let mut best = 0;
            if lexicographic {
                // with base >= 2, row ℓ outweighs all later rows combined
                for shift in 1..rows {
                    let better = (0..rows)
                        .find(|&ell| hit(shift, ell) != hit(best, ell))
                        .is_some_and(|ell| hit(shift, ell));
                    if better {
                        best = shift;
                    }
                }
            } else {
                let score = |shift: usize| -> f64 { (0..rows).filter(|&ell| hit(shift, ell)).map(|ell| weights[ell]).sum() };
                let mut best_score = score(0);
                for shift in 1..rows {
                    let s = score(shift);
                    if s > best_score {
                        best = shift;
                        best_score = s;
                    }
                }
            }
            best
        })
        .collect()
}

/// Row-wise majority value of the columns rotated by `shifts`, or `None`
/// where no value is held by more than half the columns.
pub fn majority_reference(corpus: &ShuffledCorpus, shifts: &[usize]) -> Vec<Option<u32>> {
    let rows = corpus.rows();
    let cols = corpus.cols();
    let mut values = Vec::with_capacity(cols);
    (0..rows)
        .map(|ell| {
            values.clear();
            values.extend((0..cols).map(|k| corpus.get((ell + shifts[k]) % rows, k)));
            values.sort_unstable();
            let mut best = (values[0], 0);
            let mut run = (values[0], 0);
            for &v in &values {
                if v == run.0 {
                    run.1 += 1;
                } else {
                    run = (v, 1);
                }
                if run.1 > best.1 {
                    best = run;
                }
            }
            (best.1 * 2 > cols).then_some(best.0)
        })
        .collect()
}

/// Rows before the first structured row, or the row count if none is structured.
pub fn detect_block_boundary(corpus: &ShuffledCorpus, config: &AlignConfig) -> usize {
    let tau = config.structured_threshold(corpus.cols());
    (0..corpus.rows())
        .find(|&r| {
            let parts = row_distinct(corpus, r);
            parts >= 2 && parts <= tau
        })
        .unwrap_or(corpus.rows())
}

fn wrap_boundary(shifts: &[usize], rows: usize) -> Option<usize> {
    shifts.iter().filter(|&&s| s > 0).map(|&s| rows - s).min()
}

fn suffix_shift(total: usize, offset: usize, shift: usize) -> Permutation {
    let rows = total - offset;
    let images: Vec<usize> = (0..offset).chain((0..rows).map(|ell| offset + (ell + shift) % rows)).collect();
    Permutation::from_images(images).expect("suffix rotation is a bijection")
}

pub fn unshuffle_m(corpus: &ShuffledCorpus, config: &AlignConfig) -> Result<MUnshuffleResult> {
    if corpus.rows() == 0 || corpus.cols() == 0 {
        return Err(Error::Domain("empty corpus".into()));
    }
    config.validate(corpus)?;
    let reference = config.reference_column;

    let total = corpus.rows();
    let mut perms = alloc::vec![Permutation::identity(total); corpus.cols()];
    let mut current = corpus.clone();
    let mut offset = 0;
    let mut lengths = Vec::new();
    let mut trace = Vec::new();
    let mut failure = None;

    while offset < total {
        if trace.len() == config.max_iters {
            failure = Some(format!("stopped after {} rounds with {} rows left", config.max_iters, total - offset));
            lengths.push(total - offset);
            break;
        }
        let rows = total - offset;
        let suffix = current.suffix(offset);
        let mut shifts = weighted_shift_align(&suffix, reference, config);
        if config.majority_refine {
            shifts = align_to(&suffix, &majority_reference(&suffix, &shifts), config);
        }

        let mut data = Vec::with_capacity(current.data().len());
        for (k, &shift) in shifts.iter().enumerate() {
            let step = suffix_shift(total, offset, shift);
            data.extend(step.apply(current.column(k))?);
            perms[k] = perms[k].compose(&step)?;
        }
        current = ShuffledCorpus::from_raw(current.q(), total, current.cols(), data);

        let structured = detect_block_boundary(&current.suffix(offset), config);
        let wrap = wrap_boundary(&shifts, rows);
        let boundary = match wrap {
            Some(w) if config.split_at_wraps => structured.min(w),
            _ => structured,
        };
        trace.push(RoundTrace {
            offset,
            shifts,
            structured_boundary: structured,
            wrap_boundary: wrap,
            boundary,
        });

        if boundary == 0 {
            if trace.len() == 1 {
                return Err(Error::AlignmentFailed {
                    round: 1,
                    reason: String::from("first aligned row is already structured"),
                });
            }
            failure = Some(format!("no block boundary at round {} with {} rows left", trace.len(), rows));
            lengths.push(rows);
            break;
        }
        lengths.push(boundary);
        offset += boundary;
    }

    Ok(MUnshuffleResult {
        m_hat: lengths.len(),
        lengths_hat: lengths,
        column_perms: perms,
        aligned: current,
        iteration_trace: trace,
        failure,
    })
}

/// Block structure of a successful run.
pub fn recover_block_structure(result: &MUnshuffleResult) -> Result<BlockStructure> {
    if let Some(reason) = &result.failure {
        return Err(Error::AlignmentFailed { round: result.iteration_trace.len(), reason: reason.clone() });
    }
    let total = result.aligned.rows();
    let sum: usize = result.lengths_hat.iter().sum();
    if sum != total {
        return Err(Error::Inconsistent(format!("block lengths sum to {} but L = {}", sum, total)));
    }
    BlockStructure::new(result.lengths_hat.clone())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::apply_unshuffle;
    use alloc::vec;

    fn corpus(columns: &[Vec<u32>], q: u64) -> ShuffledCorpus {
        ShuffledCorpus::from_columns(q, columns).unwrap()
    }

    #[test]
    fn equal_columns_need_no_shift() {
        let x = vec![3u32, 1, 4, 1, 5, 9, 2, 6];
        let c = corpus(&vec![x; 5], 10);
        assert_eq!(weighted_shift_align(&c, 0, &AlignConfig::default()), vec![0; 5]);
    }

    #[test]
    fn recovers_rotation() {
        let x: Vec<u32> = vec![17, 3, 88, 41, 9, 230, 12, 77, 150, 64];
        for s in 0..10 {
            let rotated = Permutation::cyclic_shift(10, 10 - s).apply(&x).unwrap();
            // rotated[(ell + s) % 10] == x[ell]
            let c = corpus(&[x.clone(), rotated], 256);
            assert_eq!(weighted_shift_align(&c, 0, &AlignConfig::default())[1], s);
            let cfg = AlignConfig { weight_base: 1.5, ..AlignConfig::default() };
            assert_eq!(weighted_shift_align(&c, 0, &cfg)[1], s);
        }
    }

    #[test]
    fn first_row_dominates() {
        // shift 1 matches only row 0; shift 0 matches every other row
        let reference = vec![5u32, 1, 2, 3];
        let col = vec![9u32, 5, 2, 3];
        let c = corpus(&[reference, col], 10);
        assert_eq!(weighted_shift_align(&c, 0, &AlignConfig::default())[1], 1);
    }

    #[test]
    fn boundary_rules() {
        let cfg = AlignConfig::default();
        // four identical columns: nothing structured, the whole corpus is one block
        let x = vec![1u32, 2, 3, 4, 5];
        assert_eq!(detect_block_boundary(&corpus(&vec![x.clone(); 4], 1000), &cfg), 5);
        // first row already two-valued
        let c = corpus(&[vec![0, 1], vec![1, 1], vec![0, 1], vec![1, 1]], 2);
        assert_eq!(detect_block_boundary(&c, &cfg), 0);
        // conserved, conserved, then a two-valued row
        let c = corpus(&[vec![7, 7, 1], vec![7, 7, 2], vec![7, 7, 1], vec![7, 7, 2]], 10);
        assert_eq!(detect_block_boundary(&c, &cfg), 2);
        assert_eq!(cfg.structured_threshold(80), 20);
        assert_eq!(cfg.structured_threshold(4), 2);
    }

    #[test]
    fn single_block_corpus() {
        let x = vec![10u32, 20, 30, 40, 50, 60];
        let c = corpus(&vec![x; 7], 100);
        let r = unshuffle_m(&c, &AlignConfig::default()).unwrap();
        assert_eq!(r.m_hat, 1);
        assert_eq!(r.lengths_hat, vec![6]);
        assert!(r.column_perms.iter().all(Permutation::is_identity));
        assert_eq!(recover_block_structure(&r).unwrap().lengths(), &[6]);
    }

    #[test]
    fn two_blocks_split_at_wrap() {
        // blocks (a, b) with lengths (2, 3); half the columns swapped
        let a = [11u32, 12];
        let b = [21u32, 22, 23];
        let ab: Vec<u32> = a.iter().chain(&b).copied().collect();
        let ba: Vec<u32> = b.iter().chain(&a).copied().collect();
        let c = corpus(&[ab.clone(), ba.clone(), ab.clone(), ba], 100);
        let r = unshuffle_m(&c, &AlignConfig::default()).unwrap();
        assert!(r.succeeded());
        assert_eq!(r.lengths_hat, vec![2, 3]);
        for col in r.aligned.columns() {
            assert_eq!(col, &ab[..]);
        }
        assert_eq!(apply_unshuffle(&c, &r.column_perms).unwrap(), r.aligned);
    }

    #[test]
    fn structured_first_row_fails() {
        let c = corpus(&[vec![0, 1], vec![1, 1], vec![0, 1], vec![1, 1]], 2);
        // every column matches the reference fully at shift 0 or 1 except the mixed ones
        let cfg = AlignConfig { split_at_wraps: false, ..AlignConfig::default() };
        let r = unshuffle_m(&c, &cfg);
        assert!(matches!(r, Err(Error::AlignmentFailed { round: 1, .. })));
    }

    #[test]
    fn config_validation() {
        let c = corpus(&[vec![0, 1]], 2);
        let bad_base = AlignConfig { weight_base: 1.0, ..AlignConfig::default() };
        assert!(unshuffle_m(&c, &bad_base).is_err());
        let bad_ref = AlignConfig { reference_column: 3, ..AlignConfig::default() };
        assert!(unshuffle_m(&c, &bad_ref).is_err());
    }

    #[test]
    fn recover_rejects_inconsistent_lengths() {
        let x = vec![1u32, 2, 3];
        let c = corpus(&vec![x; 2], 10);
        let mut r = unshuffle_m(&c, &AlignConfig::default()).unwrap();
        r.lengths_hat = vec![1, 1];
        assert!(matches!(recover_block_structure(&r), Err(Error::Inconsistent(_))));
    }

    #[test]
    fn majority_masks_disagreeing_rows() {
        let c = corpus(&[vec![1, 2, 3], vec![1, 5, 3], vec![1, 6, 4], vec![1, 7, 3]], 10);
        assert_eq!(majority_reference(&c, &[0; 4]), vec![Some(1), None, Some(3)]);
        // rotating column 0 by one leaves row 0 at 3 of 4
        assert_eq!(majority_reference(&c, &[1, 0, 0, 0])[0], Some(1));
    }

    #[test]
    fn align_to_ignores_undefined_rows() {
        let c = corpus(&[vec![4, 8, 1, 9]], 10);
        assert_eq!(align_to(&c, &[None, Some(9), None, None], &AlignConfig::default()), vec![2]);
        assert_eq!(align_to(&c, &[None; 4], &AlignConfig::default()), vec![0]);
    }

    #[test]
    fn all_six_layouts_of_three_blocks() {
        use crate::model::{generate, ModelParams, ShuffleSpec};
        use rand::SeedableRng;
        let blocks = BlockStructure::new(vec![2, 3, 4]).unwrap();
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(23);
        for _ in 0..50 {
            let p = ModelParams {
                q: 17,
                blocks: blocks.clone(),
                columns: 6,
                lambda: 0.0,
                shuffle: ShuffleSpec::Counts(Permutation::all(3).into_iter().map(|s| (s, 1)).collect()),
                restricted_prefix: true,
                distinguished_prefix: false,
                seed: 0,
            };
            let (c, t) = generate(&p, &mut rng).unwrap();
            // noiseless: any row with two or more values is structure
            let cfg = AlignConfig { structured_part_max: Some(6), ..AlignConfig::default() };
            let r = unshuffle_m(&c, &cfg).unwrap();
            assert!(r.succeeded());
            let lead = &t.column_perms[0];
            assert_eq!(recover_block_structure(&r).unwrap(), blocks.permuted(lead).unwrap());
            for col in r.aligned.columns() {
                assert_eq!(col, r.aligned.column(0));
            }
        }
    }
}
