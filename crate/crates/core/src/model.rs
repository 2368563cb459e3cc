//! Generative model for shuffled corpora.
//!
//! A template `x ∈ (ℤ/qℤ)^L` is drawn once. Every message `n` resamples the
//! noise loci `𝓛` uniformly, then lays its blocks out according to the
//! coherent block permutation of `Π(n) ∈ S_M`:
//!
//! `A[ℓ][n] = (x + ξ_n)[Π(n)⊚(ℓ)]`.
//!
//! Random draws happen in a fixed order (template, noise loci, column
//! permutations, then noise values column-major) from a [`ChaCha8Rng`], so
//! a seed determines the corpus bit for bit on every platform.

use alloc::collections::BTreeMap;
use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use rand::seq::{index, SliceRandom};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::corpus::ShuffledCorpus;
use crate::error::{Error, Result};
use crate::perm::{coherent_block_permutation, BlockStructure, Permutation};

/// How columns are assigned their block permutations.
#[derive(Debug, Clone, PartialEq)]
pub enum ShuffleSpec {
    /// `M = 2`: `⌈νN⌉` columns get `(2,1)`, the rest stay in order.
    TwoBlock { nu: f64 },
    /// Exact multiplicities per permutation of `[M]`; must sum to `N`.
    Counts(Vec<(Permutation, usize)>),
}

#[derive(Debug, Clone, PartialEq)]
pub struct ModelParams {
    pub q: u64,
    pub blocks: BlockStructure,
    pub columns: usize,
    /// Noise fraction; realized as `⌈λL⌉` loci.
    pub lambda: f64,
    pub shuffle: ShuffleSpec,
    /// Keep noise off the block starts.
    pub restricted_prefix: bool,
    /// Force distinct template values on the block starts.
    pub distinguished_prefix: bool,
    pub seed: u64,
}

/// `⌈frac · total⌉`, tolerant of representation error in `frac`.
pub fn ceil_count(frac: f64, total: usize) -> usize {
    let x = frac * total as f64;
    let r = libm::round(x);
    if libm::fabs(x - r) < 1e-9 {
        r as usize
    } else {
        libm::ceil(x) as usize
    }
}

impl ModelParams {
    /// Two-block model with the noise and shuffle fractions of the 2-unshuffling setup.
    pub fn two_block(q: u64, l1: usize, l2: usize, columns: usize, lambda: f64, nu: f64, seed: u64) -> Result<Self> {
        let p = ModelParams {
            q,
            blocks: BlockStructure::new(vec![l1, l2])?,
            columns,
            lambda,
            shuffle: ShuffleSpec::TwoBlock { nu },
            restricted_prefix: false,
            distinguished_prefix: false,
            seed,
        };
        p.validate()?;
        Ok(p)
    }

    pub fn rng(&self) -> ChaCha8Rng {
        ChaCha8Rng::seed_from_u64(self.seed)
    }

    /// `|𝓛| = ⌈λL⌉`.
    pub fn noise_count(&self) -> usize {
        ceil_count(self.lambda, self.blocks.total())
    }

    /// Per-permutation column counts, in the order columns are dealt out.
    pub fn counts(&self) -> Result<Vec<(Permutation, usize)>> {
        match &self.shuffle {
            ShuffleSpec::TwoBlock { nu } => {
                let shuffled = ceil_count(*nu, self.columns);
                Ok(vec![
                    (Permutation::identity(2), self.columns - shuffled),
                    (Permutation::from_one_line(&[2, 1])?, shuffled),
                ])
            }
            ShuffleSpec::Counts(c) => Ok(c.clone()),
        }
    }

    pub fn validate(&self) -> Result<()> {
        let m = self.blocks.count();
        let l = self.blocks.total();
        if self.q < 2 || self.q > 1 << 32 {
            return Err(Error::InfeasibleParameters(format!("q = {} outside 2..=2^32", self.q)));
        }
        if !(0.0..=1.0).contains(&self.lambda) {
            return Err(Error::InfeasibleParameters(format!("lambda = {} outside [0, 1]", self.lambda)));
        }
        match &self.shuffle {
            ShuffleSpec::TwoBlock { nu } => {
                if m != 2 {
                    return Err(Error::InfeasibleParameters(format!("two-block shuffle with {} blocks", m)));
                }
                if !(0.0..=1.0).contains(nu) {
                    return Err(Error::InfeasibleParameters(format!("nu = {} outside [0, 1]", nu)));
                }
            }
            ShuffleSpec::Counts(c) => {
                if let Some((p, _)) = c.iter().find(|(p, _)| p.len() != m) {
                    return Err(Error::SizeMismatch { expected: m, found: p.len() });
                }
                let total: usize = c.iter().map(|(_, k)| k).sum();
                if total != self.columns {
                    return Err(Error::InfeasibleParameters(format!(
                        "shuffle counts sum to {} but N = {}",
                        total, self.columns
                    )));
                }
            }
        }
        let allowed = if self.restricted_prefix { l - m } else { l };
        if self.noise_count() > allowed {
            return Err(Error::InfeasibleParameters(format!(
                "{} noise loci requested but only {} positions allowed",
                self.noise_count(),
                allowed
            )));
        }
        if self.distinguished_prefix && self.q < m as u64 {
            return Err(Error::InfeasibleParameters(format!(
                "distinct block-start values need q >= M, got q = {} < {}",
                self.q, m
            )));
        }
        Ok(())
    }
}

/// The hidden quantities behind a generated corpus.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GroundTruth {
    pub blocks: BlockStructure,
    pub template: Vec<u32>,
    /// Sorted 0-based noise loci.
    pub noise_loci: Vec<usize>,
    /// `Π(n) ∈ S_M` per column.
    pub column_perms: Vec<Permutation>,
}

impl GroundTruth {
    /// `Π(n)⊚`, the layout permutation of column `n`.
    pub fn column_shuffle(&self, n: usize) -> Result<Permutation> {
        coherent_block_permutation(&self.column_perms[n], &self.blocks)
    }

    /// The columns with `Π(n) = σ`.
    pub fn columns_with(&self, sigma: &Permutation) -> Vec<usize> {
        (0..self.column_perms.len()).filter(|&n| &self.column_perms[n] == sigma).collect()
    }

    /// The shuffled set of the two-block model: every column not left in order.
    pub fn shuffled_columns(&self) -> Vec<usize> {
        (0..self.column_perms.len()).filter(|&n| !self.column_perms[n].is_identity()).collect()
    }

    pub fn is_noise(&self, locus: usize) -> bool {
        self.noise_loci.binary_search(&locus).is_ok()
    }
}

/// Draws the template, the noise loci and the column permutations.
pub fn sample_ground_truth<R: Rng + ?Sized>(params: &ModelParams, rng: &mut R) -> Result<GroundTruth> {
    params.validate()?;
    let l = params.blocks.total();
    let starts = params.blocks.starts();

    let mut template: Vec<u32> = (0..l).map(|_| draw_symbol(rng, params.q)).collect();
    if params.distinguished_prefix {
        while !distinct_at(&template, &starts) {
            for &s in &starts {
                template[s] = draw_symbol(rng, params.q);
            }
        }
    }

    let allowed: Vec<usize> = if params.restricted_prefix {
        (0..l).filter(|ell| starts.binary_search(ell).is_err()).collect()
    } else {
        (0..l).collect()
    };
    let mut noise_loci: Vec<usize> = index::sample(rng, allowed.len(), params.noise_count())
        .into_iter()
        .map(|i| allowed[i])
        .collect();
    noise_loci.sort_unstable();

    let mut column_perms = Vec::with_capacity(params.columns);
    for (sigma, count) in params.counts()? {
        column_perms.extend(core::iter::repeat_n(sigma, count));
    }
    column_perms.shuffle(rng);

    Ok(GroundTruth { blocks: params.blocks.clone(), template, noise_loci, column_perms })
}

/// Samples a corpus and the ground truth that produced it.
pub fn generate<R: Rng + ?Sized>(params: &ModelParams, rng: &mut R) -> Result<(ShuffledCorpus, GroundTruth)> {
    let truth = sample_ground_truth(params, rng)?;
    let l = truth.template.len();

    let mut layouts: BTreeMap<&Permutation, Permutation> = BTreeMap::new();
    for sigma in &truth.column_perms {
        if !layouts.contains_key(sigma) {
            layouts.insert(sigma, coherent_block_permutation(sigma, &truth.blocks)?);
        }
    }

    let mut data = Vec::with_capacity(l * params.columns);
    let mut noisy = truth.template.clone();
    for sigma in &truth.column_perms {
        for &locus in &truth.noise_loci {
            let xi = draw_symbol(rng, params.q);
            noisy[locus] = add_mod(truth.template[locus], xi, params.q);
        }
        let layout = &layouts[sigma];
        data.extend(layout.images().iter().map(|&src| noisy[src]));
    }
    Ok((ShuffledCorpus::from_raw(params.q, l, params.columns, data), truth))
}

/// Convenience wrapper seeding the generator from `params.seed`.
pub fn generate_seeded(params: &ModelParams) -> Result<(ShuffledCorpus, GroundTruth)> {
    generate(params, &mut params.rng())
}

#[inline]
pub(crate) fn draw_symbol<R: Rng + ?Sized>(rng: &mut R, q: u64) -> u32 {
    rng.random_range(0..q) as u32
}

#[inline]
fn add_mod(a: u32, b: u32, q: u64) -> u32 {
    ((u64::from(a) + u64::from(b)) % q) as u32
}

fn distinct_at(template: &[u32], positions: &[usize]) -> bool {
    let mut vals: Vec<u32> = positions.iter().map(|&p| template[p]).collect();
    vals.sort_unstable();
    vals.windows(2).all(|w| w[0] != w[1])
}
