//! Synchronization view of unshuffling: each column carries a potential
//! `σ_j ∈ S_M`, and the objective rewards agreement between every pair of
//! columns after each is unshuffled by its own coherent block permutation.
//!
//! Only evaluation and exhaustive search on tiny instances live here.

use alloc::format;
use alloc::vec::Vec;

use serde::Serialize;

use crate::corpus::ShuffledCorpus;
use crate::error::{Error, Result};
use crate::perm::{coherent_block_permutation, BlockStructure, Permutation};

/// How symbols become real vectors.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Embedding {
    /// Indicator over `ℤ/qℤ`; inner products count matching positions.
    OneHot,
    /// The symbol value as a single real.
    Raw,
}

/// `N` real columns, each `L` positions of `width` reals.
#[derive(Debug, Clone, PartialEq)]
pub struct SyncInstance {
    pub columns: Vec<Vec<f64>>,
    pub width: usize,
    pub blocks: BlockStructure,
}

impl SyncInstance {
    pub fn new(columns: Vec<Vec<f64>>, width: usize, blocks: BlockStructure) -> Result<Self> {
        if width == 0 {
            return Err(Error::Domain("embedding width 0".into()));
        }
        let expected = blocks.total() * width;
        if let Some(c) = columns.iter().find(|c| c.len() != expected) {
            return Err(Error::SizeMismatch { expected, found: c.len() });
        }
        Ok(SyncInstance { columns, width, blocks })
    }

    pub fn from_corpus(corpus: &ShuffledCorpus, blocks: BlockStructure, embedding: Embedding) -> Result<Self> {
        if corpus.rows() != blocks.total() {
            return Err(Error::SizeMismatch { expected: blocks.total(), found: corpus.rows() });
        }
        let width = match embedding {
            Embedding::OneHot => {
                if corpus.q() > 1 << 16 {
                    return Err(Error::TooLarge(format!("one-hot embedding of q = {}", corpus.q())));
                }
                corpus.q() as usize
            }
            Embedding::Raw => 1,
        };
        let columns = corpus
            .columns()
            .map(|col| {
                let mut v = alloc::vec![0.0; col.len() * width];
                for (ell, &s) in col.iter().enumerate() {
                    match embedding {
                        Embedding::OneHot => v[ell * width + s as usize] = 1.0,
                        Embedding::Raw => v[ell] = f64::from(s),
                    }
                }
                v
            })
            .collect();
        SyncInstance::new(columns, width, blocks)
    }

    pub fn len(&self) -> usize {
        self.columns.len()
    }

    pub fn is_empty(&self) -> bool {
        self.columns.is_empty()
    }

    /// `R* y`: entry `a` of the column goes back to `layout(a)`, undoing the generator's layout.
    fn unshuffled(&self, layout: &Permutation, column: &[f64]) -> Vec<f64> {
        let w = self.width;
        let mut out = alloc::vec![0.0; column.len()];
        for a in 0..layout.len() {
            let src = layout.image(a);
            out[src * w..(src + 1) * w].copy_from_slice(&column[a * w..(a + 1) * w]);
        }
        out
    }
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Serialize)]
pub struct PotentialAssignment {
    pub sigmas: Vec<Permutation>,
}

impl PotentialAssignment {
    pub fn identity(columns: usize, m: usize) -> Self {
        PotentialAssignment { sigmas: alloc::vec![Permutation::identity(m); columns] }
    }

    /// Per-column coherent layouts on `[L]`.
    pub fn layouts(&self, blocks: &BlockStructure) -> Result<Vec<Permutation>> {
        self.sigmas.iter().map(|s| coherent_block_permutation(s, blocks)).collect()
    }
}

fn check_sizes(assignment: &PotentialAssignment, instance: &SyncInstance) -> Result<()> {
    if assignment.sigmas.len() != instance.len() {
        return Err(Error::SizeMismatch { expected: instance.len(), found: assignment.sigmas.len() });
    }
    Ok(())
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// `-Σ_{j,k} ⟨R_j* y_j, R_k* y_k⟩` for arbitrary layouts in `S_L`.
pub fn objective_layouts(layouts: &[Permutation], instance: &SyncInstance) -> Result<f64> {
    if layouts.len() != instance.len() {
        return Err(Error::SizeMismatch { expected: instance.len(), found: layouts.len() });
    }
    let l = instance.blocks.total();
    if let Some(p) = layouts.iter().find(|p| p.len() != l) {
        return Err(Error::SizeMismatch { expected: l, found: p.len() });
    }
    let aligned: Vec<Vec<f64>> = layouts
        .iter()
        .zip(&instance.columns)
        .map(|(p, y)| instance.unshuffled(p, y))
        .collect();
    let mut total = 0.0;
    for a in &aligned {
        for b in &aligned {
            total += dot(a, b);
        }
    }
    Ok(-total)
}

/// Pairwise form, permuting columns directly.
pub fn objective_pairwise(assignment: &PotentialAssignment, instance: &SyncInstance) -> Result<f64> {
    check_sizes(assignment, instance)?;
    objective_layouts(&assignment.layouts(&instance.blocks)?, instance)
}

/// Dense square matrix, row-major.
struct Dense {
    n: usize,
    data: Vec<f64>,
}

impl Dense {
    fn zeros(n: usize) -> Self {
        Dense { n, data: alloc::vec![0.0; n * n] }
    }

    fn at(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.n + j]
    }

    fn set(&mut self, i: usize, j: usize, v: f64) {
        self.data[i * self.n + j] = v;
    }
}

/// Trace form `-Tr(R Y)` with `R = r r*`, `r` the stacked per-column operators
/// and `Y = z z*` for the stacked columns `z`. Everything is materialized.
pub fn objective_trace(assignment: &PotentialAssignment, instance: &SyncInstance) -> Result<f64> {
    check_sizes(assignment, instance)?;
    let layouts = assignment.layouts(&instance.blocks)?;
    let w = instance.width;
    let d = instance.blocks.total() * w;
    let big = d * instance.len();
    if big > 4096 {
        return Err(Error::TooLarge(format!("{}×{} dense operator", big, big)));
    }

    // r is big × d; block j is the matrix of y ↦ R_j y, i.e. the adjoint of the unshuffle.
    let mut r = alloc::vec![0.0; big * d];
    for (j, p) in layouts.iter().enumerate() {
        for a in 0..p.len() {
            let src = p.image(a);
            for c in 0..w {
                r[(j * d + a * w + c) * d + src * w + c] = 1.0;
            }
        }
    }
    let mut rr = Dense::zeros(big);
    for i in 0..big {
        for k in 0..big {
            let mut s = 0.0;
            for t in 0..d {
                s += r[i * d + t] * r[k * d + t];
            }
            rr.set(i, k, s);
        }
    }
    let z: Vec<f64> = instance.columns.iter().flatten().copied().collect();
    let mut y = Dense::zeros(big);
    for i in 0..big {
        for k in 0..big {
            y.set(i, k, z[i] * z[k]);
        }
    }
    let mut trace = 0.0;
    for i in 0..big {
        for k in 0..big {
            trace += rr.at(i, k) * y.at(k, i);
        }
    }
    Ok(-trace)
}

/// Largest number of assignments `brute_force_sync` will enumerate.
pub const MAX_ASSIGNMENTS: u128 = 1_000_000;

/// Exhaustive minimizer of the pairwise objective over `S_M`-valued potentials
/// under the candidate `blocks`.
///
/// Every column's `σ` is searched; the lexicographically smallest minimizer
/// is returned.
pub fn brute_force_sync(instance: &SyncInstance, blocks: &BlockStructure) -> Result<PotentialAssignment> {
    let instance = SyncInstance::new(instance.columns.clone(), instance.width, blocks.clone())?;
    let m = blocks.count();
    let n = instance.len();
    let group = Permutation::all(m);
    let size = (group.len() as u128).checked_pow(n as u32).filter(|&s| s <= MAX_ASSIGNMENTS);
    if size.is_none() {
        return Err(Error::TooLarge(format!("({}!)^{} assignments", m, n)));
    }
    let layouts: Vec<Permutation> =
        group.iter().map(|s| coherent_block_permutation(s, blocks)).collect::<Result<_>>()?;
    // unshuffled[j][g]: column j undone by group element g
    let unshuffled: Vec<Vec<Vec<f64>>> = instance
        .columns
        .iter()
        .map(|y| layouts.iter().map(|p| instance.unshuffled(p, y)).collect())
        .collect();

    let mut choice = alloc::vec![0usize; n];
    let mut best: Option<(f64, Vec<usize>)> = None;
    loop {
        let mut sum = alloc::vec![0.0; instance.blocks.total() * instance.width];
        for (j, &g) in choice.iter().enumerate() {
            for (acc, v) in sum.iter_mut().zip(&unshuffled[j][g]) {
                *acc += v;
            }
        }
        let value = -dot(&sum, &sum);
        // strict improvement keeps the first (lexicographically smallest) minimizer
        if best.as_ref().is_none_or(|(b, _)| value < *b - 1e-9) {
            best = Some((value, choice.clone()));
        }
        // odometer, last column fastest
        let mut j = n;
        loop {
            if j == 0 {
                let (_, picks) = best.expect("at least one assignment");
                return Ok(PotentialAssignment { sigmas: picks.into_iter().map(|g| group[g].clone()).collect() });
            }
            j -= 1;
            choice[j] += 1;
            if choice[j] < group.len() {
                break;
            }
            choice[j] = 0;
        }
    }
}
