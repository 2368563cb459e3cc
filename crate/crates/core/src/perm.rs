//! Permutations in one-line form, block structures, and the operad
//! composition that builds block and coherent block permutations.
//!
//! Storage is 0-based. [`Permutation::from_one_line`] and
//! [`Permutation::one_line`] convert to and from the 1-based notation used
//! in printed output and serialized files.
//!
//! Action convention: `apply(p, v)[a] = v[p(a)]`, i.e. `p` acts on column
//! vectors as the matrix `rho(p)[a][b] = [b == p(a)]`. Composition is
//! function composition, `compose(p, q)(a) = p(q(a))`, so that
//! `apply(compose(p, q), v) == apply(q, apply(p, v))`.

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;
use core::fmt;
use core::ops::Range;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// A bijection of `{0, .., n-1}`.
#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(try_from = "Vec<usize>", into = "Vec<usize>")]
pub struct Permutation {
    images: Vec<usize>,
}

impl Permutation {
    pub fn identity(n: usize) -> Self {
        Permutation { images: (0..n).collect() }
    }

    /// Builds a permutation from 0-based images, checking bijectivity.
    pub fn from_images(images: Vec<usize>) -> Result<Self> {
        let n = images.len();
        let mut seen = vec![false; n];
        for &i in &images {
            if i >= n || seen[i] {
                return Err(Error::InvalidPermutation(format!("{:?}", images)));
            }
            seen[i] = true;
        }
        Ok(Permutation { images })
    }

    /// Builds a permutation from the 1-based one-line form `(p(1), .., p(n))`.
    pub fn from_one_line(one_line: &[usize]) -> Result<Self> {
        if one_line.iter().any(|&i| i == 0) {
            return Err(Error::InvalidPermutation(format!("{:?}", one_line)));
        }
        Self::from_images(one_line.iter().map(|&i| i - 1).collect())
    }

    /// The 1-based one-line form.
    pub fn one_line(&self) -> Vec<usize> {
        self.images.iter().map(|&i| i + 1).collect()
    }

    /// Cyclic shift `a -> (a + shift) mod n`; in 1-based form
    /// `(shift+1, .., n, 1, .., shift)`.
    pub fn cyclic_shift(n: usize, shift: usize) -> Self {
        if n == 0 {
            return Self::identity(0);
        }
        Permutation { images: (0..n).map(|a| (a + shift) % n).collect() }
    }

    pub fn len(&self) -> usize {
        self.images.len()
    }

    pub fn is_empty(&self) -> bool {
        self.images.is_empty()
    }

    pub fn images(&self) -> &[usize] {
        &self.images
    }

    #[inline]
    pub fn image(&self, a: usize) -> usize {
        self.images[a]
    }

    pub fn is_identity(&self) -> bool {
        self.images.iter().enumerate().all(|(a, &b)| a == b)
    }

    pub fn invert(&self) -> Self {
        let mut inv = vec![0; self.images.len()];
        for (a, &b) in self.images.iter().enumerate() {
            inv[b] = a;
        }
        Permutation { images: inv }
    }

    /// `self ∘ other`, i.e. `a -> self(other(a))`.
    pub fn compose(&self, other: &Permutation) -> Result<Self> {
        check_len(self.len(), other.len())?;
        Ok(Permutation { images: other.images.iter().map(|&b| self.images[b]).collect() })
    }

    /// `out[a] = v[self(a)]`.
    pub fn apply<T: Clone>(&self, v: &[T]) -> Result<Vec<T>> {
        check_len(self.len(), v.len())?;
        Ok(self.images.iter().map(|&b| v[b].clone()).collect())
    }

    /// Inverse action of [`Permutation::apply`]: `out[self(a)] = v[a]`.
    pub fn apply_inverse<T: Clone>(&self, v: &[T]) -> Result<Vec<T>> {
        check_len(self.len(), v.len())?;
        let mut out = v.to_vec();
        for (a, &b) in self.images.iter().enumerate() {
            out[b] = v[a].clone();
        }
        Ok(out)
    }

    /// Every permutation of `[m]` in lexicographic order of one-line form.
    pub fn all(m: usize) -> Vec<Permutation> {
        let mut out = Vec::new();
        let mut cur: Vec<usize> = (0..m).collect();
        loop {
            out.push(Permutation { images: cur.clone() });
            if !next_permutation(&mut cur) {
                break;
            }
        }
        out
    }
}

fn next_permutation(v: &mut [usize]) -> bool {
    if v.len() < 2 {
        return false;
    }
    let mut i = v.len() - 1;
    while i > 0 && v[i - 1] >= v[i] {
        i -= 1;
    }
    if i == 0 {
        return false;
    }
    let mut j = v.len() - 1;
    while v[j] <= v[i - 1] {
        j -= 1;
    }
    v.swap(i - 1, j);
    v[i..].reverse();
    true
}

fn check_len(expected: usize, found: usize) -> Result<()> {
    if expected != found {
        return Err(Error::SizeMismatch { expected, found });
    }
    Ok(())
}

impl fmt::Debug for Permutation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Permutation{:?}", self.one_line())
    }
}

impl fmt::Display for Permutation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "(")?;
        for (i, p) in self.one_line().iter().enumerate() {
            if i > 0 {
                write!(f, ",")?;
            }
            write!(f, "{}", p)?;
        }
        write!(f, ")")
    }
}

impl TryFrom<Vec<usize>> for Permutation {
    type Error = Error;

    fn try_from(one_line: Vec<usize>) -> Result<Self> {
        Permutation::from_one_line(&one_line)
    }
}

impl From<Permutation> for Vec<usize> {
    fn from(p: Permutation) -> Vec<usize> {
        p.one_line()
    }
}

/// Ordered positive block lengths `(L_1, .., L_M)`.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(try_from = "Vec<usize>", into = "Vec<usize>")]
pub struct BlockStructure {
    lengths: Vec<usize>,
}

impl BlockStructure {
    pub fn new(lengths: Vec<usize>) -> Result<Self> {
        if lengths.is_empty() {
            return Err(Error::InvalidBlocks("no blocks".into()));
        }
        if lengths.iter().any(|&l| l == 0) {
            return Err(Error::InvalidBlocks(format!("zero-length block in {:?}", lengths)));
        }
        Ok(BlockStructure { lengths })
    }

    pub fn lengths(&self) -> &[usize] {
        &self.lengths
    }

    /// Number of blocks `M`.
    pub fn count(&self) -> usize {
        self.lengths.len()
    }

    /// Total length `L`.
    pub fn total(&self) -> usize {
        self.lengths.iter().sum()
    }

    /// 0-based start offset of every block; the 1-based prefix set is these plus one.
    pub fn starts(&self) -> Vec<usize> {
        let mut acc = 0;
        self.lengths
            .iter()
            .map(|&l| {
                let s = acc;
                acc += l;
                s
            })
            .collect()
    }

    /// Row range occupied by block `m` (0-based).
    pub fn interval(&self, m: usize) -> Range<usize> {
        let start: usize = self.lengths[..m].iter().sum();
        start..start + self.lengths[m]
    }

    /// Lengths read in the order `(L_{σ(1)}, .., L_{σ(M)})`.
    pub fn permuted(&self, sigma: &Permutation) -> Result<Self> {
        check_len(self.count(), sigma.len())?;
        Ok(BlockStructure { lengths: sigma.images().iter().map(|&m| self.lengths[m]).collect() })
    }
}

impl TryFrom<Vec<usize>> for BlockStructure {
    type Error = Error;

    fn try_from(lengths: Vec<usize>) -> Result<Self> {
        BlockStructure::new(lengths)
    }
}

impl From<BlockStructure> for Vec<usize> {
    fn from(b: BlockStructure) -> Vec<usize> {
        b.lengths
    }
}

/// Operad composition `σ ∘ (τ_1, .., τ_M)`: position `Σ_{m<n} L_m + ℓ` maps to
/// `Σ_{m<σ(n)} L_{σ⁻¹(m)} + τ_n(ℓ)`, where `L_m = |τ_m|`.
pub fn operad_compose(sigma: &Permutation, taus: &[Permutation]) -> Result<Permutation> {
    check_len(sigma.len(), taus.len())?;
    let lengths: Vec<usize> = taus.iter().map(Permutation::len).collect();
    let inv = sigma.invert();

    // codomain_offset[k] = total length of the blocks landing before slot k
    let mut codomain_offset = vec![0; sigma.len() + 1];
    for k in 0..sigma.len() {
        codomain_offset[k + 1] = codomain_offset[k] + lengths[inv.image(k)];
    }

    let mut images = Vec::with_capacity(lengths.iter().sum());
    for (n, tau) in taus.iter().enumerate() {
        let offset = codomain_offset[sigma.image(n)];
        images.extend(tau.images().iter().map(|&l| offset + l));
    }
    Ok(Permutation { images })
}

/// Block permutation `σ_{L_1, .., L_M} = σ ∘ (1_{L_1}, .., 1_{L_M})`.
pub fn block_permutation(sigma: &Permutation, blocks: &BlockStructure) -> Result<Permutation> {
    check_len(blocks.count(), sigma.len())?;
    let ids: Vec<Permutation> = blocks.lengths().iter().map(|&l| Permutation::identity(l)).collect();
    operad_compose(sigma, &ids)
}

/// Coherent block permutation `σ⊚ = σ_{L_{σ(1)}, .., L_{σ(M)}}`.
///
/// `apply(σ⊚, x)` lays the blocks of `x` out in the order `σ(1), .., σ(M)`.
pub fn coherent_block_permutation(sigma: &Permutation, blocks: &BlockStructure) -> Result<Permutation> {
    block_permutation(sigma, &blocks.permuted(sigma)?)
}
