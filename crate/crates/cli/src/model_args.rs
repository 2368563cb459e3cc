//! Model parameters from command-line flags.

use clap::Args;
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use unshuffle_core::{BlockStructure, ModelParams, Permutation, ShuffleSpec};

use crate::error::{CliError, Result};

#[derive(Debug, Clone, Default, Args)]
pub struct ModelArgs {
    /// Alphabet size.
    #[arg(long)]
    pub q: Option<u64>,
    /// Block lengths, comma separated.
    #[arg(long, value_delimiter = ',')]
    pub lengths: Vec<usize>,
    /// Number of columns (messages).
    #[arg(long = "n")]
    pub columns: Option<usize>,
    /// Noise fraction.
    #[arg(long)]
    pub lambda: Option<f64>,
    /// Two blocks only: fraction of columns with the blocks swapped.
    #[arg(long)]
    pub nu: Option<f64>,
    /// A 1-based one-line layout and its column count, e.g. 2,1,3:8. Repeatable; leftover columns keep the identity.
    #[arg(long = "layout", value_name = "PERM:COUNT")]
    pub layouts: Vec<String>,
    /// Column counts per tier, e.g. 16,8x2,4x4: the first tier keeps the identity, each later COUNTxKINDS tier draws KINDS distinct other layouts.
    #[arg(long)]
    pub tiers: Option<String>,
    /// Draw each column's layout uniformly.
    #[arg(long)]
    pub random_layouts: bool,
    /// Keep noise off the first symbol of every block.
    #[arg(long)]
    pub restricted_prefix: bool,
    /// Give every block a distinct first symbol.
    #[arg(long)]
    pub distinguished_prefix: bool,
}

/// Per-command fallbacks for flags left unset.
pub struct Defaults {
    pub q: u64,
    pub lengths: &'static [usize],
    pub columns: usize,
    pub lambda: f64,
    pub nu: Option<f64>,
    pub random_layouts: bool,
}

fn usage(msg: impl Into<String>) -> CliError {
    CliError::Usage(msg.into())
}

fn parse_layout(text: &str, m: usize) -> Result<(Permutation, usize)> {
    let (perm, count) = text
        .rsplit_once(':')
        .ok_or_else(|| usage(format!("layout {:?} is not PERM:COUNT", text)))?;
    let one_line = perm
        .split(',')
        .map(|s| s.trim().parse::<usize>())
        .collect::<std::result::Result<Vec<_>, _>>()
        .map_err(|e| usage(format!("layout {:?}: {}", text, e)))?;
    let count = count.trim().parse().map_err(|e| usage(format!("layout {:?}: {}", text, e)))?;
    let perm = Permutation::from_one_line(&one_line)?;
    if perm.len() != m {
        return Err(usage(format!("layout {:?} acts on {} blocks, not {}", text, perm.len(), m)));
    }
    Ok((perm, count))
}

/// `(columns, kinds)` per tier.
fn parse_tiers(text: &str) -> Result<Vec<(usize, usize)>> {
    text.split(',')
        .map(|t| {
            let (count, kinds) = t.split_once('x').unwrap_or((t, "1"));
            match (count.trim().parse(), kinds.trim().parse()) {
                (Ok(c), Ok(k)) => Ok((c, k)),
                _ => Err(usage(format!("tier {:?} is not COUNT or COUNTxKINDS", t))),
            }
        })
        .collect()
}

/// First tier gets the identity; later tiers take fresh non-identity layouts
/// in an order drawn from `seed`.
pub fn tiered_counts(m: usize, tiers: &[(usize, usize)], seed: u64) -> Result<Vec<(Permutation, usize)>> {
    let Some(&(lead, lead_kinds)) = tiers.first() else {
        return Err(usage("empty tier list"));
    };
    if lead_kinds != 1 {
        return Err(usage("the identity tier has a single layout"));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x5eed);
    let mut others = Permutation::all(m);
    others.retain(|s| !s.is_identity());
    others.shuffle(&mut rng);
    let needed: usize = tiers[1..].iter().map(|t| t.1).sum();
    if needed > others.len() {
        return Err(usage(format!("tiers need {} distinct layouts; only {} exist", needed, others.len())));
    }
    let mut pool = others.into_iter();
    let mut counts = vec![(Permutation::identity(m), lead)];
    for &(columns, kinds) in &tiers[1..] {
        counts.extend(pool.by_ref().take(kinds).map(|p| (p, columns)));
    }
    Ok(counts)
}

fn random_counts(m: usize, columns: usize, seed: u64) -> Vec<(Permutation, usize)> {
    let group = Permutation::all(m);
    let mut counts = vec![0; group.len()];
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x1a70);
    for _ in 0..columns {
        counts[rng.random_range(0..group.len())] += 1;
    }
    group.into_iter().zip(counts).filter(|(_, c)| *c > 0).collect()
}

impl ModelArgs {
    pub fn params(&self, seed: u64, record_len: Option<usize>, d: &Defaults) -> Result<ModelParams> {
        let lengths = if self.lengths.is_empty() { d.lengths.to_vec() } else { self.lengths.clone() };
        let blocks = BlockStructure::new(lengths)?;
        if let Some(l) = record_len {
            if l != blocks.total() {
                return Err(usage(format!("--record-len {} disagrees with block lengths summing to {}", l, blocks.total())));
            }
        }
        let m = blocks.count();
        let tiers = self.tiers.as_deref().map(parse_tiers).transpose()?;
        let tier_total = tiers.as_ref().map(|t| t.iter().map(|(c, k)| c * k).sum());
        let columns = self.columns.or(tier_total).unwrap_or(d.columns);

        let chosen = [self.nu.is_some(), !self.layouts.is_empty(), tiers.is_some(), self.random_layouts];
        if chosen.iter().filter(|&&c| c).count() > 1 {
            return Err(usage("--nu, --layout, --tiers and --random-layouts are mutually exclusive"));
        }
        let shuffle = if let Some(t) = &tiers {
            ShuffleSpec::Counts(tiered_counts(m, t, seed)?)
        } else if !self.layouts.is_empty() {
            let mut counts: Vec<_> = self.layouts.iter().map(|t| parse_layout(t, m)).collect::<Result<_>>()?;
            let given: usize = counts.iter().map(|c| c.1).sum();
            if given > columns {
                return Err(usage(format!("layouts cover {} columns; only {} exist", given, columns)));
            }
            if given < columns {
                counts.insert(0, (Permutation::identity(m), columns - given));
            }
            ShuffleSpec::Counts(counts)
        } else if self.random_layouts || (chosen == [false; 4] && d.random_layouts) {
            ShuffleSpec::Counts(random_counts(m, columns, seed))
        } else if let Some(nu) = self.nu.or(if m == 2 { d.nu } else { None }) {
            ShuffleSpec::TwoBlock { nu }
        } else {
            ShuffleSpec::Counts(vec![(Permutation::identity(m), columns)])
        };

        let params = ModelParams {
            q: self.q.unwrap_or(d.q),
            blocks,
            columns,
            lambda: self.lambda.unwrap_or(d.lambda),
            shuffle,
            restricted_prefix: self.restricted_prefix,
            distinguished_prefix: self.distinguished_prefix,
            seed,
        };
        params.validate()?;
        Ok(params)
    }
}
