//! Closed-form probabilities for the row-partition events of the shuffle
//! model, and a seeded Monte Carlo harness that checks them on generated
//! corpora.
//!
//! Exponents `Nν`, `N(1-ν)` and `Lλ` are the exact integer counts the
//! generator realizes. Powers of `q` are evaluated as `exp(e · ln q)` so
//! large negative exponents underflow to zero smoothly.

use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::corpus::ShuffledCorpus;
use crate::error::{Error, Result};
use crate::model::{generate, GroundTruth, ModelParams};
use crate::partition::row_partition;
use crate::perm::Permutation;
use crate::unshuffle2::estimate_l_sets;

fn check_q(q: u64) -> Result<()> {
    if q < 2 {
        return Err(Error::Domain(format!("q = {} < 2", q)));
    }
    Ok(())
}

fn check_split(columns: usize, shuffled: usize) -> Result<()> {
    if shuffled == 0 || shuffled >= columns {
        return Err(Error::Domain(format!("need 0 < |N| < N, got {} of {}", shuffled, columns)));
    }
    Ok(())
}

fn check_fraction(name: &str, v: f64) -> Result<()> {
    if !(0.0..=1.0).contains(&v) {
        return Err(Error::Domain(format!("{} = {} outside [0, 1]", name, v)));
    }
    Ok(())
}

/// `q^e`.
#[inline]
fn qpow(q: u64, e: f64) -> f64 {
    libm::exp(e * libm::log(q as f64))
}

/// `(2^{r-1} - 1) q^{1-r}`: chance that `r` uniform symbols take exactly two
/// values, divided by `1 - 1/q`.
fn two_value_factor(q: u64, r: usize) -> f64 {
    if r < 2 {
        return 0.0;
    }
    let e = (r - 1) as f64;
    libm::exp(e * (libm::log(2.0) - libm::log(q as f64))) - qpow(q, -e)
}

/// Probability that a row takes exactly two values, split as the shuffled
/// set and its complement.
pub fn p_n_closed(q: u64, columns: usize, shuffled: usize, lambda: f64) -> Result<f64> {
    check_q(q)?;
    check_split(columns, shuffled)?;
    check_fraction("lambda", lambda)?;
    let lb = 1.0 - lambda;
    let rest = columns - shuffled;
    let inner = lb * lb
        + lb * lambda * (qpow(q, 1.0 - shuffled as f64) + qpow(q, 1.0 - rest as f64))
        + lambda * lambda * qpow(q, 2.0 - columns as f64);
    Ok((1.0 - 1.0 / q as f64) * inner)
}

/// Probability that a row takes exactly two values, any split.
pub fn p2_closed(q: u64, columns: usize, shuffled: usize, lambda: f64) -> Result<f64> {
    let p_n = p_n_closed(q, columns, shuffled, lambda)?;
    let lb = 1.0 - lambda;
    let rest = columns - shuffled;
    let f_in = two_value_factor(q, shuffled);
    let f_out = two_value_factor(q, rest);
    let extra = (lb * lambda + lambda * lambda * qpow(q, 1.0 - rest as f64)) * f_in
        + (lambda * lb + lambda * lambda * qpow(q, 1.0 - shuffled as f64)) * f_out
        + lambda * lambda * f_out * f_in;
    Ok(p_n + 2.0 * (1.0 - 1.0 / q as f64) * extra)
}

/// Decay scale `(q/2)^{-N min(ν, 1-ν)}` of `p_2 - p_N`.
pub fn gap_decay(q: u64, columns: usize, nu: f64) -> Result<f64> {
    if q <= 2 {
        return Err(Error::Domain(format!("decay bound is vacuous for q = {}", q)));
    }
    check_fraction("nu", nu)?;
    let m = nu.min(1.0 - nu);
    Ok(libm::pow(q as f64 / 2.0, -(columns as f64) * m))
}

/// Probabilities that the two conserved-row estimates are exact, given the
/// true shuffled set: `((1 - q^{1-N(1-ν)})^{Lλ}, (1 - q^{1-Nν})^{Lλ})`.
pub fn l_sets_exact_prob(q: u64, columns: usize, shuffled: usize, loci: usize) -> Result<(f64, f64)> {
    check_q(q)?;
    check_split(columns, shuffled)?;
    let rest = columns - shuffled;
    let k = loci as f64;
    let p0 = libm::pow(1.0 - qpow(q, 1.0 - rest as f64), k);
    let p1 = libm::pow(1.0 - qpow(q, 1.0 - shuffled as f64), k);
    Ok((p0, p1))
}

/// Probability that `k` uniform symbols are pairwise distinct,
/// `C(q,k) k! / q^k`, with the approximation `exp(-k²/2q)`.
pub fn prefix_partition_prob(q: u64, k: usize) -> Result<(f64, f64)> {
    check_q(q)?;
    if k == 0 {
        return Err(Error::Domain("k must be at least 1".into()));
    }
    let approx = libm::exp(-((k * k) as f64) / (2.0 * q as f64));
    if k as u64 > q {
        return Ok((0.0, approx));
    }
    let qf = q as f64;
    let exact = (0..k).map(|i| 1.0 - i as f64 / qf).product();
    Ok((exact, approx))
}

/// Stirling number of the second kind `S(r, s)`.
pub fn stirling2(r: usize, s: usize) -> Result<u128> {
    if s > r {
        return Ok(0);
    }
    // row[j] = S(i, j)
    let mut row = alloc::vec![0u128; s + 1];
    row[0] = 1;
    for i in 1..=r {
        for j in (1..=s.min(i)).rev() {
            let grown = (j as u128)
                .checked_mul(row[j])
                .and_then(|v| v.checked_add(row[j - 1]))
                .ok_or_else(|| Error::TooLarge(format!("S({}, {}) overflows u128", r, s)))?;
            row[j] = grown;
        }
        row[0] = 0;
    }
    Ok(row[s])
}

/// `S(r,s) · C(q,s) · s! / q^r`: chance that `r` uniform symbols take exactly `s` values.
pub fn value_count_prob(q: u64, r: usize, s: usize) -> Result<f64> {
    check_q(q)?;
    let st = stirling2(r, s)? as f64;
    let falling: f64 = (0..s).map(|i| (q as f64 - i as f64).max(0.0)).product();
    Ok(st * falling * qpow(q, -(r as f64)))
}

/// Events the harness can count, each evaluated on the first row or on the
/// corpus as a whole.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum EventSpec {
    /// Row 1 is two-valued with inverse images the shuffled set and its complement.
    RowIsShuffleSplit,
    /// Row 1 takes exactly two values.
    RowTwoValued,
    /// Row 1 is two-valued but split some other way.
    RowTwoValuedOther,
    /// The conserved-row estimate of the unshuffled side is exact (true shuffled set used).
    UnshuffledLociExact,
    /// The conserved-row estimate of the shuffled side is exact (true shuffled set used).
    ShuffledLociExact,
    /// Row 1's partition equals the partition by leading block.
    PrefixPartitionIdentical,
}

impl EventSpec {
    pub fn name(&self) -> &'static str {
        match self {
            EventSpec::RowIsShuffleSplit => "p_n",
            EventSpec::RowTwoValued => "p2",
            EventSpec::RowTwoValuedOther => "gap",
            EventSpec::UnshuffledLociExact => "l_sets0",
            EventSpec::ShuffledLociExact => "l_sets1",
            EventSpec::PrefixPartitionIdentical => "prefix",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ProbReport {
    pub event: String,
    pub closed_form: f64,
    pub mc_estimate: f64,
    /// `sqrt(p̂(1-p̂)/trials)`.
    pub mc_stderr: f64,
    pub hits: usize,
    pub trials: usize,
    /// `|closed - p̂| ≤ 3 max(stderr, sqrt(p(1-p)/trials))`.
    pub agrees: bool,
}

pub const MIN_TRIALS: usize = 100;

/// The two-block split `(shuffled count, first block length)` of a model.
fn two_block_split(params: &ModelParams) -> Result<(usize, usize)> {
    if params.blocks.count() != 2 {
        return Err(Error::Domain(format!("two-block event on {} blocks", params.blocks.count())));
    }
    let shuffled = params
        .counts()?
        .iter()
        .filter(|(p, _)| !p.is_identity())
        .map(|(_, k)| k)
        .sum();
    Ok((shuffled, params.blocks.lengths()[0]))
}

/// Frequency of `event` over `trials` independent corpora.
///
/// Trial `t` draws its corpus from a ChaCha8 stream seeded by the `t`-th
/// output of `rng`, so a report depends only on the caller's seed.
pub fn monte_carlo<R: Rng + ?Sized>(
    event: EventSpec,
    params: &ModelParams,
    trials: usize,
    rng: &mut R,
) -> Result<ProbReport> {
    if trials < MIN_TRIALS {
        return Err(Error::Domain(format!("{} trials; at least {} needed", trials, MIN_TRIALS)));
    }
    params.validate()?;
    let lambda_eff = params.noise_count() as f64 / params.blocks.total() as f64;

    let mut closed_sum = 0.0;
    let mut fixed_closed = None;
    match event {
        EventSpec::RowIsShuffleSplit | EventSpec::RowTwoValued | EventSpec::RowTwoValuedOther => {
            let (s, _) = two_block_split(params)?;
            let p_n = p_n_closed(params.q, params.columns, s, lambda_eff)?;
            let p2 = p2_closed(params.q, params.columns, s, lambda_eff)?;
            fixed_closed = Some(match event {
                EventSpec::RowIsShuffleSplit => p_n,
                EventSpec::RowTwoValued => p2,
                _ => p2 - p_n,
            });
        }
        EventSpec::UnshuffledLociExact | EventSpec::ShuffledLociExact => {
            let (s, _) = two_block_split(params)?;
            let (p0, p1) = l_sets_exact_prob(params.q, params.columns, s, params.noise_count())?;
            fixed_closed = Some(if event == EventSpec::UnshuffledLociExact { p0 } else { p1 });
        }
        EventSpec::PrefixPartitionIdentical => {
            if !params.restricted_prefix {
                return Err(Error::Domain("prefix partition event needs a restricted prefix".into()));
            }
            if params.distinguished_prefix {
                fixed_closed = Some(1.0);
            }
        }
    }

    let mut hits = 0;
    for _ in 0..trials {
        let mut trial_rng = ChaCha8Rng::seed_from_u64(rng.next_u64());
        let (corpus, truth) = generate(params, &mut trial_rng)?;
        if event == EventSpec::PrefixPartitionIdentical && fixed_closed.is_none() {
            let k = leading_blocks(&truth).len();
            closed_sum += prefix_partition_prob(params.q, k)?.0;
        }
        if event_holds(event, &corpus, &truth)? {
            hits += 1;
        }
    }

    let closed_form = fixed_closed.unwrap_or(closed_sum / trials as f64);
    let t = trials as f64;
    let p_hat = hits as f64 / t;
    let mc_stderr = libm::sqrt(p_hat * (1.0 - p_hat) / t);
    let model_stderr = libm::sqrt(closed_form * (1.0 - closed_form) / t);
    let agrees = libm::fabs(closed_form - p_hat) <= 3.0 * mc_stderr.max(model_stderr);
    Ok(ProbReport {
        event: event.name().into(),
        closed_form,
        mc_estimate: p_hat,
        mc_stderr,
        hits,
        trials,
        agrees,
    })
}

/// First block of every column, i.e. `Π(n)(1)` (0-based), deduplicated.
fn leading_blocks(truth: &GroundTruth) -> Vec<usize> {
    let mut firsts: Vec<usize> = truth.column_perms.iter().map(|p| p.image(0)).collect();
    firsts.sort_unstable();
    firsts.dedup();
    firsts
}

fn event_holds(event: EventSpec, corpus: &ShuffledCorpus, truth: &GroundTruth) -> Result<bool> {
    let shuffled = || truth.shuffled_columns();
    Ok(match event {
        EventSpec::RowIsShuffleSplit | EventSpec::RowTwoValued | EventSpec::RowTwoValuedOther => {
            let part = row_partition(corpus, 1)?;
            if part.len() != 2 {
                return Ok(false);
            }
            let s = shuffled();
            let is_split = part.parts[0] == s || part.parts[1] == s;
            match event {
                EventSpec::RowIsShuffleSplit => is_split,
                EventSpec::RowTwoValued => true,
                _ => !is_split,
            }
        }
        EventSpec::UnshuffledLociExact | EventSpec::ShuffledLociExact => {
            let (l0, l1) = estimate_l_sets(corpus, &shuffled());
            let l = corpus.rows();
            if event == EventSpec::UnshuffledLociExact {
                let expected: Vec<usize> = (0..l).filter(|&r| !truth.is_noise(r)).collect();
                l0 == expected
            } else {
                let pi = Permutation::cyclic_shift(l, truth.blocks.lengths()[0]);
                let expected: Vec<usize> = (0..l).filter(|&r| !truth.is_noise(pi.image(r))).collect();
                l1 == expected
            }
        }
        EventSpec::PrefixPartitionIdentical => {
            let part = row_partition(corpus, 1)?;
            let firsts: Vec<usize> = truth.column_perms.iter().map(|p| p.image(0)).collect();
            same_partition(&part.labels(corpus.cols()), &firsts)
        }
    })
}

fn same_partition(a: &[usize], b: &[usize]) -> bool {
    let n = a.len();
    (0..n).all(|i| (0..i).all(|j| (a[i] == a[j]) == (b[i] == b[j])))
}
