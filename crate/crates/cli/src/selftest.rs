//! Reference experiments, rerun from fixed seeds.

use std::fmt::Write as _;

use clap::Args;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde_json::{json, Value};
use unshuffle_core::partition::distinct_subset_sums;
use unshuffle_core::prob::{monte_carlo, EventSpec};
use unshuffle_core::sync::{brute_force_sync, Embedding, SyncInstance};
use unshuffle_core::{
    generate, partition_profile, unshuffle2, unshuffle_m, AlignConfig, BlockStructure, ModelParams, Permutation,
    ShuffleSpec,
};

use crate::commands::{reconstructs, Outcome};
use crate::error::Result;
use crate::model_args::tiered_counts;
use crate::report::Report;

#[derive(Debug, Args)]
pub struct SelftestArgs {
    /// Seeds for the two-block experiment; the other experiments scale from it.
    #[arg(long, default_value_t = 100)]
    pub rounds: usize,
}

struct Check {
    name: &'static str,
    pass: bool,
    detail: String,
}

/// At least 90% of `total`.
fn enough(hits: usize, total: usize) -> bool {
    10 * hits >= 9 * total
}

fn two_block(rounds: usize, base: u64) -> Result<Check> {
    let mut exact = 0;
    for seed in base..base + rounds as u64 {
        let params = ModelParams::two_block(3, 40, 60, 80, 0.5, 0.3, seed)?;
        let (corpus, truth) = generate(&params, &mut params.rng())?;
        if let Ok(r) = unshuffle2(&corpus) {
            if r.n_hat == truth.shuffled_columns()
                && r.l1_hat == 40
                && r.noise_loci_hat(corpus.rows()) == truth.noise_loci
            {
                exact += 1;
            }
        }
    }
    Ok(Check { name: "two-block", pass: enough(exact, rounds), detail: format!("{}/{} exact", exact, rounds) })
}

fn profiles(base: u64) -> Result<Check> {
    let mut notes = Vec::new();
    let mut pass = true;
    for (lengths, expected) in [(&[3, 5, 6, 7][..], 12), (&[6, 9, 11, 12, 13][..], 30)] {
        let blocks = BlockStructure::new(lengths.to_vec())?;
        let all = Permutation::all(blocks.count());
        let params = ModelParams {
            q: 1 << 32,
            blocks: blocks.clone(),
            columns: all.len(),
            lambda: 0.0,
            shuffle: ShuffleSpec::Counts(all.into_iter().map(|s| (s, 1)).collect()),
            restricted_prefix: false,
            distinguished_prefix: false,
            seed: base,
        };
        let (corpus, _) = generate(&params, &mut params.rng())?;
        let prof = partition_profile(&corpus);
        let l = corpus.rows();
        let mirrored = (1..=l).all(|ell| prof.at(ell) == prof.at(l + 1 - ell));
        let (distinct, sums) = distinct_subset_sums(&blocks)?;
        let bounded = sums.windows(2).all(|w| prof.at(w[1]) <= blocks.count() + prof.at(w[0]));
        pass &= prof.max() == expected && mirrored && distinct && bounded;
        notes.push(format!("{:?} max {} (want {})", lengths, prof.max(), expected));
    }
    Ok(Check { name: "profiles", pass, detail: notes.join("; ") })
}

fn six_block(rounds: usize, base: u64) -> Result<Check> {
    let config = AlignConfig::default();
    let mut perfect = 0;
    for seed in base..base + rounds as u64 {
        let params = ModelParams {
            q: 256,
            blocks: BlockStructure::new(vec![11, 11, 12, 12, 16, 20])?,
            columns: 80,
            lambda: 0.5,
            shuffle: ShuffleSpec::Counts(tiered_counts(6, &[(16, 1), (8, 2), (4, 4), (2, 8), (1, 16)], seed)?),
            restricted_prefix: true,
            distinguished_prefix: false,
            seed,
        };
        let (corpus, truth) = generate(&params, &mut params.rng())?;
        if let Ok(r) = unshuffle_m(&corpus, &config) {
            if r.m_hat == 6 && reconstructs(&corpus, &truth, &r, config.reference_column) {
                perfect += 1;
            }
        }
    }
    Ok(Check { name: "six-block", pass: enough(perfect, rounds), detail: format!("{}/{} perfect", perfect, rounds) })
}

fn closed_form(trials: usize, base: u64) -> Result<Check> {
    let params = ModelParams::two_block(3, 160, 240, 20, 0.5, 0.3, base)?;
    let r = monte_carlo(EventSpec::RowIsShuffleSplit, &params, trials, &mut ChaCha8Rng::seed_from_u64(base))?;
    Ok(Check {
        name: "closed-form",
        pass: r.agrees,
        detail: format!("closed {:.5} vs Monte Carlo {:.5} +- {:.5}", r.closed_form, r.mc_estimate, r.mc_stderr),
    })
}

fn sync(rounds: usize, base: u64) -> Result<Check> {
    let blocks = BlockStructure::new(vec![2, 3, 4])?;
    let mut aligned = 0;
    for seed in base..base + rounds as u64 {
        let params = ModelParams {
            q: 17,
            blocks: blocks.clone(),
            columns: 4,
            lambda: 0.0,
            shuffle: ShuffleSpec::Counts(Permutation::all(3).into_iter().take(4).map(|s| (s, 1)).collect()),
            restricted_prefix: false,
            distinguished_prefix: false,
            seed,
        };
        let (corpus, _) = generate(&params, &mut params.rng())?;
        let inst = SyncInstance::from_corpus(&corpus, blocks.clone(), Embedding::OneHot)?;
        let best = brute_force_sync(&inst, &blocks)?;
        let cols = best
            .layouts(&blocks)?
            .iter()
            .zip(corpus.columns())
            .map(|(g, c)| g.apply_inverse(c))
            .collect::<unshuffle_core::Result<Vec<_>>>()?;
        if cols.iter().all(|c| c == &cols[0]) {
            aligned += 1;
        }
    }
    Ok(Check { name: "sync", pass: aligned == rounds, detail: format!("{}/{} aligned", aligned, rounds) })
}

pub fn run(seed: u64, a: &SelftestArgs) -> Result<Outcome> {
    let rounds = a.rounds.max(2);
    let checks = [
        two_block(rounds, seed)?,
        profiles(seed)?,
        six_block(rounds / 2, seed)?,
        closed_form(100 * rounds, seed)?,
        sync((rounds / 5).max(1), seed)?,
    ];
    let mut summary = String::new();
    let mut detail = serde_json::Map::new();
    for c in &checks {
        let _ = writeln!(summary, "check {} {} {}", c.name, if c.pass { "PASS" } else { "FAIL" }, c.detail);
        detail.insert(c.name.into(), json!({ "pass": c.pass, "detail": c.detail }));
    }
    let success = checks.iter().all(|c| c.pass);
    let report = Report {
        command: "selftest".into(),
        seed,
        success,
        params: json!({ "rounds": rounds }),
        result: Value::Object(detail),
        diagnostics: json!({}),
    };
    Ok(Outcome { report, summary })
}
