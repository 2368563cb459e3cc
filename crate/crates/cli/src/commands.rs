//! Command-line surface.

use std::ffi::OsString;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde_json::{json, Value};
use unshuffle_core::prob::{monte_carlo, EventSpec};
use unshuffle_core::sync::{brute_force_sync, objective_layouts, Embedding, PotentialAssignment, SyncInstance};
use unshuffle_core::partition::two_valued_rows;
use unshuffle_core::{
    generate, partition_profile, recover_block_structure, unshuffle2, unshuffle_m, AlignConfig, BlockStructure,
    GroundTruth, MUnshuffleResult, ShuffledCorpus,
};

use crate::error::{CliError, Result};
use crate::io::{load_corpus, write_corpus, CorpusSpec, Layout};
use crate::model_args::{Defaults, ModelArgs};
use crate::report::{profile_csv, write_profile, write_report, Report, TruthFile};
use crate::selftest;

#[derive(Debug, Parser)]
#[command(name = "unshuffle", version, about = "Recover block permutations hidden in fixed-length record corpora")]
pub struct Cli {
    /// Seed for every random draw.
    #[arg(long, global = true, default_value_t = 0)]
    pub seed: u64,
    /// Record length in symbols.
    #[arg(long, global = true)]
    pub record_len: Option<usize>,
    /// Bytes per little-endian symbol.
    #[arg(long, global = true, default_value_t = 1)]
    pub word_bytes: usize,
    /// Main output: the corpus for gen and the solvers, the profile CSV for analyze.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    /// Also write a JSON report here.
    #[arg(long, global = true)]
    pub json_report: Option<PathBuf>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Sample a shuffled corpus and write it with a ground-truth sidecar.
    Gen(GenArgs),
    /// Partition profile and two-valued rows.
    Analyze(InputArgs),
    /// Undo a two-block shuffle.
    Unshuffle2(SolveArgs),
    /// Undo an M-block shuffle with a restricted prefix.
    Unshuffle(UnshuffleArgs),
    /// Compare a closed-form probability with a Monte Carlo estimate.
    VerifyProb(VerifyArgs),
    /// Exhaustive synchronization on a tiny corpus.
    SyncDemo(SyncArgs),
    /// Rerun the reference experiments.
    Selftest(selftest::SelftestArgs),
}

#[derive(Debug, Args)]
pub struct GenArgs {
    #[command(flatten)]
    pub model: ModelArgs,
    /// Ground-truth sidecar path; defaults to OUT.truth.json.
    #[arg(long)]
    pub truth: Option<PathBuf>,
    /// Write a directory with one file per record.
    #[arg(long)]
    pub per_file: bool,
}

#[derive(Debug, Args)]
pub struct InputArgs {
    /// Corpus file of concatenated records, or a directory with one file per record.
    pub input: PathBuf,
    /// Alphabet size when smaller than the word range.
    #[arg(long)]
    pub q: Option<u64>,
}

#[derive(Debug, Args)]
pub struct SolveArgs {
    #[command(flatten)]
    pub input: InputArgs,
    /// Ground-truth sidecar to score the recovery against.
    #[arg(long)]
    pub truth: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct UnshuffleArgs {
    #[command(flatten)]
    pub solve: SolveArgs,
    /// Row weights decay as BASE^-row; must exceed 1.
    #[arg(long, default_value_t = 2.0)]
    pub weight_base: f64,
    #[arg(long, default_value_t = 256)]
    pub max_iters: usize,
    /// Largest row partition still read as block structure [default: max(ceil(N/4), 2)].
    #[arg(long)]
    pub structured_max: Option<usize>,
    /// 1-based column the others are aligned to.
    #[arg(long, default_value_t = 1)]
    pub reference_column: usize,
    /// Do not cut blocks at rotation wrap points.
    #[arg(long)]
    pub no_wrap_split: bool,
    /// Skip realignment against the row-wise majority.
    #[arg(long)]
    pub no_majority_refine: bool,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum EventArg {
    /// Row 1 splits the columns exactly into shuffled and unshuffled.
    #[value(name = "p_n")]
    PN,
    /// Row 1 takes exactly two values.
    #[value(name = "p2")]
    P2,
    /// Row 1 is two-valued but split some other way.
    #[value(name = "gap")]
    Gap,
    /// The conserved rows of the unshuffled side are exactly its template rows.
    #[value(name = "l_sets0")]
    LSets0,
    /// The conserved rows of the shuffled side are exactly its template rows.
    #[value(name = "l_sets1")]
    LSets1,
    /// Row 1's partition equals the partition by leading block.
    #[value(name = "prefix")]
    Prefix,
}

impl From<EventArg> for EventSpec {
    fn from(e: EventArg) -> Self {
        match e {
            EventArg::PN => EventSpec::RowIsShuffleSplit,
            EventArg::P2 => EventSpec::RowTwoValued,
            EventArg::Gap => EventSpec::RowTwoValuedOther,
            EventArg::LSets0 => EventSpec::UnshuffledLociExact,
            EventArg::LSets1 => EventSpec::ShuffledLociExact,
            EventArg::Prefix => EventSpec::PrefixPartitionIdentical,
        }
    }
}

#[derive(Debug, Args)]
pub struct VerifyArgs {
    pub event: EventArg,
    #[command(flatten)]
    pub model: ModelArgs,
    #[arg(long, default_value_t = 10_000)]
    pub trials: usize,
}

#[derive(Debug, Args)]
pub struct SyncArgs {
    /// Corpus to synchronize; a fresh one is sampled when absent.
    pub input: Option<PathBuf>,
    #[command(flatten)]
    pub model: ModelArgs,
}

/// A finished command: its report and the text printed to stdout.
pub struct Outcome {
    pub report: Report,
    pub summary: String,
}

const GEN_DEFAULTS: Defaults =
    Defaults { q: 3, lengths: &[40, 60], columns: 80, lambda: 0.5, nu: Some(0.3), random_layouts: false };
// a long record keeps the without-replacement noise draw close to the independent-loci closed forms
const PROB_DEFAULTS: Defaults =
    Defaults { q: 3, lengths: &[160, 240], columns: 20, lambda: 0.5, nu: Some(0.3), random_layouts: false };
const SYNC_DEFAULTS: Defaults =
    Defaults { q: 17, lengths: &[2, 3, 4], columns: 4, lambda: 0.0, nu: None, random_layouts: true };

/// Parse `argv`, run, write the JSON report if asked, and map the result to an exit code.
pub fn run<I, T>(argv: I) -> ExitCode
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(2) } else { ExitCode::SUCCESS };
        }
    };
    match execute(&cli) {
        Ok(outcome) => {
            if let Some(path) = &cli.json_report {
                if let Err(e) = write_report(&outcome.report, path) {
                    eprintln!("error: {}", e);
                    return e.exit_code();
                }
            }
            print!("{}", outcome.summary);
            if outcome.report.success {
                ExitCode::SUCCESS
            } else {
                ExitCode::from(1)
            }
        }
        Err(e) => {
            eprintln!("error: {}", e);
            e.exit_code()
        }
    }
}

pub fn execute(cli: &Cli) -> Result<Outcome> {
    match &cli.command {
        Command::Gen(a) => gen(cli, a),
        Command::Analyze(a) => analyze(cli, a),
        Command::Unshuffle2(a) => solve_two(cli, a),
        Command::Unshuffle(a) => solve_m(cli, a),
        Command::VerifyProb(a) => verify_prob(cli, a),
        Command::SyncDemo(a) => sync_demo(cli, a),
        Command::Selftest(a) => selftest::run(cli.seed, a),
    }
}

fn report(cli: &Cli, command: &str, success: bool, params: Value, result: Value, diagnostics: Value) -> Report {
    Report { command: command.into(), seed: cli.seed, success, params, result, diagnostics }
}

fn one_based(v: &[usize]) -> Vec<usize> {
    v.iter().map(|x| x + 1).collect()
}

fn output_spec(cli: &Cli, path: &Path, layout: Layout) -> CorpusSpec {
    CorpusSpec { source: path.to_path_buf(), record_len: cli.record_len, word_bytes: cli.word_bytes, layout, q: None }
}

fn load(cli: &Cli, input: &InputArgs) -> Result<(ShuffledCorpus, CorpusSpec)> {
    let spec = CorpusSpec::existing(&input.input, cli.record_len, cli.word_bytes, input.q)?;
    Ok((load_corpus(&spec)?, spec))
}

fn load_truth(path: &Path, corpus: &ShuffledCorpus) -> Result<GroundTruth> {
    let truth = TruthFile::load(path)?.ground_truth()?;
    if truth.template.len() != corpus.rows() || truth.column_perms.len() != corpus.cols() {
        return Err(CliError::Usage(format!(
            "{}: truth is {}x{}, corpus is {}x{}",
            path.display(),
            truth.template.len(),
            truth.column_perms.len(),
            corpus.rows(),
            corpus.cols()
        )));
    }
    Ok(truth)
}

fn gen(cli: &Cli, a: &GenArgs) -> Result<Outcome> {
    let out = cli.out.as_ref().ok_or_else(|| CliError::Usage("gen needs --out".into()))?;
    let params = a.model.params(cli.seed, cli.record_len, &GEN_DEFAULTS)?;
    let layout = if a.per_file { Layout::FilePerRecord } else { Layout::Concatenated };
    let spec = output_spec(cli, out, layout);
    if params.q > spec.word_alphabet() {
        return Err(CliError::Usage(format!("q = {} needs wider words than --word-bytes {}", params.q, cli.word_bytes)));
    }
    let (corpus, truth) = generate(&params, &mut params.rng())?;
    write_corpus(&corpus, &spec)?;
    let truth_path = a.truth.clone().unwrap_or_else(|| {
        let mut p = out.clone().into_os_string();
        p.push(".truth.json");
        p.into()
    });
    let file = TruthFile::new(&truth, params.q, cli.seed);
    crate::io::write_json(&file, &truth_path)?;

    let shuffled = truth.shuffled_columns().len();
    let summary = format!(
        "wrote {} records of {} symbols to {}\ntruth: {} ({} shuffled columns, {} noise loci)\n",
        corpus.cols(),
        corpus.rows(),
        out.display(),
        truth_path.display(),
        shuffled,
        truth.noise_loci.len()
    );
    let params_json = json!({
        "q": params.q,
        "lengths": params.blocks,
        "columns": params.columns,
        "lambda": params.lambda,
        "restricted_prefix": params.restricted_prefix,
        "distinguished_prefix": params.distinguished_prefix,
        "word_bytes": cli.word_bytes,
    });
    let result = json!({
        "out": out,
        "truth": truth_path,
        "shuffled_columns": shuffled,
        "noise_loci": one_based(&truth.noise_loci),
    });
    Ok(Outcome { report: report(cli, "gen", true, params_json, result, json!({})), summary })
}

fn analyze(cli: &Cli, a: &InputArgs) -> Result<Outcome> {
    let (corpus, _) = load(cli, a)?;
    let profile = partition_profile(&corpus);
    let two = two_valued_rows(&corpus);
    let mut summary = match &cli.out {
        Some(path) => {
            write_profile(&profile, path)?;
            format!("profile written to {}\n", path.display())
        }
        None => profile_csv(&profile),
    };
    summary.push_str(&format!(
        "{} rows x {} columns; largest row partition {}; {} two-valued rows\n",
        corpus.rows(),
        corpus.cols(),
        profile.max(),
        two.len()
    ));
    let rows: Vec<Value> = two
        .iter()
        .map(|(r, p)| json!({ "row": r, "sizes": p.parts.iter().map(Vec::len).collect::<Vec<_>>() }))
        .collect();
    let result = json!({
        "rows": corpus.rows(),
        "columns": corpus.cols(),
        "max_partition": profile.max(),
        "profile": profile.sizes,
        "two_valued_rows": rows,
    });
    let params = json!({ "input": a.input, "q": corpus.q() });
    Ok(Outcome { report: report(cli, "analyze", true, params, result, json!({})), summary })
}

fn solve_two(cli: &Cli, a: &SolveArgs) -> Result<Outcome> {
    let (corpus, spec) = load(cli, &a.input)?;
    let truth = a.truth.as_deref().map(|p| load_truth(p, &corpus)).transpose()?;
    let params = json!({ "input": a.input.input, "q": corpus.q(), "record_len": corpus.rows() });
    let r = match unshuffle2(&corpus) {
        Ok(r) => r,
        Err(e) => {
            let summary = format!("unshuffle2 failed: {}\n", e);
            let result = json!({ "error": e.to_string() });
            return Ok(Outcome { report: report(cli, "unshuffle2", false, params, result, json!({})), summary });
        }
    };
    if let Some(out) = &cli.out {
        write_corpus(&r.aligned, &output_spec(cli, out, spec.layout))?;
    }
    let loci = r.noise_loci_hat(corpus.rows());
    let mut diagnostics = json!({
        "score": r.score,
        "l0_set": one_based(&r.l0_set),
        "l1_set": one_based(&r.l1_set),
    });
    if let Some(t) = &truth {
        diagnostics["truth"] = json!({
            "n_exact": r.n_hat == t.shuffled_columns(),
            "l1_exact": r.l1_hat == t.blocks.lengths()[0],
            "noise_loci_exact": loci == t.noise_loci,
        });
    }
    let summary = format!(
        "shuffled columns: {}\nfirst block length: {}\nalignment score: {}\n",
        r.n_hat.len(),
        r.l1_hat,
        r.score
    );
    let result = json!({
        "n_hat": one_based(&r.n_hat),
        "l1_hat": r.l1_hat,
        "l2_hat": r.l2_hat,
        "noise_loci": one_based(&loci),
    });
    Ok(Outcome { report: report(cli, "unshuffle2", true, params, result, diagnostics), summary })
}

/// Every aligned column equals the reference column's layout of its own
/// unshuffled content, and the recovered lengths follow that layout.
pub fn reconstructs(corpus: &ShuffledCorpus, truth: &GroundTruth, r: &MUnshuffleResult, reference: usize) -> bool {
    let Ok(found) = recover_block_structure(r) else { return false };
    if truth.blocks.permuted(&truth.column_perms[reference]).ok() != Some(found) {
        return false;
    }
    let Ok(lead) = truth.column_shuffle(reference) else { return false };
    (0..corpus.cols()).all(|k| {
        let own = truth.column_shuffle(k).and_then(|s| s.apply_inverse(corpus.column(k)));
        match own.and_then(|o| lead.apply(&o)) {
            Ok(v) => r.aligned.column(k) == &v[..],
            Err(_) => false,
        }
    })
}

fn solve_m(cli: &Cli, a: &UnshuffleArgs) -> Result<Outcome> {
    let (corpus, spec) = load(cli, &a.solve.input)?;
    let truth = a.solve.truth.as_deref().map(|p| load_truth(p, &corpus)).transpose()?;
    if a.reference_column == 0 || a.reference_column > corpus.cols() {
        return Err(CliError::Usage(format!("--reference-column must be in 1..={}", corpus.cols())));
    }
    let config = AlignConfig {
        weight_base: a.weight_base,
        max_iters: a.max_iters,
        structured_part_max: a.structured_max,
        reference_column: a.reference_column - 1,
        split_at_wraps: !a.no_wrap_split,
        majority_refine: !a.no_majority_refine,
    };
    let params = json!({
        "input": a.solve.input.input,
        "q": corpus.q(),
        "record_len": corpus.rows(),
        "weight_base": config.weight_base,
        "max_iters": config.max_iters,
        "structured_max": config.structured_part_max,
        "reference_column": a.reference_column,
        "split_at_wraps": config.split_at_wraps,
        "majority_refine": config.majority_refine,
    });
    let r = match unshuffle_m(&corpus, &config) {
        Ok(r) => r,
        Err(e) => {
            let summary = format!("unshuffle failed: {}\n", e);
            let result = json!({ "error": e.to_string() });
            return Ok(Outcome { report: report(cli, "unshuffle", false, params, result, json!({})), summary });
        }
    };
    if let Some(out) = &cli.out {
        write_corpus(&r.aligned, &output_spec(cli, out, spec.layout))?;
    }
    let mut diagnostics = json!({ "rounds": r.iteration_trace });
    if let Some(t) = &truth {
        diagnostics["truth"] = json!({ "perfect": reconstructs(&corpus, t, &r, config.reference_column) });
    }
    let mut summary = format!(
        "blocks: {}\nlengths: {}\n",
        r.m_hat,
        r.lengths_hat.iter().map(usize::to_string).collect::<Vec<_>>().join(",")
    );
    if let Some(f) = &r.failure {
        summary.push_str(&format!("stopped early: {}\n", f));
    }
    let result = json!({
        "m_hat": r.m_hat,
        "lengths": r.lengths_hat,
        "column_perms": r.column_perms,
        "failure": r.failure,
    });
    Ok(Outcome { report: report(cli, "unshuffle", r.succeeded(), params, result, diagnostics), summary })
}

fn verify_prob(cli: &Cli, a: &VerifyArgs) -> Result<Outcome> {
    let params = a.model.params(cli.seed, cli.record_len, &PROB_DEFAULTS)?;
    let event = EventSpec::from(a.event);
    let mut rng = ChaCha8Rng::seed_from_u64(cli.seed);
    let r = monte_carlo(event, &params, a.trials, &mut rng)?;
    let summary = format!(
        "{}: closed form {:.6}, Monte Carlo {:.6} +- {:.6} over {} trials: {}\n",
        r.event,
        r.closed_form,
        r.mc_estimate,
        r.mc_stderr,
        r.trials,
        if r.agrees { "agree" } else { "DISAGREE" }
    );
    let params_json = json!({
        "event": event.name(),
        "q": params.q,
        "lengths": params.blocks,
        "columns": params.columns,
        "lambda": params.lambda,
        "trials": a.trials,
    });
    let result = serde_json::to_value(&r).expect("probability report serializes");
    Ok(Outcome { report: report(cli, "verify-prob", r.agrees, params_json, result, json!({})), summary })
}

fn sync_demo(cli: &Cli, a: &SyncArgs) -> Result<Outcome> {
    let (corpus, blocks, truth, layout) = match &a.input {
        Some(path) => {
            let input = InputArgs { input: path.clone(), q: a.model.q };
            let (corpus, spec) = load(cli, &input)?;
            if a.model.lengths.is_empty() {
                return Err(CliError::Usage("sync-demo on a file needs --lengths".into()));
            }
            let blocks = BlockStructure::new(a.model.lengths.clone())?;
            (corpus, blocks, None, spec.layout)
        }
        None => {
            let params = a.model.params(cli.seed, cli.record_len, &SYNC_DEFAULTS)?;
            let (corpus, truth) = generate(&params, &mut params.rng())?;
            (corpus, params.blocks, Some(truth), Layout::Concatenated)
        }
    };
    let instance = SyncInstance::from_corpus(&corpus, blocks.clone(), Embedding::OneHot)?;
    let best = brute_force_sync(&instance, &blocks)?;
    let layouts = best.layouts(&blocks)?;
    let objective = objective_layouts(&layouts, &instance)?;
    let identity = PotentialAssignment::identity(corpus.cols(), blocks.count()).layouts(&blocks)?;
    let identity_objective = objective_layouts(&identity, &instance)?;
    let columns: Vec<Vec<u32>> = layouts
        .iter()
        .zip(corpus.columns())
        .map(|(g, c)| g.apply_inverse(c))
        .collect::<unshuffle_core::Result<_>>()?;
    let consistent = columns.iter().all(|c| c == &columns[0]);
    if let Some(out) = &cli.out {
        let aligned = ShuffledCorpus::new(corpus.q(), corpus.rows(), corpus.cols(), columns.concat())?;
        write_corpus(&aligned, &output_spec(cli, out, layout))?;
    }
    let truth_objective = match &truth {
        Some(t) => {
            let ls = t.column_perms.iter().map(|s| unshuffle_core::coherent_block_permutation(s, &blocks));
            Some(objective_layouts(&ls.collect::<unshuffle_core::Result<Vec<_>>>()?, &instance)?)
        }
        None => None,
    };
    let mut summary = format!(
        "minimizer objective {}; identity {}\naligned columns agree: {}\n",
        objective, identity_objective, consistent
    );
    if let Some(t) = truth_objective {
        summary.push_str(&format!("ground truth objective {}\n", t));
    }
    let params = json!({ "q": corpus.q(), "lengths": blocks, "columns": corpus.cols(), "embedding": "one-hot" });
    let result = json!({
        "sigmas": best.sigmas,
        "objective": objective,
        "identity_objective": identity_objective,
        "truth_objective": truth_objective,
        "aligned_consistent": consistent,
    });
    Ok(Outcome { report: report(cli, "sync-demo", true, params, result, json!({})), summary })
}
