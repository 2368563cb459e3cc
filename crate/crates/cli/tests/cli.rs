use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;
use unshuffle::{load_corpus, read_report, CorpusSpec, TruthFile};
use unshuffle_core::{unshuffle2, unshuffle_m, AlignConfig};

fn cli(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_unshuffle")).args(args).output().unwrap()
}

fn code(out: &Output) -> i32 {
    out.status.code().unwrap()
}

fn stderr(out: &Output) -> String {
    String::from_utf8_lossy(&out.stderr).into_owned()
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

fn two_block_corpus(dir: &Path, seed: &str) -> std::path::PathBuf {
    let corpus = dir.join("c.bin");
    let out = cli(&[
        "gen", "--q", "3", "--lengths", "40,60", "--n", "80", "--lambda", "0.5", "--nu", "0.3", "--seed", seed,
        "--out", s(&corpus),
    ]);
    assert_eq!(code(&out), 0, "{}", stderr(&out));
    corpus
}

#[test]
fn usage_errors_exit_two() {
    assert_eq!(code(&cli(&["gen", "--no-such-flag"])), 2);
    assert_eq!(code(&cli(&["frobnicate"])), 2);
    assert_eq!(code(&cli(&[])), 2);
    assert_eq!(code(&cli(&["--help"])), 0);
    assert_eq!(code(&cli(&["gen", "--lengths", "3,4"])), 2, "gen without --out");
    assert_eq!(code(&cli(&["verify-prob", "p_n", "--trials", "10"])), 2);
}

#[test]
fn two_block_flow_scores_against_truth() {
    let dir = tempfile::tempdir().unwrap();
    let corpus = two_block_corpus(dir.path(), "7");
    let truth = dir.path().join("c.bin.truth.json");
    let report = dir.path().join("r.json");
    let aligned = dir.path().join("a.bin");
    let out = cli(&[
        "unshuffle2", s(&corpus), "--record-len", "100", "--truth", s(&truth), "--json-report", s(&report),
        "--out", s(&aligned), "--seed", "7",
    ]);
    assert_eq!(code(&out), 0, "{}", stderr(&out));

    let r = read_report(&report).unwrap();
    assert!(r.success);
    assert_eq!(r.seed, 7);
    assert_eq!(r.result["l1_hat"], 40);
    assert_eq!(r.diagnostics["truth"]["n_exact"], true);

    let spec = CorpusSpec::existing(&corpus, Some(100), 1, None).unwrap();
    let input = load_corpus(&spec).unwrap();
    let expected = unshuffle2(&input).unwrap().aligned;
    let reloaded = load_corpus(&CorpusSpec::existing(&aligned, Some(100), 1, None).unwrap()).unwrap();
    assert_eq!(reloaded, expected);

    let file = TruthFile::load(&truth).unwrap();
    assert_eq!(file.seed, 7);
    assert_eq!(file.noise_loci.len(), 50);
}

#[test]
fn six_block_flow_round_trips_aligned_output() {
    let dir = tempfile::tempdir().unwrap();
    let corpus = dir.path().join("six");
    let out = cli(&[
        "gen", "--q", "256", "--lengths", "11,11,12,12,16,20", "--tiers", "16,8x2,4x4,2x8,1x16", "--lambda", "0.5",
        "--restricted-prefix", "--per-file", "--seed", "1", "--out", s(&corpus),
        "--truth", s(&dir.path().join("t.json")),
    ]);
    assert_eq!(code(&out), 0, "{}", stderr(&out));
    assert_eq!(fs::read_dir(&corpus).unwrap().count(), 80);

    let aligned = dir.path().join("aligned");
    let report = dir.path().join("r.json");
    let out = cli(&[
        "unshuffle", s(&corpus), "--truth", s(&dir.path().join("t.json")), "--out", s(&aligned),
        "--json-report", s(&report),
    ]);
    assert_eq!(code(&out), 0, "{}", stderr(&out));
    let r = read_report(&report).unwrap();
    assert_eq!(r.result["m_hat"], 6);
    assert_eq!(r.diagnostics["truth"]["perfect"], true);
    let mut lengths: Vec<u64> = r.result["lengths"].as_array().unwrap().iter().map(|v| v.as_u64().unwrap()).collect();
    lengths.sort();
    assert_eq!(lengths, [11, 11, 12, 12, 16, 20]);

    let input = load_corpus(&CorpusSpec::existing(&corpus, None, 1, None).unwrap()).unwrap();
    let expected = unshuffle_m(&input, &AlignConfig::default()).unwrap().aligned;
    let reloaded = load_corpus(&CorpusSpec::existing(&aligned, None, 1, None).unwrap()).unwrap();
    assert_eq!(reloaded, expected);
}

#[test]
fn identical_flags_give_identical_bytes() {
    let dir = tempfile::tempdir().unwrap();
    let corpus = dir.path().join("c.bin");
    let report = dir.path().join("r.json");
    let truth = dir.path().join("c.bin.truth.json");
    let args = [
        "gen", "--q", "1000", "--word-bytes", "2", "--lengths", "5,6,7", "--random-layouts", "--n", "30",
        "--lambda", "0.3", "--restricted-prefix", "--seed", "99", "--out", s(&corpus), "--json-report", s(&report),
    ];
    let mut runs = Vec::new();
    for _ in 0..2 {
        let out = cli(&args);
        assert_eq!(code(&out), 0, "{}", stderr(&out));
        runs.push([fs::read(&corpus).unwrap(), fs::read(&truth).unwrap(), fs::read(&report).unwrap(), out.stdout]);
    }
    assert_eq!(runs[0], runs[1]);
    assert_eq!(runs[0][0].len(), 30 * 18 * 2);
    let c = load_corpus(&CorpusSpec::existing(&corpus, Some(18), 2, Some(1000)).unwrap()).unwrap();
    assert_eq!((c.rows(), c.cols(), c.q()), (18, 30, 1000));

    let other = cli(&["gen", "--q", "1000", "--word-bytes", "2", "--lengths", "5,6,7", "--random-layouts", "--n", "30",
        "--lambda", "0.3", "--restricted-prefix", "--seed", "100", "--out", s(&corpus)]);
    assert_eq!(code(&other), 0);
    assert_ne!(fs::read(&corpus).unwrap(), runs[0][0]);
}

#[test]
fn malformed_and_empty_inputs_name_the_file() {
    let dir = tempfile::tempdir().unwrap();
    let ragged = dir.path().join("ragged.bin");
    fs::write(&ragged, [0u8; 11]).unwrap();
    let out = cli(&["analyze", s(&ragged), "--record-len", "4"]);
    assert_eq!(code(&out), 2);
    let err = stderr(&out);
    assert!(err.contains("ragged.bin") && err.contains("offset 8"), "{}", err);

    let empty = dir.path().join("empty.bin");
    fs::write(&empty, []).unwrap();
    let out = cli(&["unshuffle", s(&empty), "--record-len", "4"]);
    assert_eq!(code(&out), 2);
    assert!(stderr(&out).contains("empty.bin"));

    let out = cli(&["analyze", s(&ragged)]);
    assert_eq!(code(&out), 2, "concatenated corpus without --record-len");
}

#[test]
fn solver_failure_exits_one_with_report() {
    let dir = tempfile::tempdir().unwrap();
    let flat = dir.path().join("flat.bin");
    fs::write(&flat, [7u8; 40]).unwrap();
    let report = dir.path().join("r.json");
    let out = cli(&["unshuffle2", s(&flat), "--record-len", "4", "--json-report", s(&report), "--seed", "3"]);
    assert_eq!(code(&out), 1, "{}", stderr(&out));
    let r = read_report(&report).unwrap();
    assert!(!r.success);
    assert_eq!(r.seed, 3);
    assert!(r.result["error"].is_string());
}

#[test]
fn analyze_writes_profile_csv() {
    let dir = tempfile::tempdir().unwrap();
    let corpus = two_block_corpus(dir.path(), "2");
    let csv = dir.path().join("p.csv");
    let report = dir.path().join("r.json");
    let out = cli(&["analyze", s(&corpus), "--record-len", "100", "--q", "3", "--out", s(&csv), "--json-report", s(&report)]);
    assert_eq!(code(&out), 0, "{}", stderr(&out));
    let text = fs::read_to_string(&csv).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("row,size"));
    let rows: Vec<(usize, usize)> = lines
        .map(|l| {
            let (a, b) = l.split_once(',').unwrap();
            (a.parse().unwrap(), b.parse().unwrap())
        })
        .collect();
    assert_eq!(rows.len(), 100);
    assert!(rows.iter().enumerate().all(|(i, &(r, size))| r == i + 1 && (1..=3).contains(&size)));
    let r: Value = serde_json::from_slice(&fs::read(&report).unwrap()).unwrap();
    assert!(!r["result"]["two_valued_rows"].as_array().unwrap().is_empty());
}

#[test]
fn verify_prob_and_sync_demo_report() {
    let dir = tempfile::tempdir().unwrap();
    let report = dir.path().join("r.json");
    let out = cli(&["verify-prob", "l_sets0", "--lengths", "50,50", "--trials", "2000", "--seed", "4", "--json-report", s(&report)]);
    assert_eq!(code(&out), 0, "{}", stderr(&out));
    let r = read_report(&report).unwrap();
    assert_eq!(r.result["agrees"], true);
    assert_eq!(r.result["trials"], 2000);

    let out = cli(&["sync-demo", "--seed", "5", "--json-report", s(&report)]);
    assert_eq!(code(&out), 0, "{}", stderr(&out));
    let r = read_report(&report).unwrap();
    assert_eq!(r.result["aligned_consistent"], true);
    assert_eq!(r.result["objective"], r.result["truth_objective"]);
    assert_eq!(r.result["sigmas"].as_array().unwrap().len(), 4);
}

#[test]
fn selftest_passes_on_short_run() {
    let out = cli(&["selftest", "--rounds", "10"]);
    let text = String::from_utf8_lossy(&out.stdout);
    assert_eq!(code(&out), 0, "{}{}", text, stderr(&out));
    assert_eq!(text.lines().filter(|l| l.contains(" PASS ")).count(), 5, "{}", text);
}
