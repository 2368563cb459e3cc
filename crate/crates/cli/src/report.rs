//! JSON reports, ground-truth sidecars and partition profile CSV.

use std::fmt::Write as _;
use std::path::Path;

use serde::{Deserialize, Serialize};
use serde_json::Value;
use unshuffle_core::{BlockStructure, GroundTruth, PartitionProfile, Permutation};

use crate::error::{CliError, Result};
use crate::io::{read_json, write_atomic, write_json};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Report {
    pub command: String,
    pub seed: u64,
    pub success: bool,
    pub params: Value,
    pub result: Value,
    pub diagnostics: Value,
}

pub fn write_report(report: &Report, path: &Path) -> Result<()> {
    write_json(report, path)
}

pub fn read_report(path: &Path) -> Result<Report> {
    read_json(path)
}

/// What `gen` knows about the corpus it wrote. Noise loci are 1-based and
/// sorted; permutations are 1-based one-line forms, one per column.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TruthFile {
    pub seed: u64,
    pub q: u64,
    pub lengths: BlockStructure,
    pub template: Vec<u32>,
    pub noise_loci: Vec<usize>,
    pub column_perms: Vec<Permutation>,
}

impl TruthFile {
    pub fn new(truth: &GroundTruth, q: u64, seed: u64) -> Self {
        TruthFile {
            seed,
            q,
            lengths: truth.blocks.clone(),
            template: truth.template.clone(),
            noise_loci: truth.noise_loci.iter().map(|l| l + 1).collect(),
            column_perms: truth.column_perms.clone(),
        }
    }

    pub fn ground_truth(&self) -> Result<GroundTruth> {
        let rows = self.lengths.total();
        if self.template.len() != rows {
            return Err(CliError::Usage(format!("truth template has {} entries for {} rows", self.template.len(), rows)));
        }
        if let Some(bad) = self.noise_loci.iter().find(|&&l| l == 0 || l > rows) {
            return Err(CliError::Usage(format!("truth noise locus {} outside 1..={}", bad, rows)));
        }
        if let Some(p) = self.column_perms.iter().find(|p| p.len() != self.lengths.count()) {
            return Err(CliError::Usage(format!("truth permutation {:?} does not act on {} blocks", p, self.lengths.count())));
        }
        Ok(GroundTruth {
            blocks: self.lengths.clone(),
            template: self.template.clone(),
            noise_loci: self.noise_loci.iter().map(|l| l - 1).collect(),
            column_perms: self.column_perms.clone(),
        })
    }

    pub fn load(path: &Path) -> Result<Self> {
        read_json(path)
    }
}

pub fn profile_csv(profile: &PartitionProfile) -> String {
    let mut out = String::from("row,size\n");
    for (r, s) in profile.sizes.iter().enumerate() {
        let _ = writeln!(out, "{},{}", r + 1, s);
    }
    out
}

pub fn write_profile(profile: &PartitionProfile, path: &Path) -> Result<()> {
    write_atomic(path, profile_csv(profile).as_bytes())
}
