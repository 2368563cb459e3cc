//! Recovering block-shuffled fixed-length records.
//!
//! A corpus is an `L × N` matrix of symbols; each column is one record whose
//! contiguous chunks were permuted as whole blocks. The crate generates such
//! corpora, analyzes row partitions, and undoes the shuffle in the two-block
//! and general cases.

#![no_std]

extern crate alloc;
#[cfg(any(test, feature = "std"))]
extern crate std;

pub mod corpus;
pub mod error;
pub mod model;
pub mod partition;
pub mod perm;
pub mod prob;
pub mod sync;
pub mod unshuffle2;
pub mod unshuffle_m;

pub use corpus::{apply_unshuffle, ShuffledCorpus};
pub use error::{Error, Result};
pub use model::{generate, generate_seeded, GroundTruth, ModelParams, ShuffleSpec};
pub use partition::{partition_profile, row_partition, PartitionProfile, RowPartition};
pub use perm::{block_permutation, coherent_block_permutation, operad_compose, BlockStructure, Permutation};
pub use unshuffle2::{unshuffle2, TwoUnshuffleResult};
pub use unshuffle_m::{recover_block_structure, unshuffle_m, AlignConfig, MUnshuffleResult};
