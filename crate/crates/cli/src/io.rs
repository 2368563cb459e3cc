//! Raw binary corpora and atomic file output.
//!
//! A corpus is either one file of concatenated fixed-length records or a
//! directory holding one file per record, read in lexicographic filename
//! order. Symbols are little-endian words of `word_bytes` bytes.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use serde::Serialize;
use unshuffle_core::ShuffledCorpus;

use crate::error::{CliError, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Layout {
    Concatenated,
    FilePerRecord,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CorpusSpec {
    pub source: PathBuf,
    /// Record length in symbols; a one-file-per-record directory can infer it.
    pub record_len: Option<usize>,
    pub word_bytes: usize,
    pub layout: Layout,
    /// Alphabet size; defaults to `256^word_bytes`.
    pub q: Option<u64>,
}

pub const WORD_SIZES: [usize; 3] = [1, 2, 4];

impl CorpusSpec {
    /// Spec for an existing source, with the layout read off the filesystem.
    pub fn existing(source: &Path, record_len: Option<usize>, word_bytes: usize, q: Option<u64>) -> Result<Self> {
        let meta = fs::metadata(source).map_err(|e| CliError::io(source, e))?;
        let layout = if meta.is_dir() { Layout::FilePerRecord } else { Layout::Concatenated };
        let spec = CorpusSpec { source: source.to_path_buf(), record_len, word_bytes, layout, q };
        spec.validate()?;
        Ok(spec)
    }

    fn validate(&self) -> Result<()> {
        if !WORD_SIZES.contains(&self.word_bytes) {
            return Err(CliError::Usage(format!("--word-bytes must be 1, 2 or 4, not {}", self.word_bytes)));
        }
        if self.record_len == Some(0) {
            return Err(CliError::Usage("--record-len must be at least 1".into()));
        }
        if let Some(q) = self.q {
            if q < 2 || q > self.word_alphabet() {
                return Err(CliError::Usage(format!(
                    "alphabet {} does not fit {}-byte words",
                    q, self.word_bytes
                )));
            }
        }
        Ok(())
    }

    pub fn word_alphabet(&self) -> u64 {
        1u64 << (8 * self.word_bytes)
    }

    pub fn alphabet(&self) -> u64 {
        self.q.unwrap_or_else(|| self.word_alphabet())
    }
}

fn decode(bytes: &[u8], word_bytes: usize, q: u64, path: &Path, out: &mut Vec<u32>) -> Result<()> {
    for (i, w) in bytes.chunks_exact(word_bytes).enumerate() {
        let mut buf = [0u8; 4];
        buf[..word_bytes].copy_from_slice(w);
        let v = u32::from_le_bytes(buf);
        if u64::from(v) >= q {
            return Err(CliError::Malformed {
                path: path.to_path_buf(),
                offset: (i * word_bytes) as u64,
                reason: format!("symbol {} not below alphabet size {}", v, q),
            });
        }
        out.push(v);
    }
    Ok(())
}

fn record_files(dir: &Path) -> Result<Vec<PathBuf>> {
    let mut files = Vec::new();
    for entry in fs::read_dir(dir).map_err(|e| CliError::io(dir, e))? {
        let entry = entry.map_err(|e| CliError::io(dir, e))?;
        let kind = entry.file_type().map_err(|e| CliError::io(entry.path(), e))?;
        if kind.is_file() {
            files.push(entry.path());
        }
    }
    files.sort();
    Ok(files)
}

pub fn load_corpus(spec: &CorpusSpec) -> Result<ShuffledCorpus> {
    spec.validate()?;
    let wb = spec.word_bytes;
    let q = spec.alphabet();
    let mut data = Vec::new();
    let (rows, cols) = match spec.layout {
        Layout::Concatenated => {
            let path = &spec.source;
            let rows = spec
                .record_len
                .ok_or_else(|| CliError::Usage("a concatenated corpus needs --record-len".into()))?;
            let bytes = fs::read(path).map_err(|e| CliError::io(path, e))?;
            if bytes.is_empty() {
                return Err(CliError::Empty { path: path.clone() });
            }
            let record = rows * wb;
            if bytes.len() % record != 0 {
                return Err(CliError::Malformed {
                    path: path.clone(),
                    offset: (bytes.len() - bytes.len() % record) as u64,
                    reason: format!("{} bytes is not a whole number of {}-byte records", bytes.len(), record),
                });
            }
            decode(&bytes, wb, q, path, &mut data)?;
            (rows, bytes.len() / record)
        }
        Layout::FilePerRecord => {
            let files = record_files(&spec.source)?;
            if files.is_empty() {
                return Err(CliError::Empty { path: spec.source.clone() });
            }
            let mut rows = spec.record_len;
            for path in &files {
                let bytes = fs::read(path).map_err(|e| CliError::io(path, e))?;
                if bytes.is_empty() {
                    return Err(CliError::Empty { path: path.clone() });
                }
                if bytes.len() % wb != 0 {
                    return Err(CliError::Malformed {
                        path: path.clone(),
                        offset: (bytes.len() - bytes.len() % wb) as u64,
                        reason: format!("{} bytes is not a whole number of {}-byte words", bytes.len(), wb),
                    });
                }
                let expected = *rows.get_or_insert(bytes.len() / wb) * wb;
                if bytes.len() != expected {
                    return Err(CliError::Malformed {
                        path: path.clone(),
                        offset: bytes.len().min(expected) as u64,
                        reason: format!("record of {} bytes, expected {}", bytes.len(), expected),
                    });
                }
                decode(&bytes, wb, q, path, &mut data)?;
            }
            (rows.unwrap_or(0), files.len())
        }
    };
    Ok(ShuffledCorpus::new(q, rows, cols, data)?)
}

fn encode(column: &[u32], word_bytes: usize, out: &mut Vec<u8>) {
    for &v in column {
        out.extend_from_slice(&v.to_le_bytes()[..word_bytes]);
    }
}

/// Inverse of [`load_corpus`]. A one-file-per-record directory gets
/// zero-padded names so lexicographic order is column order.
pub fn write_corpus(corpus: &ShuffledCorpus, spec: &CorpusSpec) -> Result<()> {
    spec.validate()?;
    let wb = spec.word_bytes;
    if let Some(&v) = corpus.data().iter().find(|&&v| u64::from(v) >= spec.word_alphabet()) {
        return Err(CliError::Usage(format!("symbol {} does not fit {}-byte words", v, wb)));
    }
    match spec.layout {
        Layout::Concatenated => {
            let mut bytes = Vec::with_capacity(corpus.data().len() * wb);
            for col in corpus.columns() {
                encode(col, wb, &mut bytes);
            }
            write_atomic(&spec.source, &bytes)
        }
        Layout::FilePerRecord => {
            let dir = &spec.source;
            fs::create_dir_all(dir).map_err(|e| CliError::io(dir, e))?;
            let width = corpus.cols().to_string().len().max(6);
            for (n, col) in corpus.columns().enumerate() {
                let mut bytes = Vec::with_capacity(col.len() * wb);
                encode(col, wb, &mut bytes);
                write_atomic(&dir.join(format!("{:0width$}.bin", n, width = width)), &bytes)?;
            }
            Ok(())
        }
    }
}

/// Write through a temporary file in the destination directory, then rename.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    let dir = match path.parent() {
        Some(p) if !p.as_os_str().is_empty() => p,
        _ => Path::new("."),
    };
    let mut tmp = tempfile::NamedTempFile::new_in(dir).map_err(|e| CliError::io(dir, e))?;
    tmp.write_all(bytes).map_err(|e| CliError::io(path, e))?;
    tmp.as_file().sync_all().map_err(|e| CliError::io(path, e))?;
    tmp.persist(path).map_err(|e| CliError::io(path, e.error))?;
    Ok(())
}

pub fn write_json<T: Serialize>(value: &T, path: &Path) -> Result<()> {
    let mut text = serde_json::to_vec_pretty(value).map_err(|e| CliError::Json { path: path.into(), source: e })?;
    text.push(b'\n');
    write_atomic(path, &text)
}

pub fn read_json<T: serde::de::DeserializeOwned>(path: &Path) -> Result<T> {
    let text = fs::read(path).map_err(|e| CliError::io(path, e))?;
    serde_json::from_slice(&text).map_err(|e| CliError::Json { path: path.into(), source: e })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn spec(path: &Path, record_len: Option<usize>, word_bytes: usize) -> CorpusSpec {
        CorpusSpec::existing(path, record_len, word_bytes, None).unwrap()
    }

    #[test]
    fn regrouping_bytes_into_words() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("c.bin");
        fs::write(&path, [1, 2, 3, 4, 5, 6, 7, 8, 9, 10, 11, 12]).unwrap();

        let bytes = load_corpus(&spec(&path, Some(4), 1)).unwrap();
        assert_eq!((bytes.rows(), bytes.cols(), bytes.q()), (4, 3, 256));
        assert_eq!(bytes.column(1), &[5, 6, 7, 8]);

        let words = load_corpus(&spec(&path, Some(2), 2)).unwrap();
        assert_eq!((words.rows(), words.cols(), words.q()), (2, 3, 65536));
        assert_eq!(words.column(0), &[0x0201, 0x0403]);
    }

    #[test]
    fn round_trip_both_layouts() {
        let dir = tempfile::tempdir().unwrap();
        let corpus = ShuffledCorpus::from_columns(65536, &[vec![1, 700, 3], vec![65535, 0, 9]]).unwrap();
        for layout in [Layout::Concatenated, Layout::FilePerRecord] {
            let s = CorpusSpec {
                source: dir.path().join(format!("{:?}", layout)),
                record_len: Some(3),
                word_bytes: 2,
                layout,
                q: None,
            };
            write_corpus(&corpus, &s).unwrap();
            assert_eq!(load_corpus(&s).unwrap(), corpus);
        }
    }

    #[test]
    fn ragged_input_names_file_and_offset() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("c.bin");
        fs::write(&path, [0u8; 10]).unwrap();
        match load_corpus(&spec(&path, Some(4), 1)) {
            Err(CliError::Malformed { path: p, offset, .. }) => assert_eq!((p, offset), (path.clone(), 8)),
            other => panic!("{:?}", other),
        }

        let records = dir.path().join("records");
        fs::create_dir(&records).unwrap();
        fs::write(records.join("a"), [0u8; 4]).unwrap();
        fs::write(records.join("b"), [0u8; 3]).unwrap();
        match load_corpus(&spec(&records, None, 1)) {
            Err(CliError::Malformed { path: p, offset, .. }) => assert_eq!((p, offset), (records.join("b"), 3)),
            other => panic!("{:?}", other),
        }
    }

    #[test]
    fn empty_sources_are_rejected() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("c.bin");
        fs::write(&path, []).unwrap();
        assert!(matches!(load_corpus(&spec(&path, Some(4), 1)), Err(CliError::Empty { .. })));
        let empty = dir.path().join("none");
        fs::create_dir(&empty).unwrap();
        assert!(matches!(load_corpus(&spec(&empty, None, 1)), Err(CliError::Empty { .. })));
    }

    #[test]
    fn symbols_outside_declared_alphabet() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("c.bin");
        fs::write(&path, [0, 1, 2, 3]).unwrap();
        let s = CorpusSpec::existing(&path, Some(2), 1, Some(3)).unwrap();
        match load_corpus(&s) {
            Err(CliError::Malformed { offset, .. }) => assert_eq!(offset, 3),
            other => panic!("{:?}", other),
        }
    }
}
