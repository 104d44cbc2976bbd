//! File loaders and the bundled fixtures.
//!
//! External datasets are referenced by path and never copied into the repo.
//! Every fixture under `fixtures/` is synthetic.

use std::fs;
use std::path::{Path, PathBuf};

use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use crate::bow::{tokenize, LabeledCorpus};
use crate::error::{Error, Result};
use crate::rng::substream;

/// Directory holding the bundled fixtures.
pub fn fixtures_dir() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("fixtures")
}

pub fn fixture(name: &str) -> PathBuf {
    fixtures_dir().join(name)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum DatasetKind {
    LabeledLines,
    ReviewDirs,
    NormsCsv,
    PairsCsv,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DatasetDescriptor {
    pub kind: DatasetKind,
    pub path: PathBuf,
    /// Record count to check against after loading; a mismatch only warns.
    #[serde(default)]
    pub expected_records: Option<usize>,
}

impl DatasetDescriptor {
    /// Checks that the path has the shape its kind needs.
    pub fn validate(&self) -> Result<()> {
        let p = &self.path;
        match self.kind {
            DatasetKind::ReviewDirs => {
                for class in ["pos", "neg"] {
                    if !p.join(class).is_dir() {
                        return Err(Error::arg(format!("{} has no {class}/ directory", p.display())));
                    }
                }
            }
            _ if !p.is_file() => {
                return Err(Error::arg(format!("{} is not a file", p.display())));
            }
            _ => {}
        }
        Ok(())
    }
}

pub(crate) fn check_count(what: &str, found: usize, expected: Option<usize>) {
    if let Some(e) = expected {
        if e != found {
            log::warn!("{what}: expected {e} records, loaded {found}");
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CorpusSummary {
    pub records: usize,
    pub balance: Vec<(String, usize)>,
}

pub fn read_text(path: &Path) -> Result<String> {
    fs::read_to_string(path).map_err(|e| {
        Error::Io(std::io::Error::new(e.kind(), format!("{}: {e}", path.display())))
    })
}

/// Loads a labeled-sentence file (tab-separated or lambeq style).
pub fn load_labeled_lines(path: &Path, expected: Option<usize>) -> Result<(LabeledCorpus, CorpusSummary)> {
    let corpus = LabeledCorpus::parse(read_text(path)?.as_bytes())?;
    check_count(&path.display().to_string(), corpus.len(), expected);
    let summary = CorpusSummary {
        records: corpus.len(),
        balance: corpus.class_balance(),
    };
    Ok((corpus, summary))
}

/// Lowercases and collapses runs of whitespace to single spaces.
pub fn normalize_review(text: &str) -> String {
    text.split_whitespace().map(str::to_lowercase).collect::<Vec<_>>().join(" ")
}

#[derive(Debug, Clone, PartialEq)]
pub struct ReviewBatch {
    pub corpus: LabeledCorpus,
    pub tokens: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ReviewStats {
    pub documents: usize,
    pub positive: usize,
    pub negative: usize,
    pub tokens: usize,
    pub mean_tokens_per_document: f64,
    pub mean_tokens_per_batch: f64,
}

fn read_class_dir(dir: &Path) -> Result<Vec<String>> {
    let mut files: Vec<PathBuf> = fs::read_dir(dir)
        .map_err(|e| Error::Io(std::io::Error::new(e.kind(), format!("{}: {e}", dir.display()))))?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.is_file())
        .collect();
    if files.is_empty() {
        return Err(Error::arg(format!("{} contains no documents", dir.display())));
    }
    // Directory order is platform dependent.
    files.sort();
    files
        .iter()
        .map(|f| {
            let bytes = fs::read(f)?;
            Ok(normalize_review(&String::from_utf8_lossy(&bytes)))
        })
        .collect()
}

/// Reads `pos/` and `neg/` review directories and deals them into seeded,
/// label-balanced batches of `batch` documents. A final short batch holds any
/// remainder.
pub fn load_review_dirs(path: &Path, batch: usize, seed: u64) -> Result<(Vec<ReviewBatch>, ReviewStats)> {
    if batch == 0 {
        return Err(Error::arg("batch size must be at least 1"));
    }
    DatasetDescriptor {
        kind: DatasetKind::ReviewDirs,
        path: path.to_path_buf(),
        expected_records: None,
    }
    .validate()?;
    let mut rng = substream(seed, "datasets/reviews");
    let mut pos = read_class_dir(&path.join("pos"))?;
    let mut neg = read_class_dir(&path.join("neg"))?;
    let (n_pos, n_neg) = (pos.len(), neg.len());
    pos.shuffle(&mut rng);
    neg.shuffle(&mut rng);

    // Alternate the classes so every full batch is as balanced as the data allows.
    let mut dealt = Vec::with_capacity(n_pos + n_neg);
    let (mut p, mut n) = (pos.into_iter(), neg.into_iter());
    loop {
        let (a, b) = (p.next(), n.next());
        if a.is_none() && b.is_none() {
            break;
        }
        dealt.extend(a.map(|t| (t, "pos".to_string())));
        dealt.extend(b.map(|t| (t, "neg".to_string())));
    }

    let topics = vec!["pos".to_string(), "neg".to_string()];
    let mut batches = Vec::new();
    let mut total_tokens = 0;
    for chunk in dealt.chunks(batch) {
        let mut examples = chunk.to_vec();
        examples.shuffle(&mut rng);
        let tokens = examples.iter().map(|(t, _)| tokenize(t).len()).sum();
        total_tokens += tokens;
        batches.push(ReviewBatch {
            corpus: LabeledCorpus::with_topics(topics.clone(), examples)?,
            tokens,
        });
    }
    let documents = n_pos + n_neg;
    let stats = ReviewStats {
        documents,
        positive: n_pos,
        negative: n_neg,
        tokens: total_tokens,
        mean_tokens_per_document: total_tokens as f64 / documents as f64,
        mean_tokens_per_batch: total_tokens as f64 / batches.len() as f64,
    };
    log::info!(
        "{documents} reviews in {} batches, {:.1} tokens per document, {:.1} per batch",
        batches.len(),
        stats.mean_tokens_per_document,
        stats.mean_tokens_per_batch
    );
    Ok((batches, stats))
}
