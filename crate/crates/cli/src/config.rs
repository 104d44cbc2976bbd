//! JSON run manifests and path resolution.

use std::fs::{self, File};
use std::io::BufWriter;
use std::path::{Path, PathBuf};

use qnlp::assoc::Method;
use serde::Deserialize;

use crate::Failure;

pub const DATA_DIR_VAR: &str = "QNLP_DATA_DIR";

/// Experiment manifest. Every field is optional; explicit flags win over it
/// and built-in defaults fill whatever neither sets.
#[derive(Debug, Clone, Default, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    /// Subcommand the manifest was written for.
    pub experiment: Option<String>,
    #[serde(default)]
    pub inputs: Inputs,
    #[serde(default)]
    pub outputs: Outputs,
    pub seed: Option<u64>,
    /// Base directory for relative output paths.
    pub output_dir: Option<PathBuf>,

    pub increment: Option<f64>,
    pub max_words: Option<usize>,
    pub shots: Option<u64>,

    pub kernel: Option<KernelName>,
    pub reps: Option<usize>,
    #[serde(rename = "C")]
    pub c: Option<f64>,

    pub smoothing: Option<f64>,
    pub layers: Option<usize>,
    #[serde(default)]
    pub spsa: SpsaOverrides,
    pub generate: Option<usize>,

    pub nodes: Option<Vec<usize>>,
    pub runs: Option<usize>,
    pub methods: Option<Vec<Method>>,
    #[serde(rename = "M")]
    pub proposals: Option<usize>,
    pub k: Option<usize>,
    pub test_fraction: Option<f64>,
}

#[derive(Debug, Clone, Default, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Inputs {
    pub train: Option<PathBuf>,
    pub test: Option<PathBuf>,
    pub embeddings: Option<PathBuf>,
    pub pairs: Option<PathBuf>,
    pub norms: Option<PathBuf>,
    /// Saved classifier for `qsvm`, domain model for `compose`.
    pub model: Option<PathBuf>,
}

#[derive(Debug, Clone, Default, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Outputs {
    pub model: Option<PathBuf>,
    pub kernel: Option<PathBuf>,
    pub trace: Option<PathBuf>,
    pub table: Option<PathBuf>,
    pub log: Option<PathBuf>,
    pub density: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SpsaOverrides {
    pub iterations: Option<usize>,
    pub a: Option<f64>,
    #[serde(rename = "A")]
    pub big_a: Option<f64>,
    pub c: Option<f64>,
    pub alpha: Option<f64>,
    pub gamma: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum KernelName {
    Zz,
    Dense,
}

impl RunConfig {
    pub fn load(path: &Path) -> Result<Self, Failure> {
        let text = fs::read_to_string(path)
            .map_err(|e| Failure::Usage(format!("config {}: {e}", path.display())))?;
        serde_json::from_str(&text).map_err(|e| Failure::Usage(format!("config {}: {e}", path.display())))
    }

    pub fn check_experiment(&self, command: &str) -> Result<(), Failure> {
        match &self.experiment {
            Some(e) if e != command => Err(Failure::Usage(format!(
                "config is for experiment {e:?}, not {command:?}"
            ))),
            _ => Ok(()),
        }
    }
}

pub fn pick<T>(flag: Option<T>, config: Option<T>, default: T) -> T {
    flag.or(config).unwrap_or(default)
}

pub fn required(flag: Option<PathBuf>, config: &Option<PathBuf>, what: &str) -> Result<PathBuf, Failure> {
    flag.or_else(|| config.clone())
        .ok_or_else(|| Failure::Usage(format!("missing {what} input")))
}

/// Relative paths that do not exist under the working directory are looked up
/// under `$QNLP_DATA_DIR`.
pub fn resolve_input(p: &Path) -> PathBuf {
    if p.is_absolute() || p.exists() {
        return p.to_path_buf();
    }
    if let Some(root) = std::env::var_os(DATA_DIR_VAR) {
        let candidate = Path::new(&root).join(p);
        if candidate.exists() {
            return candidate;
        }
    }
    p.to_path_buf()
}

pub fn open_input(p: &Path) -> Result<File, Failure> {
    let p = resolve_input(p);
    File::open(&p).map_err(|e| Failure::Usage(format!("{}: {e}", p.display())))
}

pub struct OutputPaths {
    dir: Option<PathBuf>,
}

impl OutputPaths {
    pub fn new(dir: Option<PathBuf>) -> Self {
        OutputPaths { dir }
    }

    pub fn create(&self, p: &Path) -> Result<BufWriter<File>, Failure> {
        let p = match &self.dir {
            Some(d) if p.is_relative() => d.join(p),
            _ => p.to_path_buf(),
        };
        if let Some(parent) = p.parent().filter(|d| !d.as_os_str().is_empty()) {
            fs::create_dir_all(parent).map_err(|e| Failure::Runtime(format!("{}: {e}", parent.display())))?;
        }
        let f = File::create(&p).map_err(|e| Failure::Runtime(format!("{}: {e}", p.display())))?;
        log::info!("writing {}", p.display());
        Ok(BufWriter::new(f))
    }
}
