//! Quantum-kernel support vector machine for text classification.
//!
//! Documents become vectors by mean-pooling pretrained word embeddings. Two
//! feature maps turn vectors into states: the ZZ map with one qubit per
//! dimension, and amplitude encoding into `⌈log₂ d⌉` qubits. A kernel entry is
//! the squared overlap of two embedded states, read off as the probability of
//! `|0…0⟩` after running `U(x)` followed by `U(z)†`. The resulting Gram matrix
//! feeds a classical soft-margin SVM solved by SMO.

use std::collections::HashMap;
use std::f64::consts::PI;
use std::io::{BufRead, Read, Write};

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::bow::{tokenize, LabeledCorpus};
use crate::circuit::{amplitude_encode, build_zz_feature_map, Circuit};
use crate::error::{Error, Result};
use crate::sim::run_circuit;

pub const DEFAULT_ZZ_REPS: usize = 2;
pub const DEFAULT_C: f64 = 1.0;
pub const DEFAULT_TOLERANCE: f64 = 1e-4;
const MAX_ITERATIONS: usize = 1_000_000;

/// Word → embedding vector, all of one dimension.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct EmbeddingTable {
    dimension: usize,
    vectors: HashMap<String, Vec<f64>>,
    duplicates: Vec<String>,
}

impl EmbeddingTable {
    pub fn dimension(&self) -> usize {
        self.dimension
    }

    pub fn len(&self) -> usize {
        self.vectors.len()
    }

    pub fn is_empty(&self) -> bool {
        self.vectors.is_empty()
    }

    pub fn get(&self, word: &str) -> Option<&[f64]> {
        self.vectors.get(word).map(Vec::as_slice)
    }

    /// Words that appeared more than once in the source; the last line won.
    pub fn duplicates(&self) -> &[String] {
        &self.duplicates
    }
}

/// Parses `word v1 … vd` lines. The dimension comes from the first vector
/// line; a leading `count dim` header line in word2vec text format is
/// skipped. Words are lowercased to match [`tokenize`].
pub fn load_embeddings<R: Read>(source: R) -> Result<EmbeddingTable> {
    let mut table = EmbeddingTable::default();
    for (n, line) in std::io::BufReader::new(source).lines().enumerate() {
        let line = line?;
        let mut fields = line.split_whitespace();
        let Some(word) = fields.next() else { continue };
        let values: Vec<&str> = fields.collect();
        if table.dimension == 0
            && table.vectors.is_empty()
            && values.len() == 1
            && word.parse::<usize>().is_ok()
            && values[0].parse::<usize>().is_ok()
        {
            continue;
        }
        let values = values
            .iter()
            .map(|v| v.parse::<f64>())
            .collect::<std::result::Result<Vec<f64>, _>>()
            .map_err(|e| Error::format(Some(n + 1), format!("bad number: {e}")))?;
        if values.is_empty() || values.iter().any(|v| !v.is_finite()) {
            return Err(Error::format(Some(n + 1), "embedding needs finite values"));
        }
        if table.dimension == 0 {
            table.dimension = values.len();
        } else if values.len() != table.dimension {
            return Err(Error::format(
                Some(n + 1),
                format!("expected {} values, found {}", table.dimension, values.len()),
            ));
        }
        let word = word.to_lowercase();
        if table.vectors.insert(word.clone(), values).is_some() {
            log::warn!("duplicate embedding for {word:?} at line {}; keeping the later one", n + 1);
            table.duplicates.push(word);
        }
    }
    if table.vectors.is_empty() {
        return Err(Error::format(None, "no embeddings found"));
    }
    Ok(table)
}

/// Mean of the in-vocabulary word vectors of `text`.
pub fn mean_vector(text: &str, table: &EmbeddingTable) -> Result<Vec<f64>> {
    let mut sum = vec![0.0; table.dimension];
    let mut n = 0usize;
    for w in tokenize(text) {
        if let Some(v) = table.get(&w) {
            for (s, x) in sum.iter_mut().zip(v) {
                *s += x;
            }
            n += 1;
        }
    }
    if n == 0 {
        return Err(Error::Unclassifiable(format!("no in-vocabulary words in {text:?}")));
    }
    Ok(sum.into_iter().map(|s| s / n as f64).collect())
}

/// Per-dimension min–max map onto `[0, π]`, fitted on a dataset.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeatureScaler {
    pub min: Vec<f64>,
    pub max: Vec<f64>,
}

impl FeatureScaler {
    pub fn fit(vectors: &[Vec<f64>]) -> Result<Self> {
        let first = vectors.first().ok_or_else(|| Error::arg("cannot fit a scaler on no data"))?;
        let mut min = first.clone();
        let mut max = first.clone();
        for v in vectors {
            if v.len() != min.len() {
                return Err(Error::arg("vectors of mixed dimension"));
            }
            for (k, x) in v.iter().enumerate() {
                min[k] = min[k].min(*x);
                max[k] = max[k].max(*x);
            }
        }
        Ok(FeatureScaler { min, max })
    }

    /// Values outside the fitted range are clamped. A constant dimension maps to 0.
    pub fn transform(&self, v: &[f64]) -> Vec<f64> {
        v.iter()
            .enumerate()
            .map(|(k, x)| {
                let span = self.max[k] - self.min[k];
                if span > 0.0 {
                    ((x - self.min[k]) / span * PI).clamp(0.0, PI)
                } else {
                    0.0
                }
            })
            .collect()
    }
}

/// Mean-pooled vector of `text`, rescaled by `scaler`.
pub fn text_vector(text: &str, table: &EmbeddingTable, scaler: &FeatureScaler) -> Result<Vec<f64>> {
    Ok(scaler.transform(&mean_vector(text, table)?))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum Kernel {
    Zz { reps: usize },
    Dense,
}

impl Default for Kernel {
    fn default() -> Self {
        Kernel::Zz {
            reps: DEFAULT_ZZ_REPS,
        }
    }
}

impl Kernel {
    /// Feature-map circuit for one input vector.
    pub fn feature_map(&self, x: &[f64]) -> Result<Circuit> {
        match *self {
            Kernel::Zz { reps } => build_zz_feature_map(x, reps),
            Kernel::Dense => amplitude_encode(&pad_to_power_of_two(x)),
        }
    }

    pub fn num_qubits(&self, dimension: usize) -> usize {
        match self {
            Kernel::Zz { .. } => dimension,
            Kernel::Dense => padded_len(dimension).trailing_zeros() as usize,
        }
    }

    pub fn entry(&self, x: &[f64], z: &[f64]) -> Result<f64> {
        check_dims(x, z)?;
        overlap(&self.feature_map(x)?, &self.feature_map(z)?)
    }

    /// Shot estimate of [`Kernel::entry`]: frequency of `|0…0⟩` over `shots`.
    pub fn entry_estimated(&self, x: &[f64], z: &[f64], shots: u64, seed: u64) -> Result<f64> {
        check_dims(x, z)?;
        let mut c = self.feature_map(x)?;
        c.append(&self.feature_map(z)?.inverse())?;
        let state = run_circuit(&c, None)?;
        let zeros = "0".repeat(state.num_qubits());
        let counts = state.sample_shots_with(shots, &mut ChaCha8Rng::seed_from_u64(seed))?;
        Ok(counts.get(&zeros) as f64 / shots as f64)
    }
}

fn check_dims(x: &[f64], z: &[f64]) -> Result<()> {
    if x.len() != z.len() {
        return Err(Error::arg(format!(
            "kernel inputs differ in dimension: {} vs {}",
            x.len(),
            z.len()
        )));
    }
    Ok(())
}

fn padded_len(d: usize) -> usize {
    d.next_power_of_two().max(2)
}

/// Zero-pads to the next power of two (at least 2).
pub fn pad_to_power_of_two(x: &[f64]) -> Vec<f64> {
    let mut v = x.to_vec();
    v.resize(padded_len(x.len()), 0.0);
    v
}

// |⟨0|U_z† U_x|0⟩|²
fn overlap(ux: &Circuit, uz: &Circuit) -> Result<f64> {
    let mut c = ux.clone();
    c.append(&uz.inverse())?;
    let state = run_circuit(&c, None)?;
    Ok(state.amplitudes()[0].norm_sqr())
}

/// ZZ feature-map kernel `|⟨0|U†(z)U(x)|0⟩|²`.
pub fn kernel_entry_zz(x: &[f64], z: &[f64], reps: usize) -> Result<f64> {
    Kernel::Zz { reps }.entry(x, z)
}

/// Amplitude-encoded kernel `|⟨ψ(z)|ψ(x)⟩|²` on zero-padded inputs.
pub fn kernel_entry_dense(x: &[f64], z: &[f64]) -> Result<f64> {
    Kernel::Dense.entry(x, z)
}

/// Dense `rows × cols` kernel values, row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct KernelMatrix {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl KernelMatrix {
    pub fn from_rows(rows: Vec<Vec<f64>>) -> Result<Self> {
        let r = rows.len();
        let c = rows.first().map_or(0, Vec::len);
        if r == 0 || rows.iter().any(|row| row.len() != c) {
            return Err(Error::arg("kernel rows must be non-empty and equal length"));
        }
        Ok(KernelMatrix {
            rows: r,
            cols: c,
            data: rows.into_iter().flatten().collect(),
        })
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn is_square(&self) -> bool {
        self.rows == self.cols
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.cols + j]
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn is_symmetric(&self, tol: f64) -> bool {
        self.is_square()
            && (0..self.rows).all(|i| (0..i).all(|j| (self.get(i, j) - self.get(j, i)).abs() <= tol))
    }

    pub fn write_csv<W: Write>(&self, w: W) -> Result<()> {
        let mut w = csv::WriterBuilder::new().has_headers(false).from_writer(w);
        for i in 0..self.rows {
            w.write_record(self.row(i).iter().map(|v| v.to_string()))?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn read_csv<R: Read>(r: R) -> Result<Self> {
        let mut rdr = csv::ReaderBuilder::new().has_headers(false).from_reader(r);
        let mut rows = Vec::new();
        for (n, rec) in rdr.records().enumerate() {
            let rec = rec?;
            let row = rec
                .iter()
                .map(|v| v.trim().parse::<f64>())
                .collect::<std::result::Result<Vec<_>, _>>()
                .map_err(|e| Error::format(Some(n + 1), e.to_string()))?;
            rows.push(row);
        }
        KernelMatrix::from_rows(rows).map_err(|e| Error::format(None, e.to_string()))
    }
}

/// Gram matrix over `vectors`. Only `i ≤ j` is evaluated; the lower triangle
/// is mirrored.
pub fn kernel_matrix(vectors: &[Vec<f64>], kernel: Kernel) -> Result<KernelMatrix> {
    let n = vectors.len();
    if n == 0 {
        return Err(Error::arg("kernel matrix needs at least one vector"));
    }
    let maps = feature_maps(vectors, kernel)?;
    let pairs: Vec<(usize, usize)> = (0..n).flat_map(|i| (i..n).map(move |j| (i, j))).collect();
    let values = pairs
        .par_iter()
        .map(|&(i, j)| {
            check_dims(&vectors[i], &vectors[j])
                .and_then(|_| overlap(&maps[i], &maps[j]))
                .map_err(|e| Error::arg(format!("kernel entry ({i}, {j}): {e}")))
        })
        .collect::<Result<Vec<f64>>>()?;
    let mut data = vec![0.0; n * n];
    for (&(i, j), v) in pairs.iter().zip(values) {
        data[i * n + j] = v;
        data[j * n + i] = v;
    }
    Ok(KernelMatrix { rows: n, cols: n, data })
}

/// `rows[i]` against `cols[j]`, e.g. test documents against training documents.
pub fn cross_kernel(rows: &[Vec<f64>], cols: &[Vec<f64>], kernel: Kernel) -> Result<KernelMatrix> {
    let rmaps = feature_maps(rows, kernel)?;
    let cmaps = feature_maps(cols, kernel)?;
    let data = (0..rows.len())
        .into_par_iter()
        .map(|i| {
            (0..cols.len())
                .map(|j| {
                    check_dims(&rows[i], &cols[j])
                        .and_then(|_| overlap(&rmaps[i], &cmaps[j]))
                        .map_err(|e| Error::arg(format!("kernel entry ({i}, {j}): {e}")))
                })
                .collect::<Result<Vec<f64>>>()
        })
        .collect::<Result<Vec<Vec<f64>>>>()?;
    KernelMatrix::from_rows(data)
}

fn feature_maps(vectors: &[Vec<f64>], kernel: Kernel) -> Result<Vec<Circuit>> {
    vectors
        .iter()
        .enumerate()
        .map(|(i, v)| {
            kernel
                .feature_map(v)
                .map_err(|e| Error::arg(format!("vector {i}: {e}")))
        })
        .collect()
}

/// Dual solution of the soft-margin SVM.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DualSolution {
    pub alpha: Vec<f64>,
    pub labels: Vec<i8>,
    pub bias: f64,
    pub c: f64,
    pub iterations: usize,
    pub converged: bool,
}

impl DualSolution {
    /// `Σ αᵢyᵢ·kᵢ + b` for a kernel row against the training set.
    pub fn decision_value(&self, kernel_row: &[f64]) -> f64 {
        self.alpha
            .iter()
            .zip(&self.labels)
            .zip(kernel_row)
            .map(|((a, y), k)| a * f64::from(*y) * k)
            .sum::<f64>()
            + self.bias
    }

    /// Dual objective `Σα − ½ ΣΣ αᵢαⱼyᵢyⱼKᵢⱼ`.
    pub fn objective(&self, k: &KernelMatrix) -> f64 {
        let n = self.alpha.len();
        let mut quad = 0.0;
        for i in 0..n {
            for j in 0..n {
                quad += self.alpha[i]
                    * self.alpha[j]
                    * f64::from(self.labels[i] * self.labels[j])
                    * k.get(i, j);
            }
        }
        self.alpha.iter().sum::<f64>() - 0.5 * quad
    }
}

/// Sign with `sign(0) = +1`.
pub fn sign(v: f64) -> i8 {
    if v < 0.0 {
        -1
    } else {
        1
    }
}

/// Soft-margin kernel SVM via SMO with maximal-violating-pair selection,
/// stopping when the KKT gap falls below `tol`.
pub fn train_svm(k: &KernelMatrix, labels: &[i8], c: f64) -> Result<DualSolution> {
    train_svm_with_tolerance(k, labels, c, DEFAULT_TOLERANCE)
}

pub fn train_svm_with_tolerance(k: &KernelMatrix, labels: &[i8], c: f64, tol: f64) -> Result<DualSolution> {
    let n = labels.len();
    if !k.is_square() || k.rows() != n {
        return Err(Error::arg(format!(
            "kernel is {}×{} but there are {n} labels",
            k.rows(),
            k.cols()
        )));
    }
    if labels.iter().any(|&y| y != 1 && y != -1) {
        return Err(Error::arg("labels must be +1 or -1"));
    }
    if !labels.contains(&1) || !labels.contains(&-1) {
        return Err(Error::arg("both classes must be present"));
    }
    if !(c > 0.0 && c.is_finite()) {
        return Err(Error::arg(format!("C must be positive, got {c}")));
    }
    const TAU: f64 = 1e-12;
    let y: Vec<f64> = labels.iter().map(|&l| f64::from(l)).collect();
    let q = |i: usize, j: usize| y[i] * y[j] * k.get(i, j);
    let mut alpha = vec![0.0; n];
    // Gradient of ½αᵀQα − eᵀα.
    let mut grad = vec![-1.0; n];
    let in_up = |a: f64, yt: f64| (yt > 0.0 && a < c) || (yt < 0.0 && a > 0.0);
    let in_low = |a: f64, yt: f64| (yt > 0.0 && a > 0.0) || (yt < 0.0 && a < c);

    let mut iterations = 0;
    let mut converged = false;
    while iterations < MAX_ITERATIONS {
        let mut i = usize::MAX;
        let mut gmax = f64::NEG_INFINITY;
        let mut j = usize::MAX;
        let mut gmin = f64::INFINITY;
        for t in 0..n {
            let v = -y[t] * grad[t];
            if in_up(alpha[t], y[t]) && v > gmax {
                gmax = v;
                i = t;
            }
            if in_low(alpha[t], y[t]) && v < gmin {
                gmin = v;
                j = t;
            }
        }
        if i == usize::MAX || j == usize::MAX || gmax - gmin < tol {
            converged = true;
            break;
        }
        iterations += 1;

        let (ai, aj) = (alpha[i], alpha[j]);
        if y[i] != y[j] {
            let quad = (q(i, i) + q(j, j) + 2.0 * q(i, j)).max(TAU);
            let delta = (-grad[i] - grad[j]) / quad;
            let diff = alpha[i] - alpha[j];
            alpha[i] += delta;
            alpha[j] += delta;
            if diff > 0.0 {
                if alpha[j] < 0.0 {
                    alpha[j] = 0.0;
                    alpha[i] = diff;
                }
            } else if alpha[i] < 0.0 {
                alpha[i] = 0.0;
                alpha[j] = -diff;
            }
            if diff > 0.0 {
                if alpha[i] > c {
                    alpha[i] = c;
                    alpha[j] = c - diff;
                }
            } else if alpha[j] > c {
                alpha[j] = c;
                alpha[i] = c + diff;
            }
        } else {
            let quad = (q(i, i) + q(j, j) - 2.0 * q(i, j)).max(TAU);
            let delta = (grad[i] - grad[j]) / quad;
            let sum = alpha[i] + alpha[j];
            alpha[i] -= delta;
            alpha[j] += delta;
            if sum > c {
                if alpha[i] > c {
                    alpha[i] = c;
                    alpha[j] = sum - c;
                }
            } else if alpha[j] < 0.0 {
                alpha[j] = 0.0;
                alpha[i] = sum;
            }
            if sum > c {
                if alpha[j] > c {
                    alpha[j] = c;
                    alpha[i] = sum - c;
                }
            } else if alpha[i] < 0.0 {
                alpha[i] = 0.0;
                alpha[j] = sum;
            }
        }
        let (di, dj) = (alpha[i] - ai, alpha[j] - aj);
        for (t, g) in grad.iter_mut().enumerate() {
            *g += q(i, t) * di + q(j, t) * dj;
        }
    }

    // Bias from free support vectors, else the midpoint of the feasible range.
    let mut ub = f64::INFINITY;
    let mut lb = f64::NEG_INFINITY;
    let mut free_sum = 0.0;
    let mut free = 0usize;
    for t in 0..n {
        let yg = y[t] * grad[t];
        if alpha[t] >= c {
            if y[t] < 0.0 {
                ub = ub.min(yg);
            } else {
                lb = lb.max(yg);
            }
        } else if alpha[t] <= 0.0 {
            if y[t] > 0.0 {
                ub = ub.min(yg);
            } else {
                lb = lb.max(yg);
            }
        } else {
            free += 1;
            free_sum += yg;
        }
    }
    let rho = if free > 0 {
        free_sum / free as f64
    } else {
        (ub + lb) / 2.0
    };
    if !converged {
        log::warn!("SMO stopped after {iterations} iterations without reaching tolerance {tol}");
    }
    Ok(DualSolution {
        alpha,
        labels: labels.to_vec(),
        bias: -rho,
        c,
        iterations,
        converged,
    })
}

/// Trained classifier: support vectors, their signed coefficients, and the
/// kernel they were trained with.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SvmModel {
    pub kernel: Kernel,
    pub dimension: usize,
    pub support_vectors: Vec<Vec<f64>>,
    /// `αᵢyᵢ` per support vector.
    pub coefficients: Vec<f64>,
    pub bias: f64,
    pub c: f64,
}

impl SvmModel {
    pub fn fit(vectors: &[Vec<f64>], labels: &[i8], kernel: Kernel, c: f64) -> Result<(SvmModel, DualSolution)> {
        let k = kernel_matrix(vectors, kernel)?;
        let sol = train_svm(&k, labels, c)?;
        Ok((SvmModel::from_solution(vectors, &sol, kernel)?, sol))
    }

    pub fn from_solution(vectors: &[Vec<f64>], sol: &DualSolution, kernel: Kernel) -> Result<SvmModel> {
        if vectors.len() != sol.alpha.len() {
            return Err(Error::arg("solution and training vectors differ in length"));
        }
        let mut support_vectors = Vec::new();
        let mut coefficients = Vec::new();
        for ((v, a), y) in vectors.iter().zip(&sol.alpha).zip(&sol.labels) {
            if *a > 0.0 {
                support_vectors.push(v.clone());
                coefficients.push(a * f64::from(*y));
            }
        }
        Ok(SvmModel {
            kernel,
            dimension: vectors.first().map_or(0, Vec::len),
            support_vectors,
            coefficients,
            bias: sol.bias,
            c: sol.c,
        })
    }

    pub fn decision_value(&self, x: &[f64]) -> Result<f64> {
        if x.len() != self.dimension {
            return Err(Error::arg(format!(
                "model expects dimension {}, got {}",
                self.dimension,
                x.len()
            )));
        }
        let mut v = self.bias;
        for (sv, coef) in self.support_vectors.iter().zip(&self.coefficients) {
            v += coef * self.kernel.entry(sv, x)?;
        }
        Ok(v)
    }

    /// `sign(Σ αᵢyᵢ·k(xᵢ, x) + b)`, with a zero decision value mapped to +1.
    pub fn predict(&self, x: &[f64]) -> Result<i8> {
        Ok(sign(self.decision_value(x)?))
    }

    pub fn to_json<W: Write>(&self, w: W) -> Result<()> {
        serde_json::to_writer_pretty(w, self)?;
        Ok(())
    }

    pub fn from_json<R: Read>(r: R) -> Result<Self> {
        Ok(serde_json::from_reader(r)?)
    }
}

/// Binary text classifier: pooled embeddings, a quantum kernel and an SVM.
///
/// The ZZ map sees pooled vectors rescaled to `[0, π]` with a scaler fitted on
/// the training texts. Amplitude encoding normalizes its input anyway, so the
/// dense kernel takes the pooled vectors as they are.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QsvmClassifier {
    /// Label for decision `+1`, then for `−1`.
    pub topics: [String; 2],
    pub scaler: Option<FeatureScaler>,
    pub model: SvmModel,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct QsvmDecision {
    pub text: String,
    pub gold: String,
    /// `None` when the text had no in-vocabulary words.
    pub predicted: Option<String>,
    pub decision_value: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct QsvmReport {
    pub decisions: Vec<QsvmDecision>,
    pub correct: usize,
    pub total: usize,
    pub accuracy: f64,
}

fn features(text: &str, table: &EmbeddingTable, scaler: Option<&FeatureScaler>) -> Result<Vec<f64>> {
    let v = mean_vector(text, table)?;
    Ok(match scaler {
        Some(s) => s.transform(&v),
        None => v,
    })
}

impl QsvmClassifier {
    /// Trains on a two-topic corpus; returns the classifier and its training
    /// Gram matrix.
    pub fn fit(
        train: &LabeledCorpus,
        table: &EmbeddingTable,
        kernel: Kernel,
        c: f64,
    ) -> Result<(QsvmClassifier, KernelMatrix, DualSolution)> {
        let topics: [String; 2] = match train.topics() {
            [a, b] => [a.clone(), b.clone()],
            other => {
                return Err(Error::arg(format!(
                    "QSVM needs exactly two classes, found {}",
                    other.len()
                )))
            }
        };
        let mut pooled = Vec::with_capacity(train.len());
        let mut labels = Vec::with_capacity(train.len());
        for (text, topic) in train.examples() {
            let v = mean_vector(text, table).map_err(|e| match e {
                Error::Unclassifiable(m) => Error::arg(format!("training text: {m}")),
                e => e,
            })?;
            pooled.push(v);
            labels.push(if *topic == topics[0] { 1 } else { -1 });
        }
        let scaler = match kernel {
            Kernel::Zz { .. } => Some(FeatureScaler::fit(&pooled)?),
            Kernel::Dense => None,
        };
        let vectors: Vec<Vec<f64>> = match &scaler {
            Some(s) => pooled.iter().map(|v| s.transform(v)).collect(),
            None => pooled,
        };
        let k = kernel_matrix(&vectors, kernel)?;
        let sol = train_svm(&k, &labels, c)?;
        let model = SvmModel::from_solution(&vectors, &sol, kernel)?;
        Ok((QsvmClassifier { topics, scaler, model }, k, sol))
    }

    pub fn features(&self, text: &str, table: &EmbeddingTable) -> Result<Vec<f64>> {
        if table.dimension() != self.model.dimension {
            return Err(Error::arg(format!(
                "embeddings have dimension {}, model was trained on {}",
                table.dimension(),
                self.model.dimension
            )));
        }
        features(text, table, self.scaler.as_ref())
    }

    pub fn decision_value(&self, text: &str, table: &EmbeddingTable) -> Result<f64> {
        self.model.decision_value(&self.features(text, table)?)
    }

    pub fn predict(&self, text: &str, table: &EmbeddingTable) -> Result<&str> {
        let v = self.decision_value(text, table)?;
        Ok(&self.topics[if sign(v) > 0 { 0 } else { 1 }])
    }

    /// Texts without known words count as wrong.
    pub fn evaluate(&self, test: &LabeledCorpus, table: &EmbeddingTable) -> Result<QsvmReport> {
        if test.is_empty() {
            return Err(Error::arg("test corpus is empty"));
        }
        let mut decisions = Vec::with_capacity(test.len());
        let mut correct = 0;
        for (text, gold) in test.examples() {
            let (predicted, decision_value) = match self.decision_value(text, table) {
                Ok(v) => (Some(self.topics[if sign(v) > 0 { 0 } else { 1 }].clone()), Some(v)),
                Err(Error::Unclassifiable(_)) => (None, None),
                Err(e) => return Err(e),
            };
            if predicted.as_ref() == Some(gold) {
                correct += 1;
            }
            decisions.push(QsvmDecision {
                text: text.clone(),
                gold: gold.clone(),
                predicted,
                decision_value,
            });
        }
        Ok(QsvmReport {
            correct,
            total: test.len(),
            accuracy: correct as f64 / test.len() as f64,
            decisions,
        })
    }

    pub fn to_json<W: Write>(&self, w: W) -> Result<()> {
        serde_json::to_writer_pretty(w, self)?;
        Ok(())
    }

    pub fn from_json<R: Read>(r: R) -> Result<Self> {
        let m: QsvmClassifier = serde_json::from_reader(r)?;
        if m.model.support_vectors.iter().any(|v| v.len() != m.model.dimension) {
            return Err(Error::format(None, "support vectors disagree with the model dimension"));
        }
        Ok(m)
    }
}
