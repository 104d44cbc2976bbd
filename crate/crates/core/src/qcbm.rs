//! Quantum circuit Born machine over (prefix, suffix) pairs.
//!
//! Each prefix and suffix gets a binary index; the basis state of a pair is
//! the prefix bits followed by the suffix bits, so a 7×7 vocabulary fits in
//! `3 + 3` qubits. The learned distribution is the Born distribution of a
//! parametric circuit, fitted to the target by SPSA on `D_KL(P ‖ Q)`.

use std::collections::HashSet;
use std::f64::consts::PI;
use std::io::{Read, Write};

use rand::distributions::{Distribution, WeightedIndex};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::circuit::QcbmAnsatz;
use crate::error::{Error, Result};
use crate::rng::substream_seed;
use crate::sim::{bitstring, run_circuit, MAX_QUBITS};

/// Lower bound applied to `Q(x)` inside the logarithm.
pub const KL_FLOOR: f64 = 1e-12;
pub const DEFAULT_SMOOTHING: f64 = 0.1;

fn index_width(n: usize) -> usize {
    // ⌈log₂ n⌉, but never a zero-width register.
    (n.next_power_of_two().trailing_zeros() as usize).max(1)
}

/// Index tables for both sides of the pair vocabulary.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct BigramEncoding {
    pub prefixes: Vec<String>,
    pub suffixes: Vec<String>,
}

impl BigramEncoding {
    /// Prefixes and suffixes must each be unique.
    pub fn new(prefixes: Vec<String>, suffixes: Vec<String>) -> Result<Self> {
        for (side, list) in [("prefix", &prefixes), ("suffix", &suffixes)] {
            if list.is_empty() {
                return Err(Error::arg(format!("no {side} labels")));
            }
            let mut seen = HashSet::new();
            if let Some(dup) = list.iter().find(|l| !seen.insert(l.as_str())) {
                return Err(Error::arg(format!("{side} {dup:?} listed twice")));
            }
        }
        let enc = BigramEncoding { prefixes, suffixes };
        if enc.num_qubits() > MAX_QUBITS {
            return Err(Error::arg(format!(
                "encoding needs {} qubits, above the simulator limit of {MAX_QUBITS}",
                enc.num_qubits()
            )));
        }
        Ok(enc)
    }

    pub fn prefix_width(&self) -> usize {
        index_width(self.prefixes.len())
    }

    pub fn suffix_width(&self) -> usize {
        index_width(self.suffixes.len())
    }

    pub fn num_qubits(&self) -> usize {
        self.prefix_width() + self.suffix_width()
    }

    pub fn num_states(&self) -> usize {
        1 << self.num_qubits()
    }

    pub fn prefix_index(&self, prefix: &str) -> Option<usize> {
        self.prefixes.iter().position(|p| p == prefix)
    }

    pub fn suffix_index(&self, suffix: &str) -> Option<usize> {
        self.suffixes.iter().position(|s| s == suffix)
    }

    /// Basis index `prefix ∥ suffix`.
    pub fn join(&self, prefix_index: usize, suffix_index: usize) -> usize {
        (prefix_index << self.suffix_width()) | suffix_index
    }

    pub fn encode(&self, prefix: &str, suffix: &str) -> Option<usize> {
        Some(self.join(self.prefix_index(prefix)?, self.suffix_index(suffix)?))
    }

    /// Splits a basis index; `None` when either half is past its table.
    pub fn decode(&self, index: usize) -> Option<(&str, &str)> {
        let p = index >> self.suffix_width();
        let s = index & ((1 << self.suffix_width()) - 1);
        Some((self.prefixes.get(p)?.as_str(), self.suffixes.get(s)?.as_str()))
    }

    pub fn bitstring(&self, prefix: &str, suffix: &str) -> Option<String> {
        Some(bitstring(self.encode(prefix, suffix)?, self.num_qubits()))
    }
}

/// Probability vector over all `2^qubits` basis states.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TargetDistribution {
    probs: Vec<f64>,
}

impl TargetDistribution {
    pub fn new(probs: Vec<f64>) -> Result<Self> {
        if probs.iter().any(|p| !p.is_finite() || *p < 0.0) {
            return Err(Error::arg("probabilities must be finite and nonnegative"));
        }
        let total: f64 = probs.iter().sum();
        if (total - 1.0).abs() > 1e-12 {
            return Err(Error::arg(format!("probabilities sum to {total}")));
        }
        Ok(TargetDistribution { probs })
    }

    pub fn probs(&self) -> &[f64] {
        &self.probs
    }
}

/// Indexes prefixes and suffixes in first-appearance order and places
/// `weight / Σ weights` at each pair's basis state.
pub fn encode_distribution<S: AsRef<str>>(
    pairs: &[(S, S, f64)],
) -> Result<(BigramEncoding, TargetDistribution)> {
    if pairs.is_empty() {
        return Err(Error::arg("no pairs to encode"));
    }
    let mut prefixes: Vec<String> = Vec::new();
    let mut suffixes: Vec<String> = Vec::new();
    let mut seen = HashSet::new();
    let mut total = 0.0;
    for (p, s, w) in pairs {
        let (p, s) = (p.as_ref(), s.as_ref());
        if !w.is_finite() || *w < 0.0 {
            return Err(Error::arg(format!("weight {w} for ({p}, {s}) is not a nonnegative number")));
        }
        if !seen.insert((p, s)) {
            return Err(Error::arg(format!("pair ({p}, {s}) listed twice")));
        }
        if !prefixes.iter().any(|x| x == p) {
            prefixes.push(p.to_string());
        }
        if !suffixes.iter().any(|x| x == s) {
            suffixes.push(s.to_string());
        }
        total += w;
    }
    if total <= 0.0 {
        return Err(Error::arg("all pair weights are zero"));
    }
    let enc = BigramEncoding::new(prefixes, suffixes)?;
    let target = target_for(&enc, pairs.iter().map(|(p, s, w)| (p.as_ref(), s.as_ref(), *w)))?;
    Ok((enc, target))
}

/// Target over a fixed encoding. Every pair must be encodable.
pub fn target_for<'a, I>(enc: &BigramEncoding, pairs: I) -> Result<TargetDistribution>
where
    I: IntoIterator<Item = (&'a str, &'a str, f64)>,
{
    let mut probs = vec![0.0; enc.num_states()];
    for (p, s, w) in pairs {
        let i = enc
            .encode(p, s)
            .ok_or_else(|| Error::arg(format!("pair ({p}, {s}) is outside the encoding")))?;
        probs[i] += w;
    }
    let total: f64 = probs.iter().sum();
    if total <= 0.0 {
        return Err(Error::arg("target has no mass"));
    }
    probs.iter_mut().for_each(|p| *p /= total);
    TargetDistribution::new(probs)
}

/// `(1 − ε)·Q + ε·uniform`.
pub fn smooth(q: &TargetDistribution, epsilon: f64) -> Result<TargetDistribution> {
    if !(0.0..=1.0).contains(&epsilon) {
        return Err(Error::arg(format!("smoothing epsilon {epsilon} outside [0, 1]")));
    }
    if epsilon == 0.0 {
        return Ok(q.clone());
    }
    let u = 1.0 / q.probs.len() as f64;
    let mut probs: Vec<f64> = q.probs.iter().map(|p| (1.0 - epsilon) * p + epsilon * u).collect();
    let total: f64 = probs.iter().sum();
    probs.iter_mut().for_each(|p| *p /= total);
    TargetDistribution::new(probs)
}

/// `P[x] = |⟨x|U(θ)|0…0⟩|²`.
pub fn born_distribution(params: &[f64], ansatz: &QcbmAnsatz) -> Result<Vec<f64>> {
    Ok(run_circuit(&ansatz.build(params)?, None)?.probabilities())
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KlDivergence {
    pub value: f64,
    /// Some `x` had `P(x) > 0` but `Q(x)` below [`KL_FLOOR`].
    pub floor_hit: bool,
}

/// `Σ_{P(x)>0} P(x)·ln(P(x) / max(Q(x), 1e-12))`.
pub fn kl_divergence(p: &[f64], q: &[f64]) -> KlDivergence {
    let mut value = 0.0;
    let mut floor_hit = false;
    for (&px, &qx) in p.iter().zip(q) {
        if px > 0.0 {
            if qx < KL_FLOOR {
                floor_hit = true;
            }
            value += px * (px / qx.max(KL_FLOOR)).ln();
        }
    }
    KlDivergence { value, floor_hit }
}

/// Gain sequences `a_k = a / (A + k + 1)^α` and `c_k = c / (k + 1)^γ`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SpsaConfig {
    pub iterations: usize,
    pub a: f64,
    #[serde(rename = "A")]
    pub big_a: f64,
    pub c: f64,
    pub alpha: f64,
    pub gamma: f64,
    pub seed: u64,
}

impl Default for SpsaConfig {
    fn default() -> Self {
        SpsaConfig {
            iterations: 500,
            a: 0.2,
            big_a: 10.0,
            c: 0.1,
            alpha: 0.602,
            gamma: 0.101,
            seed: 0,
        }
    }
}

impl SpsaConfig {
    pub fn validate(&self) -> Result<()> {
        if self.iterations == 0 {
            return Err(Error::arg("SPSA needs at least one iteration"));
        }
        if !(self.a > 0.0 && self.c > 0.0) {
            return Err(Error::arg("SPSA gains a and c must be positive"));
        }
        if !(self.alpha > 0.0 && self.alpha <= 1.0 && self.gamma > 0.0 && self.gamma <= 1.0) {
            return Err(Error::arg("SPSA exponents must lie in (0, 1]"));
        }
        if self.big_a.is_nan() || self.big_a < 0.0 {
            return Err(Error::arg("SPSA stability constant A must be nonnegative"));
        }
        Ok(())
    }

    pub fn a_k(&self, k: usize) -> f64 {
        self.a / (self.big_a + k as f64 + 1.0).powf(self.alpha)
    }

    pub fn c_k(&self, k: usize) -> f64 {
        self.c / (k as f64 + 1.0).powf(self.gamma)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum SpsaOutcome {
    Completed,
    /// The objective returned a non-finite value during this iteration.
    NonFinite { iteration: usize },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainingTrace {
    pub initial_value: f64,
    /// Objective after each completed iteration.
    pub values: Vec<f64>,
    /// Parameters every `snapshot_every` iterations (and at the end).
    pub snapshots: Vec<(usize, Vec<f64>)>,
    pub snapshot_every: usize,
    pub final_params: Vec<f64>,
    pub final_value: f64,
    pub outcome: SpsaOutcome,
}

impl TrainingTrace {
    /// `iteration,value` rows, iteration 0 being the starting point.
    pub fn write_csv<W: Write>(&self, w: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(w);
        w.write_record(["iteration", "value"])?;
        w.write_record(["0".to_string(), self.initial_value.to_string()])?;
        for (k, v) in self.values.iter().enumerate() {
            w.write_record([(k + 1).to_string(), v.to_string()])?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn read_csv<R: Read>(r: R) -> Result<Vec<(usize, f64)>> {
        let mut rdr = csv::Reader::from_reader(r);
        let mut out = Vec::new();
        for rec in rdr.deserialize() {
            out.push(rec?);
        }
        Ok(out)
    }
}

const SNAPSHOT_EVERY: usize = 50;

/// Two-evaluation SPSA with Rademacher perturbations.
///
/// Each iteration draws `Δ ∈ {±1}ⁿ`, estimates
/// `g = (f(θ + c_kΔ) − f(θ − c_kΔ)) / (2c_k) · Δ⁻¹` and steps `θ ← θ − a_k·g`.
/// A non-finite objective stops the run and returns the trace so far.
pub fn spsa_minimize<F>(mut objective: F, config: &SpsaConfig, initial: &[f64]) -> Result<TrainingTrace>
where
    F: FnMut(&[f64]) -> f64,
{
    config.validate()?;
    let initial_value = objective(initial);
    if !initial_value.is_finite() {
        return Err(Error::arg("objective is not finite at the initial point"));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let n = initial.len();
    let mut theta = initial.to_vec();
    let mut values = Vec::with_capacity(config.iterations);
    let mut snapshots = vec![(0, theta.clone())];
    let mut outcome = SpsaOutcome::Completed;
    let mut plus = vec![0.0; n];
    let mut minus = vec![0.0; n];
    let mut current = initial_value;

    for k in 0..config.iterations {
        let ck = config.c_k(k);
        let ak = config.a_k(k);
        let delta: Vec<f64> = (0..n).map(|_| if rng.gen::<bool>() { 1.0 } else { -1.0 }).collect();
        for i in 0..n {
            plus[i] = theta[i] + ck * delta[i];
            minus[i] = theta[i] - ck * delta[i];
        }
        let fp = objective(&plus);
        let fm = objective(&minus);
        if !fp.is_finite() || !fm.is_finite() {
            outcome = SpsaOutcome::NonFinite { iteration: k };
            break;
        }
        let scale = (fp - fm) / (2.0 * ck);
        // Δᵢ⁻¹ = Δᵢ for ±1 entries.
        for i in 0..n {
            theta[i] -= ak * scale * delta[i];
        }
        let v = objective(&theta);
        if !v.is_finite() {
            outcome = SpsaOutcome::NonFinite { iteration: k };
            break;
        }
        current = v;
        values.push(v);
        if (k + 1) % SNAPSHOT_EVERY == 0 {
            snapshots.push((k + 1, theta.clone()));
        }
    }
    if snapshots.last().map(|(k, _)| *k) != Some(values.len()) {
        snapshots.push((values.len(), theta.clone()));
    }
    Ok(TrainingTrace {
        initial_value,
        values,
        snapshots,
        snapshot_every: SNAPSHOT_EVERY,
        final_params: theta,
        final_value: current,
        outcome,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct QcbmConfig {
    pub layers: usize,
    pub spsa: SpsaConfig,
    /// Estimate `P` from this many shots per evaluation instead of exactly.
    #[serde(default)]
    pub shots: Option<u64>,
}

impl Default for QcbmConfig {
    fn default() -> Self {
        QcbmConfig {
            layers: QcbmAnsatz::DEFAULT_LAYERS,
            spsa: SpsaConfig::default(),
            shots: None,
        }
    }
}

/// Trained Born machine, persisted as JSON.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QcbmModel {
    pub encoding: BigramEncoding,
    pub ansatz: QcbmAnsatz,
    pub params: Vec<f64>,
    pub final_kl: f64,
}

impl QcbmModel {
    pub fn distribution(&self) -> Result<Vec<f64>> {
        born_distribution(&self.params, &self.ansatz)
    }

    pub fn to_json<W: Write>(&self, w: W) -> Result<()> {
        serde_json::to_writer_pretty(w, self)?;
        Ok(())
    }

    pub fn from_json<R: Read>(r: R) -> Result<Self> {
        let m: QcbmModel = serde_json::from_reader(r)?;
        if m.ansatz.num_qubits != m.encoding.num_qubits() || m.params.len() != m.ansatz.param_count() {
            return Err(Error::format(None, "model ansatz does not match its encoding or parameters"));
        }
        Ok(m)
    }
}

/// Starting parameters: uniform in `[0, 2π)` from the `qcbm/init` substream.
pub fn initial_params(ansatz: &QcbmAnsatz, seed: u64) -> Vec<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(substream_seed(seed, "qcbm/init"));
    (0..ansatz.param_count()).map(|_| rng.gen_range(0.0..2.0 * PI)).collect()
}

/// Fits the ansatz to `target` by minimizing `D_KL(P_θ ‖ Q)` with SPSA.
/// The SPSA seed also drives parameter initialization.
pub fn train_qcbm(
    encoding: &BigramEncoding,
    target: &TargetDistribution,
    config: &QcbmConfig,
) -> Result<(QcbmModel, TrainingTrace)> {
    let ansatz = QcbmAnsatz::new(encoding.num_qubits(), config.layers);
    if target.probs().len() != encoding.num_states() {
        return Err(Error::arg("target size does not match the encoding"));
    }
    let q = target.probs();
    let mut shot_rng = ChaCha8Rng::seed_from_u64(substream_seed(config.spsa.seed, "qcbm/shots"));
    let objective = |theta: &[f64]| {
        let p = match (config.shots, born_distribution(theta, &ansatz)) {
            (_, Err(_)) => return f64::NAN,
            (None, Ok(p)) => p,
            (Some(shots), Ok(p)) => match shot_frequencies(&p, shots, &mut shot_rng) {
                Ok(f) => f,
                Err(_) => return f64::NAN,
            },
        };
        kl_divergence(&p, q).value
    };
    let init = initial_params(&ansatz, config.spsa.seed);
    let spsa = SpsaConfig {
        seed: substream_seed(config.spsa.seed, "qcbm/spsa"),
        ..config.spsa
    };
    let trace = spsa_minimize(objective, &spsa, &init)?;
    let model = QcbmModel {
        encoding: encoding.clone(),
        ansatz,
        params: trace.final_params.clone(),
        final_kl: trace.final_value,
    };
    Ok((model, trace))
}

fn shot_frequencies(p: &[f64], shots: u64, rng: &mut ChaCha8Rng) -> Result<Vec<f64>> {
    if shots == 0 {
        return Err(Error::arg("shot count must be positive"));
    }
    let dist = WeightedIndex::new(p).map_err(|e| Error::arg(format!("cannot sample: {e}")))?;
    let mut f = vec![0.0; p.len()];
    for _ in 0..shots {
        f[dist.sample(rng)] += 1.0;
    }
    f.iter_mut().for_each(|x| *x /= shots as f64);
    Ok(f)
}

#[derive(Debug, Clone, PartialEq)]
pub struct Generation {
    pub phrases: Vec<(String, String)>,
    /// Draws that landed on an index outside the prefix or suffix table.
    pub rejected: usize,
}

const REJECTION_WINDOW: usize = 1000;

/// Samples `count` phrases from the model's Born distribution. Draws outside
/// the encoded tables are redrawn; more than 99% rejections within a window
/// of 1000 draws aborts.
pub fn generate(model: &QcbmModel, count: usize, seed: u64) -> Result<Generation> {
    let p = model.distribution()?;
    sample_phrases(&model.encoding, &p, count, seed)
}

pub fn sample_phrases(enc: &BigramEncoding, p: &[f64], count: usize, seed: u64) -> Result<Generation> {
    let dist = WeightedIndex::new(p).map_err(|e| Error::arg(format!("cannot sample: {e}")))?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut phrases = Vec::with_capacity(count);
    let mut rejected = 0usize;
    let (mut window_draws, mut window_rejects) = (0usize, 0usize);
    while phrases.len() < count {
        let idx = dist.sample(&mut rng);
        window_draws += 1;
        match enc.decode(idx) {
            Some((a, b)) => phrases.push((a.to_string(), b.to_string())),
            None => {
                rejected += 1;
                window_rejects += 1;
            }
        }
        if window_draws == REJECTION_WINDOW {
            if window_rejects * 100 > 99 * REJECTION_WINDOW {
                return Err(Error::SamplingAborted(format!(
                    "{window_rejects} of {REJECTION_WINDOW} draws fell outside the encoded pairs"
                )));
            }
            window_draws = 0;
            window_rejects = 0;
        }
    }
    Ok(Generation { phrases, rejected })
}

/// The ten colour/item phrases, each with unit weight.
pub fn color_item_pairs() -> Vec<(&'static str, &'static str, f64)> {
    [
        ("green", "apple"),
        ("red", "apple"),
        ("yellow", "banana"),
        ("ripe", "banana"),
        ("red", "pepper"),
        ("yellow", "pepper"),
        ("black", "shoes"),
        ("red", "dress"),
        ("blue", "suit"),
        ("white", "shirt"),
    ]
    .into_iter()
    .map(|(a, b)| (a, b, 1.0))
    .collect()
}

/// Reads `prefix,suffix,weight` rows; a header row is tolerated.
pub fn read_pairs_csv<R: Read>(r: R) -> Result<Vec<(String, String, f64)>> {
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(false)
        .trim(csv::Trim::All)
        .flexible(true)
        .from_reader(r);
    let mut out = Vec::new();
    for (n, rec) in rdr.records().enumerate() {
        let rec = rec?;
        if rec.len() != 3 {
            return Err(Error::format(Some(n + 1), format!("expected 3 fields, found {}", rec.len())));
        }
        match rec[2].parse::<f64>() {
            Ok(w) => out.push((rec[0].to_string(), rec[1].to_string(), w)),
            Err(_) if n == 0 => continue,
            Err(_) => return Err(Error::format(Some(n + 1), format!("bad weight {:?}", &rec[2]))),
        }
    }
    if out.is_empty() {
        return Err(Error::format(None, "no pairs found"));
    }
    Ok(out)
}
