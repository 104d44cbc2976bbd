//! Bag-of-words topic classifier built from rotation accumulation.
//!
//! Training counts how often each word co-occurs with each topic; the weight
//! of a (word, topic) pair is that count times a fixed rotation increment.
//! Classifying a phrase allocates one qubit per (recognized word, topic),
//! rotates it by the learned angle and CNOTs it into that topic's sum qubit.
//! The topic whose sum qubit most often reads 1 wins.

use std::collections::BTreeMap;
use std::f64::consts::PI;
use std::io::{BufRead, Read, Write};

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::circuit::{x_rotation, Circuit, SATURATION_ANGLE};
use crate::error::{Error, Result};
use crate::rng::substream_seed;
use crate::sim::run_circuit;

pub const DEFAULT_INCREMENT: f64 = PI / 24.0;
pub const DEFAULT_MAX_WORDS: usize = 9;
pub const DEFAULT_SHOTS: u64 = 1000;

/// Lowercases, splits on whitespace and trims ASCII punctuation from both
/// ends of each token. Tokens that are all punctuation disappear.
pub fn tokenize(text: &str) -> Vec<String> {
    text.split_whitespace()
        .map(|t| t.trim_matches(|c: char| c.is_ascii_punctuation()).to_lowercase())
        .filter(|t| !t.is_empty())
        .collect()
}

/// `(text, topic)` examples plus the ordered topic list.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct LabeledCorpus {
    topics: Vec<String>,
    examples: Vec<(String, String)>,
}

impl LabeledCorpus {
    /// Topics are taken in first-appearance order.
    pub fn new(examples: Vec<(String, String)>) -> Self {
        let mut topics: Vec<String> = Vec::new();
        for (_, t) in &examples {
            if !topics.contains(t) {
                topics.push(t.clone());
            }
        }
        LabeledCorpus { topics, examples }
    }

    pub fn with_topics(topics: Vec<String>, examples: Vec<(String, String)>) -> Result<Self> {
        if let Some((_, t)) = examples.iter().find(|(_, t)| !topics.contains(t)) {
            return Err(Error::arg(format!("label {t:?} is not a declared topic")));
        }
        Ok(LabeledCorpus { topics, examples })
    }

    /// Parses `<label>\t<text>` lines. Blank lines are skipped. Lines without
    /// a tab are split at the first whitespace, which also accepts the
    /// `label text` layout of the lambeq sample files.
    pub fn parse<R: Read>(reader: R) -> Result<Self> {
        let mut examples = Vec::new();
        for (n, line) in std::io::BufReader::new(reader).lines().enumerate() {
            let line = line?;
            let line = line.trim_end_matches('\r');
            if line.trim().is_empty() {
                continue;
            }
            let (label, text) = line
                .split_once('\t')
                .or_else(|| line.trim_start().split_once(char::is_whitespace))
                .ok_or_else(|| Error::format(Some(n + 1), "expected <label>\\t<text>"))?;
            let label = label.trim();
            if label.is_empty() {
                return Err(Error::format(Some(n + 1), "empty label"));
            }
            examples.push((text.trim().to_string(), label.to_string()));
        }
        Ok(LabeledCorpus::new(examples))
    }

    pub fn write<W: Write>(&self, mut w: W) -> Result<()> {
        for (text, label) in &self.examples {
            writeln!(w, "{label}\t{text}")?;
        }
        Ok(())
    }

    pub fn topics(&self) -> &[String] {
        &self.topics
    }

    pub fn examples(&self) -> &[(String, String)] {
        &self.examples
    }

    pub fn len(&self) -> usize {
        self.examples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.examples.is_empty()
    }

    /// Number of examples per topic, in topic order.
    pub fn class_balance(&self) -> Vec<(String, usize)> {
        self.topics
            .iter()
            .map(|t| (t.clone(), self.examples.iter().filter(|(_, l)| l == t).count()))
            .collect()
    }
}

/// Trained co-occurrence counts; the rotation angle of a pair is
/// `increment × count`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WordTopicWeights {
    pub topics: Vec<String>,
    pub increment: f64,
    pub counts: BTreeMap<String, Vec<u32>>,
}

impl WordTopicWeights {
    pub fn vocabulary(&self) -> impl Iterator<Item = &str> {
        self.counts.keys().map(String::as_str)
    }

    pub fn contains(&self, word: &str) -> bool {
        self.counts.contains_key(word)
    }

    /// Rotation angle for `(word, topic index)`; zero for unknown words.
    pub fn angle(&self, word: &str, topic: usize) -> f64 {
        self.counts
            .get(word)
            .and_then(|c| c.get(topic))
            .map_or(0.0, |&c| self.increment * c as f64)
    }

    /// Pairs whose angle has passed the point where `sin²` starts falling.
    pub fn saturated(&self) -> Vec<(String, String, f64)> {
        let mut out = Vec::new();
        for (w, counts) in &self.counts {
            for (t, &c) in counts.iter().enumerate() {
                let a = self.increment * c as f64;
                if a > SATURATION_ANGLE {
                    out.push((w.clone(), self.topics[t].clone(), a));
                }
            }
        }
        out
    }

    pub fn to_json<W: Write>(&self, w: W) -> Result<()> {
        serde_json::to_writer_pretty(w, self)?;
        Ok(())
    }

    pub fn from_json<R: Read>(r: R) -> Result<Self> {
        let w: WordTopicWeights = serde_json::from_reader(r)?;
        if w.topics.is_empty() || !(w.increment > 0.0 && w.increment.is_finite()) {
            return Err(Error::format(None, "weights need topics and a positive increment"));
        }
        if let Some((word, _)) = w.counts.iter().find(|(_, c)| c.len() != w.topics.len()) {
            return Err(Error::format(None, format!("counts for {word:?} do not match topic count")));
        }
        Ok(w)
    }
}

/// Counts token co-occurrences with topics, drops words spread evenly over
/// all topics, and keeps the `max_words` most discriminative of the rest.
///
/// Discriminativeness is the gap between a word's largest and second-largest
/// topic counts; ties go to the more frequent word, then alphabetical order.
pub fn train(corpus: &LabeledCorpus, increment: f64, max_words: usize) -> Result<WordTopicWeights> {
    if corpus.is_empty() {
        return Err(Error::arg("cannot train on an empty corpus"));
    }
    if !(increment > 0.0 && increment.is_finite()) {
        return Err(Error::arg(format!("increment must be positive, got {increment}")));
    }
    if max_words == 0 {
        return Err(Error::arg("max_words must be at least 1"));
    }
    let topics = corpus.topics().to_vec();
    let nt = topics.len();
    let mut counts: BTreeMap<String, Vec<u32>> = BTreeMap::new();
    for (text, label) in corpus.examples() {
        let t = topics.iter().position(|x| x == label).expect("corpus labels are topics");
        for word in tokenize(text) {
            counts.entry(word).or_insert_with(|| vec![0; nt])[t] += 1;
        }
    }

    let mut ranked: Vec<(String, Vec<u32>, u32, u32)> = counts
        .into_iter()
        .filter(|(_, c)| nt < 2 || c.iter().any(|&x| x != c[0]))
        .map(|(w, c)| {
            let mut sorted = c.clone();
            sorted.sort_unstable_by(|a, b| b.cmp(a));
            let gap = sorted[0] - sorted.get(1).copied().unwrap_or(0);
            let total = c.iter().sum();
            (w, c, gap, total)
        })
        .collect();
    ranked.sort_by(|a, b| b.2.cmp(&a.2).then(b.3.cmp(&a.3)).then(a.0.cmp(&b.0)));
    ranked.truncate(max_words);

    let weights = WordTopicWeights {
        topics,
        increment,
        counts: ranked.into_iter().map(|(w, c, _, _)| (w, c)).collect(),
    };
    for (w, t, a) in weights.saturated() {
        log::warn!("angle for ({w}, {t}) is {a:.4} rad, past saturation at pi/2");
    }
    Ok(weights)
}

/// Classification circuit plus its qubit layout.
#[derive(Debug, Clone)]
pub struct ClassificationCircuit {
    pub circuit: Circuit,
    /// Recognized phrase tokens, in phrase order (repeats kept).
    pub words: Vec<String>,
    /// Per topic: the word qubits followed by the sum qubit.
    pub blocks: Vec<Vec<usize>>,
}

impl ClassificationCircuit {
    pub fn sum_qubit(&self, topic: usize) -> usize {
        *self.blocks[topic].last().unwrap()
    }
}

/// Lays out `(words + 1) × topics` qubits: topic `t` owns a contiguous block
/// of word qubits and ends with its sum qubit.
pub fn build_classification_circuit(
    phrase: &str,
    weights: &WordTopicWeights,
) -> Result<ClassificationCircuit> {
    let words: Vec<String> = tokenize(phrase).into_iter().filter(|w| weights.contains(w)).collect();
    if words.is_empty() {
        return Err(Error::Unclassifiable(format!("no known words in {phrase:?}")));
    }
    let nw = words.len();
    let nt = weights.topics.len();
    let mut circuit = Circuit::new((nw + 1) * nt)?;
    let mut blocks = Vec::with_capacity(nt);
    for t in 0..nt {
        let base = t * (nw + 1);
        let sum = base + nw;
        for (i, w) in words.iter().enumerate() {
            circuit.single(base + i, x_rotation(weights.angle(w, t))?)?;
        }
        for i in 0..nw {
            circuit.cnot(base + i, sum)?;
        }
        blocks.push((base..=sum).collect());
    }
    Ok(ClassificationCircuit {
        circuit,
        words,
        blocks,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ReadoutMode {
    Exact,
    Shots { shots: u64, seed: u64 },
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Classification {
    pub topic: String,
    /// `P(sum qubit = 1)` per topic, in topic order.
    pub scores: Vec<(String, f64)>,
    /// More than one topic shares the best score (within 1e-9).
    pub tie: bool,
}

const TIE_TOL: f64 = 1e-9;

/// Scores every topic and returns the winner; ties go to the earliest topic.
///
/// Topic registers never interact, so each is simulated on its own
/// `words + 1` qubits.
pub fn classify(phrase: &str, weights: &WordTopicWeights, mode: ReadoutMode) -> Result<Classification> {
    let cc = build_classification_circuit(phrase, weights)?;
    let mut scores = Vec::with_capacity(weights.topics.len());
    for (t, block) in cc.blocks.iter().enumerate() {
        let sub = cc.circuit.restrict(block)?;
        let sum = block.len() - 1;
        let state = run_circuit(&sub, None)?;
        let score = match mode {
            ReadoutMode::Exact => state.marginal_probability_one(sum)?,
            ReadoutMode::Shots { shots, seed } => {
                let mut rng = ChaCha8Rng::seed_from_u64(substream_seed(seed, &format!("bow/topic/{t}")));
                state.sample_shots_with(shots, &mut rng)?.frequency_one(sum)
            }
        };
        scores.push((weights.topics[t].clone(), score));
    }
    let best = scores.iter().map(|(_, s)| *s).fold(f64::NEG_INFINITY, f64::max);
    let winners: Vec<usize> = (0..scores.len()).filter(|&i| best - scores[i].1 <= TIE_TOL).collect();
    Ok(Classification {
        topic: scores[winners[0]].0.clone(),
        tie: winners.len() > 1,
        scores,
    })
}

/// Per-phrase outcome of [`evaluate`].
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Decision {
    pub text: String,
    pub gold: String,
    /// `None` when the phrase had no known words.
    pub predicted: Option<Classification>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AccuracyReport {
    pub decisions: Vec<Decision>,
    pub correct: usize,
    pub total: usize,
    pub accuracy: f64,
}

/// Classifies every test example. Unclassifiable phrases count as wrong.
pub fn evaluate(test: &LabeledCorpus, weights: &WordTopicWeights, mode: ReadoutMode) -> Result<AccuracyReport> {
    if test.is_empty() {
        return Err(Error::arg("test corpus is empty"));
    }
    let mut decisions = Vec::with_capacity(test.len());
    let mut correct = 0;
    for (i, (text, gold)) in test.examples().iter().enumerate() {
        let mode = match mode {
            ReadoutMode::Shots { shots, seed } => ReadoutMode::Shots {
                shots,
                seed: substream_seed(seed, &format!("bow/example/{i}")),
            },
            m => m,
        };
        let predicted = match classify(text, weights, mode) {
            Ok(c) => Some(c),
            Err(Error::Unclassifiable(_)) => None,
            Err(e) => return Err(e),
        };
        if predicted.as_ref().is_some_and(|c| &c.topic == gold) {
            correct += 1;
        }
        decisions.push(Decision {
            text: text.clone(),
            gold: gold.clone(),
            predicted,
        });
    }
    Ok(AccuracyReport {
        correct,
        total: test.len(),
        accuracy: correct as f64 / test.len() as f64,
        decisions,
    })
}
