//! Link recovery on a bipartite cue → target association graph.
//!
//! Subgraphs are grown around a seed cue, their links split into train and
//! test sets, and three predictors propose held-out links: a Born machine
//! trained on the train links, a weighted 3-path ("shared links") score and a
//! uniform random baseline.

use std::collections::{BTreeMap, BTreeSet, HashSet};
use std::fmt;
use std::io::{Read, Write};

use rand::seq::{index, SliceRandom};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::qcbm::{self, BigramEncoding, QcbmConfig};
use crate::rng::{substream, substream_seed};

pub const DEFAULT_TEST_FRACTION: f64 = 0.2;
pub const DEFAULT_BATCH: usize = 1;
const SYNTHETIC_GRAPH: &str = include_str!("../fixtures/assoc_graph.csv");

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Link {
    pub cue: String,
    pub target: String,
    pub weight: f64,
}

/// Directed weighted links from cues to targets. A word may appear on both
/// sides; the two roles are kept apart.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct BipartiteGraph {
    out: BTreeMap<String, BTreeMap<String, f64>>,
    inc: BTreeMap<String, BTreeMap<String, f64>>,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct ParseStats {
    pub rows: usize,
    pub skipped: usize,
    pub merged: usize,
}

impl BipartiteGraph {
    /// Inserts or raises a link; returns true when the link already existed.
    pub fn insert(&mut self, cue: &str, target: &str, weight: f64) -> Result<bool> {
        if !(weight > 0.0 && weight.is_finite()) {
            return Err(Error::arg(format!("link {cue}->{target} has weight {weight}")));
        }
        let slot = self.out.entry(cue.to_string()).or_default().entry(target.to_string());
        let existed = matches!(slot, std::collections::btree_map::Entry::Occupied(_));
        let w = slot.or_insert(weight);
        *w = w.max(weight);
        let w = *w;
        self.inc.entry(target.to_string()).or_default().insert(cue.to_string(), w);
        Ok(existed)
    }

    pub fn from_links<'a, I: IntoIterator<Item = (&'a str, &'a str, f64)>>(links: I) -> Result<Self> {
        let mut g = BipartiteGraph::default();
        for (c, t, w) in links {
            g.insert(c, t, w)?;
        }
        Ok(g)
    }

    /// The bundled 50-node synthetic graph (25 cues, 25 targets).
    pub fn synthetic() -> Self {
        parse_norms(SYNTHETIC_GRAPH.as_bytes()).expect("bundled graph parses").0
    }

    pub fn weight(&self, cue: &str, target: &str) -> Option<f64> {
        self.out.get(cue)?.get(target).copied()
    }

    pub fn cues(&self) -> impl Iterator<Item = &str> {
        self.out.keys().map(String::as_str)
    }

    pub fn targets(&self) -> impl Iterator<Item = &str> {
        self.inc.keys().map(String::as_str)
    }

    pub fn num_cues(&self) -> usize {
        self.out.len()
    }

    pub fn num_targets(&self) -> usize {
        self.inc.len()
    }

    pub fn num_links(&self) -> usize {
        self.out.values().map(BTreeMap::len).sum()
    }

    pub fn out_links(&self, cue: &str) -> impl Iterator<Item = (&str, f64)> {
        self.out.get(cue).into_iter().flatten().map(|(t, w)| (t.as_str(), *w))
    }

    pub fn in_links(&self, target: &str) -> impl Iterator<Item = (&str, f64)> {
        self.inc.get(target).into_iter().flatten().map(|(c, w)| (c.as_str(), *w))
    }

    pub fn links(&self) -> impl Iterator<Item = Link> + '_ {
        self.out.iter().flat_map(|(c, ts)| {
            ts.iter().map(move |(t, w)| Link {
                cue: c.clone(),
                target: t.clone(),
                weight: *w,
            })
        })
    }
}

fn column(header: &[String], names: &[&str]) -> Option<usize> {
    header.iter().position(|h| names.contains(&h.as_str()))
}

/// Reads `cue,target,forward_strength` rows.
///
/// A header row is optional. When present, columns are located by name
/// (`cue`, `target`, and `forward_strength`, `fsg` or `strength`), so wider
/// exports work unchanged. Words are lowercased. Repeated links keep the
/// larger strength. Rows whose strength is not a number in (0, 1] are
/// skipped with a warning.
pub fn parse_norms<R: Read>(reader: R) -> Result<(BipartiteGraph, ParseStats)> {
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(false)
        .flexible(true)
        .trim(csv::Trim::All)
        .from_reader(reader);
    let mut cols = (0, 1, 2);
    let mut g = BipartiteGraph::default();
    let mut stats = ParseStats::default();
    for (n, rec) in rdr.records().enumerate() {
        let rec = rec?;
        let line = n + 1;
        if n == 0 {
            let header: Vec<String> = rec.iter().map(|f| f.to_ascii_lowercase()).collect();
            if let (Some(c), Some(t), Some(s)) = (
                column(&header, &["cue"]),
                column(&header, &["target"]),
                column(&header, &["forward_strength", "fsg", "strength"]),
            ) {
                cols = (c, t, s);
                continue;
            }
        }
        if rec.iter().all(str::is_empty) {
            continue;
        }
        stats.rows += 1;
        let field = |i: usize| rec.get(i).unwrap_or("");
        let (cue, target) = (field(cols.0).to_lowercase(), field(cols.1).to_lowercase());
        let strength = field(cols.2).parse::<f64>().ok().filter(|w| *w > 0.0 && *w <= 1.0);
        match strength {
            Some(w) if !cue.is_empty() && !target.is_empty() => {
                if g.insert(&cue, &target, w)? {
                    stats.merged += 1;
                }
            }
            _ => {
                log::warn!("line {line}: skipping row {:?}", rec.iter().collect::<Vec<_>>());
                stats.skipped += 1;
            }
        }
    }
    if g.num_links() == 0 {
        return Err(Error::format(None, "no usable cue,target,strength rows"));
    }
    log::info!(
        "parsed {} cues, {} targets, {} links ({} rows, {} skipped, {} merged)",
        g.num_cues(),
        g.num_targets(),
        g.num_links(),
        stats.rows,
        stats.skipped,
        stats.merged
    );
    Ok((g, stats))
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SubgraphSample {
    pub seed: String,
    /// Cues and targets in admission order.
    pub cues: Vec<String>,
    pub targets: Vec<String>,
    /// Every graph link between a selected cue and a selected target.
    pub links: Vec<Link>,
    pub log: Vec<String>,
}

impl SubgraphSample {
    pub fn num_nodes(&self) -> usize {
        self.cues.len() + self.targets.len()
    }

    pub fn write_log<W: Write>(&self, mut w: W) -> Result<()> {
        for line in &self.log {
            writeln!(w, "{line}")?;
        }
        Ok(())
    }
}

/// Grows a subgraph of `node_count / 2` cues and as many targets around
/// `seed`. Sides alternate, starting with targets. On each turn every
/// unselected node of that side is scored by the total weight of its links
/// into the selected nodes of the other side, and the best `k` positive
/// scores are admitted (ties go to the lexicographically smaller word).
pub fn grow_subgraph(g: &BipartiteGraph, seed: &str, node_count: usize, k: usize) -> Result<SubgraphSample> {
    if node_count < 2 || !node_count.is_multiple_of(2) {
        return Err(Error::arg(format!("node count {node_count} must be even and at least 2")));
    }
    if k == 0 {
        return Err(Error::arg("batch size k must be at least 1"));
    }
    if g.out_links(seed).next().is_none() {
        return Err(Error::arg(format!("seed {seed:?} is not a cue with links")));
    }
    let half = node_count / 2;
    let mut cues = vec![seed.to_string()];
    let mut targets: Vec<String> = Vec::new();
    let mut chosen_cues: BTreeSet<String> = cues.iter().cloned().collect();
    let mut chosen_targets: BTreeSet<String> = BTreeSet::new();
    let mut log = vec![format!("seed cue {seed}")];
    let mut target_turn = true;
    let mut step = 0;
    let mut stalled = 0;

    while cues.len() < half || targets.len() < half {
        let side_full = if target_turn { targets.len() >= half } else { cues.len() >= half };
        if side_full {
            stalled += 1;
            if stalled == 2 {
                return Err(Error::PartialSample {
                    requested: node_count,
                    cues: cues.len(),
                    targets: targets.len(),
                    shortfall: node_count - cues.len() - targets.len(),
                });
            }
            target_turn = !target_turn;
            continue;
        }
        let mut scores: BTreeMap<&str, f64> = BTreeMap::new();
        if target_turn {
            for c in &chosen_cues {
                for (t, w) in g.out_links(c) {
                    if !chosen_targets.contains(t) {
                        *scores.entry(t).or_default() += w;
                    }
                }
            }
        } else {
            for t in &chosen_targets {
                for (c, w) in g.in_links(t) {
                    if !chosen_cues.contains(c) {
                        *scores.entry(c).or_default() += w;
                    }
                }
            }
        }
        let mut ranked: Vec<(&str, f64)> = scores.into_iter().filter(|(_, s)| *s > 0.0).collect();
        // BTreeMap order already makes ties lexicographic; the sort is stable.
        ranked.sort_by(|a, b| b.1.total_cmp(&a.1));
        let room = half - if target_turn { targets.len() } else { cues.len() };
        if ranked.is_empty() {
            // The other side may still have frontier left over from a
            // batch-limited turn; give up only when neither side moves.
            stalled += 1;
            if stalled == 2 {
                return Err(Error::PartialSample {
                    requested: node_count,
                    cues: cues.len(),
                    targets: targets.len(),
                    shortfall: node_count - cues.len() - targets.len(),
                });
            }
            target_turn = !target_turn;
            continue;
        }
        stalled = 0;
        step += 1;
        for (word, score) in ranked.into_iter().take(k.min(room)) {
            let side = if target_turn { "target" } else { "cue" };
            log.push(format!("step {step}: +{side} {word} (score {score:.4})"));
            if target_turn {
                targets.push(word.to_string());
                chosen_targets.insert(word.to_string());
            } else {
                cues.push(word.to_string());
                chosen_cues.insert(word.to_string());
            }
        }
        target_turn = !target_turn;
    }

    let mut links = Vec::new();
    for c in &cues {
        for t in &targets {
            if let Some(w) = g.weight(c, t) {
                links.push(Link {
                    cue: c.clone(),
                    target: t.clone(),
                    weight: w,
                });
            }
        }
    }
    log.push(format!("done: {} cues, {} targets, {} links", cues.len(), targets.len(), links.len()));
    Ok(SubgraphSample {
        seed: seed.to_string(),
        cues,
        targets,
        links,
        log,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LinkSplit {
    pub cues: Vec<String>,
    pub targets: Vec<String>,
    pub train: Vec<Link>,
    pub test: Vec<Link>,
    pub fraction: f64,
    pub seed: u64,
}

impl LinkSplit {
    fn train_set(&self) -> HashSet<(&str, &str)> {
        self.train.iter().map(|l| (l.cue.as_str(), l.target.as_str())).collect()
    }

    /// Every cue × target pair of the subgraph that is not a train link, in
    /// lexicographic order.
    pub fn candidates(&self) -> Vec<(String, String)> {
        let train = self.train_set();
        let mut cs: Vec<&String> = self.cues.iter().collect();
        let mut ts: Vec<&String> = self.targets.iter().collect();
        cs.sort();
        ts.sort();
        let mut out = Vec::new();
        for c in &cs {
            for t in &ts {
                if !train.contains(&(c.as_str(), t.as_str())) {
                    out.push(((*c).clone(), (*t).clone()));
                }
            }
        }
        out
    }
}

/// Holds out `round(fraction · |links|)` links chosen uniformly at random.
pub fn split_links(sample: &SubgraphSample, fraction: f64, seed: u64) -> Result<LinkSplit> {
    if !(fraction > 0.0 && fraction < 1.0) {
        return Err(Error::arg(format!("test fraction {fraction} outside (0, 1)")));
    }
    let n = sample.links.len();
    let needed = ((1.0 / fraction).ceil() as usize).max(2);
    if n < needed {
        return Err(Error::arg(format!("{n} links is too few to split at {fraction} (need {needed})")));
    }
    let n_test = (fraction * n as f64).round() as usize;
    let mut rng = substream(seed, "assoc/split");
    let held: BTreeSet<usize> = index::sample(&mut rng, n, n_test).into_iter().collect();
    let (mut train, mut test) = (Vec::new(), Vec::new());
    for (i, l) in sample.links.iter().enumerate() {
        if held.contains(&i) {
            test.push(l.clone());
        } else {
            train.push(l.clone());
        }
    }
    Ok(LinkSplit {
        cues: sample.cues.clone(),
        targets: sample.targets.clone(),
        train,
        test,
        fraction,
        seed,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Proposal {
    pub cue: String,
    pub target: String,
    pub score: f64,
}

fn top_m(mut scored: Vec<Proposal>, m: usize) -> Vec<Proposal> {
    scored.sort_by(|a, b| {
        b.score
            .total_cmp(&a.score)
            .then_with(|| a.cue.cmp(&b.cue))
            .then_with(|| a.target.cmp(&b.target))
    });
    scored.truncate(m);
    scored
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct QcbmPrediction {
    pub proposals: Vec<Proposal>,
    pub initial_kl: f64,
    pub final_kl: f64,
}

/// Trains a Born machine on the train links (weights as probabilities,
/// optionally smoothed) and ranks non-train pairs by learned probability.
pub fn predict_qcbm(split: &LinkSplit, config: &QcbmConfig, smoothing: f64, m: usize) -> Result<QcbmPrediction> {
    let encoding = BigramEncoding::new(split.cues.clone(), split.targets.clone())?;
    let target = qcbm::target_for(
        &encoding,
        split.train.iter().map(|l| (l.cue.as_str(), l.target.as_str(), l.weight)),
    )?;
    let target = qcbm::smooth(&target, smoothing)?;
    let (model, trace) = qcbm::train_qcbm(&encoding, &target, config)?;
    let p = model.distribution()?;
    let scored = split
        .candidates()
        .into_iter()
        .map(|(c, t)| {
            let score = p[encoding.encode(&c, &t).expect("candidate inside encoding")];
            Proposal { cue: c, target: t, score }
        })
        .collect();
    Ok(QcbmPrediction {
        proposals: top_m(scored, m),
        initial_kl: trace.initial_value,
        final_kl: trace.final_value,
    })
}

/// Scores each non-train pair `(c, t)` by the sum over train paths
/// `c → t′ ← c′ → t` of the product of the three weights.
pub fn predict_shared_links(split: &LinkSplit, m: usize) -> Vec<Proposal> {
    let train = BipartiteGraph::from_links(
        split.train.iter().map(|l| (l.cue.as_str(), l.target.as_str(), l.weight)),
    )
    .unwrap_or_default();
    let scored = split
        .candidates()
        .into_iter()
        .map(|(c, t)| {
            let mut score = 0.0;
            for (t2, w1) in train.out_links(&c) {
                if t2 == t {
                    continue;
                }
                for (c2, w2) in train.in_links(t2) {
                    if c2 == c {
                        continue;
                    }
                    if let Some(w3) = train.weight(c2, &t) {
                        score += w1 * w2 * w3;
                    }
                }
            }
            Proposal { cue: c, target: t, score }
        })
        .collect();
    top_m(scored, m)
}

/// `m` distinct non-train pairs drawn uniformly; capped at the candidate count.
pub fn predict_random(split: &LinkSplit, m: usize, seed: u64) -> Vec<Proposal> {
    let cands = split.candidates();
    let m = if m > cands.len() {
        log::warn!("asked for {m} random proposals but only {} candidates exist", cands.len());
        cands.len()
    } else {
        m
    };
    let mut rng = substream(seed, "assoc/random");
    index::sample(&mut rng, cands.len(), m)
        .into_iter()
        .map(|i| Proposal {
            cue: cands[i].0.clone(),
            target: cands[i].1.clone(),
            score: 0.0,
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct EvalReport {
    pub proposed: usize,
    pub correct: usize,
    pub test_links: usize,
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
    /// Nothing was proposed; precision is reported as 0.
    pub no_proposals: bool,
}

pub fn f1_score(precision: f64, recall: f64) -> f64 {
    if precision + recall > 0.0 {
        2.0 * precision * recall / (precision + recall)
    } else {
        0.0
    }
}

pub fn evaluate(proposals: &[Proposal], split: &LinkSplit) -> EvalReport {
    let test: HashSet<(&str, &str)> = split.test.iter().map(|l| (l.cue.as_str(), l.target.as_str())).collect();
    let distinct: HashSet<(&str, &str)> = proposals.iter().map(|p| (p.cue.as_str(), p.target.as_str())).collect();
    let correct = distinct.iter().filter(|p| test.contains(*p)).count();
    let proposed = proposals.len();
    let precision = if proposed == 0 { 0.0 } else { correct as f64 / proposed as f64 };
    let recall = if test.is_empty() { 0.0 } else { correct as f64 / test.len() as f64 };
    EvalReport {
        proposed,
        correct,
        test_links: test.len(),
        precision,
        recall,
        f1: f1_score(precision, recall),
        no_proposals: proposed == 0,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Method {
    Spsa,
    SpsaSmoothed,
    SharedLinks,
    Random,
}

impl Method {
    pub const ALL: [Method; 4] = [Method::Spsa, Method::SpsaSmoothed, Method::SharedLinks, Method::Random];

    pub fn label(self) -> &'static str {
        match self {
            Method::Spsa => "SPSA",
            Method::SpsaSmoothed => "SPSA Smoothed",
            Method::SharedLinks => "Shared Links",
            Method::Random => "Random",
        }
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

impl std::str::FromStr for Method {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().replace(['_', ' '], "-").as_str() {
            "spsa" => Ok(Method::Spsa),
            "spsa-smoothed" | "smoothed" => Ok(Method::SpsaSmoothed),
            "shared-links" | "shared" => Ok(Method::SharedLinks),
            "random" => Ok(Method::Random),
            other => Err(Error::arg(format!("unknown method {other:?}"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct BatchConfig {
    pub node_count: usize,
    pub runs: usize,
    pub k: usize,
    pub methods: Vec<Method>,
    pub test_fraction: f64,
    /// Proposals per method and run; `None` means one per held-out link.
    pub proposals: Option<usize>,
    pub smoothing: f64,
    pub qcbm: QcbmConfig,
    pub seed: u64,
}

impl Default for BatchConfig {
    fn default() -> Self {
        BatchConfig {
            node_count: 16,
            runs: 20,
            k: DEFAULT_BATCH,
            methods: Method::ALL.to_vec(),
            test_fraction: DEFAULT_TEST_FRACTION,
            proposals: None,
            smoothing: qcbm::DEFAULT_SMOOTHING,
            qcbm: QcbmConfig::default(),
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MethodRun {
    pub method: Method,
    pub report: EvalReport,
    /// Final training KL for the Born-machine methods.
    pub final_kl: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunResult {
    pub run: usize,
    pub seed_cue: String,
    pub links: usize,
    pub train_links: usize,
    pub test_links: usize,
    pub candidates: usize,
    pub proposals: usize,
    pub methods: Vec<MethodRun>,
    pub growth_log: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MethodSummary {
    pub method: Method,
    pub runs: usize,
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
    pub final_kl: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BatchReport {
    pub node_count: usize,
    pub runs: Vec<RunResult>,
    /// `(run index, error message)` for runs excluded from the means.
    pub failures: Vec<(usize, String)>,
    pub summaries: Vec<MethodSummary>,
}

impl BatchReport {
    pub fn summary(&self, method: Method) -> Option<&MethodSummary> {
        self.summaries.iter().find(|s| s.method == method)
    }

    /// One row per method: `method,nodes,precision,recall,f1,runs,failures,final_kl`.
    pub fn write_csv<W: Write>(&self, w: W) -> Result<()> {
        write_table(std::slice::from_ref(self), w)
    }

    pub fn write_growth_log<W: Write>(&self, mut w: W) -> Result<()> {
        for r in &self.runs {
            writeln!(w, "# run {} seed {}", r.run, r.seed_cue)?;
            for line in &r.growth_log {
                writeln!(w, "{line}")?;
            }
        }
        for (run, e) in &self.failures {
            writeln!(w, "# run {run} failed: {e}")?;
        }
        Ok(())
    }
}

/// Method × node-count table over several batches.
pub fn write_table<W: Write>(reports: &[BatchReport], w: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(w);
    w.write_record(["method", "nodes", "precision", "recall", "f1", "runs", "failures", "final_kl"])?;
    for r in reports {
        for s in &r.summaries {
            w.write_record([
                s.method.label().to_string(),
                r.node_count.to_string(),
                format!("{:.4}", s.precision),
                format!("{:.4}", s.recall),
                format!("{:.4}", s.f1),
                s.runs.to_string(),
                r.failures.len().to_string(),
                s.final_kl.map(|k| format!("{k:.4}")).unwrap_or_default(),
            ])?;
        }
    }
    w.flush()?;
    Ok(())
}

fn single_run(g: &BipartiteGraph, seeds: &[&str], cfg: &BatchConfig, run: usize) -> Result<RunResult> {
    let run_seed = substream_seed(cfg.seed, &format!("assoc/run/{run}"));
    let mut rng = substream(run_seed, "assoc/seed-cue");
    let seed_cue = *seeds.choose(&mut rng).expect("seed list is not empty");
    let sample = grow_subgraph(g, seed_cue, cfg.node_count, cfg.k)?;
    let split = split_links(&sample, cfg.test_fraction, run_seed)?;
    let m = cfg.proposals.unwrap_or(split.test.len());
    let qcfg = QcbmConfig {
        spsa: qcbm::SpsaConfig {
            seed: substream_seed(run_seed, "assoc/qcbm"),
            ..cfg.qcbm.spsa
        },
        ..cfg.qcbm
    };
    let mut methods = Vec::with_capacity(cfg.methods.len());
    for &method in &cfg.methods {
        let (proposals, final_kl) = match method {
            Method::Spsa => {
                let p = predict_qcbm(&split, &qcfg, 0.0, m)?;
                (p.proposals, Some(p.final_kl))
            }
            Method::SpsaSmoothed => {
                let p = predict_qcbm(&split, &qcfg, cfg.smoothing, m)?;
                (p.proposals, Some(p.final_kl))
            }
            Method::SharedLinks => (predict_shared_links(&split, m), None),
            Method::Random => (predict_random(&split, m, run_seed), None),
        };
        methods.push(MethodRun {
            method,
            report: evaluate(&proposals, &split),
            final_kl,
        });
    }
    Ok(RunResult {
        run,
        seed_cue: seed_cue.to_string(),
        links: sample.links.len(),
        train_links: split.train.len(),
        test_links: split.test.len(),
        candidates: split.candidates().len(),
        proposals: m,
        methods,
        growth_log: sample.log,
    })
}

/// Repeats grow → split → predict → evaluate `runs` times from seed cues
/// drawn uniformly among cues with at least one link. Runs are independent
/// and execute in parallel; results are identical for a fixed seed.
pub fn batch_experiment(g: &BipartiteGraph, cfg: &BatchConfig) -> Result<BatchReport> {
    if cfg.runs == 0 {
        return Err(Error::arg("runs must be at least 1"));
    }
    if cfg.methods.is_empty() {
        return Err(Error::arg("no prediction methods selected"));
    }
    if !(0.0..=1.0).contains(&cfg.smoothing) {
        return Err(Error::arg(format!("smoothing {} outside [0, 1]", cfg.smoothing)));
    }
    cfg.qcbm.spsa.validate()?;
    let seeds: Vec<&str> = g.cues().filter(|c| g.out_links(c).next().is_some()).collect();
    if seeds.is_empty() {
        return Err(Error::arg("graph has no cue with links"));
    }
    let outcomes: Vec<Result<RunResult>> =
        (0..cfg.runs).into_par_iter().map(|r| single_run(g, &seeds, cfg, r)).collect();

    let mut runs = Vec::new();
    let mut failures = Vec::new();
    for (i, o) in outcomes.into_iter().enumerate() {
        match o {
            Ok(r) => runs.push(r),
            Err(e) => {
                log::warn!("run {i} failed: {e}");
                failures.push((i, e.to_string()));
            }
        }
    }
    let summaries = cfg
        .methods
        .iter()
        .map(|&method| {
            let rows: Vec<&MethodRun> =
                runs.iter().flat_map(|r| r.methods.iter().filter(move |m| m.method == method)).collect();
            let n = rows.len();
            let mean = |f: &dyn Fn(&MethodRun) -> f64| {
                if n == 0 {
                    0.0
                } else {
                    rows.iter().map(|m| f(m)).sum::<f64>() / n as f64
                }
            };
            let kls: Vec<f64> = rows.iter().filter_map(|m| m.final_kl).collect();
            MethodSummary {
                method,
                runs: n,
                precision: mean(&|m| m.report.precision),
                recall: mean(&|m| m.report.recall),
                f1: mean(&|m| m.report.f1),
                final_kl: (!kls.is_empty()).then(|| kls.iter().sum::<f64>() / kls.len() as f64),
            }
        })
        .collect();
    Ok(BatchReport {
        node_count: cfg.node_count,
        runs,
        failures,
        summaries,
    })
}
