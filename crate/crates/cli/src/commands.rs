use std::io::{self, Write};

use num_complex::Complex64;
use qnlp::assoc::{self, BatchConfig, BipartiteGraph};
use qnlp::bow::{self, ReadoutMode};
use qnlp::composition::{self, DomainModel};
use qnlp::datasets::load_labeled_lines;
use qnlp::qcbm::{self, QcbmConfig, SpsaConfig};
use qnlp::qprob::{self, DensityMatrix, JointDistribution};
use qnlp::qsvm::{self, Kernel, QsvmClassifier};
use qnlp::rng::substream_seed;

use crate::config::{self, pick, required, resolve_input, KernelName, OutputPaths, RunConfig};
use crate::{AssocArgs, BigramArgs, BowArgs, ComposeArgs, Failure, QcbmArgs, QsvmArgs};

type Outcome = Result<(), Failure>;

fn fmt_complex(z: Complex64) -> String {
    if z.im.abs() < 1e-12 {
        format!("{:.6}", z.re)
    } else {
        format!("{:.6}{:+.6}i", z.re, z.im)
    }
}

pub fn bow(a: BowArgs, cfg: &RunConfig, seed: u64, out: &OutputPaths) -> Outcome {
    let train_path = resolve_input(&required(a.train, &cfg.inputs.train, "--train")?);
    let test_path = resolve_input(&required(a.test, &cfg.inputs.test, "--test")?);
    let (train, summary) = load_labeled_lines(&train_path, None)?;
    log::info!("training: {} examples, classes {:?}", summary.records, summary.balance);
    let (test, _) = load_labeled_lines(&test_path, None)?;

    let increment = pick(a.increment, cfg.increment, bow::DEFAULT_INCREMENT);
    let max_words = pick(a.max_words, cfg.max_words, bow::DEFAULT_MAX_WORDS);
    let weights = bow::train(&train, increment, max_words)?;
    for (w, t, angle) in weights.saturated() {
        log::warn!("rotation for ({w}, {t}) is {angle:.3} rad, past the peak of sin²");
    }
    let mode = match a.shots.or(cfg.shots) {
        Some(shots) => ReadoutMode::Shots { shots, seed },
        None => ReadoutMode::Exact,
    };
    let report = bow::evaluate(&test, &weights, mode)?;

    let mut so = io::stdout().lock();
    writeln!(so, "topics\t{}", weights.topics.join(" "))?;
    writeln!(so, "vocabulary\t{}", weights.vocabulary().collect::<Vec<_>>().join(" "))?;
    writeln!(so, "gold\tpredicted\tscores\ttext")?;
    for d in &report.decisions {
        let (pred, scores) = match &d.predicted {
            Some(c) => (
                c.topic.clone(),
                c.scores.iter().map(|(t, s)| format!("{t}={s:.4}")).collect::<Vec<_>>().join(" "),
            ),
            None => ("-".to_string(), "-".to_string()),
        };
        writeln!(so, "{}\t{pred}\t{scores}\t{}", d.gold, d.text)?;
    }
    writeln!(so, "accuracy\t{:.4}\t({}/{})", report.accuracy, report.correct, report.total)?;

    if let Some(p) = a.model_out.or_else(|| cfg.outputs.model.clone()) {
        weights.to_json(out.create(&p)?)?;
    }
    Ok(())
}

pub fn qsvm(a: QsvmArgs, cfg: &RunConfig, out: &OutputPaths) -> Outcome {
    let emb = qsvm::load_embeddings(config::open_input(&required(a.embeddings, &cfg.inputs.embeddings, "--embeddings")?)?)?;
    if !emb.duplicates().is_empty() {
        log::warn!("embedding table repeats {} words; the last entry wins", emb.duplicates().len());
    }
    let (test, _) = load_labeled_lines(&resolve_input(&required(a.test, &cfg.inputs.test, "--test")?), None)?;

    let clf = match a.model_in.or_else(|| cfg.inputs.model.clone()) {
        Some(p) => QsvmClassifier::from_json(config::open_input(&p)?)?,
        None => {
            let (train, _) = load_labeled_lines(&resolve_input(&required(a.train, &cfg.inputs.train, "--train")?), None)?;
            let kernel = match pick(a.kernel, cfg.kernel, KernelName::Zz) {
                KernelName::Zz => Kernel::Zz { reps: pick(a.reps, cfg.reps, qsvm::DEFAULT_ZZ_REPS) },
                KernelName::Dense => Kernel::Dense,
            };
            let c = pick(a.c, cfg.c, qsvm::DEFAULT_C);
            let (clf, k, sol) = QsvmClassifier::fit(&train, &emb, kernel, c)?;
            if !sol.converged {
                log::warn!("SMO stopped at its iteration cap before converging");
            }
            log::info!(
                "{} support vectors on {} qubits",
                clf.model.support_vectors.len(),
                kernel.num_qubits(emb.dimension())
            );
            if let Some(p) = a.kernel_out.or_else(|| cfg.outputs.kernel.clone()) {
                k.write_csv(out.create(&p)?)?;
            }
            if let Some(p) = a.model_out.or_else(|| cfg.outputs.model.clone()) {
                clf.to_json(out.create(&p)?)?;
            }
            clf
        }
    };
    let report = clf.evaluate(&test, &emb)?;

    let mut so = io::stdout().lock();
    writeln!(so, "gold\tpredicted\tdecision\ttext")?;
    for d in &report.decisions {
        writeln!(
            so,
            "{}\t{}\t{}\t{}",
            d.gold,
            d.predicted.as_deref().unwrap_or("-"),
            d.decision_value.map_or("-".to_string(), |v| format!("{v:.4}")),
            d.text
        )?;
    }
    writeln!(so, "accuracy\t{:.4}\t({}/{})", report.accuracy, report.correct, report.total)?;
    Ok(())
}

fn write_reduced(so: &mut impl Write, title: &str, rho: &DensityMatrix) -> io::Result<()> {
    writeln!(so, "{title}")?;
    let n = rho.dim();
    for i in 0..n {
        let row: Vec<String> = (0..n).map(|j| fmt_complex(rho.get(i, j))).collect();
        writeln!(so, "  {}\t{}", rho.labels()[i], row.join("\t"))?;
    }
    let report = qprob::marginals_and_correlations(rho);
    writeln!(so, "marginals")?;
    for (l, p) in report.labels.iter().zip(&report.marginals) {
        writeln!(so, "  {l}\t{p:.6}")?;
    }
    writeln!(so, "correlations")?;
    for c in &report.correlations {
        writeln!(so, "  ({}, {}, {})", c.first, c.second, fmt_complex(c.value))?;
    }
    Ok(())
}

pub fn bigram_table(a: BigramArgs, cfg: &RunConfig, out: &OutputPaths) -> Outcome {
    let path = required(a.pairs, &cfg.inputs.pairs, "pairs CSV")?;
    let joint = JointDistribution::from_csv(config::open_input(&path)?)?;
    let psi = qprob::flatten_normalize(&joint)?;
    let rho = qprob::density(&psi);
    let left = qprob::partial_trace_right(&rho)?;
    let right = qprob::partial_trace_left(&rho)?;

    let mut so = io::stdout().lock();
    writeln!(so, "amplitudes")?;
    for (label, amp) in psi.pair_labels().iter().zip(psi.amplitudes()) {
        if *amp != 0.0 {
            writeln!(so, "  {label}\t{amp:.6}")?;
        }
    }
    write_reduced(&mut so, "prefix density (suffixes traced out)", &left)?;
    write_reduced(&mut so, "suffix density (prefixes traced out)", &right)?;

    if let Some(p) = a.density_out.or_else(|| cfg.outputs.density.clone()) {
        rho.write_csv(out.create(&p)?)?;
    }
    Ok(())
}

fn spsa_config(cfg: &RunConfig, iterations: Option<usize>, seed: u64) -> SpsaConfig {
    let d = SpsaConfig::default();
    let o = &cfg.spsa;
    SpsaConfig {
        iterations: pick(iterations, o.iterations, d.iterations),
        a: o.a.unwrap_or(d.a),
        big_a: o.big_a.unwrap_or(d.big_a),
        c: o.c.unwrap_or(d.c),
        alpha: o.alpha.unwrap_or(d.alpha),
        gamma: o.gamma.unwrap_or(d.gamma),
        seed,
    }
}

pub fn qcbm_fit(a: QcbmArgs, cfg: &RunConfig, seed: u64, out: &OutputPaths) -> Outcome {
    let pairs = match a.pairs.or_else(|| cfg.inputs.pairs.clone()) {
        Some(p) => qcbm::read_pairs_csv(config::open_input(&p)?)?,
        None => qcbm::color_item_pairs().into_iter().map(|(x, y, w)| (x.to_string(), y.to_string(), w)).collect(),
    };
    let (enc, q) = qcbm::encode_distribution(&pairs)?;
    let eps = pick(a.smooth, cfg.smoothing, qcbm::DEFAULT_SMOOTHING);
    let target = qcbm::smooth(&q, eps)?;
    let qc = QcbmConfig {
        layers: pick(a.layers, cfg.layers, QcbmConfig::default().layers),
        spsa: spsa_config(cfg, a.iterations, seed),
        shots: a.shots.or(cfg.shots),
    };
    let (model, trace) = qcbm::train_qcbm(&enc, &target, &qc)?;
    if let qcbm::SpsaOutcome::NonFinite { iteration } = trace.outcome {
        return Err(Failure::Runtime(format!("objective became non-finite at iteration {iteration}")));
    }

    let mut so = io::stdout().lock();
    writeln!(so, "qubits\t{} ({} prefix, {} suffix)", enc.num_qubits(), enc.prefix_width(), enc.suffix_width())?;
    for (x, y, _) in &pairs {
        writeln!(so, "  {x} {y}\t{}", enc.bitstring(x, y).unwrap_or_default())?;
    }
    writeln!(so, "layers\t{}\tparameters\t{}", qc.layers, model.params.len())?;
    writeln!(so, "smoothing\t{eps}")?;
    writeln!(so, "initial_kl\t{:.6}", trace.initial_value)?;
    writeln!(so, "final_kl\t{:.6}", trace.final_value)?;

    let p = model.distribution()?;
    let mut ranked: Vec<(usize, f64)> = p.iter().copied().enumerate().collect();
    ranked.sort_by(|x, y| y.1.total_cmp(&x.1).then(x.0.cmp(&y.0)));
    writeln!(so, "most probable phrases")?;
    for (idx, prob) in ranked.iter().filter(|(i, _)| enc.decode(*i).is_some()).take(10) {
        let (x, y) = enc.decode(*idx).unwrap_or_default();
        writeln!(so, "  {x} {y}\t{prob:.4}")?;
    }

    let n = pick(a.generate, cfg.generate, 0);
    if n > 0 {
        let g = qcbm::generate(&model, n, substream_seed(seed, "cli/generate"))?;
        writeln!(so, "generated")?;
        for (x, y) in &g.phrases {
            writeln!(so, "  {x} {y}")?;
        }
        if g.rejected > 0 {
            log::info!("{} draws fell outside the encoded tables", g.rejected);
        }
    }

    if let Some(p) = a.model_out.or_else(|| cfg.outputs.model.clone()) {
        model.to_json(out.create(&p)?)?;
    }
    if let Some(p) = a.trace_out.or_else(|| cfg.outputs.trace.clone()) {
        trace.write_csv(out.create(&p)?)?;
    }
    Ok(())
}

pub fn assoc(a: AssocArgs, cfg: &RunConfig, seed: u64, out: &OutputPaths) -> Outcome {
    let graph = match a.norms.or_else(|| cfg.inputs.norms.clone()) {
        Some(p) => {
            let (g, stats) = assoc::parse_norms(config::open_input(&p)?)?;
            log::info!(
                "{} rows, {} skipped, {} merged: {} cues, {} targets, {} links",
                stats.rows,
                stats.skipped,
                stats.merged,
                g.num_cues(),
                g.num_targets(),
                g.num_links()
            );
            g
        }
        None => BipartiteGraph::synthetic(),
    };
    let d = BatchConfig::default();
    let base = BatchConfig {
        node_count: d.node_count,
        runs: pick(a.runs, cfg.runs, d.runs),
        k: pick(a.k, cfg.k, d.k),
        methods: pick(a.methods, cfg.methods.clone(), d.methods),
        test_fraction: pick(a.test_fraction, cfg.test_fraction, d.test_fraction),
        proposals: a.proposals.or(cfg.proposals),
        smoothing: pick(a.smooth, cfg.smoothing, d.smoothing),
        qcbm: QcbmConfig {
            layers: pick(a.layers, cfg.layers, d.qcbm.layers),
            spsa: spsa_config(cfg, a.iterations, 0),
            shots: cfg.shots,
        },
        seed,
    };
    let nodes = pick(a.nodes, cfg.nodes.clone(), vec![d.node_count]);
    let mut reports = Vec::with_capacity(nodes.len());
    for n in nodes {
        let report = assoc::batch_experiment(&graph, &BatchConfig { node_count: n, ..base.clone() })?;
        if report.runs.is_empty() {
            return Err(Failure::Runtime(format!("every run at {n} nodes failed")));
        }
        for (run, e) in &report.failures {
            log::warn!("{n} nodes, run {run}: {e}");
        }
        reports.push(report);
    }

    assoc::write_table(&reports, io::stdout().lock())?;
    if let Some(p) = a.out.or_else(|| cfg.outputs.table.clone()) {
        assoc::write_table(&reports, out.create(&p)?)?;
    }
    if let Some(p) = a.log.or_else(|| cfg.outputs.log.clone()) {
        let mut w = out.create(&p)?;
        for r in &reports {
            writeln!(w, "## {} nodes", r.node_count)?;
            r.write_growth_log(&mut w)?;
        }
    }
    Ok(())
}

pub fn compose(a: ComposeArgs, cfg: &RunConfig) -> Outcome {
    let model = match a.model.or_else(|| cfg.inputs.model.clone()) {
        Some(p) => DomainModel::from_json(config::open_input(&p)?)?,
        None => DomainModel::toy(),
    };
    let r = composition::compose(&a.verb, &a.noun, &model)?;
    let mut so = io::stdout().lock();
    match &r.sense {
        Some(s) => writeln!(so, "{} {} -> {} (via {})", r.verb, r.noun, s.output, s.via.join(", "))?,
        None => writeln!(so, "{} {} -> no reading", r.verb, r.noun)?,
    }
    writeln!(so, "outputs")?;
    for (d, p) in &r.outputs {
        writeln!(so, "  {d}\t{p:.4}")?;
    }
    Ok(())
}
