use std::collections::btree_map::Entry;
use std::collections::BTreeMap;
use std::fs::{self, File};
use std::io::{BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};

use anyhow::{bail, Context};
use pkgraph::baselines::encode_tabular;
use pkgraph::cohortgen::generate_cohort;
use pkgraph::gnn::{train_with_validation, write_history_csv};
use pkgraph::graphx::{
    build_vocabulary, read_numeric_jsonl, to_numeric, write_numeric_jsonl, GraphVersion, NumericGraph, Vocabulary,
};
use pkgraph::harness::{
    ablation_suite, ablation_table, protocol_folds, read_results_csv, run_protocol, summarize, summary_table,
    write_results_csv, BaselineTrainer, ExperimentResult, GnnTrainer,
};
use pkgraph::pkg::{build_pkg, parse_ntriples, serialize_ntriples, HspoSchema};
use pkgraph::preprocess::{preprocess, DatasetSummary};
use pkgraph::record::{read_jsonl, write_jsonl, AdmissionRecord};

use crate::config::{Experiment, PipelineConfig};
use crate::manifest::Manifest;

/// Artifact locations inside the working directory.
pub struct Layout {
    pub root: PathBuf,
}

impl Layout {
    pub fn new(root: &Path) -> Self {
        Layout { root: root.to_path_buf() }
    }

    pub fn cohort(&self) -> PathBuf {
        self.root.join("cohort.jsonl")
    }

    pub fn processed(&self) -> PathBuf {
        self.root.join("processed.jsonl")
    }

    pub fn summary(&self) -> PathBuf {
        self.root.join("summary.txt")
    }

    pub fn graphs(&self) -> PathBuf {
        self.root.join("graphs")
    }

    pub fn numeric(&self) -> PathBuf {
        self.root.join("numeric")
    }

    pub fn vocabulary(&self) -> PathBuf {
        self.numeric().join("vocab.json")
    }

    pub fn numeric_graphs(&self, gv: GraphVersion) -> PathBuf {
        self.numeric().join(format!("{gv}.jsonl"))
    }

    pub fn runs(&self) -> PathBuf {
        self.root.join("results").join("runs")
    }

    pub fn models(&self) -> PathBuf {
        self.root.join("models")
    }

    pub fn results(&self) -> PathBuf {
        self.root.join("results")
    }
}

fn require(path: &Path, stage: &str) -> anyhow::Result<()> {
    if !path.exists() {
        bail!(pkgraph::Error::Validation(format!("missing {}; run `pkgraph {stage}` first", path.display())));
    }
    Ok(())
}

fn create(path: &Path) -> anyhow::Result<BufWriter<File>> {
    if let Some(dir) = path.parent() {
        fs::create_dir_all(dir).with_context(|| format!("cannot create {}", dir.display()))?;
    }
    let file = File::create(path).with_context(|| format!("cannot write {}", path.display()))?;
    Ok(BufWriter::new(file))
}

fn read_records(path: &Path, stage: &str) -> anyhow::Result<Vec<AdmissionRecord>> {
    require(path, stage)?;
    let file = File::open(path).with_context(|| format!("cannot open {}", path.display()))?;
    Ok(read_jsonl(BufReader::new(file))?)
}

fn write_records(path: &Path, records: &[AdmissionRecord]) -> anyhow::Result<()> {
    let mut out = create(path)?;
    write_jsonl(&mut out, records)?;
    out.flush()?;
    Ok(())
}

pub fn cmd_generate(config: &PipelineConfig) -> anyhow::Result<()> {
    let layout = Layout::new(&config.workdir);
    let records = generate_cohort(&config.cohort)?;
    write_records(&layout.cohort(), &records)?;
    log::info!("generated {} admissions", records.len());
    let mut manifest = Manifest::new("generate", config.cohort.seed, &config.canonical_json());
    manifest.output(&layout.root, &layout.cohort())?;
    manifest.write(&layout.root)
}

pub fn cmd_preprocess(config: &PipelineConfig) -> anyhow::Result<()> {
    let layout = Layout::new(&config.workdir);
    let records = read_records(&layout.cohort(), "generate")?;
    let processed = preprocess(records, &config.preprocess)?;
    write_records(&layout.processed(), &processed)?;
    fs::write(layout.summary(), DatasetSummary::from_records(&processed).to_text())?;
    let mut manifest = Manifest::new("preprocess", config.cohort.seed, &config.canonical_json());
    manifest.input(&layout.root, &layout.cohort())?;
    manifest.output(&layout.root, &layout.processed())?;
    manifest.output(&layout.root, &layout.summary())?;
    manifest.write(&layout.root)
}

fn graph_file(layout: &Layout, admission_id: &str) -> PathBuf {
    layout.graphs().join(format!("{admission_id}.nt"))
}

pub fn cmd_build_graphs(config: &PipelineConfig) -> anyhow::Result<()> {
    let layout = Layout::new(&config.workdir);
    let records = read_records(&layout.processed(), "preprocess")?;
    let dir = layout.graphs();
    if dir.exists() {
        fs::remove_dir_all(&dir).with_context(|| format!("cannot clear {}", dir.display()))?;
    }
    fs::create_dir_all(&dir)?;
    for r in &records {
        let graph = build_pkg(r, &HspoSchema)?;
        fs::write(graph_file(&layout, &r.admission_id), serialize_ntriples(&graph)?)?;
    }
    log::info!("wrote {} graphs", records.len());
    let mut manifest = Manifest::new("build-graphs", config.cohort.seed, &config.canonical_json());
    manifest.input(&layout.root, &layout.processed())?;
    manifest.output(&layout.root, &dir)?;
    manifest.write(&layout.root)
}

/// Parses every admission's graph file, in processed-record order, with labels attached.
fn load_triple_graphs(layout: &Layout) -> anyhow::Result<Vec<pkgraph::pkg::TripleGraph>> {
    let records = read_records(&layout.processed(), "preprocess")?;
    records
        .iter()
        .map(|r| {
            let path = graph_file(layout, &r.admission_id);
            require(&path, "build-graphs")?;
            let text = fs::read_to_string(&path)?;
            let mut graph = parse_ntriples(&text).with_context(|| format!("in {}", path.display()))?;
            graph.label = r.readmitted_within_window;
            Ok(graph)
        })
        .collect()
}

pub fn cmd_transform(config: &PipelineConfig, versions: &[GraphVersion]) -> anyhow::Result<()> {
    let layout = Layout::new(&config.workdir);
    let graphs = load_triple_graphs(&layout)?;
    let vocab = build_vocabulary(&graphs)?;
    let mut out = create(&layout.vocabulary())?;
    serde_json::to_writer(&mut out, &vocab)?;
    out.write_all(b"\n")?;
    out.flush()?;
    let mut manifest = Manifest::new("transform", config.cohort.seed, &config.canonical_json());
    manifest.input(&layout.root, &layout.processed())?;
    manifest.input(&layout.root, &layout.graphs())?;
    manifest.output(&layout.root, &layout.vocabulary())?;
    for &gv in versions {
        let numeric: Vec<NumericGraph> =
            graphs.iter().map(|g| to_numeric(g, gv, &vocab)).collect::<pkgraph::Result<_>>()?;
        let path = layout.numeric_graphs(gv);
        let mut out = create(&path)?;
        write_numeric_jsonl(&mut out, &numeric)?;
        out.flush()?;
        manifest.output(&layout.root, &path)?;
    }
    log::info!("vocabulary of {} tokens, {} graph versions", vocab.len(), versions.len());
    manifest.write(&layout.root)
}

fn load_numeric(layout: &Layout, gv: GraphVersion) -> anyhow::Result<Vec<NumericGraph>> {
    let path = layout.numeric_graphs(gv);
    require(&path, "transform")?;
    let file = File::open(&path)?;
    read_numeric_jsonl(BufReader::new(file)).with_context(|| format!("in {}", path.display()))
}

fn write_results(path: &Path, results: &[ExperimentResult]) -> anyhow::Result<()> {
    let mut out = create(path)?;
    write_results_csv(&mut out, results)?;
    out.flush()?;
    Ok(())
}

/// Runs the protocol for every experiment, then fits one model on the first
/// fold's training data for the checkpoint and history files.
pub fn cmd_train(config: &PipelineConfig, experiments: &[Experiment]) -> anyhow::Result<()> {
    let layout = Layout::new(&config.workdir);
    let vocab_path = layout.vocabulary();
    require(&vocab_path, "transform")?;
    let vocab: Vocabulary = serde_json::from_reader(BufReader::new(File::open(&vocab_path)?))?;
    let vocab = vocab.reindexed();
    let mut manifest = Manifest::new("train", config.train.seed, &config.canonical_json());
    manifest.input(&layout.root, &vocab_path)?;
    let mut cache: BTreeMap<GraphVersion, Vec<NumericGraph>> = BTreeMap::new();
    for exp in experiments {
        if let Entry::Vacant(slot) = cache.entry(exp.graph) {
            let graphs = load_numeric(&layout, exp.graph)?;
            if graphs.iter().any(|g| g.vocab_size != vocab.len()) {
                bail!(pkgraph::Error::Validation(format!(
                    "{} does not match the vocabulary; rerun `pkgraph transform`",
                    layout.numeric_graphs(exp.graph).display()
                )));
            }
            manifest.input(&layout.root, &layout.numeric_graphs(exp.graph))?;
            slot.insert(graphs);
        }
        let graphs = &cache[&exp.graph];
        let trainer =
            GnnTrainer { graphs, config: config.train.clone(), arch: exp.arch, variant: exp.variant, tag: None };
        log::info!("training {}", exp.name());
        let results = run_protocol(&trainer, &config.protocol)?;
        let path = layout.runs().join(format!("{}.csv", exp.name()));
        write_results(&path, &results)?;
        manifest.output(&layout.root, &path)?;

        let labels: Vec<bool> = graphs.iter().map(|g| g.label == 1).collect();
        let fold = &protocol_folds(&labels, &config.protocol)?[0];
        let pick = |idx: &[usize]| -> Vec<&NumericGraph> { idx.iter().map(|&i| &graphs[i]).collect() };
        let outcome =
            train_with_validation(&pick(&fold.train), &pick(&fold.validation), &config.train, exp.arch, exp.variant)?;
        let checkpoint = layout.models().join(format!("{}.checkpoint.json", exp.name()));
        let mut out = create(&checkpoint)?;
        serde_json::to_writer(&mut out, &outcome.params.to_checkpoint())?;
        out.flush()?;
        let history = layout.models().join(format!("{}.history.csv", exp.name()));
        let mut out = create(&history)?;
        write_history_csv(&mut out, &outcome.history)?;
        out.flush()?;
        manifest.output(&layout.root, &checkpoint)?;
        manifest.output(&layout.root, &history)?;
    }
    manifest.write(&layout.root)
}

/// Classical baselines on the tabular encoding, under the same protocol.
pub fn cmd_evaluate(config: &PipelineConfig) -> anyhow::Result<()> {
    let layout = Layout::new(&config.workdir);
    let records = read_records(&layout.processed(), "preprocess")?;
    let data = encode_tabular(&records);
    let mut results = Vec::new();
    for kind in config.baseline_kinds()? {
        log::info!("evaluating {kind}");
        results.extend(run_protocol(&BaselineTrainer { data: &data, kind }, &config.protocol)?);
    }
    let path = layout.runs().join("baselines.csv");
    write_results(&path, &results)?;
    let mut manifest = Manifest::new("evaluate", config.protocol.seed, &config.canonical_json());
    manifest.input(&layout.root, &layout.processed())?;
    manifest.output(&layout.root, &path)?;
    manifest.write(&layout.root)
}

pub fn cmd_ablate(config: &PipelineConfig, target: Experiment) -> anyhow::Result<()> {
    let layout = Layout::new(&config.workdir);
    let graphs = load_numeric(&layout, target.graph)?;
    let sets = config.ablation.sets()?;
    let rows = ablation_suite(&graphs, &config.train, target.arch, target.variant, &sets, &config.protocol)?;
    let results: Vec<ExperimentResult> = rows.iter().flat_map(|r| r.results.iter().cloned()).collect();
    let csv_path = layout.results().join("ablation.csv");
    write_results(&csv_path, &results)?;
    let text_path = layout.results().join("ablation.txt");
    let text = format!("ablation of {}\n\n{}", target.name(), ablation_table(&rows));
    fs::write(&text_path, text)?;
    let mut manifest = Manifest::new("ablate", config.protocol.seed, &config.canonical_json());
    manifest.input(&layout.root, &layout.numeric_graphs(target.graph))?;
    manifest.output(&layout.root, &csv_path)?;
    manifest.output(&layout.root, &text_path)?;
    manifest.write(&layout.root)
}

/// Summary of every results file under `results/runs`.
pub fn cmd_report(config: &PipelineConfig) -> anyhow::Result<String> {
    let layout = Layout::new(&config.workdir);
    let dir = layout.runs();
    require(&dir, "train` or `pkgraph evaluate")?;
    let mut files: Vec<PathBuf> = fs::read_dir(&dir)?
        .map(|e| e.map(|e| e.path()))
        .collect::<Result<Vec<_>, _>>()?
        .into_iter()
        .filter(|p| p.extension().is_some_and(|e| e == "csv"))
        .collect();
    files.sort();
    if files.is_empty() {
        bail!(pkgraph::Error::Validation(format!("no results CSV files in {}", dir.display())));
    }
    let mut manifest = Manifest::new("report", config.protocol.seed, &config.canonical_json());
    let mut results = Vec::new();
    for f in &files {
        results.extend(read_results_csv(File::open(f)?).with_context(|| format!("in {}", f.display()))?);
        manifest.input(&layout.root, f)?;
    }
    let rows = summarize(&results);
    let text = summary_table(&rows);
    let text_path = layout.results().join("report.txt");
    fs::write(&text_path, &text)?;
    let csv_path = layout.results().join("summary.csv");
    let mut w = csv::Writer::from_writer(create(&csv_path)?);
    for row in &rows {
        w.serialize(row)?;
    }
    w.flush()?;
    drop(w);
    manifest.output(&layout.root, &text_path)?;
    manifest.output(&layout.root, &csv_path)?;
    manifest.write(&layout.root)?;
    Ok(text)
}
