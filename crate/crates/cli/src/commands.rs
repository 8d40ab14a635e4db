use std::collections::{BTreeMap, BTreeSet};
use std::fmt::Write as _;
use std::io::BufRead;
use std::path::{Path, PathBuf};

use pico_core::corpus::{binarize, corpus_stats, filter_pio, stratified_split, top_k_words};
use pico_core::eval::{evaluate, kfold_cv, Evaluation};
use pico_core::svm::{self, train_multitask};
use pico_core::{Corpus, DataSplit, Label, NGramRange, Task, TaskInstance, TaskModel, Vectorizer};
use rayon::prelude::*;
use serde::Serialize;
use sha2::{Digest, Sha256};

use crate::{CliError, Report, RunConfig};

pub struct LoadedCorpus {
    pub corpus: Corpus,
    pub sha256: String,
}

/// Read and parse the configured corpus, hashing its bytes.
pub fn load_corpus(cfg: &RunConfig) -> Result<LoadedCorpus, CliError> {
    let path = cfg.corpus_path()?;
    let bytes = std::fs::read(path).map_err(|e| pico_core::Error::io(path, e))?;
    let sha256 = hex::encode(Sha256::digest(&bytes));
    let corpus = Corpus::from_reader(bytes.as_slice(), &path.display().to_string())?;
    Ok(LoadedCorpus { corpus, sha256 })
}

fn split_for<'c>(pio: &'c Corpus, task: Task, cfg: &RunConfig) -> Result<DataSplit<'c>, CliError> {
    let inst = binarize(pio, task)?;
    Ok(stratified_split(&inst, cfg.ratios, cfg.seed)?)
}

fn f4(v: f64) -> String {
    format!("{v:.4}")
}

fn roc_tsv(e: &Evaluation) -> Option<Vec<u8>> {
    let roc = e.roc.as_ref()?;
    let mut buf = Vec::new();
    roc.write_points(&mut buf).expect("writing to memory");
    Some(buf)
}

#[derive(Debug, Clone, Serialize)]
struct StatsRow {
    label: Label,
    abstracts: usize,
    sentences: usize,
}

#[derive(Debug, Clone, Serialize)]
struct SplitCountRow {
    task: Task,
    part: &'static str,
    positive: usize,
    negative: usize,
    split_fingerprint: String,
}

#[derive(Debug, Clone, Serialize)]
struct TopWordsRow {
    task: Task,
    rank: usize,
    word: String,
    count: usize,
}

/// Label counts, per-task split sizes and the most frequent words per task.
pub fn stats(cfg: &RunConfig, top_k: usize) -> Result<Report, CliError> {
    let loaded = load_corpus(cfg)?;
    let stop = cfg.stoplist()?;
    let c = &loaded.corpus;
    let mut r = Report::new("stats", cfg, &loaded.sha256);

    let st = corpus_stats(c);
    r.line(format!("{:<6}{:>12}{:>12}", "label", "abstracts", "sentences"));
    for label in Label::ALL {
        let s = st.get(label);
        r.line(format!("{:<6}{:>12}{:>12}", label.as_str(), s.abstracts, s.sentences));
        r.record(
            "label_stats",
            &StatsRow {
                label,
                abstracts: s.abstracts,
                sentences: s.sentences,
            },
        );
    }
    r.line(format!("{:<6}{:>12}{:>12}", "all", st.total_abstracts, st.total_sentences));

    let pio = filter_pio(c);
    r.line("");
    r.line(format!("P/I/O sentences: {}", pio.len()));
    r.line(format!(
        "{:<6}{:<7}{:>10}{:>10}  {}",
        "task", "part", "positive", "negative", "split"
    ));
    for &task in &cfg.tasks {
        let inst = binarize(&pio, task)?;
        if inst.is_empty() {
            continue;
        }
        let split = stratified_split(&inst, cfg.ratios, cfg.seed)?;
        let fp = split.fingerprint();
        for (part, set) in [("train", &split.train), ("test", &split.test), ("dev", &split.dev)] {
            let positive = set.iter().filter(|i| i.y == 1).count();
            let negative = set.len() - positive;
            r.line(format!(
                "{:<6}{:<7}{:>10}{:>10}  {fp}",
                task.as_str(),
                part,
                positive,
                negative
            ));
            r.record(
                "split_counts",
                &SplitCountRow {
                    task,
                    part,
                    positive,
                    negative,
                    split_fingerprint: fp.clone(),
                },
            );
        }
    }

    for &task in &cfg.tasks {
        let words = top_k_words(c, task, top_k, &stop)?;
        r.line("");
        r.line(format!("top {top_k} words, {}", task.as_str()));
        for (rank, (word, count)) in words.into_iter().enumerate() {
            r.line(format!("{:>3}  {:<20}{:>8}", rank + 1, word, count));
            r.record(
                "top_words",
                &TopWordsRow {
                    task,
                    rank: rank + 1,
                    word,
                    count,
                },
            );
        }
    }
    Ok(r)
}

/// A trained model and its scores on the held-out parts of its split.
pub struct TaskEvaluation {
    pub task: Task,
    pub split_fingerprint: String,
    pub model: TaskModel,
    /// `None` when the part is empty.
    pub test: Option<Evaluation>,
    pub dev: Option<Evaluation>,
}

fn evaluate_part(model: &TaskModel, part: &[TaskInstance<'_>]) -> Result<Option<Evaluation>, CliError> {
    if part.is_empty() {
        return Ok(None);
    }
    Ok(Some(evaluate(model, part)?))
}

/// Split, fit and evaluate every configured task.
pub fn evaluate_tasks(cfg: &RunConfig, corpus: &Corpus) -> Result<Vec<TaskEvaluation>, CliError> {
    let pio = filter_pio(corpus);
    let splits = cfg
        .tasks
        .iter()
        .map(|&t| Ok((t, split_for(&pio, t, cfg)?)))
        .collect::<Result<Vec<_>, CliError>>()?;
    let base = cfg.training(Task::P);
    let models = train_multitask(&splits, cfg.vectorizer(), &cfg.stoplist()?, cfg.c, &base)?;
    splits
        .iter()
        .zip(models)
        .map(|((task, split), model)| {
            Ok(TaskEvaluation {
                task: *task,
                split_fingerprint: split.fingerprint(),
                test: evaluate_part(&model, &split.test)?,
                dev: evaluate_part(&model, &split.dev)?,
                model,
            })
        })
        .collect()
}

#[derive(Debug, Clone, Serialize)]
struct MetricsRow<'a> {
    task: Task,
    split: &'static str,
    size: usize,
    confusion: pico_core::eval::ConfusionMatrix,
    metrics: pico_core::eval::Metrics,
    auc: Option<f64>,
    split_fingerprint: &'a str,
}

fn metrics_header() -> String {
    format!(
        "{:<6}{:<7}{:>8}{:>9}{:>9}{:>9}{:>9}{:>9}",
        "task", "split", "n", "acc", "prec", "rec", "f1", "auc"
    )
}

fn metrics_line(task: &str, split: &str, e: &Evaluation) -> String {
    format!(
        "{:<6}{:<7}{:>8}{:>9}{:>9}{:>9}{:>9}{:>9}",
        task,
        split,
        e.confusion.total(),
        f4(e.metrics.accuracy),
        f4(e.metrics.precision),
        f4(e.metrics.recall),
        f4(e.metrics.f1),
        e.auc().map_or("-".into(), f4)
    )
}

/// Train one model per task and report test and dev metrics.
pub fn train(cfg: &RunConfig) -> Result<Report, CliError> {
    let loaded = load_corpus(cfg)?;
    let results = evaluate_tasks(cfg, &loaded.corpus)?;
    let mut r = Report::new("train", cfg, &loaded.sha256);
    r.line(metrics_header());
    for te in &results {
        let t = te.task.as_str();
        for (split, e) in [("test", &te.test), ("dev", &te.dev)] {
            let Some(e) = e else { continue };
            r.line(metrics_line(t, split, e));
            r.record(
                "metrics",
                &MetricsRow {
                    task: te.task,
                    split,
                    size: e.confusion.total(),
                    confusion: e.confusion,
                    metrics: e.metrics,
                    auc: e.auc(),
                    split_fingerprint: &te.split_fingerprint,
                },
            );
        }
        let mut model = Vec::new();
        te.model.write(&mut model).expect("writing to memory");
        r.file(format!("model_{t}.txt"), model);
        if let Some(roc) = te.test.as_ref().and_then(roc_tsv) {
            r.file(format!("roc_{t}.tsv"), roc);
        }
    }
    r.line("");
    for te in &results {
        r.line(format!(
            "model {}: {} features, {} epochs, objective {:.6}",
            te.task.as_str(),
            te.model.vectorizer.vocabulary().len(),
            te.model.model.epochs,
            te.model.model.objective
        ));
    }
    Ok(r)
}

/// One (n-gram range, task) cell of the control experiment: means over
/// the cross-validation folds.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepRow {
    pub range: NGramRange,
    pub task: Task,
    pub accuracy: f64,
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
    pub auc: f64,
    /// Identifies the fold assignment shared by every range.
    pub split_fingerprint: String,
}

/// Cross-validate every n-gram range on identical folds with all other
/// settings held fixed.
pub fn sweep_ngram(cfg: &RunConfig, corpus: &Corpus, ranges: &[NGramRange]) -> Result<Vec<SweepRow>, CliError> {
    let pio = filter_pio(corpus);
    let per_task = cfg
        .tasks
        .iter()
        .map(|&t| Ok((t, binarize(&pio, t)?, cfg.pipeline(t)?)))
        .collect::<Result<Vec<_>, CliError>>()?;
    let cells: Vec<(NGramRange, usize)> = ranges
        .iter()
        .flat_map(|&g| (0..per_task.len()).map(move |s| (g, s)))
        .collect();
    cells
        .par_iter()
        .map(|&(range, s)| {
            let (task, inst, pipeline) = &per_task[s];
            let mut pipeline = pipeline.clone();
            pipeline.vectorizer.range = range;
            let res = kfold_cv(inst, cfg.k, cfg.seed, &pipeline)?;
            Ok(SweepRow {
                range,
                task: *task,
                accuracy: res.mean.accuracy,
                precision: res.mean.precision,
                recall: res.mean.recall,
                f1: res.mean.f1,
                auc: res.mean.auc,
                split_fingerprint: res.fold_fingerprint,
            })
        })
        .collect()
}

pub fn sweep_ngram_report(cfg: &RunConfig, ranges: &[NGramRange]) -> Result<Report, CliError> {
    let loaded = load_corpus(cfg)?;
    let rows = sweep_ngram(cfg, &loaded.corpus, ranges)?;
    let mut r = Report::new("sweep-ngram", cfg, &loaded.sha256);
    let mut head = format!("{:<8}", "range");
    for t in &cfg.tasks {
        let _ = write!(head, "{:>9}{:>9}", format!("{}-acc", t.as_str()), format!("{}-f1", t.as_str()));
    }
    r.line(head);
    for range in ranges {
        let mut line = format!("{:<8}", range.to_string());
        for row in rows.iter().filter(|row| row.range == *range) {
            let _ = write!(line, "{:>9}{:>9}", f4(row.accuracy), f4(row.f1));
        }
        r.line(line);
    }
    r.line("");
    for row in &rows {
        r.record("sweep_ngram", row);
    }
    let fps: BTreeSet<(Task, &str)> = rows.iter().map(|row| (row.task, row.split_fingerprint.as_str())).collect();
    for (t, fp) in fps {
        r.line(format!("folds {}: {fp}", t.as_str()));
    }
    Ok(r)
}

/// F1 on the dev part for one penalty value.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CRow {
    pub task: Task,
    pub c: f64,
    pub accuracy: f64,
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
    pub split_fingerprint: String,
}

/// Penalty grid search on the dev part. Features are fitted once per task
/// on the training part and shared by every grid point.
pub fn sweep_c(cfg: &RunConfig, corpus: &Corpus, grid: &[f64]) -> Result<Vec<CRow>, CliError> {
    let mut grid = grid.to_vec();
    if grid.is_empty() || grid.iter().any(|c| !(*c > 0.0 && c.is_finite())) {
        return Err(CliError::Config(format!("C grid must hold positive values, got {grid:?}")));
    }
    grid.sort_by(f64::total_cmp);
    grid.dedup();
    let pio = filter_pio(corpus);
    let stop = cfg.stoplist()?;
    let mut rows = Vec::new();
    for &task in &cfg.tasks {
        let split = split_for(&pio, task, cfg)?;
        let fp = split.fingerprint();
        let train_texts = texts(&split.train);
        let vz = Vectorizer::fit(train_texts.iter().copied(), cfg.vectorizer(), stop.clone())?;
        let x = vz.vectorize_all(&train_texts);
        let y: Vec<f64> = split.train.iter().map(TaskInstance::sign).collect();
        let dev_x = vz.vectorize_all(&texts(&split.dev));
        let dev_y: Vec<u8> = split.dev.iter().map(|i| i.y).collect();
        let task_rows = grid
            .par_iter()
            .map(|&c| {
                let mut tc = cfg.training(task);
                tc.c = c;
                let model = svm::train(&x, &y, &tc)?;
                let scores = dev_x
                    .iter()
                    .map(|v| svm::decision(&model, v))
                    .collect::<pico_core::Result<Vec<f64>>>()?;
                let e = pico_core::eval::evaluate_scores(scores, &dev_y)?;
                Ok(CRow {
                    task,
                    c,
                    accuracy: e.metrics.accuracy,
                    precision: e.metrics.precision,
                    recall: e.metrics.recall,
                    f1: e.metrics.f1,
                    split_fingerprint: fp.clone(),
                })
            })
            .collect::<Result<Vec<_>, CliError>>()?;
        rows.extend(task_rows);
    }
    Ok(rows)
}

fn texts<'c>(set: &[TaskInstance<'c>]) -> Vec<&'c str> {
    set.iter().map(|i| i.sentence.text.as_str()).collect()
}

/// Per task, the grid value with the highest F1; ties go to the smallest C.
pub fn best_c(rows: &[CRow]) -> BTreeMap<Task, f64> {
    let mut best: BTreeMap<Task, (f64, f64)> = BTreeMap::new();
    for row in rows {
        let slot = best.entry(row.task).or_insert((row.c, row.f1));
        if row.f1 > slot.1 || (row.f1 == slot.1 && row.c < slot.0) {
            *slot = (row.c, row.f1);
        }
    }
    best.into_iter().map(|(t, (c, _))| (t, c)).collect()
}

/// `0.1, 0.2, …, 3.0`
pub fn default_c_grid() -> Vec<f64> {
    (1..=30).map(|k| k as f64 / 10.0).collect()
}

pub fn sweep_c_report(cfg: &RunConfig, grid: &[f64]) -> Result<Report, CliError> {
    let loaded = load_corpus(cfg)?;
    let rows = sweep_c(cfg, &loaded.corpus, grid)?;
    let best = best_c(&rows);
    let mut r = Report::new("sweep-c", cfg, &loaded.sha256);
    r.line(format!(
        "{:<6}{:>8}{:>9}{:>9}{:>9}{:>9}",
        "task", "C", "acc", "prec", "rec", "f1"
    ));
    for row in &rows {
        r.line(format!(
            "{:<6}{:>8}{:>9}{:>9}{:>9}{:>9}",
            row.task.as_str(),
            row.c,
            f4(row.accuracy),
            f4(row.precision),
            f4(row.recall),
            f4(row.f1)
        ));
        r.record("sweep_c", row);
    }
    r.line("");
    for (task, c) in &best {
        let fp = &rows.iter().find(|row| row.task == *task).expect("task has rows").split_fingerprint;
        r.line(format!("best C for {}: {c} (split {fp})", task.as_str()));
        r.record("best_c", &serde_json::json!({ "task": task, "c": c }));
    }
    Ok(r)
}

/// Stratified k-fold cross-validation per task.
pub fn eval_cv(cfg: &RunConfig) -> Result<Report, CliError> {
    let loaded = load_corpus(cfg)?;
    let pio = filter_pio(&loaded.corpus);
    let mut r = Report::new("eval-cv", cfg, &loaded.sha256);
    r.line(format!(
        "{:<6}{:<6}{:>8}{:>9}{:>9}{:>9}{:>9}{:>9}",
        "task", "fold", "n", "acc", "prec", "rec", "f1", "auc"
    ));
    for &task in &cfg.tasks {
        let inst = binarize(&pio, task)?;
        let res = kfold_cv(&inst, cfg.k, cfg.seed, &cfg.pipeline(task)?)?;
        let t = task.as_str();
        for f in &res.folds {
            r.line(format!(
                "{:<6}{:<6}{:>8}{:>9}{:>9}{:>9}{:>9}{:>9}",
                t,
                f.fold,
                f.test_size,
                f4(f.metrics.accuracy),
                f4(f.metrics.precision),
                f4(f.metrics.recall),
                f4(f.metrics.f1),
                f4(f.auc)
            ));
            r.record("fold", &serde_json::json!({ "task": task, "report": f }));
        }
        for (name, s) in [("mean", &res.mean), ("std", &res.std)] {
            r.line(format!(
                "{:<6}{:<6}{:>8}{:>9}{:>9}{:>9}{:>9}{:>9}",
                t,
                name,
                inst.len(),
                f4(s.accuracy),
                f4(s.precision),
                f4(s.recall),
                f4(s.f1),
                f4(s.auc)
            ));
        }
        r.record(
            "cv_summary",
            &serde_json::json!({ "task": task, "k": res.k, "mean": res.mean, "std": res.std }),
        );
    }
    Ok(r)
}

/// Score every non-blank line of `input` with every model. Lines are either
/// `text` or `pmid<TAB>text`. Output is TSV with one column pair per task;
/// an input without sentences yields empty output.
pub fn predict(model_paths: &[PathBuf], input: &Path) -> Result<String, CliError> {
    if model_paths.is_empty() {
        return Err(CliError::Usage("predict needs at least one --model".into()));
    }
    let mut models = model_paths
        .iter()
        .map(TaskModel::load)
        .collect::<pico_core::Result<Vec<_>>>()?;
    models.sort_by_key(|m| m.task);
    if models.windows(2).any(|w| w[0].task == w[1].task) {
        return Err(CliError::Usage("two models for the same task".into()));
    }
    let file = std::fs::File::open(input).map_err(|e| pico_core::Error::io(input, e))?;
    let mut out = String::new();
    for line in std::io::BufReader::new(file).lines() {
        let line = line.map_err(|e| pico_core::Error::io(input, e))?;
        let line = line.trim_end_matches('\r');
        if line.trim().is_empty() {
            continue;
        }
        let (pmid, text) = line.split_once('\t').unwrap_or(("", line));
        if out.is_empty() {
            out.push_str("pmid\ttext");
            for m in &models {
                let t = m.task.as_str();
                let _ = write!(out, "\tscore_{t}\tlabel_{t}");
            }
            out.push('\n');
        }
        let _ = write!(out, "{pmid}\t{text}");
        for m in &models {
            let s = m.score(text);
            let _ = write!(out, "\t{s}\t{}", svm::label_of(s));
        }
        out.push('\n');
    }
    Ok(out)
}
