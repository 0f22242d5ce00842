//! Subcommand implementations.

use std::collections::HashSet;
use std::fs::{self, File};
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};

use serde::Serialize;

use crate::cli::{CommandKind, RunConfig};
use crate::coherence::{coherence_report, render_table};
use crate::config::{Config, Precision, TopicsCorpus};
use crate::corpus::{
    build_vocabulary, drop_empty_documents, load_jsonl, split, tokenize, write_manifest,
    LabeledSplit, RawDocument, TokenSequence, Vocabulary,
};
use crate::embedding::{init_random, load_pretrained_vectors, EmbeddingMatrix};
use crate::error::{Error, Result};
use crate::num::Scalar;
use crate::topics::{build_topic_matrices, entropy_report, topic_descriptor, TopicDescriptor};
use crate::training::{
    evaluate, load_checkpoint, random_tiny_check, save_checkpoint, train, CheckpointMeta,
    EpochRecord, TrainOutcome,
};

pub(super) fn execute(run: &RunConfig) -> Result<()> {
    let config = run.parse_effective_config()?;
    fs::create_dir_all(&run.out_dir)
        .map_err(|e| Error::io(run.out_dir.display().to_string(), e))?;
    config.write_echo(&run.out_dir)?;

    if run.seeds.is_some() && !matches!(run.command, CommandKind::Train) {
        return Err(Error::Config(
            "--seeds is only meaningful for train; use --seed elsewhere".into(),
        ));
    }

    match (&run.command, config.precision) {
        (CommandKind::Prepare, _) => prepare_command(&config, &run.out_dir),
        (CommandKind::Gradcheck, _) => gradcheck_command(&config, &run.out_dir),
        (CommandKind::Train, Precision::F32) => train_command::<f32>(run, &config),
        (CommandKind::Train, Precision::F64) => train_command::<f64>(run, &config),
        (CommandKind::Eval, Precision::F32) => eval_command::<f32>(&config, &run.out_dir),
        (CommandKind::Eval, Precision::F64) => eval_command::<f64>(&config, &run.out_dir),
        (CommandKind::Topics, Precision::F32) => topics_command::<f32>(&config, &run.out_dir),
        (CommandKind::Topics, Precision::F64) => topics_command::<f64>(&config, &run.out_dir),
        (CommandKind::Coherence, Precision::F32) => coherence_command::<f32>(&config, &run.out_dir),
        (CommandKind::Coherence, Precision::F64) => coherence_command::<f64>(&config, &run.out_dir),
        (CommandKind::EntropyReport, Precision::F32) => {
            entropy_command::<f32>(&config, &run.out_dir)
        }
        (CommandKind::EntropyReport, Precision::F64) => {
            entropy_command::<f64>(&config, &run.out_dir)
        }
        (CommandKind::LambdaSweep, Precision::F32) => sweep_command::<f32>(&config, &run.out_dir),
        (CommandKind::LambdaSweep, Precision::F64) => sweep_command::<f64>(&config, &run.out_dir),
    }
}

struct PreparedData {
    vocab: Vocabulary,
    split: LabeledSplit,
    documents: Vec<RawDocument>,
}

fn prepare_data(config: &Config) -> Result<PreparedData> {
    let path = config.require_corpus_path()?;
    let options = config.load_options()?;
    let outcome = load_jsonl(&path, &options)?;
    if outcome.skipped > 0 {
        eprintln!(
            "warning: skipped {} malformed or duplicate corpus lines",
            outcome.skipped
        );
    }
    let (documents, dropped) = drop_empty_documents(outcome.documents);
    if dropped > 0 {
        eprintln!("warning: dropped {dropped} documents with no tokens");
    }
    let vocab = build_vocabulary(&documents, config.min_count)?;
    let ratios = (
        config.split_ratios[0],
        config.split_ratios[1],
        config.split_ratios[2],
    );
    let split = split(&documents, &vocab, config.max_len, ratios, config.seed)?;
    Ok(PreparedData {
        vocab,
        split,
        documents,
    })
}

fn build_embedding<S: Scalar>(config: &Config, vocab: &Vocabulary) -> Result<EmbeddingMatrix<S>> {
    match &config.pretrained_vectors_path {
        Some(path) => {
            let emb =
                load_pretrained_vectors(Path::new(path), vocab, config.embed_dim, config.seed)?;
            eprintln!(
                "loaded pretrained vectors: coverage {:.1}% of {} retained tokens",
                emb.coverage() * 100.0,
                vocab.retained()
            );
            Ok(emb)
        }
        None => Ok(init_random(vocab.len(), config.embed_dim, config.seed)),
    }
}

fn checkpoint_path(config: &Config, out_dir: &Path) -> PathBuf {
    config
        .checkpoint_path
        .as_ref()
        .map(PathBuf::from)
        .unwrap_or_else(|| out_dir.join("checkpoint.batm"))
}

fn write_json(path: &Path, value: &impl Serialize) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    fs::write(path, text).map_err(|e| Error::io(path.display().to_string(), e))
}

/// Encoded documents feeding topic/entropy analysis, per configuration.
fn analysis_sequences(split: &LabeledSplit, which: TopicsCorpus) -> Vec<TokenSequence> {
    let parts: Vec<&[crate::corpus::EncodedDocument]> = match which {
        TopicsCorpus::All => vec![&split.train, &split.validation, &split.test],
        TopicsCorpus::Train => vec![&split.train],
        TopicsCorpus::Validation => vec![&split.validation],
        TopicsCorpus::Test => vec![&split.test],
    };
    parts
        .into_iter()
        .flatten()
        .map(|d| d.sequence.clone())
        .collect()
}

/// Raw tokenized documents of the same selection (for coherence windows).
fn analysis_token_streams(data: &PreparedData, which: TopicsCorpus) -> Vec<Vec<String>> {
    let id_filter: Option<HashSet<&str>> = match which {
        TopicsCorpus::All => None,
        part => {
            let docs = match part {
                TopicsCorpus::Train => &data.split.train,
                TopicsCorpus::Validation => &data.split.validation,
                TopicsCorpus::Test => &data.split.test,
                TopicsCorpus::All => unreachable!(),
            };
            Some(docs.iter().map(|d| d.id.as_str()).collect())
        }
    };
    data.documents
        .iter()
        .filter(|d| {
            id_filter
                .as_ref()
                .is_none_or(|ids| ids.contains(d.id.as_str()))
        })
        .map(|d| tokenize(&d.text).into_iter().map(|t| t.text).collect())
        .collect()
}

fn load_model<S: Scalar>(
    config: &Config,
    out_dir: &Path,
    data: &PreparedData,
) -> Result<crate::model::ModelParams<S>> {
    let path = checkpoint_path(config, out_dir);
    let (params, _state, _header) = load_checkpoint::<S>(&path)?;
    if params.vocab_size() != data.vocab.len() {
        return Err(Error::Checkpoint(format!(
            "checkpoint vocabulary size {} does not match corpus vocabulary {}",
            params.vocab_size(),
            data.vocab.len()
        )));
    }
    if params.num_classes() != data.split.label_map.num_classes() {
        return Err(Error::Checkpoint(format!(
            "checkpoint has {} classes, corpus has {}",
            params.num_classes(),
            data.split.label_map.num_classes()
        )));
    }
    Ok(params)
}

// ---------------------------------------------------------------- prepare

fn prepare_command(config: &Config, out_dir: &Path) -> Result<()> {
    let data = prepare_data(config)?;

    let manifest_path = out_dir.join("manifest.jsonl");
    let file = File::create(&manifest_path)
        .map_err(|e| Error::io(manifest_path.display().to_string(), e))?;
    let mut writer = BufWriter::new(file);
    write_manifest(&data.split, &mut writer)?;
    writer
        .flush()
        .map_err(|e| Error::io(manifest_path.display().to_string(), e))?;

    let vocab_path = out_dir.join("vocabulary.tsv");
    let mut vocab_out = String::new();
    for id in 0..data.vocab.len() as u32 {
        vocab_out.push_str(&format!(
            "{id}\t{}\t{}\n",
            data.vocab.token_of(id),
            data.vocab.frequency_of(id)
        ));
    }
    fs::write(&vocab_path, vocab_out)
        .map_err(|e| Error::io(vocab_path.display().to_string(), e))?;

    write_json(
        &out_dir.join("label_map.json"),
        &data.split.label_map.labels(),
    )?;

    eprintln!(
        "prepared {} documents: {}/{}/{} train/validation/test, {} labels, vocabulary {}",
        data.split.total_len(),
        data.split.train.len(),
        data.split.validation.len(),
        data.split.test.len(),
        data.split.label_map.num_classes(),
        data.vocab.len()
    );
    Ok(())
}

// ------------------------------------------------------------------ train

#[derive(Debug, Serialize)]
struct TrainSummary {
    seed: u64,
    best_epoch: usize,
    best_val_accuracy: f64,
    best_val_macro_f1: f64,
    checkpoint: String,
}

fn train_command<S: Scalar>(run: &RunConfig, config: &Config) -> Result<()> {
    let seeds = run.seeds.clone().unwrap_or_else(|| vec![config.seed]);
    if seeds.is_empty() {
        return Err(Error::Config("--seeds list is empty".into()));
    }
    if seeds.len() == 1 {
        let mut single = config.clone();
        single.seed = seeds[0];
        run_one_training::<S>(&single, &run.out_dir)?;
        return Ok(());
    }

    let mut summaries = Vec::with_capacity(seeds.len());
    for &seed in &seeds {
        let mut per_seed = config.clone();
        per_seed.seed = seed;
        let dir = run.out_dir.join(format!("seed-{seed}"));
        fs::create_dir_all(&dir).map_err(|e| Error::io(dir.display().to_string(), e))?;
        per_seed.write_echo(&dir)?;
        summaries.push(run_one_training::<S>(&per_seed, &dir)?);
    }
    let mean =
        |f: fn(&TrainSummary) -> f64| summaries.iter().map(f).sum::<f64>() / summaries.len() as f64;
    let std = |f: fn(&TrainSummary) -> f64, mean: f64| {
        (summaries.iter().map(|s| (f(s) - mean).powi(2)).sum::<f64>() / summaries.len() as f64)
            .sqrt()
    };
    let acc_mean = mean(|s| s.best_val_accuracy);
    let f1_mean = mean(|s| s.best_val_macro_f1);
    let multi = serde_json::json!({
        "seeds": seeds,
        "val_accuracy_mean": acc_mean,
        "val_accuracy_std": std(|s| s.best_val_accuracy, acc_mean),
        "val_macro_f1_mean": f1_mean,
        "val_macro_f1_std": std(|s| s.best_val_macro_f1, f1_mean),
        "runs": summaries,
    });
    write_json(&run.out_dir.join("seeds_summary.json"), &multi)?;
    eprintln!(
        "{} seeds: val accuracy {:.4} +/- {:.4}",
        seeds.len(),
        acc_mean,
        std(|s| s.best_val_accuracy, acc_mean)
    );
    Ok(())
}

fn run_one_training<S: Scalar>(config: &Config, out_dir: &Path) -> Result<TrainSummary> {
    let data = prepare_data(config)?;
    let embedding = build_embedding::<S>(config, &data.vocab)?;
    let outcome: TrainOutcome<S> = train(&config.train_config(), &data.split, embedding)?;

    write_epoch_log(&outcome.log, &out_dir.join("epoch_log.jsonl"))?;
    for record in &outcome.log {
        eprintln!(
            "epoch {}: lr {:.2e} train loss {:.4} val acc {:.4} val macro-F1 {:.4} avg E_doc {:.4}",
            record.epoch,
            record.lr,
            record.train_loss,
            record.val_accuracy,
            record.val_macro_f1,
            record.avg_doc_entropy
        );
    }

    let best = &outcome.log[outcome.best_epoch - 1];
    let mut metrics = std::collections::BTreeMap::new();
    metrics.insert("train_loss".to_string(), best.train_loss);
    metrics.insert("val_accuracy".to_string(), best.val_accuracy);
    metrics.insert("val_macro_f1".to_string(), best.val_macro_f1);
    metrics.insert("avg_doc_entropy".to_string(), best.avg_doc_entropy);
    let meta = CheckpointMeta {
        config: serde_json::to_value(config)?,
        seed: config.seed,
        epoch: outcome.best_epoch,
        metrics,
    };
    let ckpt = checkpoint_path(config, out_dir);
    save_checkpoint(&outcome.params, &outcome.state, &meta, &ckpt)?;

    let summary = TrainSummary {
        seed: config.seed,
        best_epoch: outcome.best_epoch,
        best_val_accuracy: best.val_accuracy,
        best_val_macro_f1: best.val_macro_f1,
        checkpoint: ckpt.display().to_string(),
    };
    write_json(&out_dir.join("summary.json"), &summary)?;
    eprintln!(
        "best epoch {} (val accuracy {:.4}); checkpoint at {}",
        summary.best_epoch, summary.best_val_accuracy, summary.checkpoint
    );
    Ok(summary)
}

fn write_epoch_log(log: &[EpochRecord], path: &Path) -> Result<()> {
    let mut out = String::new();
    for record in log {
        out.push_str(&serde_json::to_string(record)?);
        out.push('\n');
    }
    fs::write(path, out).map_err(|e| Error::io(path.display().to_string(), e))
}

// ------------------------------------------------------------------- eval

fn eval_command<S: Scalar>(config: &Config, out_dir: &Path) -> Result<()> {
    let data = prepare_data(config)?;
    let params = load_model::<S>(config, out_dir, &data)?;
    let part = data.split.part(config.eval_split);
    let metrics = evaluate(&params, part, data.split.label_map.num_classes())?;
    let report = serde_json::json!({
        "split": config.eval_split,
        "examples": metrics.examples,
        "accuracy": metrics.accuracy,
        "macro_f1": metrics.macro_f1,
        "per_class_f1": metrics.per_class_f1,
    });
    write_json(&out_dir.join("metrics.json"), &report)?;
    eprintln!(
        "{} set: accuracy {:.4}, macro-F1 {:.4} over {} examples",
        config.eval_split.name(),
        metrics.accuracy,
        metrics.macro_f1,
        metrics.examples
    );
    Ok(())
}

// ----------------------------------------------------------------- topics

fn compute_descriptors<S: Scalar>(
    config: &Config,
    out_dir: &Path,
    data: &PreparedData,
) -> Result<Vec<TopicDescriptor>> {
    let params = load_model::<S>(config, out_dir, data)?;
    let corpus = analysis_sequences(&data.split, config.topics_corpus);
    let matrices = build_topic_matrices(&params, &corpus)?;
    let mut descriptors = Vec::with_capacity(matrices.len());
    for matrix in &matrices {
        let descriptor = topic_descriptor(matrix, config.top_t, &data.vocab)?;
        if descriptor.terms.len() < config.top_t {
            eprintln!(
                "warning: head {} has only {} descriptor terms (requested {})",
                matrix.head,
                descriptor.terms.len(),
                config.top_t
            );
        }
        descriptors.push(descriptor);
    }
    if config.export_matrices {
        let dir = out_dir.join("matrices");
        fs::create_dir_all(&dir).map_err(|e| Error::io(dir.display().to_string(), e))?;
        for matrix in &matrices {
            let path = dir.join(format!("head_{:03}.csv", matrix.head));
            let file = File::create(&path).map_err(|e| Error::io(path.display().to_string(), e))?;
            let mut writer = BufWriter::new(file);
            matrix.write_triplets(&mut writer)?;
            writer
                .flush()
                .map_err(|e| Error::io(path.display().to_string(), e))?;
        }
    }
    Ok(descriptors)
}

fn write_descriptors(descriptors: &[TopicDescriptor], path: &Path) -> Result<()> {
    let mut out = String::new();
    for descriptor in descriptors {
        out.push_str(&serde_json::to_string(descriptor)?);
        out.push('\n');
    }
    fs::write(path, out).map_err(|e| Error::io(path.display().to_string(), e))
}

fn read_descriptors(path: &Path) -> Result<Vec<TopicDescriptor>> {
    let file = File::open(path).map_err(|e| Error::io(path.display().to_string(), e))?;
    let mut descriptors = Vec::new();
    for line in BufReader::new(file).lines() {
        let line = line.map_err(|e| Error::io(path.display().to_string(), e))?;
        if line.trim().is_empty() {
            continue;
        }
        descriptors.push(serde_json::from_str(&line)?);
    }
    if descriptors.is_empty() {
        return Err(Error::Topics(format!(
            "{}: no descriptors found",
            path.display()
        )));
    }
    Ok(descriptors)
}

fn topics_command<S: Scalar>(config: &Config, out_dir: &Path) -> Result<()> {
    let data = prepare_data(config)?;
    let descriptors = compute_descriptors::<S>(config, out_dir, &data)?;
    write_descriptors(&descriptors, &out_dir.join("descriptors.jsonl"))?;
    eprintln!("wrote {} topic descriptors", descriptors.len());
    Ok(())
}

// -------------------------------------------------------------- coherence

fn coherence_command<S: Scalar>(config: &Config, out_dir: &Path) -> Result<()> {
    let data = prepare_data(config)?;
    let descriptors = match &config.descriptors_path {
        Some(path) => read_descriptors(Path::new(path))?,
        None => compute_descriptors::<S>(config, out_dir, &data)?,
    };
    let docs = analysis_token_streams(&data, config.topics_corpus);
    let result = coherence_report(
        &descriptors,
        &docs,
        config.window_size,
        config.top_t,
        config.coherence_eps,
    )?;
    write_json(&out_dir.join("coherence.json"), &result)?;
    let table = render_table(&result);
    let table_path = out_dir.join("coherence_table.txt");
    fs::write(&table_path, &table).map_err(|e| Error::io(table_path.display().to_string(), e))?;
    match result.average_cv {
        Some(avg) => eprintln!("average C_v over {} topics: {avg:.4}", result.topics.len()),
        None => eprintln!("no topic had enough usable words to score"),
    }
    Ok(())
}

// ---------------------------------------------------------- entropy-report

fn entropy_command<S: Scalar>(config: &Config, out_dir: &Path) -> Result<()> {
    let data = prepare_data(config)?;
    let params = load_model::<S>(config, out_dir, &data)?;
    let corpus = analysis_sequences(&data.split, config.topics_corpus);
    let report = entropy_report(&params, &corpus)?;
    write_json(&out_dir.join("entropy_report.json"), &report)?;
    eprintln!(
        "avg E_doc {:.4}, avg E_token {:.4} over {} documents / {} tokens",
        report.avg_doc_entropy, report.avg_token_entropy, report.doc_count, report.token_count
    );
    Ok(())
}

// ---------------------------------------------------------------- gradcheck

fn gradcheck_command(config: &Config, out_dir: &Path) -> Result<()> {
    let report = random_tiny_check(
        config.gradcheck_cases,
        &config.gradcheck_lambdas,
        config.gradcheck_step,
        config.seed,
    )?;
    let pass = report.max_rel_error < config.gradcheck_tolerance;
    let record = serde_json::json!({
        "cases": report.cases,
        "lambdas": report.lambdas,
        "step": report.step,
        "max_rel_error": report.max_rel_error,
        "tolerance": config.gradcheck_tolerance,
        "pass": pass,
    });
    write_json(&out_dir.join("gradcheck.json"), &record)?;
    println!(
        "gradcheck: max relative error {:.3e} over {} cases (tolerance {:.0e}) {}",
        report.max_rel_error,
        report.cases,
        config.gradcheck_tolerance,
        if pass { "PASS" } else { "FAIL" }
    );
    if !pass {
        return Err(Error::Training(format!(
            "gradient check failed: max relative error {:.3e} >= {:.0e}",
            report.max_rel_error, config.gradcheck_tolerance
        )));
    }
    Ok(())
}

// -------------------------------------------------------------- lambda-sweep

fn sweep_command<S: Scalar>(config: &Config, out_dir: &Path) -> Result<()> {
    if config.lambda_sweep.is_empty() {
        return Err(Error::Config("lambda_sweep list is empty".into()));
    }
    let mut csv = String::from("lambda,accuracy,macro_f,avg_e_doc,avg_e_token\n");
    for &lambda in &config.lambda_sweep {
        let mut sub = config.clone();
        sub.lambda = lambda;
        let dir = out_dir.join(format!("lambda-{lambda}"));
        fs::create_dir_all(&dir).map_err(|e| Error::io(dir.display().to_string(), e))?;
        sub.write_echo(&dir)?;
        run_one_training::<S>(&sub, &dir)?;

        let data = prepare_data(&sub)?;
        let params = load_model::<S>(&sub, &dir, &data)?;
        let part = data.split.part(sub.eval_split);
        let metrics = evaluate(&params, part, data.split.label_map.num_classes())?;
        let corpus = analysis_sequences(&data.split, sub.topics_corpus);
        let report = entropy_report(&params, &corpus)?;
        write_json(&dir.join("entropy_report.json"), &report)?;

        csv.push_str(&format!(
            "{lambda},{},{},{},{}\n",
            metrics.accuracy, metrics.macro_f1, report.avg_doc_entropy, report.avg_token_entropy
        ));
        eprintln!(
            "lambda {lambda}: accuracy {:.4}, macro-F1 {:.4}, avg E_doc {:.4}, avg E_token {:.4}",
            metrics.accuracy, metrics.macro_f1, report.avg_doc_entropy, report.avg_token_entropy
        );
    }
    let csv_path = out_dir.join("lambda_sweep.csv");
    fs::write(&csv_path, csv).map_err(|e| Error::io(csv_path.display().to_string(), e))?;
    eprintln!("sweep table at {}", csv_path.display());
    Ok(())
}
