//! Subcommand implementations. Every output file is written by this thread
//! after the worker pool has finished.

use std::fs::File;
use std::io::{self, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::time::{Instant, SystemTime, UNIX_EPOCH};

use anyhow::Context;
use medsyn::metrics::{compute_metrics, confusion};
use medsyn::model::{
    extract_matrix, read_feature_table, write_feature_table, FeatureTable, Model, ResourceBundle,
    TrainConfig,
};
use medsyn::resources::{
    dataset_vocabulary, load_dataset, load_embeddings, load_pinyin_table, load_radical_table,
    load_translation_lexicon, split_train_test, Dataset, EmbeddingTable, SplitConfig,
    TranslationLexicon,
};
use medsyn::sweep::{
    derive_seed, enumerate_masks, rank, read_report_tsv, render_table, run_sweep, stability_runs,
    top_fraction_feature_frequency, top_k_table, write_frequency_tsv, write_report_tsv,
    write_sidecar_json, FeatureFrequency, SweepConfig, SweepReport,
};
use medsyn::web_dist::{
    build_corpus_index, read_documents_dir, read_documents_lines, CorpusIndex, CorpusProvider,
};
use medsyn::{bundled, FeatureMask, FeatureVector, Label};
use serde::Serialize;

use crate::config::{check_exists, RunConfig};
use crate::{Command, Failure};

/// Seed stream for the stability re-splits, kept apart from the main split.
const STABILITY_STREAM: u64 = 0x5741_4249_4C49_5459;

pub fn run(command: Command) -> Result<(), Failure> {
    match command {
        Command::Features { config, mask, out } => {
            let cfg = resolve(&config)?;
            features(&cfg, mask.as_deref(), out.as_deref())
        }
        Command::Train {
            config,
            features,
            mask,
            model_out,
        } => {
            let cfg = resolve(&config)?;
            train(&cfg, &features, mask.as_deref(), &model_out)
        }
        Command::Eval {
            model,
            features,
            predictions_out,
        } => eval(&model, &features, predictions_out.as_deref()),
        Command::Sweep { config } => {
            let cfg = resolve(&config)?;
            sweep(&cfg)
        }
        Command::Report {
            report,
            top,
            fraction,
            frequency_out,
        } => report_cmd(&report, top, fraction, frequency_out.as_deref()),
        Command::CorpusIndex {
            documents,
            documents_dir,
            vocabulary,
            pairs,
            out,
        } => corpus_index(
            documents.as_deref(),
            documents_dir.as_deref(),
            vocabulary.as_deref(),
            pairs.as_deref(),
            &out,
        ),
    }
}

fn resolve(args: &crate::config::ConfigArgs) -> Result<RunConfig, Failure> {
    let cfg = RunConfig::resolve(args)?;
    eprintln!(
        "resolved configuration: {}",
        serde_json::to_string_pretty(&cfg)?
    );
    Ok(cfg)
}

fn open(path: &Path) -> Result<BufReader<File>, Failure> {
    check_exists(path)?;
    let f = File::open(path).with_context(|| format!("cannot open {}", path.display()))?;
    Ok(BufReader::new(f))
}

fn create(path: &Path) -> Result<BufWriter<File>, Failure> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir).with_context(|| format!("cannot create {}", dir.display()))?;
    }
    let f = File::create(path).with_context(|| format!("cannot create {}", path.display()))?;
    Ok(BufWriter::new(f))
}

fn parse_mask(text: &str) -> Result<FeatureMask, Failure> {
    text.parse()
        .map_err(|e| Failure::usage(format!("bad --mask {text:?}: {e}")))
}

fn read_dataset(cfg: &RunConfig) -> Result<Dataset, Failure> {
    let path = cfg.pairs_path()?;
    load_dataset(open(path)?)
        .with_context(|| format!("reading {}", path.display()))
        .map_err(Failure::from)
}

fn corpus_provider(
    index: Option<&PathBuf>,
    corpus: Option<&PathBuf>,
    vocabulary: &[String],
    log_m: f64,
) -> Result<CorpusProvider, Failure> {
    let index = match (index, corpus) {
        (Some(path), _) => CorpusIndex::load_tsv(open(path)?)
            .with_context(|| format!("reading {}", path.display()))?,
        (None, Some(path)) => {
            let docs = read_documents_lines(open(path)?)?;
            build_corpus_index(&docs, vocabulary)?
        }
        (None, None) => {
            log::warn!("no corpus configured; the matching web-distance feature will be missing");
            build_corpus_index(Vec::<String>::new(), vocabulary)?
        }
    };
    Ok(CorpusProvider::new(index, log_m)?)
}

fn load_bundle(cfg: &RunConfig, dataset: &Dataset) -> Result<ResourceBundle, Failure> {
    let embeddings = |path: &Option<PathBuf>| -> Result<EmbeddingTable, Failure> {
        match path {
            Some(p) => Ok(
                load_embeddings(open(p)?).with_context(|| format!("reading {}", p.display()))?
            ),
            None => Ok(EmbeddingTable::new(1)?),
        }
    };
    let pinyin = match &cfg.pinyin {
        Some(p) => {
            load_pinyin_table(open(p)?).with_context(|| format!("reading {}", p.display()))?
        }
        None => bundled::pinyin_table(),
    };
    let radicals = match &cfg.radicals {
        Some(p) => {
            load_radical_table(open(p)?).with_context(|| format!("reading {}", p.display()))?
        }
        None => bundled::radical_table(),
    };
    let lexicon = match &cfg.lexicon {
        Some(p) => load_translation_lexicon(open(p)?)
            .with_context(|| format!("reading {}", p.display()))?,
        None => TranslationLexicon::default(),
    };
    let vocabulary = dataset_vocabulary(dataset);
    Ok(ResourceBundle {
        zh_embeddings: embeddings(&cfg.zh_embeddings)?,
        en_embeddings: embeddings(&cfg.en_embeddings)?,
        pinyin,
        radicals,
        lexicon,
        provider_primary: Box::new(corpus_provider(
            cfg.primary_index.as_ref(),
            cfg.primary_corpus.as_ref(),
            &vocabulary,
            cfg.log_m,
        )?),
        provider_secondary: Box::new(corpus_provider(
            cfg.secondary_index.as_ref(),
            cfg.secondary_corpus.as_ref(),
            &vocabulary,
            cfg.log_m,
        )?),
        set_aggregation: cfg.set_aggregation,
        ngd_max: cfg.ngd_max,
    })
}

fn pool(parallelism: usize) -> Result<rayon::ThreadPool, Failure> {
    rayon::ThreadPoolBuilder::new()
        .num_threads(parallelism)
        .build()
        .map_err(|e| Failure::data(format!("cannot start worker pool: {e}")))
}

fn features(cfg: &RunConfig, mask: Option<&str>, out: Option<&Path>) -> Result<(), Failure> {
    let mask = mask
        .map(parse_mask)
        .transpose()?
        .unwrap_or(FeatureMask::FULL);
    let dataset = read_dataset(cfg)?;
    let bundle = load_bundle(cfg, &dataset)?;
    let matrix = pool(cfg.parallelism)?.install(|| extract_matrix(dataset.pairs(), &bundle, mask));
    log::info!(
        "extracted {} rows; missing per feature {:?}",
        matrix.len(),
        matrix.diagnostics.missing
    );
    match out {
        Some(path) => {
            let mut w = create(path)?;
            write_feature_table(dataset.pairs(), &matrix, &mut w)?;
            w.flush()?;
        }
        None => {
            let mut w = io::stdout().lock();
            write_feature_table(dataset.pairs(), &matrix, &mut w)?;
            w.flush()?;
        }
    }
    Ok(())
}

fn restrict(table: &FeatureTable, mask: FeatureMask) -> Result<Vec<FeatureVector>, Failure> {
    if mask.bits() & !table.mask.bits() != 0 {
        return Err(Failure::data(format!(
            "mask {mask} is not covered by the feature table columns {}",
            table.mask
        )));
    }
    Ok(table
        .vectors
        .iter()
        .map(|v| {
            let mut out = FeatureVector::new();
            for id in mask.ids() {
                out.set(id, v.get(id));
            }
            out
        })
        .collect())
}

#[derive(Serialize)]
struct TrainSummary {
    mask: FeatureMask,
    rows: usize,
    epochs: usize,
    converged: bool,
    primal_objective: f64,
    training: medsyn::Metrics,
}

fn train(
    cfg: &RunConfig,
    features: &Path,
    mask: Option<&str>,
    model_out: &Path,
) -> Result<(), Failure> {
    let table = read_feature_table(open(features)?)
        .with_context(|| format!("reading {}", features.display()))?;
    let mask = mask.map(parse_mask).transpose()?.unwrap_or(table.mask);
    let rows = restrict(&table, mask)?;
    let train_cfg = TrainConfig {
        c: cfg.c,
        tolerance: cfg.tolerance,
        max_epochs: cfg.max_epochs,
        seed: derive_seed(cfg.seed, mask.bits() as u64),
    };
    let (model, report) = Model::fit(&rows, &table.labels, mask, &train_cfg)?;
    if !report.converged {
        log::warn!(
            "solver stopped after {} epochs without converging",
            report.epochs
        );
    }
    let predictions = rows
        .iter()
        .map(|v| model.predict(v))
        .collect::<medsyn::Result<Vec<Label>>>()?;
    let training = compute_metrics(&confusion(&predictions, &table.labels)?);
    let mut w = create(model_out)?;
    model.save(&mut w)?;
    writeln!(w)?;
    w.flush()?;
    let summary = TrainSummary {
        mask,
        rows: rows.len(),
        epochs: report.epochs,
        converged: report.converged,
        primal_objective: report.primal_objective,
        training,
    };
    println!("{}", serde_json::to_string_pretty(&summary)?);
    Ok(())
}

#[derive(Serialize)]
struct EvalSummary {
    mask: FeatureMask,
    rows: usize,
    confusion: medsyn::ConfusionCounts,
    metrics: medsyn::Metrics,
}

fn eval(model_path: &Path, features: &Path, predictions_out: Option<&Path>) -> Result<(), Failure> {
    let model = Model::load(open(model_path)?)
        .with_context(|| format!("reading {}", model_path.display()))?;
    let table = read_feature_table(open(features)?)
        .with_context(|| format!("reading {}", features.display()))?;
    if table.mask != model.mask {
        return Err(medsyn::Error::MaskMismatch {
            expected: model.mask,
            found: table.mask,
        }
        .into());
    }
    let decisions = table
        .vectors
        .iter()
        .map(|v| model.decision_value(v))
        .collect::<medsyn::Result<Vec<f64>>>()?;
    let predictions: Vec<Label> = decisions
        .iter()
        .map(|&d| medsyn::model::label_for(d))
        .collect();
    let counts = confusion(&predictions, &table.labels)?;
    if let Some(path) = predictions_out {
        let mut w = create(path)?;
        writeln!(w, "term_a\tterm_b\tlabel\tdecision\tpredicted")?;
        for (((a, b), label), (d, p)) in table
            .pairs
            .iter()
            .zip(&table.labels)
            .zip(decisions.iter().zip(&predictions))
        {
            writeln!(
                w,
                "{a}\t{b}\t{}\t{d}\t{}",
                u8::from(label.is_positive()),
                u8::from(p.is_positive())
            )?;
        }
        w.flush()?;
    }
    let summary = EvalSummary {
        mask: model.mask,
        rows: table.labels.len(),
        confusion: counts,
        metrics: compute_metrics(&counts),
    };
    println!("{}", serde_json::to_string_pretty(&summary)?);
    Ok(())
}

#[derive(Serialize)]
struct Volatile {
    /// Seconds since the Unix epoch; differs between otherwise identical runs.
    started_unix: f64,
    finished_unix: f64,
    wall_seconds: f64,
}

#[derive(Serialize)]
struct RunLog<'a> {
    tool: &'static str,
    version: &'static str,
    command: &'static str,
    config: &'a RunConfig,
    dataset_fingerprint: String,
    outputs: Vec<String>,
    volatile: Volatile,
}

fn unix_now() -> f64 {
    SystemTime::now()
        .duration_since(UNIX_EPOCH)
        .map_or(0.0, |d| d.as_secs_f64())
}

fn sweep(cfg: &RunConfig) -> Result<(), Failure> {
    let started = unix_now();
    let clock = Instant::now();
    let out_dir = cfg
        .out_dir
        .clone()
        .ok_or_else(|| Failure::usage("sweep needs --out-dir (or \"out_dir\" in the config)"))?;
    let dataset = read_dataset(cfg)?;
    let bundle = load_bundle(cfg, &dataset)?;
    let split = SplitConfig {
        train_fraction: cfg.train_fraction,
        seed: cfg.seed,
        stratified: true,
    };
    let (train, test) = split_train_test(&dataset, &split)?;
    let sweep_cfg = SweepConfig {
        seed: cfg.seed,
        train: TrainConfig {
            c: cfg.c,
            tolerance: cfg.tolerance,
            max_epochs: cfg.max_epochs,
            seed: cfg.seed,
        },
        parallelism: cfg.parallelism,
        record_timing: cfg.timing,
    };
    let masks = enumerate_masks(cfg.k)?;
    log::info!(
        "sweeping {} masks: {} train / {} test pairs, {} threads",
        masks.len(),
        train.len(),
        test.len(),
        cfg.parallelism
    );
    let mut report = run_sweep(&masks, &train, &test, &bundle, &sweep_cfg)?;
    let meta = report.meta.as_mut().expect("run_sweep records metadata");
    meta.split = Some(split);

    let mut outputs = Vec::new();
    let mut write = |name: &str,
                     f: &dyn Fn(&mut BufWriter<File>) -> Result<(), Failure>|
     -> Result<(), Failure> {
        let mut w = create(&out_dir.join(name))?;
        f(&mut w)?;
        w.flush()?;
        outputs.push(name.to_string());
        Ok(())
    };
    write("sweep.tsv", &|w| Ok(write_report_tsv(&report.rows, w)?))?;
    write("sweep.json", &|w| {
        Ok(write_sidecar_json(report.meta.as_ref().unwrap(), w)?)
    })?;
    match top_fraction_feature_frequency(&report, cfg.fraction) {
        Ok(freq) => {
            write("frequency.tsv", &|w| {
                Ok(write_frequency_tsv(&freq, &mut *w)?)
            })?;
            print_frequency(&freq);
        }
        Err(e) => log::warn!("frequency report skipped: {e}"),
    }
    if let Some(n) = cfg.stability_runs {
        let best = rank(&report.rows)[0].mask;
        let seeds: Vec<u64> = (0..n as u64)
            .map(|i| derive_seed(cfg.seed ^ STABILITY_STREAM, i))
            .collect();
        let stability = stability_runs(
            best,
            &dataset,
            &bundle,
            &sweep_cfg,
            cfg.train_fraction,
            &seeds,
        )?;
        write("stability.json", &|w| {
            serde_json::to_writer_pretty(&mut *w, &stability)?;
            writeln!(w)?;
            Ok(())
        })?;
        println!(
            "stability of {best} over {n} splits: F1 {:.2}% ± {:.2}%",
            stability.mean.f1 * 100.0,
            stability.stddev.f1 * 100.0
        );
    }
    println!("{}", render_table(&top_k_table(&report, cfg.top)?));

    outputs.push("run-log.json".to_string());
    let log = RunLog {
        tool: env!("CARGO_PKG_NAME"),
        version: env!("CARGO_PKG_VERSION"),
        command: "sweep",
        config: cfg,
        dataset_fingerprint: dataset.fingerprint(),
        outputs,
        volatile: Volatile {
            started_unix: started,
            finished_unix: unix_now(),
            wall_seconds: clock.elapsed().as_secs_f64(),
        },
    };
    let mut w = create(&out_dir.join("run-log.json"))?;
    serde_json::to_writer_pretty(&mut w, &log)?;
    writeln!(w)?;
    w.flush()?;
    Ok(())
}

fn print_frequency(freq: &FeatureFrequency) {
    println!("feature frequency in the top {} masks:", freq.considered);
    for (id, count) in freq.ordered() {
        println!("  {:>2} {:<24} {count}", id.get(), id.name());
    }
}

fn report_cmd(
    path: &Path,
    top: usize,
    fraction: f64,
    frequency_out: Option<&Path>,
) -> Result<(), Failure> {
    if top == 0 {
        return Err(Failure::usage("--top must be at least 1"));
    }
    let report: SweepReport =
        read_report_tsv(open(path)?).with_context(|| format!("reading {}", path.display()))?;
    println!("{}", render_table(&top_k_table(&report, top)?));
    let freq = top_fraction_feature_frequency(&report, fraction)?;
    print_frequency(&freq);
    if let Some(out) = frequency_out {
        let mut w = create(out)?;
        write_frequency_tsv(&freq, &mut w)?;
        w.flush()?;
    }
    Ok(())
}

fn corpus_index(
    documents: Option<&Path>,
    documents_dir: Option<&Path>,
    vocabulary: Option<&Path>,
    pairs: Option<&Path>,
    out: &Path,
) -> Result<(), Failure> {
    let docs = match (documents, documents_dir) {
        (Some(p), _) => read_documents_lines(open(p)?)?,
        (None, Some(d)) => {
            check_exists(d)?;
            read_documents_dir(d)?
        }
        (None, None) => return Err(Failure::usage("give --documents or --documents-dir")),
    };
    let vocab: Vec<String> = match (vocabulary, pairs) {
        (Some(p), _) => read_documents_lines(open(p)?)?
            .into_iter()
            .map(|l| l.trim().to_string())
            .collect(),
        (None, Some(p)) => dataset_vocabulary(&load_dataset(open(p)?)?),
        (None, None) => return Err(Failure::usage("give --vocabulary or --pairs")),
    };
    let index = build_corpus_index(&docs, &vocab)?;
    let mut w = create(out)?;
    index.write_tsv(&mut w)?;
    w.flush()?;
    eprintln!(
        "indexed {} documents over {} terms",
        index.total_documents(),
        index.vocabulary().len()
    );
    Ok(())
}
