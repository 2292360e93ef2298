//! Exhaustive feature-subset experiments: enumerate masks, train and score
//! each on a shared split, rank by F1, and summarize.

use std::collections::{BTreeMap, HashSet};
use std::io::{BufRead, Write};
use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::metrics::{compute_metrics, confusion, Metrics};
use crate::model::{
    extract_matrix, label_for, svm, DenseMatrix, ExtractionDiagnostics, FeatureMatrix,
    ResourceBundle, Scaler, TrainConfig,
};
use crate::resources::{split_indices, Dataset, SplitConfig, TrainFraction};
use crate::string_feats::SetAggregation;
use crate::types::{FeatureId, FeatureMask, Label, FEATURE_COUNT};

/// Mixes a stream tag into a seed (SplitMix64 finalizer).
pub fn derive_seed(seed: u64, stream: u64) -> u64 {
    let mut z = seed ^ stream.wrapping_mul(0x9E37_79B9_7F4A_7C15);
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// All non-empty subsets of features `1..=k`, ascending by bitmask.
pub fn enumerate_masks(k: usize) -> Result<Vec<FeatureMask>> {
    if !(1..=FEATURE_COUNT).contains(&k) {
        return Err(Error::invalid(format!("feature count {k} outside 1..=13")));
    }
    log::info!(
        "enumerating {} masks over {k} features; the empty mask is skipped",
        (1u32 << k) - 1
    );
    (1u16..(1u16 << k)).map(FeatureMask::from_bits).collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SweepConfig {
    /// Root of every per-mask training seed.
    pub seed: u64,
    pub train: TrainConfig,
    /// Worker threads; results do not depend on it.
    #[serde(skip)]
    pub parallelism: usize,
    /// Measure per-mask wall time. Off keeps reports byte-reproducible.
    pub record_timing: bool,
}

impl Default for SweepConfig {
    fn default() -> Self {
        SweepConfig {
            seed: 0,
            train: TrainConfig::default(),
            parallelism: 1,
            record_timing: false,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub mask: FeatureMask,
    pub metrics: Metrics,
    pub train_seconds: f64,
    pub seed: u64,
}

/// Settings recorded alongside a report.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReportMeta {
    pub format_version: u32,
    pub seed: u64,
    pub train: TrainConfig,
    pub set_aggregation: SetAggregation,
    pub ngd_max: f64,
    pub train_size: usize,
    pub test_size: usize,
    /// Hash of the train rows followed by the test rows.
    pub dataset_fingerprint: String,
    pub mask_count: usize,
    /// The empty subset is never evaluated.
    pub empty_mask_skipped: bool,
    pub timing_recorded: bool,
    pub diagnostics: ExtractionDiagnostics,
    /// How train and test were drawn, when the caller split a single dataset.
    #[serde(default)]
    pub split: Option<SplitConfig>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepReport {
    pub rows: Vec<SweepRow>,
    pub meta: Option<ReportMeta>,
}

/// Standardized train/test rows over all thirteen slots, shared by every mask.
#[derive(Debug, Clone)]
pub struct PreparedSplit {
    pub train: Vec<[f64; FEATURE_COUNT]>,
    pub train_labels: Vec<Label>,
    pub test: Vec<[f64; FEATURE_COUNT]>,
    pub test_labels: Vec<Label>,
}

impl PreparedSplit {
    /// Fits the scaler on the training matrix and applies it to both sides.
    /// Per-feature statistics make this equal to fitting per mask.
    pub fn new(
        train: &FeatureMatrix,
        train_labels: Vec<Label>,
        test: &FeatureMatrix,
        test_labels: Vec<Label>,
    ) -> Result<Self> {
        if train.len() != train_labels.len() || test.len() != test_labels.len() {
            return Err(Error::invalid("feature rows and labels differ in length"));
        }
        let scaler = Scaler::fit_rows(&train.rows)?;
        Ok(PreparedSplit {
            train: train.rows.iter().map(|r| scaler.transform_row(r)).collect(),
            train_labels,
            test: test.rows.iter().map(|r| scaler.transform_row(r)).collect(),
            test_labels,
        })
    }
}

fn columns(rows: &[[f64; FEATURE_COUNT]], cols: &[usize]) -> DenseMatrix {
    let data = rows
        .iter()
        .flat_map(|r| cols.iter().map(move |&c| r[c]))
        .collect();
    DenseMatrix::new(rows.len(), cols.len(), data).expect("sizes agree by construction")
}

/// Trains on the masked columns and scores the test side.
pub fn evaluate_mask(
    split: &PreparedSplit,
    mask: FeatureMask,
    cfg: &SweepConfig,
) -> Result<SweepRow> {
    let seed = derive_seed(cfg.seed, mask.bits() as u64);
    let start = Instant::now();
    let cols = mask.indices();
    let x = columns(&split.train, &cols);
    let train_cfg = TrainConfig { seed, ..cfg.train };
    let (model, _) =
        svm::train(&x, &split.train_labels, &train_cfg).map_err(|e| Error::InMask {
            mask,
            source: Box::new(e),
        })?;
    let mut buf = vec![0.0; cols.len()];
    let predictions: Vec<Label> = split
        .test
        .iter()
        .map(|r| {
            for (b, &c) in buf.iter_mut().zip(&cols) {
                *b = r[c];
            }
            label_for(model.decision_value(&buf))
        })
        .collect();
    let metrics = compute_metrics(&confusion(&predictions, &split.test_labels)?);
    let train_seconds = if cfg.record_timing {
        start.elapsed().as_secs_f64()
    } else {
        0.0
    };
    Ok(SweepRow {
        mask,
        metrics,
        train_seconds,
        seed,
    })
}

pub fn run_single(
    mask: FeatureMask,
    train: &Dataset,
    test: &Dataset,
    bundle: &ResourceBundle,
    cfg: &SweepConfig,
) -> Result<SweepRow> {
    let tr = extract_matrix(train.pairs(), bundle, mask);
    let te = extract_matrix(test.pairs(), bundle, mask);
    let split = PreparedSplit::new(&tr, train.labels(), &te, test.labels())?;
    evaluate_mask(&split, mask, cfg)
}

fn thread_pool(parallelism: usize) -> Result<rayon::ThreadPool> {
    rayon::ThreadPoolBuilder::new()
        .num_threads(parallelism.max(1))
        .build()
        .map_err(|e| Error::invalid(format!("cannot start worker pool: {e}")))
}

/// Evaluates masks against already prepared rows, in mask order.
pub fn run_prepared(
    masks: &[FeatureMask],
    split: &PreparedSplit,
    cfg: &SweepConfig,
) -> Result<Vec<SweepRow>> {
    let unique: HashSet<FeatureMask> = masks.iter().copied().collect();
    if unique.len() != masks.len() {
        return Err(Error::invalid("sweep masks must be unique"));
    }
    thread_pool(cfg.parallelism)?.install(|| {
        masks
            .par_iter()
            .map(|&m| evaluate_mask(split, m, cfg))
            .collect()
    })
}

/// Extracts the full feature matrix once, then evaluates every mask.
pub fn run_sweep(
    masks: &[FeatureMask],
    train: &Dataset,
    test: &Dataset,
    bundle: &ResourceBundle,
    cfg: &SweepConfig,
) -> Result<SweepReport> {
    if masks.is_empty() {
        return Err(Error::invalid("no masks to evaluate"));
    }
    let needed = FeatureMask::from_bits(masks.iter().fold(0, |acc, m| acc | m.bits()))?;
    let pool = thread_pool(cfg.parallelism)?;
    let (tr, te) = pool.install(|| {
        (
            extract_matrix(train.pairs(), bundle, needed),
            extract_matrix(test.pairs(), bundle, needed),
        )
    });
    let split = PreparedSplit::new(&tr, train.labels(), &te, test.labels())?;
    let rows = run_prepared(masks, &split, cfg)?;

    let diagnostics = tr.diagnostics.merge(te.diagnostics);
    let combined = Dataset::new(train.pairs().iter().chain(test.pairs()).cloned().collect());
    Ok(SweepReport {
        rows,
        meta: Some(ReportMeta {
            format_version: 1,
            seed: cfg.seed,
            train: cfg.train,
            set_aggregation: bundle.set_aggregation,
            ngd_max: bundle.ngd_max,
            train_size: train.len(),
            test_size: test.len(),
            dataset_fingerprint: combined.fingerprint(),
            mask_count: masks.len(),
            empty_mask_skipped: true,
            timing_recorded: cfg.record_timing,
            diagnostics,
            split: None,
        }),
    })
}

/// Descending F1, then precision, then recall; ascending bitmask last.
pub fn rank(rows: &[SweepRow]) -> Vec<SweepRow> {
    let mut out = rows.to_vec();
    out.sort_by(|a, b| {
        b.metrics
            .f1
            .total_cmp(&a.metrics.f1)
            .then(b.metrics.precision.total_cmp(&a.metrics.precision))
            .then(b.metrics.recall.total_cmp(&a.metrics.recall))
            .then(a.mask.bits().cmp(&b.mask.bits()))
    });
    out
}

pub fn top_k_table(report: &SweepReport, k: usize) -> Result<Vec<SweepRow>> {
    if k == 0 {
        return Err(Error::invalid("top-k needs k >= 1"));
    }
    let mut ranked = rank(&report.rows);
    ranked.truncate(k);
    Ok(ranked)
}

/// Feature counts over the best-ranked rows.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureFrequency {
    pub considered: usize,
    pub counts: BTreeMap<FeatureId, usize>,
}

impl FeatureFrequency {
    /// Features sorted by descending count, ties by ascending id.
    pub fn ordered(&self) -> Vec<(FeatureId, usize)> {
        let mut v: Vec<_> = self.counts.iter().map(|(k, v)| (*k, *v)).collect();
        v.sort_by(|a, b| b.1.cmp(&a.1).then(a.0.cmp(&b.0)));
        v
    }

    /// 1-based competition rank: one plus the number of strictly larger counts.
    pub fn rank_of(&self, id: FeatureId) -> usize {
        let c = self.counts.get(&id).copied().unwrap_or(0);
        1 + self.counts.values().filter(|&&x| x > c).count()
    }
}

/// Counts how often each feature appears in the first
/// `floor(fraction * rows)` ranked rows.
pub fn top_fraction_feature_frequency(
    report: &SweepReport,
    fraction: f64,
) -> Result<FeatureFrequency> {
    if !(fraction > 0.0 && fraction <= 1.0) {
        return Err(Error::invalid(format!(
            "fraction {fraction} outside (0, 1]"
        )));
    }
    if report.rows.is_empty() {
        return Err(Error::invalid("empty sweep report"));
    }
    let considered = (fraction * report.rows.len() as f64).floor() as usize;
    if considered == 0 {
        return Err(Error::invalid(format!(
            "fraction {fraction} of {} rows selects nothing",
            report.rows.len()
        )));
    }
    let present = report.rows.iter().fold(0u16, |acc, r| acc | r.mask.bits());
    let mut counts: BTreeMap<FeatureId, usize> = FeatureId::all()
        .filter(|id| present & (1 << id.index()) != 0)
        .map(|id| (id, 0))
        .collect();
    for row in rank(&report.rows).iter().take(considered) {
        for id in row.mask.ids() {
            *counts.entry(id).or_insert(0) += 1;
        }
    }
    Ok(FeatureFrequency { considered, counts })
}

const REPORT_HEADER: &str = "bitmask\tfeatures\tprecision\trecall\tf1\tseconds";

/// Writes rows in the given order.
pub fn write_report_tsv<W: Write>(rows: &[SweepRow], mut out: W) -> Result<()> {
    writeln!(out, "{REPORT_HEADER}")?;
    for r in rows {
        writeln!(
            out,
            "{}\t{}\t{}\t{}\t{}\t{:.6}",
            r.mask.bits(),
            r.mask,
            r.metrics.precision,
            r.metrics.recall,
            r.metrics.f1,
            r.train_seconds
        )?;
    }
    Ok(())
}

pub fn read_report_tsv<R: BufRead>(source: R) -> Result<SweepReport> {
    let mut rows = Vec::new();
    let mut seen = HashSet::new();
    for (i, line) in source.lines().enumerate() {
        let n = i + 1;
        let line = line?;
        if line.trim().is_empty() || (n == 1 && line.starts_with("bitmask")) {
            continue;
        }
        let cols: Vec<&str> = line.split('\t').collect();
        if cols.len() != 6 {
            return Err(Error::parse(
                n,
                format!("expected 6 columns, found {}", cols.len()),
            ));
        }
        let bits: u16 = cols[0]
            .parse()
            .map_err(|_| Error::parse(n, format!("bad bitmask {:?}", cols[0])))?;
        let mask = FeatureMask::from_bits(bits).map_err(|e| Error::parse(n, e.to_string()))?;
        let listed: FeatureMask = cols[1]
            .parse()
            .map_err(|e: Error| Error::parse(n, e.to_string()))?;
        if listed != mask {
            return Err(Error::parse(n, "bitmask and feature list disagree"));
        }
        let num = |s: &str| -> Result<f64> {
            s.parse::<f64>()
                .map_err(|_| Error::parse(n, format!("bad number {s:?}")))
        };
        let metrics = Metrics {
            precision: num(cols[2])?,
            recall: num(cols[3])?,
            f1: num(cols[4])?,
        };
        for x in [metrics.precision, metrics.recall, metrics.f1] {
            if !(0.0..=1.0).contains(&x) {
                return Err(Error::parse(n, format!("metric {x} outside [0, 1]")));
            }
        }
        if !seen.insert(mask) {
            return Err(Error::parse(n, format!("duplicate mask {mask}")));
        }
        rows.push(SweepRow {
            mask,
            metrics,
            train_seconds: num(cols[5])?,
            seed: 0,
        });
    }
    Ok(SweepReport { rows, meta: None })
}

/// Writes the report settings as pretty JSON.
pub fn write_sidecar_json<W: Write>(meta: &ReportMeta, mut out: W) -> Result<()> {
    serde_json::to_writer_pretty(&mut out, meta)?;
    writeln!(out)?;
    Ok(())
}

pub fn read_sidecar_json<R: std::io::Read>(source: R) -> Result<ReportMeta> {
    Ok(serde_json::from_reader(source)?)
}

pub fn write_frequency_tsv<W: Write>(freq: &FeatureFrequency, mut out: W) -> Result<()> {
    writeln!(out, "feature_id\tcount\tfraction")?;
    for (id, count) in &freq.counts {
        writeln!(
            out,
            "{id}\t{count}\t{}",
            *count as f64 / freq.considered as f64
        )?;
    }
    Ok(())
}

/// Human-readable table: feature list with percentages.
pub fn render_table(rows: &[SweepRow]) -> String {
    let width = rows
        .iter()
        .map(|r| r.mask.to_string().len())
        .max()
        .unwrap_or(0)
        .max("features".len());
    let mut s = format!(
        "{:<width$}  {:>9}  {:>9}  {:>9}\n",
        "features", "precision", "recall", "f1"
    );
    for r in rows {
        s.push_str(&format!(
            "{:<width$}  {:>8.2}%  {:>8.2}%  {:>8.2}%\n",
            r.mask.to_string(),
            r.metrics.precision * 100.0,
            r.metrics.recall * 100.0,
            r.metrics.f1 * 100.0
        ));
    }
    s
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StabilityRun {
    pub split_seed: u64,
    pub metrics: Metrics,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StabilityReport {
    pub mask: FeatureMask,
    pub runs: Vec<StabilityRun>,
    pub mean: Metrics,
    /// Sample standard deviation (n - 1 denominator).
    pub stddev: Metrics,
}

/// Re-splits the dataset with every seed, then trains and scores `mask`.
pub fn stability_runs(
    mask: FeatureMask,
    dataset: &Dataset,
    bundle: &ResourceBundle,
    cfg: &SweepConfig,
    train_fraction: TrainFraction,
    seeds: &[u64],
) -> Result<StabilityReport> {
    if seeds.len() < 2 {
        return Err(Error::invalid("stability needs at least two runs"));
    }
    if seeds.iter().collect::<HashSet<_>>().len() != seeds.len() {
        return Err(Error::invalid("stability seeds must be distinct"));
    }
    let pool = thread_pool(cfg.parallelism)?;
    let full = pool.install(|| extract_matrix(dataset.pairs(), bundle, mask));
    let labels = dataset.labels();
    let runs = seeds
        .iter()
        .map(|&seed| {
            let (tr, te) = split_indices(
                dataset,
                &SplitConfig {
                    train_fraction,
                    seed,
                    stratified: true,
                },
            )?;
            let pick = |idx: &[usize]| idx.iter().map(|&i| labels[i]).collect::<Vec<_>>();
            let split =
                PreparedSplit::new(&full.select(&tr), pick(&tr), &full.select(&te), pick(&te))?;
            let run_cfg = SweepConfig {
                seed: derive_seed(cfg.seed, seed),
                ..*cfg
            };
            let row = evaluate_mask(&split, mask, &run_cfg)?;
            Ok(StabilityRun {
                split_seed: seed,
                metrics: row.metrics,
            })
        })
        .collect::<Result<Vec<_>>>()?;

    let n = runs.len() as f64;
    let pick = |f: fn(&Metrics) -> f64| runs.iter().map(|r| f(&r.metrics)).collect::<Vec<f64>>();
    let stats = |xs: Vec<f64>| {
        let mean = xs.iter().sum::<f64>() / n;
        let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0);
        (mean, var.sqrt())
    };
    let (pm, ps) = stats(pick(|m| m.precision));
    let (rm, rs) = stats(pick(|m| m.recall));
    let (fm, fs) = stats(pick(|m| m.f1));
    Ok(StabilityReport {
        mask,
        runs,
        mean: Metrics {
            precision: pm,
            recall: rm,
            f1: fm,
        },
        stddev: Metrics {
            precision: ps,
            recall: rs,
            f1: fs,
        },
    })
}
