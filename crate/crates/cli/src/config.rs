//! Run configuration: defaults, overridden by a JSON file, overridden by flags.

use std::path::{Path, PathBuf};

use clap::Args;
use medsyn::model::DEFAULT_NGD_MAX;
use medsyn::resources::TrainFraction;
use medsyn::string_feats::SetAggregation;
use medsyn::web_dist::DEFAULT_LOG_M;
use serde::{Deserialize, Serialize};

use crate::Failure;

/// Flags shared by the commands that read resources or train models.
#[derive(Debug, Clone, Default, Args)]
pub struct ConfigArgs {
    /// JSON file with any of the settings below; flags take precedence.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Labeled pairs: term_a, term_b, label (0|1), translations_a, translations_b.
    #[arg(long)]
    pub pairs: Option<PathBuf>,
    /// Chinese embeddings in text format (header "count dim").
    #[arg(long)]
    pub zh_embeddings: Option<PathBuf>,
    /// English embeddings in text format (header "count dim").
    #[arg(long)]
    pub en_embeddings: Option<PathBuf>,
    /// Character-to-pinyin table; the bundled table is used when absent.
    #[arg(long)]
    pub pinyin: Option<PathBuf>,
    /// Character-to-radical table; the bundled table is used when absent.
    #[arg(long)]
    pub radicals: Option<PathBuf>,
    /// Chinese term to English translations, used when a pair has none.
    #[arg(long)]
    pub lexicon: Option<PathBuf>,
    /// Prebuilt corpus index behind feature 12.
    #[arg(long)]
    pub primary_index: Option<PathBuf>,
    /// Document file (one per line) indexed on the fly for feature 12.
    #[arg(long)]
    pub primary_corpus: Option<PathBuf>,
    /// Prebuilt corpus index behind feature 13.
    #[arg(long)]
    pub secondary_index: Option<PathBuf>,
    /// Document file (one per line) indexed on the fly for feature 13.
    #[arg(long)]
    pub secondary_corpus: Option<PathBuf>,
    /// Global seed; every split and training seed derives from it.
    #[arg(long)]
    pub seed: Option<u64>,
    /// Share of each class used for training, as "a/b" or a decimal.
    #[arg(long)]
    pub train_fraction: Option<TrainFraction>,
    /// SVM regularization parameter C.
    #[arg(long)]
    pub c: Option<f64>,
    /// Solver stopping tolerance.
    #[arg(long)]
    pub tolerance: Option<f64>,
    /// Solver epoch limit.
    #[arg(long)]
    pub max_epochs: Option<usize>,
    /// Aggregation over translation pairs for feature 5: max or min.
    #[arg(long)]
    pub set_aggregation: Option<SetAggregation>,
    /// Value used for never-co-occurring terms in features 12 and 13.
    #[arg(long)]
    pub ngd_max: Option<f64>,
    /// Base-10 log of the total page count for the offline providers.
    #[arg(long)]
    pub log_m: Option<f64>,
    /// Worker threads; outputs do not depend on it.
    #[arg(long)]
    pub parallelism: Option<usize>,
    /// Output directory for sweep files and the run log.
    #[arg(long)]
    pub out_dir: Option<PathBuf>,
    /// Sweep over all non-empty subsets of features 1..=k.
    #[arg(long)]
    pub k: Option<usize>,
    /// Rows in the printed top-k table.
    #[arg(long)]
    pub top: Option<usize>,
    /// Share of ranked rows used for feature frequencies.
    #[arg(long)]
    pub fraction: Option<f64>,
    /// Record per-mask wall time in the report (makes it non-reproducible).
    #[arg(long)]
    pub timing: bool,
    /// Re-split and re-evaluate the best mask this many times.
    #[arg(long)]
    pub stability_runs: Option<usize>,
}

/// The JSON file form; every field is optional.
#[derive(Debug, Clone, Default, Deserialize)]
#[serde(default, deny_unknown_fields)]
struct FileConfig {
    pairs: Option<PathBuf>,
    zh_embeddings: Option<PathBuf>,
    en_embeddings: Option<PathBuf>,
    pinyin: Option<PathBuf>,
    radicals: Option<PathBuf>,
    lexicon: Option<PathBuf>,
    primary_index: Option<PathBuf>,
    primary_corpus: Option<PathBuf>,
    secondary_index: Option<PathBuf>,
    secondary_corpus: Option<PathBuf>,
    seed: Option<u64>,
    train_fraction: Option<TrainFraction>,
    c: Option<f64>,
    tolerance: Option<f64>,
    max_epochs: Option<usize>,
    set_aggregation: Option<SetAggregation>,
    ngd_max: Option<f64>,
    log_m: Option<f64>,
    parallelism: Option<usize>,
    out_dir: Option<PathBuf>,
    k: Option<usize>,
    top: Option<usize>,
    fraction: Option<f64>,
    timing: Option<bool>,
    stability_runs: Option<usize>,
}

/// Fully resolved settings, echoed at startup and stored in the run log.
#[derive(Debug, Clone, Serialize)]
pub struct RunConfig {
    pub pairs: Option<PathBuf>,
    pub zh_embeddings: Option<PathBuf>,
    pub en_embeddings: Option<PathBuf>,
    pub pinyin: Option<PathBuf>,
    pub radicals: Option<PathBuf>,
    pub lexicon: Option<PathBuf>,
    pub primary_index: Option<PathBuf>,
    pub primary_corpus: Option<PathBuf>,
    pub secondary_index: Option<PathBuf>,
    pub secondary_corpus: Option<PathBuf>,
    pub seed: u64,
    pub train_fraction: TrainFraction,
    pub c: f64,
    pub tolerance: f64,
    pub max_epochs: usize,
    pub set_aggregation: SetAggregation,
    pub ngd_max: f64,
    pub log_m: f64,
    pub parallelism: usize,
    pub out_dir: Option<PathBuf>,
    pub k: usize,
    pub top: usize,
    pub fraction: f64,
    pub timing: bool,
    pub stability_runs: Option<usize>,
}

fn default_parallelism() -> usize {
    std::thread::available_parallelism().map_or(1, |n| n.get())
}

impl RunConfig {
    pub fn resolve(args: &ConfigArgs) -> Result<RunConfig, Failure> {
        let file = match &args.config {
            Some(path) => {
                let text = std::fs::read_to_string(path).map_err(|e| {
                    Failure::data(format!("cannot read config {}: {e}", path.display()))
                })?;
                serde_json::from_str(&text)
                    .map_err(|e| Failure::data(format!("invalid config {}: {e}", path.display())))?
            }
            None => FileConfig::default(),
        };
        let a = args.clone();
        let cfg = RunConfig {
            pairs: a.pairs.or(file.pairs),
            zh_embeddings: a.zh_embeddings.or(file.zh_embeddings),
            en_embeddings: a.en_embeddings.or(file.en_embeddings),
            pinyin: a.pinyin.or(file.pinyin),
            radicals: a.radicals.or(file.radicals),
            lexicon: a.lexicon.or(file.lexicon),
            primary_index: a.primary_index.or(file.primary_index),
            primary_corpus: a.primary_corpus.or(file.primary_corpus),
            secondary_index: a.secondary_index.or(file.secondary_index),
            secondary_corpus: a.secondary_corpus.or(file.secondary_corpus),
            seed: a.seed.or(file.seed).unwrap_or(0),
            train_fraction: a.train_fraction.or(file.train_fraction).unwrap_or_default(),
            c: a.c.or(file.c).unwrap_or(1.0),
            tolerance: a.tolerance.or(file.tolerance).unwrap_or(1e-3),
            max_epochs: a.max_epochs.or(file.max_epochs).unwrap_or(1000),
            set_aggregation: a
                .set_aggregation
                .or(file.set_aggregation)
                .unwrap_or_default(),
            ngd_max: a.ngd_max.or(file.ngd_max).unwrap_or(DEFAULT_NGD_MAX),
            log_m: a.log_m.or(file.log_m).unwrap_or(DEFAULT_LOG_M),
            parallelism: a
                .parallelism
                .or(file.parallelism)
                .unwrap_or_else(default_parallelism),
            out_dir: a.out_dir.or(file.out_dir),
            k: a.k.or(file.k).unwrap_or(13),
            top: a.top.or(file.top).unwrap_or(10),
            fraction: a.fraction.or(file.fraction).unwrap_or(0.1),
            timing: a.timing || file.timing.unwrap_or(false),
            stability_runs: a.stability_runs.or(file.stability_runs),
        };
        cfg.validate()?;
        Ok(cfg)
    }

    fn validate(&self) -> Result<(), Failure> {
        let positive = |name: &str, v: f64| {
            if v.is_finite() && v > 0.0 {
                Ok(())
            } else {
                Err(Failure::data(format!(
                    "{name} must be a positive number, got {v}"
                )))
            }
        };
        positive("c", self.c)?;
        positive("tolerance", self.tolerance)?;
        positive("ngd_max", self.ngd_max)?;
        positive("log_m", self.log_m)?;
        if self.max_epochs == 0 {
            return Err(Failure::data("max_epochs must be at least 1"));
        }
        if self.parallelism == 0 {
            return Err(Failure::data("parallelism must be at least 1"));
        }
        if !(1..=13).contains(&self.k) {
            return Err(Failure::data(format!(
                "k must be in 1..=13, got {}",
                self.k
            )));
        }
        if self.top == 0 {
            return Err(Failure::data("top must be at least 1"));
        }
        if !(self.fraction > 0.0 && self.fraction <= 1.0) {
            return Err(Failure::data(format!(
                "fraction must be in (0, 1], got {}",
                self.fraction
            )));
        }
        if matches!(self.stability_runs, Some(n) if n < 2) {
            return Err(Failure::data("stability_runs must be at least 2"));
        }
        if self.primary_index.is_some() && self.primary_corpus.is_some() {
            return Err(Failure::usage(
                "give either primary_index or primary_corpus, not both",
            ));
        }
        if self.secondary_index.is_some() && self.secondary_corpus.is_some() {
            return Err(Failure::usage(
                "give either secondary_index or secondary_corpus, not both",
            ));
        }
        for path in [
            &self.pairs,
            &self.zh_embeddings,
            &self.en_embeddings,
            &self.pinyin,
            &self.radicals,
            &self.lexicon,
            &self.primary_index,
            &self.primary_corpus,
            &self.secondary_index,
            &self.secondary_corpus,
        ]
        .into_iter()
        .flatten()
        {
            check_exists(path)?;
        }
        Ok(())
    }

    pub fn pairs_path(&self) -> Result<&Path, Failure> {
        self.pairs.as_deref().ok_or_else(|| {
            Failure::usage("no pairs file: pass --pairs or set \"pairs\" in the config")
        })
    }
}

pub fn check_exists(path: &Path) -> Result<(), Failure> {
    if path.exists() {
        Ok(())
    } else {
        Err(Failure::data(format!("{} does not exist", path.display())))
    }
}
