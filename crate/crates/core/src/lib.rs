//! Synonym identification for bilingual (Chinese/English) medical terms.
//!
//! Thirteen pairwise similarity features feed a linear SVM; the [`sweep`]
//! module trains one model per feature subset and ranks the subsets by F1.

pub mod bundled;
pub mod embed_feats;
pub mod error;
pub mod metrics;
pub mod model;
pub mod resources;
pub mod string_feats;
pub mod sweep;
pub mod synth;
pub mod types;
pub mod web_dist;
pub mod zh_feats;

pub use error::{Error, Result};
pub use metrics::{compute_metrics, confusion, ConfusionCounts, Metrics};
pub use model::{Model, ResourceBundle};
pub use types::{FeatureId, FeatureMask, FeatureVector, Label, LabeledPair, Term, FEATURE_COUNT};
