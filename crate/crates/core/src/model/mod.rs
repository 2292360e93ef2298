//! Feature assembly, standardization and the linear classifier.

mod features;
mod scaler;
pub mod svm;
mod table;

use std::io::{Read, Write};

use serde::{Deserialize, Serialize};

pub use features::{
    extract_features, extract_matrix, extract_row, ExtractionDiagnostics, FeatureMatrix,
    FeatureRow, ResourceBundle, DEFAULT_NGD_MAX,
};
pub use scaler::{ColumnStats, Scaler};
pub use svm::{DenseMatrix, LinearSvm, TrainConfig, TrainReport};
pub use table::{read_feature_table, write_feature_table, FeatureTable};

use crate::error::{Error, Result};
use crate::types::{FeatureMask, FeatureVector, Label};

const MODEL_FORMAT: &str = "medsyn-linear-svm";
const MODEL_VERSION: u32 = 1;

/// A trained classifier together with the scaler fitted on its training rows.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Model {
    pub mask: FeatureMask,
    /// One weight per masked feature, ascending feature id.
    pub weights: Vec<f64>,
    pub bias: f64,
    pub scaler: Scaler,
    pub training: TrainConfig,
}

#[derive(Serialize, Deserialize)]
struct ModelFile {
    format: String,
    version: u32,
    #[serde(flatten)]
    model: Model,
}

/// Decision value 0 counts as positive.
pub fn label_for(decision: f64) -> Label {
    Label::from_bool(decision >= 0.0)
}

impl Model {
    /// Fits the scaler on `rows`, standardizes them and trains.
    pub fn fit(
        rows: &[FeatureVector],
        labels: &[Label],
        mask: FeatureMask,
        cfg: &TrainConfig,
    ) -> Result<(Model, TrainReport)> {
        for r in rows {
            check_mask(mask, r)?;
        }
        let scaler = Scaler::fit(rows)?.restrict(mask.ids())?;
        let z: Vec<Vec<f64>> = rows.iter().map(|r| scaler.transform(r)).collect();
        let x = DenseMatrix::from_rows(&z)?;
        let (svm, report) = svm::train(&x, labels, cfg)?;
        Ok((
            Model {
                mask,
                weights: svm.weights,
                bias: svm.bias,
                scaler,
                training: *cfg,
            },
            report,
        ))
    }

    pub fn decision_value(&self, v: &FeatureVector) -> Result<f64> {
        check_mask(self.mask, v)?;
        let z = self.scaler.transform(v);
        Ok(self.weights.iter().zip(&z).map(|(w, x)| w * x).sum::<f64>() + self.bias)
    }

    pub fn predict(&self, v: &FeatureVector) -> Result<Label> {
        self.decision_value(v).map(label_for)
    }

    pub fn save<W: Write>(&self, out: W) -> Result<()> {
        let file = ModelFile {
            format: MODEL_FORMAT.to_string(),
            version: MODEL_VERSION,
            model: self.clone(),
        };
        serde_json::to_writer_pretty(out, &file)?;
        Ok(())
    }

    pub fn load<R: Read>(source: R) -> Result<Model> {
        let file: ModelFile = serde_json::from_reader(source)?;
        if file.format != MODEL_FORMAT || file.version != MODEL_VERSION {
            return Err(Error::invalid(format!(
                "unsupported model file {} v{}",
                file.format, file.version
            )));
        }
        let m = file.model;
        let scaler_ids: Vec<u8> = m.scaler.columns().iter().map(|c| c.id).collect();
        let mask_ids: Vec<u8> = m.mask.ids().map(|id| id.get()).collect();
        if m.weights.len() != m.mask.len() || scaler_ids != mask_ids {
            return Err(Error::invalid(
                "model weights or scaler do not match its mask",
            ));
        }
        Ok(m)
    }
}

fn check_mask(expected: FeatureMask, v: &FeatureVector) -> Result<()> {
    match v.mask() {
        Some(found) if found == expected => Ok(()),
        Some(found) => Err(Error::MaskMismatch { expected, found }),
        None => Err(Error::invalid("feature vector is empty")),
    }
}
