use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::features::FeatureRow;
use crate::types::{FeatureId, FeatureVector, FEATURE_COUNT};

/// Per-feature standardization fitted on training rows. The mean doubles as
/// the imputation value, so a missing entry standardizes to 0.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ColumnStats {
    pub id: u8,
    pub mean: f64,
    /// Population standard deviation of the non-missing values.
    pub std: f64,
    pub constant: bool,
}

impl ColumnStats {
    fn fit(id: FeatureId, values: impl Iterator<Item = f64>) -> Self {
        let mut n = 0usize;
        let mut sum = 0.0;
        let mut buf = Vec::new();
        for v in values {
            n += 1;
            sum += v;
            buf.push(v);
        }
        if n == 0 {
            return ColumnStats {
                id: id.get(),
                mean: 0.0,
                std: 0.0,
                constant: true,
            };
        }
        let mean = sum / n as f64;
        let var = buf.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / n as f64;
        let std = var.sqrt();
        // Identical inputs can leave rounding residue in the variance.
        let constant = std <= 1e-12 * mean.abs().max(1.0);
        ColumnStats {
            id: id.get(),
            mean,
            std,
            constant,
        }
    }

    #[inline]
    pub fn apply(&self, value: Option<f64>) -> f64 {
        match value {
            None => 0.0,
            Some(_) if self.constant => 0.0,
            Some(v) => (v - self.mean) / self.std,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Scaler {
    columns: Vec<ColumnStats>,
}

impl Scaler {
    /// Fits on vectors; features are those present (or missing) in any row.
    pub fn fit(rows: &[FeatureVector]) -> Result<Scaler> {
        if rows.len() < 2 {
            return Err(Error::invalid("scaler needs at least two rows"));
        }
        let ids: std::collections::BTreeSet<FeatureId> = rows
            .iter()
            .flat_map(|r| r.values().keys().chain(r.missing().iter()).copied())
            .collect();
        let columns = ids
            .into_iter()
            .map(|id| ColumnStats::fit(id, rows.iter().filter_map(|r| r.get(id))))
            .collect();
        Ok(Scaler { columns })
    }

    /// Fits every slot of full feature rows.
    pub fn fit_rows(rows: &[FeatureRow]) -> Result<Scaler> {
        if rows.len() < 2 {
            return Err(Error::invalid("scaler needs at least two rows"));
        }
        let columns = FeatureId::all()
            .map(|id| ColumnStats::fit(id, rows.iter().filter_map(|r| r[id.index()])))
            .collect();
        Ok(Scaler { columns })
    }

    pub fn column(&self, id: FeatureId) -> Option<&ColumnStats> {
        self.columns.iter().find(|c| c.id == id.get())
    }

    pub fn columns(&self) -> &[ColumnStats] {
        &self.columns
    }

    /// Restricts to the given features (ascending id order).
    pub fn restrict(&self, ids: impl Iterator<Item = FeatureId>) -> Result<Scaler> {
        let columns = ids
            .map(|id| {
                self.column(id).cloned().ok_or_else(|| {
                    Error::invalid(format!("scaler has no statistics for feature {id}"))
                })
            })
            .collect::<Result<_>>()?;
        Ok(Scaler { columns })
    }

    /// Standardized values in the scaler's column order.
    pub fn transform(&self, v: &FeatureVector) -> Vec<f64> {
        self.columns
            .iter()
            .map(|c| {
                let id = FeatureId::new(c.id).expect("valid id");
                c.apply(v.get(id))
            })
            .collect()
    }

    /// Standardizes every slot of a full row; slots without statistics give 0.
    pub fn transform_row(&self, row: &FeatureRow) -> [f64; FEATURE_COUNT] {
        let mut out = [0.0; FEATURE_COUNT];
        for c in &self.columns {
            let i = c.id as usize - 1;
            out[i] = c.apply(row[i]);
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn vec_of(values: &[Option<f64>]) -> Vec<FeatureVector> {
        values
            .iter()
            .map(|v| {
                let mut fv = FeatureVector::new();
                fv.set(FeatureId::ZH_COSINE, *v);
                fv
            })
            .collect()
    }

    #[test]
    fn two_values_standardize_to_plus_minus_one() {
        let rows = vec_of(&[Some(1.0), Some(3.0)]);
        let s = Scaler::fit(&rows).unwrap();
        let c = s.column(FeatureId::ZH_COSINE).unwrap();
        assert_eq!((c.mean, c.std, c.constant), (2.0, 1.0, false));
        assert_eq!(s.transform(&rows[0]), [-1.0]);
        assert_eq!(s.transform(&rows[1]), [1.0]);
    }

    #[test]
    fn constant_and_missing_map_to_zero() {
        let rows = vec_of(&[Some(0.1), Some(0.1), Some(0.1)]);
        let s = Scaler::fit(&rows).unwrap();
        assert!(s.column(FeatureId::ZH_COSINE).unwrap().constant);
        assert_eq!(s.transform(&rows[0]), [0.0]);

        let rows = vec_of(&[Some(1.0), Some(3.0), None]);
        let s = Scaler::fit(&rows).unwrap();
        assert_eq!(s.transform(&rows[2]), [0.0]);

        let rows = vec_of(&[None, None]);
        let s = Scaler::fit(&rows).unwrap();
        let c = s.column(FeatureId::ZH_COSINE).unwrap();
        assert_eq!((c.mean, c.constant), (0.0, true));
    }

    #[test]
    fn needs_two_rows() {
        assert!(Scaler::fit(&vec_of(&[Some(1.0)])).is_err());
        assert!(Scaler::fit_rows(&[[None; FEATURE_COUNT]]).is_err());
    }

    proptest! {
        #[test]
        fn standardized_columns_have_zero_mean_unit_std(values in prop::collection::vec(-50.0f64..50.0, 2..80)) {
            let rows: Vec<FeatureRow> = values.iter().map(|&v| {
                let mut r = [None; FEATURE_COUNT];
                r[4] = Some(v);
                r[7] = Some(v * 0.5 + 3.0);
                r
            }).collect();
            let s = Scaler::fit_rows(&rows).unwrap();
            for col in [4usize, 7] {
                if s.columns()[col].constant { continue; }
                let z: Vec<f64> = rows.iter().map(|r| s.transform_row(r)[col]).collect();
                let n = z.len() as f64;
                let mean = z.iter().sum::<f64>() / n;
                let std = (z.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / n).sqrt();
                prop_assert!(mean.abs() < 1e-9);
                prop_assert!((std - 1.0).abs() < 1e-9);
            }
        }
    }
}
