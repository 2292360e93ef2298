//! Feature matrix on disk: `term_a  term_b  label  <feature ids...>`, one row
//! per pair, `NA` for missing values.

use std::io::{BufRead, Write};

use crate::error::{Error, Result};
use crate::model::features::FeatureMatrix;
use crate::types::{FeatureId, FeatureMask, FeatureVector, Label, LabeledPair};

const MISSING: &str = "NA";

pub fn write_feature_table<W: Write>(
    pairs: &[LabeledPair],
    matrix: &FeatureMatrix,
    mut out: W,
) -> Result<()> {
    if pairs.len() != matrix.len() {
        return Err(Error::DimensionMismatch {
            expected: pairs.len(),
            found: matrix.len(),
        });
    }
    let ids: Vec<FeatureId> = matrix.mask.ids().collect();
    write!(out, "term_a\tterm_b\tlabel")?;
    for id in &ids {
        write!(out, "\t{id}")?;
    }
    writeln!(out)?;
    for (p, row) in pairs.iter().zip(&matrix.rows) {
        write!(
            out,
            "{}\t{}\t{}",
            p.a.surface(),
            p.b.surface(),
            u8::from(p.label.is_positive())
        )?;
        for id in &ids {
            match row[id.index()] {
                Some(v) => write!(out, "\t{v}")?,
                None => write!(out, "\t{MISSING}")?,
            }
        }
        writeln!(out)?;
    }
    Ok(())
}

#[derive(Debug, Clone, PartialEq)]
pub struct FeatureTable {
    pub mask: FeatureMask,
    pub pairs: Vec<(String, String)>,
    pub labels: Vec<Label>,
    pub vectors: Vec<FeatureVector>,
}

pub fn read_feature_table<R: BufRead>(source: R) -> Result<FeatureTable> {
    let mut lines = source.lines();
    let header = lines
        .next()
        .ok_or_else(|| Error::parse(1, "empty feature table"))??;
    let cols: Vec<&str> = header.trim_end_matches('\r').split('\t').collect();
    if cols.len() < 4 || cols[..3] != ["term_a", "term_b", "label"] {
        return Err(Error::parse(
            1,
            "header must be term_a, term_b, label, then feature ids",
        ));
    }
    let ids = cols[3..]
        .iter()
        .map(|c| {
            c.parse::<u8>()
                .map_err(|_| Error::parse(1, format!("bad feature id {c:?}")))
                .and_then(|n| FeatureId::new(n).map_err(|e| Error::parse(1, e.to_string())))
        })
        .collect::<Result<Vec<_>>>()?;
    let mask =
        FeatureMask::from_ids(ids.iter().copied()).map_err(|e| Error::parse(1, e.to_string()))?;
    if mask.len() != ids.len() || !ids.windows(2).all(|w| w[0] < w[1]) {
        return Err(Error::parse(1, "feature ids must be unique and ascending"));
    }

    let mut table = FeatureTable {
        mask,
        pairs: Vec::new(),
        labels: Vec::new(),
        vectors: Vec::new(),
    };
    for (i, line) in lines.enumerate() {
        let n = i + 2;
        let line = line?;
        let line = line.trim_end_matches('\r');
        if line.trim().is_empty() {
            continue;
        }
        let cols: Vec<&str> = line.split('\t').collect();
        if cols.len() != 3 + ids.len() {
            return Err(Error::parse(
                n,
                format!("expected {} columns, found {}", 3 + ids.len(), cols.len()),
            ));
        }
        let label = match cols[2] {
            "1" => Label::Positive,
            "0" => Label::Negative,
            other => {
                return Err(Error::parse(
                    n,
                    format!("label must be 0 or 1, found {other:?}"),
                ))
            }
        };
        let mut v = FeatureVector::new();
        for (id, raw) in ids.iter().zip(&cols[3..]) {
            let value = if *raw == MISSING {
                None
            } else {
                let x: f64 = raw
                    .parse()
                    .map_err(|_| Error::parse(n, format!("bad value {raw:?} for feature {id}")))?;
                if !x.is_finite() {
                    return Err(Error::parse(
                        n,
                        format!("non-finite value for feature {id}"),
                    ));
                }
                Some(x)
            };
            v.set(*id, value);
        }
        table.pairs.push((cols[0].to_string(), cols[1].to_string()));
        table.labels.push(label);
        table.vectors.push(v);
    }
    Ok(table)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::features::ExtractionDiagnostics;
    use crate::types::{Term, FEATURE_COUNT};

    #[test]
    fn round_trip_with_missing() {
        let mask: FeatureMask = "1,4,13".parse().unwrap();
        let mut row = [None; FEATURE_COUNT];
        row[0] = Some(0.1 + 0.2);
        row[12] = Some(10.0);
        let matrix = FeatureMatrix {
            mask,
            rows: vec![row],
            diagnostics: ExtractionDiagnostics::default(),
        };
        let pairs = vec![LabeledPair::new(
            Term::untranslated("肝癌").unwrap(),
            Term::untranslated("肝肿瘤").unwrap(),
            Label::Positive,
        )];
        let mut buf = Vec::new();
        write_feature_table(&pairs, &matrix, &mut buf).unwrap();
        let t = read_feature_table(buf.as_slice()).unwrap();
        assert_eq!(t.mask, mask);
        assert_eq!(t.labels, [Label::Positive]);
        assert_eq!(t.vectors[0], FeatureVector::from_row(&row, mask));
        assert_eq!(t.vectors[0].get(FeatureId::ZH_COSINE), Some(0.1 + 0.2));
    }

    #[test]
    fn malformed_tables_rejected() {
        for bad in [
            "",
            "a\tb\tc\t1\n",
            "term_a\tterm_b\tlabel\t4\t1\n",
            "term_a\tterm_b\tlabel\t1\nx\ty\t2\t0.5\n",
            "term_a\tterm_b\tlabel\t1\nx\ty\t1\tabc\n",
            "term_a\tterm_b\tlabel\t1\nx\ty\t1\n",
        ] {
            assert!(read_feature_table(bad.as_bytes()).is_err(), "{bad:?}");
        }
    }
}
