//! Min-max scaling of connection records into `[0, 1]`.
//!
//! Discrete columns are first coded by the lexicographic rank of their
//! value among the values seen while fitting, then scaled like any other
//! column. Constant columns scale to 0. Values outside the fitted range are
//! clamped.

use crate::dataset::kdd::{ConnectionRecord, FeatureKind, FEATURES, N_FEATURES};
use crate::error::{Error, Result};

#[derive(Clone, Debug, PartialEq)]
pub enum ColumnScale {
    Continuous { min: f64, max: f64 },
    /// Sorted distinct values; a value's code is its index.
    Discrete { values: Vec<String> },
}

impl ColumnScale {
    fn scale(&self, column: usize, raw: &str, line: usize) -> Result<f64> {
        match self {
            ColumnScale::Continuous { min, max } => {
                let v = parse_number(raw, column, line)?;
                Ok(min_max(v, *min, *max))
            }
            ColumnScale::Discrete { values } => {
                let code = values.binary_search_by(|v| v.as_str().cmp(raw)).map_err(|_| {
                    Error::Encoding {
                        feature: FEATURES[column].name.to_string(),
                        value: raw.to_string(),
                    }
                })?;
                Ok(min_max(code as f64, 0.0, (values.len() - 1) as f64))
            }
        }
    }
}

fn min_max(v: f64, min: f64, max: f64) -> f64 {
    if max > min {
        ((v - min) / (max - min)).clamp(0.0, 1.0)
    } else {
        0.0
    }
}

fn parse_number(raw: &str, column: usize, line: usize) -> Result<f64> {
    raw.parse::<f64>()
        .ok()
        .filter(|v| v.is_finite())
        .ok_or_else(|| Error::Parse {
            line,
            message: format!("{} is not numeric: {raw:?}", FEATURES[column].name),
        })
}

/// Fitted per-column scaling. Immutable once built.
#[derive(Clone, Debug, PartialEq)]
pub struct Scaler {
    columns: Vec<ColumnScale>,
}

impl Scaler {
    /// Fits on the records at `fit_on` (indices into `records`).
    pub fn fit(records: &[ConnectionRecord], fit_on: &[usize]) -> Result<Scaler> {
        if fit_on.is_empty() {
            return Err(Error::Validation("cannot fit a scaler on zero records".into()));
        }
        let rows: Vec<&ConnectionRecord> = fit_on
            .iter()
            .map(|&i| {
                records
                    .get(i)
                    .ok_or_else(|| Error::Validation(format!("fit index {i} out of range")))
            })
            .collect::<Result<_>>()?;
        let columns = FEATURES
            .iter()
            .enumerate()
            .map(|(col, info)| match info.kind {
                FeatureKind::Continuous => {
                    let mut min = f64::INFINITY;
                    let mut max = f64::NEG_INFINITY;
                    for r in &rows {
                        let v = parse_number(&r.fields[col], col, r.line)?;
                        min = min.min(v);
                        max = max.max(v);
                    }
                    Ok(ColumnScale::Continuous { min, max })
                }
                FeatureKind::Discrete => {
                    let mut values: Vec<String> =
                        rows.iter().map(|r| r.fields[col].clone()).collect();
                    values.sort_unstable();
                    values.dedup();
                    Ok(ColumnScale::Discrete { values })
                }
            })
            .collect::<Result<_>>()?;
        Ok(Scaler { columns })
    }

    pub fn columns(&self) -> &[ColumnScale] {
        &self.columns
    }

    pub fn apply(&self, record: &ConnectionRecord) -> Result<Vec<f64>> {
        if record.fields.len() != N_FEATURES {
            return Err(Error::Shape {
                expected: N_FEATURES,
                found: record.fields.len(),
            });
        }
        self.columns
            .iter()
            .enumerate()
            .map(|(col, scale)| scale.scale(col, &record.fields[col], record.line))
            .collect()
    }

    /// Inverse of the scaling for a continuous column.
    pub fn descale(&self, column: usize, scaled: f64) -> Option<f64> {
        match self.columns.get(column)? {
            ColumnScale::Continuous { min, max } => Some(min + scaled * (max - min)),
            ColumnScale::Discrete { .. } => None,
        }
    }
}

/// Fits on `fit_on` and scales every record.
pub fn fit_apply_scaler(
    records: &[ConnectionRecord],
    fit_on: &[usize],
) -> Result<(Vec<Vec<f64>>, Scaler)> {
    let scaler = Scaler::fit(records, fit_on)?;
    let matrix = records
        .iter()
        .map(|r| scaler.apply(r))
        .collect::<Result<Vec<_>>>()?;
    Ok((matrix, scaler))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn record(line: usize, duration: f64, protocol: &str) -> ConnectionRecord {
        let mut fields = vec!["0".to_string(); N_FEATURES];
        fields[0] = duration.to_string();
        fields[1] = protocol.to_string();
        fields[2] = "http".into();
        fields[3] = "SF".into();
        ConnectionRecord {
            line,
            fields,
            label: "normal".into(),
        }
    }

    #[test]
    fn protocol_codes_are_lexicographic() {
        let recs = vec![record(1, 0.0, "udp"), record(2, 5.0, "icmp"), record(3, 10.0, "tcp")];
        let (m, _) = fit_apply_scaler(&recs, &[0, 1, 2]).unwrap();
        assert_eq!(m[1][1], 0.0);
        assert_eq!(m[2][1], 0.5);
        assert_eq!(m[0][1], 1.0);
        assert_eq!([m[0][0], m[1][0], m[2][0]], [0.0, 0.5, 1.0]);
        // constant columns (service, flag, the zero columns) are all 0
        assert!(m.iter().all(|r| r[2] == 0.0 && r[3] == 0.0 && r[40] == 0.0));
    }

    #[test]
    fn clamps_outside_the_fitted_range() {
        let recs = vec![record(1, 2.0, "tcp"), record(2, 4.0, "tcp"), record(3, 9.0, "tcp")];
        let (m, _) = fit_apply_scaler(&recs, &[0, 1]).unwrap();
        assert_eq!(m[2][0], 1.0);
    }

    #[test]
    fn unseen_symbols_are_rejected() {
        let recs = vec![record(1, 2.0, "tcp"), record(2, 4.0, "udp")];
        let scaler = Scaler::fit(&recs, &[0]).unwrap();
        assert!(matches!(scaler.apply(&recs[1]), Err(Error::Encoding { .. })));
        assert!(Scaler::fit(&recs, &[]).is_err());
    }

    #[test]
    fn non_numeric_values_fail_to_parse() {
        let mut bad = record(7, 1.0, "tcp");
        bad.fields[4] = "lots".into();
        assert!(matches!(Scaler::fit(&[bad], &[0]), Err(Error::Parse { line: 7, .. })));
    }

    proptest! {
        #[test]
        fn scaled_values_round_trip(vals in proptest::collection::vec(-1e6f64..1e6, 2..40)) {
            let recs: Vec<_> = vals.iter().enumerate().map(|(i, &v)| record(i + 1, v, "tcp")).collect();
            let all: Vec<usize> = (0..recs.len()).collect();
            let (m, scaler) = fit_apply_scaler(&recs, &all).unwrap();
            for (row, &v) in m.iter().zip(&vals) {
                prop_assert!(row.iter().all(|x| (0.0..=1.0).contains(x)));
                let back = scaler.descale(0, row[0]).unwrap();
                let constant = vals.iter().all(|&w| w == vals[0]);
                if !constant {
                    prop_assert!((back - v).abs() <= 1e-9 * v.abs().max(1.0));
                }
            }
        }
    }
}
