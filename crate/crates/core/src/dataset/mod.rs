//! Getting connection records (or synthetic blobs) into unit-interval
//! feature vectors with class labels.

pub mod kdd;
pub mod scaler;
pub mod split;
pub mod synthetic;

use std::io::{Read, Write};

use serde::{Deserialize, Serialize};

pub use kdd::{map_attack_class, parse_kdd, ClassLabel, ConnectionRecord, FEATURES, N_FEATURES};
pub use scaler::{fit_apply_scaler, Scaler};
pub use split::{stratified_split, SplitCounts};
pub use synthetic::{generate_synthetic, SyntheticSpec};

use crate::error::{Error, Result};

/// 1-based columns of the reduced feature set.
pub const REDUCED_COLUMNS: [usize; 12] = [3, 5, 6, 12, 23, 24, 25, 28, 31, 32, 33, 35];

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum FeatureSet {
    Full,
    #[default]
    Reduced,
}

impl FeatureSet {
    /// 0-based source columns kept by this set.
    pub fn columns(self) -> Vec<usize> {
        match self {
            FeatureSet::Full => (0..N_FEATURES).collect(),
            FeatureSet::Reduced => REDUCED_COLUMNS.iter().map(|c| c - 1).collect(),
        }
    }

    pub fn header(self) -> Vec<&'static str> {
        self.columns().into_iter().map(|c| FEATURES[c].label).collect()
    }

    /// Projects 41-column rows onto this set.
    pub fn project(self, matrix: &[Vec<f64>]) -> Result<Vec<Vec<f64>>> {
        let cols = self.columns();
        matrix
            .iter()
            .map(|row| {
                if row.len() != N_FEATURES {
                    return Err(Error::Shape {
                        expected: N_FEATURES,
                        found: row.len(),
                    });
                }
                Ok(cols.iter().map(|&c| row[c]).collect())
            })
            .collect()
    }
}

/// Keeps the twelve reduced columns of 41-column rows.
pub fn select_reduced_features(matrix: &[Vec<f64>]) -> Result<Vec<Vec<f64>>> {
    FeatureSet::Reduced.project(matrix)
}

/// A labelled, scaled sample.
#[derive(Clone, Debug, PartialEq)]
pub struct Sample {
    pub features: Vec<f64>,
    pub class: ClassLabel,
}

/// Train (marker) and test samples ready for clustering.
#[derive(Clone, Debug, PartialEq)]
pub struct PreparedData {
    pub feature_set: FeatureSet,
    pub counts: SplitCounts,
    pub train: Vec<Sample>,
    pub test: Vec<Sample>,
}

/// Split, scale (fitted over train and test together) and project.
pub fn prepare(
    records: &[ConnectionRecord],
    counts: Option<SplitCounts>,
    feature_set: FeatureSet,
    seed: u64,
) -> Result<PreparedData> {
    let classes = records
        .iter()
        .map(|r| r.class())
        .collect::<Result<Vec<_>>>()?;
    let counts = counts.unwrap_or_else(|| {
        let mut freq = [0; 5];
        for c in &classes {
            freq[c.value() as usize - 1] += 1;
        }
        SplitCounts::reference(freq)
    });
    let (train_idx, test_idx) = stratified_split(&classes, &counts, seed)?;
    let fit_on: Vec<usize> = train_idx.iter().chain(&test_idx).copied().collect();
    let scaler = Scaler::fit(records, &fit_on)?;
    let cols = feature_set.columns();
    let sample = |i: usize| -> Result<Sample> {
        let row = scaler.apply(&records[i])?;
        Ok(Sample {
            features: cols.iter().map(|&c| row[c]).collect(),
            class: classes[i],
        })
    };
    Ok(PreparedData {
        feature_set,
        counts,
        train: train_idx.into_iter().map(sample).collect::<Result<_>>()?,
        test: test_idx.into_iter().map(sample).collect::<Result<_>>()?,
    })
}

/// Writes samples as CSV: one column per feature label, then the class.
pub fn write_samples(out: impl Write, header: &[&str], samples: &[Sample]) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    let io = |e: csv::Error| Error::Internal(format!("csv write failed: {e}"));
    w.write_record(header.iter().copied().chain([kdd::CLASS_LABEL])).map_err(io)?;
    for s in samples {
        let mut row: Vec<String> = s.features.iter().map(|v| v.to_string()).collect();
        row.push(s.class.value().to_string());
        w.write_record(&row).map_err(io)?;
    }
    w.flush().map_err(|e| Error::Internal(format!("csv flush failed: {e}")))?;
    Ok(())
}

/// Reads samples written by [`write_samples`]. Returns the feature header.
pub fn read_samples(input: impl Read) -> Result<(Vec<String>, Vec<Sample>)> {
    let mut r = csv::Reader::from_reader(input);
    let parse_err = |line: usize, message: String| Error::Parse { line, message };
    let header = r.headers().map_err(|e| parse_err(1, e.to_string()))?.clone();
    if header.len() < 2 || &header[header.len() - 1] != kdd::CLASS_LABEL {
        return Err(parse_err(1, format!("last column must be {}", kdd::CLASS_LABEL)));
    }
    let n = header.len() - 1;
    let mut samples = Vec::new();
    for (i, rec) in r.records().enumerate() {
        let line = i + 2;
        let rec = rec.map_err(|e| parse_err(line, e.to_string()))?;
        if rec.len() != n + 1 {
            return Err(parse_err(line, format!("expected {} fields, found {}", n + 1, rec.len())));
        }
        let features = rec
            .iter()
            .take(n)
            .map(|v| {
                v.trim()
                    .parse::<f64>()
                    .ok()
                    .filter(|x| (0.0..=1.0).contains(x))
                    .ok_or_else(|| parse_err(line, format!("{v:?} is not a value in [0, 1]")))
            })
            .collect::<Result<Vec<_>>>()?;
        let class = rec[n]
            .trim()
            .parse::<u8>()
            .ok()
            .and_then(ClassLabel::from_value)
            .ok_or_else(|| parse_err(line, format!("bad class {:?}", &rec[n])))?;
        samples.push(Sample { features, class });
    }
    Ok((header.iter().take(n).map(str::to_string).collect(), samples))
}
