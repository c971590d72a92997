//! Classification of test items by their final grid positions.
//!
//! After clustering, every test item takes the majority label of its `k`
//! nearest markers under the toroidal metric. Distances are compared as
//! exact integer squares, so equal distances really are equal and ties
//! resolve by marker id. Vote ties go to the tied class owning the nearest
//! marker, then to the lowest class label.

use rayon::prelude::*;
use serde::{Serialize, Serializer};

use crate::engine::Placement;
use crate::error::{Error, Result};
use crate::habitat::{Dims, GridCoord, ItemId};

/// Number of traffic classes in reports: Normal, Probe, DoS, U2R, R2L.
pub const N_CLASSES: usize = 5;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Marker {
    pub id: ItemId,
    pub at: GridCoord,
    pub class: u8,
}

/// Non-empty set of labelled reference positions.
#[derive(Clone, Debug, PartialEq)]
pub struct MarkerSet {
    markers: Vec<Marker>,
}

impl MarkerSet {
    pub fn new(markers: Vec<Marker>) -> Result<Self> {
        if markers.is_empty() {
            return Err(Error::Validation("marker set is empty".into()));
        }
        Ok(MarkerSet { markers })
    }

    pub fn as_slice(&self) -> &[Marker] {
        &self.markers
    }

    pub fn len(&self) -> usize {
        self.markers.len()
    }

    pub fn is_empty(&self) -> bool {
        self.markers.is_empty()
    }
}

/// Predicts a label for every test position.
pub fn knn_classify(
    tests: &[GridCoord],
    markers: &MarkerSet,
    k: usize,
    dims: Dims,
) -> Result<Vec<u8>> {
    if k.is_multiple_of(2) {
        return Err(Error::Validation(format!("k must be odd, got {k}")));
    }
    if k > markers.len() {
        return Err(Error::Validation(format!(
            "k = {k} exceeds the {} available markers",
            markers.len()
        )));
    }
    if let Some(bad) = tests
        .iter()
        .chain(markers.as_slice().iter().map(|m| &m.at))
        .find(|c| !dims.contains(**c))
    {
        return Err(Error::Validation(format!(
            "position ({}, {}) lies outside the {}x{} grid",
            bad.x, bad.y, dims.width, dims.height
        )));
    }
    Ok(tests
        .par_iter()
        .map(|&t| classify_one(t, markers.as_slice(), k, dims))
        .collect())
}

fn classify_one(test: GridCoord, markers: &[Marker], k: usize, dims: Dims) -> u8 {
    let mut ranked: Vec<(u64, ItemId, u8)> = markers
        .iter()
        .map(|m| (dims.distance_sq(test, m.at), m.id, m.class))
        .collect();
    if k < ranked.len() {
        ranked.select_nth_unstable(k - 1);
        ranked.truncate(k);
    }
    ranked.sort_unstable();
    majority(&ranked)
}

/// Majority label among `(distance², id, class)` neighbors sorted nearest
/// first.
pub(crate) fn majority(neighbors: &[(u64, ItemId, u8)]) -> u8 {
    // (class, votes, nearest distance)
    let mut tally: Vec<(u8, usize, u64)> = Vec::with_capacity(neighbors.len());
    for &(d, _, class) in neighbors {
        match tally.iter_mut().find(|e| e.0 == class) {
            Some(e) => {
                e.1 += 1;
                e.2 = e.2.min(d);
            }
            None => tally.push((class, 1, d)),
        }
    }
    tally
        .into_iter()
        .min_by(|a, b| b.1.cmp(&a.1).then(a.2.cmp(&b.2)).then(a.0.cmp(&b.0)))
        .map(|e| e.0)
        .expect("at least one neighbor")
}

/// Confusion counts and per-class recall over labels `1..=5`.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct EvaluationReport {
    /// Rows are true classes, columns predicted classes.
    pub confusion: [[u64; N_CLASSES]; N_CLASSES],
    /// Diagonal over row sum, as a percentage; absent for empty rows.
    #[serde(serialize_with = "percent_array")]
    pub per_class_accuracy: [Option<f64>; N_CLASSES],
    #[serde(serialize_with = "percent")]
    pub overall_accuracy: f64,
    pub n_test: u64,
}

fn round_pct(fraction: f64) -> f64 {
    (fraction * 10_000.0).round() / 100.0
}

fn percent<S: Serializer>(v: &f64, s: S) -> std::result::Result<S::Ok, S::Error> {
    s.serialize_f64(round_pct(*v))
}

fn percent_array<S: Serializer>(
    v: &[Option<f64>; N_CLASSES],
    s: S,
) -> std::result::Result<S::Ok, S::Error> {
    let rounded: Vec<Option<f64>> = v.iter().map(|a| a.map(round_pct)).collect();
    rounded.serialize(s)
}

impl EvaluationReport {
    pub fn from_confusion(confusion: [[u64; N_CLASSES]; N_CLASSES]) -> Self {
        let mut per_class_accuracy = [None; N_CLASSES];
        let mut correct = 0;
        let mut n_test = 0;
        for (c, row) in confusion.iter().enumerate() {
            let total: u64 = row.iter().sum();
            if total > 0 {
                per_class_accuracy[c] = Some(row[c] as f64 / total as f64);
            }
            correct += row[c];
            n_test += total;
        }
        let overall_accuracy = if n_test == 0 {
            0.0
        } else {
            correct as f64 / n_test as f64
        };
        EvaluationReport {
            confusion,
            per_class_accuracy,
            overall_accuracy,
            n_test,
        }
    }

    /// Accuracy of class `label` (1-based), if any test item had it.
    pub fn accuracy(&self, label: u8) -> Option<f64> {
        self.per_class_accuracy
            .get((label as usize).wrapping_sub(1))
            .copied()
            .flatten()
    }

    /// Sums confusion matrices; accuracies are recomputed from the total.
    pub fn aggregate<'a>(reports: impl IntoIterator<Item = &'a EvaluationReport>) -> Self {
        let mut confusion = [[0; N_CLASSES]; N_CLASSES];
        for r in reports {
            for (row, add) in confusion.iter_mut().zip(&r.confusion) {
                for (cell, a) in row.iter_mut().zip(add) {
                    *cell += a;
                }
            }
        }
        EvaluationReport::from_confusion(confusion)
    }
}

pub fn evaluate(predictions: &[u8], truths: &[u8]) -> Result<EvaluationReport> {
    if predictions.len() != truths.len() {
        return Err(Error::Validation(format!(
            "{} predictions for {} truths",
            predictions.len(),
            truths.len()
        )));
    }
    let mut confusion = [[0; N_CLASSES]; N_CLASSES];
    for (&p, &t) in predictions.iter().zip(truths) {
        for label in [p, t] {
            if !(1..=N_CLASSES as u8).contains(&label) {
                return Err(Error::Validation(format!("label {label} outside 1..=5")));
            }
        }
        confusion[t as usize - 1][p as usize - 1] += 1;
    }
    Ok(EvaluationReport::from_confusion(confusion))
}

/// Mixing of classes in space: 0 when every patch is pure, 1 when every
/// patch is an even mix of all classes.
///
/// The grid is cut into `patch_side`-square patches starting at the origin
/// (the last row and column of patches are truncated when the side does not
/// divide the grid). Each occupied patch contributes the Shannon entropy of
/// its class frequencies weighted by its item count; the mean is divided by
/// `log2` of the number of distinct classes present. Carried and unlabelled
/// items are ignored.
pub fn spatial_entropy(placements: &[Placement], dims: Dims, patch_side: u32) -> Result<f64> {
    if patch_side == 0 {
        return Err(Error::Config("patch side must be at least 1".into()));
    }
    let located: Vec<(GridCoord, u8)> = placements
        .iter()
        .filter_map(|p| Some((p.at?, p.true_class?)))
        .collect();
    let mut classes: Vec<u8> = located.iter().map(|&(_, c)| c).collect();
    classes.sort_unstable();
    classes.dedup();
    if classes.len() < 2 {
        return Ok(0.0);
    }
    let cols = dims.width.div_ceil(patch_side) as usize;
    let rows = dims.height.div_ceil(patch_side) as usize;
    let k = classes.len();
    let mut counts = vec![0u32; cols * rows * k];
    for &(at, class) in &located {
        let patch = (at.y / patch_side) as usize * cols + (at.x / patch_side) as usize;
        let ci = classes.binary_search(&class).expect("class was collected");
        counts[patch * k + ci] += 1;
    }
    let mut weighted = 0.0;
    for patch in counts.chunks_exact(k) {
        let n: u32 = patch.iter().sum();
        if n == 0 {
            continue;
        }
        let h: f64 = patch
            .iter()
            .filter(|&&c| c > 0)
            .map(|&c| {
                let p = c as f64 / n as f64;
                -p * p.log2()
            })
            .sum();
        weighted += n as f64 * h;
    }
    Ok(weighted / located.len() as f64 / (k as f64).log2())
}
