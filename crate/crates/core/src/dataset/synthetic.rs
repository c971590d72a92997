//! Gaussian blobs in the unit hypercube, for clustering sanity runs.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::engine::{ItemData, Role};
use crate::error::{Error, Result};

const LOW: f64 = 0.15;
const HIGH: f64 = 0.85;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SyntheticSpec {
    pub classes: usize,
    pub per_class: usize,
    pub dims: usize,
    /// Required minimum Euclidean distance between class means.
    pub separation: f64,
    /// Per-feature standard deviation around each mean.
    pub spread: f64,
    /// Share of each class emitted as markers; the rest are test items.
    pub marker_fraction: f64,
}

impl Default for SyntheticSpec {
    fn default() -> Self {
        SyntheticSpec {
            classes: 4,
            per_class: 200,
            dims: 2,
            separation: 0.5,
            spread: 0.08,
            marker_fraction: 0.5,
        }
    }
}

/// Class means on a regular lattice over `[0.15, 0.85]^dims`.
///
/// When the classes fit on the hypercube corners they are visited in
/// reflected Gray-code order, so in two dimensions four classes sit at
/// (lo, lo), (hi, lo), (hi, hi), (lo, hi). Otherwise the lattice gets as
/// many levels per axis as needed and is enumerated in index order.
pub fn class_means(classes: usize, dims: usize) -> Vec<Vec<f64>> {
    let mut levels = 2usize;
    while levels.checked_pow(dims as u32).is_some_and(|n| n < classes) {
        levels += 1;
    }
    let step = (HIGH - LOW) / (levels - 1) as f64;
    (0..classes)
        .map(|c| {
            let mut code = if levels == 2 { c ^ (c >> 1) } else { c };
            (0..dims)
                .map(|_| {
                    let level = code % levels;
                    code /= levels;
                    LOW + step * level as f64
                })
                .collect()
        })
        .collect()
}

fn min_pairwise(means: &[Vec<f64>]) -> f64 {
    let mut best = f64::INFINITY;
    for (i, a) in means.iter().enumerate() {
        for b in &means[i + 1..] {
            let d = a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum::<f64>().sqrt();
            best = best.min(d);
        }
    }
    best
}

/// Items grouped by class (class 1 first); within a class the first
/// `round(marker_fraction · per_class)` items are markers.
pub fn generate_synthetic(spec: &SyntheticSpec, seed: u64) -> Result<Vec<ItemData>> {
    if spec.classes < 2 || spec.per_class == 0 || spec.dims == 0 {
        return Err(Error::Config(
            "synthetic data needs at least 2 classes, 1 item per class and 1 feature".into(),
        ));
    }
    if spec.classes > u8::MAX as usize {
        return Err(Error::Config(format!("too many classes: {}", spec.classes)));
    }
    if !(spec.spread >= 0.0 && spec.spread.is_finite()) {
        return Err(Error::Config(format!("spread must be nonnegative, got {}", spec.spread)));
    }
    if !(0.0..=1.0).contains(&spec.marker_fraction) {
        return Err(Error::Config(format!(
            "marker fraction must lie in [0, 1], got {}",
            spec.marker_fraction
        )));
    }
    let means = class_means(spec.classes, spec.dims);
    let gap = min_pairwise(&means);
    if gap < spec.separation {
        return Err(Error::Config(format!(
            "{} classes in {} dimensions are at most {gap:.3} apart, below the requested {}",
            spec.classes, spec.dims, spec.separation
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let noise = Normal::new(0.0, spec.spread).map_err(|e| Error::Config(e.to_string()))?;
    let n_markers = (spec.marker_fraction * spec.per_class as f64).round() as usize;
    let mut items = Vec::with_capacity(spec.classes * spec.per_class);
    for (c, mean) in means.iter().enumerate() {
        for k in 0..spec.per_class {
            let features = mean
                .iter()
                .map(|&m| (m + noise.sample(&mut rng)).clamp(0.0, 1.0))
                .collect();
            items.push(ItemData {
                features,
                role: if k < n_markers { Role::Marker } else { Role::Test },
                true_class: Some(c as u8 + 1),
            });
        }
    }
    Ok(items)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kernel::normalized_distance;

    #[test]
    fn default_layout() {
        let items = generate_synthetic(&SyntheticSpec::default(), 1).unwrap();
        assert_eq!(items.len(), 800);
        let mut classes: Vec<_> = items.iter().map(|i| i.true_class.unwrap()).collect();
        classes.dedup();
        assert_eq!(classes, vec![1, 2, 3, 4]);
        assert_eq!(items.iter().filter(|i| i.role == Role::Marker).count(), 400);
        assert_eq!(items, generate_synthetic(&SyntheticSpec::default(), 1).unwrap());
        assert_ne!(items, generate_synthetic(&SyntheticSpec::default(), 2).unwrap());
    }

    #[test]
    fn corner_means() {
        let m = class_means(4, 2);
        let expect = [[0.15, 0.15], [0.85, 0.15], [0.85, 0.85], [0.15, 0.85]];
        for (got, want) in m.iter().zip(expect) {
            assert!((got[0] - want[0]).abs() < 1e-12 && (got[1] - want[1]).abs() < 1e-12);
        }
        assert!((min_pairwise(&m) - 0.7).abs() < 1e-12);
        // five classes in 2-D need a 3x3 lattice
        assert!((min_pairwise(&class_means(5, 2)) - 0.35).abs() < 1e-12);
    }

    #[test]
    fn infeasible_separation() {
        let spec = SyntheticSpec { classes: 5, separation: 0.5, ..SyntheticSpec::default() };
        assert!(matches!(generate_synthetic(&spec, 0), Err(Error::Config(_))));
        let spec = SyntheticSpec { classes: 1, ..SyntheticSpec::default() };
        assert!(generate_synthetic(&spec, 0).is_err());
    }

    #[test]
    fn classes_are_far_apart_in_feature_space() {
        let items = generate_synthetic(&SyntheticSpec::default(), 5).unwrap();
        let (mut intra, mut inter, mut ni, mut no) = (0.0, 0.0, 0, 0);
        for a in items.iter().step_by(7) {
            for b in items.iter().step_by(11) {
                let d = normalized_distance(&a.features, &b.features, 1.0).unwrap();
                if a.true_class == b.true_class {
                    intra += d;
                    ni += 1;
                } else {
                    inter += d;
                    no += 1;
                }
            }
        }
        assert!(intra / ni as f64 * 5.0 < inter / no as f64);
        assert!(items.iter().flat_map(|i| &i.features).all(|v| (0.0..=1.0).contains(v)));
    }
}
