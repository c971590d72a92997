//! Seeded per-class train/test sampling.

use rand::seq::index;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::dataset::kdd::ClassLabel;
use crate::error::{Error, Result};

/// Requested `(train, test)` sizes per class, indexed by class value − 1.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct SplitCounts(pub [(usize, usize); 5]);

/// DoS sizes of the reference protocol.
pub const DOS_COUNTS: (usize, usize) = (3000, 4202);
/// U2R sizes of the reference protocol.
pub const U2R_COUNTS: (usize, usize) = (27, 25);
pub const TRAIN_TOTAL: usize = 5092;
pub const TEST_TOTAL: usize = 6890;

impl SplitCounts {
    /// The 5092/6890 protocol. DoS and U2R sizes are fixed; Normal, Probe
    /// and R2L share the remaining (2065, 2663) in proportion to their
    /// frequencies in the source (largest remainder, ties to the lower
    /// class).
    pub fn reference(source_frequencies: [usize; 5]) -> SplitCounts {
        let fill = [ClassLabel::Normal, ClassLabel::Probe, ClassLabel::R2l];
        let weights: Vec<usize> = fill.iter().map(|c| source_frequencies[c.value() as usize - 1]).collect();
        let train_left = TRAIN_TOTAL - DOS_COUNTS.0 - U2R_COUNTS.0;
        let test_left = TEST_TOTAL - DOS_COUNTS.1 - U2R_COUNTS.1;
        let train = apportion(train_left, &weights);
        let test = apportion(test_left, &weights);
        let mut counts = [(0, 0); 5];
        counts[ClassLabel::Dos.value() as usize - 1] = DOS_COUNTS;
        counts[ClassLabel::U2r.value() as usize - 1] = U2R_COUNTS;
        for (k, c) in fill.iter().enumerate() {
            counts[c.value() as usize - 1] = (train[k], test[k]);
        }
        SplitCounts(counts)
    }

    pub fn totals(&self) -> (usize, usize) {
        self.0
            .iter()
            .fold((0, 0), |(a, b), &(tr, te)| (a + tr, b + te))
    }

    pub fn of(&self, class: ClassLabel) -> (usize, usize) {
        self.0[class.value() as usize - 1]
    }
}

/// Hamilton apportionment of `total` seats by `weights`.
fn apportion(total: usize, weights: &[usize]) -> Vec<usize> {
    let sum: usize = weights.iter().sum();
    if sum == 0 {
        let mut out = vec![0; weights.len()];
        if let Some(first) = out.first_mut() {
            *first = total;
        }
        return out;
    }
    let mut seats: Vec<usize> = weights.iter().map(|&w| total * w / sum).collect();
    let mut order: Vec<usize> = (0..weights.len()).collect();
    // remainder of total·w / sum, compared exactly
    order.sort_by_key(|&i| std::cmp::Reverse(total * weights[i] % sum));
    let given: usize = seats.iter().sum();
    for &i in order.iter().take(total - given) {
        seats[i] += 1;
    }
    seats
}

/// Splits record indices by class. Each class draws its train and test
/// members together without replacement; both outputs are sorted by
/// record index.
pub fn stratified_split(
    classes: &[ClassLabel],
    counts: &SplitCounts,
    seed: u64,
) -> Result<(Vec<usize>, Vec<usize>)> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut train = Vec::new();
    let mut test = Vec::new();
    for class in ClassLabel::ALL {
        let members: Vec<usize> = classes
            .iter()
            .enumerate()
            .filter(|&(_, &c)| c == class)
            .map(|(i, _)| i)
            .collect();
        let (n_train, n_test) = counts.of(class);
        if n_train + n_test > members.len() {
            return Err(Error::Split {
                class: class.value(),
                available: members.len(),
                requested: n_train + n_test,
            });
        }
        let picked = index::sample(&mut rng, members.len(), n_train + n_test).into_vec();
        train.extend(picked[..n_train].iter().map(|&i| members[i]));
        test.extend(picked[n_train..].iter().map(|&i| members[i]));
    }
    train.sort_unstable();
    test.sort_unstable();
    Ok((train, test))
}
