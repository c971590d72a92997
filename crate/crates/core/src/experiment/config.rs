use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::dataset::{FeatureSet, SplitCounts, SyntheticSpec};
use crate::engine::{EngineParams, SnapshotSchedule, VoteRule};
use crate::error::{Error, Result};
use crate::kernel::KernelParams;

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Mode {
    /// All markers and all test items clustered together.
    AntidsA,
    /// All markers with one batch of test items per run.
    AntidsB,
    /// Generated Gaussian blobs.
    #[default]
    Synthetic,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum MarkerPlacement {
    #[default]
    Random,
    /// One box per class: bottom-left, top-left, top-right, bottom-right,
    /// center.
    FiveBox,
    /// Ten vertical stripes, classes 1..5 twice from left to right.
    TenStripe,
}

/// Everything a run depends on, as one flat key-value table.
///
/// Every run writes its resolved configuration next to its outputs, so a
/// result can always be reproduced from the directory it lives in.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    pub mode: Mode,
    pub features: FeatureSet,
    /// Raw connection records.
    pub kdd_path: Option<PathBuf>,
    /// Prepared marker samples (overrides `kdd_path`).
    pub train_path: Option<PathBuf>,
    /// Prepared test samples (overrides `kdd_path`).
    pub test_path: Option<PathBuf>,
    /// `[train, test]` per class; unset means the reference composition.
    pub split: Option<[[usize; 2]; 5]>,
    pub batch_size: usize,
    pub seed: u64,
    /// `"WxH"`; unset means a square sized for the item count.
    pub grid: Option<String>,
    /// Colony size; unset means a tenth of the item count.
    pub ants: Option<usize>,
    pub steps: u64,
    pub vote_rule: VoteRule,
    pub marker_placement: MarkerPlacement,
    /// `"geometric"` or a comma-separated list of steps.
    pub snapshots: String,
    pub entropy_patch: u32,
    pub k: usize,
    pub out: PathBuf,

    pub beta: f64,
    pub sensory: f64,
    pub k1: f64,
    pub k2: f64,
    pub theta_items: f64,
    pub steepness: f64,
    pub eta: f64,
    pub alpha: f64,
    pub evap: f64,
    pub direction_falloff: f64,

    pub synth_classes: usize,
    pub synth_per_class: usize,
    pub synth_dims: usize,
    pub synth_separation: f64,
    pub synth_spread: f64,
    pub synth_marker_fraction: f64,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        let k = KernelParams::default();
        let s = SyntheticSpec::default();
        ExperimentConfig {
            mode: Mode::default(),
            features: FeatureSet::Reduced,
            kdd_path: None,
            train_path: None,
            test_path: None,
            split: None,
            batch_size: 1000,
            seed: 1,
            grid: None,
            ants: None,
            steps: 1_000_000,
            vote_rule: VoteRule::Strict,
            marker_placement: MarkerPlacement::Random,
            snapshots: "geometric".into(),
            entropy_patch: 8,
            k: 3,
            out: PathBuf::from("out"),
            beta: k.beta,
            sensory: k.sensory,
            k1: k.k1,
            k2: k.k2,
            theta_items: k.theta_items,
            steepness: k.steepness,
            eta: k.eta,
            alpha: k.alpha,
            evap: k.evap,
            direction_falloff: k.direction_falloff,
            synth_classes: s.classes,
            synth_per_class: s.per_class,
            synth_dims: s.dims,
            synth_separation: s.separation,
            synth_spread: s.spread,
            synth_marker_fraction: s.marker_fraction,
        }
    }
}

/// Parses `"WxH"`.
pub fn parse_grid(s: &str) -> Result<(u32, u32)> {
    let bad = || Error::Config(format!("grid must look like 57x57, got {s:?}"));
    let (w, h) = s.split_once(['x', 'X']).ok_or_else(bad)?;
    let w: u32 = w.trim().parse().map_err(|_| bad())?;
    let h: u32 = h.trim().parse().map_err(|_| bad())?;
    if w == 0 || h == 0 {
        return Err(bad());
    }
    Ok((w, h))
}

pub fn parse_schedule(s: &str) -> Result<SnapshotSchedule> {
    if s.trim() == "geometric" {
        return Ok(SnapshotSchedule::Geometric);
    }
    s.split(',')
        .map(|t| {
            t.trim()
                .parse::<u64>()
                .map_err(|_| Error::Config(format!("bad snapshot step {t:?}")))
        })
        .collect::<Result<Vec<_>>>()
        .map(SnapshotSchedule::List)
}

impl ExperimentConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| Error::Config(e.to_string()))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_toml(&text)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }

    pub fn kernel(&self) -> KernelParams {
        KernelParams {
            beta: self.beta,
            sensory: self.sensory,
            k1: self.k1,
            k2: self.k2,
            theta_items: self.theta_items,
            steepness: self.steepness,
            eta: self.eta,
            alpha: self.alpha,
            evap: self.evap,
            direction_falloff: self.direction_falloff,
        }
    }

    pub fn engine(&self) -> EngineParams {
        EngineParams {
            kernel: self.kernel(),
            t_max: self.steps,
            vote_rule: self.vote_rule,
        }
    }

    pub fn synthetic(&self) -> SyntheticSpec {
        SyntheticSpec {
            classes: self.synth_classes,
            per_class: self.synth_per_class,
            dims: self.synth_dims,
            separation: self.synth_separation,
            spread: self.synth_spread,
            marker_fraction: self.synth_marker_fraction,
        }
    }

    pub fn grid_size(&self) -> Result<Option<(u32, u32)>> {
        self.grid.as_deref().map(parse_grid).transpose()
    }

    pub fn schedule(&self) -> Result<SnapshotSchedule> {
        parse_schedule(&self.snapshots)
    }

    pub fn split_counts(&self) -> Option<SplitCounts> {
        self.split.map(|s| SplitCounts(s.map(|[a, b]| (a, b))))
    }

    /// Checks every field; called before any run starts.
    pub fn validate(&self) -> Result<()> {
        self.kernel().validate()?;
        self.grid_size()?;
        self.schedule()?;
        if self.batch_size < 1 {
            return Err(Error::Config("batch_size must be at least 1".into()));
        }
        if self.k.is_multiple_of(2) {
            return Err(Error::Config(format!("k must be odd, got {}", self.k)));
        }
        if self.entropy_patch == 0 {
            return Err(Error::Config("entropy_patch must be at least 1".into()));
        }
        if !(2..=5).contains(&self.synth_classes) {
            return Err(Error::Config(format!(
                "synth_classes must lie in 2..=5, got {}",
                self.synth_classes
            )));
        }
        if self.train_path.is_some() != self.test_path.is_some() {
            return Err(Error::Config("train_path and test_path go together".into()));
        }
        if self.mode != Mode::Synthetic && self.kdd_path.is_none() && self.train_path.is_none() {
            return Err(Error::Config(
                "intrusion-detection modes need kdd_path or train_path/test_path".into(),
            ));
        }
        Ok(())
    }
}
