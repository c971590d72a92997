use std::fs::File;
use std::io::BufReader;
use std::path::Path;
use std::time::Instant;

use rayon::prelude::*;
use serde::Serialize;

use crate::classifier::{evaluate, knn_classify, EvaluationReport, Marker, MarkerSet, N_CLASSES};
use crate::dataset::{self, generate_synthetic, parse_kdd, read_samples, Sample, SplitCounts};
use crate::engine::{
    InitialPlacement, ItemData, Location, PheromoneStats, Placement, Role, SimState, Snapshot,
};
use crate::error::{Error, Result};
use crate::experiment::config::{ExperimentConfig, MarkerPlacement, Mode};
use crate::experiment::placement::place_markers_zoned;
use crate::habitat::{Dims, GridCoord, Grid};

/// Markers and test items for one experiment.
#[derive(Clone, Debug, PartialEq)]
pub struct Dataset {
    pub header: Vec<String>,
    pub markers: Vec<ItemData>,
    pub tests: Vec<ItemData>,
    pub split: Option<SplitCounts>,
}

fn to_items(samples: Vec<Sample>, role: Role) -> Vec<ItemData> {
    samples
        .into_iter()
        .map(|s| ItemData {
            features: s.features,
            role,
            true_class: Some(s.class.value()),
        })
        .collect()
}

fn open(path: &Path) -> Result<File> {
    File::open(path).map_err(|e| Error::io(path, e))
}

/// Prepared CSVs win over raw records; synthetic mode generates.
pub fn load_dataset(cfg: &ExperimentConfig) -> Result<Dataset> {
    if let (Some(train), Some(test)) = (&cfg.train_path, &cfg.test_path) {
        let (header, train) = read_samples(open(train)?)?;
        let (test_header, test) = read_samples(open(test)?)?;
        if header != test_header {
            return Err(Error::Shape {
                expected: header.len(),
                found: test_header.len(),
            });
        }
        return Ok(Dataset {
            header,
            markers: to_items(train, Role::Marker),
            tests: to_items(test, Role::Test),
            split: None,
        });
    }
    if let Some(path) = &cfg.kdd_path {
        let records = parse_kdd(BufReader::new(open(path)?))?;
        let prepared = dataset::prepare(&records, cfg.split_counts(), cfg.features, cfg.seed)?;
        return Ok(Dataset {
            header: cfg.features.header().into_iter().map(String::from).collect(),
            markers: to_items(prepared.train, Role::Marker),
            tests: to_items(prepared.test, Role::Test),
            split: Some(prepared.counts),
        });
    }
    if cfg.mode != Mode::Synthetic {
        return Err(Error::Config("no input data configured".into()));
    }
    let spec = cfg.synthetic();
    let items = generate_synthetic(&spec, cfg.seed)?;
    let (markers, tests) = items.into_iter().partition(|i| i.role == Role::Marker);
    Ok(Dataset {
        header: (1..=spec.dims).map(|d| format!("f{d}")).collect(),
        markers,
        tests,
        split: None,
    })
}

/// Everything one clustering run produced.
#[derive(Clone, Debug)]
pub struct RunOutcome {
    pub dims: Dims,
    pub ants: usize,
    pub seed: u64,
    pub snapshots: Vec<Snapshot>,
    /// Placements after carried items were set down.
    pub final_placements: Vec<Placement>,
    pub final_entropy: f64,
    pub pheromone: Vec<f64>,
    /// One label per test item, in input order.
    pub predictions: Vec<u8>,
    pub evaluation: Option<EvaluationReport>,
    pub wall_seconds: f64,
}

fn on_grid(item: &crate::engine::Item) -> Result<GridCoord> {
    match item.location {
        Location::OnGrid(c) => Ok(c),
        Location::Carried(_) => Err(Error::Internal(format!("item {} still carried", item.id.0))),
    }
}

/// Clusters markers (ids first) and tests together, then labels the tests
/// by their nearest markers.
pub fn cluster_once(
    markers: &[ItemData],
    tests: &[ItemData],
    cfg: &ExperimentConfig,
    seed: u64,
) -> Result<RunOutcome> {
    let started = Instant::now();
    let n = markers.len() + tests.len();
    let grid = Grid::create(n, cfg.grid_size()?)?;
    let dims = grid.dims();
    let placement = match cfg.marker_placement {
        MarkerPlacement::Random => InitialPlacement::Uniform,
        zoned => {
            let classes = markers
                .iter()
                .map(|m| m.true_class.ok_or_else(|| Error::Validation("marker without a class".into())))
                .collect::<Result<Vec<_>>>()?;
            InitialPlacement::Explicit(place_markers_zoned(
                &classes,
                tests.len(),
                dims,
                zoned,
                seed ^ 0x5eed_5eed,
            )?)
        }
    };
    let items: Vec<ItemData> = markers.iter().chain(tests).cloned().collect();
    let mut state = SimState::init(items, cfg.ants, grid, seed, &placement, cfg.engine())?;
    let ants = state.ants.len();
    let snapshots = state.run(&cfg.schedule()?, cfg.entropy_patch)?;
    state.finalize_positions()?;
    state.check_invariants()?;
    let last = state.snapshot(cfg.entropy_patch)?;

    let (marker_items, test_items) = state.items.split_at(markers.len());
    let marker_set = MarkerSet::new(
        marker_items
            .iter()
            .map(|i| {
                Ok(Marker {
                    id: i.id,
                    at: on_grid(i)?,
                    class: i.true_class.ok_or_else(|| Error::Validation("marker without a class".into()))?,
                })
            })
            .collect::<Result<Vec<_>>>()?,
    )?;
    let positions = test_items.iter().map(on_grid).collect::<Result<Vec<_>>>()?;
    let predictions = knn_classify(&positions, &marker_set, cfg.k, dims)?;
    let truths: Option<Vec<u8>> = test_items
        .iter()
        .map(|i| i.true_class.filter(|c| (1..=N_CLASSES as u8).contains(c)))
        .collect();
    let evaluation = match truths {
        Some(t) if !t.is_empty() => Some(evaluate(&predictions, &t)?),
        _ => None,
    };
    Ok(RunOutcome {
        dims,
        ants,
        seed,
        snapshots,
        final_placements: last.placements,
        final_entropy: last.entropy,
        pheromone: state.grid.pheromone_field().collect(),
        predictions,
        evaluation,
        wall_seconds: started.elapsed().as_secs_f64(),
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct TracePoint {
    pub t: u64,
    pub entropy: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct BatchReport {
    pub index: usize,
    pub seed: u64,
    pub grid: [u32; 2],
    pub ants: usize,
    pub n_markers: usize,
    pub n_test: usize,
    pub entropy_trace: Vec<TracePoint>,
    pub final_entropy: f64,
    pub pheromone: Option<PheromoneStats>,
    pub evaluation: Option<EvaluationReport>,
}

/// The deterministic part of a run: same config, same bytes.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct RunReport {
    pub config: ExperimentConfig,
    pub split: Option<SplitCounts>,
    pub batches: Vec<BatchReport>,
    pub aggregate: Option<EvaluationReport>,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Timings {
    pub batches: Vec<f64>,
    pub total: f64,
}

impl RunOutcome {
    pub fn report(&self, index: usize, n_markers: usize) -> BatchReport {
        BatchReport {
            index,
            seed: self.seed,
            grid: [self.dims.width, self.dims.height],
            ants: self.ants,
            n_markers,
            n_test: self.predictions.len(),
            entropy_trace: self
                .snapshots
                .iter()
                .map(|s| TracePoint { t: s.t, entropy: s.entropy })
                .collect(),
            final_entropy: self.final_entropy,
            pheromone: self.snapshots.last().map(|s| s.pheromone_stats),
            evaluation: self.evaluation.clone(),
        }
    }
}

/// A finished experiment.
#[derive(Clone, Debug)]
pub struct Experiment {
    pub report: RunReport,
    pub outcomes: Vec<RunOutcome>,
    pub timings: Timings,
}

/// Protocol A: every test item shares one grid with every marker.
pub fn run_antids_a(data: &Dataset, cfg: &ExperimentConfig) -> Result<Experiment> {
    run_batches(data, cfg, data.tests.len().max(1))
}

/// Protocol B: test items in consecutive batches of `batch_size`, each
/// clustered with all markers on a fresh grid. Batch `i` uses seed
/// `seed + i`; the reported accuracy sums the batch confusion matrices.
pub fn run_antids_b(data: &Dataset, cfg: &ExperimentConfig) -> Result<Experiment> {
    run_batches(data, cfg, cfg.batch_size)
}

fn run_batches(data: &Dataset, cfg: &ExperimentConfig, batch_size: usize) -> Result<Experiment> {
    cfg.validate()?;
    let started = Instant::now();
    let chunks: Vec<&[ItemData]> = if data.tests.is_empty() {
        vec![&[]]
    } else {
        data.tests.chunks(batch_size).collect()
    };
    let outcomes = chunks
        .par_iter()
        .enumerate()
        .map(|(i, tests)| cluster_once(&data.markers, tests, cfg, cfg.seed.wrapping_add(i as u64)))
        .collect::<Result<Vec<_>>>()?;
    let batches: Vec<BatchReport> = outcomes
        .iter()
        .enumerate()
        .map(|(i, o)| o.report(i, data.markers.len()))
        .collect();
    let evaluations: Vec<&EvaluationReport> =
        outcomes.iter().filter_map(|o| o.evaluation.as_ref()).collect();
    let aggregate = (!evaluations.is_empty()).then(|| EvaluationReport::aggregate(evaluations));
    Ok(Experiment {
        report: RunReport {
            config: cfg.clone(),
            split: data.split,
            batches,
            aggregate,
        },
        timings: Timings {
            batches: outcomes.iter().map(|o| o.wall_seconds).collect(),
            total: started.elapsed().as_secs_f64(),
        },
        outcomes,
    })
}

/// Loads the data and runs the protocol named by `cfg.mode`.
pub fn run_experiment(cfg: &ExperimentConfig) -> Result<Experiment> {
    cfg.validate()?;
    let data = load_dataset(cfg)?;
    match cfg.mode {
        Mode::AntidsB => run_antids_b(&data, cfg),
        Mode::AntidsA | Mode::Synthetic => run_antids_a(&data, cfg),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small() -> ExperimentConfig {
        ExperimentConfig {
            steps: 300,
            synth_per_class: 30,
            snapshots: "0,100,300".into(),
            ..ExperimentConfig::default()
        }
    }

    #[test]
    fn synthetic_run_is_reproducible() {
        let cfg = small();
        let a = run_experiment(&cfg).unwrap();
        let b = run_experiment(&cfg).unwrap();
        assert_eq!(a.report, b.report);
        let batch = &a.report.batches[0];
        assert_eq!((batch.n_markers, batch.n_test), (60, 60));
        assert_eq!(batch.entropy_trace.iter().map(|p| p.t).collect::<Vec<_>>(), [0, 100, 300]);
        assert_eq!(a.report.aggregate.as_ref().unwrap().n_test, 60);
        let again = run_experiment(&ExperimentConfig { seed: 2, ..cfg }).unwrap();
        assert_ne!(a.report.batches, again.report.batches);
    }

    #[test]
    fn batches_partition_the_tests() {
        let cfg = ExperimentConfig { batch_size: 25, mode: Mode::Synthetic, ..small() };
        let data = load_dataset(&cfg).unwrap();
        let exp = run_antids_b(&data, &cfg).unwrap();
        let sizes: Vec<_> = exp.report.batches.iter().map(|b| b.n_test).collect();
        assert_eq!(sizes, [25, 25, 10]);
        let seeds: Vec<_> = exp.report.batches.iter().map(|b| b.seed).collect();
        assert_eq!(seeds, [1, 2, 3]);
        let agg = exp.report.aggregate.unwrap();
        assert_eq!(agg.n_test, 60);
        let grids: Vec<_> = exp.report.batches.iter().map(|b| b.grid[0]).collect();
        assert_eq!(grids, [19, 19, 17]);
    }

    #[test]
    fn zoned_placement_runs() {
        let cfg = ExperimentConfig {
            marker_placement: MarkerPlacement::FiveBox,
            grid: Some("30x30".into()),
            ..small()
        };
        let exp = run_experiment(&cfg).unwrap();
        assert_eq!(exp.report.batches[0].grid, [30, 30]);
    }
}
