//! Self-organized ant-colony clustering on a toroidal grid, with marker
//! based k-nearest-neighbor classification of the resulting map.
//!
//! Items carrying feature vectors in `[0, 1]^F` are scattered over a torus.
//! A colony of memoryless ants wanders the grid following a pheromone field
//! they lay themselves, picking up items that differ from their
//! surroundings and dropping them among similar ones. Once the map has
//! settled, unlabelled items are classified by the labels of their nearest
//! reference items ("markers") on the grid.
//!
//! ```
//! use antids::dataset::{generate_synthetic, SyntheticSpec};
//! use antids::engine::{EngineParams, InitialPlacement, SimState, SnapshotSchedule};
//! use antids::habitat::Grid;
//!
//! let items = generate_synthetic(&SyntheticSpec { per_class: 20, ..Default::default() }, 7)?;
//! let grid = Grid::create(items.len(), None)?;
//! let params = EngineParams { t_max: 200, ..Default::default() };
//! let mut run = SimState::init(items, None, grid, 7, &InitialPlacement::Uniform, params)?;
//! let snapshots = run.run(&SnapshotSchedule::Geometric, 4)?;
//! assert_eq!(snapshots.last().unwrap().t, 200);
//! # Ok::<(), antids::Error>(())
//! ```

pub mod classifier;
pub mod dataset;
pub mod engine;
pub mod error;
pub mod experiment;
pub mod habitat;
pub mod kernel;

pub use error::{Error, Result};
