//! The clustering loop.
//!
//! Each step visits the ants in ascending id order. An ant first considers
//! its cell: unladen on an item it holds a pick vote, laden on an empty cell
//! it holds a drop vote. It then moves to a free neighbor cell drawn from the
//! pheromone transition distribution and deposits pheromone there. After all
//! ants have acted the whole field evaporates once.
//!
//! A vote compares the focal item (underfoot or carried) with every item in
//! the Moore ring individually. Each comparison is a Bernoulli trial with the
//! pick or drop probability for that pair; the action happens when more than
//! half of the trials succeed. Picking is also automatic on an isolated item.
//!
//! All randomness comes from one seeded ChaCha stream consumed in a fixed
//! order: item cells, ant cells, ant headings, then per step and per ant the
//! vote trials in neighbor order followed by one draw for the move.

use rand::seq::index;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::classifier::spatial_entropy;
use crate::error::{Error, Result};
use crate::habitat::{AgentId, Direction, Dims, Grid, GridCoord, ItemId};
use crate::kernel::{
    candidate_weight, drop_probability, normalized_distance, pick_probability, KernelParams,
    MoveCandidate, Turn,
};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Role {
    /// Labelled reference item used by the k-NN stage.
    Marker,
    /// Item to be classified.
    Test,
}

impl Role {
    pub fn as_str(self) -> &'static str {
        match self {
            Role::Marker => "marker",
            Role::Test => "test",
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Location {
    OnGrid(GridCoord),
    Carried(AgentId),
}

/// Input to a run: what an item is, before it has a position.
#[derive(Clone, Debug, PartialEq)]
pub struct ItemData {
    pub features: Vec<f64>,
    pub role: Role,
    pub true_class: Option<u8>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Item {
    pub id: ItemId,
    pub features: Vec<f64>,
    pub role: Role,
    pub true_class: Option<u8>,
    pub location: Location,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Ant {
    pub id: AgentId,
    pub pos: GridCoord,
    pub heading: Direction,
    pub carrying: Option<ItemId>,
}

/// How a vote tally turns into an action.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum VoteRule {
    /// Act on a strict majority (`2·sum > n`); isolated items are always
    /// picked and never dropped onto empty ground.
    #[default]
    Strict,
    /// Act when at least half agree (`2·sum >= n`). Drops into empty
    /// neighborhoods then always succeed.
    Lenient,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct EngineParams {
    pub kernel: KernelParams,
    pub t_max: u64,
    pub vote_rule: VoteRule,
}

impl Default for EngineParams {
    fn default() -> Self {
        EngineParams {
            kernel: KernelParams::default(),
            t_max: 1_000_000,
            vote_rule: VoteRule::Strict,
        }
    }
}

/// Where items start.
#[derive(Clone, Debug, PartialEq)]
pub enum InitialPlacement {
    /// Distinct cells drawn uniformly from the run's own stream.
    Uniform,
    /// Precomputed distinct cells, one per item in id order.
    Explicit(Vec<GridCoord>),
}

/// Default colony size: a tenth of the item count, at least one.
pub fn default_ant_count(n_items: usize) -> usize {
    ((n_items as f64 / 10.0).round() as usize).max(1)
}

#[derive(Clone, Debug)]
pub struct SimState {
    pub grid: Grid,
    pub ants: Vec<Ant>,
    pub items: Vec<Item>,
    pub t: u64,
    pub params: EngineParams,
    rng: ChaCha8Rng,
}

impl SimState {
    /// Places items and ants on an empty grid.
    pub fn init(
        items: Vec<ItemData>,
        n_ants: Option<usize>,
        mut grid: Grid,
        seed: u64,
        placement: &InitialPlacement,
        params: EngineParams,
    ) -> Result<Self> {
        params.kernel.validate()?;
        let n_ants = n_ants.unwrap_or_else(|| default_ant_count(items.len()));
        let area = grid.dims().area();
        if items.len() + n_ants > area {
            return Err(Error::Config(format!(
                "{} items and {n_ants} ants do not fit on a {}x{} grid",
                items.len(),
                grid.width(),
                grid.height()
            )));
        }
        if items.len() > u32::MAX as usize || n_ants > u32::MAX as usize {
            return Err(Error::Config("too many items or ants".into()));
        }
        if let Some(f) = items.first().map(|i| i.features.len()) {
            if f == 0 || items.iter().any(|i| i.features.len() != f) {
                return Err(Error::Validation(
                    "all items need the same non-zero number of features".into(),
                ));
            }
            if items.iter().flat_map(|i| &i.features).any(|v| !(0.0..=1.0).contains(v)) {
                return Err(Error::Validation("features must lie in [0, 1]".into()));
            }
        }
        grid.clear_pheromone();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let dims = grid.dims();

        let cells: Vec<GridCoord> = match placement {
            InitialPlacement::Uniform => index::sample(&mut rng, area, items.len())
                .into_iter()
                .map(|i| dims.coord(i))
                .collect(),
            InitialPlacement::Explicit(cells) => {
                if cells.len() != items.len() {
                    return Err(Error::Config(format!(
                        "{} explicit positions for {} items",
                        cells.len(),
                        items.len()
                    )));
                }
                cells.clone()
            }
        };
        let items = items
            .into_iter()
            .zip(cells)
            .enumerate()
            .map(|(i, (data, at))| {
                if !dims.contains(at) {
                    return Err(Error::Config(format!("position ({}, {}) is off the grid", at.x, at.y)));
                }
                let id = ItemId(i as u32);
                grid.place_item(at, id)
                    .map_err(|_| Error::Config(format!("two items placed at ({}, {})", at.x, at.y)))?;
                Ok(Item {
                    id,
                    features: data.features,
                    role: data.role,
                    true_class: data.true_class,
                    location: Location::OnGrid(at),
                })
            })
            .collect::<Result<Vec<_>>>()?;

        let ant_cells = index::sample(&mut rng, area, n_ants);
        let mut ants = Vec::with_capacity(n_ants);
        for (i, cell) in ant_cells.into_iter().enumerate() {
            let id = AgentId(i as u32);
            let pos = dims.coord(cell);
            grid.place_agent(pos, id)?;
            ants.push(Ant {
                id,
                pos,
                heading: Direction::North,
                carrying: None,
            });
        }
        for ant in &mut ants {
            ant.heading = Direction::from_index(rng.random_range(0..8u8));
        }

        Ok(SimState {
            grid,
            ants,
            items,
            t: 0,
            params,
            rng,
        })
    }

    pub fn dims(&self) -> Dims {
        self.grid.dims()
    }

    fn ant(&self, id: AgentId) -> Result<Ant> {
        self.ants
            .get(id.0 as usize)
            .copied()
            .ok_or_else(|| Error::Contract(format!("no ant {}", id.0)))
    }

    /// Tallies one vote per neighbor item. `prob` maps (n, d) to the
    /// success probability of a single trial.
    fn tally(
        &mut self,
        focal: ItemId,
        at: GridCoord,
        prob: fn(usize, f64, &KernelParams) -> Result<f64>,
    ) -> Result<(usize, usize)> {
        let neighbors = self.grid.neighborhood_items(at);
        let n = neighbors.len();
        let kernel = self.params.kernel;
        let focal = &self.items[focal.0 as usize].features;
        let mut sum = 0;
        for (_, other) in neighbors {
            let d = normalized_distance(focal, &self.items[other.0 as usize].features, 1.0)?;
            let p = prob(n, d.min(1.0), &kernel)?;
            // R is uniform on [0, 1), so `R < p` succeeds with probability p
            // exactly, including the endpoints p = 0 and p = 1.
            if self.rng.random::<f64>() < p {
                sum += 1;
            }
        }
        Ok((sum, n))
    }

    /// Pick vote for an unladen ant standing on an item. Picks the item up
    /// and returns true when the vote passes.
    pub fn vote_pick(&mut self, ant: AgentId) -> Result<bool> {
        let a = self.ant(ant)?;
        if a.carrying.is_some() {
            return Err(Error::Contract(format!("ant {} is already laden", ant.0)));
        }
        let Some(item) = self.grid.item_at(a.pos) else {
            return Err(Error::Contract(format!("ant {} is not standing on an item", ant.0)));
        };
        let (sum, n) = self.tally(item, a.pos, pick_probability)?;
        let pass = n == 0
            || match self.params.vote_rule {
                VoteRule::Strict => 2 * sum > n,
                VoteRule::Lenient => 2 * sum >= n,
            };
        if pass {
            self.grid.take_item(a.pos);
            self.items[item.0 as usize].location = Location::Carried(ant);
            self.ants[ant.0 as usize].carrying = Some(item);
        }
        Ok(pass)
    }

    /// Drop vote for a laden ant on an item-free cell. Drops the item there
    /// and returns true when the vote passes.
    pub fn vote_drop(&mut self, ant: AgentId) -> Result<bool> {
        let a = self.ant(ant)?;
        let Some(item) = a.carrying else {
            return Err(Error::Contract(format!("ant {} carries nothing", ant.0)));
        };
        if self.grid.item_at(a.pos).is_some() {
            return Err(Error::Contract(format!("ant {} stands on an occupied cell", ant.0)));
        }
        let (sum, n) = self.tally(item, a.pos, drop_probability)?;
        let pass = match self.params.vote_rule {
            VoteRule::Strict => 2 * sum > n,
            VoteRule::Lenient => 2 * sum >= n,
        };
        if pass {
            self.drop_at(ant, item, a.pos)?;
        }
        Ok(pass)
    }

    fn drop_at(&mut self, ant: AgentId, item: ItemId, at: GridCoord) -> Result<()> {
        self.grid.place_item(at, item)?;
        self.items[item.0 as usize].location = Location::OnGrid(at);
        self.ants[ant.0 as usize].carrying = None;
        Ok(())
    }

    /// Moves the ant to a neighbor cell free of other ants, sampled from the
    /// transition distribution. Item-occupied cells are allowed. With no
    /// free neighbor the ant stays and keeps its heading.
    pub fn move_agent(&mut self, ant: AgentId) -> Result<GridCoord> {
        let a = self.ant(ant)?;
        let ring = self.dims().moore_ring(a.pos);
        let mut options = [(Direction::East, 0.0f64, a.pos); 8];
        let mut len = 0;
        let mut total = 0.0;
        for &(dir, cell) in ring.as_slice() {
            if self.grid.agent_at(cell).is_some() {
                continue;
            }
            let cand = MoveCandidate {
                target: cell,
                pheromone: self.grid.pheromone(cell),
                turn: Turn::between(a.heading, dir),
            };
            let w = candidate_weight(&cand, &self.params.kernel)?;
            total += w;
            options[len] = (dir, total, cell);
            len += 1;
        }
        if len == 0 {
            return Ok(a.pos);
        }
        let u = self.rng.random::<f64>() * total;
        let (dir, _, target) = options[..len]
            .iter()
            .copied()
            .find(|&(_, cum, _)| u < cum)
            .unwrap_or(options[len - 1]);
        self.grid.take_agent(a.pos);
        self.grid.place_agent(target, ant)?;
        let a = &mut self.ants[ant.0 as usize];
        a.pos = target;
        a.heading = dir;
        Ok(target)
    }

    /// Adds `eta + n / alpha` at `r`, `n` being the neighborhood item count.
    pub fn deposit(&mut self, r: GridCoord) {
        let n = self.grid.neighborhood_count(r);
        let k = &self.params.kernel;
        self.grid.add_pheromone(r, k.eta + n as f64 / k.alpha);
    }

    pub fn evaporate(&mut self) {
        self.grid.scale_pheromone(1.0 - self.params.kernel.evap);
    }

    /// Runs one sweep over all ants followed by one evaporation.
    pub fn step(&mut self) -> Result<()> {
        if self.t >= self.params.t_max {
            return Err(Error::Contract(format!(
                "step called at t = {} with t_max = {}",
                self.t, self.params.t_max
            )));
        }
        for i in 0..self.ants.len() {
            let id = AgentId(i as u32);
            let a = self.ants[i];
            match (a.carrying, self.grid.item_at(a.pos)) {
                (None, Some(_)) => {
                    self.vote_pick(id)?;
                }
                (Some(_), None) => {
                    self.vote_drop(id)?;
                }
                _ => {}
            }
            let to = self.move_agent(id)?;
            self.deposit(to);
        }
        self.evaporate();
        self.t += 1;
        Ok(())
    }

    /// Steps until `t_max`, recording a snapshot at each scheduled time.
    pub fn run(&mut self, schedule: &SnapshotSchedule, patch_side: u32) -> Result<Vec<Snapshot>> {
        let times = schedule.times(self.params.t_max);
        let mut wanted = times.iter().copied().peekable();
        let mut snapshots = Vec::with_capacity(times.len());
        while wanted.peek().is_some_and(|&t| t < self.t) {
            wanted.next();
        }
        loop {
            if wanted.peek() == Some(&self.t) {
                wanted.next();
                snapshots.push(self.snapshot(patch_side)?);
            }
            if self.t >= self.params.t_max {
                break;
            }
            self.step()?;
        }
        Ok(snapshots)
    }

    /// Drops every still-carried item on the nearest item-free cell to its
    /// carrier, ants in id order.
    pub fn finalize_positions(&mut self) -> Result<()> {
        for i in 0..self.ants.len() {
            let a = self.ants[i];
            if let Some(item) = a.carrying {
                let at = nearest_free_cell(&self.grid, a.pos).ok_or_else(|| {
                    Error::Internal(format!("no free cell left for item {}", item.0))
                })?;
                self.drop_at(a.id, item, at)?;
            }
        }
        Ok(())
    }

    pub fn carried_count(&self) -> usize {
        self.ants.iter().filter(|a| a.carrying.is_some()).count()
    }

    pub fn placements(&self) -> Vec<Placement> {
        self.items
            .iter()
            .map(|item| Placement {
                item: item.id,
                at: match item.location {
                    Location::OnGrid(c) => Some(c),
                    Location::Carried(_) => None,
                },
                role: item.role,
                true_class: item.true_class,
            })
            .collect()
    }

    pub fn pheromone_stats(&self) -> PheromoneStats {
        let mut stats = PheromoneStats {
            min: f64::INFINITY,
            max: 0.0,
            mean: 0.0,
        };
        let mut sum = 0.0;
        for p in self.grid.pheromone_field() {
            stats.min = stats.min.min(p);
            stats.max = stats.max.max(p);
            sum += p;
        }
        stats.mean = sum / self.dims().area() as f64;
        stats
    }

    pub fn snapshot(&self, patch_side: u32) -> Result<Snapshot> {
        let placements = self.placements();
        let entropy = spatial_entropy(&placements, self.dims(), patch_side)?;
        Ok(Snapshot {
            t: self.t,
            placements,
            entropy,
            pheromone_stats: self.pheromone_stats(),
        })
    }

    /// Full consistency audit of items, ants, grid occupancy and the
    /// pheromone field.
    pub fn check_invariants(&self) -> Result<()> {
        let breach = |m: String| Err(Error::Internal(m));
        let mut on_grid = 0;
        for (idx, cell) in self.grid.cells().iter().enumerate() {
            let at = self.dims().coord(idx);
            if !(cell.pheromone >= 0.0 && cell.pheromone.is_finite()) {
                return breach(format!("pheromone {} at ({}, {})", cell.pheromone, at.x, at.y));
            }
            if let Some(item) = cell.item {
                on_grid += 1;
                match self.items.get(item.0 as usize).map(|i| i.location) {
                    Some(Location::OnGrid(c)) if c == at => {}
                    _ => return breach(format!("item {} misplaced", item.0)),
                }
            }
            if let Some(ant) = cell.agent {
                match self.ants.get(ant.0 as usize) {
                    Some(a) if a.pos == at => {}
                    _ => return breach(format!("ant {} misplaced", ant.0)),
                }
            }
        }
        let mut carried = 0;
        for a in &self.ants {
            if self.grid.agent_at(a.pos) != Some(a.id) {
                return breach(format!("ant {} missing from its cell", a.id.0));
            }
            if let Some(item) = a.carrying {
                carried += 1;
                if self.items[item.0 as usize].location != Location::Carried(a.id) {
                    return breach(format!("ant {} carries item {} it does not hold", a.id.0, item.0));
                }
            }
        }
        for item in &self.items {
            match item.location {
                Location::OnGrid(c) if self.grid.item_at(c) != Some(item.id) => {
                    return breach(format!("item {} not found at its cell", item.id.0))
                }
                Location::Carried(a) if self.ants[a.0 as usize].carrying != Some(item.id) => {
                    return breach(format!("item {} claims a carrier that lacks it", item.id.0))
                }
                _ => {}
            }
        }
        if on_grid + carried != self.items.len() {
            return breach(format!(
                "{on_grid} on grid + {carried} carried != {} items",
                self.items.len()
            ));
        }
        if self.t > self.params.t_max {
            return breach(format!("t = {} beyond t_max", self.t));
        }
        Ok(())
    }
}

/// Nearest item-free cell to `from` by toroidal distance; equal distances
/// resolve in row-major offset order.
pub fn nearest_free_cell(grid: &Grid, from: GridCoord) -> Option<GridCoord> {
    let dims = grid.dims();
    if grid.item_at(from).is_none() {
        return Some(from);
    }
    let max_r = (dims.width.max(dims.height) / 2 + 1) as i64;
    let mut best: Option<((u64, i64, i64), GridCoord)> = None;
    for r in 1..=max_r {
        if let Some(((d2, _, _), _)) = best {
            if (r * r) as u64 > d2 {
                break;
            }
        }
        for dy in -r..=r {
            for dx in -r..=r {
                if dx.abs() != r && dy.abs() != r {
                    continue;
                }
                let c = dims.offset(from, dx, dy);
                if grid.item_at(c).is_some() {
                    continue;
                }
                let key = (dims.distance_sq(from, c), dy, dx);
                if best.is_none_or(|(b, _)| key < b) {
                    best = Some((key, c));
                }
            }
        }
    }
    best.map(|(_, c)| c)
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct PheromoneStats {
    pub min: f64,
    pub max: f64,
    pub mean: f64,
}

/// One item's state in a snapshot. `at` is `None` while the item is carried.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Placement {
    pub item: ItemId,
    pub at: Option<GridCoord>,
    pub role: Role,
    pub true_class: Option<u8>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Snapshot {
    pub t: u64,
    pub placements: Vec<Placement>,
    pub entropy: f64,
    pub pheromone_stats: PheromoneStats,
}

#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub enum SnapshotSchedule {
    /// `1, 10, 100, ...` plus `t_max` itself.
    #[default]
    Geometric,
    List(Vec<u64>),
}

impl SnapshotSchedule {
    /// Sorted, de-duplicated snapshot times within `0..=t_max`.
    pub fn times(&self, t_max: u64) -> Vec<u64> {
        let mut times = match self {
            SnapshotSchedule::Geometric => {
                let mut v = Vec::new();
                let mut t = 1u64;
                while t <= t_max {
                    v.push(t);
                    match t.checked_mul(10) {
                        Some(next) => t = next,
                        None => break,
                    }
                }
                v.push(t_max);
                v
            }
            SnapshotSchedule::List(v) => v.iter().copied().filter(|&t| t <= t_max).collect(),
        };
        times.sort_unstable();
        times.dedup();
        times
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn data(features: Vec<f64>, class: u8) -> ItemData {
        ItemData {
            features,
            role: Role::Marker,
            true_class: Some(class),
        }
    }

    fn params(t_max: u64) -> EngineParams {
        EngineParams {
            t_max,
            ..EngineParams::default()
        }
    }

    fn random_items(n: usize, seed: u64) -> Vec<ItemData> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        (0..n)
            .map(|i| data(vec![rng.random(), rng.random()], (i % 4) as u8 + 1))
            .collect()
    }

    /// A state with no ants and the given items at explicit cells.
    fn fixed(dims: (u32, u32), cells: &[(u32, u32)]) -> SimState {
        let items = cells.iter().map(|_| data(vec![0.5, 0.5], 1)).collect();
        let at = cells.iter().map(|&(x, y)| GridCoord::new(x, y)).collect();
        SimState::init(
            items,
            Some(0),
            Grid::new(Dims::new(dims.0, dims.1).unwrap()),
            1,
            &InitialPlacement::Explicit(at),
            params(10),
        )
        .unwrap()
    }

    fn add_ant(s: &mut SimState, at: (u32, u32), heading: Direction) -> AgentId {
        let id = AgentId(s.ants.len() as u32);
        let pos = GridCoord::new(at.0, at.1);
        s.grid.place_agent(pos, id).unwrap();
        s.ants.push(Ant { id, pos, heading, carrying: None });
        id
    }

    #[test]
    fn default_colony_size() {
        assert_eq!(default_ant_count(800), 80);
        assert_eq!(default_ant_count(11982), 1198);
        assert_eq!(default_ant_count(3), 1);
        let s = SimState::init(
            random_items(800, 1),
            None,
            Grid::create(800, Some((57, 57))).unwrap(),
            7,
            &InitialPlacement::Uniform,
            params(10),
        )
        .unwrap();
        assert_eq!(s.ants.len(), 80);
        s.check_invariants().unwrap();
    }

    #[test]
    fn smallest_run_fits() {
        let s = SimState::init(
            random_items(1, 2),
            Some(1),
            Grid::create(1, None).unwrap(),
            3,
            &InitialPlacement::Uniform,
            params(10),
        )
        .unwrap();
        s.check_invariants().unwrap();
        let over = SimState::init(
            random_items(4, 2),
            Some(1),
            Grid::create(1, None).unwrap(),
            3,
            &InitialPlacement::Uniform,
            params(10),
        );
        assert!(matches!(over, Err(Error::Config(_))));
    }

    #[test]
    fn init_is_deterministic() {
        let mk = || {
            SimState::init(
                random_items(50, 4),
                None,
                Grid::create(50, None).unwrap(),
                99,
                &InitialPlacement::Uniform,
                params(10),
            )
            .unwrap()
        };
        let (a, b) = (mk(), mk());
        assert_eq!(a.grid, b.grid);
        assert_eq!(a.ants, b.ants);
        assert_eq!(a.items, b.items);
    }

    #[test]
    fn isolated_items_are_always_picked() {
        let mut s = fixed((10, 10), &[(5, 5)]);
        let ant = add_ant(&mut s, (5, 5), Direction::East);
        assert!(s.vote_pick(ant).unwrap());
        assert_eq!(s.ants[0].carrying, Some(ItemId(0)));
        assert_eq!(s.items[0].location, Location::Carried(ant));
        s.check_invariants().unwrap();
        // laden ant cannot vote to pick
        assert!(matches!(s.vote_pick(ant), Err(Error::Contract(_))));
    }

    #[test]
    fn identical_neighbors_are_never_picked() {
        let mut s = fixed((10, 10), &[(5, 5), (4, 4), (6, 6), (5, 4)]);
        let ant = add_ant(&mut s, (5, 5), Direction::East);
        for _ in 0..200 {
            assert!(!s.vote_pick(ant).unwrap());
        }
    }

    #[test]
    fn maximally_different_pair_is_picked_by_majority() {
        // two neighbors at d = 1: each trial passes with probability
        // (1 - χ(2)) ε(1) ≈ 0.51, and both must pass.
        let mut s = fixed((10, 10), &[(5, 5), (4, 5), (6, 5)]);
        s.items[0].features = vec![0.0, 0.0];
        s.items[1].features = vec![1.0, 1.0];
        s.items[2].features = vec![1.0, 1.0];
        let ant = add_ant(&mut s, (5, 5), Direction::East);
        let mut picks = 0;
        for _ in 0..2000 {
            if s.vote_pick(ant).unwrap() {
                picks += 1;
                s.grid.place_item(GridCoord::new(5, 5), ItemId(0)).unwrap();
                s.items[0].location = Location::OnGrid(GridCoord::new(5, 5));
                s.ants[0].carrying = None;
            }
        }
        let p = (1.0 - 4.0 / 29.0) * (1.0f64 / 1.3).powi(2);
        let rate = picks as f64 / 2000.0;
        assert!((rate - p * p).abs() < 0.04, "{rate}");
    }

    #[test]
    fn never_drops_into_empty_space() {
        let mut s = fixed((10, 10), &[(1, 1)]);
        let ant = add_ant(&mut s, (1, 1), Direction::East);
        assert!(s.vote_pick(ant).unwrap());
        s.grid.take_agent(GridCoord::new(1, 1));
        s.grid.place_agent(GridCoord::new(7, 7), ant).unwrap();
        s.ants[0].pos = GridCoord::new(7, 7);
        for _ in 0..100 {
            assert!(!s.vote_drop(ant).unwrap());
        }
        s.params.vote_rule = VoteRule::Lenient;
        assert!(s.vote_drop(ant).unwrap());
        assert_eq!(s.grid.item_at(GridCoord::new(7, 7)), Some(ItemId(0)));
        assert!(matches!(s.vote_drop(ant), Err(Error::Contract(_))));
    }

    #[test]
    fn single_identical_neighbor_drop_rate() {
        // χ(1) δ(0) = 1/26
        let mut s = fixed((10, 10), &[(1, 1), (5, 4)]);
        let ant = add_ant(&mut s, (1, 1), Direction::East);
        assert!(s.vote_pick(ant).unwrap());
        s.grid.take_agent(GridCoord::new(1, 1));
        s.grid.place_agent(GridCoord::new(5, 5), ant).unwrap();
        s.ants[0].pos = GridCoord::new(5, 5);
        let trials = 40_000;
        let mut drops = 0;
        for _ in 0..trials {
            if s.vote_drop(ant).unwrap() {
                drops += 1;
                s.grid.take_item(GridCoord::new(5, 5));
                s.items[0].location = Location::Carried(ant);
                s.ants[0].carrying = Some(ItemId(0));
            }
        }
        let rate = drops as f64 / trials as f64;
        assert!((rate - 1.0 / 26.0).abs() < 0.005, "{rate}");
    }

    #[test]
    fn boxed_in_ant_stays() {
        let mut s = fixed((5, 5), &[]);
        let centre = add_ant(&mut s, (2, 2), Direction::North);
        for &(_, c) in s.dims().moore_ring(GridCoord::new(2, 2)).as_slice() {
            add_ant(&mut s, (c.x, c.y), Direction::North);
        }
        assert_eq!(s.move_agent(centre).unwrap(), GridCoord::new(2, 2));
        assert_eq!(s.ants[0].heading, Direction::North);
    }

    #[test]
    fn single_exit_is_taken() {
        let mut s = fixed((5, 5), &[(1, 1)]);
        let centre = add_ant(&mut s, (2, 2), Direction::North);
        for &(_, c) in s.dims().moore_ring(GridCoord::new(2, 2)).as_slice() {
            if c != GridCoord::new(1, 1) {
                add_ant(&mut s, (c.x, c.y), Direction::North);
            }
        }
        // the only free neighbor holds an item, which does not block moves
        assert_eq!(s.move_agent(centre).unwrap(), GridCoord::new(1, 1));
        assert_eq!(s.ants[0].heading, Direction::NorthWest);
        s.check_invariants().unwrap();
    }

    #[test]
    fn straight_ahead_is_the_modal_move() {
        let mut s = fixed((9, 9), &[]);
        let ant = add_ant(&mut s, (4, 4), Direction::East);
        let mut counts = std::collections::HashMap::new();
        for _ in 0..20_000 {
            let to = s.move_agent(ant).unwrap();
            *counts.entry(s.ants[0].heading).or_insert(0) += 1;
            // back to the start, facing east
            s.grid.take_agent(to);
            s.grid.place_agent(GridCoord::new(4, 4), ant).unwrap();
            s.ants[0].pos = GridCoord::new(4, 4);
            s.ants[0].heading = Direction::East;
        }
        let modal = counts.iter().max_by_key(|(_, &c)| c).unwrap().0;
        assert_eq!(*modal, Direction::East);
    }

    #[test]
    fn deposit_amounts() {
        let mut s = fixed((10, 10), &[]);
        s.deposit(GridCoord::new(3, 3));
        assert_eq!(s.grid.pheromone(GridCoord::new(3, 3)), 0.07);
        let ring: Vec<_> = s.dims().moore_ring(GridCoord::new(6, 6)).as_slice().to_vec();
        for (k, (_, c)) in ring.into_iter().enumerate() {
            s.grid.place_item(c, ItemId(k as u32)).unwrap();
        }
        s.deposit(GridCoord::new(6, 6));
        assert!((s.grid.pheromone(GridCoord::new(6, 6)) - 0.09).abs() < 1e-15);
        assert_eq!(s.grid.pheromone(GridCoord::new(3, 3)), 0.07);
    }

    #[test]
    fn evaporation_is_geometric() {
        let mut s = fixed((4, 4), &[]);
        s.evaporate();
        assert!(s.grid.pheromone_field().all(|p| p == 0.0));
        s.grid.add_pheromone(GridCoord::new(0, 0), 1.0);
        s.evaporate();
        assert!((s.grid.pheromone(GridCoord::new(0, 0)) - 0.985).abs() < 1e-15);
        let mut prev = 0.985;
        for _ in 0..5000 {
            s.evaporate();
            let p = s.grid.pheromone(GridCoord::new(0, 0));
            assert!(p < prev || p == 0.0);
            assert!(p >= 0.0);
            prev = p;
        }
        assert!(prev < 1e-30);
    }

    #[test]
    fn antless_step_only_evaporates() {
        let mut s = fixed((6, 6), &[(0, 0), (3, 3)]);
        s.grid.add_pheromone(GridCoord::new(1, 1), 2.0);
        let before = s.placements();
        s.step().unwrap();
        assert_eq!(s.placements(), before);
        assert!((s.grid.pheromone(GridCoord::new(1, 1)) - 2.0 * 0.985).abs() < 1e-15);
        assert_eq!(s.t, 1);
    }

    #[test]
    fn step_is_deterministic_and_conserving() {
        let mut a = SimState::init(
            random_items(60, 5),
            Some(8),
            Grid::create(60, None).unwrap(),
            11,
            &InitialPlacement::Uniform,
            params(500),
        )
        .unwrap();
        let mut b = a.clone();
        for _ in 0..500 {
            a.step().unwrap();
            b.step().unwrap();
            a.check_invariants().unwrap();
        }
        assert_eq!(a.grid, b.grid);
        assert_eq!(a.ants, b.ants);
        assert!(matches!(a.step(), Err(Error::Contract(_))));
    }

    #[test]
    fn zero_horizon_run() {
        let mut s = fixed((6, 6), &[(0, 0)]);
        s.params.t_max = 0;
        let snaps = s.run(&SnapshotSchedule::Geometric, 8).unwrap();
        assert_eq!(snaps.len(), 1);
        assert_eq!(snaps[0].t, 0);
    }

    #[test]
    fn schedules() {
        assert_eq!(SnapshotSchedule::Geometric.times(1000), vec![1, 10, 100, 1000]);
        assert_eq!(SnapshotSchedule::Geometric.times(250), vec![1, 10, 100, 250]);
        assert_eq!(SnapshotSchedule::Geometric.times(0), vec![0]);
        assert_eq!(SnapshotSchedule::List(vec![5, 0, 5, 99]).times(10), vec![0, 5]);
    }

    #[test]
    fn run_records_schedule() {
        let mut s = SimState::init(
            random_items(30, 5),
            Some(3),
            Grid::create(30, None).unwrap(),
            1,
            &InitialPlacement::Uniform,
            params(100),
        )
        .unwrap();
        let snaps = s.run(&SnapshotSchedule::Geometric, 4).unwrap();
        let ts: Vec<u64> = snaps.iter().map(|s| s.t).collect();
        assert_eq!(ts, vec![1, 10, 100]);
        assert!(snaps.iter().all(|s| s.placements.len() == 30));
    }

    #[test]
    fn finalize_drops_in_place_when_free() {
        let mut s = fixed((10, 10), &[(1, 1)]);
        let ant = add_ant(&mut s, (1, 1), Direction::East);
        s.vote_pick(ant).unwrap();
        s.finalize_positions().unwrap();
        assert_eq!(s.items[0].location, Location::OnGrid(GridCoord::new(1, 1)));
        assert_eq!(s.carried_count(), 0);
        s.check_invariants().unwrap();
    }

    #[test]
    fn finalize_prefers_the_nearest_cell() {
        // Carrier on an occupied cell: the north cell (distance 1) beats the
        // free north-west diagonal that comes first in row-major order.
        let mut s = fixed((10, 10), &[(5, 5), (5, 6), (1, 1)]);
        let ant = add_ant(&mut s, (1, 1), Direction::East);
        s.vote_pick(ant).unwrap();
        s.grid.take_agent(GridCoord::new(1, 1));
        s.grid.place_agent(GridCoord::new(5, 5), ant).unwrap();
        s.ants[0].pos = GridCoord::new(5, 5);
        s.finalize_positions().unwrap();
        assert_eq!(s.items[2].location, Location::OnGrid(GridCoord::new(5, 4)));
        s.check_invariants().unwrap();
    }

    #[test]
    fn nearest_free_cell_ties_and_wrap() {
        let dims = Dims::new(5, 5).unwrap();
        let mut g = Grid::new(dims);
        let ring: Vec<_> = dims.moore_ring(GridCoord::new(0, 0)).as_slice().to_vec();
        g.place_item(GridCoord::new(0, 0), ItemId(0)).unwrap();
        for (k, &(_, c)) in ring.iter().enumerate() {
            g.place_item(c, ItemId(k as u32 + 1)).unwrap();
        }
        // ring 2 offsets at distance 2: (0,-2) comes first in row-major order
        assert_eq!(nearest_free_cell(&g, GridCoord::new(0, 0)), Some(GridCoord::new(0, 3)));
        let mut full = Grid::new(Dims::new(1, 1).unwrap());
        full.place_item(GridCoord::new(0, 0), ItemId(0)).unwrap();
        assert_eq!(nearest_free_cell(&full, GridCoord::new(0, 0)), None);
    }
}
