//! The toroidal lattice the colony lives on.
//!
//! Every cell stores a pheromone level and at most one item and one agent.
//! All coordinate arithmetic wraps in both axes, so every cell has a full
//! Moore neighborhood. Rows grow downwards: `y = 0` is the top row, which is
//! also the first row of every rendered image.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Identifier of a data item. Items are numbered densely from zero.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct ItemId(pub u32);

/// Identifier of an ant. Ants are numbered densely from zero.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct AgentId(pub u32);

/// A wrapped cell position, always inside `[0, width) x [0, height)`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct GridCoord {
    pub x: u32,
    pub y: u32,
}

impl GridCoord {
    pub const fn new(x: u32, y: u32) -> Self {
        GridCoord { x, y }
    }
}

/// Width and height of a torus, in cells.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Dims {
    pub width: u32,
    pub height: u32,
}

impl Dims {
    pub fn new(width: u32, height: u32) -> Result<Self> {
        if width == 0 || height == 0 {
            return Err(Error::Config(format!(
                "grid dimensions must be positive, got {width}x{height}"
            )));
        }
        Ok(Dims { width, height })
    }

    pub fn area(&self) -> usize {
        self.width as usize * self.height as usize
    }

    pub fn contains(&self, c: GridCoord) -> bool {
        c.x < self.width && c.y < self.height
    }

    /// Wraps an arbitrary signed position back onto the torus.
    pub fn wrap(&self, x: i64, y: i64) -> GridCoord {
        GridCoord {
            x: x.rem_euclid(self.width as i64) as u32,
            y: y.rem_euclid(self.height as i64) as u32,
        }
    }

    pub fn offset(&self, c: GridCoord, dx: i64, dy: i64) -> GridCoord {
        self.wrap(c.x as i64 + dx, c.y as i64 + dy)
    }

    /// Row-major cell index.
    pub fn index(&self, c: GridCoord) -> usize {
        c.y as usize * self.width as usize + c.x as usize
    }

    pub fn coord(&self, index: usize) -> GridCoord {
        let w = self.width as usize;
        GridCoord {
            x: (index % w) as u32,
            y: (index / w) as u32,
        }
    }

    /// Squared toroidal distance. Exact, so it is the comparison key for
    /// anything that must break ties deterministically.
    pub fn distance_sq(&self, a: GridCoord, b: GridCoord) -> u64 {
        let dx = axis_gap(a.x, b.x, self.width);
        let dy = axis_gap(a.y, b.y, self.height);
        dx * dx + dy * dy
    }

    /// Offsets of the Moore neighborhood of `r`, in row-major offset order,
    /// with duplicates and the center removed. On grids of side 3 or more
    /// this is always the full 8-cell ring.
    pub fn moore_ring(&self, r: GridCoord) -> MooreRing {
        let mut ring = MooreRing {
            cells: [(Direction::East, r); 8],
            len: 0,
        };
        for &(dir, dx, dy) in &ROW_MAJOR {
            let c = self.offset(r, dx, dy);
            if c == r || ring.as_slice().iter().any(|&(_, seen)| seen == c) {
                continue;
            }
            ring.cells[ring.len] = (dir, c);
            ring.len += 1;
        }
        ring
    }
}

fn axis_gap(a: u32, b: u32, size: u32) -> u64 {
    let d = a.abs_diff(b) as u64;
    d.min(size as u64 - d)
}

/// Euclidean distance on the torus: each axis uses the shorter way round.
pub fn toroidal_distance(a: GridCoord, b: GridCoord, dims: Dims) -> f64 {
    (dims.distance_sq(a, b) as f64).sqrt()
}

/// The eight lattice headings, counter-clockwise from east in 45 degree
/// steps. North is `dy = -1`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Direction {
    East,
    NorthEast,
    North,
    NorthWest,
    West,
    SouthWest,
    South,
    SouthEast,
}

impl Direction {
    pub const ALL: [Direction; 8] = [
        Direction::East,
        Direction::NorthEast,
        Direction::North,
        Direction::NorthWest,
        Direction::West,
        Direction::SouthWest,
        Direction::South,
        Direction::SouthEast,
    ];

    /// Position in [`Direction::ALL`]; multiply by 45 for the angle.
    pub fn index(self) -> u8 {
        self as u8
    }

    pub fn from_index(i: u8) -> Direction {
        Direction::ALL[(i % 8) as usize]
    }

    pub fn delta(self) -> (i64, i64) {
        match self {
            Direction::East => (1, 0),
            Direction::NorthEast => (1, -1),
            Direction::North => (0, -1),
            Direction::NorthWest => (-1, -1),
            Direction::West => (-1, 0),
            Direction::SouthWest => (-1, 1),
            Direction::South => (0, 1),
            Direction::SouthEast => (1, 1),
        }
    }
}

const ROW_MAJOR: [(Direction, i64, i64); 8] = [
    (Direction::NorthWest, -1, -1),
    (Direction::North, 0, -1),
    (Direction::NorthEast, 1, -1),
    (Direction::West, -1, 0),
    (Direction::East, 1, 0),
    (Direction::SouthWest, -1, 1),
    (Direction::South, 0, 1),
    (Direction::SouthEast, 1, 1),
];

/// Up to eight distinct neighbor cells, each tagged with the heading that
/// reaches it.
#[derive(Clone, Copy, Debug)]
pub struct MooreRing {
    cells: [(Direction, GridCoord); 8],
    len: usize,
}

impl MooreRing {
    pub fn as_slice(&self) -> &[(Direction, GridCoord)] {
        &self.cells[..self.len]
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct Cell {
    pub pheromone: f64,
    pub item: Option<ItemId>,
    pub agent: Option<AgentId>,
}

/// Dense toroidal table of cells. The grid is its own spatial index.
#[derive(Clone, Debug, PartialEq)]
pub struct Grid {
    dims: Dims,
    cells: Vec<Cell>,
}

/// Side of the square grid offered to `n_items` objects: the smallest
/// square with at least four cells per object.
pub fn auto_side(n_items: usize) -> u32 {
    let area = 4 * n_items as u64;
    let mut side = (area as f64).sqrt() as u64;
    while side * side < area {
        side += 1;
    }
    while side > 0 && (side - 1) * (side - 1) >= area {
        side -= 1;
    }
    side as u32
}

impl Grid {
    pub fn new(dims: Dims) -> Self {
        Grid {
            dims,
            cells: vec![Cell::default(); dims.area()],
        }
    }

    /// Builds an empty grid for `n_items` objects, either from an explicit
    /// `(width, height)` or as a square of side `ceil(sqrt(4 n_items))`.
    pub fn create(n_items: usize, size: Option<(u32, u32)>) -> Result<Self> {
        let dims = match size {
            Some((w, h)) => Dims::new(w, h)?,
            None => {
                if n_items == 0 {
                    return Err(Error::Config("cannot size a grid for zero items".into()));
                }
                let side = auto_side(n_items);
                Dims::new(side, side)?
            }
        };
        Ok(Grid::new(dims))
    }

    pub fn dims(&self) -> Dims {
        self.dims
    }

    pub fn width(&self) -> u32 {
        self.dims.width
    }

    pub fn height(&self) -> u32 {
        self.dims.height
    }

    pub fn cell(&self, c: GridCoord) -> &Cell {
        &self.cells[self.dims.index(c)]
    }

    pub fn cells(&self) -> &[Cell] {
        &self.cells
    }

    pub fn item_at(&self, c: GridCoord) -> Option<ItemId> {
        self.cell(c).item
    }

    pub fn agent_at(&self, c: GridCoord) -> Option<AgentId> {
        self.cell(c).agent
    }

    pub fn pheromone(&self, c: GridCoord) -> f64 {
        self.cell(c).pheromone
    }

    pub fn place_item(&mut self, c: GridCoord, item: ItemId) -> Result<()> {
        let i = self.dims.index(c);
        match self.cells[i].item {
            Some(other) => Err(Error::Contract(format!(
                "cell ({}, {}) already holds item {}",
                c.x, c.y, other.0
            ))),
            None => {
                self.cells[i].item = Some(item);
                Ok(())
            }
        }
    }

    pub fn take_item(&mut self, c: GridCoord) -> Option<ItemId> {
        let i = self.dims.index(c);
        self.cells[i].item.take()
    }

    pub fn place_agent(&mut self, c: GridCoord, agent: AgentId) -> Result<()> {
        let i = self.dims.index(c);
        match self.cells[i].agent {
            Some(other) => Err(Error::Contract(format!(
                "cell ({}, {}) already holds agent {}",
                c.x, c.y, other.0
            ))),
            None => {
                self.cells[i].agent = Some(agent);
                Ok(())
            }
        }
    }

    pub fn take_agent(&mut self, c: GridCoord) -> Option<AgentId> {
        let i = self.dims.index(c);
        self.cells[i].agent.take()
    }

    /// Items in the Moore ring around `r`, center excluded, in row-major
    /// offset order. The length of the result is the neighborhood count `n`.
    pub fn neighborhood_items(&self, r: GridCoord) -> Vec<(GridCoord, ItemId)> {
        self.dims
            .moore_ring(r)
            .as_slice()
            .iter()
            .filter_map(|&(_, c)| self.item_at(c).map(|item| (c, item)))
            .collect()
    }

    pub fn neighborhood_count(&self, r: GridCoord) -> usize {
        self.dims
            .moore_ring(r)
            .as_slice()
            .iter()
            .filter(|&&(_, c)| self.item_at(c).is_some())
            .count()
    }

    pub fn add_pheromone(&mut self, c: GridCoord, amount: f64) {
        let i = self.dims.index(c);
        self.cells[i].pheromone += amount;
    }

    /// Multiplies every cell's pheromone by `factor`.
    pub fn scale_pheromone(&mut self, factor: f64) {
        for cell in &mut self.cells {
            cell.pheromone *= factor;
        }
    }

    pub fn pheromone_field(&self) -> impl Iterator<Item = f64> + '_ {
        self.cells.iter().map(|c| c.pheromone)
    }

    pub fn clear_pheromone(&mut self) {
        for cell in &mut self.cells {
            cell.pheromone = 0.0;
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn sizes_grids() {
        let g = Grid::create(800, Some((57, 57))).unwrap();
        assert_eq!((g.width(), g.height()), (57, 57));
        let g = Grid::create(1, None).unwrap();
        assert_eq!((g.width(), g.height()), (2, 2));
        // ceil(sqrt(47928)) = 219
        let g = Grid::create(11982, None).unwrap();
        assert_eq!((g.width(), g.height()), (219, 219));
        assert_eq!(auto_side(6092), 157);
        assert!(g.cells().iter().all(|c| *c == Cell::default()));
    }

    #[test]
    fn rejects_bad_dimensions() {
        assert!(matches!(Grid::create(10, Some((0, 5))), Err(Error::Config(_))));
        assert!(matches!(Grid::create(0, None), Err(Error::Config(_))));
    }

    #[test]
    fn neighborhood_excludes_center() {
        let mut g = Grid::new(Dims::new(10, 10).unwrap());
        let r = GridCoord::new(0, 0);
        assert!(g.neighborhood_items(r).is_empty());
        g.place_item(r, ItemId(0)).unwrap();
        assert!(g.neighborhood_items(r).is_empty());
        for (k, &(_, c)) in g.dims().moore_ring(r).as_slice().iter().enumerate() {
            g.place_item(c, ItemId(k as u32 + 1)).unwrap();
        }
        let n = g.neighborhood_items(r);
        assert_eq!(n.len(), 8);
        // row-major over wrapped offsets, starting at the north-west corner
        assert_eq!(n[0].0, GridCoord::new(9, 9));
        assert_eq!(n[7].0, GridCoord::new(1, 1));
        assert_eq!(g.neighborhood_count(r), 8);
    }

    #[test]
    fn tiny_grids_do_not_double_count() {
        let dims = Dims::new(2, 2).unwrap();
        let ring = dims.moore_ring(GridCoord::new(0, 0));
        assert_eq!(ring.as_slice().len(), 3);
        let dims = Dims::new(1, 1).unwrap();
        assert!(dims.moore_ring(GridCoord::new(0, 0)).as_slice().is_empty());
    }

    #[test]
    fn distance_examples() {
        let d = Dims::new(57, 57).unwrap();
        let o = GridCoord::new(0, 0);
        assert_eq!(toroidal_distance(o, o, d), 0.0);
        assert_eq!(toroidal_distance(o, GridCoord::new(56, 0), d), 1.0);
        let diag = toroidal_distance(o, GridCoord::new(28, 28), d);
        assert!((diag - (2.0f64 * 28.0 * 28.0).sqrt()).abs() < 1e-12);
        assert!((diag - 39.598).abs() < 1e-3);
    }

    #[test]
    fn occupancy_is_exclusive() {
        let mut g = Grid::new(Dims::new(3, 3).unwrap());
        let c = GridCoord::new(1, 2);
        g.place_item(c, ItemId(1)).unwrap();
        assert!(g.place_item(c, ItemId(2)).is_err());
        g.place_agent(c, AgentId(0)).unwrap();
        assert!(g.place_agent(c, AgentId(1)).is_err());
        assert_eq!(g.take_item(c), Some(ItemId(1)));
        assert_eq!(g.take_item(c), None);
        g.place_item(c, ItemId(2)).unwrap();
    }

    /// Distance to the nearest of the nine tiled copies of `b`.
    fn tiled_distance_sq(a: GridCoord, b: GridCoord, w: u32, h: u32) -> u64 {
        let mut best = u64::MAX;
        for ty in -1i64..=1 {
            for tx in -1i64..=1 {
                let bx = b.x as i64 + tx * w as i64;
                let by = b.y as i64 + ty * h as i64;
                let dx = a.x as i64 - bx;
                let dy = a.y as i64 - by;
                best = best.min((dx * dx + dy * dy) as u64);
            }
        }
        best
    }

    fn coord_in(w: u32, h: u32) -> impl Strategy<Value = GridCoord> {
        (0..w, 0..h).prop_map(|(x, y)| GridCoord::new(x, y))
    }

    fn dims_and_points(n: usize) -> impl Strategy<Value = (Dims, Vec<GridCoord>)> {
        (1u32..80, 1u32..80).prop_flat_map(move |(w, h)| {
            (
                Just(Dims::new(w, h).unwrap()),
                proptest::collection::vec(coord_in(w, h), n),
            )
        })
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(2000))]

        #[test]
        fn matches_tiled_copies((dims, pts) in dims_and_points(2)) {
            let (a, b) = (pts[0], pts[1]);
            prop_assert_eq!(dims.distance_sq(a, b), tiled_distance_sq(a, b, dims.width, dims.height));
        }

        #[test]
        fn is_a_metric((dims, pts) in dims_and_points(3)) {
            let (a, b, c) = (pts[0], pts[1], pts[2]);
            let d = |p, q| toroidal_distance(p, q, dims);
            prop_assert_eq!(d(a, b), d(b, a));
            prop_assert!(d(a, c) <= d(a, b) + d(b, c) + 1e-12);
        }

        #[test]
        fn wrapping_closes(w in 1u32..100, h in 1u32..100, x in -1000i64..1000, y in -1000i64..1000) {
            let dims = Dims::new(w, h).unwrap();
            let c = dims.wrap(x, y);
            prop_assert!(dims.contains(c));
            prop_assert_eq!(dims.coord(dims.index(c)), c);
        }

        #[test]
        fn occupancy_never_doubles(ops in proptest::collection::vec((0u32..4, 0u32..4, 0u32..6, any::<bool>()), 1..200)) {
            let mut g = Grid::new(Dims::new(4, 4).unwrap());
            let mut placed = std::collections::HashSet::new();
            for (x, y, id, insert) in ops {
                let c = GridCoord::new(x, y);
                if insert {
                    if !placed.contains(&id) && g.place_item(c, ItemId(id)).is_ok() {
                        placed.insert(id);
                    }
                } else if let Some(ItemId(id)) = g.take_item(c) {
                    placed.remove(&id);
                }
                let mut seen = std::collections::HashSet::new();
                for cell in g.cells() {
                    if let Some(item) = cell.item {
                        prop_assert!(seen.insert(item));
                    }
                }
                prop_assert_eq!(seen.len(), placed.len());
            }
        }
    }
}
