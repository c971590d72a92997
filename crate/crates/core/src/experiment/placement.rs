//! Initial layouts that seed markers into per-class zones.

use rand::seq::index;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::experiment::config::MarkerPlacement;
use crate::habitat::{Dims, GridCoord};

/// The cells of each class zone (index = class − 1), row-major.
pub fn zones(dims: Dims, mode: MarkerPlacement) -> Result<Vec<Vec<GridCoord>>> {
    let rect = |x0: u32, y0: u32, w: u32, h: u32| -> Vec<GridCoord> {
        (y0..y0 + h)
            .flat_map(|y| (x0..x0 + w).map(move |x| GridCoord::new(x, y)))
            .collect()
    };
    let (w, h) = (dims.width, dims.height);
    match mode {
        MarkerPlacement::Random => Err(Error::Config("random placement has no zones".into())),
        MarkerPlacement::FiveBox => {
            let (bw, bh) = (w / 3, h / 3);
            if bw == 0 || bh == 0 {
                return Err(Error::Config(format!("a {w}x{h} grid is too small for five boxes")));
            }
            Ok(vec![
                rect(0, h - bh, bw, bh),
                rect(0, 0, bw, bh),
                rect(w - bw, 0, bw, bh),
                rect(w - bw, h - bh, bw, bh),
                rect((w - bw) / 2, (h - bh) / 2, bw, bh),
            ])
        }
        MarkerPlacement::TenStripe => {
            let sw = w / 10;
            if sw == 0 {
                return Err(Error::Config(format!("a {w}-wide grid is too narrow for ten stripes")));
            }
            Ok((0..5)
                .map(|c| {
                    let mut cells = rect(c * sw, 0, sw, h);
                    cells.extend(rect((c + 5) * sw, 0, sw, h));
                    cells
                })
                .collect())
        }
    }
}

/// Positions for `marker_classes.len()` markers followed by `n_tests` test
/// items. Markers land uniformly inside their class zone, test items
/// uniformly anywhere still free.
pub fn place_markers_zoned(
    marker_classes: &[u8],
    n_tests: usize,
    dims: Dims,
    mode: MarkerPlacement,
    seed: u64,
) -> Result<Vec<GridCoord>> {
    let zones = zones(dims, mode)?;
    if let Some(bad) = marker_classes.iter().find(|&&k| !(1..=5).contains(&k)) {
        return Err(Error::Config(format!("zoned placement needs classes 1..=5, got {bad}")));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut taken = vec![false; dims.area()];
    let mut out = vec![GridCoord::new(0, 0); marker_classes.len()];
    for (c, zone) in zones.iter().enumerate() {
        let members: Vec<usize> = marker_classes
            .iter()
            .enumerate()
            .filter(|&(_, &k)| k as usize == c + 1)
            .map(|(i, _)| i)
            .collect();
        if members.len() > zone.len() {
            return Err(Error::Config(format!(
                "{} class-{} markers overflow a zone of {} cells",
                members.len(),
                c + 1,
                zone.len()
            )));
        }
        for (m, z) in members.iter().zip(index::sample(&mut rng, zone.len(), members.len())) {
            out[*m] = zone[z];
            taken[dims.index(zone[z])] = true;
        }
    }
    let free: Vec<usize> = (0..dims.area()).filter(|&i| !taken[i]).collect();
    if n_tests > free.len() {
        return Err(Error::Config(format!(
            "{n_tests} test items do not fit in {} free cells",
            free.len()
        )));
    }
    out.extend(
        index::sample(&mut rng, free.len(), n_tests)
            .into_iter()
            .map(|i| dims.coord(free[i])),
    );
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::collections::HashSet;

    fn classes(per: usize) -> Vec<u8> {
        (1..=5u8).flat_map(|c| std::iter::repeat_n(c, per)).collect()
    }

    #[test]
    fn five_box_layout() {
        let dims = Dims::new(57, 57).unwrap();
        let cls = classes(40);
        let pos = place_markers_zoned(&cls, 100, dims, MarkerPlacement::FiveBox, 4).unwrap();
        assert_eq!(pos.len(), 300);
        let unique: HashSet<_> = pos.iter().collect();
        assert_eq!(unique.len(), 300);
        for (p, &c) in pos.iter().zip(&cls) {
            let inside = match c {
                1 => p.x < 19 && p.y >= 38,
                2 => p.x < 19 && p.y < 19,
                3 => p.x >= 38 && p.y < 19,
                4 => p.x >= 38 && p.y >= 38,
                _ => (19..38).contains(&p.x) && (19..38).contains(&p.y),
            };
            assert!(inside, "class {c} at {p:?}");
        }
    }

    #[test]
    fn ten_stripe_layout() {
        let dims = Dims::new(60, 20).unwrap();
        let cls = classes(30);
        let pos = place_markers_zoned(&cls, 10, dims, MarkerPlacement::TenStripe, 1).unwrap();
        for c in 1..=5u8 {
            let stripes: HashSet<u32> = pos
                .iter()
                .zip(&cls)
                .filter(|&(_, &k)| k == c)
                .map(|(p, _)| p.x / 6)
                .collect();
            assert_eq!(stripes, HashSet::from([c as u32 - 1, c as u32 + 4]));
        }
    }

    #[test]
    fn overflow_and_random_are_rejected() {
        let dims = Dims::new(9, 9).unwrap();
        assert!(place_markers_zoned(&classes(10), 0, dims, MarkerPlacement::FiveBox, 0).is_err());
        assert!(place_markers_zoned(&classes(1), 0, dims, MarkerPlacement::Random, 0).is_err());
    }
}
