//! On-disk artifacts: position tables, PGM renders, reports.

use std::fs::{self, File};
use std::io::{BufWriter, Read, Write};
use std::path::Path;

use crate::engine::{Placement, Role};
use crate::error::{Error, Result};
use crate::experiment::protocol::{Experiment, RunOutcome};
use crate::habitat::{Dims, GridCoord, ItemId};

/// One row of a positions table. `at` is `None` for a carried item.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct PositionRow {
    pub item: ItemId,
    pub at: Option<GridCoord>,
    pub role: Role,
    pub true_class: Option<u8>,
    pub predicted_class: Option<u8>,
}

const POSITIONS_HEADER: [&str; 6] = ["item_id", "x", "y", "role", "true_class", "predicted_class"];

fn csv_err(e: csv::Error) -> Error {
    Error::Internal(format!("csv write failed: {e}"))
}

fn opt<T: ToString>(v: Option<T>) -> String {
    v.map(|v| v.to_string()).unwrap_or_default()
}

/// Joins placements with predictions; `predicted` is indexed by item id.
pub fn position_rows(placements: &[Placement], predicted: &[Option<u8>]) -> Vec<PositionRow> {
    placements
        .iter()
        .map(|p| PositionRow {
            item: p.item,
            at: p.at,
            role: p.role,
            true_class: p.true_class,
            predicted_class: predicted.get(p.item.0 as usize).copied().flatten(),
        })
        .collect()
}

pub fn write_positions(out: impl Write, rows: &[PositionRow]) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(POSITIONS_HEADER).map_err(csv_err)?;
    for r in rows {
        w.write_record([
            r.item.0.to_string(),
            opt(r.at.map(|c| c.x)),
            opt(r.at.map(|c| c.y)),
            r.role.as_str().to_string(),
            opt(r.true_class),
            opt(r.predicted_class),
        ])
        .map_err(csv_err)?;
    }
    w.flush().map_err(|e| Error::Internal(e.to_string()))
}

pub fn read_positions(input: impl Read) -> Result<Vec<PositionRow>> {
    let mut r = csv::Reader::from_reader(input);
    let header = r.headers().map_err(|e| Error::Parse { line: 1, message: e.to_string() })?;
    if header.iter().ne(POSITIONS_HEADER) {
        return Err(Error::Parse {
            line: 1,
            message: format!("expected header {}", POSITIONS_HEADER.join(",")),
        });
    }
    let mut rows = Vec::new();
    for (i, rec) in r.records().enumerate() {
        let line = i + 2;
        let bad = |m: &str| Error::Parse { line, message: m.to_string() };
        let rec = rec.map_err(|e| bad(&e.to_string()))?;
        let field = |k: usize| rec.get(k).map(str::trim).unwrap_or("");
        let maybe = |k: usize| -> Result<Option<u32>> {
            match field(k) {
                "" => Ok(None),
                s => s.parse().map(Some).map_err(|_| bad(&format!("bad number {s:?}"))),
            }
        };
        let item = maybe(0)?.ok_or_else(|| bad("missing item_id"))?;
        let at = match (maybe(1)?, maybe(2)?) {
            (Some(x), Some(y)) => Some(GridCoord::new(x, y)),
            (None, None) => None,
            _ => return Err(bad("x and y must both be present or both empty")),
        };
        let role = match field(3) {
            "marker" => Role::Marker,
            "test" => Role::Test,
            other => return Err(bad(&format!("unknown role {other:?}"))),
        };
        let class = |k: usize| -> Result<Option<u8>> {
            maybe(k)?
                .map(|v| u8::try_from(v).map_err(|_| bad("class out of range")))
                .transpose()
        };
        rows.push(PositionRow {
            item: ItemId(item),
            at,
            role,
            true_class: class(4)?,
            predicted_class: class(5)?,
        });
    }
    Ok(rows)
}

/// Writes a plain (P2) graymap with maxval 255.
pub fn write_pgm(mut out: impl Write, dims: Dims, pixels: &[u8]) -> Result<()> {
    if pixels.len() != dims.area() {
        return Err(Error::Internal(format!(
            "{} pixels for a {}x{} image",
            pixels.len(),
            dims.width,
            dims.height
        )));
    }
    let io = |e: std::io::Error| Error::Internal(format!("pgm write failed: {e}"));
    writeln!(out, "P2\n{} {}\n255", dims.width, dims.height).map_err(io)?;
    for row in pixels.chunks(dims.width as usize) {
        // plain PGM lines stay under 70 characters
        let mut line = String::new();
        for v in row {
            let token = v.to_string();
            if !line.is_empty() && line.len() + 1 + token.len() > 70 {
                writeln!(out, "{line}").map_err(io)?;
                line.clear();
            }
            if !line.is_empty() {
                line.push(' ');
            }
            line.push_str(&token);
        }
        writeln!(out, "{line}").map_err(io)?;
    }
    Ok(())
}

/// Gray level of class `c`: 51 per class step, 255 for unlabelled items.
pub fn class_gray(class: Option<u8>) -> u8 {
    match class {
        Some(c @ 1..=5) => 51 * c,
        _ => 255,
    }
}

/// Item map (gray by true class) and role map (markers 255, tests 128).
pub fn render_maps(rows: &[PositionRow], dims: Dims) -> Result<(Vec<u8>, Vec<u8>)> {
    let mut items = vec![0u8; dims.area()];
    let mut roles = vec![0u8; dims.area()];
    for r in rows {
        let Some(at) = r.at else { continue };
        if !dims.contains(at) {
            return Err(Error::Validation(format!(
                "item {} at ({}, {}) lies outside the {}x{} grid",
                r.item.0, at.x, at.y, dims.width, dims.height
            )));
        }
        let i = dims.index(at);
        items[i] = class_gray(r.true_class);
        roles[i] = match r.role {
            Role::Marker => 255,
            Role::Test => 128,
        };
    }
    Ok((items, roles))
}

/// Pheromone scaled so the maximum maps to 255; an empty field stays black.
pub fn render_pheromone(field: &[f64]) -> Vec<u8> {
    let max = field.iter().copied().fold(0.0, f64::max);
    if max <= 0.0 {
        return vec![0; field.len()];
    }
    field.iter().map(|&p| (p / max * 255.0).round() as u8).collect()
}

fn create(path: &Path) -> Result<BufWriter<File>> {
    File::create(path).map(BufWriter::new).map_err(|e| Error::io(path, e))
}

fn write_text(path: &Path, text: &str) -> Result<()> {
    fs::write(path, text).map_err(|e| Error::io(path, e))
}

pub fn to_json(value: &impl serde::Serialize) -> String {
    let mut s = serde_json::to_string_pretty(value).expect("reports serialize");
    s.push('\n');
    s
}

/// Writes the positions table and both renders under `stem`.
pub fn export_frame(dir: &Path, stem: &str, rows: &[PositionRow], dims: Dims) -> Result<()> {
    write_positions(create(&dir.join(format!("positions_{stem}.csv")))?, rows)?;
    let (items, roles) = render_maps(rows, dims)?;
    write_pgm(create(&dir.join(format!("items_{stem}.pgm")))?, dims, &items)?;
    write_pgm(create(&dir.join(format!("roles_{stem}.pgm")))?, dims, &roles)
}

fn export_batch(dir: &Path, outcome: &RunOutcome) -> Result<()> {
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let digits = outcome.snapshots.last().map_or(1, |s| s.t.to_string().len());
    for snap in &outcome.snapshots {
        let rows = position_rows(&snap.placements, &[]);
        export_frame(dir, &format!("t{:0digits$}", snap.t), &rows, outcome.dims)?;
    }
    let n_markers = outcome.final_placements.len() - outcome.predictions.len();
    let mut predicted = vec![None; n_markers];
    predicted.extend(outcome.predictions.iter().map(|&p| Some(p)));
    let rows = position_rows(&outcome.final_placements, &predicted);
    export_frame(dir, "final", &rows, outcome.dims)?;
    write_pgm(
        create(&dir.join("pheromone.pgm"))?,
        outcome.dims,
        &render_pheromone(&outcome.pheromone),
    )?;
    let mut w = csv::Writer::from_writer(create(&dir.join("entropy.csv"))?);
    w.write_record(["t", "entropy"]).map_err(csv_err)?;
    for s in &outcome.snapshots {
        w.write_record([s.t.to_string(), s.entropy.to_string()]).map_err(csv_err)?;
    }
    w.flush().map_err(|e| Error::io(dir.join("entropy.csv"), e))
}

/// Writes everything a run produced under `dir`: `config.toml`,
/// `report.json`, `timings.json` and one `batch_NN/` directory per batch.
pub fn export_artifacts(dir: &Path, exp: &Experiment) -> Result<()> {
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    write_text(&dir.join("config.toml"), &exp.report.config.to_toml())?;
    write_text(&dir.join("report.json"), &to_json(&exp.report))?;
    write_text(&dir.join("timings.json"), &to_json(&exp.timings))?;
    for (i, outcome) in exp.outcomes.iter().enumerate() {
        export_batch(&dir.join(format!("batch_{i:02}")), outcome)?;
    }
    Ok(())
}
