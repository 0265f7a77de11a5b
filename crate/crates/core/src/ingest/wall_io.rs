//! Plain-text wall models.
//!
//! One wall per line as `x1 y1 x2 y2` (meters). `#` starts a comment and
//! `floor <id>` opens a new floor section; walls before any header belong to
//! floor `0`. Coordinates are written with the shortest representation that
//! parses back to the same `f64`, so save/load round trips are bit-exact.

use std::fmt::Write as _;
use std::path::Path;

use super::WallModel;
use crate::error::{Error, Result};
use crate::geometry::{LineSegment2, Point2};

pub fn parse_building(text: &str, source_name: &str) -> Result<Vec<WallModel>> {
    let mut floors: Vec<WallModel> = Vec::new();
    for (idx, raw) in text.lines().enumerate() {
        let line_no = idx + 1;
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let mut tokens = line.split_whitespace();
        if line.starts_with("floor") {
            tokens.next();
            let id = match (tokens.next(), tokens.next()) {
                (Some(id), None) => id.to_string(),
                _ => return Err(Error::parse(source_name, line_no, format!("expected `floor <id>`, got `{line}`"))),
            };
            if floors.iter().any(|f| f.floor_id == id) {
                return Err(Error::parse(source_name, line_no, format!("duplicate floor id `{id}`")));
            }
            floors.push(WallModel::new(id, Vec::new()));
            continue;
        }
        let vals: Vec<f64> = tokens
            .map(|t| t.parse::<f64>())
            .collect::<std::result::Result<_, _>>()
            .map_err(|e| Error::parse(source_name, line_no, format!("bad number in `{line}`: {e}")))?;
        if vals.len() != 4 {
            return Err(Error::parse(
                source_name,
                line_no,
                format!("expected 4 values `x1 y1 x2 y2`, got {} in `{line}`", vals.len()),
            ));
        }
        let seg = LineSegment2::new(Point2::new(vals[0], vals[1]), Point2::new(vals[2], vals[3]))
            .map_err(|e| Error::parse(source_name, line_no, e.to_string()))?;
        if floors.is_empty() {
            floors.push(WallModel::new("0", Vec::new()));
        }
        floors.last_mut().expect("floor exists").walls.push(seg);
    }
    if floors.is_empty() || floors.iter().any(|f| f.walls.is_empty()) {
        return Err(Error::EmptyModel);
    }
    Ok(floors)
}

pub fn format_building(floors: &[WallModel]) -> String {
    let mut out = String::new();
    for f in floors {
        let _ = writeln!(out, "floor {}", f.floor_id);
        for w in &f.walls {
            let _ = writeln!(out, "{} {} {} {}", w.p0.x, w.p0.y, w.p1.x, w.p1.y);
        }
    }
    out
}

pub fn load_building(path: impl AsRef<Path>) -> Result<Vec<WallModel>> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_building(&text, &path.display().to_string())
}

/// Loads a file holding exactly one floor.
pub fn load_wall_model(path: impl AsRef<Path>) -> Result<WallModel> {
    let mut floors = load_building(path.as_ref())?;
    if floors.len() != 1 {
        return Err(Error::InvalidArgument(format!(
            "{} holds {} floors; load it as a building",
            path.as_ref().display(),
            floors.len()
        )));
    }
    Ok(floors.remove(0))
}

pub fn save_building(floors: &[WallModel], path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    std::fs::write(path, format_building(floors)).map_err(|e| Error::io(path, e))
}

pub fn save_wall_model(model: &WallModel, path: impl AsRef<Path>) -> Result<()> {
    save_building(std::slice::from_ref(model), path)
}
