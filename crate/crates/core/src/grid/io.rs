//! Plain-text grid files.
//!
//! ```text
//! cells_x,cells_y,cell_size_m,origin_x_m,origin_y_m
//! h00,h01,...
//! ...
//! ```
//!
//! Line 1 carries the five geometry values; the literal column-name line
//! shown above may optionally precede it. Then one line per grid row, row 0
//! first, each holding `cells_x` heights in meters.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use super::{GridError, GridGeometry, HeightMap, Result};
use crate::geom::Vec2;

pub const GRID_HEADER: &str = "cells_x,cells_y,cell_size_m,origin_x_m,origin_y_m";

pub fn load_grid(path: impl AsRef<Path>) -> Result<HeightMap> {
    let text = fs::read_to_string(path)?;
    parse_grid(&text)
}

pub fn save_grid(map: &HeightMap, path: impl AsRef<Path>) -> Result<()> {
    fs::write(path, write_grid(map))?;
    Ok(())
}

/// Serializes with shortest round-trip float formatting, so
/// `parse_grid(&write_grid(m)) == m` bit for bit.
pub fn write_grid(map: &HeightMap) -> String {
    let g = map.geometry();
    let mut out = String::with_capacity(g.len() * 12);
    let o = g.origin();
    let _ = writeln!(
        out,
        "{},{},{},{},{}",
        g.width_cells(),
        g.height_cells(),
        g.cell_size(),
        o.x,
        o.y
    );
    for row in map.heights().chunks(g.width_cells()) {
        for (c, h) in row.iter().enumerate() {
            if c > 0 {
                out.push(',');
            }
            let _ = write!(out, "{h}");
        }
        out.push('\n');
    }
    out
}

pub fn parse_grid(text: &str) -> Result<HeightMap> {
    let mut lines = text
        .lines()
        .enumerate()
        .map(|(i, l)| (i + 1, l.trim_end_matches('\r')))
        .filter(|(_, l)| !l.trim().is_empty());

    let (mut line_no, mut header) = lines
        .next()
        .ok_or_else(|| parse_err(1, 1, "empty grid file"))?;
    if header.trim() == GRID_HEADER {
        (line_no, header) = lines
            .next()
            .ok_or_else(|| parse_err(line_no + 1, 1, "missing geometry line"))?;
    }
    let fields: Vec<&str> = header.split(',').map(str::trim).collect();
    if fields.len() != 5 {
        return Err(parse_err(
            line_no,
            fields.len().min(5) + 1,
            &format!("expected 5 geometry fields, found {}", fields.len()),
        ));
    }
    let cells_x = parse_usize(fields[0], line_no, 1)?;
    let cells_y = parse_usize(fields[1], line_no, 2)?;
    let cell_size = parse_f64(fields[2], line_no, 3)?;
    let ox = parse_f64(fields[3], line_no, 4)?;
    let oy = parse_f64(fields[4], line_no, 5)?;
    let geometry = GridGeometry::new(cells_x, cells_y, cell_size, Vec2::new(ox, oy))
        .map_err(|e| parse_err(line_no, 1, &e.to_string()))?;

    let mut heights = Vec::with_capacity(geometry.len());
    let mut last_line = line_no;
    for row in 0..cells_y {
        let (line_no, line) = lines.next().ok_or_else(|| {
            parse_err(
                last_line + 1,
                1,
                &format!("expected {cells_y} height rows, found {row}"),
            )
        })?;
        last_line = line_no;
        let values: Vec<&str> = line.split(',').collect();
        if values.len() != cells_x {
            return Err(parse_err(
                line_no,
                values.len().min(cells_x) + 1,
                &format!("expected {cells_x} values, found {}", values.len()),
            ));
        }
        for (col, v) in values.iter().enumerate() {
            let h = parse_f64(v.trim(), line_no, col + 1)?;
            if h < 0.0 {
                return Err(GridError::NegativeHeight {
                    row,
                    column: col,
                    value: h,
                });
            }
            heights.push(h);
        }
    }
    if let Some((line_no, _)) = lines.next() {
        return Err(parse_err(line_no, 1, "unexpected trailing row"));
    }
    HeightMap::new(geometry, heights)
}

fn parse_err(line: usize, column: usize, message: &str) -> GridError {
    GridError::Parse {
        line,
        column,
        message: message.to_string(),
    }
}

fn parse_usize(s: &str, line: usize, column: usize) -> Result<usize> {
    s.parse()
        .map_err(|_| parse_err(line, column, &format!("'{s}' is not a cell count")))
}

fn parse_f64(s: &str, line: usize, column: usize) -> Result<f64> {
    let v: f64 = s
        .parse()
        .map_err(|_| parse_err(line, column, &format!("'{s}' is not a number")))?;
    if !v.is_finite() {
        return Err(parse_err(line, column, &format!("'{s}' is not finite")));
    }
    Ok(v)
}
