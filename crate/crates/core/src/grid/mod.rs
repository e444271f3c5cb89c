//! Height-map data model.
//!
//! A [`HeightMap`] stores the average material height of every cell of a
//! regular planar grid described by a [`GridGeometry`]. Cells are addressed
//! row-major: index `r * width_cells + c`, with row 0 at the lowest `y`.
//! [`HeightMap::normalize`] turns a map into the probability distribution
//! consumed by the transport solver.

mod font;
mod io;
mod shapes;

pub use font::{glyph, GLYPH_COLS, GLYPH_ROWS};
pub use io::{load_grid, parse_grid, save_grid, write_grid};
pub use shapes::{
    disc_cells, generate_source, generate_target, letter_cells, SourceKind, TargetKind,
    DEFAULT_BLOB_RADIUS, DEFAULT_GAUSSIAN_SIGMA, DEFAULT_MULTI_BLOB_RADIUS,
};

use crate::geom::Vec2;
use thiserror::Error;

/// Absolute tolerance on the sum of a [`NormalizedDistribution`].
pub const NORMALIZATION_TOL: f64 = 1e-9;

#[derive(Debug, Error)]
pub enum GridError {
    #[error("height map has zero total mass")]
    ZeroMass,
    #[error("invalid grid geometry: {0}")]
    InvalidGeometry(String),
    #[error("infeasible geometry: {0}")]
    InfeasibleGeometry(String),
    #[error("expected {expected} cells, found {found}")]
    LengthMismatch { expected: usize, found: usize },
    #[error("negative height {value} at row {row}, column {column}")]
    NegativeHeight {
        row: usize,
        column: usize,
        value: f64,
    },
    #[error("non-finite height at row {row}, column {column}")]
    NonFiniteHeight { row: usize, column: usize },
    #[error("parse error at line {line}, column {column}: {message}")]
    Parse {
        line: usize,
        column: usize,
        message: String,
    },
    #[error("geometry mismatch between height maps")]
    GeometryMismatch,
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T, E = GridError> = std::result::Result<T, E>;

/// Regular grid layout. `origin` is the center of cell `(0, 0)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GridGeometry {
    width_cells: usize,
    height_cells: usize,
    cell_size: f64,
    origin: Vec2,
}

impl GridGeometry {
    pub fn new(
        width_cells: usize,
        height_cells: usize,
        cell_size: f64,
        origin: Vec2,
    ) -> Result<Self> {
        if width_cells == 0 || height_cells == 0 {
            return Err(GridError::InvalidGeometry(format!(
                "grid must have at least one cell, got {width_cells}x{height_cells}"
            )));
        }
        if !(cell_size.is_finite() && cell_size > 0.0) {
            return Err(GridError::InvalidGeometry(format!(
                "cell size must be positive, got {cell_size}"
            )));
        }
        if !origin.is_finite() {
            return Err(GridError::InvalidGeometry("origin must be finite".into()));
        }
        Ok(Self {
            width_cells,
            height_cells,
            cell_size,
            origin,
        })
    }

    /// Square grid whose lower-left workspace corner sits at `(0, 0)`.
    pub fn square(cells: usize, cell_size: f64) -> Result<Self> {
        Self::new(
            cells,
            cells,
            cell_size,
            Vec2::new(cell_size / 2.0, cell_size / 2.0),
        )
    }

    pub fn width_cells(&self) -> usize {
        self.width_cells
    }

    pub fn height_cells(&self) -> usize {
        self.height_cells
    }

    pub fn cell_size(&self) -> f64 {
        self.cell_size
    }

    pub fn origin(&self) -> Vec2 {
        self.origin
    }

    pub fn cell_area(&self) -> f64 {
        self.cell_size * self.cell_size
    }

    /// Number of cells.
    pub fn len(&self) -> usize {
        self.width_cells * self.height_cells
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn index(&self, row: usize, col: usize) -> usize {
        debug_assert!(row < self.height_cells && col < self.width_cells);
        row * self.width_cells + col
    }

    pub fn row_col(&self, index: usize) -> (usize, usize) {
        (index / self.width_cells, index % self.width_cells)
    }

    pub fn cell_center(&self, index: usize) -> Vec2 {
        let (r, c) = self.row_col(index);
        self.center_of(r, c)
    }

    pub fn center_of(&self, row: usize, col: usize) -> Vec2 {
        self.origin + Vec2::new(col as f64 * self.cell_size, row as f64 * self.cell_size)
    }

    pub fn centers(&self) -> impl Iterator<Item = Vec2> + '_ {
        (0..self.len()).map(|i| self.cell_center(i))
    }

    /// Lower-left and upper-right corners of the workspace covered by the cells.
    pub fn bounds(&self) -> (Vec2, Vec2) {
        let half = self.cell_size / 2.0;
        let lo = self.origin - Vec2::new(half, half);
        let hi = self.origin
            + Vec2::new(
                (self.width_cells as f64 - 1.0) * self.cell_size + half,
                (self.height_cells as f64 - 1.0) * self.cell_size + half,
            );
        (lo, hi)
    }

    pub fn workspace_center(&self) -> Vec2 {
        let (lo, hi) = self.bounds();
        (lo + hi) * 0.5
    }

    pub fn contains(&self, p: Vec2) -> bool {
        let (lo, hi) = self.bounds();
        let eps = 1e-12 * self.cell_size;
        p.x >= lo.x - eps && p.x <= hi.x + eps && p.y >= lo.y - eps && p.y <= hi.y + eps
    }

    /// Index of the cell whose square contains `p`; points outside the
    /// workspace are clamped onto the nearest boundary cell.
    pub fn cell_containing(&self, p: Vec2) -> usize {
        let rel = p - self.origin;
        let col = clamp_cell((rel.x / self.cell_size).round(), self.width_cells);
        let row = clamp_cell((rel.y / self.cell_size).round(), self.height_cells);
        self.index(row, col)
    }
}

fn clamp_cell(v: f64, n: usize) -> usize {
    if v.is_nan() || v <= 0.0 {
        0
    } else {
        (v as usize).min(n - 1)
    }
}

impl Default for GridGeometry {
    /// 0.5 m x 0.5 m workspace at 2 cm resolution.
    fn default() -> Self {
        Self::square(25, 0.02).expect("default geometry is valid")
    }
}

/// Grid of nonnegative material heights in meters.
#[derive(Debug, Clone, PartialEq)]
pub struct HeightMap {
    geometry: GridGeometry,
    heights: Vec<f64>,
}

impl HeightMap {
    pub fn new(geometry: GridGeometry, heights: Vec<f64>) -> Result<Self> {
        if heights.len() != geometry.len() {
            return Err(GridError::LengthMismatch {
                expected: geometry.len(),
                found: heights.len(),
            });
        }
        for (i, &h) in heights.iter().enumerate() {
            let (row, column) = geometry.row_col(i);
            if !h.is_finite() {
                return Err(GridError::NonFiniteHeight { row, column });
            }
            if h < 0.0 {
                return Err(GridError::NegativeHeight {
                    row,
                    column,
                    value: h,
                });
            }
        }
        Ok(Self { geometry, heights })
    }

    pub fn zeros(geometry: GridGeometry) -> Self {
        Self {
            geometry,
            heights: vec![0.0; geometry.len()],
        }
    }

    /// Caller guarantees every entry is finite and nonnegative.
    pub(crate) fn from_raw(geometry: GridGeometry, heights: Vec<f64>) -> Self {
        debug_assert_eq!(heights.len(), geometry.len());
        debug_assert!(heights.iter().all(|h| h.is_finite() && *h >= 0.0));
        Self { geometry, heights }
    }

    pub fn geometry(&self) -> &GridGeometry {
        &self.geometry
    }

    pub fn heights(&self) -> &[f64] {
        &self.heights
    }

    pub fn into_heights(self) -> Vec<f64> {
        self.heights
    }

    pub fn height(&self, index: usize) -> f64 {
        self.heights[index]
    }

    /// Material volume in cubic meters.
    pub fn total_mass(&self) -> f64 {
        self.height_sum() * self.geometry.cell_area()
    }

    pub fn height_sum(&self) -> f64 {
        self.heights.iter().sum()
    }

    pub fn max_height(&self) -> f64 {
        self.heights.iter().copied().fold(0.0, f64::max)
    }

    /// Multiplies every height by `factor` (must be nonnegative and finite).
    pub fn scaled(&self, factor: f64) -> HeightMap {
        assert!(
            factor.is_finite() && factor >= 0.0,
            "scale factor must be nonnegative"
        );
        HeightMap::from_raw(
            self.geometry,
            self.heights.iter().map(|h| h * factor).collect(),
        )
    }

    /// Rescales the map to carry exactly `mass` cubic meters.
    pub fn with_total_mass(&self, mass: f64) -> Result<HeightMap> {
        let current = self.total_mass();
        if current <= 0.0 {
            return Err(GridError::ZeroMass);
        }
        Ok(self.scaled(mass / current))
    }

    pub fn normalize(&self) -> Result<NormalizedDistribution> {
        normalize(self)
    }
}

/// Height map divided by its sum: nonnegative weights summing to one.
#[derive(Debug, Clone, PartialEq)]
pub struct NormalizedDistribution {
    geometry: GridGeometry,
    weights: Vec<f64>,
}

impl NormalizedDistribution {
    /// Validates that `weights` are nonnegative and sum to one within
    /// [`NORMALIZATION_TOL`].
    pub fn from_weights(geometry: GridGeometry, weights: Vec<f64>) -> Result<Self> {
        if weights.len() != geometry.len() {
            return Err(GridError::LengthMismatch {
                expected: geometry.len(),
                found: weights.len(),
            });
        }
        for (i, &w) in weights.iter().enumerate() {
            let (row, column) = geometry.row_col(i);
            if !w.is_finite() {
                return Err(GridError::NonFiniteHeight { row, column });
            }
            if w < 0.0 {
                return Err(GridError::NegativeHeight {
                    row,
                    column,
                    value: w,
                });
            }
        }
        let sum: f64 = weights.iter().sum();
        if (sum - 1.0).abs() > NORMALIZATION_TOL {
            return Err(GridError::InvalidGeometry(format!(
                "weights sum to {sum}, expected 1"
            )));
        }
        Ok(Self { geometry, weights })
    }

    pub fn geometry(&self) -> &GridGeometry {
        &self.geometry
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }

    pub fn sum(&self) -> f64 {
        self.weights.iter().sum()
    }
}

/// `weights_i = heights_i / sum(heights)`.
pub fn normalize(map: &HeightMap) -> Result<NormalizedDistribution> {
    let sum = map.height_sum();
    if sum.is_nan() || sum <= 0.0 {
        return Err(GridError::ZeroMass);
    }
    let weights = map.heights.iter().map(|h| h / sum).collect();
    Ok(NormalizedDistribution {
        geometry: map.geometry,
        weights,
    })
}
