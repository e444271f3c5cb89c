use std::fmt;

use super::{PlannerError, Result};
use crate::geom::Vec2;
use crate::grid::GridGeometry;

/// Straight-line sweep of a spatula held perpendicular to the motion.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SweepAction {
    start: Vec2,
    end: Vec2,
    spatula_width: f64,
}

impl SweepAction {
    pub fn new(start: Vec2, end: Vec2, spatula_width: f64) -> Result<Self> {
        if !(start.is_finite() && end.is_finite()) {
            return Err(PlannerError::InvalidSweep(
                "sweep end points must be finite".into(),
            ));
        }
        if !(spatula_width.is_finite() && spatula_width > 0.0) {
            return Err(PlannerError::InvalidSweep(format!(
                "spatula width must be positive, got {spatula_width}"
            )));
        }
        if (end - start).norm() <= 0.0 {
            return Err(PlannerError::InvalidSweep("sweep has zero length".into()));
        }
        Ok(Self {
            start,
            end,
            spatula_width,
        })
    }

    pub fn start(&self) -> Vec2 {
        self.start
    }

    pub fn end(&self) -> Vec2 {
        self.end
    }

    pub fn spatula_width(&self) -> f64 {
        self.spatula_width
    }

    pub fn length(&self) -> f64 {
        (self.end - self.start).norm()
    }

    pub fn direction(&self) -> Vec2 {
        (self.end - self.start) * (1.0 / self.length())
    }

    /// Whether the sweep's center line stays inside the workspace.
    pub fn within(&self, geometry: &GridGeometry) -> bool {
        geometry.contains(self.start) && geometry.contains(self.end)
    }

    /// The part of the center line inside the workspace, or `None` if
    /// nothing of positive length remains.
    pub fn clipped_to(&self, geometry: &GridGeometry) -> Option<SweepAction> {
        let (lo, hi) = geometry.bounds();
        let d = self.end - self.start;
        // Liang-Barsky against the workspace rectangle.
        let mut t0 = 0.0f64;
        let mut t1 = 1.0f64;
        for (p, q) in [
            (-d.x, self.start.x - lo.x),
            (d.x, hi.x - self.start.x),
            (-d.y, self.start.y - lo.y),
            (d.y, hi.y - self.start.y),
        ] {
            if p == 0.0 {
                if q < 0.0 {
                    return None;
                }
            } else {
                let r = q / p;
                if p < 0.0 {
                    t0 = t0.max(r);
                } else {
                    t1 = t1.min(r);
                }
            }
        }
        if t0 >= t1 {
            return None;
        }
        if t0 == 0.0 && t1 == 1.0 {
            return Some(*self);
        }
        SweepAction::new(self.start + d * t0, self.start + d * t1, self.spatula_width).ok()
    }
}

impl fmt::Display for SweepAction {
    /// `start_x,start_y,end_x,end_y,width`
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{},{},{},{},{}",
            self.start.x, self.start.y, self.end.x, self.end.y, self.spatula_width
        )
    }
}

/// Cells whose centers fall inside the rectangle swept by an action.
#[derive(Debug, Clone)]
pub struct SweepPatch {
    action: SweepAction,
    direction: Vec2,
    length: f64,
    cells: Vec<usize>,
    member: Vec<bool>,
    geometry: GridGeometry,
}

impl SweepPatch {
    /// A cell belongs to the patch iff its center's along-track coordinate
    /// is in `[0, length]` and its cross-track offset in `[-w/2, w/2]`.
    pub fn new(action: SweepAction, geometry: &GridGeometry) -> Self {
        let direction = action.direction();
        let normal = direction.perp();
        let length = action.length();
        let half = action.spatula_width / 2.0;
        let tol = 1e-9 * geometry.cell_size();
        let mut member = vec![false; geometry.len()];
        let mut cells = Vec::new();
        for (i, p) in geometry.centers().enumerate() {
            let rel = p - action.start;
            let along = rel.dot(direction);
            let cross = rel.dot(normal);
            if along >= -tol && along <= length + tol && cross.abs() <= half + tol {
                member[i] = true;
                cells.push(i);
            }
        }
        Self {
            action,
            direction,
            length,
            cells,
            member,
            geometry: *geometry,
        }
    }

    pub fn action(&self) -> &SweepAction {
        &self.action
    }

    /// Unit vector from start to end shared by every cell of the patch.
    pub fn direction(&self) -> Vec2 {
        self.direction
    }

    pub fn cells(&self) -> &[usize] {
        &self.cells
    }

    pub fn contains(&self, cell: usize) -> bool {
        self.member.get(cell).copied().unwrap_or(false)
    }

    pub fn geometry(&self) -> &GridGeometry {
        &self.geometry
    }

    /// Where the simple push model sends the material of `cell`: straight
    /// ahead onto the sweep's end edge. Returns `(t_fw, predicted_end)`.
    pub fn push_prediction(&self, cell: usize) -> Result<(Vec2, Vec2)> {
        if !self.contains(cell) {
            return Err(PlannerError::CellOutsidePatch(cell));
        }
        Ok(self.push_unchecked(cell))
    }

    pub(crate) fn push_unchecked(&self, cell: usize) -> (Vec2, Vec2) {
        let center = self.geometry.cell_center(cell);
        let along = (center - self.action.start).dot(self.direction);
        let t_fw = self.direction * (self.length - along).max(0.0);
        (t_fw, center + t_fw)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn close(a: Vec2, b: Vec2) -> bool {
        (a - b).norm() < 1e-12
    }

    #[test]
    fn rejects_degenerate_actions() {
        let p = Vec2::new(0.1, 0.1);
        assert!(SweepAction::new(p, p, 0.07).is_err());
        assert!(SweepAction::new(p, Vec2::new(0.2, 0.1), 0.0).is_err());
        assert!(SweepAction::new(p, Vec2::new(f64::NAN, 0.1), 0.07).is_err());
    }

    #[test]
    fn patch_membership_is_rectangular() {
        let g = GridGeometry::default();
        let start = g.center_of(10, 5);
        let end = g.center_of(10, 15);
        let patch = SweepPatch::new(SweepAction::new(start, end, 0.07).unwrap(), &g);
        // Rows 9..=11 (offsets 0, +-0.02 <= 0.035), columns 5..=15.
        let mut expected = Vec::new();
        for r in 9..=11 {
            for c in 5..=15 {
                expected.push(g.index(r, c));
            }
        }
        assert_eq!(patch.cells(), &expected[..]);
        assert!(close(patch.direction(), Vec2::new(1.0, 0.0)));
    }

    #[test]
    fn push_prediction_examples() {
        let g = GridGeometry::default();
        let start = g.center_of(10, 5);
        let end = g.center_of(10, 15);
        let action = SweepAction::new(start, end, 0.07).unwrap();
        let patch = SweepPatch::new(action, &g);

        let (t_fw, pred) = patch.push_prediction(g.index(10, 5)).unwrap();
        assert!(close(t_fw, end - start));
        assert!(close(pred, end));

        let (t_fw, pred) = patch.push_prediction(g.index(10, 15)).unwrap();
        assert!(close(t_fw, Vec2::ZERO));
        assert!(close(pred, end));

        // Mid-patch, one row up: 0.02 m lateral offset survives the push.
        let (_, pred) = patch.push_prediction(g.index(11, 9)).unwrap();
        assert!(close(pred, end + Vec2::new(0.0, 0.02)));

        assert!(matches!(
            patch.push_prediction(g.index(0, 0)),
            Err(PlannerError::CellOutsidePatch(_))
        ));
    }

    #[test]
    fn clipping_to_workspace() {
        let g = GridGeometry::default();
        let a = SweepAction::new(Vec2::new(0.25, 0.25), Vec2::new(0.75, 0.25), 0.07).unwrap();
        let c = a.clipped_to(&g).unwrap();
        assert!(close(c.end(), Vec2::new(0.5, 0.25)));
        assert!(c.within(&g));
        let outside = SweepAction::new(Vec2::new(0.6, 0.6), Vec2::new(0.9, 0.9), 0.07).unwrap();
        assert!(outside.clipped_to(&g).is_none());
        let inside = SweepAction::new(Vec2::new(0.1, 0.1), Vec2::new(0.2, 0.3), 0.07).unwrap();
        assert_eq!(inside.clipped_to(&g), Some(inside));
    }

    #[test]
    fn display_format() {
        let a = SweepAction::new(Vec2::new(0.01, 0.03), Vec2::new(0.11, 0.03), 0.07).unwrap();
        assert_eq!(a.to_string(), "0.01,0.03,0.11,0.03,0.07");
    }
}
