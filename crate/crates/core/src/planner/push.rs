use super::{SweepAction, SweepPatch};
use crate::grid::HeightMap;

/// Height map predicted by the simple push model: all material inside the
/// patch lands in the cell that contains its predicted end point.
pub fn simple_push(map: &HeightMap, action: &SweepAction) -> HeightMap {
    let geometry = *map.geometry();
    let Some(action) = action.clipped_to(&geometry) else {
        return map.clone();
    };
    let patch = SweepPatch::new(action, &geometry);
    let mut heights = map.heights().to_vec();
    let moved: Vec<f64> = patch.cells().iter().map(|&i| heights[i]).collect();
    for &i in patch.cells() {
        heights[i] = 0.0;
    }
    for (&i, &h) in patch.cells().iter().zip(&moved) {
        let (_, end) = patch.push_unchecked(i);
        heights[geometry.cell_containing(end)] += h;
    }
    HeightMap::from_raw(geometry, heights)
}
