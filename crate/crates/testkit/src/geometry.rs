use sgqa_core::BevGrid;

/// Corners of a rectangle, counterclockwise.
pub fn corners(center: [f64; 2], half: [f64; 2], yaw: f64) -> [[f64; 2]; 4] {
    let (c, s) = (yaw.cos(), yaw.sin());
    let ex = [c * half[0], s * half[0]];
    let ey = [-s * half[1], c * half[1]];
    [
        [center[0] - ex[0] - ey[0], center[1] - ex[1] - ey[1]],
        [center[0] + ex[0] - ey[0], center[1] + ex[1] - ey[1]],
        [center[0] + ex[0] + ey[0], center[1] + ex[1] + ey[1]],
        [center[0] - ex[0] + ey[0], center[1] - ex[1] + ey[1]],
    ]
}

/// Convex polygon membership: the point is on the inner side of every
/// edge of a counterclockwise polygon.
pub fn polygon_contains(polygon: &[[f64; 2]], p: [f64; 2]) -> bool {
    (0..polygon.len()).all(|i| {
        let a = polygon[i];
        let b = polygon[(i + 1) % polygon.len()];
        (b[0] - a[0]) * (p[1] - a[1]) - (b[1] - a[1]) * (p[0] - a[0]) >= 0.0
    })
}

/// Pools over every grid cell whose center is inside the polygon, visiting
/// the whole grid. `None` when no center is inside.
pub fn dense_pool(grid: &BevGrid, polygon: &[[f64; 2]], max: bool) -> Option<Vec<f64>> {
    let mut cells = Vec::new();
    for row in 0..grid.height() {
        for col in 0..grid.width() {
            if polygon_contains(polygon, [col as f64 + 0.5, row as f64 + 0.5]) {
                cells.push(grid.cell(row, col));
            }
        }
    }
    pool(&cells, grid.channels(), max)
}

/// Plain window pooling over rows `r0..r1` and columns `c0..c1`.
pub fn window_pool(grid: &BevGrid, rows: std::ops::Range<usize>, cols: std::ops::Range<usize>, max: bool) -> Option<Vec<f64>> {
    let cells: Vec<&[f64]> = rows.flat_map(|r| cols.clone().map(move |c| (r, c))).map(|(r, c)| grid.cell(r, c)).collect();
    pool(&cells, grid.channels(), max)
}

fn pool(cells: &[&[f64]], channels: usize, max: bool) -> Option<Vec<f64>> {
    if cells.is_empty() {
        return None;
    }
    Some(
        (0..channels)
            .map(|ch| {
                let values = cells.iter().map(|cell| cell[ch]);
                if max {
                    values.fold(f64::NEG_INFINITY, f64::max)
                } else {
                    values.sum::<f64>() / cells.len() as f64
                }
            })
            .collect(),
    )
}
