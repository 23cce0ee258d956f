use sgqa_core::{EgoState, Relation};

/// Ego forward direction: planar velocity when moving, heading otherwise.
pub fn forward_oracle(ego: &EgoState) -> [f64; 2] {
    let [vx, vy, _] = ego.velocity;
    let speed = (vx * vx + vy * vy).sqrt();
    if speed > 0.2 {
        [vx / speed, vy / speed]
    } else {
        [ego.heading_yaw.cos(), ego.heading_yaw.sin()]
    }
}

/// Relation of `target` seen from `reference`, by rotating the offset into
/// the forward-aligned frame and testing it against the six 60-degree
/// sectors with cross products instead of angles.
///
/// Sector `(a, b]` holds a direction at angle t iff sin(t - a) > 0 and
/// sin(t - b) <= 0.
pub fn sector_oracle(reference: [f64; 2], target: [f64; 2], forward: [f64; 2]) -> Relation {
    let norm = (forward[0] * forward[0] + forward[1] * forward[1]).sqrt();
    let f = [forward[0] / norm, forward[1] / norm];
    let d = [target[0] - reference[0], target[1] - reference[1]];
    // Forward-frame coordinates: x along f, y along f rotated +90 degrees.
    let x = d[0] * f[0] + d[1] * f[1];
    let y = -d[0] * f[1] + d[1] * f[0];
    let half = 0.5;
    let root = 3f64.sqrt() / 2.0;
    // Unit rays at -150, -90, -30, 30, 90, 150 degrees.
    let rays: [(f64, f64); 6] = [(-root, -half), (0.0, -1.0), (root, -half), (root, half), (0.0, 1.0), (-root, half)];
    // sin(t - alpha) * |d| = cross(ray_alpha, d)
    let side = |i: usize| rays[i].0 * y - rays[i].1 * x;
    let sectors = [
        (2, 3, Relation::Front),
        (3, 4, Relation::FrontLeft),
        (4, 5, Relation::BackLeft),
        (5, 0, Relation::Back),
        (0, 1, Relation::BackRight),
        (1, 2, Relation::FrontRight),
    ];
    for (a, b, relation) in sectors {
        if side(a) > 0.0 && side(b) <= 0.0 {
            return relation;
        }
    }
    unreachable!("the six sectors cover every nonzero direction")
}
