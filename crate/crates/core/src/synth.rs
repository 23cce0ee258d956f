//! Seeded synthetic scenes for tests, benches and demos.

use rand::seq::IndexedRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::hash::mix64;
use crate::scene::{normalize_yaw, Box3D, EgoState, Scene, SceneObject, Taxonomy};

/// (category, relative weight, length, width, height)
const CATEGORIES: [(&str, u32, f64, f64, f64); 10] = [
    ("car", 30, 4.6, 1.9, 1.7),
    ("pedestrian", 20, 0.7, 0.7, 1.8),
    ("truck", 8, 7.0, 2.5, 3.0),
    ("bus", 4, 11.0, 2.9, 3.5),
    ("trailer", 3, 10.0, 2.6, 3.8),
    ("construction_vehicle", 3, 6.5, 2.8, 3.2),
    ("motorcycle", 6, 2.1, 0.8, 1.5),
    ("bicycle", 6, 1.7, 0.6, 1.3),
    ("traffic_cone", 10, 0.4, 0.4, 1.0),
    ("barrier", 10, 2.5, 0.5, 1.0),
];

const HALF_EXTENT: f64 = 50.0;
const MIN_SEPARATION: f64 = 1.0;

/// One scene with 5 to 25 objects inside [-50, 50] m around the ego.
pub fn synthetic_scene(scene_id: impl Into<String>, seed: u64) -> Scene {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let count = rng.random_range(5..=25);
    let mut objects: Vec<SceneObject> = Vec::with_capacity(count);
    let weighted: Vec<usize> = CATEGORIES.iter().enumerate().flat_map(|(i, c)| std::iter::repeat_n(i, c.1 as usize)).collect();
    while objects.len() < count {
        let x = rng.random_range(-HALF_EXTENT..HALF_EXTENT);
        let y = rng.random_range(-HALF_EXTENT..HALF_EXTENT);
        let clear = x.hypot(y) >= MIN_SEPARATION
            && objects.iter().all(|o| (o.bbox.x - x).hypot(o.bbox.y - y) >= MIN_SEPARATION);
        if !clear {
            continue;
        }
        let (category, _, l, w, h) = CATEGORIES[*weighted.choose(&mut rng).expect("non-empty")];
        let scale = rng.random_range(0.9..1.1);
        let status = Taxonomy::default_valid_statuses(category).choose(&mut rng).map(|s| s.to_string());
        objects.push(SceneObject {
            id: format!("obj-{:02}", objects.len()),
            category: category.to_string(),
            status,
            bbox: Box3D {
                x,
                y,
                z: rng.random_range(-1.0..1.0),
                x_size: l * scale,
                y_size: w * scale,
                z_size: h * scale,
                yaw: normalize_yaw(rng.random_range(-std::f64::consts::PI..std::f64::consts::PI)),
            },
        });
    }
    let heading = rng.random_range(-std::f64::consts::PI..std::f64::consts::PI);
    let speed = if rng.random_bool(0.5) { rng.random_range(2.0..15.0) } else { 0.0 };
    let ego = EgoState::new([speed * heading.cos(), speed * heading.sin(), 0.0], heading);
    Scene { scene_id: scene_id.into(), objects, ego }
}

/// `count` scenes named `synth-<seed>-<index>`.
pub fn synthetic_scenes(count: usize, seed: u64) -> Vec<Scene> {
    (0..count)
        .map(|i| synthetic_scene(format!("synth-{seed}-{i:04}"), mix64(seed ^ mix64(i as u64))))
        .collect()
}
